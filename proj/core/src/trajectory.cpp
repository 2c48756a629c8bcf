#include "aircross/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace aircross {

namespace {

// Solves the 2x2 system fixing c2, c3 so that the profile meets
// p(dt) - p(0) = rise and p'(dt) = p'(0) = slope, with p(0) = 0, c1 = slope,
// and the given tail (coefficients of t^4 and up).
std::vector<double> assemble(double rise, double slope, std::span<const double> tail,
                             double dt) {
    double s0 = 0.0, s1 = 0.0;  // tail contributions to p(dt), p'(dt)
    {
        double dt_pow = dt * dt * dt * dt;
        for (std::size_t k = 0; k < tail.size(); ++k) {
            const double i = static_cast<double>(k + 4);
            s0 += tail[k] * dt_pow;
            s1 += tail[k] * i * dt_pow / dt;
            dt_pow *= dt;
        }
    }
    const double p = rise - slope * dt - s0;  // what c2, c3 must add to p(dt)
    const double q = -s1;                     // what they must add to p'(dt)
    const double c3 = (q * dt - 2.0 * p) / (dt * dt * dt);
    const double c2 = (3.0 * p - q * dt) / (dt * dt);
    std::vector<double> coeffs{0.0, slope, c2, c3};
    coeffs.insert(coeffs.end(), tail.begin(), tail.end());
    return coeffs;
}

}  // namespace

Polynomial TrajectoryPolynomial::displacement() const {
    return kind == SegmentKind::Straight ? position : position * edge_length;
}

double TrajectoryPolynomial::segment_length() const {
    return kind == SegmentKind::Straight ? edge_length
                                         : std::numbers::pi / 2.0 * edge_length;
}

double TrajectoryPolynomial::eval(int order, double t) const {
    if (t < 0.0 || t > delta_t)
        throw std::domain_error("trajectory evaluated outside [0, delta_t]");
    return position.derivative(order)(t);
}

double TrajectoryPolynomial::speed(double t) const {
    const double d1 = eval(1, t);
    return kind == SegmentKind::Straight ? d1 : edge_length * d1;
}

double TrajectoryPolynomial::boundary_residual() const {
    const Polynomial v = position.derivative();
    const double cruise = 1.0 / delta_t * (kind == SegmentKind::Straight ? edge_length : 1.0);
    const double rise =
        kind == SegmentKind::Straight ? edge_length : std::numbers::pi / 2.0;
    double r = std::abs(position(0.0));
    r = std::max(r, std::abs(v(0.0) - cruise));
    r = std::max(r, std::abs(position(delta_t) - rise));
    r = std::max(r, std::abs(v(delta_t) - cruise));
    return r;
}

TrajectoryPolynomial eliminate_boundary_straight(std::span<const double> free_tail,
                                                 double edge_length, double delta_t) {
    TrajectoryPolynomial traj;
    traj.kind = SegmentKind::Straight;
    traj.delta_t = delta_t;
    traj.edge_length = edge_length;
    traj.free_tail.assign(free_tail.begin(), free_tail.end());
    traj.position =
        Polynomial(assemble(edge_length, edge_length / delta_t, free_tail, delta_t));
    return traj;
}

TrajectoryPolynomial eliminate_boundary_curved(std::span<const double> free_tail,
                                               double edge_length, double delta_t) {
    TrajectoryPolynomial traj;
    traj.kind = SegmentKind::Curved;
    traj.delta_t = delta_t;
    traj.edge_length = edge_length;
    traj.free_tail.assign(free_tail.begin(), free_tail.end());
    traj.position =
        Polynomial(assemble(std::numbers::pi / 2.0, 1.0 / delta_t, free_tail, delta_t));
    return traj;
}

double FeasibilityReport::min_margin() const {
    double m = std::numeric_limits<double>::infinity();
    for (const ConstraintMargin& e : entries) m = std::min(m, e.margin);
    return m;
}

const ConstraintMargin* FeasibilityReport::find(std::string_view name) const {
    for (const ConstraintMargin& e : entries)
        if (e.name == name) return &e;
    return nullptr;
}

void FeasibilityReport::append(const FeasibilityReport& other) {
    entries.insert(entries.end(), other.entries.begin(), other.entries.end());
}

FeasibilityReport check_kinematics(const TrajectoryPolynomial& traj,
                                   const KinematicLimits& limits) {
    const bool straight = traj.kind == SegmentKind::Straight;
    const double speed_scale = straight ? 1.0 : traj.edge_length;
    const Polynomial d1 = traj.position.derivative();
    const Polynomial d2 = d1.derivative();
    const Polynomial d3 = d2.derivative();
    const double dt = traj.delta_t;

    FeasibilityReport report;
    auto add_two_sided = [&](const std::string& name, const Polynomial& p, double cap) {
        double t_hi = 0.0, t_lo = 0.0;
        const double hi = p.max_on(0.0, dt, &t_hi);
        const double lo = p.min_on(0.0, dt, &t_lo);
        const double margin_hi = cap - hi;
        const double margin_lo = cap + lo;
        if (margin_hi <= margin_lo)
            report.entries.push_back({name, margin_hi, t_hi});
        else
            report.entries.push_back({name, margin_lo, t_lo});
    };

    double t_floor = 0.0, t_cap = 0.0;
    const double v_lo = d1.min_on(0.0, dt, &t_floor) * speed_scale;
    const double v_hi = d1.max_on(0.0, dt, &t_cap) * speed_scale;
    report.entries.push_back({"speed_floor", v_lo, t_floor});
    report.entries.push_back({"speed_cap", limits.v_max - v_hi, t_cap});
    if (straight) {
        add_two_sided("accel_cap", d2, limits.accel_max);
        add_two_sided("jerk_cap", d3, limits.jerk_max);
    } else {
        add_two_sided("turn_accel_cap", d2, limits.turn_accel_max);
        add_two_sided("turn_jerk_cap", d3, limits.turn_jerk_max);
    }
    return report;
}

double uniform_excursion(const TrajectoryPolynomial& traj, double* worst_t) {
    const double span =
        traj.kind == SegmentKind::Straight ? traj.edge_length : std::numbers::pi / 2.0;
    const Polynomial deviation = traj.position - Polynomial{{0.0, span / traj.delta_t}};
    double t_hi = 0.0, t_lo = 0.0;
    const double hi = std::abs(deviation.max_on(0.0, traj.delta_t, &t_hi));
    const double lo = std::abs(deviation.min_on(0.0, traj.delta_t, &t_lo));
    if (worst_t != nullptr) *worst_t = hi >= lo ? t_hi : t_lo;
    return std::max(hi, lo);
}

double min_headway_distance(const TrajectoryPolynomial& cur, const TrajectoryPolynomial& next,
                            double tau) {
    const double dt = cur.delta_t;
    if (!(tau > 0.0) || tau > dt)
        throw std::invalid_argument("headway lag must be in (0, delta_t]");
    const Polynomial s_cur = cur.displacement();
    const Polynomial s_next = next.displacement();

    double best = std::numeric_limits<double>::infinity();
    // Leader still on the same segment: gap(u) = s(u + tau) - s(u).
    if (dt - tau > 0.0) {
        const Polynomial gap = s_cur.shifted(tau) - s_cur;
        best = std::min(best, gap.min_on(0.0, dt - tau));
    }
    // Leader already on the next segment: it is (segment length) plus its
    // progress there ahead of the follower's progress here.
    {
        const Polynomial gap = s_next.shifted(tau - dt) - s_cur;
        best = std::min(best, cur.segment_length() + gap.min_on(dt - tau, dt));
    }
    return best;
}

FeasibilityReport check_following_distance(const TrajectoryPolynomial& straight,
                                           const TrajectoryPolynomial* curved,
                                           const PlatoonSpec& spec) {
    const double tau = spec.pitch() / spec.base_speed();
    const double required = spec.pitch();  // vehicle length + min following
    FeasibilityReport report;
    report.entries.push_back({"headway_straight_straight",
                              min_headway_distance(straight, straight, tau) - required, 0.0});
    if (curved) {
        report.entries.push_back({"headway_straight_turn",
                                  min_headway_distance(straight, *curved, tau) - required, 0.0});
        report.entries.push_back({"headway_turn_straight",
                                  min_headway_distance(*curved, straight, tau) - required, 0.0});
    }
    return report;
}

}  // namespace aircross
