#include "aircross/metrics.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace aircross {

namespace {

constexpr double kShareTol = 1e-7;

void check_shares(const PathSet& paths, std::span<const double> shares, const Demand& demand) {
    if (static_cast<int>(shares.size()) != paths.total())
        throw std::invalid_argument("share vector size does not match the path set");
    double straight_sum = 0.0, turn_sum = 0.0;
    for (int i = 0; i < paths.total(); ++i) {
        if (shares[i] < -kShareTol) throw std::invalid_argument("negative path share");
        (paths.paths[i].curved() ? turn_sum : straight_sum) += shares[i];
    }
    std::ostringstream os;
    if (std::abs(straight_sum - demand.d_s) > kShareTol) {
        os << "straight shares sum to " << straight_sum << ", demand d_s = " << demand.d_s;
        throw std::invalid_argument(os.str());
    }
    if (std::abs(turn_sum - demand.d_l()) > kShareTol) {
        os << "turn shares sum to " << turn_sum << ", demand 1 - d_s = " << demand.d_l();
        throw std::invalid_argument(os.str());
    }
}

}  // namespace

void Demand::validate() const {
    if (!(d_s >= 0.0 && d_s <= 1.0))
        throw std::invalid_argument("straight fraction d_s must lie in [0, 1]");
    if (!(f_int_ent > 0.0)) throw std::invalid_argument("entry flow must be positive");
}

double mean_square_velocity(const TrajectoryPolynomial& traj) {
    const Polynomial v = traj.displacement().derivative();
    return (v * v).integrate(0.0, traj.delta_t) / traj.segment_length();
}

double segment_energy(const TrajectoryPolynomial& traj, double drag_coeff, double mass) {
    const Polynomial v = traj.displacement().derivative();
    const Polynomial a = v.derivative();
    const double drag_part = (v * v * v).integrate(0.0, traj.delta_t);
    const double inertial_part = integrate_abs(v * a, 0.0, traj.delta_t);
    return drag_coeff * drag_part + mass * inertial_part;
}

namespace detail {

double flow_kernel(const PathSet& paths, std::span<const double> turn_shares, double d_s,
                   double rho, double capacity_factor, double v_bar_straight,
                   double v_bar_curved) {
    constexpr double half_pi = std::numbers::pi / 2.0;
    double bracket = d_s * v_bar_straight;
    for (int c = 0; c < paths.curved_count(); ++c) {
        const Path& p = paths.paths[paths.straight_count() + c];
        const double n_s = p.straight_segments();
        bracket += turn_shares[c] * (n_s * v_bar_straight + v_bar_curved) / (n_s + half_pi);
    }
    return rho * capacity_factor * bracket;
}

double power_kernel(const PathSet& paths, std::span<const double> turn_shares, double d_s,
                    double f_int_ent, int n_c, double energy_straight, double energy_curved) {
    double per_vehicle = d_s * (n_c + 1) * energy_straight;
    for (int c = 0; c < paths.curved_count(); ++c) {
        const Path& p = paths.paths[paths.straight_count() + c];
        per_vehicle +=
            turn_shares[c] * (p.straight_segments() * energy_straight + energy_curved);
    }
    return f_int_ent * per_vehicle;
}

}  // namespace detail

double intersection_flow(const PathSet& paths, std::span<const double> shares,
                         const Demand& demand, const IntersectionConfig& config,
                         double v_bar_straight, double v_bar_curved) {
    demand.validate();
    check_shares(paths, shares, demand);
    const double rho = demand.f_int_ent / config.base_speed();
    return detail::flow_kernel(paths, shares.subspan(paths.straight_count()), demand.d_s, rho,
                               config.capacity_factor(), v_bar_straight, v_bar_curved);
}

double intersection_power(const PathSet& paths, std::span<const double> shares,
                          const Demand& demand, const IntersectionConfig& config,
                          double energy_straight, double energy_curved) {
    demand.validate();
    check_shares(paths, shares, demand);
    return detail::power_kernel(paths, shares.subspan(paths.straight_count()), demand.d_s,
                                demand.f_int_ent, config.n_c, energy_straight, energy_curved);
}

double objective(double alpha, double flow, double power) {
    return alpha * flow - (1.0 - alpha) * power;
}

ObjectiveBreakdown evaluate_objective(const IntersectionConfig& config, const PathSet& paths,
                                      std::span<const double> shares, const Demand& demand,
                                      double alpha, const TrajectoryPolynomial& straight,
                                      const TrajectoryPolynomial& curved) {
    const double v_s = mean_square_velocity(straight);
    const double v_c = mean_square_velocity(curved);
    const double e_s = segment_energy(straight, config.drag_coeff, config.mass);
    const double e_c = segment_energy(curved, config.drag_coeff, config.mass);
    ObjectiveBreakdown out;
    out.alpha = alpha;
    out.flow = intersection_flow(paths, shares, demand, config, v_s, v_c);
    out.power = intersection_power(paths, shares, demand, config, e_s, e_c);
    out.objective = objective(alpha, out.flow, out.power);
    return out;
}

}  // namespace aircross
