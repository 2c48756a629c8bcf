#include "support/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "aircross/platoon.hpp"

namespace aircross::testing {

namespace {

double simpson(const std::function<double(double)>& f, double lo, double hi, double flo,
               double fmid, double fhi) {
    return (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
}

double adaptive_step(const std::function<double(double)>& f, double lo, double hi, double flo,
                     double fmid, double fhi, double whole, double tol, int depth) {
    const double mid = 0.5 * (lo + hi);
    const double fl = f(0.5 * (lo + mid));
    const double fr = f(0.5 * (mid + hi));
    const double left = simpson(f, lo, mid, flo, fl, fmid);
    const double right = simpson(f, mid, hi, fmid, fr, fhi);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    return adaptive_step(f, lo, mid, flo, fl, fmid, left, 0.5 * tol, depth - 1) +
           adaptive_step(f, mid, hi, fmid, fr, fhi, right, 0.5 * tol, depth - 1);
}

}  // namespace

double integrate_adaptive(const std::function<double(double)>& f, double lo, double hi,
                          double tol) {
    if (lo == hi) return 0.0;
    const double flo = f(lo);
    const double fhi = f(hi);
    const double fmid = f(0.5 * (lo + hi));
    const double whole = simpson(f, lo, hi, flo, fmid, fhi);
    return adaptive_step(f, lo, hi, flo, fmid, fhi, whole, tol, 48);
}

double derivative_central(const std::function<double(double)>& f, double t, double h) {
    return (f(t + h) - f(t - h)) / (2.0 * h);
}

bool solve_dense(std::vector<double> a, std::vector<double> b, int n, std::vector<double>& x) {
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int row = col + 1; row < n; ++row)
            if (std::abs(a[row * n + col]) > std::abs(a[pivot * n + col])) pivot = row;
        if (std::abs(a[pivot * n + col]) < 1e-12) return false;
        if (pivot != col) {
            for (int k = col; k < n; ++k) std::swap(a[col * n + k], a[pivot * n + k]);
            std::swap(b[col], b[pivot]);
        }
        for (int row = col + 1; row < n; ++row) {
            const double factor = a[row * n + col] / a[col * n + col];
            for (int k = col; k < n; ++k) a[row * n + k] -= factor * a[col * n + k];
            b[row] -= factor * b[col];
        }
    }
    x.assign(n, 0.0);
    for (int row = n - 1; row >= 0; --row) {
        double acc = b[row];
        for (int k = row + 1; k < n; ++k) acc -= a[row * n + k] * x[k];
        x[row] = acc / a[row * n + row];
    }
    return true;
}

namespace {

bool has_straight_edge(const IntersectionGraph& g, GridNode a, GridNode b) {
    for (const StraightEdge& e : g.straight_edges)
        if ((e.a == a && e.b == b) || (e.a == b && e.b == a)) return true;
    return false;
}

// Depth-first walk: heading north until at most one quadrant-1 diagonal flips
// the heading west.  `segments` counts unit straight spans including the
// entry-face span; the final exit span is added at the terminals.
void walk_from(const IntersectionGraph& g, GridNode at, bool turned, int segments,
               WalkCensus& census) {
    if (!turned) {
        if (at.iy == g.n_c) ++census.straight;  // exits north: one more span
        if (has_straight_edge(g, at, {at.ix, at.iy + 1}))
            walk_from(g, {at.ix, at.iy + 1}, false, segments + 1, census);
        for (const DiagonalEdge& d : g.diagonals)
            if (d.quadrant == 1 && d.from == at) walk_from(g, d.to, true, segments, census);
    } else {
        if (at.ix == 1) {
            ++census.curved;  // exits west: one more span
            census.curved_straight_segments.push_back(segments + 1);
        }
        if (has_straight_edge(g, at, {at.ix - 1, at.iy}))
            walk_from(g, {at.ix - 1, at.iy}, true, segments + 1, census);
    }
}

}  // namespace

WalkCensus walk_canonical_routes(const IntersectionGraph& graph) {
    WalkCensus census;
    for (int column = graph.half() + 1; column <= graph.n_c; ++column)
        walk_from(graph, {column, 1}, false, 1, census);
    std::sort(census.curved_straight_segments.begin(), census.curved_straight_segments.end());
    return census;
}

std::vector<double> boundary_cubic_by_linear_solve(SegmentKind kind,
                                                   std::span<const double> free_tail,
                                                   double edge_length, double delta_t) {
    const double span =
        kind == SegmentKind::Straight ? edge_length : std::numbers::pi / 2.0;
    const double cruise = span / delta_t;
    // Position and rate contributed by the tail at t = delta_t (the tail
    // vanishes with its derivative at t = 0).
    double tail_pos = 0.0, tail_rate = 0.0;
    double power = delta_t * delta_t * delta_t * delta_t;
    for (std::size_t i = 0; i < free_tail.size(); ++i) {
        const double k = 4.0 + static_cast<double>(i);
        tail_pos += free_tail[i] * power;
        tail_rate += free_tail[i] * k * power / delta_t;
        power *= delta_t;
    }
    // Unknowns a0..a3; rows: p(0) = 0, p'(0) = cruise, p(T) = span,
    // p'(T) = cruise.
    const double t = delta_t;
    const std::vector<double> a = {
        1.0, 0.0, 0.0,     0.0,
        0.0, 1.0, 0.0,     0.0,
        1.0, t,   t * t,   t * t * t,
        0.0, 1.0, 2.0 * t, 3.0 * t * t,
    };
    const std::vector<double> b = {0.0, cruise, span - tail_pos, cruise - tail_rate};
    std::vector<double> x;
    if (!solve_dense(a, b, 4, x)) throw std::runtime_error("boundary system is singular");
    return x;
}

double best_vertex_objective(const IntersectionConfig& config, const PathSet& paths,
                             const Demand& demand, double alpha) {
    const int k = paths.curved_count();
    const int half = paths.half();
    const int shared = half - 1;
    const double cap = lane_share_cap(config, demand.f_int_ent);
    const double d_l = demand.d_l();

    // Inequality rows r(x) >= 0 over the turn shares: k nonnegativity rows,
    // then `shared` entry-lane caps and `shared` exit-row caps.
    struct Row {
        std::vector<double> coeff;
        double constant;
    };
    std::vector<Row> rows;
    for (int i = 0; i < k; ++i) {
        Row row{std::vector<double>(k, 0.0), 0.0};
        row.coeff[i] = 1.0;
        rows.push_back(std::move(row));
    }
    for (int lane = 1; lane <= shared; ++lane) {
        Row row{std::vector<double>(k, 0.0), cap};
        for (int dp = 1; dp <= shared; ++dp)
            row.coeff[paths.curved_index(lane, dp) - half] = -1.0;
        rows.push_back(std::move(row));
    }
    for (int dp = 1; dp <= shared; ++dp) {
        Row row{std::vector<double>(k, 0.0), cap};
        for (int lane = 1; lane <= shared; ++lane)
            row.coeff[paths.curved_index(lane, dp) - half] = -1.0;
        rows.push_back(std::move(row));
    }

    const TrajectoryPolynomial straight =
        eliminate_boundary_straight({}, config.l_e(), config.delta_t);
    const TrajectoryPolynomial curved =
        eliminate_boundary_curved({}, config.l_e(), config.delta_t);

    const auto evaluate = [&](const std::vector<double>& x) {
        std::vector<double> usage(static_cast<std::size_t>(shared), 0.0);
        for (int lane = 1; lane <= shared; ++lane)
            for (int dp = 1; dp <= shared; ++dp)
                usage[lane - 1] += x[paths.curved_index(lane, dp) - half];
        const std::vector<double> straight_shares =
            straight_fill(demand.d_s, usage, cap, half);
        std::vector<double> shares(straight_shares);
        shares.insert(shares.end(), x.begin(), x.end());
        return evaluate_objective(config, paths, shares, demand, alpha, straight, curved)
            .objective;
    };

    // Every vertex satisfies the class-sum equality plus k - 1 active
    // inequality rows: walk all subsets of that size.
    double best = -std::numeric_limits<double>::infinity();
    const int row_count = static_cast<int>(rows.size());
    std::vector<int> pick(static_cast<std::size_t>(k - 1), 0);
    const std::function<void(int, int)> enumerate = [&](int next, int depth) {
        if (depth == k - 1) {
            std::vector<double> a(static_cast<std::size_t>(k * k), 0.0);
            std::vector<double> b(static_cast<std::size_t>(k), 0.0);
            for (int j = 0; j < k; ++j) a[j] = 1.0;  // sum x = d_l
            b[0] = d_l;
            for (int r = 0; r < k - 1; ++r) {
                const Row& row = rows[static_cast<std::size_t>(pick[r])];
                for (int j = 0; j < k; ++j) a[(r + 1) * k + j] = row.coeff[j];
                b[r + 1] = -row.constant;
            }
            std::vector<double> x;
            if (!solve_dense(std::move(a), std::move(b), k, x)) return;
            for (const Row& row : rows) {
                double value = row.constant;
                for (int j = 0; j < k; ++j) value += row.coeff[j] * x[j];
                if (value < -1e-9) return;
            }
            best = std::max(best, evaluate(x));
            return;
        }
        for (int r = next; r < row_count; ++r) {
            pick[static_cast<std::size_t>(depth)] = r;
            enumerate(r + 1, depth + 1);
        }
    };
    if (k == 1) {
        best = evaluate({d_l});
    } else {
        enumerate(0, 0);
    }
    if (!std::isfinite(best)) throw std::runtime_error("share polytope has no vertex");
    return best;
}

IntersectionConfig reference_config() {
    IntersectionConfig config;
    config.l_c = 70.0;
    config.n_c = 6;
    config.delta_t = 1.0;
    config.l_g = 1.0;
    config.l_v = 0.5;
    config.d_f_min = 1.5;
    config.rho_ent = 0.3;
    config.v_max = 20.0;
    config.x2_max = 5.0;
    config.x3_max = 50.0;
    config.th2_max = 8.0;
    config.th3_max = 60.0;
    config.drag_coeff = 0.02;
    config.mass = 1.0;
    config.K_s = 4;
    config.K_c = 4;
    config.l_e_min = 5.0;
    return config;
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

std::vector<double> random_tail(std::mt19937_64& rng, int count, double scale) {
    std::vector<double> tail(static_cast<std::size_t>(count), 0.0);
    for (int i = 0; i < count; ++i)
        tail[static_cast<std::size_t>(i)] = uniform(rng, -scale, scale) / (i + 1.0);
    return tail;
}

namespace {

TrajectoryPolynomial sample_feasible(std::mt19937_64& rng, const IntersectionConfig& config,
                                     SegmentKind kind) {
    const int count = (kind == SegmentKind::Straight ? config.K_s : config.K_c) - 3;
    // The draw box shrinks on every rejection, so the loop terminates: the
    // zero tail (the baseline) is always feasible.
    double scale = kind == SegmentKind::Straight ? 1.5 / config.delta_t : 0.35 / config.delta_t;
    for (int attempt = 0;; ++attempt) {
        const std::vector<double> tail = random_tail(rng, count, scale);
        const TrajectoryPolynomial traj =
            kind == SegmentKind::Straight
                ? eliminate_boundary_straight(tail, config.l_e(), config.delta_t)
                : eliminate_boundary_curved(tail, config.l_e(), config.delta_t);
        if (check_kinematics(traj, config.limits()).feasible(0.0)) return traj;
        scale *= 0.7;
        if (attempt > 200) {
            return kind == SegmentKind::Straight
                       ? eliminate_boundary_straight({}, config.l_e(), config.delta_t)
                       : eliminate_boundary_curved({}, config.l_e(), config.delta_t);
        }
    }
}

}  // namespace

TrajectoryPolynomial random_feasible_straight(std::mt19937_64& rng,
                                              const IntersectionConfig& config) {
    return sample_feasible(rng, config, SegmentKind::Straight);
}

TrajectoryPolynomial random_feasible_curved(std::mt19937_64& rng,
                                            const IntersectionConfig& config) {
    return sample_feasible(rng, config, SegmentKind::Curved);
}

IntersectionConfig random_config(std::mt19937_64& rng) {
    IntersectionConfig config;
    config.n_c = 2 * std::uniform_int_distribution<int>(2, 5)(rng);
    const double l_e = uniform(rng, 6.0, 15.0);
    config.l_c = (config.n_c + 1) * l_e;
    config.delta_t = uniform(rng, 0.6, 1.6);
    config.l_v = uniform(rng, 0.3, 0.7);
    config.d_f_min = uniform(rng, 0.8, 2.0);
    config.l_g = uniform(rng, 0.05, 0.25) * l_e;
    const double cruise = l_e / config.delta_t;
    config.v_max = 2.2 * cruise;
    config.x2_max = 6.0 * cruise / config.delta_t;
    config.x3_max = 80.0 * cruise / (config.delta_t * config.delta_t);
    config.th2_max = 9.0 / (config.delta_t * config.delta_t);
    config.th3_max = 80.0 / (config.delta_t * config.delta_t * config.delta_t);
    config.rho_ent = uniform(rng, 0.15, 0.45);
    config.K_s = std::uniform_int_distribution<int>(3, 5)(rng);
    config.K_c = std::uniform_int_distribution<int>(3, 5)(rng);
    config.l_e_min = 5.0;
    return config;
}

OperatingPoint random_operating_point(std::mt19937_64& rng, const IntersectionConfig& config) {
    OperatingPoint point;
    point.demand.f_int_ent = uniform(rng, 0.3, 0.9) * direction_capacity(config);
    // Keep the straight fraction high enough that the turn paths' lane caps
    // can absorb the remainder, with 10% headroom.
    const double cap_share = max_vehicles_per_platoon(PlatoonSpec::from(config)) /
                             (4.0 * config.delta_t * point.demand.f_int_ent);
    const double turn_room = (config.n_c / 2 - 1) * std::min(1.0, cap_share);
    const double floor = std::max(0.2, 1.0 - 0.9 * turn_room);
    point.demand.d_s = uniform(rng, floor, 0.9);
    point.alpha = uniform(rng, 0.9, 0.999);
    return point;
}

}  // namespace aircross::testing
