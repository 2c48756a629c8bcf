#include "aircross/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "aircross/platoon.hpp"

namespace aircross {

namespace {

// Variable layout of the solver vector: explicit turn shares first (one per
// turning path except the last, which is eliminated against the turn budget),
// then the scaled free coefficients of the straight profile, then those of
// the turn profile.  Coefficient i of t^(4+i) is stored as
// a * delta_t^(4+i) / l_e (straight) or b * delta_t^(4+i) (turn) so every
// variable is dimensionless and O(1).
struct Layout {
    int k_curved = 0;
    int n_share = 0;
    int straight_tail = 0;
    int curved_tail = 0;
    int half = 0;
    double d_l = 0.0;

    int total() const { return n_share + straight_tail + curved_tail; }
    int straight_offset() const { return n_share; }
    int curved_offset() const { return n_share + straight_tail; }
};

Layout make_layout(const IntersectionConfig& config, const PathSet& paths, const Demand& demand,
                   const OptimizeOptions& options) {
    Layout layout;
    layout.k_curved = paths.curved_count();
    layout.half = config.n_c / 2;
    layout.d_l = demand.d_l();
    const bool turns_active = layout.d_l > 0.0 && layout.k_curved > 0;
    layout.n_share = (turns_active && layout.k_curved >= 2) ? layout.k_curved - 1 : 0;
    layout.straight_tail = options.freeze_trajectories ? 0 : config.K_s - 3;
    layout.curved_tail =
        (options.freeze_trajectories || !turns_active) ? 0 : config.K_c - 3;
    return layout;
}

std::vector<double> decode_turn_shares(std::span<const double> x, const Layout& layout) {
    std::vector<double> shares(static_cast<std::size_t>(layout.k_curved), 0.0);
    if (layout.k_curved == 0 || layout.d_l <= 0.0) return shares;
    if (layout.n_share == 0) {
        shares.back() = layout.d_l;
        return shares;
    }
    double sum = 0.0;
    for (int i = 0; i < layout.n_share; ++i) {
        shares[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(i)];
        sum += x[static_cast<std::size_t>(i)];
    }
    shares.back() = layout.d_l - sum;
    return shares;
}

std::vector<double> decode_straight_tail(std::span<const double> x, const Layout& layout,
                                         const IntersectionConfig& config) {
    std::vector<double> tail(static_cast<std::size_t>(std::max(0, config.K_s - 3)), 0.0);
    for (int i = 0; i < layout.straight_tail; ++i) {
        const double unit = config.l_e() / std::pow(config.delta_t, 4 + i);
        tail[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(layout.straight_offset() + i)] * unit;
    }
    return tail;
}

std::vector<double> decode_curved_tail(std::span<const double> x, const Layout& layout,
                                       const IntersectionConfig& config) {
    std::vector<double> tail(static_cast<std::size_t>(std::max(0, config.K_c - 3)), 0.0);
    for (int i = 0; i < layout.curved_tail; ++i) {
        const double unit = 1.0 / std::pow(config.delta_t, 4 + i);
        tail[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(layout.curved_offset() + i)] * unit;
    }
    return tail;
}

// Per-entry-lane and per-exit-row turn usage (both indexed from 0 for lane /
// divergence point 1).
std::vector<double> entry_usage(const PathSet& paths, std::span<const double> turn_shares) {
    std::vector<double> usage(static_cast<std::size_t>(std::max(0, paths.half() - 1)), 0.0);
    for (int i = 0; i < paths.curved_count(); ++i) {
        const Path& path = paths.paths[static_cast<std::size_t>(paths.straight_count() + i)];
        usage[static_cast<std::size_t>(path.entry_lane - 1)] += turn_shares[static_cast<std::size_t>(i)];
    }
    return usage;
}

std::vector<double> exit_usage(const PathSet& paths, std::span<const double> turn_shares) {
    std::vector<double> usage(static_cast<std::size_t>(std::max(0, paths.half() - 1)), 0.0);
    for (int i = 0; i < paths.curved_count(); ++i) {
        const Path& path = paths.paths[static_cast<std::size_t>(paths.straight_count() + i)];
        usage[static_cast<std::size_t>(path.divergence_point - 1)] += turn_shares[static_cast<std::size_t>(i)];
    }
    return usage;
}

struct Problem {
    const IntersectionConfig* config = nullptr;
    const PathSet* paths = nullptr;
    Demand demand;
    double alpha = 0.0;
    Layout layout;
    double cap = 0.0;  // per-lane share cap at this entry flow
    ConstraintSet constraints;
};

ConstraintSet build_constraint_set(const Layout& layout) {
    ConstraintSet set;
    int at = 0;
    auto add = [&](std::string name, int count) {
        if (count > 0) set.groups.push_back({std::move(name), at, count});
        at += std::max(0, count);
    };
    const bool turns_active = layout.d_l > 0.0 && layout.k_curved > 0;
    add("turn_share_nonneg", layout.n_share > 0 ? layout.k_curved : 0);
    add("entry_lane_caps", turns_active ? layout.half - 1 : 0);
    add("exit_lane_caps", turns_active ? layout.half - 1 : 0);
    add("kinematic_straight", layout.straight_tail > 0 ? 4 : 0);
    add("kinematic_curved", layout.curved_tail > 0 ? 4 : 0);
    // Block containment only moves with the straight tail: the baseline is
    // exact uniform cruise, and curved segments run between blocks where the
    // node-disc clearance governs instead.
    add("envelope", layout.straight_tail > 0 ? 1 : 0);
    const int headway = (layout.straight_tail > 0 || layout.curved_tail > 0)
                            ? (turns_active ? 2 : 1)
                            : 0;
    add("headway", headway);
    return set;
}

struct EvalPoint {
    std::vector<double> turn_shares;
    TrajectoryPolynomial straight;
    TrajectoryPolynomial curved;
    double flow = 0.0;
    double power = 0.0;
    double objective_value = 0.0;
    std::vector<double> con;
    double max_violation = 0.0;
};

double margin_of(const FeasibilityReport& report, std::string_view name) {
    const ConstraintMargin* entry = report.find(name);
    if (entry == nullptr) throw std::logic_error("missing kinematic margin: " + std::string(name));
    return entry->margin;
}

EvalPoint evaluate_point(const Problem& problem, std::span<const double> x) {
    const IntersectionConfig& config = *problem.config;
    const PathSet& paths = *problem.paths;
    const Layout& layout = problem.layout;

    EvalPoint point;
    point.turn_shares = decode_turn_shares(x, layout);
    point.straight =
        eliminate_boundary_straight(decode_straight_tail(x, layout, config), config.l_e(), config.delta_t);
    point.curved =
        eliminate_boundary_curved(decode_curved_tail(x, layout, config), config.l_e(), config.delta_t);

    const double v_bar_s = mean_square_velocity(point.straight);
    const double v_bar_c = mean_square_velocity(point.curved);
    const double energy_s = segment_energy(point.straight, config.drag_coeff, config.mass);
    const double energy_c = segment_energy(point.curved, config.drag_coeff, config.mass);

    const double rho = problem.demand.f_int_ent / config.base_speed();
    point.flow = detail::flow_kernel(paths, point.turn_shares, problem.demand.d_s, rho,
                                     config.capacity_factor(), v_bar_s, v_bar_c);
    point.power = detail::power_kernel(paths, point.turn_shares, problem.demand.d_s,
                                       problem.demand.f_int_ent, config.n_c, energy_s, energy_c);
    point.objective_value = objective(problem.alpha, point.flow, point.power);

    point.con.assign(static_cast<std::size_t>(problem.constraints.total()), 0.0);
    auto fill = [&](std::string_view name, std::span<const double> values) {
        const ConstraintGroup* group = problem.constraints.find(name);
        if (group == nullptr) return;
        if (static_cast<int>(values.size()) != group->count)
            throw std::logic_error("constraint group size mismatch: " + std::string(name));
        std::copy(values.begin(), values.end(),
                  point.con.begin() + group->first);
    };

    fill("turn_share_nonneg", point.turn_shares);

    std::vector<double> caps;
    if (problem.constraints.find("entry_lane_caps") != nullptr) {
        caps = entry_usage(paths, point.turn_shares);
        for (double& u : caps) u = problem.cap - u;
        fill("entry_lane_caps", caps);
    }
    if (problem.constraints.find("exit_lane_caps") != nullptr) {
        caps = exit_usage(paths, point.turn_shares);
        for (double& u : caps) u = problem.cap - u;
        fill("exit_lane_caps", caps);
    }

    const KinematicLimits limits = config.limits();
    const double v_norm = std::max(1.0, config.v_max);
    if (problem.constraints.find("kinematic_straight") != nullptr) {
        const FeasibilityReport report = check_kinematics(point.straight, limits);
        const double kin[4] = {margin_of(report, "speed_floor") / v_norm,
                               margin_of(report, "speed_cap") / v_norm,
                               margin_of(report, "accel_cap") / std::max(1.0, config.x2_max),
                               margin_of(report, "jerk_cap") / std::max(1.0, config.x3_max)};
        fill("kinematic_straight", kin);
    }
    if (problem.constraints.find("kinematic_curved") != nullptr) {
        const FeasibilityReport report = check_kinematics(point.curved, limits);
        const double kin[4] = {margin_of(report, "speed_floor") / v_norm,
                               margin_of(report, "speed_cap") / v_norm,
                               margin_of(report, "turn_accel_cap") / std::max(1.0, config.th2_max),
                               margin_of(report, "turn_jerk_cap") / std::max(1.0, config.th3_max)};
        fill("kinematic_curved", kin);
    }
    if (problem.constraints.find("envelope") != nullptr) {
        const PlatoonSpec spec = PlatoonSpec::from(config);
        const double env[1] = {(core_slack(spec) - uniform_excursion(point.straight)) /
                               std::max(1.0, config.l_g)};
        fill("envelope", env);
    }
    if (const ConstraintGroup* group = problem.constraints.find("headway"); group != nullptr) {
        const PlatoonSpec spec = PlatoonSpec::from(config);
        const bool turns_active = layout.d_l > 0.0 && layout.k_curved > 0;
        const FeasibilityReport report =
            check_following_distance(point.straight, turns_active ? &point.curved : nullptr, spec);
        const double pitch_norm = std::max(1.0, spec.pitch());
        std::vector<double> values;
        values.push_back(margin_of(report, "headway_straight_straight") / pitch_norm);
        if (group->count == 2) {
            values.push_back(std::min(margin_of(report, "headway_straight_turn"),
                                      margin_of(report, "headway_turn_straight")) /
                             pitch_norm);
        }
        fill("headway", values);
    }

    point.max_violation = 0.0;
    for (double c : point.con) point.max_violation = std::max(point.max_violation, -c);
    return point;
}

// Preference order for the iterate log and the returned point.  Points whose
// worst violation is below kFeasTol form the feasible class and are ranked by
// objective alone; any feasible point beats any infeasible one; two
// infeasible points are ranked by violation, with the objective breaking
// near-ties.  Ranking the feasible class purely by objective matters because
// the optimum usually sits on active constraints, where iterates carry
// harmless violations at rounding scale.
constexpr double kFeasTol = 1e-9;

bool lexicographically_better(double cv, double obj, double best_cv, double best_obj) {
    const bool feas = cv <= kFeasTol;
    const bool best_feas = best_cv <= kFeasTol;
    if (feas != best_feas) return feas;
    if (feas) return obj > best_obj;
    constexpr double kTieBand = 1e-12;
    if (cv < best_cv - kTieBand) return true;
    if (cv > best_cv + kTieBand) return false;
    return obj > best_obj;
}

Problem make_problem(const IntersectionConfig& config, const Demand& demand, double alpha,
                     const PathSet& paths, const OptimizeOptions& options) {
    config.validate();
    demand.validate();
    if (paths.n_c != config.n_c)
        throw ConfigError("path set was built for a different lane count");
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw ConfigError("alpha must lie in [0, 1]");
    if (!(options.rho_begin >= options.rho_end && options.rho_end > 0.0))
        throw ConfigError("trust-region radii must satisfy rho_begin >= rho_end > 0");

    Problem problem;
    problem.config = &config;
    problem.paths = &paths;
    problem.demand = demand;
    problem.alpha = alpha;
    problem.layout = make_layout(config, paths, demand, options);
    problem.cap = lane_share_cap(config, demand.f_int_ent);
    problem.constraints = build_constraint_set(problem.layout);

    const double capacity = direction_capacity(config);
    if (demand.f_int_ent > capacity * (1.0 + 1e-9)) {
        std::ostringstream msg;
        msg << "entry flow " << demand.f_int_ent << " veh/s exceeds the direction capacity "
            << capacity << " veh/s";
        throw ConfigError(msg.str());
    }
    if (demand.d_l() > 0.0 && problem.layout.k_curved == 0)
        throw ConfigError("turn demand is positive but the grid has no turning paths (n_c < 4)");
    if (problem.layout.k_curved > 0) {
        const double turn_capacity = (problem.layout.half - 1) * problem.cap;
        if (demand.d_l() > turn_capacity * (1.0 + 1e-9)) {
            std::ostringstream msg;
            msg << "turn share " << demand.d_l() << " exceeds the combined cap "
                << turn_capacity << " of the turn-capable lanes";
            throw ConfigError(msg.str());
        }
    }
    return problem;
}

std::vector<double> initial_vector(const Problem& problem, const DecisionVector* init) {
    const Layout& layout = problem.layout;
    const IntersectionConfig& config = *problem.config;
    std::vector<double> x(static_cast<std::size_t>(layout.total()), 0.0);
    if (init == nullptr) {
        const double uniform = layout.k_curved > 0 ? layout.d_l / layout.k_curved : 0.0;
        for (int i = 0; i < layout.n_share; ++i) x[static_cast<std::size_t>(i)] = uniform;
        return x;
    }
    const PathSet& paths = *problem.paths;
    if (static_cast<int>(init->shares.size()) != paths.total())
        throw ConfigError("initial decision has the wrong number of shares");
    for (int i = 0; i < layout.n_share; ++i)
        x[static_cast<std::size_t>(i)] = init->shares[static_cast<std::size_t>(paths.straight_count() + i)];
    for (int i = 0; i < layout.straight_tail; ++i) {
        if (static_cast<std::size_t>(i) >= init->free_straight.size()) break;
        const double unit = config.l_e() / std::pow(config.delta_t, 4 + i);
        x[static_cast<std::size_t>(layout.straight_offset() + i)] = init->free_straight[static_cast<std::size_t>(i)] / unit;
    }
    for (int i = 0; i < layout.curved_tail; ++i) {
        if (static_cast<std::size_t>(i) >= init->free_curved.size()) break;
        const double unit = 1.0 / std::pow(config.delta_t, 4 + i);
        x[static_cast<std::size_t>(layout.curved_offset() + i)] = init->free_curved[static_cast<std::size_t>(i)] / unit;
    }
    return x;
}

// Clamp stray negatives from the eliminated share and restore the exact turn
// budget; the adjustment is bounded by the solver's final trust radius.
void project_turn_shares(std::vector<double>& shares, double d_l) {
    if (shares.empty()) return;
    double sum = 0.0;
    for (double& s : shares) {
        s = std::max(0.0, s);
        sum += s;
    }
    if (d_l <= 0.0) {
        std::fill(shares.begin(), shares.end(), 0.0);
        return;
    }
    if (sum <= 0.0) {
        std::fill(shares.begin(), shares.end(), d_l / static_cast<double>(shares.size()));
        return;
    }
    const double scale = d_l / sum;
    for (double& s : shares) s *= scale;
}

Solution assemble_solution(const Problem& problem, std::span<const double> x, int evaluations,
                           bool converged, std::vector<IterateRecord> history) {
    const IntersectionConfig& config = *problem.config;
    const PathSet& paths = *problem.paths;
    const Layout& layout = problem.layout;

    std::vector<double> turn_shares = decode_turn_shares(x, layout);
    project_turn_shares(turn_shares, layout.d_l);

    std::vector<double> lane_usage = entry_usage(paths, turn_shares);
    const std::vector<double> straight_shares =
        straight_fill(problem.demand.d_s, lane_usage, problem.cap, layout.half);

    Solution solution;
    solution.decision.shares.reserve(static_cast<std::size_t>(paths.total()));
    solution.decision.shares.insert(solution.decision.shares.end(), straight_shares.begin(),
                                    straight_shares.end());
    solution.decision.shares.insert(solution.decision.shares.end(), turn_shares.begin(),
                                    turn_shares.end());
    solution.decision.free_straight = decode_straight_tail(x, layout, config);
    solution.decision.free_curved = decode_curved_tail(x, layout, config);

    solution.straight =
        eliminate_boundary_straight(solution.decision.free_straight, config.l_e(), config.delta_t);
    solution.curved =
        eliminate_boundary_curved(solution.decision.free_curved, config.l_e(), config.delta_t);
    solution.breakdown = evaluate_objective(config, paths, solution.decision.shares, problem.demand,
                                            problem.alpha, solution.straight, solution.curved);

    solution.feasibility = assess_feasibility(config, problem.demand, paths, solution.decision);
    solution.iterations = evaluations;
    solution.converged = converged;
    solution.history = std::move(history);
    return solution;
}

}  // namespace

int ConstraintSet::total() const {
    int sum = 0;
    for (const ConstraintGroup& group : groups) sum += group.count;
    return sum;
}

const ConstraintGroup* ConstraintSet::find(std::string_view name) const {
    for (const ConstraintGroup& group : groups)
        if (group.name == name) return &group;
    return nullptr;
}

ConstraintSet describe_constraints(const IntersectionConfig& config, const PathSet& paths,
                                   const Demand& demand, const OptimizeOptions& options) {
    return build_constraint_set(make_layout(config, paths, demand, options));
}

std::vector<double> straight_fill(double d_s, std::span<const double> turn_lane_usage,
                                  double lane_cap, int half) {
    if (half < 1) throw std::invalid_argument("straight_fill needs at least one lane");
    if (static_cast<int>(turn_lane_usage.size()) != half - 1)
        throw std::invalid_argument("straight_fill expects one turn usage per shared lane");
    if (d_s < 0.0 || lane_cap <= 0.0)
        throw std::invalid_argument("straight_fill needs d_s >= 0 and a positive cap");

    std::vector<double> shares(static_cast<std::size_t>(half), 0.0);
    shares[static_cast<std::size_t>(half - 1)] = std::min(d_s, lane_cap);
    double remainder = d_s - shares[static_cast<std::size_t>(half - 1)];
    if (remainder <= 0.0) return shares;

    std::vector<double> residual(static_cast<std::size_t>(half - 1));
    std::vector<int> order(static_cast<std::size_t>(half - 1));
    for (int i = 0; i < half - 1; ++i) {
        residual[static_cast<std::size_t>(i)] = std::max(0.0, lane_cap - turn_lane_usage[static_cast<std::size_t>(i)]);
        order[static_cast<std::size_t>(i)] = i;
    }
    // Even split over the shared lanes, saturating tight lanes first; the
    // running level is invariant while no lane saturates, so one ascending
    // pass suffices.
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return residual[static_cast<std::size_t>(a)] < residual[static_cast<std::size_t>(b)]; });
    int remaining = half - 1;
    int last_open = -1;
    for (int idx : order) {
        const double level = remainder / remaining;
        const double take = std::min(level, residual[static_cast<std::size_t>(idx)]);
        shares[static_cast<std::size_t>(idx)] = take;
        remainder -= take;
        --remaining;
        if (residual[static_cast<std::size_t>(idx)] - take > 1e-15) last_open = idx;
    }
    if (remainder > 1e-9)
        throw std::runtime_error("straight demand does not fit the shared lanes' residual caps");
    if (last_open >= 0) {
        // Fold accumulated rounding into the loosest lane and clamp.
        double& s = shares[static_cast<std::size_t>(last_open)];
        s = std::clamp(s + remainder, 0.0, residual[static_cast<std::size_t>(last_open)]);
    }
    return shares;
}

FeasibilityReport assess_feasibility(const IntersectionConfig& config, const Demand& demand,
                                     const PathSet& paths, const DecisionVector& decision) {
    config.validate();
    demand.validate();
    if (static_cast<int>(decision.shares.size()) != paths.total())
        throw ConfigError("decision has the wrong number of path shares");

    const int half = config.n_c / 2;
    const double cap = lane_share_cap(config, demand.f_int_ent);

    FeasibilityReport report;
    double min_share = std::numeric_limits<double>::infinity();
    double straight_sum = 0.0;
    double turn_sum = 0.0;
    for (int i = 0; i < paths.total(); ++i) {
        const double share = decision.shares[static_cast<std::size_t>(i)];
        min_share = std::min(min_share, share);
        (i < paths.straight_count() ? straight_sum : turn_sum) += share;
    }
    report.entries.push_back({"share_nonneg", min_share, 0.0});
    report.entries.push_back({"straight_share_sum", -std::abs(straight_sum - demand.d_s), 0.0});
    report.entries.push_back({"turn_share_sum", -std::abs(turn_sum - demand.d_l()), 0.0});

    const TrajectoryPolynomial straight =
        eliminate_boundary_straight(decision.free_straight, config.l_e(), config.delta_t);
    const TrajectoryPolynomial curved =
        eliminate_boundary_curved(decision.free_curved, config.l_e(), config.delta_t);
    for (const ConstraintMargin& entry : check_kinematics(straight, config.limits()).entries)
        report.entries.push_back({"straight_" + entry.name, entry.margin, entry.worst_t});
    for (const ConstraintMargin& entry : check_kinematics(curved, config.limits()).entries)
        report.entries.push_back({"turn_" + entry.name, entry.margin, entry.worst_t});

    const PlatoonSpec spec = PlatoonSpec::from(config);
    {
        double worst_t = 0.0;
        const double excursion = uniform_excursion(straight, &worst_t);
        report.entries.push_back({"block_containment", core_slack(spec) - excursion, worst_t});
    }
    const bool turns_active = turn_sum > 0.0 && paths.curved_count() > 0;
    report.append(check_following_distance(straight, turns_active ? &curved : nullptr, spec));

    std::span<const double> turn_shares{decision.shares.data() + paths.straight_count(),
                                        static_cast<std::size_t>(paths.curved_count())};
    const std::vector<double> lane_usage = entry_usage(paths, turn_shares);
    for (int lane = 1; lane <= half; ++lane) {
        double used = decision.shares[static_cast<std::size_t>(paths.straight_index(lane))];
        if (lane < half) used += lane_usage[static_cast<std::size_t>(lane - 1)];
        report.entries.push_back({"lane_cap_" + std::to_string(lane), cap - used, 0.0});
    }
    const std::vector<double> exits = exit_usage(paths, turn_shares);
    for (int dp = 1; dp <= static_cast<int>(exits.size()); ++dp) {
        report.entries.push_back(
            {"exit_cap_row_" + std::to_string(half + dp + 1), cap - exits[static_cast<std::size_t>(dp - 1)], 0.0});
    }
    return report;
}

Solution optimize(const IntersectionConfig& config, const Demand& demand, double alpha,
                  const PathSet& paths, const OptimizeOptions& options,
                  const DecisionVector* init) {
    Problem problem = make_problem(config, demand, alpha, paths, options);
    const std::vector<double> x0 = initial_vector(problem, init);

    if (problem.layout.total() == 0) {
        // Nothing to search: shares are pinned and both profiles are frozen.
        EvalPoint point = evaluate_point(problem, x0);
        std::vector<IterateRecord> history{
            {1, point.flow, point.power, point.objective_value, point.max_violation}};
        return assemble_solution(problem, x0, 1, true, std::move(history));
    }

    std::vector<IterateRecord> history;
    std::vector<double> best_x = x0;
    double best_cv = std::numeric_limits<double>::infinity();
    double best_obj = -std::numeric_limits<double>::infinity();
    int evaluation = 0;

    const auto consider = [&](std::span<const double> x, const EvalPoint& point) {
        if (lexicographically_better(point.max_violation, point.objective_value, best_cv, best_obj)) {
            best_cv = point.max_violation;
            best_obj = point.objective_value;
            best_x.assign(x.begin(), x.end());
            history.push_back(
                {evaluation, point.flow, point.power, point.objective_value, point.max_violation});
        }
    };

    // The solve alternates between the coordinate blocks rather than running
    // one joint search.  The share block is (piecewise-)linear and solves
    // cleanly on its own, while the power term is kinked in the profile-tail
    // coordinates wherever a segment's acceleration changes sign pattern (for
    // the uniform baseline the kink sits exactly at zero tail); a joint
    // search from scratch lets those kinks starve the share coordinates of
    // trust-region steps.  Because a tail change can reorder the share
    // optimum (the segment mean speeds enter every path's flow term), the
    // blocks run as coordinate descent — shares, tails, shares, ... — until a
    // round stops paying, followed by one joint polish from the best point.
    // The returned point is the best evaluation seen anywhere.
    enum class Block { Shares, Tails, All };
    const int n_total = problem.layout.total();
    const int n_share = problem.layout.n_share;

    const auto block_vars = [&](Block block) {
        int first = 0;
        int count = n_total;
        if (block == Block::Shares) count = n_share;
        if (block == Block::Tails) {
            first = n_share;
            count = n_total - n_share;
        }
        std::vector<int> vars(static_cast<std::size_t>(count));
        std::iota(vars.begin(), vars.end(), first);
        return vars;
    };

    // Constraints that are constant over the active block are withheld from
    // the solver: one pinned at zero margin (like the baseline headway) would
    // otherwise feed the linear constraint models pure noise.  The share
    // block moves the share bookkeeping groups; every other group follows the
    // profile tails.
    const auto block_constraints = [&](Block block) {
        std::vector<int> con_index;
        for (const ConstraintGroup& group : problem.constraints.groups) {
            if (block != Block::All) {
                const bool share_group = group.name == "turn_share_nonneg" ||
                                         group.name == "entry_lane_caps" ||
                                         group.name == "exit_lane_caps";
                if ((block == Block::Shares) != share_group) continue;
            }
            for (int k = 0; k < group.count; ++k) con_index.push_back(group.first + k);
        }
        return con_index;
    };

    // One trust-region run over a block, started from the best point so far.
    // The rho ladder is fitted to the run's budget — each halving costs on
    // the order of n+2 evaluations — so an underfunded run converges at the
    // resolution it can afford instead of timing out mid-ladder.  The run
    // counts as a convergence certificate only if it walked the ladder all
    // the way down to the configured rho_end and stopped there on its own.
    const auto run_block = [&](Block block, int budget, double rho_begin) {
        const std::vector<int> active = block_vars(block);
        const std::vector<int> con_index = block_constraints(block);
        budget = std::min(budget, options.max_evals - evaluation);
        if (budget < static_cast<int>(active.size()) + 2) return false;
        const int levels = std::max(1, budget / (static_cast<int>(active.size()) + 2) - 1);
        const double rho_end = std::min(
            rho_begin, std::max(options.rho_end, rho_begin * std::pow(0.5, levels)));

        const std::vector<double> base = best_x;
        std::vector<double> sub0(active.size());
        for (std::size_t i = 0; i < active.size(); ++i)
            sub0[i] = base[static_cast<std::size_t>(active[i])];

        std::vector<double> full = base;
        CobylaCallback callback = [&](std::span<const double> x, double& f,
                                      std::span<double> con) {
            for (std::size_t i = 0; i < active.size(); ++i)
                full[static_cast<std::size_t>(active[i])] = x[i];
            EvalPoint point = evaluate_point(problem, full);
            f = -point.objective_value;
            for (std::size_t k = 0; k < con_index.size(); ++k)
                con[k] = point.con[static_cast<std::size_t>(con_index[k])];
            ++evaluation;
            consider(full, point);
        };
        const CobylaResult result =
            cobyla_minimize(static_cast<int>(active.size()), static_cast<int>(con_index.size()),
                            sub0, rho_begin, rho_end, budget, callback);
        return result.converged() && rho_end <= options.rho_end;
    };

    bool converged = false;
    if (n_share > 0 && n_total > n_share) {
        const int share_slice = std::max(20, options.max_evals / 5);
        const int tail_slice = std::max(20, (3 * options.max_evals) / 20);
        const int polish_reserve = std::max(40, (3 * options.max_evals) / 10);
        // Snapshot of the full point right after each block last ran; a block
        // is re-run only if its complement has moved since, so a settled
        // alternation costs nothing extra.
        std::vector<double> after_shares;
        std::vector<double> after_tails;
        const auto moved_since = [&](const std::vector<double>& snapshot, int lo, int hi) {
            if (snapshot.empty()) return true;
            for (int i = lo; i < hi; ++i)
                if (best_x[static_cast<std::size_t>(i)] != snapshot[static_cast<std::size_t>(i)])
                    return true;
            return false;
        };
        for (int round = 0; round < 4; ++round) {
            const double round_start = best_obj;
            if (options.max_evals - evaluation - share_slice < polish_reserve) break;
            if (moved_since(after_shares, n_share, n_total)) {
                run_block(Block::Shares, share_slice, options.rho_begin);
                after_shares = best_x;
            }
            if (options.max_evals - evaluation - tail_slice < polish_reserve) break;
            if (moved_since(after_tails, 0, n_share)) {
                run_block(Block::Tails, tail_slice, options.rho_begin);
                after_tails = best_x;
            }
            const bool improved =
                !std::isfinite(round_start) ||
                best_obj > round_start + 1e-9 * (1.0 + std::abs(round_start));
            if (!improved) break;
        }
        // The joint polish from the combined best point is the convergence
        // certificate: it sees every variable and every constraint, so its
        // trust region collapsing to rho_end certifies a local optimum.  It
        // starts small — a large first step would only re-break the share
        // allocation.
        converged = run_block(Block::All, options.max_evals - evaluation,
                              std::max(options.rho_end, options.rho_begin / 5.0));
    } else {
        converged = run_block(Block::All, options.max_evals, options.rho_begin);
    }

    // A certificate at an infeasible point is no certificate: converged
    // promises the returned point satisfies every normalized constraint.
    converged = converged && best_cv <= 1e-6;

    return assemble_solution(problem, best_x, evaluation, converged, std::move(history));
}

void verify_solution(const IntersectionConfig& config, const Demand& demand, double alpha,
                     const PathSet& paths, const Solution& solution, double tol) {
    config.validate();
    demand.validate();
    auto fail = [](const std::string& what) {
        throw std::runtime_error("solution verification failed: " + what);
    };

    if (static_cast<int>(solution.decision.shares.size()) != paths.total())
        fail("share vector size does not match the path set");
    if (static_cast<int>(solution.decision.free_straight.size()) != std::max(0, config.K_s - 3))
        fail("straight free-coefficient count does not match K_s");
    if (static_cast<int>(solution.decision.free_curved.size()) != std::max(0, config.K_c - 3))
        fail("turn free-coefficient count does not match K_c");

    const int half = config.n_c / 2;
    const double cap = lane_share_cap(config, demand.f_int_ent);
    double straight_sum = 0.0;
    double turn_sum = 0.0;
    for (int i = 0; i < paths.total(); ++i) {
        const double share = solution.decision.shares[static_cast<std::size_t>(i)];
        if (share < -tol) fail("a path share is negative");
        if (i < paths.straight_count())
            straight_sum += share;
        else
            turn_sum += share;
    }
    if (std::abs(straight_sum - demand.d_s) > tol) fail("straight shares do not sum to d_s");
    if (std::abs(turn_sum - demand.d_l()) > tol) fail("turn shares do not sum to 1 - d_s");

    std::span<const double> turn_shares{solution.decision.shares.data() + paths.straight_count(),
                                        static_cast<std::size_t>(paths.curved_count())};
    const std::vector<double> entries = entry_usage(paths, turn_shares);
    for (int lane = 1; lane <= half; ++lane) {
        double used = solution.decision.shares[static_cast<std::size_t>(paths.straight_index(lane))];
        if (lane < half) used += entries[static_cast<std::size_t>(lane - 1)];
        if (used > cap + tol) fail("lane " + std::to_string(lane) + " exceeds its share cap");
    }
    for (const double used : exit_usage(paths, turn_shares))
        if (used > cap + tol) fail("an exit row exceeds its share cap");

    const TrajectoryPolynomial straight =
        eliminate_boundary_straight(solution.decision.free_straight, config.l_e(), config.delta_t);
    const TrajectoryPolynomial curved =
        eliminate_boundary_curved(solution.decision.free_curved, config.l_e(), config.delta_t);
    if (straight.boundary_residual() > 1e-9 || curved.boundary_residual() > 1e-9)
        fail("a profile violates its boundary conditions");
    if (std::abs(straight.position(straight.delta_t) -
                 solution.straight.position(solution.straight.delta_t)) > tol)
        fail("stored straight profile disagrees with its free coefficients");

    const KinematicLimits limits = config.limits();
    const double kin_norm = std::max({1.0, config.v_max, config.x2_max, config.x3_max,
                                      config.th2_max, config.th3_max});
    if (check_kinematics(straight, limits).min_margin() < -tol * kin_norm)
        fail("the straight profile violates a kinematic cap");
    if (check_kinematics(curved, limits).min_margin() < -tol * kin_norm)
        fail("the turn profile violates a kinematic cap");

    const PlatoonSpec spec = PlatoonSpec::from(config);
    if (core_slack(spec) - uniform_excursion(straight) < -tol * std::max(1.0, config.l_g))
        fail("the straight profile swings outside its block clearance slack");

    const bool turns_active = demand.d_l() > 0.0 && paths.curved_count() > 0;
    const FeasibilityReport following =
        check_following_distance(straight, turns_active ? &curved : nullptr, spec);
    if (following.min_margin() < -tol * std::max(1.0, spec.pitch()))
        fail("a following-distance margin is negative");

    const ObjectiveBreakdown breakdown = evaluate_objective(
        config, paths, solution.decision.shares, demand, alpha, straight, curved);
    auto close = [&](double a, double b) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); };
    if (!close(solution.breakdown.flow, breakdown.flow)) fail("reported flow does not recompute");
    if (!close(solution.breakdown.power, breakdown.power)) fail("reported power does not recompute");
    if (!close(solution.breakdown.objective, breakdown.objective))
        fail("reported objective does not recompute");
    if (!close(solution.breakdown.objective,
               objective(alpha, solution.breakdown.flow, solution.breakdown.power)))
        fail("objective is inconsistent with its flow and power terms");
}

std::vector<ParetoPoint> pareto_sweep(const IntersectionConfig& config, const Demand& demand,
                                      const PathSet& paths, std::span<const double> alphas,
                                      const OptimizeOptions& options) {
    constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
    std::vector<ParetoPoint> points;
    points.reserve(alphas.size());
    for (const double alpha : alphas) {
        // A failed grid point is recorded as an unconverged row so the sweep
        // always returns one row per requested point.
        try {
            const Solution solution = optimize(config, demand, alpha, paths, options);
            points.push_back({alpha, solution.breakdown.flow, solution.breakdown.power,
                              solution.breakdown.objective, solution.converged});
        } catch (const std::exception&) {
            points.push_back({alpha, kNan, kNan, kNan, false});
        }
    }
    return points;
}

std::vector<GuardSweepRow> sweep_guard_band(const IntersectionConfig& config, double d_s,
                                            double alpha, std::span<const double> fractions,
                                            std::optional<double> entry_flow,
                                            const OptimizeOptions& options) {
    if (fractions.empty()) return {};
    constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

    std::vector<std::optional<IntersectionConfig>> configs;
    configs.reserve(fractions.size());
    double min_capacity = std::numeric_limits<double>::infinity();
    for (const double fraction : fractions) {
        IntersectionConfig c = config;
        c.l_g = fraction * c.l_e();
        try {
            c.validate();
        } catch (const std::exception&) {
            configs.push_back(std::nullopt);  // recorded below as a failed row
            continue;
        }
        configs.push_back(c);
        min_capacity = std::min(min_capacity, direction_capacity(c));
    }
    const double flow =
        entry_flow.value_or(std::isfinite(min_capacity) ? 0.9 * min_capacity : 0.0);

    const PathSet paths = enumerate_paths(build_intersection(config));
    std::vector<GuardSweepRow> rows;
    rows.reserve(fractions.size());
    for (std::size_t i = 0; i < configs.size(); ++i) {
        if (!configs[i]) {
            rows.push_back({fractions[i], fractions[i] * config.l_e(), 0, kNan, flow, kNan, kNan,
                            kNan, false});
            continue;
        }
        const IntersectionConfig& c = *configs[i];
        const Demand demand{d_s, flow};
        try {
            const Solution solution = optimize(c, demand, alpha, paths, options);
            rows.push_back({fractions[i], c.l_g, max_vehicles_per_platoon(PlatoonSpec::from(c)),
                            direction_capacity(c), flow, solution.breakdown.flow,
                            solution.breakdown.power, solution.breakdown.objective,
                            solution.converged});
        } catch (const std::exception&) {
            rows.push_back({fractions[i], c.l_g, max_vehicles_per_platoon(PlatoonSpec::from(c)),
                            direction_capacity(c), flow, kNan, kNan, kNan, false});
        }
    }
    return rows;
}

double traffic_level_flow(const IntersectionConfig& config, TrafficLevel level) {
    const double capacity = direction_capacity(config);
    return (level == TrafficLevel::Heavy ? 0.95 : 0.5) * capacity;
}

std::vector<DemandSweepRow> sweep_demand(const IntersectionConfig& config, double alpha,
                                         TrafficLevel level, std::span<const double> d_s_values,
                                         const OptimizeOptions& options) {
    const double flow = traffic_level_flow(config, level);
    const double cap = lane_share_cap(config, flow);
    const PathSet paths = enumerate_paths(build_intersection(config));
    const int half = config.n_c / 2;

    constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
    std::vector<DemandSweepRow> rows;
    rows.reserve(d_s_values.size());
    for (const double d_s : d_s_values) {
        const Demand demand{d_s, flow};
        try {
            const Solution solution = optimize(config, demand, alpha, paths, options);
            const double innermost =
                solution.decision.shares[static_cast<std::size_t>(paths.straight_index(half))];
            rows.push_back({d_s, solution.breakdown.flow, solution.breakdown.power,
                            solution.breakdown.objective, innermost, cap, std::max(0.0, d_s - cap),
                            solution.converged});
        } catch (const std::exception&) {
            rows.push_back({d_s, kNan, kNan, kNan, kNan, cap, std::max(0.0, d_s - cap), false});
        }
    }
    return rows;
}

}  // namespace aircross
