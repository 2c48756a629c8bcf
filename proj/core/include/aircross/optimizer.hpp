#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aircross/cobyla.hpp"
#include "aircross/geometry.hpp"
#include "aircross/metrics.hpp"
#include "aircross/trajectory.hpp"

namespace aircross {

// Full description of one operating point: per-path demand shares (PathSet
// order: straights, then turns) and the free trajectory coefficients (t^4
// and up, absolute units) of the two motion profiles.
struct DecisionVector {
    std::vector<double> shares;
    std::vector<double> free_straight;
    std::vector<double> free_curved;
};

// One accepted point of the solve, in evaluation order.  Acceptance is
// lexicographic — strictly smaller worst violation, or equal violation and
// strictly larger objective — so max_violation is nonincreasing along the
// log and the objective climbs once iterates are feasible.
struct IterateRecord {
    int evaluation;
    double flow;
    double power;
    double objective;
    double max_violation;
};

struct ConstraintGroup {
    std::string name;
    int first;
    int count;
};

struct ConstraintSet {
    std::vector<ConstraintGroup> groups;

    int total() const;
    const ConstraintGroup* find(std::string_view name) const;
};

struct OptimizeOptions {
    double rho_begin = 0.1;
    double rho_end = 1e-7;
    int max_evals = 500;
    // Keep both motion profiles at their baseline cubics and search over the
    // demand shares only.
    bool freeze_trajectories = false;
};

struct Solution {
    DecisionVector decision;
    ObjectiveBreakdown breakdown;
    TrajectoryPolynomial straight;
    TrajectoryPolynomial curved;
    FeasibilityReport feasibility;
    int iterations = 0;
    bool converged = false;
    std::vector<IterateRecord> history;
};

// Names and sizes of the constraint blocks the solver will see for this
// problem (turn-share nonnegativity, entry-lane caps, exit-lane caps, the
// kinematic margins of each free profile, block containment of the straight
// profile, headway margins).
ConstraintSet describe_constraints(const IntersectionConfig& config, const PathSet& paths,
                                   const Demand& demand, const OptimizeOptions& options = {});

// Deterministic straight-traffic split: the innermost (turn-free) lane takes
// demand up to the per-lane cap, the rest spreads evenly over the shared
// lanes within their residual caps (cap minus the lane's turn usage).
// Returns one share per lane, index lane-1.  The split never affects the
// optimization objective; it fixes the representative loading the simulator
// realizes.
std::vector<double> straight_fill(double d_s, std::span<const double> turn_lane_usage,
                                  double lane_cap, int half);

// Margins of every feasibility requirement for an arbitrary decision at this
// operating point: share bookkeeping (nonnegativity, and the class sums as
// negative absolute residuals), per-lane and exit-row caps, kinematic margins
// of both profiles, block containment, and following distance.  Negative
// margins mark violations.  Throws ConfigError on malformed sizes.
FeasibilityReport assess_feasibility(const IntersectionConfig& config, const Demand& demand,
                                     const PathSet& paths, const DecisionVector& decision);

// Maximizes alpha * flow - (1 - alpha) * power over the turn shares and the
// free trajectory coefficients, subject to share, cap, kinematic, block
// containment, and headway constraints.  Throws ConfigError when the demand
// is structurally infeasible (over capacity, or turn demand without turn
// paths).
Solution optimize(const IntersectionConfig& config, const Demand& demand, double alpha,
                  const PathSet& paths, const OptimizeOptions& options = {},
                  const DecisionVector* init = nullptr);

// Independent re-check of a finished solution: share bookkeeping, every cap,
// boundary conditions, kinematic, block-containment, and headway margins,
// and the reported flow/power/objective, all recomputed from the decision
// alone.  Throws std::runtime_error naming the first failed check.
void verify_solution(const IntersectionConfig& config, const Demand& demand, double alpha,
                     const PathSet& paths, const Solution& solution, double tol = 1e-6);

struct ParetoPoint {
    double alpha;
    double flow;
    double power;
    double objective;
    bool converged;
};

std::vector<ParetoPoint> pareto_sweep(const IntersectionConfig& config, const Demand& demand,
                                      const PathSet& paths, std::span<const double> alphas,
                                      const OptimizeOptions& options = {});

// One clearance-band setting of the guard sweep: l_g = fraction * l_e.
struct GuardSweepRow {
    double fraction;
    double l_g;
    int seats;
    double capacity;
    double entry_flow;
    double flow;
    double power;
    double objective;
    bool converged;
};

// Re-optimizes across clearance-band fractions at a fixed entry flow
// (default: 90% of the smallest direction capacity over the grid, so every
// point stays feasible and cap pressure grows with the band).
std::vector<GuardSweepRow> sweep_guard_band(const IntersectionConfig& config, double d_s,
                                            double alpha, std::span<const double> fractions,
                                            std::optional<double> entry_flow = {},
                                            const OptimizeOptions& options = {});

enum class TrafficLevel { Medium, Heavy };

struct DemandSweepRow {
    double d_s;
    double flow;
    double power;
    double objective;
    double innermost_share;
    double lane_cap;
    double spill;  // straight demand beyond the innermost lane's cap
    bool converged;
};

// Re-optimizes across straight fractions at an entry flow pinned to the
// traffic level: 50% of direction capacity (Medium) or 95% (Heavy).
std::vector<DemandSweepRow> sweep_demand(const IntersectionConfig& config, double alpha,
                                         TrafficLevel level, std::span<const double> d_s_values,
                                         const OptimizeOptions& options = {});

double traffic_level_flow(const IntersectionConfig& config, TrafficLevel level);

}  // namespace aircross
