#pragma once

// Shared helpers for the test suite: reference integrators and difference
// quotients, an exhaustive route walk over the built graph, a small dense
// linear solver, a vertex-enumeration solver for the share-only program, and
// samplers for the randomized property campaigns.  Everything here is written
// independently of the library's own numerics so the two sides can check each
// other.

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "aircross/config.hpp"
#include "aircross/geometry.hpp"
#include "aircross/metrics.hpp"
#include "aircross/optimizer.hpp"
#include "aircross/trajectory.hpp"

namespace aircross::testing {

// Adaptive Simpson quadrature, refined until the local error estimate falls
// below tol (treated as an absolute tolerance scaled by interval magnitude).
double integrate_adaptive(const std::function<double(double)>& f, double lo, double hi,
                          double tol = 1e-12);

// Symmetric difference quotient (f(t + h) - f(t - h)) / 2h.
double derivative_central(const std::function<double(double)>& f, double t, double h = 1e-6);

// Solves the dense system A x = b in place by Gaussian elimination with
// partial pivoting.  A is row-major n x n.  Returns false when a pivot drops
// below 1e-12 of the largest column entry (singular or nearly so).
bool solve_dense(std::vector<double> a, std::vector<double> b, int n, std::vector<double>& x);

// Exhaustive depth-first walk over the graph's edges, counting every
// canonical-direction route (northbound entry on an east-half column) that
// either runs straight through or takes exactly one quadrant-1 diagonal and
// exits west.  Returns the straight/curved counts and the number of unit
// straight segments of every curved route found, sorted ascending.
struct WalkCensus {
    int straight = 0;
    int curved = 0;
    std::vector<int> curved_straight_segments;
};
WalkCensus walk_canonical_routes(const IntersectionGraph& graph);

// Cubic profile coefficients (a0..a3) obtained by solving the four boundary
// conditions as an explicit 4x4 linear system, given the fixed tail.  An
// independent check of the library's closed-form elimination.
std::vector<double> boundary_cubic_by_linear_solve(SegmentKind kind,
                                                   std::span<const double> free_tail,
                                                   double edge_length, double delta_t);

// Best attainable objective with both profiles frozen at their baselines, by
// brute force: enumerates every vertex of the turn-share polytope
// (nonnegativity, class sum, entry-lane caps, exit-row caps) and evaluates
// the exact objective at each.
double best_vertex_objective(const IntersectionConfig& config, const PathSet& paths,
                             const Demand& demand, double alpha);

// The evaluation setting used across the suite.  Matches the library
// defaults, spelled out so default drift cannot silently retarget the tests.
IntersectionConfig reference_config();

double uniform(std::mt19937_64& rng, double lo, double hi);

// Free-tail coefficients drawn from a fixed box, with no feasibility
// screening; entry i is scaled down by 1/(i + 1) so higher powers do not
// dominate.
std::vector<double> random_tail(std::mt19937_64& rng, int count, double scale);

// Profiles whose tails are rejection-sampled (shrinking the draw box) until
// every kinematic margin of the given config is nonnegative.
TrajectoryPolynomial random_feasible_straight(std::mt19937_64& rng,
                                              const IntersectionConfig& config);
TrajectoryPolynomial random_feasible_curved(std::mt19937_64& rng,
                                            const IntersectionConfig& config);

// Random grid geometry for the cross-configuration campaigns.  Draws may
// violate secondary validity requirements; callers should validate() and
// redraw.  The companion operating-point sampler keeps the straight fraction
// above the level the turn-path caps can absorb, so the demand always fits.
IntersectionConfig random_config(std::mt19937_64& rng);

struct OperatingPoint {
    Demand demand;
    double alpha = 0.99;
};
OperatingPoint random_operating_point(std::mt19937_64& rng, const IntersectionConfig& config);

}  // namespace aircross::testing
