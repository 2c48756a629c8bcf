#pragma once

#include <span>

#include "aircross/config.hpp"
#include "aircross/geometry.hpp"
#include "aircross/trajectory.hpp"

namespace aircross {

// Demand on the canonical direction: entry flow f_int_ent (veh/s over the
// direction's entry lanes) split into a straight fraction d_s and a
// left-turn fraction 1 - d_s.
struct Demand {
    double d_s = 0.5;
    double f_int_ent = 3.0;

    double d_l() const { return 1.0 - d_s; }
    void validate() const;
};

// Space-mean of squared linear speed over one segment:
// integral of v^2 dt divided by the segment's length.  Equals the cruise
// speed for the uniform straight profile and exceeds it on any profile that
// must average the same displacement with speed variation.
double mean_square_velocity(const TrajectoryPolynomial& traj);

// Mechanical energy spent on one segment: drag_coeff * integral(v^3)
// + mass * integral(|v * dv/dt|)  (propulsion against drag plus accelerating
// work counted at recovery-free braking).
double segment_energy(const TrajectoryPolynomial& traj, double drag_coeff, double mass);

struct ObjectiveBreakdown {
    double flow = 0.0;
    double power = 0.0;
    double objective = 0.0;
    double alpha = 0.0;
};

// Flow index of the direction (veh/s): gate density times the platoon
// correction factor times the share-weighted per-path mean of the
// mean-square speeds, where a turning path averages its n_s straight
// segments and one arc with weights n_s and 1 over a length of
// n_s + pi/2 edge units.
// `shares` spans the whole PathSet order (straights, then turns); straight
// shares must sum to d_s and turn shares to 1 - d_s.
double intersection_flow(const PathSet& paths, std::span<const double> shares,
                         const Demand& demand, const IntersectionConfig& config,
                         double v_bar_straight, double v_bar_curved);

// Power index (W): entry flow times the share-weighted per-path energy
// (straight paths spend n_c + 1 segment energies, turning paths n_s straight
// plus one arc).
double intersection_power(const PathSet& paths, std::span<const double> shares,
                          const Demand& demand, const IntersectionConfig& config,
                          double energy_straight, double energy_curved);

double objective(double alpha, double flow, double power);

// Full evaluation from profiles: derives the per-segment statistics and the
// three indices in one call.
ObjectiveBreakdown evaluate_objective(const IntersectionConfig& config, const PathSet& paths,
                                      std::span<const double> shares, const Demand& demand,
                                      double alpha, const TrajectoryPolynomial& straight,
                                      const TrajectoryPolynomial& curved);

namespace detail {

// Share-validation-free kernels for the optimizer's hot path.  `turn_shares`
// spans only the turning paths, in PathSet order.
double flow_kernel(const PathSet& paths, std::span<const double> turn_shares, double d_s,
                   double rho, double capacity_factor, double v_bar_straight,
                   double v_bar_curved);
double power_kernel(const PathSet& paths, std::span<const double> turn_shares, double d_s,
                    double f_int_ent, int n_c, double energy_straight, double energy_curved);

}  // namespace detail

}  // namespace aircross
