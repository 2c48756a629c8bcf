#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aircross/config.hpp"
#include "aircross/platoon.hpp"
#include "aircross/polynomial.hpp"

namespace aircross {

enum class SegmentKind { Straight, Curved };

// Motion profile over one segment, t in [0, delta_t].  For straight segments
// `position` is distance along the lane in meters (0 at entry, edge_length at
// exit).  For curved segments it is the swept angle in radians (0 to pi/2) of
// a quarter circle of radius edge_length, so linear speed is
// edge_length * dtheta/dt.  Every profile meets four boundary conditions:
// position endpoints as above and cruise speed at both ends; the cubic part
// is eliminated from them, coefficients of t^4 and higher are free.
struct TrajectoryPolynomial {
    SegmentKind kind = SegmentKind::Straight;
    Polynomial position;
    std::vector<double> free_tail;  // coefficients of t^4.. (absolute units)
    double delta_t = 1.0;
    double edge_length = 10.0;

    // Path-length progress in meters (identity for straight, radius-scaled
    // for curved).
    Polynomial displacement() const;
    double segment_length() const;

    // Derivative of `position` of the given order at t; throws
    // std::domain_error outside [0, delta_t].
    double eval(int order, double t) const;

    // Linear speed in m/s.
    double speed(double t) const;

    // Largest absolute residual of the four boundary conditions.
    double boundary_residual() const;
};

// Builds the full profile from the free tail coefficients (t^4 and up,
// absolute units) by solving the four boundary conditions for the cubic
// part.  An empty tail yields the baseline cubic; for straight segments that
// baseline is uniform cruise.
TrajectoryPolynomial eliminate_boundary_straight(std::span<const double> free_tail,
                                                 double edge_length, double delta_t);
TrajectoryPolynomial eliminate_boundary_curved(std::span<const double> free_tail,
                                               double edge_length, double delta_t);

struct ConstraintMargin {
    std::string name;
    double margin;   // >= 0 means satisfied; distance to the cap
    double worst_t;  // time at which the margin is attained
};

struct FeasibilityReport {
    std::vector<ConstraintMargin> entries;

    double min_margin() const;
    bool feasible(double tol = 0.0) const { return min_margin() >= -tol; }
    const ConstraintMargin* find(std::string_view name) const;
    void append(const FeasibilityReport& other);
};

// Margins against the speed floor (no reversing), speed cap, and the
// acceleration/jerk caps that apply to the segment kind.
FeasibilityReport check_kinematics(const TrajectoryPolynomial& traj,
                                   const KinematicLimits& limits);

// Largest excursion of the profile from uniform progress between its
// endpoints over one rhythm step (meters for straight segments, radians for
// curved ones).  Seated vehicles carry this excursion relative to the moving
// block frame, so block-containment checks weigh it against core_slack.
double uniform_excursion(const TrajectoryPolynomial& traj, double* worst_t = nullptr);

// Smallest reference-point distance between a leader running `tau` seconds
// ahead and its follower, over one full segment of the follower.  `next` is
// the segment the leader enters when it finishes the current one (pass `cur`
// for a lane of identical segments).  Requires tau in (0, delta_t].
double min_headway_distance(const TrajectoryPolynomial& cur, const TrajectoryPolynomial& next,
                            double tau);

// Clearance margins (gap minus min_following, gap = distance minus vehicle
// length) for consecutive seats on a straight-only path and, when `curved`
// is non-null, across every segment-kind transition of a turning path.
FeasibilityReport check_following_distance(const TrajectoryPolynomial& straight,
                                           const TrajectoryPolynomial* curved,
                                           const PlatoonSpec& spec);

}  // namespace aircross
