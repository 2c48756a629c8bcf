#pragma once

#include <stdexcept>
#include <string>

namespace aircross {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Motion caps applied to every trajectory.  Speed bounds act on linear speed
// (turn speed is radius * angular rate); the turn_* entries cap angular
// acceleration and angular jerk on arcs.
struct KinematicLimits {
    double v_max;
    double accel_max;
    double jerk_max;
    double turn_accel_max;
    double turn_jerk_max;
};

// Geometry, timing, vehicle, and cap parameters of one intersection.
// Distances in meters, times in seconds.
struct IntersectionConfig {
    double l_c = 70.0;      // side length of the square conflict zone
    int n_c = 6;            // lanes per axis (even); nodes sit on an n_c x n_c grid
    double delta_t = 1.0;   // rhythm step: one block advances one edge per step
    double l_g = 1.0;       // clearance band reserved at each end of a block
    double l_v = 0.5;       // vehicle length
    double d_f_min = 1.5;   // minimum bumper-to-bumper following distance
    double rho_ent = 0.3;   // entry density: vehicles per meter of lane at the gate
    double v_max = 20.0;    // speed cap
    double x2_max = 5.0;    // straight acceleration cap
    double x3_max = 50.0;   // straight jerk cap
    double th2_max = 8.0;   // angular acceleration cap on arcs
    double th3_max = 60.0;  // angular jerk cap on arcs
    double drag_coeff = 0.02;  // drag power coefficient (per v^3 term)
    double mass = 1.0;         // inertial power coefficient (per |v*a| term)
    int K_s = 4;            // straight profile polynomial degree
    int K_c = 4;            // turn profile polynomial degree
    double l_e_min = 5.0;   // smallest admissible edge length

    // Edge length between adjacent nodes: the grid splits l_c into n_c + 1
    // equal spans per axis.
    double l_e() const { return l_c / (n_c + 1); }

    // Cruise speed: one edge per rhythm step.
    double base_speed() const { return l_e() / delta_t; }

    // Center-to-center seat spacing inside a block.
    double seat_pitch() const { return l_v + d_f_min; }

    // Usable span of a block once both clearance half-bands are removed.
    double usable_block_length() const { return l_e() - l_g; }

    // Platoon correction applied to the flow index.
    double capacity_factor() const { return 2.0 - (2.0 * l_g + d_f_min) / l_e(); }

    KinematicLimits limits() const { return {v_max, x2_max, x3_max, th2_max, th3_max}; }

    // Throws ConfigError with a named-parameter message on the first violated
    // requirement.
    void validate() const;
};

}  // namespace aircross
