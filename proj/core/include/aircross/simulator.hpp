#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aircross/geometry.hpp"
#include "aircross/metrics.hpp"
#include "aircross/optimizer.hpp"

namespace aircross {

// Deterministic discrete-vehicle realization of an operating point.  The
// schedule is periodic with period window_cycles * 4 * delta_t: every lane
// fills at most one block slot per 4 * delta_t, per-path counts follow
// cumulative largest-remainder apportionment of share * f * 4 * delta_t per
// cycle, and left-turners inherit their seat index into the westbound block
// they merge into.  Westbound rows carry mirror-direction traffic at the
// complementary slot parity so every merge and crossing the canonical
// direction experiences is present.
struct SimOptions {
    int window_cycles = 25;
    // The alternating-slot discipline that keeps merge targets empty.  When
    // false, mirror traffic spills onto both slot parities at the same total
    // rate, modelling a grid without the spacing rule; merges then land in
    // occupied blocks and the separation checks must flag them.
    bool spacing_enabled = true;
    int samples_per_segment = 96;  // Simpson panels per segment for integrals
    int trace_samples_per_step = 0;  // >0 writes a position trace this dense
    double check_tolerance = 1e-7;   // slack applied to every separation margin
    // Time allowance subtracted from delta_t when judging how close a
    // north-south and an east-west crossing of the same node may come.
    // Negative means "use the default of l_g / base speed".
    double guard_allowance = -1.0;
};

enum class VehicleClass { Straight, Turner, Mirror };

struct SimVehicle {
    int id = 0;
    VehicleClass vclass = VehicleClass::Straight;
    int path_index = -1;  // PathSet index; -1 for mirror traffic
    int lane = 0;         // entry lane (canonical) or row (mirror)
    int cycle = 0;
    int slot = 0;         // absolute entry slot index m
    int seat = 0;
    double entry_time = 0.0;  // reference point crosses the entry face
};

struct VehicleTimeline {
    int vehicle = 0;
    double entry = 0.0;
    double turn_start = -1.0;  // arc entry; -1 when the vehicle never turns
    double landing = -1.0;     // arc exit / merge instant
    double exit = 0.0;         // reference point leaves the zone
};

struct TracePoint {
    double time = 0.0;
    int vehicle = 0;
    double x = 0.0;
    double y = 0.0;
};

// One reference-point node crossing.  Arc endpoints are tagged: a turner
// crosses its divergence node northbound (arc = true there), then reappears
// one step later at the node west of it, westbound.
struct NodeCrossing {
    double time = 0.0;
    int vehicle = 0;
    int column = 0;  // node grid column, 1..n_c
    int row = 0;     // node grid row, 1..n_c
    bool ew = false;     // crossing axis: false north-south, true east-west
    bool arc = false;    // crossing is an arc endpoint
};

struct SeparationViolation {
    std::string check;  // "headway" | "block_core" | "node_beat" | "clearance_disc" | "landing"
    double time = 0.0;
    int vehicle_a = -1;
    int vehicle_b = -1;  // -1 for single-vehicle checks
    double value = 0.0;  // measured quantity
    double limit = 0.0;  // bound it had to respect
    std::string detail;
};

// Outcome of the four separation check families: same-lane headway (gap at
// least min_following at all times), block-core containment (vehicles never
// enter the clearance half-band at either block end), node-beat exclusivity
// (north-south and east-west occupations of a node never share a rhythm
// window), and the 2D proximity disc near nodes and arcs.
struct SeparationReport {
    std::vector<SeparationViolation> violations;
    long pair_checks = 0;
    double min_headway_margin = 0.0;
    double min_core_margin = 0.0;
    double min_disc_margin = 0.0;
    // Smallest time offset between a north-south and an east-west block
    // crossing of the same node, in seconds; must stay at or above
    // delta_t - guard_allowance.
    double min_node_offset = 0.0;

    bool clean() const { return violations.empty(); }
};

struct SimulationResult {
    std::vector<SimVehicle> vehicles;
    std::vector<VehicleTimeline> timelines;
    double window_seconds = 0.0;
    double empirical_flow = 0.0;
    double empirical_power = 0.0;
    std::vector<double> lane_entry_rates;  // veh/s per canonical lane, index lane-1
    std::vector<double> realized_shares;   // per path, from realized counts
    SeparationReport separation;
    int landing_deferrals = 0;  // turners pushed to a later cycle by a full target block
    std::vector<NodeCrossing> events;  // every node crossing, time-ordered
    std::vector<TracePoint> trace;
};

// Realizes `decision` under `demand` and measures it.  The empirical flow
// and power estimators integrate the sampled motion of every realized
// vehicle and converge to the analytic indices evaluated at the realized
// shares.  Throws ConfigError / std::invalid_argument on structurally
// impossible inputs; schedule-level conflicts are reported in `separation`,
// not thrown.
SimulationResult simulate(const IntersectionConfig& config, const PathSet& paths,
                          const DecisionVector& decision, const Demand& demand,
                          const SimOptions& options = {});

// A uniformly drawn feasible operating point on the seat lattice: shares are
// multiples of 1 / (f * 4 * delta_t) (so per-cycle quotas are whole
// vehicles), every lane and exit cap holds, and both profiles stay at their
// baseline cubics.  d_s is snapped to the lattice; the realized demand is
// returned alongside.  Requires f * 4 * delta_t to be (nearly) integral.
struct LatticeSample {
    DecisionVector decision;
    Demand demand;
};

LatticeSample random_lattice_decision(const IntersectionConfig& config, const PathSet& paths,
                                      double d_s_target, double f_int_ent, std::uint64_t seed);

}  // namespace aircross
