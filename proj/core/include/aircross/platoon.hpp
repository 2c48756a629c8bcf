#pragma once

#include "aircross/config.hpp"

namespace aircross {

// Geometry of one moving block (platoon frame).  Blocks tile each lane with
// spatial period edge_length and advance one edge per rhythm step, so a
// block's leading edge crosses successive grid lines exactly delta_t apart.
struct PlatoonSpec {
    double edge_length;
    double gap_clearance;
    double vehicle_length;
    double min_following;
    double delta_t;

    static PlatoonSpec from(const IntersectionConfig& c) {
        return {c.l_e(), c.l_g, c.l_v, c.d_f_min, c.delta_t};
    }
    double pitch() const { return vehicle_length + min_following; }
    double base_speed() const { return edge_length / delta_t; }
};

// Seats per block: how many vehicles fit in the usable span at seat pitch.
// Throws ConfigError when not even one fits.
int max_vehicles_per_platoon(const PlatoonSpec& spec);

// Distance of seat k's vehicle reference point behind the block's leading
// edge (seat 0 is foremost), and the time lag with which it trails the
// leading edge at cruise speed.
double seat_depth(const PlatoonSpec& spec, int seat);
double seat_entry_delay(const PlatoonSpec& spec, int seat);

// Room a seated vehicle has before an excursion from the block frame pushes
// it past the block's claim limits, minimized over every seat.  Each block
// claims l_e of lane with its gap clearance at the front; splitting every
// clearance band between its two neighbors lets a vehicle roam
// [l_g/2, l_e + l_g/2] of the claim, so adjacent claims abut exactly and the
// foremost seat's forward room — always half the gap clearance — governs.
double core_slack(const PlatoonSpec& spec);

// Per-lane flow carried by one nonempty block every fourth rhythm step (the
// alternating-slot pattern leaves every other block slot empty, and slots
// themselves come every second step).
double entry_flow(int vehicles_per_block, double delta_t);

// Demand-side entry flow of one approach direction: gate density times
// cruise speed, spread over that direction's n_c/2 entry lanes.
double demand_entry_flow(const IntersectionConfig& config);

// Largest entry flow one direction can carry with full blocks on all its
// lanes.
double direction_capacity(const IntersectionConfig& config);

// Largest share of the direction's entry flow a single lane can carry.
double lane_share_cap(const IntersectionConfig& config, double entry_flow);

// Which block slots run nonempty on each lane.  Slots are indexed by m: the
// block whose leading edge crosses the lane's entry face at
// (entry_phase + 2 m) * delta_t.  Phases are staggered so that at every
// shared node the north-south and east-west occupation windows interleave,
// and occupancy parities are chosen so every left turn lands in an empty
// target block.
struct SpacingPattern {
    int n_c;

    int half() const { return n_c / 2; }

    // Beat parity of a lane's block boundaries at its entry face.  Applies
    // to northbound columns (south face) and westbound rows (east face).
    int entry_phase(int grid_index) const { return grid_index % 2; }

    bool northbound_nonempty(int column, int slot) const {
        return mod2(slot) == mod2((column + 1) / 2);
    }
    bool westbound_nonempty(int row, int slot) const {
        return mod2(slot) == mod2(row / 2 + half());
    }

    // Time the leading edge of slot m's block crosses the entry face.
    double entry_time(int grid_index, int slot, double delta_t) const {
        return (entry_phase(grid_index) + 2.0 * slot) * delta_t;
    }

private:
    static int mod2(int v) { return ((v % 2) + 2) % 2; }
};

}  // namespace aircross
