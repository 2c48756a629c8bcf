#pragma once

#include <iosfwd>
#include <vector>

#include "aircross/config.hpp"

namespace aircross {

// Grid node (ix, iy), 1-based, at position (ix * l_e, iy * l_e).  x grows
// east, y grows north; the conflict zone is the square [0, l_c]^2.
struct GridNode {
    int ix;
    int iy;
    bool operator==(const GridNode&) const = default;
};

// Unit-length (one edge span) straight connector between adjacent nodes.
struct StraightEdge {
    GridNode a;
    GridNode b;
};

// Quarter-circle connector used by left turns.  `from` is the divergence
// node, `to` the landing node one column and one row away; `quadrant` is the
// 1..4 corner (NE, NW, SW, SE) whose turning stream uses it.
struct DiagonalEdge {
    GridNode from;
    GridNode to;
    int quadrant;
};

struct IntersectionGraph {
    int n_c = 0;
    double l_e = 0.0;
    std::vector<GridNode> nodes;
    std::vector<StraightEdge> straight_edges;
    std::vector<DiagonalEdge> diagonals;

    int half() const { return n_c / 2; }
};

// Builds the full node/edge structure for the configured grid.  Lanes in
// [1, n_c/2] of each axis carry one direction and the other half the
// opposite; each corner quadrant holds (n_c/2 - 1)^2 diagonals, one per grid
// cell that lies fully inside that quadrant's node range.
IntersectionGraph build_intersection(const IntersectionConfig& config);

// Plain-text dump: one line per node, straight edge, and diagonal.
void dump_edge_list(const IntersectionGraph& graph, std::ostream& os);

enum class DemandClass { Straight, Left };

// One admissible route of the canonical demand direction (northbound entry,
// NE quadrant; a left turn exits westbound).  Lanes are numbered from the
// outermost (rightmost for the driver, easternmost column) inward, so lane
// n_c/2 is the innermost; it has no turn nodes.  divergence_point numbers a
// left path's turn node from the earliest (southernmost) one.
struct Path {
    DemandClass demand_class = DemandClass::Straight;
    int entry_lane = 1;
    int divergence_point = 0;  // 0 for straight paths
    int n_c = 0;

    bool curved() const { return demand_class == DemandClass::Left; }
    int half() const { return n_c / 2; }
    int entry_column() const { return n_c + 1 - entry_lane; }

    // Left-path waypoints; only meaningful when curved().
    int turn_row() const { return half() + divergence_point; }
    int exit_row() const { return turn_row() + 1; }
    int landing_column() const { return entry_column() - 1; }

    // Number of unit straight segments.  A straight path crosses the whole
    // zone: n_c + 1 spans.  A left path runs turn_row() spans north and
    // entry_column() - 1 spans west.
    int straight_segments() const {
        return curved() ? entry_column() + turn_row() - 1 : n_c + 1;
    }
    int segment_count() const { return straight_segments() + (curved() ? 1 : 0); }
    double length(double l_e) const;

    // Grid nodes crossed, in travel order.
    std::vector<GridNode> nodes_crossed() const;
};

// All paths of the canonical direction: straights for lanes 1..n_c/2, then
// left turns ordered by (entry_lane, divergence_point).
struct PathSet {
    std::vector<Path> paths;
    int n_c = 0;

    int half() const { return n_c / 2; }
    int straight_count() const { return half(); }
    int curved_count() const { return (half() - 1) * (half() - 1); }
    int total() const { return straight_count() + curved_count(); }

    int straight_index(int lane) const { return lane - 1; }
    int curved_index(int lane, int divergence_point) const {
        return half() + (lane - 1) * (half() - 1) + (divergence_point - 1);
    }
    const Path& straight(int lane) const { return paths[straight_index(lane)]; }
    const Path& curved(int lane, int divergence_point) const {
        return paths[curved_index(lane, divergence_point)];
    }
};

PathSet enumerate_paths(const IntersectionGraph& graph);

}  // namespace aircross
