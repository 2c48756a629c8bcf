#include "aircross/geometry.hpp"

#include <numbers>
#include <ostream>

namespace aircross {

IntersectionGraph build_intersection(const IntersectionConfig& config) {
    config.validate();
    IntersectionGraph g;
    g.n_c = config.n_c;
    g.l_e = config.l_e();
    const int n = g.n_c;
    const int half = g.half();

    g.nodes.reserve(static_cast<std::size_t>(n) * n);
    for (int iy = 1; iy <= n; ++iy)
        for (int ix = 1; ix <= n; ++ix) g.nodes.push_back({ix, iy});

    g.straight_edges.reserve(static_cast<std::size_t>(2 * n * (n - 1)));
    for (int iy = 1; iy <= n; ++iy)
        for (int ix = 1; ix < n; ++ix) g.straight_edges.push_back({{ix, iy}, {ix + 1, iy}});
    for (int ix = 1; ix <= n; ++ix)
        for (int iy = 1; iy < n; ++iy) g.straight_edges.push_back({{ix, iy}, {ix, iy + 1}});

    // One diagonal per grid cell fully inside a quadrant's node range.  The
    // turning stream of quadrant 1 (NE) runs north then west, so its
    // diagonals point northwest; the other quadrants follow by 90-degree
    // rotation.
    for (int i = half + 2; i <= n; ++i)
        for (int j = half + 1; j <= n - 1; ++j) g.diagonals.push_back({{i, j}, {i - 1, j + 1}, 1});
    for (int i = 2; i <= half; ++i)
        for (int j = half + 2; j <= n; ++j) g.diagonals.push_back({{i, j}, {i - 1, j - 1}, 2});
    for (int i = 1; i <= half - 1; ++i)
        for (int j = 2; j <= half; ++j) g.diagonals.push_back({{i, j}, {i + 1, j - 1}, 3});
    for (int i = half + 1; i <= n - 1; ++i)
        for (int j = 1; j <= half - 1; ++j) g.diagonals.push_back({{i, j}, {i + 1, j + 1}, 4});

    return g;
}

void dump_edge_list(const IntersectionGraph& g, std::ostream& os) {
    os << "grid " << g.n_c << " edge_length " << g.l_e << "\n";
    for (const GridNode& n : g.nodes)
        os << "node " << n.ix << " " << n.iy << " " << n.ix * g.l_e << " " << n.iy * g.l_e
           << "\n";
    for (const StraightEdge& e : g.straight_edges)
        os << "edge " << e.a.ix << " " << e.a.iy << " " << e.b.ix << " " << e.b.iy << "\n";
    for (const DiagonalEdge& d : g.diagonals)
        os << "diagonal q" << d.quadrant << " " << d.from.ix << " " << d.from.iy << " " << d.to.ix
           << " " << d.to.iy << "\n";
}

double Path::length(double l_e) const {
    double len = straight_segments() * l_e;
    if (curved()) len += std::numbers::pi / 2.0 * l_e;
    return len;
}

std::vector<GridNode> Path::nodes_crossed() const {
    std::vector<GridNode> out;
    const int col = entry_column();
    if (!curved()) {
        out.reserve(static_cast<std::size_t>(n_c));
        for (int iy = 1; iy <= n_c; ++iy) out.push_back({col, iy});
        return out;
    }
    out.reserve(static_cast<std::size_t>(straight_segments()));
    for (int iy = 1; iy <= turn_row(); ++iy) out.push_back({col, iy});
    for (int ix = landing_column(); ix >= 1; --ix) out.push_back({ix, exit_row()});
    return out;
}

PathSet enumerate_paths(const IntersectionGraph& graph) {
    PathSet set;
    set.n_c = graph.n_c;
    const int half = set.half();
    for (int lane = 1; lane <= half; ++lane)
        set.paths.push_back({DemandClass::Straight, lane, 0, graph.n_c});
    for (int lane = 1; lane <= half - 1; ++lane)
        for (int dp = 1; dp <= half - 1; ++dp)
            set.paths.push_back({DemandClass::Left, lane, dp, graph.n_c});
    return set;
}

}  // namespace aircross
