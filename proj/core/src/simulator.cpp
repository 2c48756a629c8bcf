#include "aircross/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "aircross/platoon.hpp"
#include "aircross/trajectory.hpp"

namespace aircross {

namespace {

constexpr double kPi = std::numbers::pi;

template <typename F>
double simpson(F&& f, double a, double b, int panels) {
    panels = std::max(2, panels);
    if (panels % 2 != 0) ++panels;
    const double h = (b - a) / panels;
    double sum = f(a) + f(b);
    for (int i = 1; i < panels; ++i) sum += f(a + i * h) * (i % 2 != 0 ? 4.0 : 2.0);
    return sum * h / 3.0;
}

// One straight run, arc, or westbound run of a vehicle's track.  Straight
// runs may span several edges; the profile repeats every delta_t with the
// accumulated whole edges added on.
struct TrackSeg {
    double t0 = 0.0;
    double t1 = 0.0;
    int mode = 0;  // 0: northbound (+y), 1: westbound (-x), 2: arc
    double ox = 0.0;
    double oy = 0.0;  // run start point, or the arc center
    const TrajectoryPolynomial* prof = nullptr;
};

struct Vec2 {
    double x;
    double y;
};

double run_displacement(const TrajectoryPolynomial& prof, double local_t, double l_e, double dt) {
    double k = std::floor(local_t / dt + 1e-12);
    double frac = local_t - k * dt;
    if (frac < 0.0) {
        frac = 0.0;
    }
    if (frac > dt) {
        frac = dt;
    }
    return k * l_e + prof.position(frac);
}

Vec2 track_position(const std::vector<TrackSeg>& track, double t, double l_e, double dt) {
    const TrackSeg* seg = &track.front();
    for (const TrackSeg& candidate : track) {
        if (t >= candidate.t0 - 1e-12) seg = &candidate;
    }
    double local = std::clamp(t - seg->t0, 0.0, seg->t1 - seg->t0);
    switch (seg->mode) {
        case 0:
            return {seg->ox, seg->oy + run_displacement(*seg->prof, local, l_e, dt)};
        case 1:
            return {seg->ox - run_displacement(*seg->prof, local, l_e, dt), seg->oy};
        default: {
            const double theta = seg->prof->position(std::clamp(local, 0.0, dt));
            return {seg->ox + l_e * std::cos(theta), seg->oy + l_e * std::sin(theta)};
        }
    }
}

struct Pending {
    int path = -1;  // PathSet index; -1 for mirror vehicles
    VehicleClass vclass = VehicleClass::Straight;
    int lane = 0;  // canonical entry lane, or row for mirror vehicles
    int cycle = 0;
    int slot = 0;          // absolute slot index m at the entry face
    int source_block = 0;  // block id for seat assignment
    int landing_block = -1;
    int landing_slot = 0;  // absolute slot m' of the target block (turners)
    int seat = -1;
};

struct BlockTable {
    std::map<std::pair<int, int>, int> ids;
    std::vector<std::vector<int>> seats;  // block id -> seat -> pending id (-1 free)
    int seat_count = 0;

    int intern(int kind_key, int index) {
        auto [it, inserted] = ids.try_emplace({kind_key, index}, static_cast<int>(seats.size()));
        if (inserted) seats.emplace_back(static_cast<std::size_t>(seat_count), -1);
        return it->second;
    }
};

// Kempe-chain seat assignment: a turner needs the same seat index in its
// source block and its landing block, so seats behave as edge colors of a
// bipartite multigraph (source blocks vs landing blocks).  Both degrees are
// capped at the seat count, so a proper coloring always exists; when no seat
// is free on both sides, flipping one alternating chain frees one.
class SeatColoring {
public:
    SeatColoring(BlockTable& blocks, std::vector<Pending>& pending)
        : blocks_(blocks), pending_(pending) {}

    void assign(int edge) {
        Pending& vehicle = pending_[static_cast<std::size_t>(edge)];
        const int u = vehicle.source_block;
        const int v = vehicle.landing_block;
        const int shared = shared_free(u, v);
        if (shared >= 0) {
            place(edge, shared);
            return;
        }
        const int a = first_free(u);
        const int b = first_free(v);
        if (a < 0 || b < 0) throw std::logic_error("seat assignment ran out of seats");
        flip_chain(v, a, b);
        if (blocks_.seats[static_cast<std::size_t>(v)][static_cast<std::size_t>(a)] != -1)
            throw std::logic_error("seat chain flip failed to free the seat");
        place(edge, a);
    }

private:
    int first_free(int block) const {
        const auto& row = blocks_.seats[static_cast<std::size_t>(block)];
        for (int k = 0; k < static_cast<int>(row.size()); ++k)
            if (row[static_cast<std::size_t>(k)] == -1) return k;
        return -1;
    }

    int shared_free(int u, int v) const {
        const auto& ru = blocks_.seats[static_cast<std::size_t>(u)];
        const auto& rv = blocks_.seats[static_cast<std::size_t>(v)];
        for (int k = 0; k < static_cast<int>(ru.size()); ++k)
            if (ru[static_cast<std::size_t>(k)] == -1 && rv[static_cast<std::size_t>(k)] == -1) return k;
        return -1;
    }

    void place(int edge, int seat) {
        Pending& vehicle = pending_[static_cast<std::size_t>(edge)];
        vehicle.seat = seat;
        blocks_.seats[static_cast<std::size_t>(vehicle.source_block)][static_cast<std::size_t>(seat)] = edge;
        blocks_.seats[static_cast<std::size_t>(vehicle.landing_block)][static_cast<std::size_t>(seat)] = edge;
    }

    int other_end(int edge, int block) const {
        const Pending& vehicle = pending_[static_cast<std::size_t>(edge)];
        return vehicle.source_block == block ? vehicle.landing_block : vehicle.source_block;
    }

    // Walks the alternating a/b chain starting at `start` (which has seat b
    // free, seat a busy) and swaps the two seats along it.  The chain is a
    // simple path because every block holds at most one edge per seat.
    void flip_chain(int start, int a, int b) {
        std::vector<int> chain;
        int block = start;
        int color = a;
        while (true) {
            const int edge = blocks_.seats[static_cast<std::size_t>(block)][static_cast<std::size_t>(color)];
            if (edge == -1) break;
            chain.push_back(edge);
            block = other_end(edge, block);
            color = (color == a) ? b : a;
        }
        for (const int edge : chain) {
            const Pending& vehicle = pending_[static_cast<std::size_t>(edge)];
            blocks_.seats[static_cast<std::size_t>(vehicle.source_block)][static_cast<std::size_t>(vehicle.seat)] = -1;
            blocks_.seats[static_cast<std::size_t>(vehicle.landing_block)][static_cast<std::size_t>(vehicle.seat)] = -1;
        }
        for (const int edge : chain) {
            Pending& vehicle = pending_[static_cast<std::size_t>(edge)];
            vehicle.seat = (vehicle.seat == a) ? b : a;
            blocks_.seats[static_cast<std::size_t>(vehicle.source_block)][static_cast<std::size_t>(vehicle.seat)] = edge;
            blocks_.seats[static_cast<std::size_t>(vehicle.landing_block)][static_cast<std::size_t>(vehicle.seat)] = edge;
        }
    }

    BlockTable& blocks_;
    std::vector<Pending>& pending_;
};

// Time a vehicle on a lane would have crossed the lane's entry face if it
// had ridden its block from the start; landed turners get the east-face
// extrapolation of their target block.
struct LanePresence {
    int vehicle = 0;
    double virtual_entry = 0.0;
    double from = 0.0;
    double to = 0.0;
    bool same_path_turner = false;
    int path = -1;
};

struct NodeVisit {
    int vehicle = 0;
    double t = 0.0;
    bool ew = false;
    bool arc = false;  // endpoint of a turning arc: pairs with every axis
};

int wrap_slot(long slot, long period) {
    long w = slot % period;
    if (w < 0) w += period;
    return static_cast<int>(w);
}

}  // namespace

SimulationResult simulate(const IntersectionConfig& config, const PathSet& paths,
                          const DecisionVector& decision, const Demand& demand,
                          const SimOptions& options) {
    config.validate();
    demand.validate();
    if (paths.n_c != config.n_c) throw ConfigError("path set was built for a different lane count");
    if (static_cast<int>(decision.shares.size()) != paths.total())
        throw std::invalid_argument("decision has the wrong number of path shares");
    if (options.window_cycles < 4)
        throw std::invalid_argument(
            "measurement window too short: need at least 4 cycles (warm-up plus whole "
            "measured cycles)");

    const double dt = config.delta_t;
    const double l_e = config.l_e();
    const double v_u = config.base_speed();
    const int n_c = config.n_c;
    const int half = n_c / 2;
    const PlatoonSpec spec = PlatoonSpec::from(config);
    const int seats = max_vehicles_per_platoon(spec);
    const SpacingPattern pattern{n_c};
    const int window = options.window_cycles;
    const long slot_period = 2L * window;

    const TrajectoryPolynomial straight_prof =
        eliminate_boundary_straight(decision.free_straight, l_e, dt);
    const TrajectoryPolynomial curved_prof =
        eliminate_boundary_curved(decision.free_curved, l_e, dt);
    if (straight_prof.boundary_residual() > 1e-8 || curved_prof.boundary_residual() > 1e-8)
        throw std::invalid_argument("free coefficients violate the profile boundary conditions");

    // Per-cycle vehicle quotas.
    const double cycle_quota = demand.f_int_ent * 4.0 * dt;
    std::vector<double> path_quota(static_cast<std::size_t>(paths.total()));
    for (int p = 0; p < paths.total(); ++p) {
        const double share = decision.shares[static_cast<std::size_t>(p)];
        if (share < -1e-9) throw std::invalid_argument("path shares must be nonnegative");
        path_quota[static_cast<std::size_t>(p)] = std::max(0.0, share) * cycle_quota;
    }
    std::vector<std::vector<int>> lane_paths(static_cast<std::size_t>(half));
    for (int lane = 1; lane <= half; ++lane)
        lane_paths[static_cast<std::size_t>(lane - 1)].push_back(paths.straight_index(lane));
    for (int p = paths.straight_count(); p < paths.total(); ++p)
        lane_paths[static_cast<std::size_t>(paths.paths[static_cast<std::size_t>(p)].entry_lane - 1)].push_back(p);

    std::vector<double> lane_quota(static_cast<std::size_t>(half), 0.0);
    for (int lane = 1; lane <= half; ++lane)
        for (const int p : lane_paths[static_cast<std::size_t>(lane - 1)])
            lane_quota[static_cast<std::size_t>(lane - 1)] += path_quota[static_cast<std::size_t>(p)];
    for (const double q : lane_quota)
        if (q > seats + 1e-6)
            throw ConfigError("a lane's realized load exceeds its block seat count");

    // Mirror rows reuse the canonical lane loads (symmetric demand), with
    // mirror turners kept on their row for their whole run - a superset of
    // the space they really occupy, so every canonical interaction is
    // present.
    std::vector<double> mirror_quota(static_cast<std::size_t>(n_c + 1), 0.0);
    for (int row = half + 1; row <= n_c; ++row)
        mirror_quota[static_cast<std::size_t>(row)] =
            std::min<double>(seats, lane_quota[static_cast<std::size_t>(n_c - row)]);

    // Landing-slot shift of each turning path: the merge-slot relation makes
    // the turner join the westbound block whose east-face crossing trails its
    // own entry by exactly the travel time, seat for seat.
    std::vector<int> landing_shift(static_cast<std::size_t>(paths.total()), 0);
    for (int p = paths.straight_count(); p < paths.total(); ++p) {
        const Path& path = paths.paths[static_cast<std::size_t>(p)];
        const int i = path.entry_column();
        const int r = path.turn_row();
        const int numer = pattern.entry_phase(i) - pattern.entry_phase(r + 1) + i + r - n_c - 1;
        if (numer % 2 != 0) throw std::logic_error("merge-slot relation lost its parity");
        landing_shift[static_cast<std::size_t>(p)] = numer / 2;
    }

    std::vector<Pending> pending;
    BlockTable blocks;
    blocks.seat_count = seats;
    std::map<std::pair<int, int>, int> landing_fill;  // (row, wrapped slot) -> count
    SeparationReport separation;
    separation.min_headway_margin = std::numeric_limits<double>::infinity();
    separation.min_core_margin = std::numeric_limits<double>::infinity();
    separation.min_disc_margin = std::numeric_limits<double>::infinity();
    separation.min_node_offset = std::numeric_limits<double>::infinity();
    int deferrals = 0;

    std::vector<double> assigned(static_cast<std::size_t>(paths.total()), 0.0);
    std::vector<long> lane_emitted(static_cast<std::size_t>(half), 0);

    for (int cycle = 0; cycle < window; ++cycle) {
        for (int lane = 1; lane <= half; ++lane) {
            const int column = n_c + 1 - lane;
            const int bit = pattern.northbound_nonempty(column, 0) ? 0 : 1;
            const int slot = bit + 2 * cycle;
            const double q = lane_quota[static_cast<std::size_t>(lane - 1)];
            long target = static_cast<long>(std::floor((cycle + 1) * q + 1e-9)) -
                          lane_emitted[static_cast<std::size_t>(lane - 1)];
            target = std::min<long>(target, seats);
            for (long n = 0; n < target; ++n) {
                // Most-behind path first; straight traffic breaks ties so
                // turners only wait when their target block is full.
                std::vector<int> order = lane_paths[static_cast<std::size_t>(lane - 1)];
                std::sort(order.begin(), order.end(), [&](int a, int b) {
                    const double da = (cycle + 1) * path_quota[static_cast<std::size_t>(a)] - assigned[static_cast<std::size_t>(a)];
                    const double db = (cycle + 1) * path_quota[static_cast<std::size_t>(b)] - assigned[static_cast<std::size_t>(b)];
                    if (std::abs(da - db) > 1e-12) return da > db;
                    return a < b;
                });
                int chosen = -1;
                for (const int p : order) {
                    const double deficit = (cycle + 1) * path_quota[static_cast<std::size_t>(p)] - assigned[static_cast<std::size_t>(p)];
                    if (deficit <= 1e-9) continue;
                    const Path& path = paths.paths[static_cast<std::size_t>(p)];
                    if (!path.curved()) {
                        chosen = p;
                        break;
                    }
                    const int landing_slot = slot + landing_shift[static_cast<std::size_t>(p)];
                    const int row = path.exit_row();
                    const int wrapped = wrap_slot(landing_slot, slot_period);
                    auto& fill = landing_fill[{row, wrapped}];
                    if (fill >= seats) {
                        ++deferrals;
                        continue;
                    }
                    if (options.spacing_enabled && pattern.westbound_nonempty(row, landing_slot)) {
                        separation.violations.push_back(
                            {"landing", pattern.entry_time(row, landing_slot, dt), -1, -1,
                             static_cast<double>(landing_slot), 0.0,
                             "merge target block is on the occupied slot parity"});
                        continue;
                    }
                    ++fill;
                    chosen = p;
                    break;
                }
                if (chosen < 0) break;
                assigned[static_cast<std::size_t>(chosen)] += 1.0;
                ++lane_emitted[static_cast<std::size_t>(lane - 1)];
                Pending vehicle;
                vehicle.path = chosen;
                vehicle.lane = lane;
                vehicle.cycle = cycle;
                vehicle.slot = slot;
                vehicle.source_block = blocks.intern(lane, cycle);
                const Path& path = paths.paths[static_cast<std::size_t>(chosen)];
                if (path.curved()) {
                    vehicle.vclass = VehicleClass::Turner;
                    vehicle.landing_slot = slot + landing_shift[static_cast<std::size_t>(chosen)];
                    vehicle.landing_block =
                        blocks.intern(1000 + path.exit_row(), wrap_slot(vehicle.landing_slot, slot_period));
                } else {
                    vehicle.vclass = VehicleClass::Straight;
                }
                pending.push_back(vehicle);
            }
        }

        // Mirror-direction rows: straight riders at the same per-lane load.
        for (int row = half + 1; row <= n_c; ++row) {
            const double q = mirror_quota[static_cast<std::size_t>(row)];
            const long before = static_cast<long>(std::floor(cycle * q + 1e-9));
            const long after = static_cast<long>(std::floor((cycle + 1) * q + 1e-9));
            const long count = std::min<long>(after - before, seats);
            const int bit = pattern.westbound_nonempty(row, 0) ? 0 : 1;
            int slot = bit + 2 * cycle;
            if (!options.spacing_enabled && cycle % 2 == 1) slot += 1;  // spill onto the merge parity
            for (long n = 0; n < count; ++n) {
                Pending vehicle;
                vehicle.vclass = VehicleClass::Mirror;
                vehicle.lane = row;
                vehicle.cycle = cycle;
                vehicle.slot = slot;
                vehicle.source_block = blocks.intern(2000 + row, cycle);
                vehicle.seat = static_cast<int>(n);
                pending.push_back(vehicle);
            }
        }
    }

    // Seats: turners first (their seat index must be free in both blocks),
    // then everyone else packs forward.
    {
        SeatColoring coloring(blocks, pending);
        for (int e = 0; e < static_cast<int>(pending.size()); ++e)
            if (pending[static_cast<std::size_t>(e)].vclass == VehicleClass::Turner) coloring.assign(e);
        for (int e = 0; e < static_cast<int>(pending.size()); ++e) {
            Pending& vehicle = pending[static_cast<std::size_t>(e)];
            if (vehicle.seat >= 0) continue;
            auto& row = blocks.seats[static_cast<std::size_t>(vehicle.source_block)];
            for (int k = 0; k < seats; ++k) {
                if (row[static_cast<std::size_t>(k)] == -1) {
                    row[static_cast<std::size_t>(k)] = e;
                    vehicle.seat = k;
                    break;
                }
            }
            if (vehicle.seat < 0) throw std::logic_error("a block was overfilled");
        }
    }

    // Materialize vehicles, timelines, tracks, and check inputs.
    SimulationResult result;
    result.window_seconds = window * 4.0 * dt;
    result.separation = std::move(separation);
    result.landing_deferrals = deferrals;

    std::vector<std::vector<TrackSeg>> tracks;
    std::map<int, std::vector<LanePresence>> lanes;  // columns: key i; rows: key 1000+row
    std::map<std::pair<int, int>, std::vector<NodeVisit>> node_visits;
    std::map<std::pair<int, int>, std::map<long, int>> ns_beats;
    std::map<std::pair<int, int>, std::map<long, int>> ew_beats;

    auto x_of = [&](int column) { return column * l_e; };
    auto y_of = [&](int row) { return row * l_e; };
    const double l_c = (n_c + 1) * l_e;

    result.lane_entry_rates.assign(static_cast<std::size_t>(half), 0.0);
    result.realized_shares.assign(static_cast<std::size_t>(paths.total()), 0.0);

    for (const Pending& vehicle : pending) {
        const int id = static_cast<int>(result.vehicles.size());
        const double seat_delay = seat_entry_delay(spec, vehicle.seat);
        SimVehicle out;
        out.id = id;
        out.vclass = vehicle.vclass;
        out.path_index = vehicle.path;
        out.lane = vehicle.lane;
        out.cycle = vehicle.cycle;
        out.slot = vehicle.slot;
        out.seat = vehicle.seat;

        VehicleTimeline timeline;
        timeline.vehicle = id;
        std::vector<TrackSeg> track;

        if (vehicle.vclass == VehicleClass::Mirror) {
            const int row = vehicle.lane;
            const double entry = (pattern.entry_phase(row) + 2.0 * vehicle.slot) * dt + seat_delay;
            out.entry_time = entry;
            timeline.entry = entry;
            timeline.exit = entry + (n_c + 1) * dt;
            track.push_back({entry, timeline.exit, 1, l_c, y_of(row), &straight_prof});
            lanes[1000 + row].push_back({id, entry, entry, timeline.exit, false, -1});
            for (int column = n_c; column >= 1; --column) {
                const double t = entry + (n_c + 1 - column) * dt;
                node_visits[{column, row}].push_back({id, t, true, false});
                const long beat = pattern.entry_phase(row) + 2L * vehicle.slot + (n_c + 1 - column);
                ew_beats[{column, row}].emplace(beat, id);
            }
        } else {
            const Path& path = paths.paths[static_cast<std::size_t>(vehicle.path)];
            const int column = path.entry_column();
            const double entry = (pattern.entry_phase(column) + 2.0 * vehicle.slot) * dt + seat_delay;
            out.entry_time = entry;
            timeline.entry = entry;
            result.lane_entry_rates[static_cast<std::size_t>(vehicle.lane - 1)] += 1.0;
            result.realized_shares[static_cast<std::size_t>(vehicle.path)] += 1.0;

            if (!path.curved()) {
                timeline.exit = entry + (n_c + 1) * dt;
                track.push_back({entry, timeline.exit, 0, x_of(column), 0.0, &straight_prof});
                lanes[column].push_back({id, entry, entry, timeline.exit, false, vehicle.path});
                for (int row = 1; row <= n_c; ++row) {
                    const double t = entry + row * dt;
                    node_visits[{column, row}].push_back({id, t, false, false});
                    const long beat = pattern.entry_phase(column) + 2L * vehicle.slot + row;
                    ns_beats[{column, row}].emplace(beat, id);
                }
            } else {
                const int r = path.turn_row();
                const int exit_row = path.exit_row();
                const int landing_column = path.landing_column();
                timeline.turn_start = entry + r * dt;
                timeline.landing = timeline.turn_start + dt;
                timeline.exit = timeline.landing + (landing_column)*dt;
                track.push_back({entry, timeline.turn_start, 0, x_of(column), 0.0, &straight_prof});
                track.push_back(
                    {timeline.turn_start, timeline.landing, 2, x_of(landing_column), y_of(r), &curved_prof});
                track.push_back({timeline.landing, timeline.exit, 1, x_of(landing_column),
                                 y_of(exit_row), &straight_prof});
                lanes[column].push_back({id, entry, entry, timeline.turn_start, true, vehicle.path});
                const double virtual_entry =
                    (pattern.entry_phase(exit_row) + 2.0 * vehicle.landing_slot) * dt + seat_delay;
                lanes[1000 + exit_row].push_back({id, virtual_entry, timeline.landing, timeline.exit,
                                                  false, vehicle.path});
                for (int row = 1; row <= r; ++row) {
                    const double t = entry + row * dt;
                    node_visits[{column, row}].push_back({id, t, false, row == r});
                    const long beat = pattern.entry_phase(column) + 2L * vehicle.slot + row;
                    ns_beats[{column, row}].emplace(beat, id);
                }
                for (int col = landing_column; col >= 1; --col) {
                    const double t = timeline.landing + (landing_column - col) * dt;
                    node_visits[{col, exit_row}].push_back({id, t, true, col == landing_column});
                    const long beat = pattern.entry_phase(exit_row) + 2L * vehicle.landing_slot +
                                      (n_c + 1 - col);
                    ew_beats[{col, exit_row}].emplace(beat, id);
                }
            }
        }

        result.vehicles.push_back(out);
        result.timelines.push_back(timeline);
        tracks.push_back(std::move(track));
    }

    const double t_window = result.window_seconds;
    for (double& rate : result.lane_entry_rates) rate /= t_window;
    for (double& share : result.realized_shares) share /= demand.f_int_ent * t_window;

    // --- Empirical flow and power from the sampled motion. ---
    const int panels = options.samples_per_segment;
    const double i2s = simpson([&](double t) { const double v = straight_prof.speed(t); return v * v; }, 0.0, dt, panels);
    const double i3s = simpson([&](double t) { const double v = straight_prof.speed(t); return v * v * v; }, 0.0, dt, panels);
    const double ias = simpson(
        [&](double t) { return std::abs(straight_prof.speed(t) * straight_prof.eval(2, t)); }, 0.0, dt,
        panels);
    const double i2c = simpson([&](double t) { const double v = curved_prof.speed(t); return v * v; }, 0.0, dt, panels);
    const double i3c = simpson([&](double t) { const double v = curved_prof.speed(t); return v * v * v; }, 0.0, dt, panels);
    const double iac = simpson(
        [&](double t) { return std::abs(curved_prof.speed(t) * l_e * curved_prof.eval(2, t)); }, 0.0,
        dt, panels);
    const double seg_energy_s = config.drag_coeff * i3s + config.mass * ias;
    const double seg_energy_c = config.drag_coeff * i3c + config.mass * iac;

    double flow_sum = 0.0;
    double energy_sum = 0.0;
    for (const SimVehicle& vehicle : result.vehicles) {
        if (vehicle.vclass == VehicleClass::Mirror) continue;
        const Path& path = paths.paths[static_cast<std::size_t>(vehicle.path_index)];
        if (path.curved()) {
            const int n_s = path.straight_segments();
            flow_sum += (n_s * i2s + (2.0 / kPi) * i2c) / ((n_s + kPi / 2.0) * l_e);
            energy_sum += n_s * seg_energy_s + seg_energy_c;
        } else {
            flow_sum += i2s / l_e;
            energy_sum += (n_c + 1) * seg_energy_s;
        }
    }
    result.empirical_flow = config.capacity_factor() * flow_sum / (v_u * t_window);
    result.empirical_power = energy_sum / t_window;

    // --- Separation checks. ---
    const double tol = options.check_tolerance;
    SeparationReport& report = result.separation;

    // Block-core containment: worst excursion of the profile from uniform
    // progress, against the seat's slack to the block's claim limits.  The
    // gap clearance sits at the front of each block's l_e claim (seat 0's
    // bumper is a full clearance behind the leading grid line), so a vehicle
    // may claim [l_g/2, l_e + l_g/2] of its block: adjacent claims abut with
    // zero overlap, splitting each clearance band between its neighbors.
    {
        const double wiggle = uniform_excursion(straight_prof);
        for (const SimVehicle& vehicle : result.vehicles) {
            const double depth = seat_depth(spec, vehicle.seat);
            const double front = depth - config.l_v - config.l_g / 2.0 - wiggle;
            const double rear = l_e + config.l_g / 2.0 - depth - wiggle;
            const double margin = std::min(front, rear);
            report.min_core_margin = std::min(report.min_core_margin, margin);
            if (margin < -tol) {
                report.violations.push_back({"block_core", vehicle.entry_time, vehicle.id, -1, margin,
                                             0.0, "vehicle swings into a block clearance band"});
            }
        }
    }

    // Node-beat exclusivity: the north-south and east-west block crossings of
    // a shared node must stay at least delta_t minus the guard allowance
    // apart.  Crossings sit on the integer rhythm grid, so the offset is an
    // exact multiple of delta_t and the check reduces to integer bookkeeping:
    // any strictly positive allowance tolerates only simultaneous crossings.
    const double allowance =
        options.guard_allowance < 0.0 ? config.l_g / v_u : options.guard_allowance;
    const double offset_floor = dt - allowance;
    for (const auto& [node, beats] : ns_beats) {
        const auto it = ew_beats.find(node);
        if (it == ew_beats.end()) continue;
        const std::map<long, int>& other = it->second;
        for (const auto& [beat, vehicle] : beats) {
            auto above = other.lower_bound(beat);
            long nearest = std::numeric_limits<long>::max();
            int partner = -1;
            if (above != other.end() && above->first - beat < nearest) {
                nearest = above->first - beat;
                partner = above->second;
            }
            if (above != other.begin()) {
                const auto below = std::prev(above);
                if (beat - below->first < nearest) {
                    nearest = beat - below->first;
                    partner = below->second;
                }
            }
            if (partner < 0) continue;
            const double offset = static_cast<double>(nearest) * dt;
            report.min_node_offset = std::min(report.min_node_offset, offset);
            if (offset < offset_floor - tol) {
                std::ostringstream detail;
                detail << "node (" << node.first << "," << node.second
                       << ") hosts both axes " << offset << " s apart in rhythm window " << beat;
                report.violations.push_back({"node_beat", beat * dt, vehicle, partner, offset,
                                             offset_floor, detail.str()});
            }
        }
    }

    // Same-lane headway.
    auto headway_pair = [&](const LanePresence& lead, const LanePresence& follow) {
        const double tau = follow.virtual_entry - lead.virtual_entry;
        const double from = std::max(lead.from, follow.from);
        const double to = std::min(lead.to, follow.to);
        if (to - from <= 1e-9) return;
        ++report.pair_checks;
        if (tau > 3.0 * dt) return;  // at least two empty edges apart at all times
        double margin;
        if (tau < 1e-9) {
            margin = -spec.pitch();  // same schedule position: zero distance
        } else {
            long q = static_cast<long>(std::floor(tau / dt + 1e-12));
            double frac = tau - q * dt;
            if (frac <= 1e-12) {
                frac = dt;
                --q;
            }
            double min_distance;
            if (to - from >= dt - 1e-9) {
                min_distance = q * l_e + min_headway_distance(straight_prof, straight_prof, frac);
                if (lead.same_path_turner && follow.same_path_turner && lead.path == follow.path &&
                    q == 0) {
                    min_distance = std::min(
                        {min_distance, min_headway_distance(straight_prof, curved_prof, frac),
                         min_headway_distance(curved_prof, straight_prof, frac)});
                }
            } else {
                // Short co-presence: sample the gap on the overlap window.
                min_distance = std::numeric_limits<double>::infinity();
                const int steps = 64;
                for (int k = 0; k <= steps; ++k) {
                    const double t = from + (to - from) * k / steps;
                    const double s_lead =
                        run_displacement(straight_prof, t - lead.virtual_entry, l_e, dt);
                    const double s_follow =
                        run_displacement(straight_prof, t - follow.virtual_entry, l_e, dt);
                    min_distance = std::min(min_distance, s_lead - s_follow);
                }
            }
            margin = min_distance - spec.pitch();
        }
        report.min_headway_margin = std::min(report.min_headway_margin, margin);
        if (margin < -tol) {
            std::ostringstream detail;
            detail << "gap undercuts the following minimum by " << -margin << " m";
            report.violations.push_back(
                {"headway", from, lead.vehicle, follow.vehicle, margin + spec.pitch() - config.l_v,
                 spec.min_following, detail.str()});
        }
    };
    for (auto& [key, list] : lanes) {
        std::sort(list.begin(), list.end(), [](const LanePresence& a, const LanePresence& b) {
            if (a.virtual_entry != b.virtual_entry) return a.virtual_entry < b.virtual_entry;
            return a.vehicle < b.vehicle;
        });
        for (std::size_t i = 0; i < list.size(); ++i) {
            for (std::size_t j = i + 1; j < list.size(); ++j) {
                if (list[j].virtual_entry - list[i].virtual_entry > 3.0 * dt + 1e-9) break;
                headway_pair(list[i], list[j]);
            }
        }
    }

    // 2D clearance discs near shared nodes (crossing axes and arcs).
    for (auto& [node, visits] : node_visits) {
        std::sort(visits.begin(), visits.end(),
                  [](const NodeVisit& a, const NodeVisit& b) { return a.t < b.t; });
        for (std::size_t i = 0; i < visits.size(); ++i) {
            for (std::size_t j = i + 1; j < visits.size(); ++j) {
                if (visits[j].t - visits[i].t > 4.0 * dt) break;
                if (visits[i].vehicle == visits[j].vehicle) continue;
                // Same-axis pairs are covered by the headway check unless an
                // arc is involved, which leaves the lane line.
                if (visits[i].ew == visits[j].ew && !visits[i].arc && !visits[j].arc) continue;
                const auto& track_a = tracks[static_cast<std::size_t>(visits[i].vehicle)];
                const auto& track_b = tracks[static_cast<std::size_t>(visits[j].vehicle)];
                const double from = std::max({visits[i].t - 2.0 * dt, track_a.front().t0, track_b.front().t0});
                const double to = std::min({visits[j].t + 2.0 * dt, track_a.back().t1, track_b.back().t1});
                if (to - from <= 0.0) continue;
                ++report.pair_checks;
                double min_dist = std::numeric_limits<double>::infinity();
                double min_t = from;
                const int steps = std::max(8, static_cast<int>((to - from) / dt * 32.0));
                for (int k = 0; k <= steps; ++k) {
                    const double t = from + (to - from) * k / steps;
                    const Vec2 a = track_position(track_a, t, l_e, dt);
                    const Vec2 b = track_position(track_b, t, l_e, dt);
                    const double d = std::hypot(a.x - b.x, a.y - b.y);
                    if (d < min_dist) {
                        min_dist = d;
                        min_t = t;
                    }
                }
                const double margin = min_dist - config.l_v;
                report.min_disc_margin = std::min(report.min_disc_margin, margin);
                if (margin < -tol) {
                    std::ostringstream detail;
                    detail << "centers come within " << min_dist << " m near node (" << node.first
                           << "," << node.second << ")";
                    report.violations.push_back({"clearance_disc", min_t, visits[i].vehicle,
                                                 visits[j].vehicle, min_dist, config.l_v,
                                                 detail.str()});
                }
            }
        }
    }

    // Event log: every node crossing, time-ordered.
    for (const auto& [node, visits] : node_visits)
        for (const NodeVisit& visit : visits)
            result.events.push_back(
                {visit.t, visit.vehicle, node.first, node.second, visit.ew, visit.arc});
    std::sort(result.events.begin(), result.events.end(), [](const NodeCrossing& a, const NodeCrossing& b) {
        if (a.time != b.time) return a.time < b.time;
        return a.vehicle < b.vehicle;
    });

    // Optional position trace.
    if (options.trace_samples_per_step > 0) {
        const double step = dt / options.trace_samples_per_step;
        for (const SimVehicle& vehicle : result.vehicles) {
            const auto& track = tracks[static_cast<std::size_t>(vehicle.id)];
            for (double t = track.front().t0; t <= track.back().t1 + 1e-9; t += step) {
                const Vec2 p = track_position(track, t, l_e, dt);
                result.trace.push_back({t, vehicle.id, p.x, p.y});
            }
        }
    }

    return result;
}

LatticeSample random_lattice_decision(const IntersectionConfig& config, const PathSet& paths,
                                      double d_s_target, double f_int_ent, std::uint64_t seed) {
    config.validate();
    if (paths.n_c != config.n_c) throw ConfigError("path set was built for a different lane count");
    if (d_s_target < 0.0 || d_s_target > 1.0)
        throw std::invalid_argument("d_s must lie in [0, 1]");
    const double units_real = f_int_ent * 4.0 * config.delta_t;
    const long units = std::lround(units_real);
    if (units <= 0 || std::abs(units_real - units) > 1e-9)
        throw std::invalid_argument("f * 4 * delta_t must be a positive whole number of seats");
    if (f_int_ent > direction_capacity(config) * (1.0 + 1e-9))
        throw ConfigError("entry flow exceeds the direction capacity");

    const int half = config.n_c / 2;
    const int seats = max_vehicles_per_platoon(PlatoonSpec::from(config));
    const long turn_room = static_cast<long>(half - 1) * seats;
    long straight_units = std::lround(d_s_target * units);
    straight_units = std::max(straight_units, units - turn_room);
    straight_units = std::clamp(straight_units, 0L, units);
    const long turn_units = units - straight_units;
    if (paths.curved_count() == 0 && turn_units > 0)
        throw ConfigError("turn demand is positive but the grid has no turning paths (n_c < 4)");

    std::mt19937_64 rng(seed);
    std::vector<long> turn(static_cast<std::size_t>(paths.curved_count()), 0);
    std::vector<long> lane_used(static_cast<std::size_t>(half), 0);
    std::vector<long> exit_used(static_cast<std::size_t>(std::max(0, half - 1)), 0);

    for (long placed = 0; placed < turn_units; ++placed) {
        std::vector<int> candidates;
        for (int k = 0; k < paths.curved_count(); ++k) {
            const Path& path = paths.paths[static_cast<std::size_t>(paths.straight_count() + k)];
            if (lane_used[static_cast<std::size_t>(path.entry_lane - 1)] >= seats) continue;
            if (exit_used[static_cast<std::size_t>(path.divergence_point - 1)] >= seats) continue;
            candidates.push_back(k);
        }
        if (candidates.empty())
            throw std::runtime_error("lattice sampling could not place all turn units");
        const int pick = candidates[std::uniform_int_distribution<std::size_t>(
            0, candidates.size() - 1)(rng)];
        const Path& path = paths.paths[static_cast<std::size_t>(paths.straight_count() + pick)];
        ++turn[static_cast<std::size_t>(pick)];
        ++lane_used[static_cast<std::size_t>(path.entry_lane - 1)];
        ++exit_used[static_cast<std::size_t>(path.divergence_point - 1)];
    }

    std::vector<long> straight(static_cast<std::size_t>(half), 0);
    {
        long remaining = straight_units;
        const long innermost = std::min<long>(remaining, seats);
        straight[static_cast<std::size_t>(half - 1)] = innermost;
        lane_used[static_cast<std::size_t>(half - 1)] += innermost;
        remaining -= innermost;
        while (remaining > 0) {
            std::vector<int> open;
            for (int lane = 1; lane < half; ++lane)
                if (lane_used[static_cast<std::size_t>(lane - 1)] < seats) open.push_back(lane);
            if (open.empty())
                throw std::runtime_error("lattice sampling could not place all straight units");
            const int lane = open[std::uniform_int_distribution<std::size_t>(0, open.size() - 1)(rng)];
            ++straight[static_cast<std::size_t>(lane - 1)];
            ++lane_used[static_cast<std::size_t>(lane - 1)];
            --remaining;
        }
    }

    LatticeSample sample;
    sample.demand = Demand{static_cast<double>(straight_units) / units, f_int_ent};
    sample.decision.shares.reserve(static_cast<std::size_t>(paths.total()));
    for (int lane = 1; lane <= half; ++lane)
        sample.decision.shares.push_back(static_cast<double>(straight[static_cast<std::size_t>(lane - 1)]) / units);
    for (int k = 0; k < paths.curved_count(); ++k)
        sample.decision.shares.push_back(static_cast<double>(turn[static_cast<std::size_t>(k)]) / units);
    sample.decision.free_straight.assign(static_cast<std::size_t>(std::max(0, config.K_s - 3)), 0.0);
    sample.decision.free_curved.assign(static_cast<std::size_t>(std::max(0, config.K_c - 3)), 0.0);
    return sample;
}

}  // namespace aircross
