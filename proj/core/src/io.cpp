#include "aircross/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

namespace aircross {

namespace {

constexpr std::string_view kToolVersion = "aircross 1.0.0";

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

[[noreturn]] void fail(const std::string& origin, int line, const std::string& what) {
    std::ostringstream msg;
    msg << origin;
    if (line > 0) msg << ":" << line;
    msg << ": " << what;
    throw ParseError(msg.str());
}

void write_provenance(std::ostream& out, std::string_view kind, std::string_view stamp,
                      std::optional<std::uint64_t> seed) {
    out << "# " << kind << "\n";
    out << "# tool = " << kToolVersion << "\n";
    out << "# stamp = " << (stamp.empty() ? std::string_view{"(unset)"} : stamp) << "\n";
    if (seed) out << "# seed = " << *seed << "\n";
}

}  // namespace

KeyValueFile KeyValueFile::parse(std::istream& in, std::string origin) {
    KeyValueFile file;
    file.origin_ = std::move(origin);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        std::string_view view = raw;
        if (const auto hash = view.find('#'); hash != std::string_view::npos)
            view = view.substr(0, hash);
        view = trim(view);
        if (view.empty()) continue;
        const auto eq = view.find('=');
        if (eq == std::string_view::npos)
            fail(file.origin_, line, "expected 'key = value'");
        const std::string_view key = trim(view.substr(0, eq));
        const std::string_view value = trim(view.substr(eq + 1));
        if (key.empty()) fail(file.origin_, line, "empty key");
        if (value.empty()) fail(file.origin_, line, "empty value for key '" + std::string(key) + "'");
        if (file.contains(key))
            fail(file.origin_, line, "duplicate key '" + std::string(key) + "'");
        file.entries_.emplace_back(std::string(key), std::string(value));
    }
    return file;
}

KeyValueFile KeyValueFile::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path.string() + "'");
    return parse(in, path.string());
}

const std::string* KeyValueFile::find(std::string_view key) const {
    for (const auto& [k, v] : entries_)
        if (k == key) return &v;
    return nullptr;
}

std::string KeyValueFile::text(std::string_view key, std::string_view fallback) const {
    const std::string* value = find(key);
    return value ? *value : std::string(fallback);
}

double KeyValueFile::number(std::string_view key, double fallback) const {
    const std::string* value = find(key);
    if (!value) return fallback;
    double out = 0.0;
    const char* first = value->data();
    const char* last = first + value->size();
    const auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc{} || ptr != last)
        fail(origin_, 0, "key '" + std::string(key) + "': '" + *value + "' is not a number");
    return out;
}

int KeyValueFile::integer(std::string_view key, int fallback) const {
    const std::string* value = find(key);
    if (!value) return fallback;
    int out = 0;
    const char* first = value->data();
    const char* last = first + value->size();
    const auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc{} || ptr != last)
        fail(origin_, 0, "key '" + std::string(key) + "': '" + *value + "' is not an integer");
    return out;
}

std::vector<double> KeyValueFile::number_list(std::string_view prefix) const {
    std::vector<double> values;
    for (int i = 0;; ++i) {
        const std::string key = std::string(prefix) + "_" + std::to_string(i);
        if (!contains(key)) break;
        values.push_back(number(key, 0.0));
    }
    return values;
}

std::string format_number(double value) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.17g", value);
    return buffer;
}

IntersectionConfig config_from_file(const KeyValueFile& file, bool strict) {
    IntersectionConfig config;
    struct NumberField {
        std::string_view key;
        double IntersectionConfig::* member;
    };
    static constexpr NumberField kNumbers[] = {
        {"l_c", &IntersectionConfig::l_c},
        {"delta_t", &IntersectionConfig::delta_t},
        {"l_g", &IntersectionConfig::l_g},
        {"l_v", &IntersectionConfig::l_v},
        {"d_f_min", &IntersectionConfig::d_f_min},
        {"rho_ent", &IntersectionConfig::rho_ent},
        {"v_max", &IntersectionConfig::v_max},
        {"x2_max", &IntersectionConfig::x2_max},
        {"x3_max", &IntersectionConfig::x3_max},
        {"th2_max", &IntersectionConfig::th2_max},
        {"th3_max", &IntersectionConfig::th3_max},
        {"drag_coeff", &IntersectionConfig::drag_coeff},
        {"mass", &IntersectionConfig::mass},
        {"l_e_min", &IntersectionConfig::l_e_min},
    };
    for (const NumberField& field : kNumbers)
        config.*(field.member) = file.number(field.key, config.*(field.member));
    config.n_c = file.integer("n_c", config.n_c);
    config.K_s = file.integer("K_s", config.K_s);
    config.K_c = file.integer("K_c", config.K_c);

    if (strict) {
        for (const auto& [key, value] : file.entries()) {
            const bool known =
                std::any_of(std::begin(kNumbers), std::end(kNumbers),
                            [&](const NumberField& field) { return field.key == key; }) ||
                key == "n_c" || key == "K_s" || key == "K_c";
            if (!known)
                throw ParseError(file.origin() + ": unknown config key '" + key + "'");
        }
    }
    return config;
}

void write_config(std::ostream& out, const IntersectionConfig& config) {
    out << "l_c = " << format_number(config.l_c) << "\n";
    out << "n_c = " << config.n_c << "\n";
    out << "delta_t = " << format_number(config.delta_t) << "\n";
    out << "l_g = " << format_number(config.l_g) << "\n";
    out << "l_v = " << format_number(config.l_v) << "\n";
    out << "d_f_min = " << format_number(config.d_f_min) << "\n";
    out << "rho_ent = " << format_number(config.rho_ent) << "\n";
    out << "v_max = " << format_number(config.v_max) << "\n";
    out << "x2_max = " << format_number(config.x2_max) << "\n";
    out << "x3_max = " << format_number(config.x3_max) << "\n";
    out << "th2_max = " << format_number(config.th2_max) << "\n";
    out << "th3_max = " << format_number(config.th3_max) << "\n";
    out << "drag_coeff = " << format_number(config.drag_coeff) << "\n";
    out << "mass = " << format_number(config.mass) << "\n";
    out << "K_s = " << config.K_s << "\n";
    out << "K_c = " << config.K_c << "\n";
    out << "l_e_min = " << format_number(config.l_e_min) << "\n";
}

void write_solution(std::ostream& out, const IntersectionConfig& config, const PathSet& paths,
                    const Demand& demand, const Solution& solution, std::string_view stamp,
                    std::optional<std::uint64_t> seed) {
    write_provenance(out, "operating point", stamp, seed);
    out << "\n# config\n";
    write_config(out, config);

    out << "\n# demand and objective weight\n";
    out << "d_s = " << format_number(demand.d_s) << "\n";
    out << "f_int_ent = " << format_number(demand.f_int_ent) << "\n";
    out << "alpha = " << format_number(solution.breakdown.alpha) << "\n";

    out << "\n# outcome\n";
    out << "flow = " << format_number(solution.breakdown.flow) << "\n";
    out << "power = " << format_number(solution.breakdown.power) << "\n";
    out << "objective = " << format_number(solution.breakdown.objective) << "\n";
    out << "converged = " << (solution.converged ? 1 : 0) << "\n";
    out << "iterations = " << solution.iterations << "\n";
    out << "min_margin = " << format_number(solution.feasibility.min_margin()) << "\n";

    out << "\n# lane shares (straight lanes outermost..innermost, then turn paths)\n";
    for (std::size_t p = 0; p < solution.decision.shares.size(); ++p) {
        const Path& path = paths.paths[p];
        out << "share_" << p << " = " << format_number(solution.decision.shares[p]);
        if (path.curved())
            out << "  # turn: lane " << path.entry_lane << ", divergence " << path.divergence_point;
        else
            out << "  # straight: lane " << path.entry_lane;
        out << "\n";
    }

    out << "\n# free profile coefficients (dimensionless tail, straight then turn)\n";
    for (std::size_t i = 0; i < solution.decision.free_straight.size(); ++i)
        out << "free_straight_" << i << " = " << format_number(solution.decision.free_straight[i])
            << "\n";
    for (std::size_t i = 0; i < solution.decision.free_curved.size(); ++i)
        out << "free_curved_" << i << " = " << format_number(solution.decision.free_curved[i])
            << "\n";

    out << "\n# feasibility margins\n";
    for (const ConstraintMargin& entry : solution.feasibility.entries)
        out << "# margin " << entry.name << " = " << format_number(entry.margin) << "\n";
}

StoredSolution read_solution(const KeyValueFile& file) {
    StoredSolution stored;
    stored.config = config_from_file(file, /*strict=*/false);
    stored.demand.d_s = file.number("d_s", stored.demand.d_s);
    stored.demand.f_int_ent = file.number("f_int_ent", stored.demand.f_int_ent);
    stored.alpha = file.number("alpha", stored.alpha);
    stored.decision.shares = file.number_list("share");
    stored.decision.free_straight = file.number_list("free_straight");
    stored.decision.free_curved = file.number_list("free_curved");
    if (stored.decision.shares.empty())
        throw ParseError(file.origin() + ": no share_<i> keys; not an operating-point file");
    return stored;
}

void write_pareto_table(std::ostream& out, const std::vector<ParetoPoint>& points,
                        std::string_view stamp) {
    write_provenance(out, "weight sweep", stamp, {});
    out << "# columns: alpha flow power objective converged\n";
    for (const ParetoPoint& point : points)
        out << format_number(point.alpha) << " " << format_number(point.flow) << " "
            << format_number(point.power) << " " << format_number(point.objective) << " "
            << (point.converged ? 1 : 0) << "\n";
}

void write_guard_table(std::ostream& out, const std::vector<GuardSweepRow>& rows,
                       std::string_view stamp) {
    write_provenance(out, "clearance-band sweep", stamp, {});
    out << "# columns: fraction l_g seats capacity entry_flow flow power objective converged\n";
    for (const GuardSweepRow& row : rows)
        out << format_number(row.fraction) << " " << format_number(row.l_g) << " " << row.seats
            << " " << format_number(row.capacity) << " " << format_number(row.entry_flow) << " "
            << format_number(row.flow) << " " << format_number(row.power) << " "
            << format_number(row.objective) << " " << (row.converged ? 1 : 0) << "\n";
}

void write_demand_table(std::ostream& out, const std::vector<DemandSweepRow>& rows,
                        std::string_view stamp) {
    write_provenance(out, "demand-mix sweep", stamp, {});
    out << "# columns: d_s flow power objective innermost_share lane_cap spill converged\n";
    for (const DemandSweepRow& row : rows)
        out << format_number(row.d_s) << " " << format_number(row.flow) << " "
            << format_number(row.power) << " " << format_number(row.objective) << " "
            << format_number(row.innermost_share) << " " << format_number(row.lane_cap) << " "
            << format_number(row.spill) << " " << (row.converged ? 1 : 0) << "\n";
}

void write_simulation_report(std::ostream& out, const SimulationResult& result,
                             const PathSet& paths, double analytic_flow, double analytic_power,
                             std::string_view stamp, std::optional<std::uint64_t> seed) {
    write_provenance(out, "simulation report", stamp, seed);

    int straights = 0, turners = 0, mirrors = 0;
    for (const SimVehicle& vehicle : result.vehicles) {
        switch (vehicle.vclass) {
            case VehicleClass::Straight: ++straights; break;
            case VehicleClass::Turner: ++turners; break;
            case VehicleClass::Mirror: ++mirrors; break;
        }
    }
    out << "window_seconds = " << format_number(result.window_seconds) << "\n";
    out << "vehicles_straight = " << straights << "\n";
    out << "vehicles_turning = " << turners << "\n";
    out << "vehicles_mirror = " << mirrors << "\n";
    out << "landing_deferrals = " << result.landing_deferrals << "\n";

    out << "\n# measured vs analytic (analytic evaluated at the realized shares)\n";
    out << "empirical_flow = " << format_number(result.empirical_flow) << "\n";
    out << "analytic_flow = " << format_number(analytic_flow) << "\n";
    out << "flow_rel_error = "
        << format_number(analytic_flow != 0.0
                             ? (result.empirical_flow - analytic_flow) / analytic_flow
                             : 0.0)
        << "\n";
    out << "empirical_power = " << format_number(result.empirical_power) << "\n";
    out << "analytic_power = " << format_number(analytic_power) << "\n";
    out << "power_rel_error = "
        << format_number(analytic_power != 0.0
                             ? (result.empirical_power - analytic_power) / analytic_power
                             : 0.0)
        << "\n";

    out << "\n# realized entry rates (veh/s per canonical lane)\n";
    for (std::size_t lane = 0; lane < result.lane_entry_rates.size(); ++lane)
        out << "lane_rate_" << (lane + 1) << " = " << format_number(result.lane_entry_rates[lane])
            << "\n";

    out << "\n# realized path shares\n";
    for (std::size_t p = 0; p < result.realized_shares.size(); ++p) {
        const Path& path = paths.paths[p];
        out << "realized_share_" << p << " = " << format_number(result.realized_shares[p]);
        if (path.curved())
            out << "  # turn: lane " << path.entry_lane << ", divergence " << path.divergence_point;
        else
            out << "  # straight: lane " << path.entry_lane;
        out << "\n";
    }

    const SeparationReport& sep = result.separation;
    out << "\n# separation\n";
    out << "pair_checks = " << sep.pair_checks << "\n";
    out << "violations = " << sep.violations.size() << "\n";
    out << "min_headway_margin = " << format_number(sep.min_headway_margin) << "\n";
    out << "min_core_margin = " << format_number(sep.min_core_margin) << "\n";
    out << "min_disc_margin = " << format_number(sep.min_disc_margin) << "\n";
    out << "min_node_offset = " << format_number(sep.min_node_offset) << "\n";
    for (const SeparationViolation& violation : sep.violations)
        out << "# violation " << violation.check << " t=" << format_number(violation.time)
            << " vehicles=" << violation.vehicle_a << "," << violation.vehicle_b
            << " value=" << format_number(violation.value)
            << " limit=" << format_number(violation.limit) << " : " << violation.detail << "\n";
}

void write_event_log(std::ostream& out, const std::vector<NodeCrossing>& events) {
    out << "# columns: time vehicle column row axis arc\n";
    for (const NodeCrossing& event : events)
        out << format_number(event.time) << " " << event.vehicle << " " << event.column << " "
            << event.row << " " << (event.ew ? "ew" : "ns") << " " << (event.arc ? 1 : 0) << "\n";
}

void write_trace(std::ostream& out, const std::vector<TracePoint>& trace) {
    out << "# columns: time vehicle x y\n";
    for (const TracePoint& point : trace)
        out << format_number(point.time) << " " << point.vehicle << " " << format_number(point.x)
            << " " << format_number(point.y) << "\n";
}

}  // namespace aircross
