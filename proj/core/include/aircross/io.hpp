#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "aircross/config.hpp"
#include "aircross/metrics.hpp"
#include "aircross/optimizer.hpp"
#include "aircross/simulator.hpp"

namespace aircross {

// Error with origin/line context from the flat-text readers.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Flat `key = value` text: one pair per line, '#' starts a comment, blank
// lines are ignored.  Entries keep file order; duplicate keys are rejected.
class KeyValueFile {
public:
    static KeyValueFile parse(std::istream& in, std::string origin = "<stream>");
    static KeyValueFile load(const std::filesystem::path& path);

    bool contains(std::string_view key) const { return find(key) != nullptr; }
    const std::string* find(std::string_view key) const;

    // Typed getters: the fallback answers when the key is absent; a present
    // but malformed value raises ParseError.
    std::string text(std::string_view key, std::string_view fallback) const;
    double number(std::string_view key, double fallback) const;
    int integer(std::string_view key, int fallback) const;

    // Values of prefix_0, prefix_1, ... up to the first missing index.
    std::vector<double> number_list(std::string_view prefix) const;

    const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }
    const std::string& origin() const { return origin_; }

private:
    std::vector<std::pair<std::string, std::string>> entries_;
    std::string origin_ = "<empty>";
};

// 17-significant-digit decimal: reading the text back reproduces the exact
// binary value.
std::string format_number(double value);

// Builds a config by applying recognized keys (the IntersectionConfig field
// names) over the defaults.  With strict = true, unknown keys raise
// ParseError so a typo cannot silently fall back to a default.
IntersectionConfig config_from_file(const KeyValueFile& file, bool strict = true);
void write_config(std::ostream& out, const IntersectionConfig& config);

// A stored operating point: everything needed to rebuild the trajectories
// and re-evaluate the objective bit-exactly, plus the config it was solved
// under.
struct StoredSolution {
    IntersectionConfig config;
    DecisionVector decision;
    Demand demand;
    double alpha = 0.0;
};

void write_solution(std::ostream& out, const IntersectionConfig& config, const PathSet& paths,
                    const Demand& demand, const Solution& solution, std::string_view stamp,
                    std::optional<std::uint64_t> seed = {});
StoredSolution read_solution(const KeyValueFile& file);

// Sweep tables: '#' header naming the columns, one space-separated row per
// entry, all numbers 17-digit.
void write_pareto_table(std::ostream& out, const std::vector<ParetoPoint>& points,
                        std::string_view stamp);
void write_guard_table(std::ostream& out, const std::vector<GuardSweepRow>& rows,
                       std::string_view stamp);
void write_demand_table(std::ostream& out, const std::vector<DemandSweepRow>& rows,
                        std::string_view stamp);

// Simulation summary with the measured-vs-analytic flow/power comparison and
// the separation outcome.
void write_simulation_report(std::ostream& out, const SimulationResult& result,
                             const PathSet& paths, double analytic_flow, double analytic_power,
                             std::string_view stamp, std::optional<std::uint64_t> seed = {});

// Node-crossing event log: `time vehicle column row axis arc`, axis is `ns`
// or `ew`, arc is 0/1.
void write_event_log(std::ostream& out, const std::vector<NodeCrossing>& events);

// Position trace: `time vehicle x y`, one row per sample.
void write_trace(std::ostream& out, const std::vector<TracePoint>& trace);

}  // namespace aircross
