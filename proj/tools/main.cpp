// Command-line front end: optimize one operating point, sweep the clearance
// band or the demand mix, trace the flow/power trade-off curve, or realize a
// schedule vehicle-by-vehicle and check every separation rule.
#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "aircross/config.hpp"
#include "aircross/geometry.hpp"
#include "aircross/io.hpp"
#include "aircross/metrics.hpp"
#include "aircross/optimizer.hpp"
#include "aircross/platoon.hpp"
#include "aircross/simulator.hpp"

namespace {

using namespace aircross;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitNotConverged = 3;
constexpr int kExitViolation = 4;

IntersectionConfig load_config(const std::string& path) {
    IntersectionConfig config;
    if (!path.empty()) config = config_from_file(KeyValueFile::load(path));
    config.validate();
    return config;
}

// Writes through `emit` to the given file, or to stdout when no path is set.
template <typename Emit>
void with_output(const std::string& path, Emit&& emit) {
    if (path.empty()) {
        emit(std::cout);
        return;
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    emit(out);
}

// Runs fn(0..n-1) on up to `jobs` threads.  Each job is independent; any
// exception is rethrown on the calling thread.
template <typename Fn>
void parallel_for(int jobs, int n, Fn&& fn) {
    jobs = std::max(1, std::min(jobs, n));
    if (jobs == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(jobs));
    for (int t = 0; t < jobs; ++t) {
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (std::thread& worker : pool) worker.join();
    if (error) std::rethrow_exception(error);
}

struct CommonArgs {
    std::string config_path;
    std::string out_path;
    std::string stamp = "(unset)";
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "flat key = value config file");
    cmd->add_option("--out", args.out_path, "output file (default: stdout)");
    cmd->add_option("--stamp", args.stamp, "provenance timestamp string");
}

int run_optimize(const CommonArgs& common, double alpha, double d_s, double f_ent, int max_evals,
                 bool share_only) {
    const IntersectionConfig config = load_config(common.config_path);
    const PathSet paths = enumerate_paths(build_intersection(config));
    const Demand demand{d_s, f_ent};
    OptimizeOptions options;
    options.max_evals = max_evals;
    options.freeze_trajectories = share_only;
    const Solution solution = optimize(config, demand, alpha, paths, options);
    with_output(common.out_path, [&](std::ostream& out) {
        write_solution(out, config, paths, demand, solution, common.stamp);
    });
    return solution.converged ? kExitOk : kExitNotConverged;
}

int run_pareto(const CommonArgs& common, double d_s, double f_ent,
               std::vector<double> alphas, int jobs) {
    const IntersectionConfig config = load_config(common.config_path);
    const PathSet paths = enumerate_paths(build_intersection(config));
    const Demand demand{d_s, f_ent};
    if (alphas.empty())
        alphas = {0.9, 0.94, 0.96, 0.98, 0.9845, 0.99, 0.994, 0.998, 0.999};

    std::vector<ParetoPoint> points(alphas.size());
    parallel_for(jobs, static_cast<int>(alphas.size()), [&](int i) {
        const Solution solution =
            optimize(config, demand, alphas[static_cast<std::size_t>(i)], paths);
        points[static_cast<std::size_t>(i)] = {alphas[static_cast<std::size_t>(i)],
                                               solution.breakdown.flow, solution.breakdown.power,
                                               solution.breakdown.objective, solution.converged};
    });
    with_output(common.out_path,
                [&](std::ostream& out) { write_pareto_table(out, points, common.stamp); });
    const bool all_converged =
        std::all_of(points.begin(), points.end(), [](const ParetoPoint& p) { return p.converged; });
    return all_converged ? kExitOk : kExitNotConverged;
}

int run_sweep_guard(const CommonArgs& common, double d_s, double alpha,
                    std::vector<double> fractions, std::optional<double> f_ent) {
    const IntersectionConfig config = load_config(common.config_path);
    if (fractions.empty()) fractions = {0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3};
    const std::vector<GuardSweepRow> rows = sweep_guard_band(config, d_s, alpha, fractions, f_ent);
    with_output(common.out_path,
                [&](std::ostream& out) { write_guard_table(out, rows, common.stamp); });
    const bool all_converged = std::all_of(rows.begin(), rows.end(),
                                           [](const GuardSweepRow& r) { return r.converged; });
    return all_converged ? kExitOk : kExitNotConverged;
}

int run_sweep_demand(const CommonArgs& common, double alpha, const std::string& level_name,
                     std::vector<double> grid, int jobs) {
    const IntersectionConfig config = load_config(common.config_path);
    TrafficLevel level;
    if (level_name == "medium") {
        level = TrafficLevel::Medium;
    } else if (level_name == "heavy") {
        level = TrafficLevel::Heavy;
    } else {
        throw std::invalid_argument("--level must be 'medium' or 'heavy'");
    }
    if (grid.empty())
        for (int i = 0; i <= 10; ++i) grid.push_back(i / 10.0);

    // Each grid point is independent; run them in parallel and reassemble.
    std::vector<DemandSweepRow> rows(grid.size());
    parallel_for(jobs, static_cast<int>(grid.size()), [&](int i) {
        const double value = grid[static_cast<std::size_t>(i)];
        rows[static_cast<std::size_t>(i)] =
            sweep_demand(config, alpha, level, std::span<const double>{&value, 1}).front();
    });
    with_output(common.out_path,
                [&](std::ostream& out) { write_demand_table(out, rows, common.stamp); });
    const bool all_converged = std::all_of(rows.begin(), rows.end(),
                                           [](const DemandSweepRow& r) { return r.converged; });
    return all_converged ? kExitOk : kExitNotConverged;
}

int run_simulate(const CommonArgs& common, const std::string& solution_path, double d_s,
                 double f_ent, std::uint64_t seed, bool use_seed, int cycles, bool no_spacing,
                 const std::string& trace_path, const std::string& events_path, double alpha) {
    IntersectionConfig config;
    DecisionVector decision;
    Demand demand;
    std::optional<std::uint64_t> seed_used;

    if (!solution_path.empty()) {
        const StoredSolution stored = read_solution(KeyValueFile::load(solution_path));
        config = stored.config;
        config.validate();
        decision = stored.decision;
        demand = stored.demand;
        alpha = stored.alpha;
    } else {
        config = load_config(common.config_path);
        const PathSet paths = enumerate_paths(build_intersection(config));
        const std::uint64_t chosen = use_seed ? seed : 1;
        LatticeSample sample = random_lattice_decision(config, paths, d_s, f_ent, chosen);
        decision = std::move(sample.decision);
        demand = sample.demand;
        seed_used = chosen;
    }

    const PathSet paths = enumerate_paths(build_intersection(config));

    // A stored operating point may have been edited or produced elsewhere;
    // refuse to realize one that fails any feasibility margin.
    if (!solution_path.empty()) {
        const FeasibilityReport feas = assess_feasibility(config, demand, paths, decision);
        if (!feas.feasible(1e-6)) {
            with_output(common.out_path, [&](std::ostream& out) {
                out << "# infeasible operating point: " << solution_path << "\n";
                out << "# worst margin = " << format_number(feas.min_margin()) << "\n";
                out << "\n# feasibility margins\n";
                for (const ConstraintMargin& entry : feas.entries)
                    out << entry.name << " = " << format_number(entry.margin) << "\n";
            });
            return kExitValidation;
        }
    }

    SimOptions options;
    options.window_cycles = cycles;
    options.spacing_enabled = !no_spacing;
    options.trace_samples_per_step = trace_path.empty() ? 0 : 64;
    const SimulationResult result = simulate(config, paths, decision, demand, options);

    // Analytic indices at the realized shares, so integer rounding of the
    // schedule does not enter the comparison.
    double realized_ds = 0.0;
    for (int lane = 1; lane <= paths.half(); ++lane)
        realized_ds += result.realized_shares[static_cast<std::size_t>(paths.straight_index(lane))];
    const Demand realized_demand{std::min(1.0, realized_ds), demand.f_int_ent};
    const TrajectoryPolynomial straight =
        eliminate_boundary_straight(decision.free_straight, config.l_e(), config.delta_t);
    const TrajectoryPolynomial curved =
        eliminate_boundary_curved(decision.free_curved, config.l_e(), config.delta_t);
    const ObjectiveBreakdown analytic = evaluate_objective(
        config, paths, result.realized_shares, realized_demand, alpha, straight, curved);

    with_output(common.out_path, [&](std::ostream& out) {
        write_simulation_report(out, result, paths, analytic.flow, analytic.power, common.stamp,
                                seed_used);
    });
    if (!trace_path.empty())
        with_output(trace_path, [&](std::ostream& out) { write_trace(out, result.trace); });
    if (!events_path.empty())
        with_output(events_path, [&](std::ostream& out) { write_event_log(out, result.events); });

    return result.separation.clean() ? kExitOk : kExitViolation;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"rhythmic-grid intersection planner and checker"};
    app.require_subcommand(1);

    CommonArgs opt_common, pareto_common, guard_common, demand_common, sim_common;

    // optimize
    auto* cmd_optimize =
        app.add_subcommand("optimize", "solve one operating point and write it out");
    add_common(cmd_optimize, opt_common);
    double opt_alpha = 0.9845, opt_ds = 0.5, opt_fent = 3.0;
    int opt_evals = 500;
    bool opt_share_only = false;
    cmd_optimize->add_option("--alpha", opt_alpha, "flow-vs-power weight in [0, 1]");
    cmd_optimize->add_option("--ds", opt_ds, "straight fraction of entry demand in [0, 1]");
    cmd_optimize->add_option("--fent", opt_fent, "direction entry flow (veh/s)");
    cmd_optimize->add_option("--max-evals", opt_evals, "objective evaluation budget");
    cmd_optimize->add_flag("--share-only", opt_share_only,
                           "hold both profiles at their baseline shapes");

    // pareto
    auto* cmd_pareto =
        app.add_subcommand("pareto", "sweep the objective weight to trace the trade-off curve");
    add_common(cmd_pareto, pareto_common);
    double par_ds = 0.5, par_fent = 3.0;
    int par_jobs = 1;
    std::vector<double> par_alphas;
    cmd_pareto->add_option("--ds", par_ds, "straight fraction of entry demand");
    cmd_pareto->add_option("--fent", par_fent, "direction entry flow (veh/s)");
    cmd_pareto->add_option("--alphas", par_alphas, "objective weights to solve")->delimiter(',');
    cmd_pareto->add_option("--jobs", par_jobs, "parallel solves");

    // sweep-guard
    auto* cmd_guard = app.add_subcommand(
        "sweep-guard", "grow the block clearance band and track seats, caps, and the objective");
    add_common(cmd_guard, guard_common);
    double guard_ds = 0.5, guard_alpha = 0.9845;
    double guard_fent = -1.0;
    std::vector<double> guard_fractions;
    cmd_guard->add_option("--ds", guard_ds, "straight fraction of entry demand");
    cmd_guard->add_option("--alpha", guard_alpha, "flow-vs-power weight");
    cmd_guard->add_option("--fractions", guard_fractions,
                          "clearance band as a fraction of edge length, per row")
        ->delimiter(',');
    cmd_guard->add_option("--fent", guard_fent,
                          "fixed entry flow (veh/s); default is 90% of the tightest capacity");

    // sweep-demand
    auto* cmd_demand = app.add_subcommand(
        "sweep-demand", "sweep the straight/turn demand mix at a fixed traffic level");
    add_common(cmd_demand, demand_common);
    double demand_alpha = 0.9845;
    std::string demand_level = "medium";
    std::vector<double> demand_grid;
    int demand_jobs = 1;
    cmd_demand->add_option("--alpha", demand_alpha, "flow-vs-power weight");
    cmd_demand->add_option("--level", demand_level, "'medium' (50% capacity) or 'heavy' (95%)");
    cmd_demand->add_option("--ds-grid", demand_grid, "straight fractions to solve")
        ->delimiter(',');
    cmd_demand->add_option("--jobs", demand_jobs, "parallel solves");

    // simulate
    auto* cmd_sim = app.add_subcommand(
        "simulate", "realize a schedule vehicle-by-vehicle and run every separation check");
    add_common(cmd_sim, sim_common);
    std::string sim_solution, sim_trace, sim_events;
    double sim_ds = 0.5, sim_fent = 3.0, sim_alpha = 0.9845;
    std::uint64_t sim_seed = 1;
    int sim_cycles = 25;
    bool sim_no_spacing = false;
    cmd_sim->add_option("--solution", sim_solution, "replay a stored operating-point file");
    cmd_sim->add_option("--ds", sim_ds, "straight fraction target for the sampled point");
    cmd_sim->add_option("--fent", sim_fent, "direction entry flow (veh/s); times 4*delta_t must be integral");
    auto* seed_opt = cmd_sim->add_option("--seed", sim_seed, "RNG seed for the sampled point");
    cmd_sim->add_option("--cycles", sim_cycles, "schedule window in 4*delta_t cycles");
    cmd_sim->add_flag("--no-spacing", sim_no_spacing,
                      "drop the alternating-slot rule on oncoming rows (violations expected)");
    cmd_sim->add_option("--trace", sim_trace, "write a position trace (64 samples per step) here");
    cmd_sim->add_option("--events", sim_events, "write the node-crossing event log here");
    cmd_sim->add_option("--alpha", sim_alpha, "weight used for the analytic comparison");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitValidation;
    }

    try {
        if (cmd_optimize->parsed())
            return run_optimize(opt_common, opt_alpha, opt_ds, opt_fent, opt_evals,
                                opt_share_only);
        if (cmd_pareto->parsed())
            return run_pareto(pareto_common, par_ds, par_fent, par_alphas, par_jobs);
        if (cmd_guard->parsed())
            return run_sweep_guard(guard_common, guard_ds, guard_alpha, guard_fractions,
                                   guard_fent >= 0.0 ? std::optional<double>(guard_fent)
                                                     : std::nullopt);
        if (cmd_demand->parsed())
            return run_sweep_demand(demand_common, demand_alpha, demand_level, demand_grid,
                                    demand_jobs);
        if (cmd_sim->parsed())
            return run_simulate(sim_common, sim_solution, sim_ds, sim_fent, sim_seed,
                                seed_opt->count() > 0, sim_cycles, sim_no_spacing, sim_trace,
                                sim_events, sim_alpha);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    return kExitOk;
}
