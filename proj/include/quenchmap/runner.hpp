#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "quenchmap/core.hpp"
#include "quenchmap/maps.hpp"
#include "quenchmap/parallel.hpp"
#include "quenchmap/propagators.hpp"
#include "quenchmap/scenario.hpp"
#include "quenchmap/states.hpp"
#include "quenchmap/verify.hpp"

namespace quenchmap {

enum class MethodKind { map, split_step, projection };

inline const char* method_name(MethodKind m) {
    switch (m) {
        case MethodKind::map: return "map";
        case MethodKind::split_step: return "split";
        case MethodKind::projection: return "projection";
    }
    return "?";
}

inline MethodKind parse_method(const std::string& name) {
    if (name == "map") return MethodKind::map;
    if (name == "split_step" || name == "split") return MethodKind::split_step;
    if (name == "projection") return MethodKind::projection;
    throw validation_error("unknown method '" + name +
                           "' (expected map, split or projection)");
}

struct RunOptions {
    double split_dt = 1e-4;      // compare/density split-step resolution
    std::size_t n_basis = 64;    // compare/density projection basis size
    std::uint64_t seed = 20240817;
    double accuracy = 1e-4;      // compare tolerance
};

inline constexpr double bench_certify_dt = 1e-5;
inline constexpr double bench_dt_floor = 1e-6;

// The closed-form side of a scenario: the normalized initial superposition
// and one exact evaluator per era, both on the absolute scenario clock.
struct ScenarioRuntime {
    ScenarioConfig cfg;
    SolutionEvaluator initial;
    SolutionEvaluator pre_state;
    SolutionEvaluator post_state;

    const SolutionEvaluator& state_at(double t) const {
        return t < cfg.quench_time ? pre_state : post_state;
    }
    std::optional<TrapSpec> era_trap(double t) const {
        return t < cfg.quench_time ? cfg.pre_trap : cfg.post_trap;
    }
};

inline ScenarioRuntime build_runtime(const ScenarioConfig& cfg) {
    ScenarioRuntime rt;
    rt.cfg = cfg;
    rt.initial = superposition(cfg.packets, cfg.params, cfg.grid);

    if (cfg.pre_trap) {
        rt.pre_state = map_free_to_trapped(rt.initial, *cfg.pre_trap,
                                           MapParams::natural(*cfg.pre_trap, cfg.params),
                                           cfg.params);
    } else {
        rt.pre_state = rt.initial;
    }

    const double q = cfg.quench_time;
    if (cfg.post_trap) {
        if (cfg.pre_trap) {
            if (std::abs(cfg.pre_trap->k - cfg.post_trap->k) <=
                1e-12 * std::abs(cfg.pre_trap->k)) {
                rt.post_state = rt.pre_state;
            } else {
                const auto at_quench = shift_time(rt.pre_state, q);
                rt.post_state = shift_time(
                    map_trapped_to_trapped(at_quench, *cfg.pre_trap, *cfg.post_trap,
                                           cfg.params),
                    -q);
            }
        } else {
            const auto at_quench = shift_time(rt.initial, q);
            rt.post_state = shift_time(
                map_free_to_trapped(at_quench, *cfg.post_trap,
                                    MapParams::natural(*cfg.post_trap, cfg.params),
                                    cfg.params),
                -q);
        }
    } else {
        if (cfg.pre_trap) {
            const auto at_quench = shift_time(rt.pre_state, q);
            rt.post_state = shift_time(
                map_trapped_to_free(at_quench, *cfg.pre_trap,
                                    MapParams::natural(*cfg.pre_trap, cfg.params),
                                    cfg.params),
                -q);
        } else {
            rt.post_state = rt.initial;
        }
    }
    return rt;
}

struct NudgeRecord {
    double requested = 0.0;
    double used = 0.0;
};

// Requested times that sit on a map singularity are moved forward by
// 10*eps_singular/omega (at most a few times); every move is recorded and the
// same adjusted times feed every method so outputs stay row comparable.
inline std::vector<double> nudge_sample_times(const ScenarioRuntime& rt,
                                              std::vector<NudgeRecord>& log) {
    std::vector<double> times;
    times.reserve(rt.cfg.sample_times.size());
    const double probe_xi = rt.cfg.grid.point(rt.cfg.grid.n / 2);
    for (const double requested : rt.cfg.sample_times) {
        double used = requested;
        for (int attempt = 0;; ++attempt) {
            try {
                (void)rt.state_at(used).fn(probe_xi, used);
                break;
            } catch (const singular_time_error&) {
                if (attempt >= 8) throw;
                const auto trap = rt.era_trap(used);
                const double omega = trap ? trap->omega(rt.cfg.params) : 1.0;
                used += 10.0 * eps_singular / omega;
            }
        }
        if (used != requested) log.push_back({requested, used});
        times.push_back(used);
    }
    for (std::size_t i = 1; i < times.size(); ++i)
        if (!(times[i] > times[i - 1]))
            throw validation_error("sample times collide after singularity nudging");
    return times;
}

namespace detail {

inline std::string fmt_sci(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.16e", v);
    return buf;
}

inline std::string fmt_short(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_text_file(const std::filesystem::path& path,
                            const std::vector<std::string>& lines) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw error("cannot open '" + path.string() + "' for writing");
    for (const auto& line : lines) out << line << '\n';
}

inline std::string convention_line() {
    return "trapped-equation convention: psi_xixi + i*alpha*psi_tau - "
           "(k*alpha/(2*hbar))*xi^2*psi = 0 (alpha = 2M/hbar; unique sign choice "
           "passing the residual sign scan, see the residual command)";
}

inline void describe_scenario(const ScenarioRuntime& rt, const std::string& label,
                              std::vector<std::string>& lines) {
    const auto& cfg = rt.cfg;
    lines.push_back("scenario: " + label);
    lines.push_back("grid: [" + fmt_short(cfg.grid.x_min) + ", " + fmt_short(cfg.grid.x_max) +
                    ") n=" + std::to_string(cfg.grid.n));
    lines.push_back("packets: " + std::to_string(cfg.packets.size()));
    lines.push_back("pre_trap.k: " +
                    (cfg.pre_trap ? fmt_short(cfg.pre_trap->k) : std::string("none")));
    lines.push_back("post_trap.k: " +
                    (cfg.post_trap ? fmt_short(cfg.post_trap->k) : std::string("none")));
    lines.push_back("quench_time: " + fmt_short(cfg.quench_time));
}

inline void describe_nudges(const std::vector<NudgeRecord>& nudges,
                            std::vector<std::string>& lines) {
    if (nudges.empty()) {
        lines.push_back("sample-time nudges: none");
        return;
    }
    for (const auto& n : nudges)
        lines.push_back("sample-time nudge: requested " + fmt_sci(n.requested) + " -> used " +
                        fmt_sci(n.used) + " (singular map time)");
}

inline void require_numeric_times(const ScenarioRuntime& rt, const std::vector<double>& times,
                                  const char* what) {
    if (!times.empty() && times.front() < rt.cfg.quench_time)
        throw validation_error(std::string(what) +
                               ": sample times before quench_time are only supported by "
                               "the map method");
}

} // namespace detail

// Grid states at the given absolute times, computed by one of the three
// methods. The map route works at any non-singular time; the numeric routes
// start from the quench-instant state.
inline std::vector<GridState> compute_states(const ScenarioRuntime& rt, MethodKind method,
                                             const std::vector<double>& times,
                                             const RunOptions& opts) {
    const auto& cfg = rt.cfg;
    std::vector<GridState> out(times.size());
    switch (method) {
        case MethodKind::map: {
            parallel_for_index(times.size(), [&](std::size_t i) {
                out[i] = sample_slice(rt.state_at(times[i]), cfg.grid, times[i]);
            });
            break;
        }
        case MethodKind::split_step: {
            detail::require_numeric_times(rt, times, "split_step");
            GridState cur = sample_slice(rt.post_state, cfg.grid, cfg.quench_time);
            if (cfg.post_trap) {
                for (std::size_t i = 0; i < times.size(); ++i) {
                    cur = evolve_split_step(cur, times[i], opts.split_dt, *cfg.post_trap,
                                            cfg.params);
                    out[i] = cur;
                }
            } else {
                for (std::size_t i = 0; i < times.size(); ++i)
                    out[i] = evolve_free_spectral(cur, times[i], cfg.params);
            }
            break;
        }
        case MethodKind::projection: {
            detail::require_numeric_times(rt, times, "projection");
            if (!cfg.post_trap)
                throw validation_error(
                    "projection method needs a post-quench trap to supply the eigenbasis");
            const GridState at_quench = sample_slice(rt.post_state, cfg.grid, cfg.quench_time);
            const auto pc =
                project_onto_eigenbasis(at_quench, *cfg.post_trap, opts.n_basis, cfg.params);
            parallel_for_index(times.size(), [&](std::size_t i) {
                out[i] = evolve_projected(pc, times[i] - cfg.quench_time, cfg.grid,
                                          cfg.params);
                out[i].time = times[i];
            });
            break;
        }
    }
    return out;
}

struct DensityRun {
    MethodKind method = MethodKind::map;
    std::vector<double> times;
    std::vector<NudgeRecord> nudges;
    std::vector<GridState> states;
    std::filesystem::path csv_path;
    std::filesystem::path summary_path;
};

inline DensityRun run_density(const ScenarioRuntime& rt, MethodKind method,
                              const std::filesystem::path& out_dir,
                              const std::string& scenario_label, const RunOptions& opts) {
    std::filesystem::create_directories(out_dir);
    DensityRun run;
    run.method = method;
    run.times = nudge_sample_times(rt, run.nudges);
    run.states = compute_states(rt, method, run.times, opts);

    run.csv_path = out_dir / (std::string("density_") + method_name(method) + ".csv");
    {
        std::ofstream csv(run.csv_path, std::ios::binary);
        if (!csv) throw error("cannot open '" + run.csv_path.string() + "' for writing");
        csv << "time,x,re,im,density\n";
        char buf[256];
        for (std::size_t i = 0; i < run.states.size(); ++i) {
            const auto& st = run.states[i];
            for (std::size_t j = 0; j < st.grid.n; ++j) {
                const complex a = st.amplitudes[j];
                std::snprintf(buf, sizeof buf, "%.16e,%.16e,%.16e,%.16e,%.16e\n",
                              run.times[i], st.grid.point(j), a.real(), a.imag(),
                              std::norm(a));
                csv << buf;
            }
        }
    }

    std::vector<std::string> lines;
    lines.push_back("command: density");
    lines.push_back(std::string("method: ") + method_name(method));
    detail::describe_scenario(rt, scenario_label, lines);
    if (method == MethodKind::split_step)
        lines.push_back("split_dt: " + detail::fmt_short(opts.split_dt));
    if (method == MethodKind::projection)
        lines.push_back("n_basis: " + std::to_string(opts.n_basis));
    detail::describe_nudges(run.nudges, lines);
    lines.push_back(detail::convention_line());
    run.summary_path = out_dir / "summary.txt";
    detail::write_text_file(run.summary_path, lines);
    return run;
}

struct CompareRow {
    double time = 0.0;
    double l2_map_split = 0.0;
    double l2_map_proj = 0.0;
    double l2_split_proj = 0.0;
};

struct CompareRun {
    std::vector<double> times;
    std::vector<NudgeRecord> nudges;
    std::vector<CompareRow> rows;
    bool projection_available = false;
    double max_l2 = 0.0;
    bool within_accuracy = false;
    std::filesystem::path csv_path;
    std::filesystem::path summary_path;
};

inline CompareRun run_compare(const ScenarioRuntime& rt,
                              const std::filesystem::path& out_dir,
                              const std::string& scenario_label, const RunOptions& opts) {
    std::filesystem::create_directories(out_dir);
    CompareRun run;
    run.times = nudge_sample_times(rt, run.nudges);
    run.projection_available = rt.cfg.post_trap.has_value();

    const auto map_states = compute_states(rt, MethodKind::map, run.times, opts);
    const auto split_states = compute_states(rt, MethodKind::split_step, run.times, opts);
    std::vector<GridState> proj_states;
    if (run.projection_available)
        proj_states = compute_states(rt, MethodKind::projection, run.times, opts);

    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = 0; i < run.times.size(); ++i) {
        CompareRow row;
        row.time = run.times[i];
        row.l2_map_split = l2_distance(map_states[i], split_states[i]);
        row.l2_map_proj =
            run.projection_available ? l2_distance(map_states[i], proj_states[i]) : nan;
        row.l2_split_proj =
            run.projection_available ? l2_distance(split_states[i], proj_states[i]) : nan;
        run.max_l2 = std::max({run.max_l2, row.l2_map_split,
                               run.projection_available ? row.l2_map_proj : 0.0,
                               run.projection_available ? row.l2_split_proj : 0.0});
        run.rows.push_back(row);
    }
    run.within_accuracy = run.max_l2 <= opts.accuracy;

    run.csv_path = out_dir / "compare.csv";
    {
        std::ofstream csv(run.csv_path, std::ios::binary);
        if (!csv) throw error("cannot open '" + run.csv_path.string() + "' for writing");
        csv << "time,l2_map_split,l2_map_proj,l2_split_proj\n";
        char buf[256];
        for (const auto& row : run.rows) {
            std::snprintf(buf, sizeof buf, "%.16e,%.16e,%.16e,%.16e\n", row.time,
                          row.l2_map_split, row.l2_map_proj, row.l2_split_proj);
            csv << buf;
        }
    }

    std::vector<std::string> lines;
    lines.push_back("command: compare");
    detail::describe_scenario(rt, scenario_label, lines);
    lines.push_back("split_dt: " + detail::fmt_short(opts.split_dt));
    if (run.projection_available)
        lines.push_back("n_basis: " + std::to_string(opts.n_basis));
    else
        lines.push_back("projection: skipped (no post-quench trap; columns are nan)");
    lines.push_back("max pairwise l2: " + detail::fmt_sci(run.max_l2));
    lines.push_back("accuracy: " + detail::fmt_sci(opts.accuracy) +
                    (run.within_accuracy ? " (met)" : " (EXCEEDED)"));
    detail::describe_nudges(run.nudges, lines);
    lines.push_back(detail::convention_line());
    run.summary_path = out_dir / "summary.txt";
    detail::write_text_file(run.summary_path, lines);
    return run;
}

struct BenchEntry {
    MethodKind method = MethodKind::map;
    double wall_time_s = 0.0;
    double l2_error = 0.0;
    std::size_t n_times = 0;
};

struct BenchRun {
    std::vector<double> times;
    std::vector<NudgeRecord> nudges;
    double certification_l2 = 0.0;
    double split_dt_found = 0.0;
    std::size_t n_basis_found = 0;
    std::array<BenchEntry, 3> entries{};
    bool map_fastest = false;
    std::filesystem::path csv_path;
    std::filesystem::path summary_path;
};

namespace detail {

template <typename Fn>
inline double time_run(Fn&& fn) {
    using clock = std::chrono::steady_clock;
    fn(); // warm caches and allocators
    int reps = 1;
    for (;;) {
        const auto begin = clock::now();
        for (int r = 0; r < reps; ++r) fn();
        const std::chrono::duration<double> elapsed = clock::now() - begin;
        if (elapsed.count() >= 0.25 || reps >= 256) return elapsed.count() / reps;
        reps *= 4;
    }
}

inline double max_l2_against(const std::vector<GridState>& reference,
                             const std::vector<GridState>& candidate) {
    double worst = 0.0;
    for (std::size_t i = 0; i < reference.size(); ++i)
        worst = std::max(worst, l2_distance(reference[i], candidate[i]));
    return worst;
}

} // namespace detail

// Finds solver settings meeting the accuracy target, then times each method
// producing the states at every sample time. The reference is the map
// output, certified once against a fine split-step run. Timing loops are
// strictly serial.
inline BenchRun run_bench(const ScenarioRuntime& rt, double accuracy_target,
                          const std::filesystem::path& out_dir,
                          const std::string& scenario_label) {
    std::filesystem::create_directories(out_dir);
    const auto& cfg = rt.cfg;
    if (!cfg.post_trap)
        throw validation_error("bench needs a post-quench trap so all three methods apply");
    if (!(accuracy_target > 0.0) || !(accuracy_target < 1.0))
        throw validation_error("bench accuracy target must be in (0, 1)");

    BenchRun run;
    run.times = nudge_sample_times(rt, run.nudges);
    detail::require_numeric_times(rt, run.times, "bench");
    const TrapSpec trap = *cfg.post_trap;
    const double q = cfg.quench_time;

    std::vector<GridState> reference(run.times.size());
    parallel_for_index(run.times.size(), [&](std::size_t i) {
        reference[i] = sample_slice(rt.post_state, cfg.grid, run.times[i]);
    });

    const GridState at_quench = sample_slice(rt.post_state, cfg.grid, q);

    auto split_states_at = [&](double dt) {
        std::vector<GridState> states(run.times.size());
        GridState cur = at_quench;
        for (std::size_t i = 0; i < run.times.size(); ++i) {
            cur = evolve_split_step(cur, run.times[i], dt, trap, cfg.params);
            states[i] = cur;
        }
        return states;
    };

    run.certification_l2 = detail::max_l2_against(reference, split_states_at(bench_certify_dt));
    const double certify_bound = std::max(accuracy_target, 5e-9);
    if (run.certification_l2 > certify_bound)
        throw tolerance_error("bench reference certification failed: fine split-step run "
                              "differs from the map output by " +
                              detail::fmt_sci(run.certification_l2) + " > " +
                              detail::fmt_sci(certify_bound));

    // dt search: try two cheap resolutions, then extrapolate the observed
    // second-order error instead of walking a ladder of expensive runs.
    double split_err = 0.0;
    {
        const double span = run.times.back() - q;
        double dt_try = 2e-3;
        split_err = detail::max_l2_against(reference, split_states_at(dt_try));
        if (split_err > accuracy_target) {
            dt_try = 1e-3;
            split_err = detail::max_l2_against(reference, split_states_at(dt_try));
        }
        if (split_err > accuracy_target) {
            for (int attempt = 0; attempt < 2 && split_err > accuracy_target; ++attempt) {
                const double needed =
                    dt_try * std::sqrt(accuracy_target / split_err) * 0.8;
                if (needed < bench_dt_floor)
                    throw resource_limit_error(
                        "split-step cannot reach accuracy " +
                        detail::fmt_sci(accuracy_target) + ": required dt " +
                        detail::fmt_sci(needed) + " is below the floor " +
                        detail::fmt_sci(bench_dt_floor));
                if (span / needed > static_cast<double>(max_split_steps))
                    throw resource_limit_error(
                        "split-step cannot reach accuracy " +
                        detail::fmt_sci(accuracy_target) + " within the step cap");
                dt_try = needed;
                split_err = detail::max_l2_against(reference, split_states_at(dt_try));
            }
            if (split_err > accuracy_target)
                throw resource_limit_error("split-step accuracy search stalled at error " +
                                           detail::fmt_sci(split_err) + " for target " +
                                           detail::fmt_sci(accuracy_target));
        }
        run.split_dt_found = dt_try;
    }

    double proj_err = 0.0;
    {
        bool found = false;
        for (std::size_t n_basis : {8u, 16u, 32u, 64u, 128u, 256u, 512u}) {
            const auto pc = project_onto_eigenbasis(at_quench, trap, n_basis, cfg.params);
            std::vector<GridState> states(run.times.size());
            for (std::size_t i = 0; i < run.times.size(); ++i)
                states[i] = evolve_projected(pc, run.times[i] - q, cfg.grid, cfg.params);
            proj_err = detail::max_l2_against(reference, states);
            if (proj_err <= accuracy_target) {
                run.n_basis_found = n_basis;
                found = true;
                break;
            }
        }
        if (!found)
            throw resource_limit_error(
                "projection cannot reach accuracy " + detail::fmt_sci(accuracy_target) +
                " within the basis cap " + std::to_string(max_eigenstate_index) +
                " (best error " + detail::fmt_sci(proj_err) + ")");
    }

    std::vector<GridState> sink(run.times.size());
    const double wall_map = detail::time_run([&] {
        for (std::size_t i = 0; i < run.times.size(); ++i)
            sink[i] = sample_slice(rt.post_state, cfg.grid, run.times[i]);
    });
    const double wall_split = detail::time_run([&] {
        GridState cur = at_quench;
        for (std::size_t i = 0; i < run.times.size(); ++i) {
            cur = evolve_split_step(cur, run.times[i], run.split_dt_found, trap, cfg.params);
            sink[i] = cur;
        }
    });
    const double wall_proj = detail::time_run([&] {
        const auto pc =
            project_onto_eigenbasis(at_quench, trap, run.n_basis_found, cfg.params);
        for (std::size_t i = 0; i < run.times.size(); ++i) {
            sink[i] = evolve_projected(pc, run.times[i] - q, cfg.grid, cfg.params);
            sink[i].time = run.times[i];
        }
    });

    run.entries[0] = {MethodKind::map, wall_map, run.certification_l2, run.times.size()};
    run.entries[1] = {MethodKind::split_step, wall_split, split_err, run.times.size()};
    run.entries[2] = {MethodKind::projection, wall_proj, proj_err, run.times.size()};
    run.map_fastest = wall_map < wall_split && wall_map < wall_proj;

    run.csv_path = out_dir / "bench.csv";
    {
        std::ofstream csv(run.csv_path, std::ios::binary);
        if (!csv) throw error("cannot open '" + run.csv_path.string() + "' for writing");
        csv << "method,wall_time_s,l2_error,n_times\n";
        char buf[256];
        for (const auto& e : run.entries) {
            std::snprintf(buf, sizeof buf, "%s,%.16e,%.16e,%zu\n", method_name(e.method),
                          e.wall_time_s, e.l2_error, e.n_times);
            csv << buf;
        }
    }

    std::vector<std::string> lines;
    lines.push_back("command: bench");
    detail::describe_scenario(rt, scenario_label, lines);
    lines.push_back("accuracy_target: " + detail::fmt_sci(accuracy_target));
    lines.push_back("reference: map evaluation, certified against split-step dt=" +
                    detail::fmt_short(bench_certify_dt) + " (l2 " +
                    detail::fmt_sci(run.certification_l2) + ")");
    lines.push_back("split_dt found: " + detail::fmt_short(run.split_dt_found));
    lines.push_back("n_basis found: " + std::to_string(run.n_basis_found));
    for (const auto& e : run.entries)
        lines.push_back(std::string("wall_time ") + method_name(e.method) + ": " +
                        detail::fmt_sci(e.wall_time_s) + " s (l2 error " +
                        detail::fmt_sci(e.l2_error) + ")");
    lines.push_back(std::string("map fastest: ") + (run.map_fastest ? "yes" : "NO"));
    detail::describe_nudges(run.nudges, lines);
    lines.push_back(detail::convention_line());
    run.summary_path = out_dir / "summary.txt";
    detail::write_text_file(run.summary_path, lines);
    return run;
}

struct ResidualRun {
    ResidualReport free_report;
    std::optional<ResidualReport> trapped_report;
    std::optional<SignScanReport> scan;
    bool free_ok = false;
    bool trapped_ok = true;
    bool scan_ok = true;
    std::filesystem::path summary_path;
};

inline constexpr double residual_free_tol = 1e-7;
inline constexpr double residual_trapped_tol = 1e-6;

// PDE residual diagnostics on the scenario's closed-form evaluators, plus
// the four-way sign scan that pins the trapped-equation convention.
//
// Stencil steps follow the narrowest width the packets can squeeze to
// (sigma0, or hbar/(M omega sigma0) once a trap winds the phase), and probes
// are drawn where the state has support: in the deep exponential tails a
// relative residual measures only stencil truncation against the huge
// logarithmic derivative, not solution quality.
inline constexpr double residual_amp_floor = 1e-6;

inline ResidualRun run_residual(const ScenarioRuntime& rt,
                                const std::filesystem::path& out_dir,
                                const std::string& scenario_label, const RunOptions& opts) {
    std::filesystem::create_directories(out_dir);
    const auto& cfg = rt.cfg;
    std::mt19937_64 rng(opts.seed);

    double narrow = cfg.packets.front().packet.sigma0;
    for (const auto& p : cfg.packets) {
        narrow = std::min(narrow, p.packet.sigma0);
        for (const auto& trap : {cfg.pre_trap, cfg.post_trap})
            if (trap)
                narrow = std::min(narrow, cfg.params.hbar / (cfg.params.mass *
                                                             trap->omega(cfg.params) *
                                                             p.packet.sigma0));
    }
    const double free_time_scale = cfg.params.mass * narrow * narrow / cfg.params.hbar;
    const auto free_opts = residual_steps_for_free(narrow, free_time_scale);

    std::uniform_real_distribution<double> ux(cfg.grid.x_min / 4.0, cfg.grid.x_max / 4.0);
    std::uniform_real_distribution<double> ut(-3.0, 3.0);

    ResidualRun run;
    {
        // The initial superposition solves the free equation everywhere; for a
        // released scenario the post-era evaluator is a more interesting free
        // solution, so prefer it when the post era is free.
        const bool post_free = !cfg.post_trap.has_value();
        const auto& ev = post_free ? rt.post_state : rt.initial;
        std::uniform_real_distribution<double> utf =
            post_free && cfg.pre_trap
                ? std::uniform_real_distribution<double>(cfg.quench_time,
                                                         cfg.quench_time + 3.0)
                : ut;
        std::vector<ProbePoint> probes;
        probes.reserve(100);
        std::size_t budget = 100000;
        while (probes.size() < 100 && budget--) {
            const double x = ux(rng);
            const double t = utf(rng);
            if (std::abs(ev.fn(x, t)) < residual_amp_floor) continue;
            probes.push_back({x, t});
        }
        if (probes.size() < 100)
            throw validation_error("residual: no free-state support in the probe window");
        run.free_report = residual_free(ev, probes, cfg.params, free_opts);
        run.free_ok = run.free_report.max_rel <= residual_free_tol;
    }

    const std::optional<TrapSpec> scan_trap = cfg.post_trap ? cfg.post_trap : cfg.pre_trap;
    if (scan_trap) {
        const bool on_post = cfg.post_trap.has_value();
        const auto& ev = on_post ? rt.post_state : rt.pre_state;
        const double omega = scan_trap->omega(cfg.params);
        const double period = 2.0 * std::numbers::pi / omega;
        const double q = cfg.quench_time;
        auto trap_opts = residual_steps_for_trap(*scan_trap, cfg.params);
        trap_opts.h_x = std::min(trap_opts.h_x, 1e-3 * narrow);

        std::uniform_real_distribution<double> uxi(cfg.grid.x_min / 5.0,
                                                   cfg.grid.x_max / 5.0);
        std::uniform_real_distribution<double> utau =
            on_post ? std::uniform_real_distribution<double>(q + 4.0 * trap_opts.h_t,
                                                             q + period)
                    : std::uniform_real_distribution<double>(q - period,
                                                             q - 4.0 * trap_opts.h_t);

        auto draw_probes = [&](std::size_t count) {
            std::vector<ProbePoint> probes;
            std::size_t budget = 100000;
            while (probes.size() < count && budget--) {
                const double xi = uxi(rng);
                const double tau = utau(rng);
                if (std::abs(std::cos(omega * (tau - q))) < 0.05) continue;
                try {
                    if (std::abs(ev.fn(xi, tau)) < residual_amp_floor) continue;
                    std::vector<ProbePoint> one{{xi, tau}};
                    (void)residual_trapped(ev, *scan_trap, one, cfg.params, trap_opts);
                } catch (const singular_time_error&) {
                    continue; // a stencil leg hit an inner map singularity, redraw
                }
                probes.push_back({xi, tau});
            }
            if (probes.size() < count)
                throw validation_error(
                    "residual: no trapped-state support in the probe window");
            return probes;
        };

        const auto probes = draw_probes(100);
        run.trapped_report = residual_trapped(ev, *scan_trap, probes, cfg.params, trap_opts);
        run.trapped_ok = run.trapped_report->max_rel <= residual_trapped_tol;

        const auto scan_probes = draw_probes(32);
        run.scan = scan_sign_conventions(ev, *scan_trap, scan_probes, cfg.params, trap_opts);
        run.scan_ok = run.scan->unique_pass && run.scan->best.time_sign == 1 &&
                      run.scan->best.potential_sign == -1;
    }

    std::vector<std::string> lines;
    lines.push_back("command: residual");
    detail::describe_scenario(rt, scenario_label, lines);
    lines.push_back("free residual: max_rel " + detail::fmt_sci(run.free_report.max_rel) +
                    ", max_abs " + detail::fmt_sci(run.free_report.max_abs) + " over " +
                    std::to_string(run.free_report.n_points) + " probes (tol " +
                    detail::fmt_sci(residual_free_tol) +
                    (run.free_ok ? ", ok)" : ", EXCEEDED)"));
    if (run.trapped_report) {
        lines.push_back("trapped residual: max_rel " +
                        detail::fmt_sci(run.trapped_report->max_rel) + ", max_abs " +
                        detail::fmt_sci(run.trapped_report->max_abs) + " over " +
                        std::to_string(run.trapped_report->n_points) + " probes (tol " +
                        detail::fmt_sci(residual_trapped_tol) +
                        (run.trapped_ok ? ", ok)" : ", EXCEEDED)"));
    } else {
        lines.push_back("trapped residual: skipped (scenario has no trap)");
    }
    if (run.scan) {
        for (const auto& e : run.scan->entries)
            lines.push_back("sign scan (" + std::string(e.time_sign > 0 ? "+" : "-") +
                            ", " + (e.potential_sign > 0 ? "+" : "-") +
                            "): max_rel " + detail::fmt_sci(e.max_rel));
        lines.push_back("sign scan verdict: " +
                        std::string(run.scan->unique_pass ? "unique pass, " : "NOT UNIQUE, ") +
                        sign_convention_string(run.scan->best));
    } else {
        lines.push_back("sign scan: skipped (scenario has no trap)");
    }
    lines.push_back(detail::convention_line());
    run.summary_path = out_dir / "summary.txt";
    detail::write_text_file(run.summary_path, lines);
    return run;
}

struct RoundtripRun {
    double coord_max_err = 0.0;
    double amplitude_max_err = 0.0;
    std::optional<double> concat_max_err;
    std::optional<double> identity_max_err;
    bool ok = false;
    std::filesystem::path summary_path;
};

inline constexpr double roundtrip_tol = 1e-12;

// Forward-then-inverse diagnostics at random probe points: coordinates,
// amplitudes, the trap-to-trap map against its explicit composition, and the
// K == k identity.
inline RoundtripRun run_roundtrip(const ScenarioRuntime& rt,
                                  const std::filesystem::path& out_dir,
                                  const std::string& scenario_label, const RunOptions& opts) {
    std::filesystem::create_directories(out_dir);
    const auto& cfg = rt.cfg;
    const std::optional<TrapSpec> any_trap = cfg.post_trap ? cfg.post_trap : cfg.pre_trap;
    if (!any_trap)
        throw validation_error("roundtrip needs at least one trap in the scenario");
    const TrapSpec trap = *any_trap;
    const auto mp = MapParams::natural(trap, cfg.params);
    const double omega = trap.omega(cfg.params);

    std::mt19937_64 rng(opts.seed);
    std::uniform_real_distribution<double> uxi(-4.0, 4.0);
    std::uniform_real_distribution<double> utau(-1.4 / omega, 1.4 / omega);
    std::uniform_real_distribution<double> ux(-5.0, 5.0);
    std::uniform_real_distribution<double> ut(-3.0, 3.0);

    RoundtripRun run;
    for (int i = 0; i < 1000; ++i) {
        const double xi = uxi(rng);
        const double tau = utau(rng);
        const auto fc = free_coords_from_trap(xi, tau, trap, mp, cfg.params);
        const auto tc = trap_coords_from_free(fc.x, fc.t, trap, mp, cfg.params);
        const double exi = std::abs(tc.xi - xi) / std::max(1.0, std::abs(xi));
        const double etau = std::abs(tc.tau - tau) / std::max(1.0, std::abs(tau));
        run.coord_max_err = std::max({run.coord_max_err, exi, etau});
    }

    const auto mapped = map_free_to_trapped(rt.initial, trap, mp, cfg.params);
    const auto back = map_trapped_to_free(mapped, trap, mp, cfg.params);
    for (int i = 0; i < 1000; ++i) {
        const double x = ux(rng);
        const double t = ut(rng);
        run.amplitude_max_err =
            std::max(run.amplitude_max_err, std::abs(back.fn(x, t) - rt.initial.fn(x, t)));
    }

    {
        const auto identity = map_trapped_to_trapped(mapped, trap, trap, cfg.params);
        double worst = 0.0;
        int kept = 0;
        while (kept < 500) {
            const double xi = uxi(rng);
            const double tau = utau(rng) * 2.0;
            if (std::abs(std::cos(omega * tau)) < 0.05) continue;
            worst = std::max(worst, std::abs(identity.fn(xi, tau) - mapped.fn(xi, tau)));
            ++kept;
        }
        run.identity_max_err = worst;
    }

    if (cfg.pre_trap && cfg.post_trap &&
        std::abs(cfg.pre_trap->k - cfg.post_trap->k) > 1e-12 * cfg.pre_trap->k) {
        const TrapSpec from = *cfg.pre_trap;
        const TrapSpec to = *cfg.post_trap;
        const double omega_to = to.omega(cfg.params);
        const auto psi = map_free_to_trapped(rt.initial, from,
                                             MapParams::natural(from, cfg.params), cfg.params);
        const auto direct = map_trapped_to_trapped(psi, from, to, cfg.params);
        const auto composed = map_free_to_trapped(
            map_trapped_to_free(psi, from, MapParams::natural(from, cfg.params), cfg.params),
            to, MapParams::natural(to, cfg.params), cfg.params);
        std::uniform_real_distribution<double> utau2(-2.5 / omega_to, 2.5 / omega_to);
        double worst = 0.0;
        int kept = 0;
        while (kept < 1000) {
            const double xi = uxi(rng);
            const double tau = utau2(rng);
            if (std::abs(std::cos(omega_to * tau)) < 0.05) continue;
            try {
                worst = std::max(worst, std::abs(direct.fn(xi, tau) - composed.fn(xi, tau)));
            } catch (const singular_time_error&) {
                continue; // the unwrapped source time hit the inner singularity
            }
            ++kept;
        }
        run.concat_max_err = worst;
    }

    run.ok = run.coord_max_err < roundtrip_tol && run.amplitude_max_err < roundtrip_tol &&
             (!run.identity_max_err || *run.identity_max_err < roundtrip_tol) &&
             (!run.concat_max_err || *run.concat_max_err < roundtrip_tol);

    std::vector<std::string> lines;
    lines.push_back("command: roundtrip");
    detail::describe_scenario(rt, scenario_label, lines);
    lines.push_back("coordinate round trip max err: " + detail::fmt_sci(run.coord_max_err));
    lines.push_back("amplitude round trip max err: " +
                    detail::fmt_sci(run.amplitude_max_err));
    if (run.identity_max_err)
        lines.push_back("trap-to-trap identity (K = k) max err: " +
                        detail::fmt_sci(*run.identity_max_err));
    if (run.concat_max_err)
        lines.push_back("trap-to-trap vs composition max err: " +
                        detail::fmt_sci(*run.concat_max_err));
    else
        lines.push_back("trap-to-trap vs composition: skipped (needs two distinct traps)");
    lines.push_back(std::string("verdict: ") + (run.ok ? "PASS" : "FAIL") + " (tol " +
                    detail::fmt_sci(roundtrip_tol) + ")");
    lines.push_back(detail::convention_line());
    run.summary_path = out_dir / "summary.txt";
    detail::write_text_file(run.summary_path, lines);
    return run;
}

} // namespace quenchmap
