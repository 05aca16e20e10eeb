#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include <quenchmap/quenchmap.hpp>

namespace qm = quenchmap;

namespace {

void print_report_paths(const std::filesystem::path& csv,
                        const std::filesystem::path& summary) {
    if (!csv.empty()) std::cout << "wrote " << csv.string() << '\n';
    std::cout << "wrote " << summary.string() << '\n';
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"closed-form maps between free and harmonically trapped 1d wave packets"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    std::string method_name = "map";
    double bench_target = 1e-5;
    qm::RunOptions opts;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "scenario config file")->required();
        sub->add_option("--out", out_dir, "output directory (default: out)");
        sub->add_option("--seed", opts.seed, "rng seed for probe points");
    };

    auto* density = app.add_subcommand("density", "tabulate one method's wave function");
    add_common(density);
    density->add_option("--method", method_name, "map, split_step or projection");
    density->add_option("--split-dt", opts.split_dt, "split-step time step");
    density->add_option("--n-basis", opts.n_basis, "projection basis size");

    auto* compare = app.add_subcommand("compare", "pairwise l2 distances between methods");
    add_common(compare);
    compare->add_option("--split-dt", opts.split_dt, "split-step time step");
    compare->add_option("--n-basis", opts.n_basis, "projection basis size");
    compare->add_option("--accuracy", opts.accuracy, "pairwise l2 bound");

    auto* bench = app.add_subcommand("bench", "time all methods at a shared accuracy target");
    add_common(bench);
    bench->add_option("--accuracy", bench_target, "l2 accuracy every method must reach");

    auto* residual = app.add_subcommand("residual", "pde residual probes and sign scan");
    add_common(residual);

    auto* roundtrip = app.add_subcommand("roundtrip", "forward/inverse map diagnostics");
    add_common(roundtrip);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        const auto cfg = qm::parse_scenario_file(config_path);
        const auto rt = qm::build_runtime(cfg);

        if (density->parsed()) {
            const auto run =
                qm::run_density(rt, qm::parse_method(method_name), out_dir, config_path, opts);
            print_report_paths(run.csv_path, run.summary_path);
        } else if (compare->parsed()) {
            const auto run = qm::run_compare(rt, out_dir, config_path, opts);
            std::printf("max pairwise l2: %.16e (accuracy %.16e)\n", run.max_l2,
                        opts.accuracy);
            print_report_paths(run.csv_path, run.summary_path);
            if (!run.within_accuracy) {
                std::cerr << "error: methods disagree beyond the accuracy bound\n";
                return 3;
            }
        } else if (bench->parsed()) {
            const auto run = qm::run_bench(rt, bench_target, out_dir, config_path);
            for (const auto& e : run.entries)
                std::printf("%-10s %12.6f s  l2 %.3e  (%zu times)\n",
                            qm::method_name(e.method), e.wall_time_s, e.l2_error, e.n_times);
            std::printf("map fastest: %s\n", run.map_fastest ? "yes" : "NO");
            print_report_paths(run.csv_path, run.summary_path);
        } else if (residual->parsed()) {
            const auto run = qm::run_residual(rt, out_dir, config_path, opts);
            std::printf("free residual max_rel: %.3e\n", run.free_report.max_rel);
            if (run.trapped_report)
                std::printf("trapped residual max_rel: %.3e\n", run.trapped_report->max_rel);
            if (run.scan)
                std::printf("sign scan: %s, %s\n",
                            run.scan->unique_pass ? "unique pass" : "NOT UNIQUE",
                            qm::sign_convention_string(run.scan->best).c_str());
            print_report_paths({}, run.summary_path);
            if (!run.free_ok || !run.trapped_ok || !run.scan_ok) {
                std::cerr << "error: residual diagnostics exceed tolerance\n";
                return 3;
            }
        } else if (roundtrip->parsed()) {
            const auto run = qm::run_roundtrip(rt, out_dir, config_path, opts);
            std::printf("coordinate round trip max err: %.3e\n", run.coord_max_err);
            std::printf("amplitude round trip max err: %.3e\n", run.amplitude_max_err);
            if (run.identity_max_err)
                std::printf("trap-to-trap identity max err: %.3e\n", *run.identity_max_err);
            if (run.concat_max_err)
                std::printf("trap-to-trap vs composition max err: %.3e\n",
                            *run.concat_max_err);
            print_report_paths({}, run.summary_path);
            if (!run.ok) {
                std::cerr << "error: round trip exceeds tolerance\n";
                return 3;
            }
        }
        return 0;
    } catch (const qm::parse_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const qm::validation_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const qm::tolerance_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const qm::resource_limit_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    } catch (const qm::singular_time_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
