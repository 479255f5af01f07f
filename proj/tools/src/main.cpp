// Command-line front end: simulate / estimate / verify-iioss / sampling-dump /
// reproduce.  Every subcommand is deterministic given (--config, --seed); all
// randomness flows through one SplitMix64 stream per run, split per consumer.

#include "ptloop/csv.hpp"
#include "ptloop/detectability.hpp"
#include "ptloop/dosing.hpp"
#include "ptloop/integrator.hpp"
#include "ptloop/mhe.hpp"
#include "ptloop/model.hpp"
#include "ptloop/parameters.hpp"
#include "ptloop/sampling.hpp"
#include "ptloop/scenario.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace {

namespace fs = std::filesystem;
using namespace ptloop;

std::vector<Scheme> parse_schemes(const std::string& selection) {
    if (selection == "all") {
        return {Scheme::a, Scheme::b, Scheme::c, Scheme::d};
    }
    return {scheme_from_string(selection)};
}

PatientSpec resolve_patient(const std::string& config_path, const std::string& variant_name) {
    if (!config_path.empty()) {
        return load_patient_spec(config_path);
    }
    return default_patient(variant_from_string(variant_name));
}

void ensure_directory(const std::string& out_dir) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) {
        throw std::runtime_error("cannot create output directory '" + out_dir +
                                 "': " + ec.message());
    }
}

std::string joined(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

void write_truth_outputs(const std::string& out_dir, const TruthResult& truth) {
    write_trajectory_csv(joined(out_dir, "truth.csv"), truth.truth);
    write_schedules_csv(joined(out_dir, "doses_reported.csv"), {truth.reported});
    write_schedules_csv(joined(out_dir, "doses_actual.csv"), {truth.actual});
    write_decisions_csv(joined(out_dir, "decisions.csv"), truth.decisions);
    write_measurements_csv(joined(out_dir, "measurements.csv"), truth.measurements);
}

int run_simulate(const std::string& config_path, const std::string& variant_name,
                 const std::string& out_dir, std::uint64_t seed) {
    ensure_directory(out_dir);
    const PatientSpec spec = resolve_patient(config_path, variant_name);
    const SplitMix64 root(seed);
    SplitMix64 truth_rng = root.split(0); // same stream estimate uses for its truth
    const TruthResult truth = simulate_truth(spec, IntegratorConfig{}, truth_rng);
    write_truth_outputs(out_dir, truth);
    std::cout << "simulate: " << to_string(spec.variant) << ", " << spec.duration_days
              << " days, " << truth.decisions.size() << " dosing decisions -> " << out_dir
              << "\n";
    return 0;
}

int run_estimate(const std::string& config_path, const std::string& variant_name,
                 const std::string& estimator_path, const std::string& scheme_selection,
                 const std::string& out_dir, std::uint64_t seed) {
    ensure_directory(out_dir);
    const PatientSpec spec = resolve_patient(config_path, variant_name);
    const EstimatorConfig est_cfg = estimator_path.empty()
                                        ? default_estimator_config(spec.variant)
                                        : load_estimator_config(estimator_path);
    const std::vector<Scheme> schemes = parse_schemes(scheme_selection);

    const RunResult run = run_virtual_patient(spec, schemes, est_cfg, IntegratorConfig{}, seed);
    write_truth_outputs(out_dir, run.truth);
    for (const SchemeResult& res : run.schemes) {
        write_scheme_csv(joined(out_dir, "estimates_" + to_string(res.scheme) + ".csv"), res);
    }
    write_metrics_json(joined(out_dir, "metrics.json"), run, spec.variant, seed);

    std::cout << "estimate: " << to_string(spec.variant) << ", seed " << seed << "\n";
    for (const SchemeResult& res : run.schemes) {
        std::cout << "  scheme " << to_string(res.scheme) << ": RMSE = " << res.errors.rmse
                  << ", SAE(T) = " << res.errors.sae.back() << "\n";
    }
    return 0;
}

int run_verify_iioss(const std::string& variant_name, const std::string& scheme_selection,
                     const std::string& scale, const std::string& out_dir,
                     std::uint64_t seed) {
    ensure_directory(out_dir);
    const Variant variant = variant_from_string(variant_name);
    const bool full = scale == "full";
    const int n_pairs = full ? 19800 : 500;
    const long horizon = (full ? 300L : 100L) * 3L; // days on the 8 h step grid
    const ModelParameters params = default_parameters(variant);

    long total_violations = 0;
    for (const Scheme scheme : parse_schemes(scheme_selection)) {
        const IossCertificate cert = default_certificate(variant, scheme);
        const VerifyReport report = verify(n_pairs, cert, scheme, 1, horizon, seed, variant,
                                           params, IntegratorConfig{});
        const std::string name =
            "iioss_" + to_string(variant) + "_" + to_string(scheme) + ".json";
        write_verify_report(joined(out_dir, name), report);
        total_violations += report.violations;
        std::cout << "verify-iioss: " << to_string(variant) << " scheme "
                  << to_string(scheme) << ": " << report.violations << " violations over "
                  << report.n_pairs << " pairs (max ratio " << report.max_ratio << ") -> "
                  << name << "\n";
    }
    return total_violations == 0 ? 0 : 1;
}

int run_sampling_dump(const std::string& scheme_selection, int start_index, long horizon,
                      const std::string& out_dir) {
    ensure_directory(out_dir);
    for (const Scheme scheme : parse_schemes(scheme_selection)) {
        const SamplingSet set = realize(scheme, start_index, horizon);
        const std::string name = "sampling_" + to_string(scheme) + "_" +
                                 std::to_string(start_index) + ".csv";
        write_sampling_csv(joined(out_dir, name), set);
        std::cout << "sampling-dump: K^" << to_string(scheme) << "_" << start_index << " has "
                  << set.instants.size() << " instants over " << horizon << " steps -> " << name
                  << "\n";
    }
    return 0;
}

int run_reproduce(const std::string& scale, const std::string& out_dir, std::uint64_t seed) {
    ensure_directory(out_dir);
    const std::vector<Scheme> all = parse_schemes("all");

    nlohmann::json summary;
    summary["seed"] = seed;
    summary["scale"] = scale;
    csv::Table table;
    table.header = {"variant_code", "scheme_code", "rmse", "sae_final", "iioss_violations",
                    "iioss_max_ratio"};

    int exit_code = 0;
    for (const Variant variant : {Variant::hypo, Variant::hyper}) {
        const std::string vdir = joined(out_dir, to_string(variant));
        ensure_directory(vdir);
        nlohmann::json ventry;
        try {
            const PatientSpec spec = default_patient(variant);
            const RunResult run = run_virtual_patient(spec, all,
                                                      default_estimator_config(variant),
                                                      IntegratorConfig{}, seed);
            write_truth_outputs(vdir, run.truth);
            write_metrics_json(joined(vdir, "metrics.json"), run, variant, seed);

            const int n_pairs = scale == "full" ? 19800 : 500;
            const long horizon = (scale == "full" ? 300L : 100L) * 3L;
            const ModelParameters params = default_parameters(variant);

            for (const SchemeResult& res : run.schemes) {
                write_scheme_csv(joined(vdir, "estimates_" + to_string(res.scheme) + ".csv"),
                                 res);
                const IossCertificate cert = default_certificate(variant, res.scheme);
                const VerifyReport report = verify(n_pairs, cert, res.scheme, 1, horizon, seed,
                                                   variant, params, IntegratorConfig{});
                write_verify_report(
                    joined(vdir, "iioss_" + to_string(res.scheme) + ".json"), report);
                if (report.violations != 0) {
                    exit_code = 1;
                }

                nlohmann::json sentry;
                sentry["rmse"] = res.errors.rmse;
                sentry["sae_final"] = res.errors.sae.back();
                sentry["iioss_violations"] = report.violations;
                sentry["iioss_max_ratio"] = report.max_ratio;
                ventry[to_string(res.scheme)] = sentry;

                table.rows.push_back({variant == Variant::hypo ? 0.0 : 1.0,
                                      static_cast<double>(static_cast<int>(res.scheme)),
                                      res.errors.rmse, res.errors.sae.back(),
                                      static_cast<double>(report.violations),
                                      report.max_ratio});
                std::cout << "reproduce: " << to_string(variant) << "/"
                          << to_string(res.scheme) << ": RMSE = " << res.errors.rmse
                          << ", i-IOSS violations = " << report.violations << "\n";
            }
        } catch (const std::exception& e) {
            // Partial-failure reporting: record the failure, continue with the
            // other variant, and exit nonzero at the end.
            ventry["error"] = e.what();
            std::cerr << "reproduce: " << to_string(variant) << " failed: " << e.what() << "\n";
            exit_code = 1;
        }
        summary[to_string(variant)] = ventry;
    }

    std::ofstream sfile(joined(out_dir, "summary.json"));
    if (!sfile) {
        throw std::runtime_error("cannot write summary.json in '" + out_dir + "'");
    }
    sfile << summary.dump(2) << "\n";
    csv::write_table(joined(out_dir, "summary.csv"), table);
    return exit_code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pituitary-thyroid loop simulation and moving-horizon estimation toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::string estimator_path;
    std::string out_dir = ".";
    std::string variant_name = "hypo";
    std::string scheme_selection = "all";
    std::string scale = "desk";
    std::uint64_t seed = 1;
    int start_index = 1;
    long horizon = 900;

    const auto add_common = [&](CLI::App* cmd, bool with_variant) {
        cmd->add_option("--out", out_dir, "Output directory")->capture_default_str();
        cmd->add_option("--seed", seed, "64-bit RNG seed")->capture_default_str();
        if (with_variant) {
            cmd->add_option("--variant", variant_name, "Model variant")
                ->check(CLI::IsMember({"hypo", "hyper"}))
                ->capture_default_str();
        }
    };

    CLI::App* simulate = app.add_subcommand(
        "simulate", "Simulate one titrated virtual patient (truth only)");
    add_common(simulate, true);
    simulate->add_option("--config", config_path, "Patient spec JSON (overrides --variant)");

    CLI::App* estimate = app.add_subcommand(
        "estimate", "Simulate a virtual patient and run the estimator per scheme");
    add_common(estimate, true);
    estimate->add_option("--config", config_path, "Patient spec JSON (overrides --variant)");
    estimate->add_option("--estimator-config", estimator_path, "Estimator config JSON");
    estimate->add_option("--scheme", scheme_selection, "Sampling scheme selection")
        ->check(CLI::IsMember({"a", "b", "c", "d", "all"}))
        ->capture_default_str();

    CLI::App* verify_cmd = app.add_subcommand(
        "verify-iioss", "Empirical i-IOSS certificate verification");
    add_common(verify_cmd, true);
    verify_cmd->add_option("--scheme", scheme_selection, "Sampling scheme selection")
        ->check(CLI::IsMember({"a", "b", "c", "d", "all"}))
        ->capture_default_str();
    verify_cmd->add_option("--scale", scale, "desk: 500 pairs x 100 days; full: 19800 x 300")
        ->check(CLI::IsMember({"desk", "full"}))
        ->capture_default_str();

    CLI::App* sampling = app.add_subcommand(
        "sampling-dump", "Write the instants of a sampling set to CSV");
    sampling->add_option("--out", out_dir, "Output directory")->capture_default_str();
    sampling->add_option("--scheme", scheme_selection, "Sampling scheme selection")
        ->check(CLI::IsMember({"a", "b", "c", "d", "all"}))
        ->capture_default_str();
    sampling->add_option("--index", start_index, "Start index i of K^s_i")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    sampling->add_option("--horizon", horizon, "Horizon in T_d steps")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();

    CLI::App* reproduce = app.add_subcommand(
        "reproduce", "Run both variants x all schemes plus detectability reports");
    add_common(reproduce, false);
    reproduce->add_option("--scale", scale, "desk or full detectability scale")
        ->check(CLI::IsMember({"desk", "full"}))
        ->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (simulate->parsed()) {
            return run_simulate(config_path, variant_name, out_dir, seed);
        }
        if (estimate->parsed()) {
            return run_estimate(config_path, variant_name, estimator_path, scheme_selection,
                                out_dir, seed);
        }
        if (verify_cmd->parsed()) {
            return run_verify_iioss(variant_name, scheme_selection, scale, out_dir, seed);
        }
        if (sampling->parsed()) {
            return run_sampling_dump(scheme_selection, start_index, horizon, out_dir);
        }
        if (reproduce->parsed()) {
            return run_reproduce(scale, out_dir, seed);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
