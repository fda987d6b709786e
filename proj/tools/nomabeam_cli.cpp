// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: one-off designs (powermin / maxmin / robust)
// and the Monte-Carlo experiment harness (run / checks / plotdata).

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "noma/experiments.hpp"
#include "noma/model.hpp"

namespace {

struct InstanceArgs {
    int users = 3;
    int antennas = 3;
    double noise_variance = 0.01;
    std::uint64_t seed = 1;
    std::uint64_t trial = 0;
    double cell_radius = 50.0;
    double min_distance = 1.0;
    double pathloss = 3.8;
    std::string scenario = "pathloss";
    double direction_noise = 0.05;
    double norm_spread = 4.0;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--users", users, "number of users N");
        cmd->add_option("--antennas", antennas, "transmit antennas M");
        cmd->add_option("--noise", noise_variance, "noise variance sigma^2 [W]");
        cmd->add_option("--seed", seed, "RNG seed");
        cmd->add_option("--trial", trial, "trial index (fast-fading draw)");
        cmd->add_option("--radius", cell_radius, "cell radius [m]");
        cmd->add_option("--min-distance", min_distance, "minimum user distance [m]");
        cmd->add_option("--pathloss", pathloss, "pathloss exponent beta (0 disables)");
        cmd->add_option("--scenario", scenario, "channel scenario: pathloss | correlated");
        cmd->add_option("--direction-noise", direction_noise,
                        "correlated scenario: direction perturbation");
        cmd->add_option("--norm-spread", norm_spread,
                        "correlated scenario: strongest/weakest norm ratio");
    }

    noma::SystemConfig config() const {
        noma::SystemConfig cfg;
        cfg.num_users = users;
        cfg.num_antennas = antennas;
        cfg.noise_variance = noise_variance;
        cfg.rng_seed = seed;
        return cfg;
    }

    noma::ChannelSet channels(const noma::SystemConfig& cfg) const {
        if (scenario == "correlated")
            return noma::correlated_channel_fixture(cfg, norm_spread, direction_noise, trial);
        noma::ChannelModelParams params;
        params.cell_radius_m = cell_radius;
        params.min_distance_m = min_distance;
        params.pathloss_exponent = pathloss;
        return noma::generate_channels(cfg, params, trial);
    }
};

void write_or_print(const std::string& path, const std::string& content) {
    if (path.empty()) return;
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << content;
    std::printf("wrote %s\n", path.c_str());
}

void print_design(const noma::ChannelSet& channels, const noma::BeamformerSet& beams,
                  const noma::SystemConfig& cfg) {
    const noma::RateReport report = noma::compute_rates(channels, beams, cfg);
    std::printf("total power: %.6f W\n", report.total_power);
    for (int k = 0; k < channels.num_users(); ++k)
        std::printf("  user %d: power %.6f W, rate %.4f bits/s/Hz\n", k + 1,
                    report.per_user_power[k], report.rates[k]);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"nomabeam: beamforming designs for downlink multi-antenna NOMA"};
    app.require_subcommand(1);

    // powermin ---------------------------------------------------------
    InstanceArgs pm_args;
    double pm_rate = 2.0;
    std::string pm_method = "sca";
    std::string pm_out;
    auto* pm = app.add_subcommand("powermin", "minimize transmit power at fixed rate targets");
    pm_args.add_to(pm);
    pm->add_option("--rate", pm_rate, "per-user target rate [bits/s/Hz]");
    pm->add_option("--method", pm_method, "sca | sdr");
    pm->add_option("--out", pm_out, "write result JSON here");

    // maxmin -----------------------------------------------------------
    InstanceArgs mm_args;
    double mm_budget = 10.0;
    double mm_tolerance = 1e-3;
    std::string mm_out, mm_log;
    auto* mm = app.add_subcommand("maxmin", "maximize the minimum rate under a power budget");
    mm_args.add_to(mm);
    mm->add_option("--pmax", mm_budget, "total power budget [W]");
    mm->add_option("--tolerance", mm_tolerance, "bisection rate tolerance");
    mm->add_option("--out", mm_out, "write result JSON here");
    mm->add_option("--log", mm_log, "write bisection log CSV here");

    // robust -----------------------------------------------------------
    InstanceArgs rb_args;
    rb_args.scenario = "correlated";
    double rb_rate = 3.0;
    double rb_variance = 0.005;
    double rb_outage = 0.1;
    int rb_samples = 1000;
    bool rb_nonrobust = false;
    std::string rb_out, rb_hist;
    auto* rb = app.add_subcommand(
        "robust", "outage-constrained power minimization under covariance uncertainty");
    rb_args.add_to(rb);
    rb->add_option("--rate", rb_rate, "per-user target rate [bits/s/Hz]");
    rb->add_option("--variance", rb_variance, "entrywise covariance error variance");
    rb->add_option("--outage", rb_outage, "outage probability rho");
    rb->add_option("--samples", rb_samples, "Monte-Carlo evaluation samples");
    rb->add_flag("--nonrobust", rb_nonrobust, "solve the nominal comparator instead");
    rb->add_option("--out", rb_out, "write result JSON here");
    rb->add_option("--histogram", rb_hist, "write rate-satisfaction histogram CSV here");

    // experiment -------------------------------------------------------
    auto* ex = app.add_subcommand("experiment", "Monte-Carlo harness");
    ex->require_subcommand(1);

    std::string run_spec_path, run_out;
    std::uint64_t run_seed = 0;
    int run_trials = 0;
    bool run_serial = false;
    bool run_json = false;
    auto* ex_run = ex->add_subcommand("run", "run an experiment spec file");
    ex_run->add_option("spec", run_spec_path, "spec document (flat dotted keys)")->required();
    ex_run->add_option("--seed", run_seed, "override system.rng_seed");
    ex_run->add_option("--trials", run_trials, "override trials per sweep point");
    ex_run->add_option("--out", run_out, "override output path");
    ex_run->add_flag("--serial", run_serial, "use the serial reference runner");
    ex_run->add_flag("--json", run_json, "emit JSON instead of CSV");

    std::uint64_t checks_seed = 1;
    auto* ex_checks = ex->add_subcommand("checks", "table-style consistency checks");
    ex_checks->add_option("--seed", checks_seed, "RNG seed");

    std::string plot_figure, plot_out = "plotdata";
    std::uint64_t plot_seed = 1;
    int plot_trials = 200;
    bool plot_serial = false;
    auto* ex_plot = ex->add_subcommand("plotdata", "emit per-figure CSV data");
    ex_plot->add_option("figure", plot_figure, "figure id (fig1 .. fig11)")->required();
    ex_plot->add_option("--out", plot_out, "output directory");
    ex_plot->add_option("--seed", plot_seed, "RNG seed");
    ex_plot->add_option("--trials", plot_trials, "trials per sweep point");
    ex_plot->add_flag("--serial", plot_serial, "use the serial reference runner");

    CLI11_PARSE(app, argc, argv);

    try {
        if (pm->parsed()) {
            noma::SystemConfig cfg = pm_args.config();
            cfg.target_rates.assign(cfg.num_users, pm_rate);
            const noma::ChannelSet ch = pm_args.channels(cfg);
            noma::BeamformerSet beams;
            if (pm_method == "sdr") {
                const noma::SdrSolution r = noma::solve_powermin_sdr(ch, cfg);
                if (r.recovery == noma::SdrSolution::Recovery::none) {
                    std::printf("solve failed: %s\n", noma::conic::to_string(r.solver_status));
                    return 1;
                }
                beams = r.beams;
                std::printf("relaxation objective: %.6f W (max rank-one gap %.2e)\n",
                            r.relaxation_objective,
                            *std::max_element(r.rank_one_gaps.begin(), r.rank_one_gaps.end()));
                write_or_print(pm_out, r.to_json_string());
            } else {
                const noma::ScaResult r = noma::solve_powermin_sca(ch, cfg);
                if (r.status != noma::ScaStatus::ok) {
                    std::printf("solve failed at iteration %d\n", r.failed_iteration);
                    return 1;
                }
                beams = r.beams;
                std::printf("iterations: %d (converged: %s)\n", r.trace.iterations,
                            r.trace.converged ? "yes" : "no");
            }
            print_design(ch, beams, cfg);
            return 0;
        }

        if (mm->parsed()) {
            noma::SystemConfig cfg = mm_args.config();
            cfg.power_budget = mm_budget;
            const noma::ChannelSet ch = mm_args.channels(cfg);
            noma::BisectionOptions options;
            options.rate_tolerance = mm_tolerance;
            const noma::MaxMinResult r = noma::solve_maxmin(ch, cfg, options);
            if (r.degenerate) {
                std::printf("degenerate: no positive rate certifiable at tolerance %g\n",
                            mm_tolerance);
                return 1;
            }
            std::printf("balanced rate R*: %.6f bits/s/Hz (budget %.3f W, used %.6f W)\n",
                        r.balanced_rate, mm_budget, r.total_power);
            for (std::size_t k = 0; k < r.achieved_rates.size(); ++k)
                std::printf("  user %zu: power %.6f W, rate %.6f bits/s/Hz\n", k + 1,
                            r.beams.user_power(static_cast<int>(k)), r.achieved_rates[k]);
            write_or_print(mm_log, noma::bisection_log_csv(r));
            return 0;
        }

        if (rb->parsed()) {
            noma::SystemConfig cfg = rb_args.config();
            cfg.target_rates.assign(cfg.num_users, rb_rate);
            cfg.outage_probabilities.assign(cfg.num_users, rb_outage);
            const noma::ChannelSet ch = rb_args.channels(cfg);
            const noma::UncertaintyModel model =
                noma::make_uncertainty_model(ch, rb_variance, rb_outage);
            const noma::RobustDesignResult r =
                rb_nonrobust ? noma::solve_nonrobust_powermin(model, cfg)
                             : noma::solve_robust_powermin(model, cfg);
            if (r.recovery == noma::RobustDesignResult::Recovery::none) {
                std::printf("solve failed: %s\n", noma::conic::to_string(r.solver_status));
                return 1;
            }
            std::printf("total power: %.6f W (recovered %.6f W)\n", r.total_power,
                        r.recovered_power);
            const noma::OutageReport outage = noma::evaluate_outage(
                r.beams, model, noma::min_sinr_targets(cfg), cfg.noise_variance, rb_samples,
                noma::OutageModel::hermitian, cfg.rng_seed);
            for (std::size_t k = 0; k < outage.satisfaction.size(); ++k)
                std::printf("  user %zu: satisfaction %.3f (+/- %.3f)\n", k + 1,
                            outage.satisfaction[k], outage.binomial_stderr[k]);
            write_or_print(rb_hist, outage.histogram_csv());
            return 0;
        }

        if (ex_run->parsed()) {
            std::ifstream is(run_spec_path);
            if (!is) throw std::runtime_error("cannot read " + run_spec_path);
            std::stringstream buffer;
            buffer << is.rdbuf();
            noma::ExperimentSpec spec = noma::ExperimentSpec::from_document(buffer.str());
            if (run_seed != 0) spec.system.rng_seed = run_seed;
            if (run_trials != 0) spec.trials = run_trials;
            if (!run_out.empty()) spec.output_path = run_out;
            const noma::ResultTable table = noma::run_experiment(spec, !run_serial);
            const std::string content =
                run_json ? noma::to_json_string(table) : noma::to_csv(table);
            if (spec.output_path.empty())
                std::cout << content;
            else
                write_or_print(spec.output_path, content);
            return 0;
        }

        if (ex_checks->parsed()) {
            const auto outcomes = noma::run_table_checks(checks_seed);
            std::cout << noma::checks_report(outcomes);
            for (const auto& c : outcomes)
                if (!c.pass) return 1;
            return 0;
        }

        if (ex_plot->parsed()) {
            const auto files = noma::emit_figure_data(plot_figure, plot_seed, plot_trials,
                                                      plot_out, !plot_serial);
            for (const auto& f : files) std::printf("wrote %s\n", f.c_str());
            return 0;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
