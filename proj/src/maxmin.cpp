// SPDX-License-Identifier: Apache-2.0

#include "noma/maxmin.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace noma {

BeamformerProgram build_feasibility_subproblem(const ChannelSet& channels, double alpha,
                                               double noise_variance,
                                               const BeamformerSet& ref) {
    if (!(alpha >= 0.0)) throw std::invalid_argument("alpha must be >= 0");
    const int n = channels.num_users();
    const int m = channels.num_antennas();
    const std::vector<double> gamma(n, rate_to_min_sinr(alpha));

    BeamformerProgram bp = build_sca_subproblem(channels, gamma, noise_variance, ref);
    auto& p = bp.program;

    // Ordering chain, convexified on the stronger-user side:
    //   |h_k^H w_n|^2 <= g_k(w_m, ref_m)   for n > m, every decoder k
    // (normalized per decoder channel and in the subproblem's power
    // units, as in the rate constraints).
    for (int k = 0; k < n; ++k) {
        const Eigen::VectorXcd hhat = channels.channels[k] / channels.channels[k].norm();
        for (int nn = 1; nn < n; ++nn) {
            for (int mm = 0; mm < nn; ++mm) {
                const TaylorForm g =
                    taylor_linearize(hhat, ref.beamformers[mm] / bp.power_unit);
                auto soc = p.add_second_order(
                    4, "ord_" + std::to_string(k) + "_" + std::to_string(nn) + "_" +
                           std::to_string(mm));
                // t0 = (g+1)/2 over w_mm
                auto t0_row = p.add_equality_row(-(g.constant + 1.0) / 2.0);
                for (int i = 0; i < m; ++i) {
                    p.add_coefficient(t0_row, bp.power_slices[mm].offset + 1 + i,
                                      g.gradient(i).real());
                    p.add_coefficient(t0_row, bp.power_slices[mm].offset + 1 + m + i,
                                      g.gradient(i).imag());
                }
                p.add_coefficient(t0_row, soc.offset, -1.0);
                // middle: Re / Im of h_k^H w_nn
                auto re_row = p.add_equality_row(0.0);
                for (int i = 0; i < m; ++i) {
                    p.add_coefficient(re_row, bp.power_slices[nn].offset + 1 + i, hhat(i).real());
                    p.add_coefficient(re_row, bp.power_slices[nn].offset + 1 + m + i,
                                      hhat(i).imag());
                }
                p.add_coefficient(re_row, soc.offset + 1, -1.0);
                auto im_row = p.add_equality_row(0.0);
                for (int i = 0; i < m; ++i) {
                    p.add_coefficient(im_row, bp.power_slices[nn].offset + 1 + m + i,
                                      hhat(i).real());
                    p.add_coefficient(im_row, bp.power_slices[nn].offset + 1 + i,
                                      -hhat(i).imag());
                }
                p.add_coefficient(im_row, soc.offset + 2, -1.0);
                // t1 = (g-1)/2
                auto t1_row = p.add_equality_row(-(g.constant - 1.0) / 2.0);
                for (int i = 0; i < m; ++i) {
                    p.add_coefficient(t1_row, bp.power_slices[mm].offset + 1 + i,
                                      g.gradient(i).real());
                    p.add_coefficient(t1_row, bp.power_slices[mm].offset + 1 + m + i,
                                      g.gradient(i).imag());
                }
                p.add_coefficient(t1_row, soc.offset + 3, -1.0);
            }
        }
    }
    return bp;
}

namespace {

struct FeasibilityOutcome {
    bool certified = false;
    bool ordering_failed = false;  // rates passed, exact chain did not
    double subproblem_power = std::numeric_limits<double>::quiet_NaN();
    BeamformerSet witness;
};

FeasibilityOutcome probe_rate(const ChannelSet& channels, const SystemConfig& config,
                              double alpha, BeamformerSet ref,
                              const BisectionOptions& options) {
    FeasibilityOutcome outcome;
    const double budget = *config.power_budget;
    const std::vector<double> gamma(channels.num_users(), rate_to_min_sinr(alpha));

    for (int inner = 0; inner < options.inner_max_iters; ++inner) {
        const auto subproblem =
            build_feasibility_subproblem(channels, alpha, config.noise_variance, ref);
        const auto report = conic::solve(subproblem.program, options.solver);
        if (report.status == conic::SolveStatus::infeasible ||
            report.status == conic::SolveStatus::unbounded || report.primal.size() == 0)
            return outcome;
        // Certification below rests on exact re-verification, so any
        // returned iterate is worth testing even at reduced accuracy.
        BeamformerSet candidate = subproblem.beamformers(report);
        normalize_phases(channels, candidate);
        outcome.subproblem_power = candidate.total_power();

        if (outcome.subproblem_power <= budget * (1.0 + 1e-9)) {
            const bool rates_ok =
                max_relative_sinr_violation(channels, candidate, gamma,
                                            config.noise_variance) <= 1e-6;
            const bool ordering_ok = check_sic_ordering(channels, candidate).ok;
            if (rates_ok && !ordering_ok) outcome.ordering_failed = true;
            if (rates_ok && ordering_ok) {
                outcome.certified = true;
                outcome.witness = std::move(candidate);
                return outcome;
            }
        }

        double change = 0.0;
        for (int k = 0; k < channels.num_users(); ++k)
            change = std::max(change, (candidate.beamformers[k] - ref.beamformers[k])
                                          .cwiseAbs()
                                          .maxCoeff());
        change /= std::max(1.0, subproblem.power_unit);
        ref = std::move(candidate);
        if (change <= options.inner_epsilon) break;  // converged without certification
    }
    return outcome;
}

}  // namespace

MaxMinResult solve_maxmin(const ChannelSet& channels, const SystemConfig& config,
                          const BisectionOptions& options) {
    config.validate();
    channels.validate();
    if (!config.power_budget) throw std::invalid_argument("max-min needs a power budget");
    const int n = channels.num_users();
    const int m = channels.num_antennas();
    if (config.num_users != n || config.num_antennas != m)
        throw std::invalid_argument("config does not match channel set");

    MaxMinResult result;
    result.beams.beamformers.assign(n, Eigen::VectorXcd::Zero(m));
    result.achieved_rates.assign(n, 0.0);

    const double best_gain = channels.channels.back().squaredNorm();
    if (!(best_gain > 0.0)) {
        result.degenerate = true;
        return result;
    }
    const double t_upper =
        std::log2(1.0 + *config.power_budget * best_gain / config.noise_variance);

    // Interval kept as (lower, width) so the width halves exactly.
    double lower = 0.0;
    double width = t_upper;

    // Initial reference: maximum-ratio directions at equal power.
    BeamformerSet ref;
    ref.beamformers.reserve(n);
    const double equal_power = *config.power_budget / n;
    for (const auto& h : channels.channels)
        ref.beamformers.push_back(std::sqrt(equal_power) * h / h.norm());

    int iteration = 0;
    bool any_certified = false;
    while (width > options.rate_tolerance && iteration < options.max_outer_iters) {
        const double candidate = lower + width / 2.0;
        const auto outcome = probe_rate(channels, config, candidate, ref, options);
        if (outcome.ordering_failed) ++result.ordering_violations;

        width *= 0.5;
        if (outcome.certified) {
            any_certified = true;
            lower = candidate;
            result.beams = outcome.witness;
            result.balanced_rate = candidate;
            ref = result.beams;  // warm start the next probe
        }
        result.log.push_back({iteration, lower, lower + width, width, candidate,
                              outcome.subproblem_power, outcome.certified});
        ++iteration;
    }
    result.degenerate = !any_certified;

    SystemConfig eval = config;
    eval.target_rates.assign(n, result.balanced_rate);
    const RateReport report = compute_rates(channels, result.beams, eval);
    result.achieved_rates = report.rates;
    result.total_power = report.total_power;
    return result;
}

std::string bisection_log_csv(const MaxMinResult& result) {
    std::ostringstream os;
    os << "iter,t_min,t_max,subproblem_power_W,certified\n";
    char buf[160];
    for (const auto& e : result.log) {
        std::snprintf(buf, sizeof(buf), "%d,%.12g,%.12g,%.12g,%d\n", e.iteration, e.t_lower,
                      e.t_upper, e.subproblem_power, e.certified ? 1 : 0);
        os << buf;
    }
    return os.str();
}

}  // namespace noma
