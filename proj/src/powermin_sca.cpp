// SPDX-License-Identifier: Apache-2.0

#include "noma/powermin.hpp"

#include <cmath>
#include <stdexcept>

namespace noma {

TaylorForm taylor_linearize(const Eigen::VectorXcd& h_l, const Eigen::VectorXcd& w_ref) {
    if (h_l.size() != w_ref.size()) throw std::invalid_argument("dimension mismatch");
    const std::complex<double> a = h_l.dot(w_ref);  // h_l^H w_ref
    TaylorForm form;
    form.gradient = a * h_l;
    form.constant = -std::norm(a);
    return form;
}

namespace {

struct NormalizedChannels {
    std::vector<Eigen::VectorXcd> h;   // unit-norm channels
    std::vector<double> sigma;         // per-user noise amplitude sigma/||h_l||
};

NormalizedChannels normalize(const ChannelSet& channels, double noise_variance) {
    NormalizedChannels out;
    const double sigma = std::sqrt(noise_variance);
    out.h.reserve(channels.channels.size());
    out.sigma.reserve(channels.channels.size());
    for (const auto& h : channels.channels) {
        const double n = h.norm();
        out.h.push_back(h / n);
        out.sigma.push_back(sigma / n);
    }
    return out;
}

// Row coefficients of Re(h^H w) and Im(h^H w) over the realified
// beamformer variables (Re w first, then Im w):
//   Re(h^H w) = Re(h)' Re(w) + Im(h)' Im(w)
//   Im(h^H w) = Re(h)' Im(w) - Im(h)' Re(w)
void add_re_inner(conic::ConicProgram& p, Eigen::Index row, const conic::SliceRef& power,
                  int m_ant, const Eigen::VectorXcd& h, double scale) {
    for (int i = 0; i < m_ant; ++i) {
        p.add_coefficient(row, power.offset + 1 + i, scale * h(i).real());
        p.add_coefficient(row, power.offset + 1 + m_ant + i, scale * h(i).imag());
    }
}

void add_im_inner(conic::ConicProgram& p, Eigen::Index row, const conic::SliceRef& power,
                  int m_ant, const Eigen::VectorXcd& h, double scale) {
    for (int i = 0; i < m_ant; ++i) {
        p.add_coefficient(row, power.offset + 1 + m_ant + i, scale * h(i).real());
        p.add_coefficient(row, power.offset + 1 + i, -scale * h(i).imag());
    }
}

// Taylor form restated over realified variables: g(w) = const + l' w_r
// with l = 2 (Re grad; Im grad)  [since 2 Re(grad^H w) = 2 Re(grad)'Re(w) + 2 Im(grad)'Im(w)]
void add_taylor_terms(conic::ConicProgram& p, Eigen::Index row, const conic::SliceRef& power,
                      int m_ant, const TaylorForm& g, double scale) {
    for (int i = 0; i < m_ant; ++i) {
        p.add_coefficient(row, power.offset + 1 + i, scale * 2.0 * g.gradient(i).real());
        p.add_coefficient(row, power.offset + 1 + m_ant + i, scale * 2.0 * g.gradient(i).imag());
    }
}

}  // namespace

Eigen::VectorXcd BeamformerProgram::beamformer(const conic::SolveReport& report, int k) const {
    const auto& slice = power_slices.at(k);
    Eigen::VectorXcd w(num_antennas);
    for (int i = 0; i < num_antennas; ++i)
        w(i) = std::complex<double>(report.primal(slice.offset + 1 + i),
                                    report.primal(slice.offset + 1 + num_antennas + i));
    return power_unit * w;
}

BeamformerSet BeamformerProgram::beamformers(const conic::SolveReport& report) const {
    BeamformerSet set;
    set.beamformers.reserve(power_slices.size());
    for (std::size_t k = 0; k < power_slices.size(); ++k)
        set.beamformers.push_back(beamformer(report, static_cast<int>(k)));
    return set;
}

BeamformerProgram build_sca_subproblem(const ChannelSet& channels,
                                       const std::vector<double>& gamma_min,
                                       double noise_variance, const BeamformerSet& ref) {
    channels.validate();
    const int n = channels.num_users();
    const int m = channels.num_antennas();
    if (static_cast<int>(gamma_min.size()) != n)
        throw std::invalid_argument("gamma_min must have one entry per user");
    if (ref.num_users() != n) throw std::invalid_argument("reference set size mismatch");
    auto nc = normalize(channels, noise_variance);

    BeamformerProgram bp;
    bp.num_antennas = m;

    // Power-unit rescaling: per-user optimal powers behave like
    // gamma_k sigma_k^2, so dividing amplitudes by s keeps iterates O(1)
    // regardless of the physical pathloss scale.
    double scale2 = 0.0;
    for (int k = 0; k < n; ++k) {
        scale2 = std::max(scale2, gamma_min[k] * nc.sigma[k] * nc.sigma[k]);
        scale2 = std::max(scale2, ref.beamformers[k].squaredNorm());
    }
    bp.power_unit = scale2 > 0.0 ? std::sqrt(scale2) : 1.0;
    for (auto& s : nc.sigma) s /= bp.power_unit;
    BeamformerSet scaled_ref = ref;
    for (auto& w : scaled_ref.beamformers) w /= bp.power_unit;

    auto& p = bp.program;

    // Power epigraphs and the objective sum_k (alpha_k + beta_k)
    for (int k = 0; k < n; ++k) {
        auto slice = p.add_second_order(2 * m + 2, "power_" + std::to_string(k));
        bp.power_slices.push_back(slice);
        p.add_objective_term(slice.offset, 1.0);
        p.add_objective_term(slice.offset + 2 * m + 1, 1.0);
        const auto row = p.add_equality_row(1.0);  // alpha - beta = 1
        p.add_coefficient(row, slice.offset, 1.0);
        p.add_coefficient(row, slice.offset + 2 * m + 1, -1.0);
    }

    for (int k = 0; k < n; ++k) {
        if (gamma_min[k] == 0.0) continue;  // vacuous rate constraint
        const double sqrt_gamma = std::sqrt(gamma_min[k]);

        // l = k decoder: sqrt(gamma) ||(h_k^H w_{k+1..}, sigma_k)|| <= Re(h_k^H w_k),
        // with the phase pinned by Im(h_k^H w_k) = 0.
        {
            const Eigen::Index dim = 1 + 2 * (n - 1 - k) + 1;
            auto soc = p.add_second_order(dim, "rate_" + std::to_string(k));
            auto head = p.add_equality_row(0.0);
            add_re_inner(p, head, bp.power_slices[k], m, nc.h[k], 1.0 / sqrt_gamma);
            p.add_coefficient(head, soc.offset, -1.0);
            Eigen::Index pos = 1;
            for (int mm = k + 1; mm < n; ++mm) {
                auto re_row = p.add_equality_row(0.0);
                add_re_inner(p, re_row, bp.power_slices[mm], m, nc.h[k], 1.0);
                p.add_coefficient(re_row, soc.offset + pos++, -1.0);
                auto im_row = p.add_equality_row(0.0);
                add_im_inner(p, im_row, bp.power_slices[mm], m, nc.h[k], 1.0);
                p.add_coefficient(im_row, soc.offset + pos++, -1.0);
            }
            auto sig_row = p.add_equality_row(nc.sigma[k]);
            p.add_coefficient(sig_row, soc.offset + pos, 1.0);

            auto im_phase = p.add_equality_row(0.0);
            add_im_inner(p, im_phase, bp.power_slices[k], m, nc.h[k], 1.0);
        }

        // l > k decoders, Taylor-linearized right side:
        //   gamma_k (sum_{m>k} |h_l^H w_m|^2 + sigma_l^2) <= g_l(w_k, ref)
        // encoded as || (sqrt(gamma) cross terms, sqrt(gamma) sigma_l, t1) || <= t0
        // with t0 = (g+1)/2, t1 = (g-1)/2.
        for (int l = k + 1; l < n; ++l) {
            const TaylorForm g = taylor_linearize(nc.h[l], scaled_ref.beamformers[k]);
            const Eigen::Index dim = 2 + 2 * (n - 1 - k) + 1;
            auto soc = p.add_second_order(dim, "lin_" + std::to_string(k) + "_" + std::to_string(l));

            auto t0_row = p.add_equality_row(-(g.constant + 1.0) / 2.0);
            add_taylor_terms(p, t0_row, bp.power_slices[k], m, g, 0.5);
            p.add_coefficient(t0_row, soc.offset, -1.0);

            Eigen::Index pos = 1;
            for (int mm = k + 1; mm < n; ++mm) {
                auto re_row = p.add_equality_row(0.0);
                add_re_inner(p, re_row, bp.power_slices[mm], m, nc.h[l], sqrt_gamma);
                p.add_coefficient(re_row, soc.offset + pos++, -1.0);
                auto im_row = p.add_equality_row(0.0);
                add_im_inner(p, im_row, bp.power_slices[mm], m, nc.h[l], sqrt_gamma);
                p.add_coefficient(im_row, soc.offset + pos++, -1.0);
            }
            auto sig_row = p.add_equality_row(sqrt_gamma * nc.sigma[l]);
            p.add_coefficient(sig_row, soc.offset + pos++, 1.0);

            auto t1_row = p.add_equality_row(-(g.constant - 1.0) / 2.0);
            add_taylor_terms(p, t1_row, bp.power_slices[k], m, g, 0.5);
            p.add_coefficient(t1_row, soc.offset + pos, -1.0);
        }
    }
    return bp;
}

double max_relative_sinr_violation(const ChannelSet& channels, const BeamformerSet& beams,
                                   const std::vector<double>& gamma_min,
                                   double noise_variance) {
    const int n = channels.num_users();
    double worst = 0.0;
    for (int k = 0; k < n; ++k) {
        if (gamma_min[k] == 0.0) continue;
        for (int l = k; l < n; ++l) {
            const double sinr = compute_sinr(channels, beams, noise_variance, k, l);
            worst = std::max(worst, (gamma_min[k] - sinr) / gamma_min[k]);
        }
    }
    return std::max(0.0, worst);
}

std::optional<std::vector<double>> rescale_powers_for_targets(
    const ChannelSet& channels, const std::vector<Eigen::VectorXcd>& unit_directions,
    const std::vector<double>& gamma_min, double noise_variance) {
    const int n = channels.num_users();
    // gains(l, m) = |h_l^H d_m|^2
    Eigen::MatrixXd gains(n, n);
    for (int l = 0; l < n; ++l)
        for (int mm = 0; mm < n; ++mm)
            gains(l, mm) = std::norm(channels.channels[l].dot(unit_directions[mm]));

    std::vector<double> powers(n, 0.0);
    for (int k = n - 1; k >= 0; --k) {
        if (gamma_min[k] == 0.0) continue;
        double need = 0.0;
        for (int l = k; l < n; ++l) {
            double interference = 0.0;
            for (int mm = k + 1; mm < n; ++mm) interference += powers[mm] * gains(l, mm);
            const double rhs = gamma_min[k] * (interference + noise_variance);
            if (gains(l, k) <= 0.0) {
                if (rhs > 0.0) return std::nullopt;
                continue;
            }
            need = std::max(need, rhs / gains(l, k));
        }
        powers[k] = need;
    }
    return powers;
}

void normalize_phases(const ChannelSet& channels, BeamformerSet& beams) {
    for (int k = 0; k < beams.num_users(); ++k) {
        const std::complex<double> inner = channels.channels[k].dot(beams.beamformers[k]);
        const double mag = std::abs(inner);
        if (mag > 0.0) beams.beamformers[k] *= std::conj(inner) / mag;
    }
}

namespace {

// Matched-filter directions with powers making the l = k constraints
// tight; powers doubled up to 2^10 if some l > k constraint fails.
std::optional<BeamformerSet> mrt_tight_init(const ChannelSet& channels,
                                            const std::vector<double>& gamma_min,
                                            double noise_variance) {
    const int n = channels.num_users();
    std::vector<Eigen::VectorXcd> directions;
    directions.reserve(n);
    for (const auto& h : channels.channels) directions.push_back(h / h.norm());

    std::vector<double> powers(n, 0.0);
    for (int k = n - 1; k >= 0; --k) {
        double interference = 0.0;
        for (int mm = k + 1; mm < n; ++mm)
            interference += powers[mm] * std::norm(channels.channels[k].dot(directions[mm]));
        const double gain = std::norm(channels.channels[k].dot(directions[k]));
        powers[k] = gamma_min[k] * (interference + noise_variance) / gain;
    }

    for (int doubling = 0; doubling <= 10; ++doubling) {
        BeamformerSet candidate;
        candidate.beamformers.reserve(n);
        for (int k = 0; k < n; ++k)
            candidate.beamformers.push_back(std::sqrt(powers[k]) * directions[k]);
        if (max_relative_sinr_violation(channels, candidate, gamma_min, noise_variance) <= 0.0)
            return candidate;
        for (auto& pw : powers) pw *= 2.0;
    }
    return std::nullopt;
}

}  // namespace

ScaResult solve_powermin_sca(const ChannelSet& channels, const SystemConfig& config,
                             const ScaOptions& options) {
    config.validate();
    channels.validate();
    const int n = channels.num_users();
    const int m = channels.num_antennas();
    if (config.num_users != n || config.num_antennas != m)
        throw std::invalid_argument("config does not match channel set");
    const std::vector<double> gamma = min_sinr_targets(config);

    ScaResult result;
    bool all_zero = true;
    for (double g : gamma) all_zero &= g == 0.0;
    if (all_zero) {
        result.beams.beamformers.assign(n, Eigen::VectorXcd::Zero(m));
        result.trace.total_power.push_back(0.0);
        result.trace.max_residual.push_back(0.0);
        result.trace.converged = true;
        return result;
    }

    BeamformerSet ref;
    if (options.initial) {
        ref = *options.initial;
    } else {
        std::optional<BeamformerSet> init;
        if (options.init == ScaInit::mrt_tight)
            init = mrt_tight_init(channels, gamma, config.noise_variance);
        if (!init && (options.init == ScaInit::sdr_warm || options.allow_sdr_fallback)) {
            SdrOptions sdr_options;
            sdr_options.solver = options.solver;
            sdr_options.allow_sca_fallback = false;
            const SdrSolution warm = solve_powermin_sdr(channels, config, sdr_options);
            if (warm.recovery != SdrSolution::Recovery::none) init = warm.beams;
        }
        if (!init) {
            result.status = ScaStatus::infeasible_subproblem;
            result.failed_iteration = 0;
            return result;
        }
        ref = std::move(*init);
    }
    normalize_phases(channels, ref);

    BeamformerSet current = ref;
    for (int iter = 0; iter < options.max_iters; ++iter) {
        const auto subproblem = build_sca_subproblem(channels, gamma, config.noise_variance, ref);
        const auto report = conic::solve(subproblem.program, options.solver);
        if (report.status == conic::SolveStatus::infeasible) {
            result.status = ScaStatus::infeasible_subproblem;
            result.failed_iteration = iter;
            result.beams = current;
            return result;
        }
        const bool usable = report.status == conic::SolveStatus::optimal ||
                            (std::isfinite(report.objective) &&
                             report.max_primal_residual <= 1e-6 &&
                             report.max_dual_residual <= 1e-6);
        if (!usable) {
            result.status = ScaStatus::solver_failure;
            result.failed_iteration = iter;
            result.beams = current;
            return result;
        }

        current = subproblem.beamformers(report);
        normalize_phases(channels, current);

        const double power = current.total_power();
        if (!result.trace.total_power.empty()) {
            const double prev = result.trace.total_power.back();
            if (power > prev * (1.0 + 1e-9) + 1e-9) result.trace.monotone = false;
        }
        result.trace.total_power.push_back(power);
        result.trace.max_residual.push_back(
            max_relative_sinr_violation(channels, current, gamma, config.noise_variance));
        result.trace.iterations = iter + 1;

        // Beamformer change measured in the subproblem's power units:
        // solver wobble scales with the physical amplitude, so the plain
        // infinity norm would never settle on strongly attenuated
        // channels.
        double change = 0.0;
        for (int k = 0; k < n; ++k)
            change = std::max(change, (current.beamformers[k] - ref.beamformers[k])
                                          .cwiseAbs()
                                          .maxCoeff());
        change /= std::max(1.0, subproblem.power_unit);
        ref = current;
        if (change <= options.epsilon) {
            result.trace.converged = true;
            break;
        }
    }

    result.beams = current;
    if (!result.trace.converged) result.status = ScaStatus::iteration_limit;
    return result;
}

}  // namespace noma
