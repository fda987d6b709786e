// SPDX-License-Identifier: Apache-2.0

#include "noma/robust.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "noma/model.hpp"

namespace noma {

double erf_inverse(double y) {
    if (!(std::abs(y) < 1.0)) throw std::invalid_argument("erf_inverse needs |y| < 1");
    if (y == 0.0) return 0.0;
    // Winitzki initial guess, then Newton on erf (quadratic convergence;
    // 4 steps reach 1e-15 over the whole open interval).
    const double a = 0.147;
    const double ln1my2 = std::log(1.0 - y * y);
    const double term = 2.0 / (std::numbers::pi * a) + ln1my2 / 2.0;
    double x = std::copysign(std::sqrt(std::sqrt(term * term - ln1my2 / a) - term), y);
    const double two_over_sqrt_pi = 2.0 / std::sqrt(std::numbers::pi);
    for (int i = 0; i < 6; ++i) {
        const double err = std::erf(x) - y;
        const double deriv = two_over_sqrt_pi * std::exp(-x * x);
        const double step = err / deriv;
        x -= step;
        if (std::abs(step) < 1e-16 * std::max(1.0, std::abs(x))) break;
    }
    return x;
}

double gaussian_trace_std(const Eigen::MatrixXcd& y, const Eigen::MatrixXd& entry_std) {
    if (y.rows() != entry_std.rows() || y.cols() != entry_std.cols())
        throw std::invalid_argument("dimension mismatch");
    return y.cwiseAbs().cwiseProduct(entry_std).norm();
}

Eigen::MatrixXcd robust_constraint_matrix(const std::vector<Eigen::MatrixXcd>& w_set, int k,
                                          double gamma_k) {
    if (!(gamma_k > 0.0)) throw std::invalid_argument("gamma must be > 0");
    Eigen::MatrixXcd b = w_set.at(k) / gamma_k;
    for (std::size_t m = k + 1; m < w_set.size(); ++m) b -= w_set[m];
    return b;
}

namespace {

double scale_factor(double rho) {
    if (!(rho > 0.0 && rho < 0.5))
        throw std::invalid_argument("outage probability must lie in (0, 0.5)");
    return std::numbers::sqrt2 * erf_inverse(1.0 - 2.0 * rho);
}

}  // namespace

double robust_soc_margin(const std::vector<Eigen::MatrixXcd>& w_set, int k,
                         const Eigen::MatrixXcd& nominal_cov_l,
                         const Eigen::MatrixXd& error_std, double gamma_k,
                         double noise_variance, double rho_k) {
    const Eigen::MatrixXcd b = robust_constraint_matrix(w_set, k, gamma_k);
    const double phi = (b * nominal_cov_l).trace().real() - noise_variance;
    return phi - scale_factor(rho_k) * gaussian_trace_std(b, error_std);
}

Eigen::MatrixXcd robust_lmi_block(const std::vector<Eigen::MatrixXcd>& w_set, int k,
                                  const Eigen::MatrixXcd& nominal_cov_l,
                                  const Eigen::MatrixXd& error_std, double gamma_k,
                                  double noise_variance, double rho_k) {
    const Eigen::MatrixXcd b = robust_constraint_matrix(w_set, k, gamma_k);
    const double phi = (b * nominal_cov_l).trace().real() - noise_variance;
    const double diag = phi / scale_factor(rho_k);
    const Eigen::Index m = b.rows();
    const Eigen::Index dim = m * m + 1;
    Eigen::MatrixXcd block = Eigen::MatrixXcd::Zero(dim, dim);
    block.diagonal().setConstant(diag);
    // vec stacks columns of -B o Sigma
    Eigen::Index idx = 0;
    for (Eigen::Index j = 0; j < m; ++j)
        for (Eigen::Index i = 0; i < m; ++i) {
            const std::complex<double> v = -b(i, j) * error_std(i, j);
            block(idx, dim - 1) = v;
            block(dim - 1, idx) = std::conj(v);
            ++idx;
        }
    return block;
}

namespace {

struct RobustProgram {
    conic::ConicProgram program;
    std::vector<conic::SliceRef> matrix_slices;
    double power_unit2 = 1.0;
    int num_antennas = 0;
};

// Coefficients of the real functional W_set -> Re Tr(G B_k) over the
// embedded slices (B_k = gamma^-1 W_k - sum_{m>k} W_m).
void add_b_form(conic::ConicProgram& p, Eigen::Index row,
                const std::vector<conic::SliceRef>& slices, int k, double gamma_k,
                const Eigen::MatrixXcd& g, double scale) {
    const Eigen::VectorXd coeffs = conic::hermitian_form_coefficients(g);
    p.add_coefficient_block(row, slices[k], (scale / gamma_k) * coeffs);
    for (std::size_t m = k + 1; m < slices.size(); ++m)
        p.add_coefficient_block(row, slices[m], -scale * coeffs);
}

RobustProgram build_robust_program(const UncertaintyModel& model, const SystemConfig& config,
                                   bool robust, bool use_lmi_form) {
    model.validate();
    config.validate();
    const int n = model.num_users();
    const int m = static_cast<int>(model.error_std.rows());
    if (config.num_users != n || config.num_antennas != m)
        throw std::invalid_argument("config does not match uncertainty model");
    const std::vector<double> gamma = min_sinr_targets(config);
    for (int k = 0; k < n; ++k)
        if (!(gamma[k] > 0.0))
            throw std::invalid_argument("robust design needs positive rate targets");
    if (robust)
        for (double rho : model.outage) scale_factor(rho);  // validates rho < 0.5

    RobustProgram rp;
    rp.num_antennas = m;

    // Power units keeping Tr(W) iterates O(1).
    double scale2 = 0.0;
    for (int k = 0; k < n; ++k) {
        const double top = model.nominal_covariances[k].norm();  // Frobenius ~ lambda_max
        scale2 = std::max(scale2, gamma[k] * config.noise_variance / top);
    }
    rp.power_unit2 = scale2 > 0.0 ? scale2 : 1.0;

    auto& p = rp.program;
    const Eigen::VectorXd trace_coeffs =
        conic::hermitian_form_coefficients(Eigen::MatrixXcd::Identity(m, m));
    for (int k = 0; k < n; ++k) {
        auto slice = p.add_psd(2 * m, "W_" + std::to_string(k));
        rp.matrix_slices.push_back(slice);
        p.add_objective_block(slice, trace_coeffs);
    }

    for (int k = 0; k < n; ++k) {
        for (int l = k; l < n; ++l) {
            const Eigen::MatrixXcd& cov = model.nominal_covariances[l];
            const double cov_scale = cov.norm();
            const double sigma2_scaled =
                config.noise_variance / (rp.power_unit2 * cov_scale);
            const Eigen::MatrixXcd cov_hat = cov / cov_scale;
            const bool has_uncertainty = robust && model.error_std.maxCoeff() > 0.0;
            const std::string tag = std::to_string(k) + "_" + std::to_string(l);

            if (!has_uncertainty) {
                // Phi_kl >= 0 collapses to the nominal SINR constraint.
                auto slack = p.add_nonnegative(1, "phi_" + tag);
                const auto row = p.add_equality_row(sigma2_scaled);
                add_b_form(p, row, rp.matrix_slices, k, gamma[k], cov_hat, 1.0);
                p.add_coefficient(row, slack.offset, -1.0);
                continue;
            }

            const double c_rho = scale_factor(model.outage[k]);
            if (!use_lmi_form) {
                // (t; v) in SOC: t = Phi/c_rho, v = vec(-B o Sigma),
                // rows normalized by the covariance scale.
                std::vector<std::pair<int, int>> entries;
                for (int j = 0; j < m; ++j)
                    for (int i = 0; i < m; ++i)
                        if (model.error_std(i, j) > 0.0) entries.emplace_back(i, j);
                auto soc = p.add_second_order(1 + 2 * static_cast<Eigen::Index>(entries.size()),
                                              "cc_" + tag);
                const auto t_row = p.add_equality_row(sigma2_scaled / c_rho);
                add_b_form(p, t_row, rp.matrix_slices, k, gamma[k], cov_hat, 1.0 / c_rho);
                p.add_coefficient(t_row, soc.offset, -1.0);
                Eigen::Index pos = 1;
                for (const auto& [i, j] : entries) {
                    const double sd = model.error_std(i, j) / cov_scale;
                    // Re(-B_ij), Im(-B_ij) as Hermitian forms of B
                    Eigen::MatrixXcd g_re = Eigen::MatrixXcd::Zero(m, m);
                    g_re(j, i) += 0.5;
                    g_re(i, j) += 0.5;
                    Eigen::MatrixXcd g_im = Eigen::MatrixXcd::Zero(m, m);
                    g_im(j, i) += std::complex<double>(0.0, 0.5);
                    g_im(i, j) += std::complex<double>(0.0, -0.5);
                    auto re_row = p.add_equality_row(0.0);
                    add_b_form(p, re_row, rp.matrix_slices, k, gamma[k], g_re, -sd);
                    p.add_coefficient(re_row, soc.offset + pos++, -1.0);
                    auto im_row = p.add_equality_row(0.0);
                    add_b_form(p, im_row, rp.matrix_slices, k, gamma[k], g_im, -sd);
                    p.add_coefficient(im_row, soc.offset + pos++, -1.0);
                }
            } else {
                // Full LMI block, entrywise-pinned PSD slack of order
                // 2(M^2+1). Affine coefficients are extracted by
                // evaluating the block map on unit variables.
                const Eigen::Index block_order = m * m + 1;
                auto slack = p.add_psd(2 * block_order, "lmi_" + tag);

                std::vector<Eigen::MatrixXcd> zero_w(
                    n, Eigen::MatrixXcd::Zero(m, m));
                const Eigen::MatrixXd scaled_std = model.error_std / cov_scale;
                const auto eval_block = [&](const std::vector<Eigen::MatrixXcd>& w_set) {
                    return robust_lmi_block(w_set, k, cov_hat, scaled_std, gamma[k],
                                            sigma2_scaled, model.outage[k]);
                };
                const Eigen::VectorXd const_part =
                    conic::svec(conic::embed_hermitian(eval_block(zero_w)));

                const Eigen::Index var_count = rp.matrix_slices[0].size;
                std::vector<Eigen::VectorXd> var_parts;
                var_parts.reserve(n * var_count);
                for (int u = 0; u < n; ++u) {
                    for (Eigen::Index q = 0; q < var_count; ++q) {
                        Eigen::VectorXd unit = Eigen::VectorXd::Zero(var_count);
                        unit(q) = 1.0;
                        std::vector<Eigen::MatrixXcd> w_set = zero_w;
                        w_set[u] = conic::hermitian_from_embedding(conic::smat(unit));
                        var_parts.push_back(
                            conic::svec(conic::embed_hermitian(eval_block(w_set))) -
                            const_part);
                    }
                }
                for (Eigen::Index e = 0; e < slack.size; ++e) {
                    const auto row = p.add_equality_row(-const_part(e));
                    p.add_coefficient(row, slack.offset + e, -1.0);
                    for (int u = 0; u < n; ++u)
                        for (Eigen::Index q = 0; q < var_count; ++q)
                            p.add_coefficient(row, rp.matrix_slices[u].offset + q,
                                              var_parts[u * var_count + q](e));
                }
            }
        }
    }
    return rp;
}

std::vector<double> lmi_margins_at(const std::vector<Eigen::MatrixXcd>& w_set,
                                   const UncertaintyModel& model,
                                   const std::vector<double>& gamma, double noise_variance,
                                   bool robust) {
    const int n = model.num_users();
    std::vector<double> margins;
    for (int k = 0; k < n; ++k) {
        for (int l = k; l < n; ++l) {
            if (robust) {
                const Eigen::MatrixXcd block =
                    robust_lmi_block(w_set, k, model.nominal_covariances[l], model.error_std,
                                     gamma[k], noise_variance, model.outage[k]);
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(block,
                                                                    Eigen::EigenvaluesOnly);
                margins.push_back(eig.eigenvalues().minCoeff());
            } else {
                const Eigen::MatrixXcd b = robust_constraint_matrix(w_set, k, gamma[k]);
                margins.push_back((b * model.nominal_covariances[l]).trace().real() -
                                  noise_variance);
            }
        }
    }
    return margins;
}

bool all_margins_ok(const std::vector<Eigen::MatrixXcd>& w_set, const UncertaintyModel& model,
                    const std::vector<double>& gamma, double noise_variance, bool robust,
                    double tol) {
    const int n = model.num_users();
    for (int k = 0; k < n; ++k)
        for (int l = k; l < n; ++l) {
            const double margin =
                robust
                    ? robust_soc_margin(w_set, k, model.nominal_covariances[l],
                                        model.error_std, gamma[k], noise_variance,
                                        model.outage[k])
                    : (robust_constraint_matrix(w_set, k, gamma[k]) *
                       model.nominal_covariances[l])
                              .trace()
                              .real() -
                          noise_variance;
            if (margin < -tol) return false;
        }
    return true;
}

RobustDesignResult solve_design(const UncertaintyModel& model, const SystemConfig& config,
                                const RobustOptions& options, bool robust) {
    RobustDesignResult result;
    const int n = model.num_users();
    const std::vector<double> gamma = min_sinr_targets(config);

    const auto rp = build_robust_program(model, config, robust, options.use_lmi_form);
    const auto report = conic::solve(rp.program, options.solver);
    result.solver_status = report.status;
    if (report.status != conic::SolveStatus::optimal) return result;

    result.matrices.reserve(n);
    std::vector<Eigen::VectorXcd> extracted(n);
    double max_gap = 0.0;
    result.total_power = 0.0;
    for (int k = 0; k < n; ++k) {
        result.matrices.push_back(
            rp.power_unit2 *
            conic::hermitian_from_embedding(conic::smat(report.slice(rp.matrix_slices[k]))));
        result.total_power += result.matrices.back().trace().real();
        const auto ext = conic::extract_rank_one(result.matrices.back());
        extracted[k] = ext.vector;
        result.rank_one_gaps.push_back(ext.gap);
        max_gap = std::max(max_gap, ext.gap);
    }
    result.lmi_margins =
        lmi_margins_at(result.matrices, model, gamma, config.noise_variance, robust);

    const double margin_tol = 1e-7 * std::max(1.0, config.noise_variance);
    const auto to_wset = [n](const std::vector<Eigen::VectorXcd>& beams) {
        std::vector<Eigen::MatrixXcd> w_set;
        w_set.reserve(n);
        for (const auto& w : beams) w_set.push_back(w * w.adjoint());
        return w_set;
    };

    if (max_gap <= options.rank_one_threshold) {
        // Uniform scale-up absorbs the PSD dust dropped by extraction.
        std::vector<Eigen::VectorXcd> beams = extracted;
        double scale = 1.0;
        bool repairable = true;
        for (int k = 0; k < n && repairable; ++k) {
            for (int l = k; l < n; ++l) {
                const auto w_set = to_wset(beams);
                const double margin_at_zero_noise =
                    robust ? robust_soc_margin(w_set, k, model.nominal_covariances[l],
                                               model.error_std, gamma[k], 0.0,
                                               model.outage[k])
                           : (robust_constraint_matrix(w_set, k, gamma[k]) *
                              model.nominal_covariances[l])
                                 .trace()
                                 .real();
                if (margin_at_zero_noise <= 0.0) {
                    repairable = false;
                    break;
                }
                scale = std::max(scale, config.noise_variance / margin_at_zero_noise);
            }
        }
        if (repairable && scale <= 1.0 + 1e-3) {
            const double amp = std::sqrt(scale);
            for (auto& w : beams) w *= amp;
            if (all_margins_ok(to_wset(beams), model, gamma, config.noise_variance, robust,
                               margin_tol)) {
                result.beams.beamformers = std::move(beams);
                result.recovered_power = result.beams.total_power();
                result.recovery = RobustDesignResult::Recovery::eigenvector;
                return result;
            }
        }
    }

    // Randomization: directions from W^{1/2}, per-user power split from
    // the matrix traces, one scalar scale restoring feasibility.
    const auto rescale =
        [&](const std::vector<Eigen::VectorXcd>& dirs) -> std::optional<std::vector<double>> {
        std::vector<double> base(n);
        for (int k = 0; k < n; ++k) base[k] = result.matrices[k].trace().real();
        std::vector<Eigen::MatrixXcd> w_unit;
        w_unit.reserve(n);
        for (int k = 0; k < n; ++k)
            w_unit.push_back(base[k] * (dirs[k] * dirs[k].adjoint()));
        double scale = 0.0;
        for (int k = 0; k < n; ++k)
            for (int l = k; l < n; ++l) {
                const double unit_margin =
                    robust ? robust_soc_margin(w_unit, k, model.nominal_covariances[l],
                                               model.error_std, gamma[k], 0.0,
                                               model.outage[k])
                           : (robust_constraint_matrix(w_unit, k, gamma[k]) *
                              model.nominal_covariances[l])
                                 .trace()
                                 .real();
                if (unit_margin <= 0.0) return std::nullopt;
                scale = std::max(scale, config.noise_variance / unit_margin);
            }
        std::vector<double> powers(n);
        for (int k = 0; k < n; ++k) powers[k] = base[k] * scale;
        return powers;
    };
    const auto feasible = [&](const std::vector<Eigen::VectorXcd>& beams) {
        return all_margins_ok(to_wset(beams), model, gamma, config.noise_variance, robust,
                              margin_tol);
    };
    const auto randomized =
        conic::randomize_rank_one(result.matrices, rescale, feasible,
                                  options.randomization_count, options.randomization_seed);
    if (randomized.success) {
        result.beams.beamformers = randomized.beams;
        result.recovered_power = result.beams.total_power();
        result.recovery = RobustDesignResult::Recovery::randomization;
    }
    return result;
}

}  // namespace

RobustDesignResult solve_robust_powermin(const UncertaintyModel& model,
                                         const SystemConfig& config,
                                         const RobustOptions& options) {
    return solve_design(model, config, options, true);
}

RobustDesignResult solve_nonrobust_powermin(const UncertaintyModel& model,
                                            const SystemConfig& config,
                                            const RobustOptions& options) {
    return solve_design(model, config, options, false);
}

std::string OutageReport::histogram_csv() const {
    std::ostringstream os;
    os << "bin_left,bin_right,count,user_index\n";
    char buf[96];
    for (std::size_t user = 0; user < eta_histogram.size(); ++user) {
        for (int bin = 0; bin < kNumBins; ++bin) {
            std::snprintf(buf, sizeof(buf), "%.2f,%.2f,%d,%zu\n", bin * kBinWidth,
                          (bin + 1) * kBinWidth, eta_histogram[user][bin], user);
            os << buf;
        }
    }
    return os.str();
}

OutageReport evaluate_outage(const BeamformerSet& beams, const UncertaintyModel& model,
                             const std::vector<double>& gamma_min, double noise_variance,
                             int num_samples, OutageModel noise_model, std::uint64_t seed,
                             bool parallel) {
    if (num_samples < 1) throw std::invalid_argument("need at least one sample");
    const int n = model.num_users();
    if (beams.num_users() != n || static_cast<int>(gamma_min.size()) != n)
        throw std::invalid_argument("dimension mismatch");

    std::vector<double> target_rates(n);
    for (int k = 0; k < n; ++k) target_rates[k] = min_sinr_to_rate(gamma_min[k]);

    std::vector<Eigen::MatrixXcd> w_set;
    w_set.reserve(n);
    for (const auto& w : beams.beamformers) w_set.push_back(w * w.adjoint());

    // Surrogate margins are sample-independent; only the Gaussian draw
    // varies.
    Eigen::MatrixXd surrogate_phi(n, n), surrogate_sd(n, n);
    if (noise_model == OutageModel::scalar_surrogate) {
        for (int k = 0; k < n; ++k) {
            const Eigen::MatrixXcd b = robust_constraint_matrix(w_set, k, gamma_min[k]);
            const double sd = gaussian_trace_std(b, model.error_std);
            for (int l = k; l < n; ++l) {
                surrogate_phi(k, l) =
                    (b * model.nominal_covariances[l]).trace().real() - noise_variance;
                surrogate_sd(k, l) = sd;
            }
        }
    }

    // Per-sample outcomes gathered into preallocated slots, then reduced
    // serially: identical results for both execution modes.
    std::vector<std::uint8_t> satisfied(static_cast<std::size_t>(num_samples) * n, 0);
    std::vector<std::int16_t> bins(static_cast<std::size_t>(num_samples) * n, -1);

    const auto run_sample = [&](int s) {
        if (noise_model == OutageModel::hermitian) {
            const auto deltas = sample_uncertainty(model, seed, static_cast<std::uint64_t>(s));
            for (int k = 0; k < n; ++k) {
                double worst = std::numeric_limits<double>::infinity();
                for (int l = k; l < n; ++l) {
                    const Eigen::MatrixXcd cov = model.nominal_covariances[l] + deltas[l];
                    const double signal =
                        std::max(0.0, (beams.beamformers[k].adjoint() * cov *
                                       beams.beamformers[k])(0)
                                          .real());
                    double interference = 0.0;
                    for (int m = k + 1; m < n; ++m)
                        interference += std::max(0.0, (beams.beamformers[m].adjoint() * cov *
                                                       beams.beamformers[m])(0)
                                                          .real());
                    worst = std::min(worst, signal / (interference + noise_variance));
                }
                const double rate = std::log2(1.0 + worst);
                const double eta = target_rates[k] > 0.0
                                       ? rate / target_rates[k]
                                       : std::numeric_limits<double>::infinity();
                satisfied[static_cast<std::size_t>(s) * n + k] = eta >= 1.0 - 1e-12 ? 1 : 0;
                const int bin = std::clamp(
                    static_cast<int>(eta / OutageReport::kBinWidth), 0,
                    OutageReport::kNumBins - 1);
                bins[static_cast<std::size_t>(s) * n + k] = static_cast<std::int16_t>(bin);
            }
        } else {
            TrialRng rng(seed, static_cast<std::uint64_t>(s), rng_stream::outage);
            for (int k = 0; k < n; ++k) {
                bool ok = true;
                for (int l = k; l < n; ++l)
                    if (surrogate_phi(k, l) - surrogate_sd(k, l) * rng.normal() < 0.0)
                        ok = false;
                satisfied[static_cast<std::size_t>(s) * n + k] = ok ? 1 : 0;
            }
        }
    };

    if (parallel) {
#pragma omp parallel for schedule(static)
        for (int s = 0; s < num_samples; ++s) run_sample(s);
    } else {
        for (int s = 0; s < num_samples; ++s) run_sample(s);
    }

    OutageReport report;
    report.num_samples = num_samples;
    report.satisfaction.assign(n, 0.0);
    report.binomial_stderr.assign(n, 0.0);
    if (noise_model == OutageModel::hermitian)
        report.eta_histogram.assign(n, std::vector<int>(OutageReport::kNumBins, 0));
    for (int s = 0; s < num_samples; ++s) {
        for (int k = 0; k < n; ++k) {
            report.satisfaction[k] += satisfied[static_cast<std::size_t>(s) * n + k];
            if (noise_model == OutageModel::hermitian)
                report.eta_histogram[k][bins[static_cast<std::size_t>(s) * n + k]] += 1;
        }
    }
    for (int k = 0; k < n; ++k) {
        const double p = report.satisfaction[k] / num_samples;
        report.satisfaction[k] = p;
        report.binomial_stderr[k] = std::sqrt(p * (1.0 - p) / num_samples);
    }
    return report;
}

}  // namespace noma
