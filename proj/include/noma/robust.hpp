// SPDX-License-Identifier: Apache-2.0
//
// Outage-constrained power minimization under covariance uncertainty:
// each SINR constraint must hold with probability 1 - rho_k when the
// true covariance is the nominal one plus a Hermitian perturbation with
// known entrywise standard deviations. The chance constraints reduce to
// second-order cone conditions on the lifted matrices (equivalently an
// LMI per constraint, kept for conformance checks), solved as an SDP
// with rank-one recovery.

#pragma once

#include "noma/channel.hpp"
#include "noma/conic.hpp"
#include "noma/types.hpp"

namespace noma {

/// Inverse error function on (-1, 1), |error| < 1e-12.
double erf_inverse(double y);

/// Standard deviation of Tr(Y X) for Hermitian random X with entrywise
/// standard deviations entry_std: ||Y o entry_std||_F (Hadamard).
double gaussian_trace_std(const Eigen::MatrixXcd& y, const Eigen::MatrixXd& entry_std);

/// B_k = gamma_k^{-1} W_k - sum_{m>k} W_m, the matrix whose trace
/// against the covariance decides constraint (k, .).
Eigen::MatrixXcd robust_constraint_matrix(const std::vector<Eigen::MatrixXcd>& w_set, int k,
                                          double gamma_k);

/// Chance-constraint margin of block (k, l) at a given W set:
///
///   Phi_kl - sqrt(2) erf^-1(1 - 2 rho_k) || vec(-B_k o Sigma) ||,
///   Phi_kl = Tr(B_k C_hat_l) - sigma^2
///
/// Nonnegative iff the constraint holds. Requires rho_k < 0.5.
double robust_soc_margin(const std::vector<Eigen::MatrixXcd>& w_set, int k,
                         const Eigen::MatrixXcd& nominal_cov_l,
                         const Eigen::MatrixXd& error_std, double gamma_k,
                         double noise_variance, double rho_k);

/// The equivalent (M^2+1) x (M^2+1) Hermitian LMI block
///
///   C_kl = [[Phi/(sqrt(2) erf^-1(1-2 rho)) I,  vec(-B_k o Sigma)],
///           [vec^H(-B_k o Sigma),              Phi/(sqrt(2) erf^-1(1-2 rho))]]
///
/// evaluated at a numeric W set; C_kl >= 0 iff the SOC margin is >= 0.
Eigen::MatrixXcd robust_lmi_block(const std::vector<Eigen::MatrixXcd>& w_set, int k,
                                  const Eigen::MatrixXcd& nominal_cov_l,
                                  const Eigen::MatrixXd& error_std, double gamma_k,
                                  double noise_variance, double rho_k);

struct RobustOptions {
    conic::SolveOptions solver{.tol_feas = 1e-7};
    /// Default sends the (smaller) SOC encoding to the solver; the full
    /// LMI encoding is kept selectable for conformance runs.
    bool use_lmi_form = false;
    double rank_one_threshold = 1e-6;
    int randomization_count = 100;
    std::uint64_t randomization_seed = 1;
};

struct RobustDesignResult {
    conic::SolveStatus solver_status = conic::SolveStatus::numerical_failure;
    std::vector<Eigen::MatrixXcd> matrices;  ///< W_k
    BeamformerSet beams;                     ///< recovered rank-one vectors
    double total_power = std::numeric_limits<double>::quiet_NaN();  ///< sum Tr(W_k)
    double recovered_power = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> rank_one_gaps;
    /// Min eigenvalue of every C_kl block at the returned matrices,
    /// ordered (k, l = k..N-1).
    std::vector<double> lmi_margins;

    enum class Recovery { eigenvector, randomization, none };
    Recovery recovery = Recovery::none;
};

/// Outage-constrained design over the model's nominal covariances and
/// entrywise error standard deviations. Targets come from
/// config.target_rates, outage targets from model.outage (each must be
/// < 0.5). Infeasibility is reported through solver_status.
RobustDesignResult solve_robust_powermin(const UncertaintyModel& model,
                                         const SystemConfig& config,
                                         const RobustOptions& options = {});

/// Comparator that ignores the uncertainty: identical SDP with the
/// error standard deviations zeroed (nominal covariances as truth).
RobustDesignResult solve_nonrobust_powermin(const UncertaintyModel& model,
                                            const SystemConfig& config,
                                            const RobustOptions& options = {});

enum class OutageModel {
    hermitian,         ///< sample Hermitian Delta, evaluate covariance SINRs
    scalar_surrogate,  ///< replace Tr(B Delta) by ||B o Sigma||_F u, u ~ N(0,1)
};

struct OutageReport {
    int num_samples = 0;
    std::vector<double> satisfaction;       ///< per user, fraction with eta >= 1
    std::vector<double> binomial_stderr;    ///< sqrt(p(1-p)/n)
    /// Rate-satisfaction-ratio histogram, bins of width 0.05 over
    /// [0, 2] (edge bins absorb overflow); hermitian model only.
    static constexpr double kBinWidth = 0.05;
    static constexpr int kNumBins = 40;
    std::vector<std::vector<int>> eta_histogram;  ///< [user][bin]

    /// CSV rows (bin_left, bin_right, count, user_index).
    std::string histogram_csv() const;
};

/// Monte-Carlo satisfaction evaluation of a design. Per-sample draws
/// are seeded by (seed, sample index), so the parallel and serial paths
/// produce identical counts.
OutageReport evaluate_outage(const BeamformerSet& beams, const UncertaintyModel& model,
                             const std::vector<double>& gamma_min, double noise_variance,
                             int num_samples, OutageModel noise_model, std::uint64_t seed,
                             bool parallel = true);

}  // namespace noma
