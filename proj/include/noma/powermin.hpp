// SPDX-License-Identifier: Apache-2.0
//
// Transmit power minimization under per-user rate targets with perfect
// CSI, via two routes: an iterative Taylor-linearized SOCP scheme and a
// one-shot semidefinite relaxation with rank-one recovery.

#pragma once

#include "noma/conic.hpp"
#include "noma/model.hpp"
#include "noma/types.hpp"

namespace noma {

/// First-order expansion of f_l(w) = |h_l^H w|^2 around w_ref:
///
///   g(w) = |h_l^H w_ref|^2 + 2 Re[w_ref^H h_l h_l^H (w - w_ref)]
///        = constant + 2 Re(gradient^H w)
///
/// Tangent at w_ref and a global under-estimator of f_l (f is convex).
struct TaylorForm {
    Eigen::VectorXcd gradient;  ///< (h_l^H w_ref) h_l
    double constant = 0.0;      ///< -|h_l^H w_ref|^2

    double operator()(const Eigen::VectorXcd& w) const {
        return constant + 2.0 * gradient.dot(w).real();
    }
};

TaylorForm taylor_linearize(const Eigen::VectorXcd& h_l, const Eigen::VectorXcd& w_ref);

/// Conic subproblem plus the bookkeeping to read beamformers back out
/// of a solution vector. Programs are built in rescaled power units
/// (amplitudes divided by `power_unit`) so iterates stay O(1) whatever
/// the physical power scale; extraction undoes the scaling.
struct BeamformerProgram {
    conic::ConicProgram program;
    /// Power-epigraph slices, one per user: (alpha, Re w, Im w, beta)
    /// with alpha - beta = 1 and alpha + beta = ||w||^2 at the optimum.
    std::vector<conic::SliceRef> power_slices;
    int num_antennas = 0;
    double power_unit = 1.0;  ///< amplitude scale s; physical w = s * w_scaled

    Eigen::VectorXcd beamformer(const conic::SolveReport& report, int k) const;
    BeamformerSet beamformers(const conic::SolveReport& report) const;
};

/// One inner problem of the iterative scheme: exact SOC constraints for
/// the l = k decoders (with Im(h_k^H w_k) = 0) and Taylor-linearized
/// constraints for l > k, around `ref`. Channels are normalized per
/// user inside the builder (equivalent feasible set, better scaling).
BeamformerProgram build_sca_subproblem(const ChannelSet& channels,
                                       const std::vector<double>& gamma_min,
                                       double noise_variance, const BeamformerSet& ref);

enum class ScaInit { mrt_tight, sdr_warm };

struct ScaOptions {
    int max_iters = 30;
    /// Termination on max_k ||w_k^{t+1} - w_k^t||_inf, measured in the
    /// subproblem's power units so the test is scale-free.
    double epsilon = 1e-4;
    ScaInit init = ScaInit::mrt_tight;
    std::optional<BeamformerSet> initial;  ///< overrides `init` when set
    conic::SolveOptions solver{.tol_feas = 1e-7};
    bool allow_sdr_fallback = true;
};

struct ScaTrace {
    std::vector<double> total_power;   ///< one entry per iteration
    std::vector<double> max_residual;  ///< worst relative SINR slack, exact check
    int iterations = 0;
    bool converged = false;
    bool monotone = true;  ///< power non-increasing within 1e-9
};

enum class ScaStatus { ok, infeasible_subproblem, solver_failure, iteration_limit };

struct ScaResult {
    ScaStatus status = ScaStatus::ok;
    BeamformerSet beams;
    ScaTrace trace;
    int failed_iteration = -1;  ///< set for infeasible_subproblem / solver_failure
};

ScaResult solve_powermin_sca(const ChannelSet& channels, const SystemConfig& config,
                             const ScaOptions& options = {});

/// Semidefinite relaxation of the same problem: one linear constraint
/// per (k, l >= k) pair over Hermitian PSD matrix variables W_k
/// (realified inside).
struct SdrProgram {
    conic::ConicProgram program;
    std::vector<conic::SliceRef> matrix_slices;  ///< embedded order-2M PSD blocks
    int num_antennas = 0;
    double power_unit2 = 1.0;  ///< power scale s^2; physical W = s^2 * W_scaled

    Eigen::MatrixXcd matrix(const conic::SolveReport& report, int k) const;
};

SdrProgram build_sdr_program(const ChannelSet& channels, const std::vector<double>& gamma_min,
                             double noise_variance);

struct SdrSolution {
    conic::SolveStatus solver_status = conic::SolveStatus::numerical_failure;
    std::vector<Eigen::MatrixXcd> matrices;
    std::vector<double> rank_one_gaps;
    BeamformerSet beams;
    double relaxation_objective = std::numeric_limits<double>::quiet_NaN();
    double recovered_objective = std::numeric_limits<double>::quiet_NaN();

    enum class Recovery { eigenvector, randomization, sca_fallback, none };
    Recovery recovery = Recovery::none;

    /// JSON serialization (packed Hermitian matrices) for regression
    /// fixtures.
    std::string to_json_string() const;
};

struct SdrOptions {
    conic::SolveOptions solver{.tol_feas = 1e-7};
    double rank_one_threshold = 1e-6;  ///< lambda_2/lambda_1 gate for eigen-extraction
    int randomization_count = 100;
    bool allow_sca_fallback = true;
};

SdrSolution solve_powermin_sdr(const ChannelSet& channels, const SystemConfig& config,
                               const SdrOptions& options = {});

// Shared helpers (also used by max-min and the baselines) -------------------

/// Worst relative SINR slack max(0, (gamma_k - SINR_k^l) / gamma_k)
/// over all constraints of the original problem; 0 when fully feasible.
double max_relative_sinr_violation(const ChannelSet& channels, const BeamformerSet& beams,
                                   const std::vector<double>& gamma_min,
                                   double noise_variance);

/// Minimal per-user powers meeting every (k, l >= k) SINR target for
/// fixed unit directions, via the backward recursion the SIC structure
/// admits; nullopt when some constraint cannot be met at any power.
std::optional<std::vector<double>> rescale_powers_for_targets(
    const ChannelSet& channels, const std::vector<Eigen::VectorXcd>& unit_directions,
    const std::vector<double>& gamma_min, double noise_variance);

/// Rotates each w_k so h_k^H w_k is real nonnegative (pure phase, no
/// power or SINR change).
void normalize_phases(const ChannelSet& channels, BeamformerSet& beams);

}  // namespace noma
