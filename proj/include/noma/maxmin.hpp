// SPDX-License-Identifier: Apache-2.0
//
// Max-min rate fairness under a total power budget: bisection over the
// common rate, each candidate tested through an inner successive
// convexification of the feasibility problem (rate constraints plus the
// SIC power-ordering chain).

#pragma once

#include "noma/powermin.hpp"

namespace noma {

struct BisectionOptions {
    double rate_tolerance = 1e-3;  ///< bits/s/Hz, outer interval width at exit
    int max_outer_iters = 200;
    int inner_max_iters = 15;
    double inner_epsilon = 1e-4;  ///< inner SCA beamformer-change tolerance
    conic::SolveOptions solver{.tol_feas = 1e-7};
};

struct BisectionLogEntry {
    int iteration = 0;
    double t_lower = 0.0;     ///< certified-feasible rate bound
    double t_upper = 0.0;     ///< never-certified upper bound
    double width = 0.0;       ///< exact interval width (halves each round)
    double candidate = 0.0;   ///< tested midpoint
    double subproblem_power = std::numeric_limits<double>::quiet_NaN();
    bool certified = false;
};

struct MaxMinResult {
    bool degenerate = false;   ///< no positive rate certifiable
    double balanced_rate = 0.0;  ///< R*, certified by `beams`
    BeamformerSet beams;
    std::vector<double> achieved_rates;  ///< exact evaluation at `beams`
    double total_power = 0.0;
    std::vector<BisectionLogEntry> log;
    /// Candidate solutions whose exact ordering chain failed although
    /// their rates passed (expected 0; the convexified chain is an
    /// inner approximation).
    int ordering_violations = 0;
};

/// Feasibility subproblem for candidate rate alpha: power-minimization
/// constraints at gamma = 2^alpha - 1 plus the convexified ordering
/// chain |h_k^H w_n|^2 <= g_k(w_m, ref_m) for n > m, all k. Objective
/// is total power, tested against the budget.
BeamformerProgram build_feasibility_subproblem(const ChannelSet& channels, double alpha,
                                               double noise_variance,
                                               const BeamformerSet& ref);

/// Bisection with exact re-verification: a candidate counts as feasible
/// only when its exact rates reach alpha, the exact ordering chain
/// holds and the power fits the budget.
MaxMinResult solve_maxmin(const ChannelSet& channels, const SystemConfig& config,
                          const BisectionOptions& options = {});

/// Bisection log as CSV rows (iter, t_min, t_max, subproblem_power_W,
/// certified).
std::string bisection_log_csv(const MaxMinResult& result);

}  // namespace noma
