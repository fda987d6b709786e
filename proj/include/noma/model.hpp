// SPDX-License-Identifier: Apache-2.0
//
// Exact signal-model arithmetic: SINRs under successive interference
// cancellation, achievable rates, SIC power-ordering checks and the
// rate <-> minimum-SINR conversions. All functions are pure and safe to
// call concurrently.

#pragma once

#include "noma/types.hpp"

namespace noma {

/// SINR of user k's stream as decoded at user l (0-based indices,
/// l >= k):
///
///   SINR_k^l = |h_l^H w_k|^2 / (sum_{m>k} |h_l^H w_m|^2 + sigma^2)
///
/// The interference sum is empty for k = N-1.
double compute_sinr(const ChannelSet& channels, const BeamformerSet& beams,
                    double noise_variance, int k, int l);

/// Rates R_k = log2(1 + min_{l>=k} SINR_k^l) plus the full SINR table,
/// powers and satisfaction ratios. `config` supplies sigma^2 and the
/// (optional) targets.
RateReport compute_rates(const ChannelSet& channels, const BeamformerSet& beams,
                         const SystemConfig& config);

struct SicOrderingCheck {
    bool ok = true;
    /// Largest violated adjacent gap |h_k^H w_{j+1}|^2 - |h_k^H w_j|^2,
    /// 0 when the whole chain holds.
    double worst_violation = 0.0;
};

/// Checks |h_k^H w_1|^2 >= ... >= |h_k^H w_N|^2 for every k within an
/// absolute tolerance (solver outputs carry interior-point residuals).
SicOrderingCheck check_sic_ordering(const ChannelSet& channels,
                                    const BeamformerSet& beams,
                                    double tolerance = 1e-9);

/// gamma -> log2(1 + gamma); throws on negative input.
double min_sinr_to_rate(double min_sinr);

/// R -> 2^R - 1; throws on negative input. Inverse of min_sinr_to_rate.
double rate_to_min_sinr(double rate);

/// rate_to_min_sinr applied to each entry of config.target_rates.
std::vector<double> min_sinr_targets(const SystemConfig& config);

}  // namespace noma
