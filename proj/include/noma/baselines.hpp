// SPDX-License-Identifier: Apache-2.0
//
// Orthogonal-access (equal-share OFDMA/TDMA) and zero-forcing
// comparison designs. OMA serves each user on its own time/frequency
// slice with maximum-ratio transmission, so a user needing rate R over
// a 1/N share must hit 2^{N R} - 1 on its slice; reported powers are
// time-averaged. ZF transmits simultaneously with interference nulled
// through the channel pseudo-inverse.

#pragma once

#include "noma/channel.hpp"
#include "noma/robust.hpp"
#include "noma/types.hpp"

namespace noma {

struct OmaDesign {
    std::vector<Eigen::VectorXcd> beamformers;  ///< sqrt(slice power) * MRT direction
    std::vector<double> shares;                 ///< nu_k, sum to 1
    std::vector<double> slice_powers;           ///< power while the slice is active
    double average_power = 0.0;                 ///< sum_k nu_k p_k
};

/// Equal-share OMA meeting per-user targets exactly.
OmaDesign solve_powermin_oma(const ChannelSet& channels, const SystemConfig& config);

/// Zero-forcing with powers making each interference-free SINR tight.
/// Requires M >= N; throws on rank deficiency.
BeamformerSet solve_powermin_zf(const ChannelSet& channels, const SystemConfig& config);

/// Rates without SIC: every other stream is noise. This is the rate a
/// ZF design delivers (interference is nulled, not cancelled).
std::vector<double> direct_rates(const ChannelSet& channels, const BeamformerSet& beams,
                                 double noise_variance);

struct OmaMaxMinResult {
    double balanced_rate = 0.0;
    OmaDesign design;
};

/// Common-rate maximization under the average-power budget, by scalar
/// bisection with closed-form power inversion per candidate rate.
OmaMaxMinResult solve_maxmin_oma(const ChannelSet& channels, const SystemConfig& config,
                                 double rate_tolerance = 1e-9);

struct ZfMaxMinResult {
    double balanced_rate = 0.0;
    BeamformerSet beams;
};

ZfMaxMinResult solve_maxmin_zf(const ChannelSet& channels, const SystemConfig& config,
                               double rate_tolerance = 1e-9);

/// Outage-constrained (or nominal) OMA: each user's slice is a
/// single-user instance of the robust machinery.
struct OmaRobustDesign {
    bool feasible = false;
    std::vector<RobustDesignResult> per_user;
    std::vector<double> shares;
    double average_power = std::numeric_limits<double>::quiet_NaN();
};

OmaRobustDesign solve_robust_powermin_oma(const UncertaintyModel& model,
                                          const SystemConfig& config,
                                          const RobustOptions& options = {});
OmaRobustDesign solve_nonrobust_powermin_oma(const UncertaintyModel& model,
                                             const SystemConfig& config,
                                             const RobustOptions& options = {});

/// Monte-Carlo satisfaction of an OMA design on its own slices.
OutageReport evaluate_outage_oma(const OmaRobustDesign& design, const UncertaintyModel& model,
                                 const SystemConfig& config, int num_samples,
                                 OutageModel noise_model, std::uint64_t seed,
                                 bool parallel = true);

}  // namespace noma
