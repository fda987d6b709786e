// SPDX-License-Identifier: Apache-2.0
//
// nomabeam — beamforming design toolkit for downlink multi-antenna NOMA
//
// Core domain types shared by every module: system parameters, channel
// realizations, beamformer sets and per-user rate reports.

#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <optional>
#include <vector>

namespace noma {

/// System-level parameters of one downlink instance.
///
/// `target_rates` (bits/s/Hz, one per user) drive the power-minimization
/// designs, `power_budget` drives max-min fairness, and
/// `outage_probabilities` drive the robust design. Fields that a given
/// solver does not need may stay empty/unset.
struct SystemConfig {
    int num_antennas = 1;  ///< M, transmit antennas at the base station
    int num_users = 1;     ///< N, single-antenna users
    double noise_variance = 0.01;  ///< sigma^2 [W]
    std::vector<double> target_rates;           ///< R_k^min [bits/s/Hz]
    std::optional<double> power_budget;         ///< P^max [W]
    std::vector<double> outage_probabilities;   ///< rho_k in (0,1)
    std::uint64_t rng_seed = 1;

    /// Throws std::invalid_argument when any invariant is broken.
    void validate() const;

    /// Target rate of user k (0-based); throws if target_rates is not
    /// sized num_users.
    double target_rate(int k) const;
};

/// Channel vectors of one realization, ordered ascending by Euclidean
/// norm (h_1 is the weakest user). Distances travel with their vectors
/// through the sort.
struct ChannelSet {
    std::vector<Eigen::VectorXcd> channels;
    std::vector<double> distances_m;

    int num_users() const { return static_cast<int>(channels.size()); }
    int num_antennas() const {
        return channels.empty() ? 0 : static_cast<int>(channels.front().size());
    }

    /// Checks the ascending-norm ordering and nonzero vectors.
    void validate() const;
};

/// One complex beamforming vector per user; ||w_k||^2 is the transmit
/// power assigned to user k.
struct BeamformerSet {
    std::vector<Eigen::VectorXcd> beamformers;

    int num_users() const { return static_cast<int>(beamformers.size()); }
    double user_power(int k) const { return beamformers.at(k).squaredNorm(); }
    double total_power() const;
};

/// Exact evaluation of a candidate design: the SINR table over decoder
/// indices l >= k, achievable rates, powers and rate-satisfaction ratios.
struct RateReport {
    /// sinr(k,l) is SINR_k^l for l >= k; entries with l < k are NaN.
    Eigen::MatrixXd sinr;
    std::vector<double> rates;            ///< R_k [bits/s/Hz]
    std::vector<double> per_user_power;   ///< ||w_k||^2 [W]
    double total_power = 0.0;
    /// R_k / R_k^min when a positive target exists; +inf for a zero
    /// target; empty when the config carries no targets.
    std::vector<double> satisfaction_ratios;
};

}  // namespace noma
