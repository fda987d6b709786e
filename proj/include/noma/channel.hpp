// SPDX-License-Identifier: Apache-2.0
//
// Seeded channel generation (Rayleigh fading with distance-based
// pathloss) and covariance-uncertainty sampling. All randomness is a
// pure function of (seed, trial_index, stream), so trials can be
// generated from any number of workers in any order.

#pragma once

#include "noma/types.hpp"

#include <cstdint>
#include <random>
#include <string>

namespace noma {

struct ChannelModelParams {
    double cell_radius_m = 50.0;
    double min_distance_m = 1.0;
    double pathloss_exponent = 3.8;  ///< beta; 0 disables large-scale fading

    void validate() const;
};

/// Covariance-level uncertainty: actual C_k = C_hat_k + Delta_k with
/// Hermitian Delta_k whose entries have standard deviation
/// error_std(i,j).
struct UncertaintyModel {
    std::vector<Eigen::MatrixXcd> nominal_covariances;  ///< C_hat_k, Hermitian PSD
    Eigen::MatrixXd error_std;                          ///< sigma_ij >= 0
    std::vector<double> outage;                         ///< rho_k in (0,1)

    int num_users() const { return static_cast<int>(nominal_covariances.size()); }
    void validate() const;
};

/// Deterministic counter-seeded generator. Construction cost is a few
/// integer mixes; one instance per (trial, stream) keeps parallel trial
/// loops reproducible regardless of scheduling.
///
/// Normal variates use an explicit Box-Muller transform on top of the
/// raw engine so two runs of the same binary produce identical streams
/// (std::normal_distribution is implementation-defined).
class TrialRng {
  public:
    TrialRng(std::uint64_t seed, std::uint64_t trial_index, std::uint64_t stream);

    double uniform();  ///< [0, 1)
    double normal();   ///< N(0, 1)
    std::complex<double> cnormal();  ///< CN(0, 1)
    Eigen::VectorXcd cnormal_vector(int dim);

  private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// Stream identifiers so different consumers of the same (seed, trial)
/// never overlap.
namespace rng_stream {
inline constexpr std::uint64_t distances = 1;
inline constexpr std::uint64_t fading = 2;
inline constexpr std::uint64_t uncertainty = 3;
inline constexpr std::uint64_t randomization = 4;
inline constexpr std::uint64_t outage = 5;
}  // namespace rng_stream

/// Draws h_k = chi_k * sqrt(d_k^-beta) with chi_k ~ CN(0, I) and user
/// positions uniform over the annulus [min_distance, cell_radius];
/// output sorted ascending by channel norm (ties keep generation
/// order). Distances depend on the seed only; fading is redrawn per
/// trial_index.
ChannelSet generate_channels(const SystemConfig& config, const ChannelModelParams& params,
                             std::uint64_t trial_index);

/// One Hermitian perturbation Delta_k per user: real diagonal
/// N(0, sigma_ii^2), upper triangle CN(0, sigma_ij^2) mirrored
/// conjugate.
std::vector<Eigen::MatrixXcd> sample_uncertainty(const UncertaintyModel& model,
                                                 std::uint64_t seed,
                                                 std::uint64_t trial_index);

/// Rank-one nominal covariance C_hat = h h^H; throws on a zero vector.
Eigen::MatrixXcd nominal_covariance_from_channel(const Eigen::VectorXcd& h);

/// Uncertainty model with C_hat_k = h_k h_k^H, a uniform entrywise
/// error standard deviation and a uniform outage target.
UncertaintyModel make_uncertainty_model(const ChannelSet& channels,
                                        double error_variance, double outage);

/// JSON fixtures (complex numbers as [re, im] pairs).
std::string to_json_string(const ChannelSet& channels);
ChannelSet channel_set_from_json(const std::string& text);
std::string to_json_string(const UncertaintyModel& model);
UncertaintyModel uncertainty_model_from_json(const std::string& text);

}  // namespace noma
