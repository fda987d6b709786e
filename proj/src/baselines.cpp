// SPDX-License-Identifier: Apache-2.0

#include "noma/baselines.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>

#include "noma/model.hpp"

namespace noma {

OmaDesign solve_powermin_oma(const ChannelSet& channels, const SystemConfig& config) {
    config.validate();
    channels.validate();
    const int n = channels.num_users();
    if (static_cast<int>(config.target_rates.size()) != n)
        throw std::invalid_argument("OMA power minimization needs target rates");

    OmaDesign design;
    design.shares.assign(n, 1.0 / n);
    design.slice_powers.resize(n);
    design.beamformers.reserve(n);
    for (int k = 0; k < n; ++k) {
        const Eigen::VectorXcd& h = channels.channels[k];
        const double slice_snr = std::exp2(n * config.target_rates[k]) - 1.0;
        const double power = slice_snr * config.noise_variance / h.squaredNorm();
        design.slice_powers[k] = power;
        design.beamformers.push_back(std::sqrt(power) * h / h.norm());
        design.average_power += design.shares[k] * power;
    }
    return design;
}

BeamformerSet solve_powermin_zf(const ChannelSet& channels, const SystemConfig& config) {
    config.validate();
    channels.validate();
    const int n = channels.num_users();
    const int m = channels.num_antennas();
    if (m < n) throw std::invalid_argument("zero-forcing needs M >= N");
    if (static_cast<int>(config.target_rates.size()) != n)
        throw std::invalid_argument("ZF power minimization needs target rates");

    Eigen::MatrixXcd h_mat(m, n);
    for (int k = 0; k < n; ++k) h_mat.col(k) = channels.channels[k];
    const Eigen::MatrixXcd gram = h_mat.adjoint() * h_mat;
    Eigen::FullPivLU<Eigen::MatrixXcd> lu(gram);
    if (!lu.isInvertible()) throw std::invalid_argument("rank-deficient channel matrix");
    const Eigen::MatrixXcd pinv_cols = h_mat * lu.inverse();  // h_l^H col_k = delta_lk

    BeamformerSet beams;
    beams.beamformers.reserve(n);
    for (int k = 0; k < n; ++k) {
        const Eigen::VectorXcd dir = pinv_cols.col(k) / pinv_cols.col(k).norm();
        const double gain = std::norm(channels.channels[k].dot(dir));
        const double gamma = rate_to_min_sinr(config.target_rates[k]);
        beams.beamformers.push_back(std::sqrt(gamma * config.noise_variance / gain) * dir);
    }
    return beams;
}

std::vector<double> direct_rates(const ChannelSet& channels, const BeamformerSet& beams,
                                 double noise_variance) {
    const int n = channels.num_users();
    std::vector<double> rates(n);
    for (int k = 0; k < n; ++k) {
        const Eigen::VectorXcd& h = channels.channels[k];
        const double signal = std::norm(h.dot(beams.beamformers[k]));
        double interference = 0.0;
        for (int m = 0; m < n; ++m)
            if (m != k) interference += std::norm(h.dot(beams.beamformers[m]));
        rates[k] = std::log2(1.0 + signal / (interference + noise_variance));
    }
    return rates;
}

namespace {

// Generic scalar bisection: power_at(rate) strictly increasing.
double bisect_rate(double budget, double upper, double tolerance,
                   const std::function<double(double)>& power_at) {
    double lo = 0.0, width = upper;
    while (width > tolerance) {
        const double mid = lo + width / 2.0;
        width *= 0.5;
        if (power_at(mid) <= budget) lo = mid;
    }
    return lo;
}

}  // namespace

OmaMaxMinResult solve_maxmin_oma(const ChannelSet& channels, const SystemConfig& config,
                                 double rate_tolerance) {
    config.validate();
    channels.validate();
    if (!config.power_budget) throw std::invalid_argument("max-min needs a power budget");
    const int n = channels.num_users();
    const double budget = *config.power_budget;

    std::vector<double> inv_gain(n);
    for (int k = 0; k < n; ++k)
        inv_gain[k] = config.noise_variance / channels.channels[k].squaredNorm();
    const auto average_power = [&](double rate) {
        double p = 0.0;
        for (int k = 0; k < n; ++k) p += (std::exp2(n * rate) - 1.0) * inv_gain[k];
        return p / n;
    };
    const double upper =
        std::log2(1.0 + budget * channels.channels.back().squaredNorm() /
                            config.noise_variance);

    OmaMaxMinResult result;
    result.balanced_rate = bisect_rate(budget, upper, rate_tolerance, average_power);
    SystemConfig at_rate = config;
    at_rate.target_rates.assign(n, result.balanced_rate);
    result.design = solve_powermin_oma(channels, at_rate);
    return result;
}

ZfMaxMinResult solve_maxmin_zf(const ChannelSet& channels, const SystemConfig& config,
                               double rate_tolerance) {
    config.validate();
    channels.validate();
    if (!config.power_budget) throw std::invalid_argument("max-min needs a power budget");
    const int n = channels.num_users();
    const double budget = *config.power_budget;

    // Interference-free effective gains of the normalized pseudo-inverse
    // directions.
    SystemConfig probe = config;
    probe.target_rates.assign(n, 1.0);
    const BeamformerSet unit = solve_powermin_zf(channels, probe);
    std::vector<double> inv_gain(n);
    for (int k = 0; k < n; ++k) {
        const Eigen::VectorXcd dir = unit.beamformers[k] / unit.beamformers[k].norm();
        inv_gain[k] = config.noise_variance / std::norm(channels.channels[k].dot(dir));
    }
    const auto total_power = [&](double rate) {
        double p = 0.0;
        for (int k = 0; k < n; ++k) p += (std::exp2(rate) - 1.0) * inv_gain[k];
        return p;
    };
    const double upper =
        std::log2(1.0 + budget * channels.channels.back().squaredNorm() /
                            config.noise_variance);

    ZfMaxMinResult result;
    result.balanced_rate = bisect_rate(budget, upper, rate_tolerance, total_power);
    SystemConfig at_rate = config;
    at_rate.target_rates.assign(n, result.balanced_rate);
    result.beams = solve_powermin_zf(channels, at_rate);
    return result;
}

namespace {

OmaRobustDesign solve_oma_design(const UncertaintyModel& model, const SystemConfig& config,
                                 const RobustOptions& options, bool robust) {
    model.validate();
    config.validate();
    const int n = model.num_users();
    if (static_cast<int>(config.target_rates.size()) != n)
        throw std::invalid_argument("OMA design needs target rates");

    OmaRobustDesign design;
    design.shares.assign(n, 1.0 / n);
    design.per_user.reserve(n);
    design.feasible = true;
    design.average_power = 0.0;
    for (int k = 0; k < n; ++k) {
        UncertaintyModel slice;
        slice.nominal_covariances = {model.nominal_covariances[k]};
        slice.error_std = model.error_std;
        slice.outage = {model.outage[k]};
        SystemConfig slice_config;
        slice_config.num_antennas = config.num_antennas;
        slice_config.num_users = 1;
        slice_config.noise_variance = config.noise_variance;
        slice_config.target_rates = {n * config.target_rates[k]};
        slice_config.rng_seed = config.rng_seed;
        design.per_user.push_back(robust
                                      ? solve_robust_powermin(slice, slice_config, options)
                                      : solve_nonrobust_powermin(slice, slice_config, options));
        const auto& r = design.per_user.back();
        if (r.recovery == RobustDesignResult::Recovery::none) {
            design.feasible = false;
            design.average_power = std::numeric_limits<double>::quiet_NaN();
        }
        if (design.feasible) design.average_power += design.shares[k] * r.recovered_power;
    }
    return design;
}

}  // namespace

OmaRobustDesign solve_robust_powermin_oma(const UncertaintyModel& model,
                                          const SystemConfig& config,
                                          const RobustOptions& options) {
    return solve_oma_design(model, config, options, true);
}

OmaRobustDesign solve_nonrobust_powermin_oma(const UncertaintyModel& model,
                                             const SystemConfig& config,
                                             const RobustOptions& options) {
    return solve_oma_design(model, config, options, false);
}

OutageReport evaluate_outage_oma(const OmaRobustDesign& design, const UncertaintyModel& model,
                                 const SystemConfig& config, int num_samples,
                                 OutageModel noise_model, std::uint64_t seed, bool parallel) {
    const int n = model.num_users();
    OutageReport report;
    report.num_samples = num_samples;
    report.satisfaction.assign(n, 0.0);
    report.binomial_stderr.assign(n, 0.0);
    if (noise_model == OutageModel::hermitian)
        report.eta_histogram.assign(n, std::vector<int>(OutageReport::kNumBins, 0));

    for (int k = 0; k < n; ++k) {
        UncertaintyModel slice;
        slice.nominal_covariances = {model.nominal_covariances[k]};
        slice.error_std = model.error_std;
        slice.outage = {model.outage[k]};
        const double slice_gamma = std::exp2(n * config.target_rates[k]) - 1.0;
        const OutageReport single = evaluate_outage(
            design.per_user[k].beams, slice, {slice_gamma}, config.noise_variance,
            num_samples, noise_model, seed + static_cast<std::uint64_t>(k), parallel);
        report.satisfaction[k] = single.satisfaction[0];
        report.binomial_stderr[k] = single.binomial_stderr[0];
        if (noise_model == OutageModel::hermitian)
            report.eta_histogram[k] = single.eta_histogram[0];
    }
    return report;
}

}  // namespace noma
