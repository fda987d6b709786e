// SPDX-License-Identifier: Apache-2.0

#include "noma/model.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace noma {

void SystemConfig::validate() const {
    if (num_antennas < 1) throw std::invalid_argument("num_antennas must be >= 1");
    if (num_users < 1) throw std::invalid_argument("num_users must be >= 1");
    if (!(noise_variance > 0.0)) throw std::invalid_argument("noise_variance must be > 0");
    if (!target_rates.empty() && static_cast<int>(target_rates.size()) != num_users)
        throw std::invalid_argument("target_rates must have one entry per user");
    for (double r : target_rates)
        if (!(r >= 0.0)) throw std::invalid_argument("target rates must be >= 0");
    if (power_budget && !(*power_budget > 0.0))
        throw std::invalid_argument("power_budget must be > 0");
    if (!outage_probabilities.empty() &&
        static_cast<int>(outage_probabilities.size()) != num_users)
        throw std::invalid_argument("outage_probabilities must have one entry per user");
    for (double rho : outage_probabilities)
        if (!(rho > 0.0 && rho < 1.0))
            throw std::invalid_argument("outage probabilities must lie in (0,1)");
}

double SystemConfig::target_rate(int k) const {
    if (static_cast<int>(target_rates.size()) != num_users)
        throw std::invalid_argument("target_rates not configured");
    return target_rates.at(k);
}

void ChannelSet::validate() const {
    if (channels.empty()) throw std::invalid_argument("empty channel set");
    const auto m = channels.front().size();
    double prev = -1.0;
    for (const auto& h : channels) {
        if (h.size() != m) throw std::invalid_argument("inconsistent channel dimensions");
        const double n = h.norm();
        if (!(n > 0.0)) throw std::invalid_argument("zero channel vector");
        if (n < prev) throw std::invalid_argument("channels not ordered ascending by norm");
        prev = n;
    }
    if (!distances_m.empty() && distances_m.size() != channels.size())
        throw std::invalid_argument("distances must match channel count");
}

double BeamformerSet::total_power() const {
    double p = 0.0;
    for (const auto& w : beamformers) p += w.squaredNorm();
    return p;
}

namespace {

void check_dimensions(const ChannelSet& channels, const BeamformerSet& beams) {
    if (channels.num_users() != beams.num_users())
        throw std::invalid_argument("channel/beamformer user count mismatch");
    for (const auto& w : beams.beamformers)
        if (w.size() != channels.num_antennas())
            throw std::invalid_argument("channel/beamformer dimension mismatch");
}

}  // namespace

double compute_sinr(const ChannelSet& channels, const BeamformerSet& beams,
                    double noise_variance, int k, int l) {
    check_dimensions(channels, beams);
    const int n = channels.num_users();
    if (k < 0 || l < k || l >= n) throw std::out_of_range("require 0 <= k <= l < N");
    if (!(noise_variance > 0.0)) throw std::invalid_argument("noise variance must be > 0");

    const Eigen::VectorXcd& h = channels.channels[l];
    const double signal = std::norm(h.dot(beams.beamformers[k]));
    double interference = 0.0;
    for (int m = k + 1; m < n; ++m) interference += std::norm(h.dot(beams.beamformers[m]));
    return signal / (interference + noise_variance);
}

RateReport compute_rates(const ChannelSet& channels, const BeamformerSet& beams,
                         const SystemConfig& config) {
    check_dimensions(channels, beams);
    const int n = channels.num_users();

    RateReport report;
    report.sinr = Eigen::MatrixXd::Constant(n, n, std::numeric_limits<double>::quiet_NaN());
    report.rates.resize(n);
    report.per_user_power.resize(n);

    for (int k = 0; k < n; ++k) {
        double worst = std::numeric_limits<double>::infinity();
        for (int l = k; l < n; ++l) {
            const double s = compute_sinr(channels, beams, config.noise_variance, k, l);
            report.sinr(k, l) = s;
            worst = std::min(worst, s);
        }
        report.rates[k] = std::log2(1.0 + worst);
        report.per_user_power[k] = beams.user_power(k);
        report.total_power += report.per_user_power[k];
    }

    if (static_cast<int>(config.target_rates.size()) == n) {
        report.satisfaction_ratios.resize(n);
        for (int k = 0; k < n; ++k) {
            const double target = config.target_rates[k];
            report.satisfaction_ratios[k] =
                target > 0.0 ? report.rates[k] / target
                             : std::numeric_limits<double>::infinity();
        }
    }
    return report;
}

SicOrderingCheck check_sic_ordering(const ChannelSet& channels,
                                    const BeamformerSet& beams, double tolerance) {
    check_dimensions(channels, beams);
    const int n = channels.num_users();

    SicOrderingCheck result;
    for (int k = 0; k < n; ++k) {
        const Eigen::VectorXcd& h = channels.channels[k];
        double prev = std::norm(h.dot(beams.beamformers[0]));
        for (int j = 1; j < n; ++j) {
            const double cur = std::norm(h.dot(beams.beamformers[j]));
            result.worst_violation = std::max(result.worst_violation, cur - prev);
            prev = cur;
        }
    }
    result.ok = result.worst_violation <= tolerance;
    return result;
}

double min_sinr_to_rate(double min_sinr) {
    if (!(min_sinr >= 0.0)) throw std::invalid_argument("SINR must be >= 0");
    return std::log2(1.0 + min_sinr);
}

double rate_to_min_sinr(double rate) {
    if (!(rate >= 0.0)) throw std::invalid_argument("rate must be >= 0");
    return std::exp2(rate) - 1.0;
}

std::vector<double> min_sinr_targets(const SystemConfig& config) {
    std::vector<double> gammas;
    gammas.reserve(config.target_rates.size());
    for (double r : config.target_rates) gammas.push_back(rate_to_min_sinr(r));
    return gammas;
}

}  // namespace noma
