// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "noma/channel.hpp"
#include "noma/model.hpp"
#include "support/oracles.hpp"

#include <cmath>

using namespace noma;

namespace {

ChannelSet random_channels(int users, int antennas, std::uint64_t seed) {
    TrialRng rng(seed, 0, 100);
    std::vector<Eigen::VectorXcd> hs;
    for (int k = 0; k < users; ++k) hs.push_back(rng.cnormal_vector(antennas));
    std::sort(hs.begin(), hs.end(),
              [](const auto& a, const auto& b) { return a.norm() < b.norm(); });
    ChannelSet ch;
    ch.channels = std::move(hs);
    return ch;
}

BeamformerSet random_beams(int users, int antennas, std::uint64_t seed) {
    TrialRng rng(seed, 1, 101);
    BeamformerSet beams;
    for (int k = 0; k < users; ++k) beams.beamformers.push_back(rng.cnormal_vector(antennas));
    return beams;
}

}  // namespace

TEST_CASE("single user without interference") {
    ChannelSet ch;
    ch.channels = {Eigen::Vector2cd(1.0, 0.0)};
    BeamformerSet beams;
    beams.beamformers = {Eigen::Vector2cd(1.0, 0.0)};
    CHECK(compute_sinr(ch, beams, 1.0, 0, 0) == doctest::Approx(1.0));
}

TEST_CASE("orthogonal interferer contributes nothing") {
    ChannelSet ch;
    ch.channels = {Eigen::Vector2cd(0.5, 0.0), Eigen::Vector2cd(1.0, 0.0)};
    BeamformerSet beams;
    beams.beamformers = {Eigen::Vector2cd(1.0, 0.0), Eigen::Vector2cd(0.0, 1.0)};
    // k = 0 decoded at l = 1: |1|^2 / (0 + 0.5) = 2
    CHECK(compute_sinr(ch, beams, 0.5, 0, 1) == doctest::Approx(2.0));
}

TEST_CASE("SINR matches the scalar-arithmetic re-implementation") {
    const ChannelSet ch = random_channels(3, 3, 17);
    const BeamformerSet beams = random_beams(3, 3, 18);
    for (int k = 0; k < 3; ++k)
        for (int l = k; l < 3; ++l) {
            const double direct =
                oracle::scalar_sinr(ch.channels, beams.beamformers, 0.37, k, l);
            CHECK(compute_sinr(ch, beams, 0.37, k, l) == doctest::Approx(direct).epsilon(1e-13));
        }
}

TEST_CASE("index and dimension errors") {
    const ChannelSet ch = random_channels(2, 3, 19);
    const BeamformerSet beams = random_beams(2, 3, 20);
    CHECK_THROWS_AS(compute_sinr(ch, beams, 1.0, 1, 0), std::out_of_range);
    CHECK_THROWS_AS(compute_sinr(ch, beams, 1.0, 0, 2), std::out_of_range);
    BeamformerSet bad = beams;
    bad.beamformers[0] = Eigen::VectorXcd::Ones(4);
    CHECK_THROWS_AS(compute_sinr(ch, bad, 1.0, 0, 0), std::invalid_argument);
}

TEST_CASE("rates use the worst decoder") {
    SystemConfig cfg;
    cfg.num_users = 1;
    cfg.num_antennas = 2;
    cfg.noise_variance = 1.0;
    ChannelSet ch;
    ch.channels = {Eigen::Vector2cd(1.0, 0.0)};
    BeamformerSet beams;
    beams.beamformers = {Eigen::Vector2cd(1.0, 0.0)};
    const RateReport report = compute_rates(ch, beams, cfg);
    CHECK(report.rates[0] == doctest::Approx(1.0));  // log2(1 + 1)

    // Three-user random instance: brute-force the min over decoders.
    SystemConfig cfg3;
    cfg3.num_users = 3;
    cfg3.num_antennas = 3;
    cfg3.noise_variance = 0.25;
    const ChannelSet ch3 = random_channels(3, 3, 23);
    const BeamformerSet beams3 = random_beams(3, 3, 24);
    const RateReport report3 = compute_rates(ch3, beams3, cfg3);
    for (int k = 0; k < 3; ++k) {
        double worst = std::numeric_limits<double>::infinity();
        for (int l = k; l < 3; ++l)
            worst = std::min(worst, oracle::scalar_sinr(ch3.channels, beams3.beamformers,
                                                        0.25, k, l));
        CHECK(report3.rates[k] == doctest::Approx(std::log2(1.0 + worst)).epsilon(1e-12));
        // decoder-min property: never exceeds any single decoder's rate
        for (int l = k; l < 3; ++l)
            CHECK(report3.rates[k] <=
                  std::log2(1.0 + report3.sinr(k, l)) + 1e-12);
    }
}

TEST_CASE("SIC ordering check") {
    ChannelSet single;
    single.channels = {Eigen::Vector2cd(1.0, 0.0)};
    BeamformerSet sw;
    sw.beamformers = {Eigen::Vector2cd(0.3, 0.0)};
    const auto empty_chain = check_sic_ordering(single, sw);
    CHECK(empty_chain.ok);
    CHECK(empty_chain.worst_violation == 0.0);

    ChannelSet ch;
    ch.channels = {Eigen::Vector2cd(1.0, 0.0), Eigen::Vector2cd(1.0, 0.0)};
    BeamformerSet beams;
    beams.beamformers = {Eigen::Vector2cd(std::sqrt(2.0), 0.0), Eigen::Vector2cd(1.0, 0.0)};
    CHECK(check_sic_ordering(ch, beams).ok);

    std::swap(beams.beamformers[0], beams.beamformers[1]);
    const auto violated = check_sic_ordering(ch, beams);
    CHECK_FALSE(violated.ok);
    CHECK(violated.worst_violation == doctest::Approx(1.0));
}

TEST_CASE("rate / minimum-SINR conversions") {
    CHECK(rate_to_min_sinr(0.0) == 0.0);
    CHECK(rate_to_min_sinr(1.0) == doctest::Approx(1.0));
    CHECK(rate_to_min_sinr(2.0) == doctest::Approx(3.0));
    // independent high-precision exponentiation for a non-integer rate
    const long double expected = std::pow(2.0L, 2.8584L) - 1.0L;
    CHECK(rate_to_min_sinr(2.8584) == doctest::Approx(static_cast<double>(expected)).epsilon(1e-12));
    CHECK(rate_to_min_sinr(2.8584) == doctest::Approx(6.25211).epsilon(1e-5));
    for (double gamma : {0.0, 0.5, 1.0, 6.25}) {
        CHECK(rate_to_min_sinr(min_sinr_to_rate(gamma)) == doctest::Approx(gamma).epsilon(1e-12));
    }
    CHECK_THROWS_AS(rate_to_min_sinr(-0.1), std::invalid_argument);
    CHECK_THROWS_AS(min_sinr_to_rate(-0.1), std::invalid_argument);
}

TEST_CASE("SINR monotonicity when scaling the intended beamformer") {
    const ChannelSet ch = random_channels(3, 3, 31);
    BeamformerSet beams = random_beams(3, 3, 32);
    for (int k = 0; k < 3; ++k) {
        for (int l = k; l < 3; ++l) {
            const double before = compute_sinr(ch, beams, 0.1, k, l);
            BeamformerSet scaled = beams;
            scaled.beamformers[k] *= 1.5;
            CHECK(compute_sinr(ch, scaled, 0.1, k, l) > before);
        }
    }
}

TEST_CASE("phase invariance of every report field") {
    SystemConfig cfg;
    cfg.num_users = 3;
    cfg.num_antennas = 3;
    cfg.noise_variance = 0.2;
    cfg.target_rates = {1.0, 1.0, 1.0};
    const ChannelSet ch = random_channels(3, 3, 41);
    BeamformerSet beams = random_beams(3, 3, 42);
    const RateReport base = compute_rates(ch, beams, cfg);
    const auto base_sic = check_sic_ordering(ch, beams);

    TrialRng rng(5, 5, 5);
    BeamformerSet rotated = beams;
    for (auto& w : rotated.beamformers) {
        const double theta = 2.0 * 3.14159265358979323846 * rng.uniform();
        w *= std::complex<double>(std::cos(theta), std::sin(theta));
    }
    const RateReport rot = compute_rates(ch, rotated, cfg);
    const auto rot_sic = check_sic_ordering(ch, rotated);
    for (int k = 0; k < 3; ++k) {
        CHECK(rot.rates[k] == doctest::Approx(base.rates[k]).epsilon(1e-12));
        for (int l = k; l < 3; ++l)
            CHECK(rot.sinr(k, l) == doctest::Approx(base.sinr(k, l)).epsilon(1e-12));
    }
    CHECK(rot_sic.ok == base_sic.ok);
    CHECK(rot_sic.worst_violation == doctest::Approx(base_sic.worst_violation).epsilon(1e-9));
}

TEST_CASE("report power bookkeeping") {
    SystemConfig cfg;
    cfg.num_users = 3;
    cfg.num_antennas = 4;
    cfg.noise_variance = 0.1;
    cfg.target_rates = {1.0, 2.0, 0.0};
    const ChannelSet ch = random_channels(3, 4, 51);
    const BeamformerSet beams = random_beams(3, 4, 52);
    const RateReport report = compute_rates(ch, beams, cfg);
    double total = 0.0;
    for (int k = 0; k < 3; ++k) total += beams.beamformers[k].squaredNorm();
    CHECK(report.total_power == doctest::Approx(total).epsilon(1e-12));
    CHECK(report.satisfaction_ratios[0] == doctest::Approx(report.rates[0] / 1.0));
    CHECK(report.satisfaction_ratios[1] == doctest::Approx(report.rates[1] / 2.0));
    CHECK(std::isinf(report.satisfaction_ratios[2]));
}

TEST_CASE("config validation") {
    SystemConfig cfg;
    cfg.num_users = 2;
    cfg.num_antennas = 2;
    cfg.noise_variance = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.noise_variance = 0.1;
    cfg.outage_probabilities = {0.1, 1.0};
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.outage_probabilities = {0.1, 0.2};
    CHECK_NOTHROW(cfg.validate());
}
