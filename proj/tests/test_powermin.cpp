// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "noma/channel.hpp"
#include "noma/powermin.hpp"
#include "support/oracles.hpp"

#include <cmath>

using namespace noma;

namespace {

ChannelSet unit_channels(int users, int antennas, std::uint64_t seed, std::uint64_t trial = 0) {
    SystemConfig cfg;
    cfg.num_users = users;
    cfg.num_antennas = antennas;
    cfg.rng_seed = seed;
    ChannelModelParams params;
    params.pathloss_exponent = 0.0;
    return generate_channels(cfg, params, trial);
}

SystemConfig config_for(const ChannelSet& ch, double rate, double noise = 0.01) {
    SystemConfig cfg;
    cfg.num_users = ch.num_users();
    cfg.num_antennas = ch.num_antennas();
    cfg.noise_variance = noise;
    cfg.target_rates.assign(ch.num_users(), rate);
    cfg.rng_seed = 1;
    return cfg;
}

}  // namespace

TEST_CASE("Taylor expansion: tangency and hand example") {
    TrialRng rng(61, 0, 300);
    const Eigen::VectorXcd h = rng.cnormal_vector(3);
    const Eigen::VectorXcd w_ref = rng.cnormal_vector(3);
    const TaylorForm g = taylor_linearize(h, w_ref);
    CHECK(g(w_ref) == doctest::Approx(std::norm(h.dot(w_ref))).epsilon(1e-12));

    // h = [1, 0], w_ref = [1, 0], w = [0, 1]: g = 1 + 2 Re(0 - 1) = -1 <= 0 = f
    Eigen::VectorXcd h2(2), ref2(2), w2(2);
    h2 << 1.0, 0.0;
    ref2 << 1.0, 0.0;
    w2 << 0.0, 1.0;
    const TaylorForm g2 = taylor_linearize(h2, ref2);
    CHECK(g2(w2) == doctest::Approx(-1.0));
    CHECK(std::norm(h2.dot(w2)) == doctest::Approx(0.0));
}

TEST_CASE("Taylor expansion is a global under-estimator") {
    // 10^4 random triples, zero violations allowed
    int violations = 0;
    for (int i = 0; i < 10000; ++i) {
        TrialRng rng(62, i, 301);
        const Eigen::VectorXcd h = rng.cnormal_vector(3);
        const Eigen::VectorXcd w_ref = rng.cnormal_vector(3);
        const Eigen::VectorXcd w = rng.cnormal_vector(3);
        const TaylorForm g = taylor_linearize(h, w_ref);
        if (g(w) > std::norm(h.dot(w)) + 1e-9) ++violations;
    }
    CHECK(violations == 0);
}

TEST_CASE("subproblem constraint counts") {
    // N = 2: one exact SOC + one phase row per user, one linearized
    // block; the formulation's constraint count is 0.5 N^2 + 1.5 N = 5.
    const ChannelSet ch = unit_channels(2, 2, 63);
    BeamformerSet ref;
    ref.beamformers = {ch.channels[0] / ch.channels[0].norm(),
                       ch.channels[1] / ch.channels[1].norm()};
    const auto sub = build_sca_subproblem(ch, {1.0, 1.0}, 0.01, ref);
    int soc_rate = 0, soc_lin = 0, soc_power = 0;
    for (const auto& cone : sub.program.cones()) {
        if (cone.name.rfind("rate_", 0) == 0) ++soc_rate;
        if (cone.name.rfind("lin_", 0) == 0) ++soc_lin;
        if (cone.name.rfind("power_", 0) == 0) ++soc_power;
    }
    CHECK(soc_rate == 2);   // SOC with embedded phase row, one per user
    CHECK(soc_lin == 1);    // (k=1, l=2)
    CHECK(soc_power == 2);
    // 2 SOC + 2 phase rows + 1 linearized = 0.5*4 + 1.5*2
    CHECK(soc_rate + 2 + soc_lin == 5);
}

TEST_CASE("single-user closed form") {
    ChannelSet ch;
    ch.channels = {Eigen::Vector3cd(1.0, 0.0, 0.0)};
    SystemConfig cfg = config_for(ch, 1.0, 1.0);
    const ScaResult sca = solve_powermin_sca(ch, cfg);
    REQUIRE(sca.status == ScaStatus::ok);
    CHECK(sca.beams.total_power() == doctest::Approx(1.0).epsilon(1e-6));

    const SdrSolution sdr = solve_powermin_sdr(ch, cfg);
    REQUIRE(sdr.recovery == SdrSolution::Recovery::eigenvector);
    CHECK(sdr.recovered_objective == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(sdr.relaxation_objective == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("SCA subproblem optimum matches the descent oracle") {
    // 2-user, M = 2 instance; the oracle parametrizes the beamformer
    // entries directly and runs a barrier-Newton descent on the very
    // same convexified constraints, from many perturbed starts.
    const ChannelSet ch = unit_channels(2, 2, 64);
    const double noise = 0.01;
    const std::vector<double> gamma = {3.0, 3.0};

    // reference: matched filters at the minimal feasible powers
    std::vector<Eigen::VectorXcd> dirs = {ch.channels[0] / ch.channels[0].norm(),
                                          ch.channels[1] / ch.channels[1].norm()};
    const auto ref_powers = rescale_powers_for_targets(ch, dirs, gamma, noise);
    REQUIRE(ref_powers.has_value());
    BeamformerSet ref;
    ref.beamformers = {std::sqrt((*ref_powers)[0]) * dirs[0],
                       std::sqrt((*ref_powers)[1]) * dirs[1]};
    normalize_phases(ch, ref);

    const auto sub = build_sca_subproblem(ch, gamma, noise, ref);
    const auto report = conic::solve(sub.program);
    REQUIRE(report.status == conic::SolveStatus::optimal);
    const double conic_power = sub.beamformers(report).total_power();

    // oracle constraints over packed variables x = (w_0, w_1)
    const int m = 2;
    std::vector<oracle::Constraint> constraints;
    // l = k exact constraints, squared form (phase-free, same optimum):
    //   gamma_k (sum_{m>k} |h_k^H w_m|^2 + sigma^2) - |h_k^H w_k|^2 <= 0
    for (int k = 0; k < 2; ++k) {
        std::vector<oracle::Constraint> parts;
        for (int mm = k + 1; mm < 2; ++mm)
            parts.push_back(oracle::gain_term(ch.channels[k], mm, m, gamma[k]));
        parts.push_back(oracle::gain_term(ch.channels[k], k, m, -1.0));
        constraints.push_back(oracle::combine(parts, gamma[k] * noise));
    }
    // l > k linearized constraints (Taylor form re-derived here):
    //   gamma_0 (|h_1^H w_1|^2 + sigma^2) <= g_1(w_0, ref_0)
    {
        const std::complex<double> a = ch.channels[1].dot(ref.beamformers[0]);
        const Eigen::VectorXcd grad = a * ch.channels[1];
        std::vector<oracle::Constraint> parts;
        parts.push_back(oracle::gain_term(ch.channels[1], 1, m, gamma[0]));
        parts.push_back(oracle::affine_term(grad, -std::norm(a), 0, m, -1.0));
        constraints.push_back(oracle::combine(parts, gamma[0] * noise));
    }

    // strictly feasible interior point: inflate the reference slightly
    // (the under-estimator's slack is concave in the scale, so a small
    // inflation works where a large one can overshoot)
    Eigen::VectorXd interior;
    bool interior_found = false;
    for (double inflate : {1.05, 1.1, 1.2, 1.5}) {
        interior = oracle::pack(ref.beamformers) * inflate;
        interior_found = true;
        for (const auto& c : constraints) interior_found &= c.value(interior) < 0.0;
        if (interior_found) break;
    }
    REQUIRE(interior_found);

    double best = std::numeric_limits<double>::infinity();
    for (int start = 0; start < 50; ++start) {
        TrialRng rng(65, start, 302);
        Eigen::VectorXd x0 = interior;
        for (Eigen::Index i = 0; i < x0.size(); ++i) x0(i) += 0.15 * rng.normal();
        bool ok = true;
        for (const auto& c : constraints) ok &= c.value(x0) < 0.0;
        if (!ok) x0 = interior;
        const Eigen::VectorXd x = oracle::barrier_descent(constraints, x0);
        best = std::min(best, x.squaredNorm());
    }
    CHECK(conic_power == doctest::Approx(best).epsilon(1e-8));
}

TEST_CASE("SCA full solve: feasibility, monotone trace, convergence") {
    for (std::uint64_t trial : {0, 1, 2, 3, 4}) {
        const ChannelSet ch = unit_channels(3, 3, 66, trial);
        const SystemConfig cfg = config_for(ch, 2.0);
        const ScaResult r = solve_powermin_sca(ch, cfg);
        REQUIRE(r.status == ScaStatus::ok);
        CHECK(r.trace.converged);
        CHECK(r.trace.monotone);
        CHECK(max_relative_sinr_violation(ch, r.beams, min_sinr_targets(cfg),
                                          cfg.noise_variance) <= 1e-6);
        CHECK(r.trace.max_residual.back() <= 1e-6);
    }
}

TEST_CASE("two distinct feasible initializations agree within 1%") {
    for (std::uint64_t trial : {0, 1, 2}) {
        const ChannelSet ch = unit_channels(3, 3, 67, trial);
        const SystemConfig cfg = config_for(ch, 2.0);
        const std::vector<double> gamma = min_sinr_targets(cfg);

        // init A: matched-filter directions at the minimal powers that
        // satisfy every (k, l) constraint (always feasible)
        std::vector<Eigen::VectorXcd> dirs;
        for (const auto& h : ch.channels) dirs.push_back(h / h.norm());
        const auto powers = rescale_powers_for_targets(ch, dirs, gamma, cfg.noise_variance);
        REQUIRE(powers.has_value());
        BeamformerSet mrt_init;
        for (int k = 0; k < 3; ++k)
            mrt_init.beamformers.push_back(std::sqrt((*powers)[k]) * dirs[k]);

        ScaOptions from_mrt;
        from_mrt.initial = mrt_init;
        ScaOptions from_sdr;
        from_sdr.init = ScaInit::sdr_warm;
        const ScaResult a = solve_powermin_sca(ch, cfg, from_mrt);
        const ScaResult b = solve_powermin_sca(ch, cfg, from_sdr);
        REQUIRE(a.status == ScaStatus::ok);
        REQUIRE(b.status == ScaStatus::ok);
        CHECK(a.beams.total_power() ==
              doctest::Approx(b.beams.total_power()).epsilon(0.01));
    }
}

TEST_CASE("SDR structure and lower-bound property") {
    const ChannelSet ch = unit_channels(2, 2, 68);
    const auto program = build_sdr_program(ch, {1.0, 1.0}, 0.01);
    int slacks = 0, psd = 0;
    for (const auto& cone : program.program.cones()) {
        if (cone.kind == conic::ConeKind::nonnegative) ++slacks;
        if (cone.kind == conic::ConeKind::psd) ++psd;
    }
    CHECK(psd == 2);
    CHECK(slacks == 3);  // N (N+1) / 2

    for (std::uint64_t trial : {0, 1, 2}) {
        const ChannelSet ch3 = unit_channels(3, 3, 69, trial);
        const SystemConfig cfg = config_for(ch3, 2.0);
        const SdrSolution sdr = solve_powermin_sdr(ch3, cfg);
        const ScaResult sca = solve_powermin_sca(ch3, cfg);
        REQUIRE(sdr.recovery != SdrSolution::Recovery::none);
        REQUIRE(sca.status == ScaStatus::ok);
        // relaxation lower-bounds every feasible design
        CHECK(sdr.relaxation_objective <= sca.beams.total_power() * (1.0 + 1e-7));
        CHECK(sdr.relaxation_objective <= sdr.recovered_objective * (1.0 + 1e-7));
        // recovered solution satisfies the original constraints exactly
        CHECK(max_relative_sinr_violation(ch3, sdr.beams, min_sinr_targets(cfg),
                                          cfg.noise_variance) <= 1e-9);
        // trace identity: complex trace vs realified half-trace
        for (int k = 0; k < 3; ++k) {
            const Eigen::MatrixXcd h_mat =
                ch3.channels[0] * ch3.channels[0].adjoint();
            const double direct = (h_mat * sdr.matrices[k]).trace().real();
            const double realified = 0.5 * (conic::embed_hermitian(h_mat) *
                                            conic::embed_hermitian(sdr.matrices[k]))
                                               .trace();
            CHECK(realified == doctest::Approx(direct).epsilon(1e-10));
        }
    }
}

TEST_CASE("SDR power ordering favors the weak user") {
    // Table-style instance: equal targets, sorted channels; the weakest
    // user should absorb the dominant share of the total power.
    const ChannelSet ch = unit_channels(3, 3, 180, 4);
    const SystemConfig cfg = config_for(ch, 2.0);
    const SdrSolution sdr = solve_powermin_sdr(ch, cfg);
    REQUIRE(sdr.recovery != SdrSolution::Recovery::none);
    const double p0 = sdr.beams.user_power(0);
    const double p1 = sdr.beams.user_power(1);
    const double p2 = sdr.beams.user_power(2);
    CHECK(p0 > p1);
    CHECK(p1 > p2);
    CHECK(p0 / (p0 + p1 + p2) > 0.5);
}

TEST_CASE("SCA/SDR agreement across seeded instances") {
    int within = 0;
    const int instances = 20;
    for (int t = 0; t < instances; ++t) {
        const ChannelSet ch = unit_channels(3, 3, 70, t);
        const SystemConfig cfg = config_for(ch, 2.0);
        const ScaResult sca = solve_powermin_sca(ch, cfg);
        const SdrSolution sdr = solve_powermin_sdr(ch, cfg);
        if (sca.status != ScaStatus::ok || sdr.recovery == SdrSolution::Recovery::none)
            continue;
        const double rel = std::abs(sca.beams.total_power() - sdr.recovered_objective) /
                           sdr.recovered_objective;
        if (rel <= 0.005) ++within;
    }
    CHECK(within >= 19);
}

TEST_CASE("power rescaling recursion restores feasibility") {
    const ChannelSet ch = unit_channels(3, 3, 71);
    const std::vector<double> gamma = {1.0, 1.0, 1.0};
    std::vector<Eigen::VectorXcd> dirs;
    for (const auto& h : ch.channels) dirs.push_back(h / h.norm());
    const auto powers = rescale_powers_for_targets(ch, dirs, gamma, 0.01);
    REQUIRE(powers.has_value());
    BeamformerSet beams;
    for (int k = 0; k < 3; ++k)
        beams.beamformers.push_back(std::sqrt((*powers)[k]) * dirs[k]);
    CHECK(max_relative_sinr_violation(ch, beams, gamma, 0.01) <= 1e-9);
}
