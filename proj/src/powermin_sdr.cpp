// SPDX-License-Identifier: Apache-2.0

#include "noma/channel.hpp"
#include "noma/powermin.hpp"

#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace noma {

Eigen::MatrixXcd SdrProgram::matrix(const conic::SolveReport& report, int k) const {
    return power_unit2 *
           conic::hermitian_from_embedding(conic::smat(report.slice(matrix_slices.at(k))));
}

SdrProgram build_sdr_program(const ChannelSet& channels, const std::vector<double>& gamma_min,
                             double noise_variance) {
    channels.validate();
    const int n = channels.num_users();
    const int m = channels.num_antennas();
    if (static_cast<int>(gamma_min.size()) != n)
        throw std::invalid_argument("gamma_min must have one entry per user");

    SdrProgram sp;
    sp.num_antennas = m;
    auto& p = sp.program;

    const Eigen::VectorXd trace_coeffs =
        conic::hermitian_form_coefficients(Eigen::MatrixXcd::Identity(m, m));
    for (int k = 0; k < n; ++k) {
        auto slice = p.add_psd(2 * m, "W_" + std::to_string(k));
        sp.matrix_slices.push_back(slice);
        p.add_objective_block(slice, trace_coeffs);
    }

    // Per-user normalized data (Hhat_l = hhat_l hhat_l^H, noise
    // sigma^2/||h_l||^2) in power units keeping the solution O(1).
    double scale2 = 0.0;
    for (int k = 0; k < n; ++k)
        scale2 = std::max(scale2, gamma_min[k] * noise_variance /
                                      channels.channels[k].squaredNorm());
    sp.power_unit2 = scale2 > 0.0 ? scale2 : 1.0;
    for (int l = 0; l < n; ++l) {
        const Eigen::VectorXcd hhat = channels.channels[l] / channels.channels[l].norm();
        const double sigma2_l =
            noise_variance / channels.channels[l].squaredNorm() / sp.power_unit2;
        const Eigen::VectorXd h_coeffs =
            conic::hermitian_form_coefficients(hhat * hhat.adjoint());
        for (int k = 0; k <= l; ++k) {
            if (gamma_min[k] == 0.0) continue;  // Tr(H W) >= 0 holds for free
            auto slack = p.add_nonnegative(
                1, "slack_" + std::to_string(k) + "_" + std::to_string(l));
            const auto row = p.add_equality_row(gamma_min[k] * sigma2_l);
            p.add_coefficient_block(row, sp.matrix_slices[k], h_coeffs);
            for (int mm = k + 1; mm < n; ++mm)
                p.add_coefficient_block(row, sp.matrix_slices[mm], -gamma_min[k] * h_coeffs);
            p.add_coefficient(row, slack.offset, -1.0);
        }
    }
    return sp;
}

namespace {

// Eigen-extracted vectors can violate constraints by the dropped PSD
// dust; a uniform power scale-up restores exact feasibility without
// touching directions.
bool repair_and_verify(const ChannelSet& channels, BeamformerSet& beams,
                       const std::vector<double>& gamma_min, double noise_variance) {
    const int n = channels.num_users();
    double scale = 1.0;
    for (int k = 0; k < n; ++k) {
        if (gamma_min[k] == 0.0) continue;
        for (int l = k; l < n; ++l) {
            const Eigen::VectorXcd& h = channels.channels[l];
            const double signal = std::norm(h.dot(beams.beamformers[k]));
            double interference = 0.0;
            for (int mm = k + 1; mm < n; ++mm)
                interference += std::norm(h.dot(beams.beamformers[mm]));
            const double margin = signal - gamma_min[k] * interference;
            if (margin <= 0.0) return false;  // not repairable by uniform scaling
            scale = std::max(scale, gamma_min[k] * noise_variance / margin);
        }
    }
    if (scale > 1.0 + 1e-3) return false;  // too far off to call it dust
    const double amp = std::sqrt(scale);
    for (auto& w : beams.beamformers) w *= amp;
    return max_relative_sinr_violation(channels, beams, gamma_min, noise_variance) <= 1e-9;
}

}  // namespace

SdrSolution solve_powermin_sdr(const ChannelSet& channels, const SystemConfig& config,
                               const SdrOptions& options) {
    config.validate();
    channels.validate();
    const int n = channels.num_users();
    const int m = channels.num_antennas();
    if (config.num_users != n || config.num_antennas != m)
        throw std::invalid_argument("config does not match channel set");
    const std::vector<double> gamma = min_sinr_targets(config);

    SdrSolution solution;
    const auto sp = build_sdr_program(channels, gamma, config.noise_variance);
    const auto report = conic::solve(sp.program, options.solver);
    solution.solver_status = report.status;
    if (report.status != conic::SolveStatus::optimal) return solution;

    solution.relaxation_objective = report.objective * sp.power_unit2;
    solution.matrices.reserve(n);
    solution.rank_one_gaps.reserve(n);
    std::vector<Eigen::VectorXcd> extracted(n);
    double max_gap = 0.0;
    for (int k = 0; k < n; ++k) {
        solution.matrices.push_back(sp.matrix(report, k));
        const auto ext = conic::extract_rank_one(solution.matrices.back());
        extracted[k] = ext.vector;
        solution.rank_one_gaps.push_back(ext.gap);
        max_gap = std::max(max_gap, ext.gap);
    }

    if (max_gap <= options.rank_one_threshold) {
        BeamformerSet beams;
        beams.beamformers = extracted;
        if (repair_and_verify(channels, beams, gamma, config.noise_variance)) {
            normalize_phases(channels, beams);
            solution.beams = std::move(beams);
            solution.recovered_objective = solution.beams.total_power();
            solution.recovery = SdrSolution::Recovery::eigenvector;
            return solution;
        }
    }

    const auto rescale = [&](const std::vector<Eigen::VectorXcd>& dirs) {
        return rescale_powers_for_targets(channels, dirs, gamma, config.noise_variance);
    };
    const auto feasible = [&](const std::vector<Eigen::VectorXcd>& beams) {
        BeamformerSet set;
        set.beamformers = beams;
        return max_relative_sinr_violation(channels, set, gamma, config.noise_variance) <= 1e-9;
    };
    const auto randomized = conic::randomize_rank_one(
        solution.matrices, rescale, feasible, options.randomization_count, config.rng_seed);
    if (randomized.success) {
        solution.beams.beamformers = randomized.beams;
        normalize_phases(channels, solution.beams);
        solution.recovered_objective = solution.beams.total_power();
        solution.recovery = SdrSolution::Recovery::randomization;
        return solution;
    }

    if (options.allow_sca_fallback) {
        ScaOptions sca_options;
        sca_options.solver = options.solver;
        sca_options.allow_sdr_fallback = false;
        const ScaResult sca = solve_powermin_sca(channels, config, sca_options);
        if (sca.status == ScaStatus::ok) {
            solution.beams = sca.beams;
            solution.recovered_objective = solution.beams.total_power();
            solution.recovery = SdrSolution::Recovery::sca_fallback;
            return solution;
        }
    }
    return solution;
}

std::string SdrSolution::to_json_string() const {
    nlohmann::json j;
    j["solver_status"] = conic::to_string(solver_status);
    j["relaxation_objective"] = relaxation_objective;
    j["recovered_objective"] = recovered_objective;
    j["rank_one_gaps"] = rank_one_gaps;
    switch (recovery) {
        case Recovery::eigenvector: j["recovery"] = "eigenvector"; break;
        case Recovery::randomization: j["recovery"] = "randomization"; break;
        case Recovery::sca_fallback: j["recovery"] = "sca_fallback"; break;
        case Recovery::none: j["recovery"] = "none"; break;
    }
    // packed Hermitian: per matrix, the lower triangle column-major as [re, im]
    nlohmann::json mats = nlohmann::json::array();
    for (const auto& w : matrices) {
        nlohmann::json packed = nlohmann::json::array();
        for (Eigen::Index c = 0; c < w.cols(); ++c)
            for (Eigen::Index r = c; r < w.rows(); ++r)
                packed.push_back({w(r, c).real(), w(r, c).imag()});
        mats.push_back(std::move(packed));
    }
    j["matrices_packed_lower"] = std::move(mats);
    nlohmann::json beams_json = nlohmann::json::array();
    for (const auto& w : beams.beamformers) {
        nlohmann::json v = nlohmann::json::array();
        for (Eigen::Index i = 0; i < w.size(); ++i) v.push_back({w(i).real(), w(i).imag()});
        beams_json.push_back(std::move(v));
    }
    j["beamformers"] = std::move(beams_json);
    return j.dump(2);
}

}  // namespace noma
