// SPDX-License-Identifier: Apache-2.0

#include "noma/channel.hpp"
#include "noma/conic.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

namespace noma::conic {

RankOneExtraction extract_rank_one(const Eigen::MatrixXcd& w_matrix) {
    const Eigen::Index n = w_matrix.rows();
    if (w_matrix.cols() != n) throw std::invalid_argument("rank-one extraction needs square input");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(0.5 * (w_matrix + w_matrix.adjoint()));
    const Eigen::VectorXd& values = eig.eigenvalues();  // ascending
    const double top = values(n - 1);
    const double psd_tol = 1e-7 * std::max(1.0, std::abs(top));
    if (values(0) < -psd_tol) throw std::invalid_argument("matrix not PSD within tolerance");

    RankOneExtraction out;
    if (top <= 0.0) {
        out.vector = Eigen::VectorXcd::Zero(n);
        out.gap = 0.0;
        return out;
    }
    out.vector = std::sqrt(top) * eig.eigenvectors().col(n - 1);
    out.gap = n > 1 ? std::max(0.0, values(n - 2)) / top : 0.0;
    return out;
}

RandomizationOutcome randomize_rank_one(const std::vector<Eigen::MatrixXcd>& w_set,
                                        const PowerRescaleFn& rescale,
                                        const ConstraintEvalFn& constraint_eval,
                                        int candidate_count, std::uint64_t seed) {
    RandomizationOutcome best;
    if (w_set.empty() || candidate_count < 1) return best;
    const Eigen::Index m = w_set.front().rows();

    // Square roots via eigen-decomposition, negative dust clipped.
    std::vector<Eigen::MatrixXcd> roots;
    roots.reserve(w_set.size());
    for (const auto& w : w_set) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(0.5 * (w + w.adjoint()));
        const Eigen::VectorXd vals = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
        roots.push_back(eig.eigenvectors() * vals.asDiagonal() * eig.eigenvectors().adjoint());
    }

    for (int candidate = 0; candidate < candidate_count; ++candidate) {
        TrialRng rng(seed, candidate, rng_stream::randomization);
        std::vector<Eigen::VectorXcd> directions;
        directions.reserve(w_set.size());
        bool degenerate = false;
        for (const auto& root : roots) {
            Eigen::VectorXcd dir = root * rng.cnormal_vector(static_cast<int>(m));
            const double norm = dir.norm();
            if (!(norm > 0.0)) {
                degenerate = true;
                break;
            }
            directions.push_back(dir / norm);
        }
        if (degenerate) continue;

        const auto powers = rescale(directions);
        if (!powers) continue;

        std::vector<Eigen::VectorXcd> beams(directions.size());
        double total = 0.0;
        for (std::size_t k = 0; k < directions.size(); ++k) {
            beams[k] = std::sqrt((*powers)[k]) * directions[k];
            total += (*powers)[k];
        }
        if (!constraint_eval(beams)) continue;

        ++best.feasible_candidates;
        if (total < best.total_power) {
            best.total_power = total;
            best.beams = std::move(beams);
            best.success = true;
        }
    }
    return best;
}

}  // namespace noma::conic
