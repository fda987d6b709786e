// SPDX-License-Identifier: Apache-2.0

#include "noma/channel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "json.hpp"

namespace noma {

void ChannelModelParams::validate() const {
    if (!(min_distance_m > 0.0) || !(min_distance_m < cell_radius_m))
        throw std::invalid_argument("require 0 < min_distance < cell_radius");
    if (!(pathloss_exponent >= 0.0))
        throw std::invalid_argument("pathloss exponent must be >= 0");
}

void UncertaintyModel::validate() const {
    if (nominal_covariances.empty()) throw std::invalid_argument("empty uncertainty model");
    const auto m = nominal_covariances.front().rows();
    for (const auto& c : nominal_covariances) {
        if (c.rows() != m || c.cols() != m)
            throw std::invalid_argument("covariance dimension mismatch");
        if ((c - c.adjoint()).cwiseAbs().maxCoeff() > 1e-9)
            throw std::invalid_argument("nominal covariance not Hermitian");
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(c, Eigen::EigenvaluesOnly);
        if (eig.eigenvalues().minCoeff() < -1e-9)
            throw std::invalid_argument("nominal covariance not PSD");
    }
    if (error_std.rows() != m || error_std.cols() != m)
        throw std::invalid_argument("error_std dimension mismatch");
    if (error_std.minCoeff() < 0.0)
        throw std::invalid_argument("error_std entries must be >= 0");
    if (outage.size() != nominal_covariances.size())
        throw std::invalid_argument("outage must have one entry per user");
    for (double rho : outage)
        if (!(rho > 0.0 && rho < 1.0))
            throw std::invalid_argument("outage must lie in (0,1)");
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

}  // namespace

TrialRng::TrialRng(std::uint64_t seed, std::uint64_t trial_index, std::uint64_t stream)
    : engine_(splitmix64(splitmix64(splitmix64(seed) ^ trial_index) ^ stream)) {}

double TrialRng::uniform() {
    // 53 mantissa bits from the raw 64-bit output
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double TrialRng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log1p(-u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

std::complex<double> TrialRng::cnormal() {
    // CN(0,1): unit total variance, split over real and imaginary parts
    const double s = std::numbers::sqrt2;
    return {normal() / s, normal() / s};
}

Eigen::VectorXcd TrialRng::cnormal_vector(int dim) {
    Eigen::VectorXcd v(dim);
    for (int i = 0; i < dim; ++i) v(i) = cnormal();
    return v;
}

ChannelSet generate_channels(const SystemConfig& config, const ChannelModelParams& params,
                             std::uint64_t trial_index) {
    config.validate();
    params.validate();
    const int n = config.num_users;
    const int m = config.num_antennas;

    // Distances are fixed per experiment: they depend on the seed only.
    TrialRng dist_rng(config.rng_seed, 0, rng_stream::distances);
    std::vector<double> distances(n);
    const double r0sq = params.min_distance_m * params.min_distance_m;
    const double r1sq = params.cell_radius_m * params.cell_radius_m;
    for (int k = 0; k < n; ++k)
        distances[k] = std::sqrt(r0sq + dist_rng.uniform() * (r1sq - r0sq));

    TrialRng fade_rng(config.rng_seed, trial_index, rng_stream::fading);
    std::vector<std::pair<Eigen::VectorXcd, double>> users(n);
    for (int k = 0; k < n; ++k) {
        const double amplitude = std::pow(distances[k], -params.pathloss_exponent / 2.0);
        users[k] = {fade_rng.cnormal_vector(m) * amplitude, distances[k]};
    }

    // Ascending channel quality; stable sort breaks ties by generation index.
    std::stable_sort(users.begin(), users.end(), [](const auto& a, const auto& b) {
        return a.first.norm() < b.first.norm();
    });

    ChannelSet out;
    out.channels.reserve(n);
    out.distances_m.reserve(n);
    for (auto& [h, d] : users) {
        out.channels.push_back(std::move(h));
        out.distances_m.push_back(d);
    }
    return out;
}

std::vector<Eigen::MatrixXcd> sample_uncertainty(const UncertaintyModel& model,
                                                 std::uint64_t seed,
                                                 std::uint64_t trial_index) {
    model.validate();
    const int n = model.num_users();
    const auto m = model.error_std.rows();

    std::vector<Eigen::MatrixXcd> deltas;
    deltas.reserve(n);
    for (int k = 0; k < n; ++k) {
        TrialRng rng(seed, trial_index, rng_stream::uncertainty + 16ull * k);
        Eigen::MatrixXcd delta = Eigen::MatrixXcd::Zero(m, m);
        for (Eigen::Index i = 0; i < m; ++i) {
            delta(i, i) = model.error_std(i, i) * rng.normal();
            for (Eigen::Index j = i + 1; j < m; ++j) {
                const std::complex<double> e = model.error_std(i, j) * rng.cnormal();
                delta(i, j) = e;
                delta(j, i) = std::conj(e);
            }
        }
        deltas.push_back(std::move(delta));
    }
    return deltas;
}

Eigen::MatrixXcd nominal_covariance_from_channel(const Eigen::VectorXcd& h) {
    if (!(h.norm() > 0.0)) throw std::invalid_argument("zero channel vector");
    return h * h.adjoint();
}

UncertaintyModel make_uncertainty_model(const ChannelSet& channels, double error_variance,
                                        double outage) {
    channels.validate();
    if (!(error_variance >= 0.0)) throw std::invalid_argument("error variance must be >= 0");
    UncertaintyModel model;
    model.nominal_covariances.reserve(channels.num_users());
    for (const auto& h : channels.channels)
        model.nominal_covariances.push_back(nominal_covariance_from_channel(h));
    const int m = channels.num_antennas();
    model.error_std = Eigen::MatrixXd::Constant(m, m, std::sqrt(error_variance));
    model.outage.assign(channels.num_users(), outage);
    return model;
}

namespace {

using nlohmann::json;

json complex_to_json(const std::complex<double>& z) {
    return json::array({z.real(), z.imag()});
}

std::complex<double> complex_from_json(const json& j) {
    return {j.at(0).get<double>(), j.at(1).get<double>()};
}

json cvector_to_json(const Eigen::VectorXcd& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(complex_to_json(v(i)));
    return arr;
}

Eigen::VectorXcd cvector_from_json(const json& j) {
    Eigen::VectorXcd v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = complex_from_json(j[i]);
    return v;
}

json cmatrix_to_json(const Eigen::MatrixXcd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(complex_to_json(m(i, j)));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXcd cmatrix_from_json(const json& j) {
    const auto rows = j.size();
    const auto cols = rows == 0 ? 0 : j[0].size();
    Eigen::MatrixXcd m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t c = 0; c < cols; ++c)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
                complex_from_json(j[i][c]);
    return m;
}

}  // namespace

std::string to_json_string(const ChannelSet& channels) {
    json j;
    j["channels"] = json::array();
    for (const auto& h : channels.channels) j["channels"].push_back(cvector_to_json(h));
    j["distances_m"] = channels.distances_m;
    return j.dump(2);
}

ChannelSet channel_set_from_json(const std::string& text) {
    const json j = json::parse(text);
    ChannelSet out;
    for (const auto& h : j.at("channels")) out.channels.push_back(cvector_from_json(h));
    out.distances_m = j.at("distances_m").get<std::vector<double>>();
    return out;
}

std::string to_json_string(const UncertaintyModel& model) {
    json j;
    j["nominal_covariances"] = json::array();
    for (const auto& c : model.nominal_covariances)
        j["nominal_covariances"].push_back(cmatrix_to_json(c));
    json std_rows = json::array();
    for (Eigen::Index i = 0; i < model.error_std.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index c = 0; c < model.error_std.cols(); ++c)
            row.push_back(model.error_std(i, c));
        std_rows.push_back(std::move(row));
    }
    j["error_std"] = std_rows;
    j["outage"] = model.outage;
    return j.dump(2);
}

UncertaintyModel uncertainty_model_from_json(const std::string& text) {
    const json j = json::parse(text);
    UncertaintyModel model;
    for (const auto& c : j.at("nominal_covariances"))
        model.nominal_covariances.push_back(cmatrix_from_json(c));
    const auto& std_rows = j.at("error_std");
    const auto rows = std_rows.size();
    const auto cols = rows == 0 ? 0 : std_rows[0].size();
    model.error_std.resize(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t c = 0; c < cols; ++c)
            model.error_std(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
                std_rows[i][c].get<double>();
    model.outage = j.at("outage").get<std::vector<double>>();
    return model;
}

}  // namespace noma
