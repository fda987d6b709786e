// SPDX-License-Identifier: Apache-2.0

#include "noma/conic.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace noma::conic {

const char* to_string(SolveStatus status) {
    switch (status) {
        case SolveStatus::optimal: return "optimal";
        case SolveStatus::infeasible: return "infeasible";
        case SolveStatus::unbounded: return "unbounded";
        case SolveStatus::numerical_failure: return "numerical_failure";
        case SolveStatus::iteration_limit: return "iteration_limit";
    }
    return "unknown";
}

SliceRef ConicProgram::add_nonnegative(Eigen::Index count, std::string name) {
    if (count < 1) throw std::invalid_argument("nonnegative slice needs count >= 1");
    SliceRef slice{num_vars_, count};
    cones_.push_back({ConeKind::nonnegative, slice, 0, std::move(name)});
    num_vars_ += count;
    return slice;
}

SliceRef ConicProgram::add_second_order(Eigen::Index dim, std::string name) {
    if (dim < 2) throw std::invalid_argument("second-order cone needs dim >= 2");
    SliceRef slice{num_vars_, dim};
    cones_.push_back({ConeKind::second_order, slice, 0, std::move(name)});
    num_vars_ += dim;
    return slice;
}

SliceRef ConicProgram::add_psd(Eigen::Index order, std::string name) {
    if (order < 1) throw std::invalid_argument("psd cone needs order >= 1");
    SliceRef slice{num_vars_, svec_length(order)};
    cones_.push_back({ConeKind::psd, slice, order, std::move(name)});
    num_vars_ += slice.size;
    return slice;
}

void ConicProgram::add_objective_term(Eigen::Index var, double coeff) {
    objective_.emplace_back(var, coeff);
}

void ConicProgram::add_objective_block(const SliceRef& slice, const Eigen::VectorXd& coeffs) {
    if (coeffs.size() != slice.size) throw std::invalid_argument("objective block size mismatch");
    for (Eigen::Index i = 0; i < coeffs.size(); ++i)
        if (coeffs(i) != 0.0) objective_.emplace_back(slice.offset + i, coeffs(i));
}

Eigen::Index ConicProgram::add_equality_row(double rhs) {
    rhs_.push_back(rhs);
    return static_cast<Eigen::Index>(rhs_.size()) - 1;
}

void ConicProgram::add_coefficient(Eigen::Index row, Eigen::Index var, double coeff) {
    if (coeff != 0.0) triplets_.push_back({row, var, coeff});
}

void ConicProgram::add_coefficient_block(Eigen::Index row, const SliceRef& slice,
                                         const Eigen::VectorXd& coeffs) {
    if (coeffs.size() != slice.size) throw std::invalid_argument("coefficient block size mismatch");
    for (Eigen::Index i = 0; i < coeffs.size(); ++i)
        if (coeffs(i) != 0.0) triplets_.push_back({row, slice.offset + i, coeffs(i)});
}

Eigen::VectorXd ConicProgram::objective_vector() const {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(num_vars_);
    for (const auto& [var, coeff] : objective_) c(var) += coeff;
    return c;
}

Eigen::VectorXd ConicProgram::rhs_vector() const {
    return Eigen::Map<const Eigen::VectorXd>(rhs_.data(), static_cast<Eigen::Index>(rhs_.size()));
}

void ConicProgram::validate() const {
    Eigen::Index covered = 0;
    for (const auto& cone : cones_) {
        if (cone.vars.offset != covered) throw std::invalid_argument("slices not contiguous");
        if (cone.kind == ConeKind::psd && cone.vars.size != svec_length(cone.order))
            throw std::invalid_argument("psd slice has wrong packed length");
        covered += cone.vars.size;
    }
    if (covered != num_vars_) throw std::invalid_argument("slices do not cover variables");
    const Eigen::Index rows = num_rows();
    for (const auto& t : triplets_) {
        if (t.row < 0 || t.row >= rows) throw std::invalid_argument("triplet row out of range");
        if (t.col < 0 || t.col >= num_vars_) throw std::invalid_argument("triplet col out of range");
        if (!std::isfinite(t.value)) throw std::invalid_argument("non-finite coefficient");
    }
    for (const auto& [var, coeff] : objective_) {
        if (var < 0 || var >= num_vars_) throw std::invalid_argument("objective var out of range");
        if (!std::isfinite(coeff)) throw std::invalid_argument("non-finite objective coefficient");
    }
}

void ConicProgram::dump(std::ostream& os) const {
    char buf[64];
    const auto fmt = [&buf](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    os << "conic-program v1\n";
    os << "vars " << num_vars_ << "\n";
    os << "objective " << objective_.size() << "\n";
    for (const auto& [var, coeff] : objective_) os << var << " " << fmt(coeff) << "\n";
    os << "equalities " << num_rows() << " " << triplets_.size() << "\n";
    for (const auto& t : triplets_) os << t.row << " " << t.col << " " << fmt(t.value) << "\n";
    os << "rhs " << rhs_.size() << "\n";
    for (std::size_t i = 0; i < rhs_.size(); ++i) os << i << " " << fmt(rhs_[i]) << "\n";
    os << "cones " << cones_.size() << "\n";
    for (const auto& cone : cones_) {
        switch (cone.kind) {
            case ConeKind::nonnegative:
                os << "nonneg " << cone.vars.offset << " " << cone.vars.size;
                break;
            case ConeKind::second_order:
                os << "soc " << cone.vars.offset << " " << cone.vars.size;
                break;
            case ConeKind::psd:
                os << "psd " << cone.vars.offset << " " << cone.order;
                break;
        }
        if (!cone.name.empty()) os << " " << cone.name;
        os << "\n";
    }
}

// ---------------------------------------------------------------------------
// svec / Hermitian embedding
// ---------------------------------------------------------------------------

Eigen::Index svec_length(Eigen::Index order) { return order * (order + 1) / 2; }

Eigen::VectorXd svec(const Eigen::MatrixXd& symmetric) {
    const Eigen::Index n = symmetric.rows();
    if (symmetric.cols() != n) throw std::invalid_argument("svec needs a square matrix");
    Eigen::VectorXd out(svec_length(n));
    Eigen::Index idx = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
        out(idx++) = symmetric(j, j);
        for (Eigen::Index i = j + 1; i < n; ++i)
            out(idx++) = std::numbers::sqrt2 * 0.5 * (symmetric(i, j) + symmetric(j, i));
    }
    return out;
}

Eigen::MatrixXd smat(const Eigen::VectorXd& packed) {
    // invert k(k+1)/2 = len
    const Eigen::Index len = packed.size();
    const Eigen::Index n =
        static_cast<Eigen::Index>((std::sqrt(8.0 * static_cast<double>(len) + 1.0) - 1.0) / 2.0 + 0.5);
    if (svec_length(n) != len) throw std::invalid_argument("invalid packed length");
    Eigen::MatrixXd out(n, n);
    Eigen::Index idx = 0;
    const double inv_sqrt2 = 1.0 / std::numbers::sqrt2;
    for (Eigen::Index j = 0; j < n; ++j) {
        out(j, j) = packed(idx++);
        for (Eigen::Index i = j + 1; i < n; ++i) {
            const double v = packed(idx++) * inv_sqrt2;
            out(i, j) = v;
            out(j, i) = v;
        }
    }
    return out;
}

Eigen::MatrixXd embed_hermitian(const Eigen::MatrixXcd& hermitian, double tol) {
    const Eigen::Index n = hermitian.rows();
    if (hermitian.cols() != n) throw std::invalid_argument("embedding needs a square matrix");
    if ((hermitian - hermitian.adjoint()).cwiseAbs().maxCoeff() > tol)
        throw std::invalid_argument("matrix not Hermitian within tolerance");
    Eigen::MatrixXd out(2 * n, 2 * n);
    const Eigen::MatrixXd re = hermitian.real();
    const Eigen::MatrixXd im = hermitian.imag();
    out.topLeftCorner(n, n) = re;
    out.topRightCorner(n, n) = -im;
    out.bottomLeftCorner(n, n) = im;
    out.bottomRightCorner(n, n) = re;
    return out;
}

Eigen::MatrixXcd hermitian_from_embedding(const Eigen::MatrixXd& embedded) {
    const Eigen::Index two_n = embedded.rows();
    if (embedded.cols() != two_n || two_n % 2 != 0)
        throw std::invalid_argument("embedded matrix must be square of even order");
    const Eigen::Index n = two_n / 2;
    const Eigen::MatrixXd re =
        0.5 * (embedded.topLeftCorner(n, n) + embedded.bottomRightCorner(n, n));
    const Eigen::MatrixXd im =
        0.5 * (embedded.bottomLeftCorner(n, n) - embedded.topRightCorner(n, n));
    Eigen::MatrixXcd h = re.cast<std::complex<double>>() +
                         std::complex<double>(0.0, 1.0) * im.cast<std::complex<double>>();
    return 0.5 * (h + h.adjoint().eval());
}

Eigen::VectorXd hermitian_form_coefficients(const Eigen::MatrixXcd& g) {
    return 0.5 * svec(embed_hermitian(g));
}

ComplexityEstimate complexity_estimate(int num_antennas, int num_users, double epsilon) {
    if (num_antennas < 1 || num_users < 1) throw std::invalid_argument("positive sizes required");
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("epsilon must be in (0,1)");
    const double m_ant = num_antennas;
    const double n_usr = num_users;
    const double accuracy = std::log(1.0 / epsilon);

    ComplexityEstimate est{};
    est.sca_iterations = std::sqrt(0.5 * n_usr * n_usr + 1.5 * n_usr) * accuracy;
    const double soc_dimension =
        0.33 * n_usr * n_usr * n_usr + 0.5 * n_usr * n_usr + 1.16 * n_usr + 1.0;
    est.sca_operations = (m_ant * n_usr) * (m_ant * n_usr) * soc_dimension;
    const double sdp_cone_dim = m_ant * m_ant;
    est.sdp_iterations = std::sqrt(sdp_cone_dim) * accuracy;
    const double m_cons = 0.5 * n_usr * (n_usr + 1.0);
    est.sdp_operations = m_cons * std::pow(sdp_cone_dim, 3) +
                         m_cons * m_cons * std::pow(sdp_cone_dim, 2) +
                         std::pow(m_cons, 3);
    return est;
}

}  // namespace noma::conic
