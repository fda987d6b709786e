// SPDX-License-Identifier: Apache-2.0
//
// Homogeneous self-dual primal-dual interior-point method over the
// product of nonnegative, second-order and PSD cones, with
// Nesterov-Todd scaling and Mehrotra predictor-corrector steps.
//
// The program form  min c'x  s.t.  A x = b, x in K  is treated as the
// conic form with G = -I, h = 0, so each Newton direction reduces to a
// dense normal-equations solve with  M = A W'W A'. Instances in this
// toolkit have at most a few hundred rows, which keeps the dense
// factorization cheap and avoids sparse bookkeeping.

#include "noma/conic.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <vector>

namespace noma::conic {
namespace {

constexpr double kStepScale = 0.99;     // back off from the cone boundary
constexpr double kStepMax = 0.99995;
constexpr double kSigmaMin = 1e-4;
constexpr double kSigmaMax = 0.9989;
constexpr double kStaticReg = 1e-12;
constexpr double kSafeguard = 500.0;

struct LpBlock {
    Eigen::Index off = 0, size = 0;
    Eigen::VectorXd w;  // sqrt(s_i / z_i)
};

struct SocBlock {
    Eigen::Index off = 0, dim = 0;
    double eta = 1.0, a = 1.0;
    Eigen::VectorXd q;
};

struct PsdBlock {
    Eigen::Index off = 0, len = 0, order = 0;
    Eigen::MatrixXd r, rt;          // scaling factor R and its transpose
    Eigen::VectorXd sigma;          // NT eigenvalues (lambda block is diag(sigma))
};

// Cone layout plus the current Nesterov-Todd scaling state.
class Scaling {
  public:
    explicit Scaling(const std::vector<ConeSlice>& cones) {
        for (const auto& cone : cones) {
            switch (cone.kind) {
                case ConeKind::nonnegative: {
                    LpBlock b;
                    b.off = cone.vars.offset;
                    b.size = cone.vars.size;
                    b.w = Eigen::VectorXd::Ones(b.size);
                    lp_.push_back(std::move(b));
                    degree_ += cone.vars.size;
                    break;
                }
                case ConeKind::second_order: {
                    SocBlock b;
                    b.off = cone.vars.offset;
                    b.dim = cone.vars.size;
                    b.q = Eigen::VectorXd::Zero(b.dim - 1);
                    soc_.push_back(std::move(b));
                    degree_ += 1;
                    break;
                }
                case ConeKind::psd: {
                    PsdBlock b;
                    b.off = cone.vars.offset;
                    b.len = cone.vars.size;
                    b.order = cone.order;
                    b.r = Eigen::MatrixXd::Identity(b.order, b.order);
                    b.rt = b.r;
                    b.sigma = Eigen::VectorXd::Ones(b.order);
                    psd_.push_back(std::move(b));
                    degree_ += cone.order;
                    break;
                }
            }
        }
    }

    Eigen::Index degree() const { return degree_; }

    void set_identity() {
        identity_ = true;
        for (auto& b : lp_) b.w.setOnes();
        for (auto& b : soc_) {
            b.eta = 1.0;
            b.a = 1.0;
            b.q.setZero();
        }
        for (auto& b : psd_) {
            b.r.setIdentity();
            b.rt.setIdentity();
            b.sigma.setOnes();
        }
    }

    // Updates the NT scaling from strictly feasible (s, z) and returns
    // lambda = W z. Returns nullopt when either point left its cone.
    std::optional<Eigen::VectorXd> update(const Eigen::VectorXd& s, const Eigen::VectorXd& z) {
        identity_ = false;
        for (auto& b : lp_) {
            for (Eigen::Index i = 0; i < b.size; ++i) {
                const double si = s(b.off + i), zi = z(b.off + i);
                if (si <= 0.0 || zi <= 0.0) return std::nullopt;
                b.w(i) = std::sqrt(si / zi);
            }
        }
        for (auto& b : soc_) {
            const auto sb = s.segment(b.off, b.dim);
            const auto zb = z.segment(b.off, b.dim);
            const double sres = sb(0) * sb(0) - sb.tail(b.dim - 1).squaredNorm();
            const double zres = zb(0) * zb(0) - zb.tail(b.dim - 1).squaredNorm();
            if (sres <= 0.0 || zres <= 0.0 || sb(0) <= 0.0 || zb(0) <= 0.0) return std::nullopt;
            const double snorm = std::sqrt(sres), znorm = std::sqrt(zres);
            const Eigen::VectorXd sbar = sb / snorm;
            const Eigen::VectorXd zbar = zb / znorm;
            const double gamma = std::sqrt(0.5 * (1.0 + sbar.dot(zbar)));
            b.eta = std::sqrt(snorm / znorm);
            b.a = (0.5 / gamma) * (sbar(0) + zbar(0));
            b.q = (0.5 / gamma) * (sbar.tail(b.dim - 1) - zbar.tail(b.dim - 1));
        }
        for (auto& b : psd_) {
            const Eigen::MatrixXd sm = smat(s.segment(b.off, b.len));
            const Eigen::MatrixXd zm = smat(z.segment(b.off, b.len));
            Eigen::LLT<Eigen::MatrixXd> ls(sm), lz(zm);
            if (ls.info() != Eigen::Success || lz.info() != Eigen::Success) return std::nullopt;
            const Eigen::MatrixXd lsm = ls.matrixL();
            const Eigen::MatrixXd lzm = lz.matrixL();
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(lzm.transpose() * lsm,
                                                  Eigen::ComputeFullU | Eigen::ComputeFullV);
            b.sigma = svd.singularValues();
            if (b.sigma.minCoeff() <= 0.0) return std::nullopt;
            const Eigen::VectorXd inv_sqrt = b.sigma.cwiseSqrt().cwiseInverse();
            b.r = lsm * svd.matrixV() * inv_sqrt.asDiagonal();
            b.rt = b.r.transpose();
        }

        Eigen::VectorXd lambda(z.size());
        apply_w(z, lambda);
        return lambda;
    }

    // out = W in
    void apply_w(const Eigen::VectorXd& in, Eigen::VectorXd& out) const {
        for (const auto& b : lp_)
            out.segment(b.off, b.size) = b.w.cwiseProduct(in.segment(b.off, b.size));
        for (const auto& b : soc_) apply_soc(b, in, out);
        for (const auto& b : psd_) {
            // W x = svec(R' X R); identity state keeps R = I
            const Eigen::MatrixXd x = smat(in.segment(b.off, b.len));
            out.segment(b.off, b.len) = svec(b.rt * x * b.r);
        }
    }

    // out = W' in (differs from W only on PSD blocks)
    void apply_wt(const Eigen::VectorXd& in, Eigen::VectorXd& out) const {
        for (const auto& b : lp_)
            out.segment(b.off, b.size) = b.w.cwiseProduct(in.segment(b.off, b.size));
        for (const auto& b : soc_) apply_soc(b, in, out);
        for (const auto& b : psd_) {
            const Eigen::MatrixXd x = smat(in.segment(b.off, b.len));
            out.segment(b.off, b.len) = svec(b.r * x * b.rt);
        }
    }

    // out = W'W in
    void apply_w2(const Eigen::VectorXd& in, Eigen::VectorXd& out) const {
        for (const auto& b : lp_)
            out.segment(b.off, b.size) =
                b.w.array().square().matrix().cwiseProduct(in.segment(b.off, b.size));
        for (const auto& b : soc_) {
            Eigen::VectorXd tmp(in.size());
            apply_soc(b, in, tmp);
            apply_soc(b, tmp, out);
        }
        for (const auto& b : psd_) {
            const Eigen::MatrixXd x = smat(in.segment(b.off, b.len));
            out.segment(b.off, b.len) = svec(b.r * (b.rt * x * b.r) * b.rt);
        }
    }

    // Jordan product u o v.
    void product(const Eigen::VectorXd& u, const Eigen::VectorXd& v, Eigen::VectorXd& out) const {
        for (const auto& b : lp_)
            out.segment(b.off, b.size) =
                u.segment(b.off, b.size).cwiseProduct(v.segment(b.off, b.size));
        for (const auto& b : soc_) {
            const auto ub = u.segment(b.off, b.dim);
            const auto vb = v.segment(b.off, b.dim);
            out(b.off) = ub.dot(vb);
            out.segment(b.off + 1, b.dim - 1) =
                ub(0) * vb.tail(b.dim - 1) + vb(0) * ub.tail(b.dim - 1);
        }
        for (const auto& b : psd_) {
            const Eigen::MatrixXd um = smat(u.segment(b.off, b.len));
            const Eigen::MatrixXd vm = smat(v.segment(b.off, b.len));
            out.segment(b.off, b.len) = svec(0.5 * (um * vm + vm * um));
        }
    }

    // Solves lambda o x = d for x, where lambda is the current scaled
    // point (PSD blocks are diagonal there).
    void divide_by_lambda(const Eigen::VectorXd& lambda, const Eigen::VectorXd& d,
                          Eigen::VectorXd& out) const {
        for (const auto& b : lp_)
            out.segment(b.off, b.size) =
                d.segment(b.off, b.size).cwiseQuotient(lambda.segment(b.off, b.size));
        for (const auto& b : soc_) {
            const auto ub = lambda.segment(b.off, b.dim);
            const auto wb = d.segment(b.off, b.dim);
            const double u0 = ub(0);
            const double rho = u0 * u0 - ub.tail(b.dim - 1).squaredNorm();
            const double zeta = ub.tail(b.dim - 1).dot(wb.tail(b.dim - 1));
            const double factor = (zeta / u0 - wb(0)) / rho;
            out(b.off) = (u0 * wb(0) - zeta) / rho;
            out.segment(b.off + 1, b.dim - 1) =
                factor * ub.tail(b.dim - 1) + wb.tail(b.dim - 1) / u0;
        }
        for (const auto& b : psd_) {
            // Lambda X + X Lambda = 2 D with Lambda = diag(sigma)
            const Eigen::MatrixXd dm = smat(d.segment(b.off, b.len));
            Eigen::MatrixXd x(b.order, b.order);
            for (Eigen::Index i = 0; i < b.order; ++i)
                for (Eigen::Index j = 0; j < b.order; ++j)
                    x(i, j) = 2.0 * dm(i, j) / (b.sigma(i) + b.sigma(j));
            out.segment(b.off, b.len) = svec(x);
        }
    }

    // Subtracts value from the cone identity component of v.
    void subtract_identity(Eigen::VectorXd& v, double value) const {
        for (const auto& b : lp_) v.segment(b.off, b.size).array() -= value;
        for (const auto& b : soc_) v(b.off) -= value;
        for (const auto& b : psd_) {
            Eigen::Index idx = b.off;
            for (Eigen::Index j = 0; j < b.order; ++j) {
                v(idx) -= value;
                idx += b.order - j;
            }
        }
    }

    // Largest t such that v + t * e lies outside the cone boundary, for
    // the shift-to-interior initialization.
    double max_boundary_residual(const Eigen::VectorXd& v) const {
        double alpha = -1.0;
        for (const auto& b : lp_)
            alpha = std::max(alpha, -v.segment(b.off, b.size).minCoeff());
        for (const auto& b : soc_)
            alpha = std::max(alpha, v.segment(b.off + 1, b.dim - 1).norm() - v(b.off));
        for (const auto& b : psd_) {
            const Eigen::MatrixXd m = smat(v.segment(b.off, b.len));
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m, Eigen::EigenvaluesOnly);
            alpha = std::max(alpha, -eig.eigenvalues().minCoeff());
        }
        return alpha;
    }

    void shift_into_cone(Eigen::VectorXd& v) const {
        const double alpha = std::max(-0.99, max_boundary_residual(v));
        subtract_identity(v, -(1.0 + alpha));
    }

    // Maximum step length along d keeping lambda + t d inside the cone
    // (lambda is the current scaled point).
    double max_step(const Eigen::VectorXd& lambda, const Eigen::VectorXd& d) const {
        double limit = std::numeric_limits<double>::infinity();
        for (const auto& b : lp_) {
            for (Eigen::Index i = 0; i < b.size; ++i) {
                const double ratio = d(b.off + i) / lambda(b.off + i);
                if (ratio < 0.0) limit = std::min(limit, -1.0 / ratio);
            }
        }
        for (const auto& b : soc_) {
            const auto lb = lambda.segment(b.off, b.dim);
            const auto db = d.segment(b.off, b.dim);
            const double lres = lb(0) * lb(0) - lb.tail(b.dim - 1).squaredNorm();
            if (lres <= 0.0) continue;
            const double lnorm = std::sqrt(lres);
            const Eigen::VectorXd lbar = lb / lnorm;
            const double lbar_d = lbar(0) * db(0) - lbar.tail(b.dim - 1).dot(db.tail(b.dim - 1));
            const double factor = (lbar_d + db(0)) / (lbar(0) + 1.0);
            Eigen::VectorXd rho(b.dim);
            rho(0) = lbar_d / lnorm;
            rho.tail(b.dim - 1) =
                (db.tail(b.dim - 1) - factor * lbar.tail(b.dim - 1)) / lnorm;
            const double step = rho.tail(b.dim - 1).norm() - rho(0);
            if (step > 0.0) limit = std::min(limit, 1.0 / step);
        }
        for (const auto& b : psd_) {
            const Eigen::VectorXd inv_sqrt = b.sigma.cwiseSqrt().cwiseInverse();
            const Eigen::MatrixXd dm = smat(d.segment(b.off, b.len));
            const Eigen::MatrixXd scaled =
                inv_sqrt.asDiagonal() * dm * inv_sqrt.asDiagonal();
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(scaled, Eigen::EigenvaluesOnly);
            const double xi = eig.eigenvalues().minCoeff();
            if (xi < 0.0) limit = std::min(limit, -1.0 / xi);
        }
        return limit;
    }

  private:
    static void apply_soc(const SocBlock& b, const Eigen::VectorXd& in, Eigen::VectorXd& out) {
        const auto zb = in.segment(b.off, b.dim);
        const double zeta = b.q.dot(zb.tail(b.dim - 1));
        const double factor = zb(0) + zeta / (1.0 + b.a);
        out(b.off) = b.eta * (b.a * zb(0) + zeta);
        out.segment(b.off + 1, b.dim - 1) = b.eta * (zb.tail(b.dim - 1) + factor * b.q);
    }

    std::vector<LpBlock> lp_;
    std::vector<SocBlock> soc_;
    std::vector<PsdBlock> psd_;
    Eigen::Index degree_ = 0;
    bool identity_ = true;
};

struct Iterate {
    Eigen::VectorXd x, y, z, s;
    double tau = 1.0, kap = 1.0;
    double pres = std::numeric_limits<double>::infinity();
    double dres = std::numeric_limits<double>::infinity();
    double gap = std::numeric_limits<double>::infinity();
    double relgap = std::numeric_limits<double>::infinity();
    double pcost = std::numeric_limits<double>::quiet_NaN();
    double dcost = std::numeric_limits<double>::quiet_NaN();
    double score() const {
        return std::max(pres, dres) + std::min(relgap, std::abs(gap));
    }
};

class Solver {
  public:
    Solver(const ConicProgram& program, const SolveOptions& options)
        : opts_(options),
          scaling_(program.cones()),
          n_(program.num_vars()),
          p_(program.num_rows()),
          c_(program.objective_vector()),
          b_(program.rhs_vector()) {
        a_ = Eigen::MatrixXd::Zero(p_, n_);
        for (const auto& t : program.triplets()) a_(t.row, t.col) += t.value;
        resx0_ = std::max(1.0, c_.norm());
        resy0_ = std::max(1.0, b_.norm());
        resz0_ = 1.0;
    }

    SolveReport run() {
        SolveReport report;
        if (!initialize()) {
            report.status = SolveStatus::numerical_failure;
            return report;
        }

        Iterate best = it_;
        bool have_best = false;
        double pres_prev = std::numeric_limits<double>::max();

        for (int iter = 0; iter <= opts_.max_iters; ++iter) {
            compute_residuals();
            report.iterations = iter;

            if (!std::isfinite(it_.pcost) || !std::isfinite(it_.gap)) {
                if (have_best) it_ = best;
                finalize(report, SolveStatus::numerical_failure);
                return report;
            }
            if (iter > 0 && it_.pres > 10.0 * opts_.tol_feas &&
                (it_.pres > kSafeguard * std::max(pres_prev, opts_.tol_feas) ||
                 it_.gap < -1e-10)) {
                if (have_best) it_ = best;
                compute_residuals();
                finalize(report, SolveStatus::numerical_failure);
                return report;
            }
            pres_prev = it_.pres;

            if (const auto status = converged()) {
                finalize(report, *status);
                return report;
            }
            if (iter == opts_.max_iters) {
                if (have_best && best.score() < it_.score()) it_ = best;
                compute_residuals();
                finalize(report, SolveStatus::iteration_limit);
                return report;
            }
            if (!have_best || it_.score() < best.score()) {
                best = it_;
                have_best = true;
            }

            auto lambda = scaling_.update(it_.s, it_.z);
            if (!lambda) {
                if (have_best) it_ = best;
                compute_residuals();
                finalize(report, SolveStatus::numerical_failure);
                return report;
            }
            lambda_ = std::move(*lambda);
            if (!factorize()) {
                if (have_best) it_ = best;
                compute_residuals();
                finalize(report, SolveStatus::numerical_failure);
                return report;
            }

            // Static direction for the tau elimination: K \ [-c; b; 0]
            solve_kkt(-c_, b_, Eigen::VectorXd::Zero(n_), dx1_, dy1_, dz1_);
            const double dtau_denom =
                it_.kap / it_.tau - c_.dot(dx1_) - b_.dot(dy1_);

            // Predictor (affine) direction
            solve_kkt(rx_, -ry_, it_.s - rz_, dx2_, dy2_, dz2_);
            const double dtau_aff =
                (rt_ - it_.kap + c_.dot(dx2_) + b_.dot(dy2_)) / dtau_denom;
            Eigen::VectorXd dz_aff = dz2_ + dtau_aff * dz1_;
            Eigen::VectorXd w_dz_aff(n_);
            scaling_.apply_w(dz_aff, w_dz_aff);
            Eigen::VectorXd ds_aff_by_w = -w_dz_aff - lambda_;
            const double dkap_aff = -it_.kap - it_.kap / it_.tau * dtau_aff;

            const double alpha_aff =
                step_length(ds_aff_by_w, w_dz_aff, dtau_aff, dkap_aff);
            const double sigma = std::clamp(std::pow(1.0 - alpha_aff, 3.0), kSigmaMin, kSigmaMax);
            const double mu = (it_.gap + it_.kap * it_.tau) / (scaling_.degree() + 1);

            // Corrector (combined) direction
            Eigen::VectorXd ds_comb(n_), corr(n_);
            scaling_.product(lambda_, lambda_, ds_comb);
            scaling_.product(ds_aff_by_w, w_dz_aff, corr);
            ds_comb += corr;
            scaling_.subtract_identity(ds_comb, sigma * mu);
            Eigen::VectorXd lambda_div(n_), w_lambda_div(n_);
            scaling_.divide_by_lambda(lambda_, ds_comb, lambda_div);
            scaling_.apply_wt(lambda_div, w_lambda_div);

            const double one_minus_sigma = 1.0 - sigma;
            solve_kkt(one_minus_sigma * rx_, -one_minus_sigma * ry_,
                      -one_minus_sigma * rz_ + w_lambda_div, dx2_, dy2_, dz2_);
            const double bkap = it_.kap * it_.tau + dkap_aff * dtau_aff - sigma * mu;
            const double dtau = (one_minus_sigma * rt_ - bkap / it_.tau + c_.dot(dx2_) +
                                 b_.dot(dy2_)) /
                                dtau_denom;
            dx2_ += dtau * dx1_;
            dy2_ += dtau * dy1_;
            dz2_ += dtau * dz1_;
            Eigen::VectorXd w_dz(n_);
            scaling_.apply_w(dz2_, w_dz);
            Eigen::VectorXd ds_by_w = -(lambda_div + w_dz);
            const double dkap = -(bkap + it_.kap * dtau) / it_.tau;

            const double alpha =
                kStepScale * step_length(ds_by_w, w_dz, dtau, dkap);
            if (alpha < 1e-9) {
                if (have_best && best.score() < it_.score()) it_ = best;
                compute_residuals();
                finalize(report, SolveStatus::numerical_failure);
                return report;
            }
            Eigen::VectorXd ds(n_);
            scaling_.apply_wt(ds_by_w, ds);

            it_.x += alpha * dx2_;
            it_.y += alpha * dy2_;
            it_.z += alpha * dz2_;
            it_.s += alpha * ds;
            it_.kap += alpha * dkap;
            it_.tau += alpha * dtau;

            if (opts_.verbose)
                std::printf("it %3d  pcost % .6e  gap %.2e  pres %.2e  dres %.2e  "
                            "tau %.2e  kap %.2e  step %.3f\n",
                            iter, it_.pcost, it_.gap, it_.pres, it_.dres, it_.tau,
                            it_.kap, alpha);
        }
        finalize(report, SolveStatus::iteration_limit);
        return report;
    }

  private:
    bool initialize() {
        it_.x.setZero(n_);
        it_.y.setZero(p_);
        it_.z.setZero(n_);
        it_.s.setZero(n_);
        scaling_.set_identity();
        if (!factorize()) return false;

        // Primal start: min-norm solution of A x = b, shifted into the cone.
        Eigen::VectorXd dx(n_), dy(p_), dz(n_);
        solve_kkt(Eigen::VectorXd::Zero(n_), b_, Eigen::VectorXd::Zero(n_), dx, dy, dz);
        it_.x = dx;
        it_.s = -dz;
        scaling_.shift_into_cone(it_.s);

        // Dual start: least-squares multiplier, shifted into the cone.
        solve_kkt(-c_, Eigen::VectorXd::Zero(p_), Eigen::VectorXd::Zero(n_), dx, dy, dz);
        it_.y = dy;
        it_.z = dz;
        scaling_.shift_into_cone(it_.z);

        it_.tau = 1.0;
        it_.kap = 1.0;
        dx1_.resize(n_);
        dy1_.resize(p_);
        dz1_.resize(n_);
        dx2_.resize(n_);
        dy2_.resize(p_);
        dz2_.resize(n_);
        return true;
    }

    bool factorize() {
        if (p_ == 0) return true;
        // M = A W'W A' (+ static regularization), via B = W A'
        Eigen::MatrixXd bmat(n_, p_);
        Eigen::VectorXd col(n_), scaled(n_);
        for (Eigen::Index i = 0; i < p_; ++i) {
            col = a_.row(i).transpose();
            scaling_.apply_w(col, scaled);
            bmat.col(i) = scaled;
        }
        normal_matrix_ = bmat.transpose() * bmat;
        const double reg =
            kStaticReg * std::max(1.0, normal_matrix_.diagonal().cwiseAbs().maxCoeff());
        normal_matrix_.diagonal().array() += reg;
        ldlt_.compute(normal_matrix_);
        return ldlt_.info() == Eigen::Success;
    }

    // Normal-equations solve refined against the stored (regularized)
    // matrix, so the outer KKT refinement only has to absorb the tiny
    // static perturbation.
    Eigen::VectorXd solve_normal(const Eigen::VectorXd& rhs) const {
        Eigen::VectorXd u = ldlt_.solve(rhs);
        for (int pass = 0; pass < 2; ++pass) {
            const Eigen::VectorXd res = rhs - normal_matrix_ * u;
            if (res.lpNorm<Eigen::Infinity>() <
                1e-15 * (1.0 + rhs.lpNorm<Eigen::Infinity>()))
                break;
            u += ldlt_.solve(res);
        }
        return u;
    }

    // Solves  A'dy - dz = bx,  A dx = by,  -dx - W'W dz = bz.
    void solve_kkt(const Eigen::VectorXd& bx, const Eigen::VectorXd& by,
                   const Eigen::VectorXd& bz, Eigen::VectorXd& dx, Eigen::VectorXd& dy,
                   Eigen::VectorXd& dz) const {
        Eigen::VectorXd tmp(n_);
        scaling_.apply_w2(bx, tmp);
        dy = p_ > 0 ? solve_normal(a_ * (tmp - bz) - by)
                    : Eigen::VectorXd::Zero(0).eval();
        dz = a_.transpose() * dy - bx;
        scaling_.apply_w2(dz, tmp);
        dx = -bz - tmp;

        for (int pass = 0; pass < 4; ++pass) {
            Eigen::VectorXd e1 = bx - (a_.transpose() * dy - dz);
            Eigen::VectorXd e2 = by - a_ * dx;
            scaling_.apply_w2(dz, tmp);
            Eigen::VectorXd e3 = bz - (-dx - tmp);
            const double err = std::max({e1.lpNorm<Eigen::Infinity>(),
                                         e2.lpNorm<Eigen::Infinity>(),
                                         e3.lpNorm<Eigen::Infinity>()});
            const double thresh =
                1e-14 * (1.0 + std::max({bx.lpNorm<Eigen::Infinity>(),
                                         by.lpNorm<Eigen::Infinity>(),
                                         bz.lpNorm<Eigen::Infinity>()}));
            if (err < thresh) break;
            scaling_.apply_w2(e1, tmp);
            Eigen::VectorXd ddy = p_ > 0 ? solve_normal(a_ * (tmp - e3) - e2)
                                         : Eigen::VectorXd::Zero(0).eval();
            Eigen::VectorXd ddz = a_.transpose() * ddy - e1;
            scaling_.apply_w2(ddz, tmp);
            Eigen::VectorXd ddx = -e3 - tmp;
            dy += ddy;
            dz += ddz;
            dx += ddx;
        }
    }

    void compute_residuals() {
        // rx = z - A'y - tau c ; hresx omits the tau c term
        rx_ = it_.z - a_.transpose() * it_.y;
        hresx_ = rx_.norm();
        rx_ -= it_.tau * c_;

        ry_ = a_ * it_.x;
        hresy_ = ry_.norm();
        ry_ -= it_.tau * b_;

        rz_ = it_.s - it_.x;
        hresz_ = rz_.norm();

        cx_ = c_.dot(it_.x);
        by_ = b_.dot(it_.y);
        rt_ = it_.kap + cx_ + by_;

        const double nx = it_.x.norm(), ny = it_.y.norm(), nz = it_.z.norm(),
                     ns = it_.s.norm();
        it_.gap = it_.s.dot(it_.z);
        it_.pcost = cx_ / it_.tau;
        it_.dcost = -by_ / it_.tau;
        if (it_.pcost < 0.0)
            it_.relgap = it_.gap / (-it_.pcost);
        else if (it_.dcost > 0.0)
            it_.relgap = it_.gap / it_.dcost;
        else
            it_.relgap = std::numeric_limits<double>::infinity();

        const double nry = p_ > 0 ? ry_.norm() / std::max(resy0_ + nx, 1.0) : 0.0;
        const double nrz = hresz_ / std::max(resz0_ + nx + ns, 1.0);
        it_.pres = std::max(nry, nrz) / it_.tau;
        it_.dres = rx_.norm() / std::max(resx0_ + ny + nz, 1.0) / it_.tau;

        pinfres_ = std::numeric_limits<double>::quiet_NaN();
        dinfres_ = std::numeric_limits<double>::quiet_NaN();
        if (by_ / std::max(ny + nz, 1.0) < -opts_.tol_gap)
            pinfres_ = hresx_ / std::max(ny + nz, 1.0);
        if (cx_ / std::max(nx, 1.0) < -opts_.tol_gap)
            dinfres_ = std::max(hresy_ / std::max(nx, 1.0), hresz_ / std::max(nx + ns, 1.0));
    }

    std::optional<SolveStatus> converged() const {
        const bool dual_sane = -cx_ > 0.0 || -by_ >= -opts_.tol_feas;
        if (dual_sane && it_.pres < opts_.tol_feas && it_.dres < opts_.tol_feas &&
            (it_.gap < opts_.tol_feas || it_.relgap < opts_.tol_gap))
            return SolveStatus::optimal;
        if (std::isfinite(dinfres_) && dinfres_ < opts_.tol_feas && it_.tau < it_.kap)
            return SolveStatus::unbounded;
        if (std::isfinite(pinfres_) && pinfres_ < opts_.tol_feas && it_.tau < it_.kap)
            return SolveStatus::infeasible;
        return std::nullopt;
    }

    double step_length(const Eigen::VectorXd& ds_scaled, const Eigen::VectorXd& dz_scaled,
                       double dtau, double dkap) const {
        double alpha = std::min(scaling_.max_step(lambda_, ds_scaled),
                                scaling_.max_step(lambda_, dz_scaled));
        if (dtau < 0.0) alpha = std::min(alpha, -it_.tau / dtau);
        if (dkap < 0.0) alpha = std::min(alpha, -it_.kap / dkap);
        return std::min(alpha, kStepMax);
    }

    void finalize(SolveReport& report, SolveStatus status) {
        report.status = status;
        const double tau = it_.tau > 1e-12 ? it_.tau : 1.0;
        report.primal = it_.x / tau;
        report.dual = -it_.y / tau;
        report.max_primal_residual = it_.pres;
        report.max_dual_residual = it_.dres;
        report.relative_gap = it_.relgap;
        if (status == SolveStatus::optimal || status == SolveStatus::iteration_limit) {
            report.objective = it_.pcost;
            report.dual_objective = it_.dcost;
        }
    }

    SolveOptions opts_;
    Scaling scaling_;
    Eigen::Index n_, p_;
    Eigen::VectorXd c_, b_;
    Eigen::MatrixXd a_;
    Eigen::MatrixXd normal_matrix_;
    Eigen::LDLT<Eigen::MatrixXd> ldlt_;
    Iterate it_;
    Eigen::VectorXd lambda_;
    Eigen::VectorXd rx_, ry_, rz_;
    Eigen::VectorXd dx1_, dy1_, dz1_, dx2_, dy2_, dz2_;
    double hresx_ = 0, hresy_ = 0, hresz_ = 0;
    double cx_ = 0, by_ = 0, rt_ = 0;
    double resx0_ = 1, resy0_ = 1, resz0_ = 1;
    double pinfres_ = std::numeric_limits<double>::quiet_NaN();
    double dinfres_ = std::numeric_limits<double>::quiet_NaN();
};

}  // namespace

SolveReport solve(const ConicProgram& program, const SolveOptions& options) {
    program.validate();
    Solver solver(program, options);
    return solver.run();
}

}  // namespace noma::conic
