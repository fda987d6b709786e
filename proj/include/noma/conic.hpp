// SPDX-License-Identifier: Apache-2.0
//
// Conic-program representation over real variables (nonnegative,
// second-order and PSD cones), a homogeneous self-dual interior-point
// solver sized for the small dense instances of this toolkit, the
// complex-Hermitian <-> real-symmetric embedding, and rank-one
// extraction/randomization utilities shared by all designs.
//
// Programs are in primal standard form
//
//   minimize    c' x
//   subject to  A x = b,   x in K
//
// where K is a product of cones covering the whole variable vector.
// PSD slices store the packed lower triangle (svec) with off-diagonal
// entries scaled by sqrt(2), so slice inner products equal matrix
// Frobenius inner products. Complex Hermitian matrix variables are
// handled by embedding into real symmetric matrices of twice the order
// with the 1/2-trace convention (see embed_hermitian).

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace noma::conic {

enum class ConeKind { nonnegative, second_order, psd };

/// Half-open variable range [offset, offset + size).
struct SliceRef {
    Eigen::Index offset = 0;
    Eigen::Index size = 0;
};

struct ConeSlice {
    ConeKind kind = ConeKind::nonnegative;
    SliceRef vars;
    Eigen::Index order = 0;  ///< PSD only: matrix order n, size = n(n+1)/2
    std::string name;
};

struct Triplet {
    Eigen::Index row = 0;
    Eigen::Index col = 0;
    double value = 0.0;
};

class ConicProgram {
  public:
    SliceRef add_nonnegative(Eigen::Index count, std::string name = {});
    SliceRef add_second_order(Eigen::Index dim, std::string name = {});
    /// Real symmetric PSD block of the given matrix order.
    SliceRef add_psd(Eigen::Index order, std::string name = {});

    void add_objective_term(Eigen::Index var, double coeff);
    /// Adds c' contributions for a whole slice at once.
    void add_objective_block(const SliceRef& slice, const Eigen::VectorXd& coeffs);

    /// Opens a new equality row with the given right-hand side and
    /// returns its index.
    Eigen::Index add_equality_row(double rhs);
    void add_coefficient(Eigen::Index row, Eigen::Index var, double coeff);
    void add_coefficient_block(Eigen::Index row, const SliceRef& slice,
                               const Eigen::VectorXd& coeffs);

    Eigen::Index num_vars() const { return num_vars_; }
    Eigen::Index num_rows() const { return static_cast<Eigen::Index>(rhs_.size()); }
    const std::vector<ConeSlice>& cones() const { return cones_; }
    const std::vector<Triplet>& triplets() const { return triplets_; }
    const std::vector<double>& rhs() const { return rhs_; }
    Eigen::VectorXd objective_vector() const;
    Eigen::VectorXd rhs_vector() const;

    /// Throws std::invalid_argument on inconsistent dimensions.
    void validate() const;

    /// Text sparse-triplet dump for cross-checking against external
    /// solvers. Values are printed with %.17g so the file round-trips
    /// bit-exactly; the format is documented in the README.
    void dump(std::ostream& os) const;

  private:
    Eigen::Index num_vars_ = 0;
    std::vector<ConeSlice> cones_;
    std::vector<std::pair<Eigen::Index, double>> objective_;
    std::vector<Triplet> triplets_;
    std::vector<double> rhs_;
};

enum class SolveStatus { optimal, infeasible, unbounded, numerical_failure, iteration_limit };

const char* to_string(SolveStatus status);

struct SolveOptions {
    double tol_feas = 1e-8;
    double tol_gap = 1e-8;  ///< relative duality gap
    int max_iters = 100;
    bool verbose = false;
};

struct SolveReport {
    SolveStatus status = SolveStatus::numerical_failure;
    double objective = std::numeric_limits<double>::quiet_NaN();
    /// Certified lower bound b'y when dual iterates are meaningful.
    double dual_objective = std::numeric_limits<double>::quiet_NaN();
    Eigen::VectorXd primal;  ///< x (best iterate, scaled back by tau)
    Eigen::VectorXd dual;    ///< y
    double max_primal_residual = std::numeric_limits<double>::infinity();
    double max_dual_residual = std::numeric_limits<double>::infinity();
    double relative_gap = std::numeric_limits<double>::infinity();
    int iterations = 0;

    Eigen::VectorXd slice(const SliceRef& s) const { return primal.segment(s.offset, s.size); }
};

/// Interior-point solve. Never throws on numerical trouble: failures
/// come back as a status. A single call is internally single-threaded;
/// concurrent solves of distinct programs are safe.
SolveReport solve(const ConicProgram& program, const SolveOptions& options = {});

// ---------------------------------------------------------------------------
// Packed symmetric storage and the Hermitian embedding
// ---------------------------------------------------------------------------

Eigen::Index svec_length(Eigen::Index order);

/// Packed lower triangle, column-major, off-diagonals scaled by
/// sqrt(2): svec(X)' svec(Y) = Tr(X Y).
Eigen::VectorXd svec(const Eigen::MatrixXd& symmetric);
Eigen::MatrixXd smat(const Eigen::VectorXd& packed);

/// [[Re H, -Im H], [Im H, Re H]]; throws when H is not Hermitian within
/// `tol`. H is PSD iff the embedding is, and for Hermitian H, W:
/// Tr(H W) = (1/2) Tr(embed(H) embed(W)).
Eigen::MatrixXd embed_hermitian(const Eigen::MatrixXcd& hermitian, double tol = 1e-12);

/// Adjoint of the embedding (up to the 1/2 factor): averages the two
/// diagonal blocks and antisymmetrizes the off-diagonal ones, so it
/// recovers H exactly from embed_hermitian(H) and projects arbitrary
/// symmetric matrices onto Hermitian ones, preserving PSD-ness.
Eigen::MatrixXcd hermitian_from_embedding(const Eigen::MatrixXd& embedded);

/// Coefficients over an embedded PSD slice representing the real linear
/// functional W -> Tr(G W) for Hermitian G, i.e. (1/2) svec(embed(G)).
Eigen::VectorXd hermitian_form_coefficients(const Eigen::MatrixXcd& g);

// ---------------------------------------------------------------------------
// Rank-one recovery
// ---------------------------------------------------------------------------

struct RankOneExtraction {
    Eigen::VectorXcd vector;  ///< sqrt(lambda_1) v_1
    double gap = 0.0;         ///< lambda_2 / lambda_1, 0 for the zero matrix
};

/// Throws when W is not PSD within a -1e-7 eigenvalue tolerance
/// (relative to the top eigenvalue for badly scaled inputs).
RankOneExtraction extract_rank_one(const Eigen::MatrixXcd& w_matrix);

/// Feasibility-restoring power solve for a set of fixed unit
/// directions: returns per-user powers, or nullopt when no nonnegative
/// assignment exists.
using PowerRescaleFn =
    std::function<std::optional<std::vector<double>>(const std::vector<Eigen::VectorXcd>&)>;
/// Exact constraint check of a candidate beamformer set.
using ConstraintEvalFn = std::function<bool(const std::vector<Eigen::VectorXcd>&)>;

struct RandomizationOutcome {
    bool success = false;
    std::vector<Eigen::VectorXcd> beams;
    double total_power = std::numeric_limits<double>::infinity();
    int feasible_candidates = 0;
};

/// Gaussian randomization: draws candidates w_k = W_k^{1/2} u with
/// u ~ CN(0, I), fixes directions, restores feasibility through
/// `rescale` and keeps the feasible candidate with least total power.
/// Failure (no feasible candidate among `candidate_count`) is a
/// first-class result.
RandomizationOutcome randomize_rank_one(const std::vector<Eigen::MatrixXcd>& w_set,
                                        const PowerRescaleFn& rescale,
                                        const ConstraintEvalFn& constraint_eval,
                                        int candidate_count, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Interior-point complexity bounds (documentation-grade)
// ---------------------------------------------------------------------------

struct ComplexityEstimate {
    double sca_iterations;  ///< sqrt(0.5 N^2 + 1.5 N) ln(1/eps)
    double sca_operations;  ///< (MN)^2 (0.33 N^3 + 0.5 N^2 + 1.16 N + 1)
    double sdp_iterations;  ///< sqrt(M^2) ln(1/eps)
    double sdp_operations;  ///< m n^3 + m^2 n^2 + m^3, n = M^2, m = N(N+1)/2
};

ComplexityEstimate complexity_estimate(int num_antennas, int num_users, double epsilon);

}  // namespace noma::conic
