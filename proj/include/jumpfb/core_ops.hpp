// core_ops.hpp: superoperator algebra on a finite-dimensional Hilbert space.
//
// Operators are column-stacked: vec(A X B) = (B^T (x) A) vec(X). All
// superoperators are stored as dense d^2 x d^2 complex matrices.

#pragma once

#include "jumpfb/types.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace jumpfb {

// --------------------------------------------------------------------------
// Operator helpers
// --------------------------------------------------------------------------

inline void require_square(const Matrix& a, const char* what) {
    if (a.rows() != a.cols() || a.rows() == 0) {
        throw DimensionError(std::string(what) + ": operator must be a non-empty square matrix, got " +
                             std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
    }
}

inline void require_dim(const Matrix& a, Index d, const char* what) {
    require_square(a, what);
    if (a.rows() != d) {
        throw DimensionError(std::string(what) + ": expected dimension " + std::to_string(d) + ", got " +
                             std::to_string(a.rows()));
    }
}

inline double max_abs(const Matrix& a) { return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff(); }

inline bool is_hermitian(const Matrix& a, double rel_tol = Tolerances{}.hermitian) {
    if (a.rows() != a.cols()) return false;
    const double scale = max_abs(a);
    return max_abs(a - a.adjoint()) <= rel_tol * scale;
}

inline Matrix hermitize(const Matrix& a) { return 0.5 * (a + a.adjoint()); }

/// Smallest eigenvalue of the hermitian part of `a`.
inline double min_eigenvalue(const Matrix& a) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(a), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

inline bool is_density(const Matrix& rho, const Tolerances& tol = {}) {
    if (rho.rows() != rho.cols() || rho.rows() == 0) return false;
    if (!is_hermitian(rho, std::max(tol.hermitian, 1e-12))) return false;
    if (std::abs(rho.trace() - Complex(1.0)) > tol.trace) return false;
    return min_eigenvalue(rho) >= -tol.positivity;
}

/// |i><j| on a d-dimensional space.
inline Matrix ket_bra(Index d, Index i, Index j) {
    Matrix m = Matrix::Zero(d, d);
    m(i, j) = 1.0;
    return m;
}

inline Vector vec(const Matrix& x) { return Eigen::Map<const Vector>(x.data(), x.size()); }

inline Matrix unvec(const Vector& v, Index d) {
    if (v.size() != d * d) throw DimensionError("unvec: vector length does not match d^2");
    return Eigen::Map<const Matrix>(v.data(), d, d);
}

// --------------------------------------------------------------------------
// Superoperator
// --------------------------------------------------------------------------

/// Linear map on d x d operators, acting on column-stacked vectors.
class Superoperator {
public:
    Superoperator() = default;
    Superoperator(Index dim, Matrix matrix) : dim_(dim), matrix_(std::move(matrix)) {
        if (dim_ <= 0 || matrix_.rows() != dim_ * dim_ || matrix_.cols() != dim_ * dim_) {
            throw DimensionError("Superoperator: matrix must be d^2 x d^2");
        }
    }

    static Superoperator zero(Index dim) { return {dim, Matrix::Zero(dim * dim, dim * dim)}; }
    static Superoperator identity(Index dim) { return {dim, Matrix::Identity(dim * dim, dim * dim)}; }

    Index dim() const noexcept { return dim_; }
    const Matrix& matrix() const noexcept { return matrix_; }

    Matrix apply(const Matrix& x) const {
        require_dim(x, dim_, "Superoperator::apply");
        return unvec(matrix_ * vec(x), dim_);
    }
    Vector apply_vec(const Vector& v) const { return matrix_ * v; }

    Superoperator operator+(const Superoperator& o) const {
        check_same(o);
        return {dim_, matrix_ + o.matrix_};
    }
    Superoperator operator-(const Superoperator& o) const {
        check_same(o);
        return {dim_, matrix_ - o.matrix_};
    }
    Superoperator operator*(const Superoperator& o) const {
        check_same(o);
        return {dim_, matrix_ * o.matrix_};
    }
    friend Superoperator operator*(Complex s, const Superoperator& a) { return {a.dim_, s * a.matrix_}; }

    /// Row vector representing X -> Tr X in the vectorized space.
    static Eigen::RowVectorXcd trace_row(Index dim) {
        Eigen::RowVectorXcd t = Eigen::RowVectorXcd::Zero(dim * dim);
        for (Index i = 0; i < dim; ++i) t(i * dim + i) = 1.0;
        return t;
    }

    /// Largest |Tr S(E)| over the basis operators E = |i><j|.
    double trace_defect() const { return (trace_row(dim_) * matrix_).cwiseAbs().maxCoeff(); }

    bool is_trace_preserving_generator(double rel_tol = Tolerances{}.trace_preserving) const {
        return trace_defect() <= rel_tol * std::max(1.0, max_abs(matrix_));
    }

private:
    void check_same(const Superoperator& o) const {
        if (o.dim_ != dim_) throw DimensionError("Superoperator: dimension mismatch");
    }

    Index dim_ = 0;
    Matrix matrix_;
};

/// X -> A X
inline Matrix spre(const Matrix& a) {
    return Eigen::kroneckerProduct(Matrix::Identity(a.rows(), a.rows()), a).eval();
}

/// X -> X B
inline Matrix spost(const Matrix& b) {
    return Eigen::kroneckerProduct(b.transpose(), Matrix::Identity(b.rows(), b.rows())).eval();
}

/// X -> A X B
inline Matrix sandwich(const Matrix& a, const Matrix& b) {
    return Eigen::kroneckerProduct(b.transpose(), a).eval();
}

/// rho -> L rho L^dagger, the rate-level jump channel.
inline Superoperator jump_superop(const Matrix& l) {
    require_square(l, "jump_superop");
    return {l.rows(), sandwich(l, l.adjoint())};
}

/// rho -> L rho L^dagger - 1/2 {L^dagger L, rho}
inline Superoperator dissipator(const Matrix& l) {
    require_square(l, "dissipator");
    const Matrix ldl = l.adjoint() * l;
    return {l.rows(), sandwich(l, l.adjoint()) - 0.5 * (spre(ldl) + spost(ldl))};
}

inline Superoperator commutator_generator(const Matrix& h) {
    return {h.rows(), -kI * (spre(h) - spost(h))};
}

namespace detail {
inline void check_generator_inputs(const Matrix& h, std::span<const Matrix> jumps, const char* what) {
    require_square(h, what);
    for (const auto& l : jumps) require_dim(l, h.rows(), what);
    if (!is_hermitian(h)) throw ValidationError(std::string(what) + ": Hamiltonian is not hermitian");
}
}  // namespace detail

/// rho -> -i[H, rho] + sum_k D[L_k] rho
inline Superoperator liouvillian(const Matrix& h, std::span<const Matrix> jumps) {
    detail::check_generator_inputs(h, jumps, "liouvillian");
    Matrix m = commutator_generator(h).matrix();
    for (const auto& l : jumps) m += dissipator(l).matrix();
    return {h.rows(), std::move(m)};
}

/// rho -> -i[H, rho] - 1/2 sum_k {L_k^dagger L_k, rho}; equals liouvillian - sum_k jump_superop.
inline Superoperator no_jump_generator(const Matrix& h, std::span<const Matrix> jumps) {
    detail::check_generator_inputs(h, jumps, "no_jump_generator");
    Matrix gamma = Matrix::Zero(h.rows(), h.rows());
    for (const auto& l : jumps) gamma += l.adjoint() * l;
    Matrix m = commutator_generator(h).matrix() - 0.5 * (spre(gamma) + spost(gamma));
    return {h.rows(), std::move(m)};
}

// --------------------------------------------------------------------------
// Kraus unraveling
// --------------------------------------------------------------------------

struct KrausStep {
    Matrix v0;               // 1 - i dt H_eff
    std::vector<Matrix> vks; // sqrt(dt) L_k
    double dt = 0.0;
    Matrix h_eff;            // H - i/2 sum_k L_k^dagger L_k

    /// || V0^dag V0 + sum_k Vk^dag Vk - 1 ||_2
    double completeness_defect() const {
        Matrix s = v0.adjoint() * v0;
        for (const auto& v : vks) s += v.adjoint() * v;
        s -= Matrix::Identity(s.rows(), s.cols());
        return s.operatorNorm();
    }
};

inline Matrix effective_hamiltonian(const Matrix& h, std::span<const Matrix> jumps) {
    Matrix gamma = Matrix::Zero(h.rows(), h.rows());
    for (const auto& l : jumps) gamma += l.adjoint() * l;
    return h - 0.5 * kI * gamma;
}

inline KrausStep kraus_step(const Matrix& h, std::span<const Matrix> jumps, double dt) {
    if (!(dt > 0.0)) throw ValidationError("kraus_step: dt must be positive");
    detail::check_generator_inputs(h, jumps, "kraus_step");
    KrausStep k;
    k.dt = dt;
    k.h_eff = effective_hamiltonian(h, jumps);
    k.v0 = Matrix::Identity(h.rows(), h.rows()) - kI * dt * k.h_eff;
    k.vks.reserve(jumps.size());
    for (const auto& l : jumps) k.vks.push_back(std::sqrt(dt) * l);
    return k;
}

// --------------------------------------------------------------------------
// Steady states and the Drazin inverse
// --------------------------------------------------------------------------

namespace detail {

/// Normalized kernel element of a trace-preserving generator a (tr a = 0).
///
/// The SVD decides the kernel dimension: DegenerateSteadyStateError unless
/// exactly one singular value lies below tol_kernel * |a|. The vector itself
/// solves a with the row of the largest trace weight replaced by tr, so
/// tr x = 1 and components that decouple from the trace stay exactly zero.
struct Kernel {
    Vector x;                // tr x = 1
    double error_bound = 0;  // first-order perturbation bound eps |a| / sigma_{n-1}
};

inline Kernel kernel_vector(const Matrix& a, const Eigen::RowVectorXcd& tr, double tol_kernel, const char* what) {
    Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeFullV);
    const auto& s = svd.singularValues();  // descending
    const Index n = s.size();
    const double threshold = tol_kernel * std::max(s(0), 1e-300);
    Index kernel_dim = 0;
    for (Index i = 0; i < n; ++i) {
        if (s(i) <= threshold) ++kernel_dim;
    }
    if (kernel_dim != 1) {
        throw DegenerateSteadyStateError(std::string(what) + ": generator kernel has dimension " +
                                             std::to_string(kernel_dim) + " (expected 1)",
                                         kernel_dim);
    }
    const double gap = n > 1 ? s(n - 2) : 1.0;
    Kernel k{svd.matrixV().col(n - 1), 16.0 * std::numeric_limits<double>::epsilon() * s(0) / gap};

    Index row = 0;
    tr.cwiseAbs().maxCoeff(&row);
    Matrix b = a;
    b.row(row) = tr;
    Eigen::PartialPivLU<Matrix> lu(b);
    if (lu.rcond() > 1e-14) {
        k.x = lu.solve(Vector::Unit(n, row));
    } else {
        const Complex t = (tr * k.x).value();
        if (std::abs(t) < 1e-300) throw NumericalError(std::string(what) + ": kernel vector has zero trace");
        k.x /= t;
    }
    k.error_bound *= k.x.norm();  // bound was relative to a unit vector
    return k;
}

/// Q (A Q + P)^-1 Q with P = x tr, for A with kernel spanned by x and tr x = 1.
inline Matrix group_inverse(const Matrix& a, const Vector& x, const Eigen::RowVectorXcd& tr, const char* what) {
    const Index n = a.rows();
    const Matrix p = x * tr;
    const Matrix q = Matrix::Identity(n, n) - p;
    Eigen::PartialPivLU<Matrix> lu(a * q + p);
    if (!(lu.rcond() > 1e-13)) {
        throw DegenerateSteadyStateError(std::string(what) + ": L Q + P is singular; the kernel is not one-dimensional",
                                         2);
    }
    return q * lu.solve(q);
}

}  // namespace detail

/// Unit-trace hermitian kernel element of a trace-preserving generator.
///
/// A second singular value below tol.kernel * |gen| means the kernel is not
/// one-dimensional and DegenerateSteadyStateError is raised. The positivity
/// check allows for the kernel's perturbation bound on stiff generators.
inline Matrix steady_state(const Superoperator& gen, const Tolerances& tol = {}) {
    const Index d = gen.dim();
    if (d == 1) return Matrix::Ones(1, 1);
    const detail::Kernel ker =
        detail::kernel_vector(gen.matrix(), Superoperator::trace_row(d), tol.kernel, "steady_state");
    Matrix rho = unvec(ker.x, d);
    rho = hermitize(rho);
    const Complex tr = rho.trace();
    if (std::abs(tr) < 1e-300) throw NumericalError("steady_state: kernel vector has zero trace");
    rho /= tr;
    rho = hermitize(rho);
    if (min_eigenvalue(rho) < -std::max(tol.positivity, ker.error_bound / std::abs(tr))) {
        throw PositivityError(
            fmt::format("steady_state: steady state has a negative eigenvalue {:.3g}", min_eigenvalue(rho)));
    }
    return rho;
}

/// Projector X -> Tr[X] rho_ss as a superoperator matrix.
inline Matrix stationary_projector(const Matrix& rho_ss) {
    const Index d = rho_ss.rows();
    return vec(rho_ss) * Superoperator::trace_row(d);
}

/// Group (Drazin) inverse of a generator with one-dimensional kernel spanned
/// by rho_ss: L+ = Q (L Q + P)^-1 Q with P the stationary projector.
inline Superoperator drazin(const Superoperator& gen, const Matrix& rho_ss) {
    const Index d = gen.dim();
    require_dim(rho_ss, d, "drazin");
    return {d, detail::group_inverse(gen.matrix(), vec(rho_ss), Superoperator::trace_row(d), "drazin")};
}

// --------------------------------------------------------------------------
// Propagation
// --------------------------------------------------------------------------

/// exp(t * gen) via scaling and squaring with a degree-13 Pade approximant.
inline Superoperator propagator(const Superoperator& gen, double t) {
    return {gen.dim(), (t * gen.matrix()).exp().eval()};
}

inline Matrix evolve(const Superoperator& gen, const Matrix& rho, double t) {
    return propagator(gen, t).apply(rho);
}

}  // namespace jumpfb
