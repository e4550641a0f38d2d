// hybrid.hpp: the joint system (x) memory representation.
//
// The joint Hilbert space is ordered memory-major: basis index k * d + i
// stands for |i> (x) |k>, so memory block k occupies rows/cols [k*d, (k+1)*d).

#pragma once

#include "jumpfb/core_ops.hpp"
#include "jumpfb/feedback_model.hpp"

#include <optional>
#include <vector>

namespace jumpfb {

/// Memory-resolved state: one unnormalized d x d block per memory value.
struct HybridState {
    std::vector<Matrix> blocks;

    std::size_t memory_size() const noexcept { return blocks.size(); }
    Index dim() const noexcept { return blocks.empty() ? 0 : blocks.front().rows(); }

    double total_trace() const {
        Complex t = 0.0;
        for (const auto& b : blocks) t += b.trace();
        return t.real();
    }

    /// Throws unless total trace is 1 and every block is hermitian and PSD within tolerance.
    void check(double trace_tol = 1e-10, double psd_tol = 1e-8) const {
        if (blocks.empty()) throw ValidationError("HybridState: no blocks");
        for (const auto& b : blocks) {
            require_dim(b, dim(), "HybridState");
            if (max_abs(b - b.adjoint()) > 1e-10 * std::max(1.0, max_abs(b))) {
                throw ValidationError("HybridState: block is not hermitian");
            }
            if (min_eigenvalue(b) < -psd_tol) throw PositivityError("HybridState: block has a negative eigenvalue");
        }
        if (std::abs(total_trace() - 1.0) > trace_tol) throw ValidationError("HybridState: total trace is not 1");
    }
};

/// Block-diagonal joint operator sum_k blocks[k] (x) |k><k|.
inline Matrix to_joint(const HybridState& s) {
    const Index d = s.dim();
    const auto n = static_cast<Index>(s.memory_size());
    Matrix m = Matrix::Zero(n * d, n * d);
    for (Index k = 0; k < n; ++k) m.block(k * d, k * d, d, d) = s.blocks[static_cast<std::size_t>(k)];
    return m;
}

/// Diagonal memory blocks of a joint operator.
inline HybridState from_joint(const Matrix& joint, std::size_t memory_size) {
    const auto n = static_cast<Index>(memory_size);
    if (n == 0 || joint.rows() % n != 0) throw DimensionError("from_joint: size is not a multiple of |Sigma|");
    const Index d = joint.rows() / n;
    HybridState s;
    s.blocks.reserve(memory_size);
    for (Index k = 0; k < n; ++k) s.blocks.push_back(joint.block(k * d, k * d, d, d));
    return s;
}

/// Largest entry of the off-diagonal memory blocks of a joint operator.
inline double off_block_magnitude(const Matrix& joint, std::size_t memory_size) {
    const auto n = static_cast<Index>(memory_size);
    const Index d = joint.rows() / n;
    double worst = 0.0;
    for (Index k = 0; k < n; ++k) {
        for (Index q = 0; q < n; ++q) {
            if (k != q) worst = std::max(worst, max_abs(joint.block(k * d, q * d, d, d)));
        }
    }
    return worst;
}

/// A (x) |k><q| in the memory-major ordering.
inline Matrix memory_tensor(const Matrix& a, std::size_t k, std::size_t q, std::size_t memory_size) {
    const auto n = static_cast<Index>(memory_size);
    return Eigen::kroneckerProduct(ket_bra(n, static_cast<Index>(k), static_cast<Index>(q)), a).eval();
}

/// sum_k H(k) (x) |k><k|
inline Matrix extended_hamiltonian(const FeedbackModel& model) {
    const std::size_t n = model.size();
    const Index d = model.dim;
    Matrix h = Matrix::Zero(static_cast<Index>(n) * d, static_cast<Index>(n) * d);
    for (std::size_t k = 0; k < n; ++k) {
        h.block(static_cast<Index>(k) * d, static_cast<Index>(k) * d, d, d) = model.hamiltonians[k];
    }
    return h;
}

/// L_k(q) (x) |k><q| for all (k, q), k-major. Silent operators M (x) |q><q| are
/// appended after the |Sigma|^2 recorded ones.
inline std::vector<Matrix> extended_jumps(const FeedbackModel& model) {
    const std::size_t n = model.size();
    std::vector<Matrix> out;
    out.reserve(n * n);
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t q = 0; q < n; ++q) out.push_back(memory_tensor(model.jump(q, k), k, q, n));
    }
    for (std::size_t q = 0; q < model.silent_ops.size(); ++q) {
        for (const auto& m : model.silent_ops[q]) out.push_back(memory_tensor(m, q, q, n));
    }
    return out;
}

struct ExtendedGenerator {
    FeedbackModel model;            // validated
    Matrix ext_hamiltonian;
    std::vector<Matrix> ext_jumps;  // |Sigma|^2 recorded (k-major), then silent
    Superoperator generator;

    std::size_t memory_size() const noexcept { return model.size(); }
    Index joint_dim() const noexcept { return ext_hamiltonian.rows(); }
    std::size_t recorded_count() const noexcept { return model.size() * model.size(); }
    std::size_t transition_index(std::size_t k, std::size_t q) const noexcept { return k * model.size() + q; }
};

/// -i[HH, .] + sum_{k,q} D[LL_{k,q}] on the joint space.
inline ExtendedGenerator extended_liouvillian(const FeedbackModel& model_in) {
    ExtendedGenerator g;
    g.model = validate(model_in);
    g.ext_hamiltonian = extended_hamiltonian(g.model);
    g.ext_jumps = extended_jumps(g.model);
    const Index dj = g.ext_hamiltonian.rows();
    Matrix m = commutator_generator(g.ext_hamiltonian).matrix();
    // sum of D[LL] without materializing every dissipator separately
    Matrix decay = Matrix::Zero(dj, dj);
    for (const auto& l : g.ext_jumps) {
        if (l.isZero(0.0)) continue;
        m += sandwich(l, l.adjoint());
        decay += l.adjoint() * l;
    }
    m -= 0.5 * (spre(decay) + spost(decay));
    g.generator = Superoperator(dj, std::move(m));
    return g;
}

// --------------------------------------------------------------------------
// Block-diagonal subspace
// --------------------------------------------------------------------------

/// Positions of the diagonal memory blocks inside vec(joint operator). The
/// extended generator and every jump superoperator leave this subspace
/// invariant. Restricting to it drops memory coherences, which never feed
/// back into the blocks but can add spurious stationary directions when a
/// sector has dark states.
struct BlockDiagonalSpace {
    std::vector<Index> idx;
    Index joint_dim = 0;

    BlockDiagonalSpace(std::size_t memory_size, Index d) {
        const auto n = static_cast<Index>(memory_size);
        joint_dim = n * d;
        for (Index k = 0; k < n; ++k) {
            for (Index j = 0; j < d; ++j) {
                for (Index i = 0; i < d; ++i) idx.push_back((k * d + j) * joint_dim + (k * d + i));
            }
        }
    }
    explicit BlockDiagonalSpace(const ExtendedGenerator& gen) : BlockDiagonalSpace(gen.memory_size(), gen.model.dim) {}

    Index size() const noexcept { return static_cast<Index>(idx.size()); }
    Matrix restrict(const Matrix& m) const { return m(idx, idx); }
    Vector restrict(const Vector& v) const { return v(idx); }
    Eigen::RowVectorXcd trace_row() const { return Superoperator::trace_row(joint_dim)(idx); }

    /// Inverse of restrict for vectors: zero memory coherences.
    Vector lift(const Vector& v) const {
        Vector full = Vector::Zero(joint_dim * joint_dim);
        full(idx) = v;
        return full;
    }
};

inline Vector to_joint_vec(const HybridState& s) { return vec(to_joint(s)); }

inline HybridState from_joint_vec(const Vector& v, std::size_t memory_size) {
    const auto dj = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(v.size()))));
    return from_joint(unvec(v, dj), memory_size);
}

// --------------------------------------------------------------------------
// Marginals
// --------------------------------------------------------------------------

struct Marginals {
    Matrix system;                              // sum_k blocks[k]
    std::vector<double> memory_dist;            // Tr blocks[k]
    std::vector<std::optional<Matrix>> conditional;  // blocks[k] / P(k), empty where P(k) <= eps
};

inline Marginals marginals(const HybridState& s, double eps = 1e-14) {
    Marginals m;
    m.system = Matrix::Zero(s.dim(), s.dim());
    for (const auto& b : s.blocks) {
        m.system += b;
        const double p = b.trace().real();
        m.memory_dist.push_back(p);
        if (p > eps) {
            m.conditional.emplace_back(b / p);
        } else {
            m.conditional.emplace_back(std::nullopt);
        }
    }
    return m;
}

inline HybridState embed(const std::vector<double>& memory_dist, const std::vector<Matrix>& conditional) {
    if (memory_dist.empty() || memory_dist.size() != conditional.size()) {
        throw DimensionError("embed: one conditional state per memory value required");
    }
    double total = 0.0;
    for (double p : memory_dist) {
        if (p < 0.0) throw ValidationError("embed: negative probability");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-10) throw ValidationError("embed: memory distribution is not normalized");
    const Index d = conditional.front().rows();
    HybridState s;
    for (std::size_t k = 0; k < conditional.size(); ++k) {
        require_dim(conditional[k], d, "embed");
        if (!is_density(conditional[k])) throw ValidationError("embed: conditional state is not a density matrix");
        s.blocks.push_back(memory_dist[k] * conditional[k]);
    }
    return s;
}

/// rho0 placed entirely in memory sector k0.
inline HybridState embed_single(const Matrix& rho0, std::size_t k0, std::size_t memory_size) {
    std::vector<double> p(memory_size, 0.0);
    p.at(k0) = 1.0;
    return embed(p, std::vector<Matrix>(memory_size, rho0));
}

}  // namespace jumpfb
