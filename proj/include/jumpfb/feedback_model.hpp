// feedback_model.hpp: declarative description of a feedback protocol driven
// by the last detected quantum jump, plus the memoryless comparison generator.

#pragma once

#include "jumpfb/core_ops.hpp"

#include <algorithm>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace jumpfb {

struct ChannelId {
    std::string label;
    std::size_t index = 0;

    friend bool operator==(const ChannelId&, const ChannelId&) = default;
};

/// Feedback protocol conditioned on the jump memory k (the last detected channel).
///
/// `jump_ops[q][k]` is L_k(q): the operator that fires for channel k while the
/// memory holds q. Firing it moves the memory to k. `silent_ops[q]` holds
/// operators that act while the memory holds q but are not recorded: they
/// never update the memory and carry zero counting weight.
struct FeedbackModel {
    Index dim = 0;
    std::vector<ChannelId> channels;
    std::vector<Matrix> hamiltonians;               // H(k), indexed by memory value
    std::vector<std::vector<Matrix>> jump_ops;      // [q][k] -> L_k(q)
    std::vector<std::vector<Matrix>> silent_ops;    // [q] -> unrecorded operators
    std::optional<bool> hamiltonian_only;           // L_k(q) independent of q

    std::size_t size() const noexcept { return channels.size(); }

    const Matrix& jump(std::size_t memory, std::size_t channel) const { return jump_ops.at(memory).at(channel); }

    std::size_t index_of(std::string_view label) const {
        for (const auto& c : channels) {
            if (c.label == label) return c.index;
        }
        throw ValidationError("unknown channel label '" + std::string(label) + "'");
    }

    std::vector<std::string> labels() const {
        std::vector<std::string> out;
        out.reserve(channels.size());
        for (const auto& c : channels) out.push_back(c.label);
        return out;
    }

    bool has_silent_ops() const {
        return std::any_of(silent_ops.begin(), silent_ops.end(), [](const auto& v) { return !v.empty(); });
    }

    /// Sum over recorded channels q of L_q(k)^dagger L_q(k), plus the silent operators at memory k.
    Matrix decay_operator(std::size_t memory) const {
        Matrix g = Matrix::Zero(dim, dim);
        for (const auto& l : jump_ops.at(memory)) g += l.adjoint() * l;
        if (memory < silent_ops.size()) {
            for (const auto& m : silent_ops[memory]) g += m.adjoint() * m;
        }
        return g;
    }
};

inline std::vector<ChannelId> make_channels(const std::vector<std::string>& labels) {
    std::vector<ChannelId> out;
    out.reserve(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) out.push_back({labels[i], i});
    return out;
}

/// Checks the model invariants and returns the canonical form: channel
/// indices renumbered 0..n-1, silent_ops padded to one list per memory value,
/// and hamiltonian_only detected when it was not declared.
inline FeedbackModel validate(FeedbackModel model) {
    const std::size_t n = model.channels.size();
    if (n == 0) throw ValidationError("validate: at least one channel is required");
    if (model.dim <= 0) throw ValidationError("validate: dimension must be positive");

    std::set<std::string> seen;
    for (std::size_t i = 0; i < n; ++i) {
        if (!seen.insert(model.channels[i].label).second) {
            throw ValidationError("validate: duplicate channel label '" + model.channels[i].label + "'");
        }
        model.channels[i].index = i;
    }

    if (model.hamiltonians.size() != n) {
        throw DimensionError("validate: expected one Hamiltonian per memory value");
    }
    for (std::size_t k = 0; k < n; ++k) {
        require_dim(model.hamiltonians[k], model.dim, "validate");
        if (!is_hermitian(model.hamiltonians[k])) {
            throw ValidationError("validate: H(" + model.channels[k].label + ") is not hermitian");
        }
    }

    if (model.jump_ops.size() != n) throw DimensionError("validate: jump_ops must have one row per memory value");
    for (std::size_t q = 0; q < n; ++q) {
        if (model.jump_ops[q].size() != n) {
            throw DimensionError("validate: jump_ops row must have one operator per channel");
        }
        for (const auto& l : model.jump_ops[q]) require_dim(l, model.dim, "validate");
    }

    if (model.silent_ops.size() > n) throw DimensionError("validate: silent_ops has more rows than memory values");
    model.silent_ops.resize(n);
    for (const auto& row : model.silent_ops) {
        for (const auto& m : row) require_dim(m, model.dim, "validate");
    }

    bool independent = true;
    for (std::size_t q = 1; q < n && independent; ++q) {
        for (std::size_t k = 0; k < n; ++k) {
            if (model.jump_ops[q][k] != model.jump_ops[0][k]) {
                independent = false;
                break;
            }
        }
    }
    if (model.hamiltonian_only.has_value() && *model.hamiltonian_only && !independent) {
        throw ValidationError("validate: declared hamiltonian_only but L_k(q) depends on q");
    }
    model.hamiltonian_only = independent;
    return model;
}

/// The same Hamiltonian and jump operators in every memory sector.
inline FeedbackModel no_feedback(const Matrix& h, std::span<const Matrix> jumps,
                                 std::vector<std::string> labels = {}) {
    if (jumps.empty()) throw ValidationError("no_feedback: at least one jump operator is required");
    if (labels.empty()) {
        for (std::size_t i = 0; i < jumps.size(); ++i) labels.push_back(std::to_string(i));
    }
    if (labels.size() != jumps.size()) throw ValidationError("no_feedback: one label per jump operator required");
    require_square(h, "no_feedback");
    FeedbackModel m;
    m.dim = h.rows();
    m.channels = make_channels(labels);
    m.hamiltonians.assign(jumps.size(), h);
    m.jump_ops.assign(jumps.size(), std::vector<Matrix>(jumps.begin(), jumps.end()));
    return validate(std::move(m));
}

// --------------------------------------------------------------------------
// Memoryless (instantaneous-channel) feedback
// --------------------------------------------------------------------------

/// A channel exp(K(k)) is applied right after each detected jump k.
struct WisemanModel {
    Matrix hamiltonian;
    std::vector<Matrix> jumps;
    std::vector<Superoperator> feedback;  // K(k), one Lindblad generator per channel
};

/// rho -> -i[H, rho] + sum_k ( exp(K(k)) [L_k rho L_k^dag] - 1/2 {L_k^dag L_k, rho} )
inline Superoperator wiseman_generator(const WisemanModel& model) {
    detail::check_generator_inputs(model.hamiltonian, model.jumps, "wiseman_generator");
    const Index d = model.hamiltonian.rows();
    if (model.feedback.size() != model.jumps.size()) {
        throw ValidationError("wiseman_generator: one feedback generator per jump channel required");
    }
    Matrix m = commutator_generator(model.hamiltonian).matrix();
    for (std::size_t k = 0; k < model.jumps.size(); ++k) {
        const auto& kk = model.feedback[k];
        if (kk.dim() != d) throw DimensionError("wiseman_generator: feedback generator has wrong dimension");
        if (!kk.is_trace_preserving_generator()) {
            throw ValidationError("wiseman_generator: feedback generator " + std::to_string(k) +
                                  " is not trace-annihilating");
        }
        const Matrix& l = model.jumps[k];
        const Matrix ldl = l.adjoint() * l;
        const bool trivial = kk.matrix().isZero(0.0);
        const Matrix channel = trivial ? jump_superop(l).matrix() : Matrix(kk.matrix().exp() * jump_superop(l).matrix());
        m += channel - 0.5 * (spre(ldl) + spost(ldl));
    }
    return {d, std::move(m)};
}

}  // namespace jumpfb
