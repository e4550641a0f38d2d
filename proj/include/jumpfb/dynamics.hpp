// dynamics.hpp: time evolution and steady states of jump-based feedback.

#pragma once

#include "jumpfb/hybrid.hpp"

#include <boost/numeric/odeint.hpp>

#include <map>
#include <string>
#include <vector>

namespace jumpfb {

enum class EvolutionMethod { memory_resolved_ode, extended_exponential };

inline const char* to_string(EvolutionMethod m) {
    return m == EvolutionMethod::memory_resolved_ode ? "memory-resolved-ode" : "extended-exponential";
}

struct EvolutionResult {
    std::vector<double> times;
    std::vector<HybridState> states;
    EvolutionMethod method = EvolutionMethod::extended_exponential;
};

struct OdeOptions {
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    double abort_negativity = 1e-6;  // blocks below -this abort the run
};

/// Right-hand side of the memory-resolved feedback master equation:
///   d/dt rho(k) = -i[H(k), rho(k)] - 1/2 {Gamma(k), rho(k)} + sum_q L_k(q) rho(q) L_k(q)^dag
/// with Gamma(k) = sum_q L_q(k)^dag L_q(k). Silent operators at memory k add D[M] rho(k).
///
/// For hamiltonian-only models the gain term is formed from sum_q rho(q) once
/// unless `general_path` is set.
inline std::vector<Matrix> memory_resolved_rhs(const FeedbackModel& model, const std::vector<Matrix>& blocks,
                                               bool general_path = false) {
    const std::size_t n = model.size();
    std::vector<Matrix> out(n);
    const bool shared = !general_path && model.hamiltonian_only.value_or(false);
    Matrix total;
    if (shared) {
        total = Matrix::Zero(model.dim, model.dim);
        for (const auto& b : blocks) total += b;
    }
    for (std::size_t k = 0; k < n; ++k) {
        const Matrix& h = model.hamiltonians[k];
        const Matrix& rk = blocks[k];
        const Matrix gamma = model.decay_operator(k);
        Matrix d = -kI * (h * rk - rk * h) - 0.5 * (gamma * rk + rk * gamma);
        if (shared) {
            const Matrix& l = model.jump(0, k);
            d += l * total * l.adjoint();
        } else {
            for (std::size_t q = 0; q < n; ++q) {
                const Matrix& l = model.jump(q, k);
                d += l * blocks[q] * l.adjoint();
            }
        }
        for (const auto& m : model.silent_ops[k]) d += m * rk * m.adjoint();
        out[k] = std::move(d);
    }
    return out;
}

namespace detail {

inline std::vector<double> pack(const std::vector<Matrix>& blocks) {
    std::vector<double> x;
    for (const auto& b : blocks) {
        for (Index i = 0; i < b.size(); ++i) {
            x.push_back(b.data()[i].real());
            x.push_back(b.data()[i].imag());
        }
    }
    return x;
}

inline std::vector<Matrix> unpack(const std::vector<double>& x, std::size_t n, Index d) {
    std::vector<Matrix> blocks(n, Matrix(d, d));
    std::size_t p = 0;
    for (auto& b : blocks) {
        for (Index i = 0; i < b.size(); ++i, p += 2) b.data()[i] = Complex(x[p], x[p + 1]);
    }
    return blocks;
}

inline void check_times(const std::vector<double>& times) {
    if (times.empty()) throw ValidationError("evolve: time grid is empty");
    if (times.front() < 0.0) throw ValidationError("evolve: times must be non-negative");
    for (std::size_t i = 1; i < times.size(); ++i) {
        if (!(times[i] > times[i - 1])) throw ValidationError("evolve: times must be strictly increasing");
    }
}

inline void check_initial(const FeedbackModel& model, const HybridState& initial) {
    if (initial.memory_size() != model.size() || initial.dim() != model.dim) {
        throw DimensionError("evolve: initial state does not match the model");
    }
    initial.check();
}

}  // namespace detail

/// Integrates the coupled memory-resolved equations with an adaptive
/// Dormand-Prince 5(4) stepper. The initial state is taken at t = 0.
inline EvolutionResult evolve_memory_resolved(const FeedbackModel& model_in, const HybridState& initial,
                                              const std::vector<double>& times, const OdeOptions& opt = {}) {
    namespace ode = boost::numeric::odeint;
    const FeedbackModel model = validate(model_in);
    detail::check_times(times);
    detail::check_initial(model, initial);

    const std::size_t n = model.size();
    const Index d = model.dim;
    auto system = [&](const std::vector<double>& x, std::vector<double>& dxdt, double) {
        dxdt = detail::pack(memory_resolved_rhs(model, detail::unpack(x, n, d)));
    };

    EvolutionResult result;
    result.method = EvolutionMethod::memory_resolved_ode;
    std::vector<double> x = detail::pack(initial.blocks);
    double t = 0.0;
    auto stepper = ode::make_controlled(opt.abs_tol, opt.rel_tol, ode::runge_kutta_dopri5<std::vector<double>>());
    for (double target : times) {
        if (target > t) {
            try {
                ode::integrate_adaptive(stepper, system, x, t, target, std::min(1e-3, target - t));
            } catch (const ode::step_adjustment_error& e) {
                throw NumericalError(std::string("evolve_memory_resolved: step size underflow: ") + e.what());
            }
            t = target;
        }
        HybridState s{detail::unpack(x, n, d)};
        for (std::size_t k = 0; k < n; ++k) {
            const double ev = min_eigenvalue(s.blocks[k]);
            if (ev < -opt.abort_negativity) {
                throw PositivityError("evolve_memory_resolved: block " + model.channels[k].label +
                                      " has eigenvalue " + std::to_string(ev) + " at t = " + std::to_string(target));
            }
        }
        result.times.push_back(target);
        result.states.push_back(std::move(s));
    }
    return result;
}

/// Applies exp((t_{i+1} - t_i) LL) to the vectorized joint state.
inline EvolutionResult evolve_extended(const ExtendedGenerator& gen, const HybridState& initial,
                                       const std::vector<double>& times) {
    detail::check_times(times);
    detail::check_initial(gen.model, initial);
    EvolutionResult result;
    result.method = EvolutionMethod::extended_exponential;
    std::map<double, Matrix> cache;
    Vector x = to_joint_vec(initial);
    double t = 0.0;
    for (double target : times) {
        const double dt = target - t;
        if (dt > 0.0) {
            auto it = cache.find(dt);
            if (it == cache.end()) it = cache.emplace(dt, propagator(gen.generator, dt).matrix()).first;
            x = it->second * x;
            t = target;
        }
        result.times.push_back(target);
        result.states.push_back(from_joint_vec(x, gen.memory_size()));
    }
    return result;
}

/// Kernel of the extended generator on the block-diagonal subspace, as a
/// normalized memory-resolved state.
inline HybridState feedback_steady_state(const ExtendedGenerator& gen, const Tolerances& tol = {}) {
    const BlockDiagonalSpace space(gen);
    const detail::Kernel ker =
        detail::kernel_vector(space.restrict(gen.generator.matrix()), space.trace_row(), tol.kernel,
                              "feedback_steady_state");
    const Vector& x = ker.x;
    HybridState s = from_joint_vec(space.lift(x), gen.memory_size());
    const Complex tr = (space.trace_row() * x).value();
    if (std::abs(tr) < 1e-300) throw NumericalError("feedback_steady_state: kernel vector has zero trace");
    const double slack = std::max(tol.positivity, ker.error_bound / std::abs(tr));
    for (auto& b : s.blocks) {
        b = hermitize(b / tr);
        if (min_eigenvalue(b) < -slack) {
            throw PositivityError(
                fmt::format("feedback_steady_state: block has a negative eigenvalue {:.3g}", min_eigenvalue(b)));
        }
    }
    return s;
}

/// d/dt P(k) = sum_{q != k} Tr[J_k(q) rho(q)] - sum_{q != k} Tr[J_q(k) rho(k)]
inline std::vector<double> memory_distribution_rate(const FeedbackModel& model, const HybridState& state) {
    const std::size_t n = model.size();
    if (state.memory_size() != n) throw DimensionError("memory_distribution_rate: state does not match the model");
    std::vector<double> rate(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t q = 0; q < n; ++q) {
            if (q == k) continue;
            const Matrix& in = model.jump(q, k);   // jump k fired while memory was q
            const Matrix& out = model.jump(k, q);  // jump q fired while memory is k
            rate[k] += (in * state.blocks[q] * in.adjoint()).trace().real();
            rate[k] -= (out * state.blocks[k] * out.adjoint()).trace().real();
        }
    }
    return rate;
}

}  // namespace jumpfb
