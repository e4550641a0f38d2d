// fcs.hpp: full counting statistics of a counting observable under feedback.

#pragma once

#include "jumpfb/dynamics.hpp"
#include "jumpfb/hybrid.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

namespace jumpfb {

/// Charge per jump: entry (k, q) is the weight of firing channel k while the
/// memory holds q. Silent operators always carry weight zero.
struct CountingWeights {
    RealMatrix per_transition;

    static CountingWeights per_channel(const std::vector<double>& nu) {
        const auto n = static_cast<Index>(nu.size());
        CountingWeights w;
        w.per_transition.resize(n, n);
        for (Index k = 0; k < n; ++k) w.per_transition.row(k).setConstant(nu[static_cast<std::size_t>(k)]);
        return w;
    }
    static CountingWeights zeros(std::size_t n) {
        return {RealMatrix::Zero(static_cast<Index>(n), static_cast<Index>(n))};
    }
    static CountingWeights ones(std::size_t n) {
        return {RealMatrix::Ones(static_cast<Index>(n), static_cast<Index>(n))};
    }

    std::size_t size() const noexcept { return static_cast<std::size_t>(per_transition.rows()); }

    bool channel_resolved() const {
        for (Index k = 0; k < per_transition.rows(); ++k) {
            if ((per_transition.row(k).array() != per_transition(k, 0)).any()) return false;
        }
        return true;
    }

    /// nu_k when channel_resolved(), otherwise throws.
    std::vector<double> channel_weights() const {
        if (!channel_resolved()) throw ValidationError("CountingWeights: weights depend on the memory value");
        std::vector<double> nu;
        for (Index k = 0; k < per_transition.rows(); ++k) nu.push_back(per_transition(k, 0));
        return nu;
    }

    double weight(std::size_t k, std::size_t q) const {
        return per_transition(static_cast<Index>(k), static_cast<Index>(q));
    }

    void check(std::size_t n) const {
        if (per_transition.rows() != static_cast<Index>(n) || per_transition.cols() != static_cast<Index>(n)) {
            throw DimensionError("CountingWeights: weight matrix must be |Sigma| x |Sigma|");
        }
        if (!per_transition.allFinite()) throw ValidationError("CountingWeights: weights must be finite");
    }
};

struct CorrelationSamples {
    double singular_weight = 0.0;  // K, coefficient of delta(tau)
    std::vector<double> taus;
    std::vector<double> values;    // smooth part F(tau)
};

struct SpectrumSamples {
    std::vector<double> omegas;
    std::vector<double> values;
    double background = 0.0;       // K
};

// --------------------------------------------------------------------------
// Current and second-moment superoperators
// --------------------------------------------------------------------------

namespace detail {
template <class WeightFn>
Superoperator weighted_jumps(const ExtendedGenerator& gen, const CountingWeights& w, WeightFn&& f) {
    w.check(gen.memory_size());
    const std::size_t n = gen.memory_size();
    const Index dj = gen.joint_dim();
    Matrix m = Matrix::Zero(dj * dj, dj * dj);
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t q = 0; q < n; ++q) {
            const double nu = f(w.weight(k, q));
            const Matrix& l = gen.ext_jumps[gen.transition_index(k, q)];
            if (nu == 0.0 || l.isZero(0.0)) continue;
            m += nu * sandwich(l, l.adjoint());
        }
    }
    return {dj, std::move(m)};
}

inline void require_stationary(const ExtendedGenerator& gen, const Vector& x, const char* what) {
    const double residual = (gen.generator.matrix() * x).cwiseAbs().maxCoeff();
    if (residual > 1e-8 * std::max(1.0, max_abs(gen.generator.matrix()))) {
        throw ValidationError(std::string(what) + ": state is not stationary (time-dependent F is not supported)");
    }
}
}  // namespace detail

/// rho_sm -> sum_{k,q} nu_kq LL_{k,q} rho_sm LL_{k,q}^dag
inline Superoperator current_superop(const ExtendedGenerator& gen, const CountingWeights& w) {
    return detail::weighted_jumps(gen, w, [](double nu) { return nu; });
}

/// Same as current_superop with squared weights.
inline Superoperator second_moment_superop(const ExtendedGenerator& gen, const CountingWeights& w) {
    return detail::weighted_jumps(gen, w, [](double nu) { return nu * nu; });
}

inline Complex trace_of(const Superoperator& s, const Vector& x) {
    return Superoperator::trace_row(s.dim()) * (s.matrix() * x);
}

/// J = Tr[current_superop rho_sm]
inline double average_current(const ExtendedGenerator& gen, const CountingWeights& w, const HybridState& state) {
    return trace_of(current_superop(gen, w), to_joint_vec(state)).real();
}

/// K = Tr[second_moment_superop rho_sm]
inline double singular_weight(const ExtendedGenerator& gen, const CountingWeights& w, const HybridState& state) {
    return trace_of(second_moment_superop(gen, w), to_joint_vec(state)).real();
}

// --------------------------------------------------------------------------
// Noise, correlations, spectrum
// --------------------------------------------------------------------------

/// D = K - 2 Tr[J L+ J rho_ss] with L+ the Drazin inverse of the extended
/// generator on the block-diagonal subspace.
inline double steady_noise(const ExtendedGenerator& gen, const CountingWeights& w, const HybridState& state) {
    const Vector x = to_joint_vec(state);
    detail::require_stationary(gen, x, "steady_noise");
    const BlockDiagonalSpace space(gen);
    const Matrix jc = space.restrict(current_superop(gen, w).matrix());
    const Vector xr = space.restrict(x);
    const Eigen::RowVectorXcd tr = space.trace_row();
    const Matrix dz = detail::group_inverse(space.restrict(gen.generator.matrix()), xr, tr, "steady_noise");
    const double k = singular_weight(gen, w, state);
    return k - 2.0 * (tr * (jc * (dz * (jc * xr)))).value().real();
}

/// Stationary two-point correlation: K delta(tau) + Tr[J e^{tau L} J rho_ss] - J^2.
inline CorrelationSamples two_point_correlation(const ExtendedGenerator& gen, const CountingWeights& w,
                                                const HybridState& state, const std::vector<double>& taus) {
    if (taus.empty()) throw ValidationError("two_point_correlation: tau grid is empty");
    for (std::size_t i = 0; i < taus.size(); ++i) {
        if (!(taus[i] > 0.0) || (i > 0 && !(taus[i] > taus[i - 1]))) {
            throw ValidationError("two_point_correlation: taus must be positive and strictly increasing");
        }
    }
    const Vector x = to_joint_vec(state);
    detail::require_stationary(gen, x, "two_point_correlation");

    const BlockDiagonalSpace space(gen);
    const Matrix a = space.restrict(gen.generator.matrix());
    const Matrix jc = space.restrict(current_superop(gen, w).matrix());
    const Vector xr = space.restrict(x);
    const Eigen::RowVectorXcd tr = space.trace_row();
    const double j = (tr * (jc * xr)).value().real();

    CorrelationSamples out;
    out.singular_weight = singular_weight(gen, w, state);
    out.taus = taus;
    std::map<double, Matrix> cache;
    Vector y = jc * xr;
    double t = 0.0;
    for (double tau : taus) {
        const double dt = tau - t;
        auto it = cache.find(dt);
        if (it == cache.end()) it = cache.emplace(dt, (dt * a).exp().eval()).first;
        y = it->second * y;
        t = tau;
        out.values.push_back((tr * (jc * y)).value().real() - j * j);
    }
    return out;
}

/// S(w) = K + 2 Re Tr[J (iw - L)^-1 Q J rho_ss], with Q removing the
/// stationary mode; at w = 0 the Drazin inverse replaces the resolvent.
inline SpectrumSamples power_spectrum(const ExtendedGenerator& gen, const CountingWeights& w,
                                      const HybridState& state, const std::vector<double>& omegas) {
    if (omegas.empty()) throw ValidationError("power_spectrum: frequency grid is empty");
    for (double om : omegas) {
        if (!std::isfinite(om)) throw ValidationError("power_spectrum: frequencies must be finite");
    }
    const Vector x = to_joint_vec(state);
    detail::require_stationary(gen, x, "power_spectrum");

    const BlockDiagonalSpace space(gen);
    const Index m = space.size();
    const Matrix a = space.restrict(gen.generator.matrix());
    const Matrix jc = space.restrict(current_superop(gen, w).matrix());
    const Vector xr = space.restrict(x);
    const Eigen::RowVectorXcd tr = space.trace_row();
    const Matrix q = Matrix::Identity(m, m) - xr * tr;
    const Vector y = q * (jc * xr);

    SpectrumSamples out;
    out.background = singular_weight(gen, w, state);
    out.omegas = omegas;
    for (double om : omegas) {
        Vector z;
        if (om == 0.0) {
            z = -(detail::group_inverse(a, xr, tr, "power_spectrum") * y);  // (0 - L)^+ y
        } else {
            Eigen::PartialPivLU<Matrix> lu(Complex(0.0, om) * Matrix::Identity(m, m) - a);
            if (!(lu.rcond() > 1e-12)) {
                throw NumericalError("power_spectrum: resolvent is singular at omega = " + std::to_string(om));
            }
            z = q * lu.solve(y);
        }
        out.values.push_back(out.background + 2.0 * (tr * (jc * z)).value().real());
    }
    return out;
}

// --------------------------------------------------------------------------
// Verification paths
// --------------------------------------------------------------------------

/// Slowest nonzero decay rate of the generator on the block-diagonal subspace.
inline double spectral_gap(const ExtendedGenerator& gen) {
    const BlockDiagonalSpace space(gen);
    const Matrix a = space.restrict(gen.generator.matrix());
    Eigen::ComplexEigenSolver<Matrix> es(a, false);
    const double scale = std::max(1.0, max_abs(a));
    double gap = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < es.eigenvalues().size(); ++i) {
        const Complex ev = es.eigenvalues()(i);
        if (std::abs(ev) > 1e-9 * scale) gap = std::min(gap, -ev.real());
    }
    return gap;
}

struct QuadratureOptions {
    double horizon_factor = 40.0;  // integrate to horizon_factor / spectral gap
    double rel_tol = 1e-10;
    int max_refinements = 12;
};

/// D = K + 2 int_0^T (Tr[J e^{tau L} J rho_ss] - J^2) dtau by composite
/// Gauss-Kronrod (7, 15) panels; the panel width is halved until every
/// panel's Kronrod-Gauss difference is below tolerance.
inline double noise_by_quadrature(const ExtendedGenerator& gen, const CountingWeights& w, const HybridState& state,
                                  const QuadratureOptions& opt = {}) {
    namespace bq = boost::math::quadrature;
    const Vector x = to_joint_vec(state);
    detail::require_stationary(gen, x, "noise_by_quadrature");
    const BlockDiagonalSpace space(gen);
    const Matrix a = space.restrict(gen.generator.matrix());
    const Matrix jc = space.restrict(current_superop(gen, w).matrix());
    const Vector xr = space.restrict(x);
    const Eigen::RowVectorXcd tr = space.trace_row();
    const Eigen::RowVectorXcd c = tr * jc;
    const double j = (c * xr).value().real();
    const double k = singular_weight(gen, w, state);

    const double gap = spectral_gap(gen);
    if (!std::isfinite(gap)) return k;  // no decaying modes: F vanishes identically
    if (!(gap > 0.0)) throw NumericalError("noise_by_quadrature: generator has a non-decaying mode");
    const double horizon = opt.horizon_factor / gap;

    const auto& kx = bq::gauss_kronrod<double, 15>::abscissa();  // nonnegative nodes on [-1, 1]
    const auto& kw = bq::gauss_kronrod<double, 15>::weights();
    const auto& gw = bq::gauss<double, 7>::weights();

    const double fastest = std::max(1e-12, a.cwiseAbs().rowwise().sum().maxCoeff());
    auto panels = static_cast<long>(std::ceil(horizon * fastest / 2.0));
    panels = std::max<long>(panels, 8);

    double last = std::numeric_limits<double>::quiet_NaN();
    for (int refine = 0; refine <= opt.max_refinements; ++refine, panels *= 2) {
        const double width = horizon / static_cast<double>(panels);
        const double half = 0.5 * width;
        // node offsets are identical in every panel, so their propagators are shared
        std::vector<double> offsets;
        std::vector<double> wk;
        std::vector<double> wg;
        for (std::size_t i = 0; i < kx.size(); ++i) {
            // even Kronrod nodes coincide with the Gauss nodes
            const double g = (i % 2 == 0) ? gw[i / 2] : 0.0;
            offsets.push_back(half * (1.0 + kx[i]));
            wk.push_back(kw[i]);
            wg.push_back(g);
            if (kx[i] != 0.0) {
                offsets.push_back(half * (1.0 - kx[i]));
                wk.push_back(kw[i]);
                wg.push_back(g);
            }
        }
        std::vector<Matrix> node_props;
        for (double o : offsets) node_props.push_back((o * a).exp());
        const Matrix step = (width * a).exp();

        Vector y = jc * xr;  // e^{t0 L} J rho_ss at the panel start
        double total = 0.0;
        double worst = 0.0;
        for (long p = 0; p < panels; ++p) {
            double ik = 0.0;
            double ig = 0.0;
            for (std::size_t i = 0; i < offsets.size(); ++i) {
                const double f = (c * (node_props[i] * y)).value().real() - j * j;
                ik += wk[i] * f;
                ig += wg[i] * f;
            }
            total += half * ik;
            worst = std::max(worst, half * std::abs(ik - ig));
            y = step * y;
        }
        const double d = k + 2.0 * total;
        const double scale = std::max(std::abs(d), std::abs(k));
        if (worst * static_cast<double>(panels) <= opt.rel_tol * scale ||
            (std::isfinite(last) && std::abs(d - last) <= opt.rel_tol * scale)) {
            return d;
        }
        last = d;
    }
    throw NumericalError("noise_by_quadrature: no convergence");
}

struct TiltedCumulants {
    double current = 0.0;  // first derivative of the dominant eigenvalue at chi = 0
    double noise = 0.0;    // second derivative
};

/// Cumulants from central finite differences (5-point stencil) of the
/// dominant eigenvalue of the tilted generator, in which every jump term
/// LL rho LL^dag is multiplied by exp(chi nu_kq).
inline TiltedCumulants tilted_cumulants(const ExtendedGenerator& gen, const CountingWeights& w,
                                        double chi_step = 1e-4) {
    w.check(gen.memory_size());
    if (!(chi_step > 0.0)) throw ValidationError("tilted_cumulants: chi_step must be positive");
    const BlockDiagonalSpace space(gen);
    const Matrix a = space.restrict(gen.generator.matrix());
    const std::size_t n = gen.memory_size();
    std::vector<std::pair<double, Matrix>> terms;
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t q = 0; q < n; ++q) {
            const double nu = w.weight(k, q);
            const Matrix& l = gen.ext_jumps[gen.transition_index(k, q)];
            if (nu == 0.0 || l.isZero(0.0)) continue;
            terms.emplace_back(nu, space.restrict(sandwich(l, l.adjoint())));
        }
    }

    struct Top {
        Complex first;
        double second_re;
    };
    // The dense eigensolver locates the dominant eigenvalue only to about
    // eps * |m|, which the 1/h^2 stencil would amplify. It is polished by
    // Newton steps on (m - lambda) x = 0, tr x = 1, and read off as
    // tr m x = sum_j expm1(chi nu_j) tr T_j x, using tr a = 0.
    const Eigen::RowVectorXcd tr = space.trace_row();
    const Index dim = a.rows();
    auto dominant = [&](double chi) {
        Matrix m = a;
        Eigen::RowVectorXcd tr_tilt = Eigen::RowVectorXcd::Zero(dim);
        for (const auto& [nu, jm] : terms) {
            const double c = std::expm1(chi * nu);
            m += c * jm;
            tr_tilt += c * (tr * jm);
        }
        Eigen::ComplexEigenSolver<Matrix> es(m, false);
        const auto& ev = es.eigenvalues();
        Index best = 0;
        for (Index i = 1; i < ev.size(); ++i) {
            if (ev(i).real() > ev(best).real()) best = i;
        }
        double second = -std::numeric_limits<double>::infinity();
        for (Index i = 0; i < ev.size(); ++i) {
            if (i != best) second = std::max(second, ev(i).real());
        }

        Complex lambda = ev(best);
        Matrix border = Matrix::Zero(dim + 1, dim + 1);
        border.topLeftCorner(dim, dim) = m - lambda * Matrix::Identity(dim, dim);
        border.block(dim, 0, 1, dim) = tr;
        border(0, dim) = 1.0;  // starting vector: kernel of the other rows
        Vector x = border.partialPivLu().solve(Vector::Unit(dim + 1, dim)).head(dim);
        for (int it = 0; it < 3; ++it) {
            border.topLeftCorner(dim, dim) = m - lambda * Matrix::Identity(dim, dim);
            border.block(0, dim, dim, 1) = -x;
            Vector rhs(dim + 1);
            rhs << -(m * x - lambda * x), 1.0 - (tr * x).value();
            const Vector step = border.partialPivLu().solve(rhs);
            x += step.head(dim);
            lambda += step(dim);
        }
        return Top{(tr_tilt * x).value() / (tr * x).value(), second};
    };

    const double h = chi_step;
    const std::array<double, 5> chis{-2 * h, -h, 0.0, h, 2 * h};
    std::array<double, 5> lam{};
    double spread = 0.0;
    double min_gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < 5; ++i) {
        const Top t = dominant(chis[i]);
        lam[i] = t.first.real();
        min_gap = std::min(min_gap, t.first.real() - t.second_re);
        spread = std::max(spread, std::abs(lam[i]));
    }
    if (min_gap <= 10.0 * spread || min_gap <= 1e-12) {
        throw NumericalError("tilted_cumulants: dominant eigenvalue is not isolated within the stencil; "
                             "use a smaller chi_step");
    }
    TiltedCumulants out;
    out.current = (lam[0] - 8.0 * lam[1] + 8.0 * lam[3] - lam[4]) / (12.0 * h);
    out.noise = (-lam[0] + 16.0 * lam[1] - 30.0 * lam[2] + 16.0 * lam[3] - lam[4]) / (12.0 * h * h);
    return out;
}

}  // namespace jumpfb
