// models.hpp: built-in feedback models (cooled qubit, three-level maser,
// Poisson emitter) and their closed-form steady-state expressions.

#pragma once

#include "jumpfb/fcs.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace jumpfb {

// --------------------------------------------------------------------------
// Qubit cooling
// --------------------------------------------------------------------------

/// Drive policy: feedback turns the drive on after an absorption only;
/// always_on and off are the memoryless baselines.
enum class DriveMode { feedback, always_on, off };

inline const char* to_string(DriveMode m) {
    switch (m) {
        case DriveMode::feedback: return "feedback";
        case DriveMode::always_on: return "always_on";
        case DriveMode::off: return "off";
    }
    return "feedback";
}

struct QubitParams {
    double nbar = 0.5;
    double gamma = 0.25;
    double lam = 1.0;
    double delta = 0.0;
    DriveMode mode = DriveMode::feedback;

    void check() const {
        if (!(nbar >= 0.0) || !std::isfinite(nbar)) throw ValidationError("qubit: nbar must be >= 0");
        if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ValidationError("qubit: gamma must be > 0");
        if (!(lam >= 0.0) || !std::isfinite(lam)) throw ValidationError("qubit: lam must be >= 0");
        if (!std::isfinite(delta)) throw ValidationError("qubit: delta must be finite");
    }
};

/// Basis {|g>, |e>}; channels "-1" (emission) and "+1" (absorption).
inline FeedbackModel qubit_cooling_model(const QubitParams& p) {
    p.check();
    const Matrix sz = ket_bra(2, 0, 0) - ket_bra(2, 1, 1);
    const Matrix sx = ket_bra(2, 0, 1) + ket_bra(2, 1, 0);
    const Matrix h_off = -0.5 * p.delta * sz;
    const Matrix h_on = h_off + p.lam * sx;
    const Matrix l_minus = std::sqrt(p.gamma * (p.nbar + 1.0)) * ket_bra(2, 0, 1);
    const Matrix l_plus = std::sqrt(p.gamma * p.nbar) * ket_bra(2, 1, 0);

    FeedbackModel m;
    m.dim = 2;
    m.channels = make_channels({"-1", "+1"});
    switch (p.mode) {
        case DriveMode::feedback: m.hamiltonians = {h_off, h_on}; break;
        case DriveMode::always_on: m.hamiltonians = {h_on, h_on}; break;
        case DriveMode::off: m.hamiltonians = {h_off, h_off}; break;
    }
    m.jump_ops.assign(2, {l_minus, l_plus});
    m.hamiltonian_only = true;
    return validate(std::move(m));
}

struct QubitAnalytic {
    double p_ground = 0.0;
    Complex coherence;     // <g|rho|e>
    double p_emission = 0.0;  // stationary probability that the memory holds -1
};

/// Resonant feedback steady state as a function of nbar and p = gamma / lambda.
inline QubitAnalytic qubit_analytic(double nbar, double p) {
    const double n = nbar;
    const double den = 4.0 + n * (12.0 + (1.0 + 2.0 * n) * (1.0 + 2.0 * n) * p * p);
    QubitAnalytic a;
    a.p_ground = (1.0 + 2.0 * n) * (4.0 + n * (1.0 + n) * p * p) / den;
    a.coherence = Complex(0.0, -2.0 * n * n * p / den);
    a.p_emission = (1.0 + n) * (4.0 + n * (1.0 + 2.0 * n) * p * p) / den;
    return a;
}

inline double thermal_ground_population(double nbar) { return (nbar + 1.0) / (2.0 * nbar + 1.0); }

// --------------------------------------------------------------------------
// Three-level maser
// --------------------------------------------------------------------------

enum class MaserVariant { quantum, classical };

inline const char* to_string(MaserVariant v) { return v == MaserVariant::quantum ? "quantum" : "classical"; }

struct MaserParams {
    double nl = 0.3;
    double nr = 8.0;
    double gl = 0.025;
    double gr = 0.025;
    double lam = 1.0;
    double delta = 0.0;
    double wl = 8.0;
    double wr = 2.0;
    MaserVariant variant = MaserVariant::quantum;
    bool feedback = true;

    void check() const {
        if (!(nl >= 0.0) || !(nr >= 0.0)) throw ValidationError("maser: bath occupations must be >= 0");
        if (!(gl > 0.0) || !(gr > 0.0)) throw ValidationError("maser: couplings must be > 0");
        if (!(wl > wr) || !(wr > 0.0)) throw ValidationError("maser: requires wl > wr > 0");
        for (double v : {nl, nr, gl, gr, lam, delta, wl, wr}) {
            if (!std::isfinite(v)) throw ValidationError("maser: parameters must be finite");
        }
    }

    /// (gl nl + gr nr) / 2
    double dephasing() const { return 0.5 * (gl * nl + gr * nr); }
};

inline const std::vector<std::string>& maser_labels() {
    static const std::vector<std::string> labels{"E_l", "I_l", "E_r", "I_r"};
    return labels;
}

/// Incoherent 0 <-> 1 rate of the classical variant.
inline double maser_classical_rate(const MaserParams& p) {
    const double g = p.dephasing();
    if (!(g > 0.0)) throw ValidationError("maser: classical variant needs a nonzero dephasing rate");
    return 2.0 * p.lam * p.lam * g / (p.delta * p.delta + g * g);
}

/// Levels |0>, |1>, |2>; the left bath couples 0 <-> 2, the right bath 1 <-> 2.
/// With feedback the drive is on only while the last jump was E_r.
inline FeedbackModel maser_model(const MaserParams& p) {
    p.check();
    const Matrix el = std::sqrt(p.gl * (p.nl + 1.0)) * ket_bra(3, 0, 2);
    const Matrix il = std::sqrt(p.gl * p.nl) * ket_bra(3, 2, 0);
    const Matrix er = std::sqrt(p.gr * (p.nr + 1.0)) * ket_bra(3, 1, 2);
    const Matrix ir = std::sqrt(p.gr * p.nr) * ket_bra(3, 2, 1);
    const std::size_t e_r = 2;

    FeedbackModel m;
    m.dim = 3;
    m.channels = make_channels(maser_labels());
    m.jump_ops.assign(4, {el, il, er, ir});
    m.hamiltonian_only = true;
    m.silent_ops.assign(4, {});

    if (p.variant == MaserVariant::quantum) {
        const Matrix h_off = 0.5 * p.delta * (ket_bra(3, 0, 0) - ket_bra(3, 1, 1));
        const Matrix h_on = h_off + p.lam * (ket_bra(3, 0, 1) + ket_bra(3, 1, 0));
        for (std::size_t k = 0; k < 4; ++k) m.hamiltonians.push_back(!p.feedback || k == e_r ? h_on : h_off);
    } else {
        m.hamiltonians.assign(4, Matrix::Zero(3, 3));
        const double rc = std::sqrt(maser_classical_rate(p));
        const std::vector<Matrix> drive{rc * ket_bra(3, 0, 1), rc * ket_bra(3, 1, 0)};
        for (std::size_t k = 0; k < 4; ++k) {
            if (!p.feedback || k == e_r) m.silent_ops[k] = drive;
        }
    }
    return validate(std::move(m));
}

/// Work delivered to the drive: +wl per I_l, -wl per E_l, -wr per E_r, +wr per I_r.
inline CountingWeights work_weights(const MaserParams& p) {
    return CountingWeights::per_channel({-p.wl, p.wl, -p.wr, p.wr});
}

struct MaserAnalytic {
    double pop0 = 0.0;
    double pop1 = 0.0;
    double pop2 = 0.0;
    double power_no_feedback = 0.0;  // dimensionless, equal couplings
    double power_feedback = 0.0;
};

/// Resonant closed forms in terms of nl, nr and p = gamma / lambda (gl = gr).
inline MaserAnalytic maser_analytic(double nl, double nr, double p) {
    const double n = nl + nr;
    const double p2 = p * p;
    const double phi = (nr + nl) * (nr + nl + 3.0 * nr * nl);
    const double base = nr + 4.0 * nr * nl + nl * (3.0 + 2.0 * nl);
    const double xi = 4.0 * base + nl * phi * p2;
    const double eta = 4.0 * (nr + 2.0 * nr * nl + nl * (2.0 + nl));
    MaserAnalytic a;
    a.pop0 = (eta + nr * nl * (1.0 + nl) * n * p2) / xi;
    a.pop1 = (1.0 + nr) * nl * (4.0 + nl * n * p2) / xi;
    a.pop2 = nl * n * (4.0 + nr * nl * p2) / xi;
    a.power_no_feedback = 4.0 * (nl - nr) / (4.0 * (4.0 + 3.0 * nr + 3.0 * nl) + phi * p2);
    a.power_feedback = 4.0 * (1.0 + nr) * nl * nl / (4.0 * base + nl * phi * p2);
    return a;
}

// --------------------------------------------------------------------------
// Poisson emitter
// --------------------------------------------------------------------------

/// One-dimensional system with a single channel firing at rate gamma.
inline FeedbackModel poisson_model(double gamma) {
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw ValidationError("poisson: rate must be >= 0");
    FeedbackModel m;
    m.dim = 1;
    m.channels = make_channels({"emit"});
    m.hamiltonians = {Matrix::Zero(1, 1)};
    m.jump_ops = {{Matrix::Constant(1, 1, Complex(std::sqrt(gamma), 0.0))}};
    return validate(std::move(m));
}

}  // namespace jumpfb
