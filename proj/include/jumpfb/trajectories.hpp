// trajectories.hpp: Monte Carlo unravelling of jump-based feedback.
//
// Conditional states are carried as density matrices. Two samplers share
// the same record format: a literal fixed-step instrument and a waiting-time
// scheme that draws each jump time from the no-jump survival probability.

#pragma once

#include "jumpfb/csv.hpp"
#include "jumpfb/fcs.hpp"
#include "jumpfb/parallel.hpp"

#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <vector>

namespace jumpfb {

// --------------------------------------------------------------------------
// Random streams
// --------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// One independent stream per (master seed, index). The engine state is
/// 19968 bits, filled through std::seed_seq from a hash of both inputs.
class RngStream {
public:
    RngStream(std::uint64_t master_seed, std::uint64_t stream) {
        const std::uint64_t a = splitmix64(master_seed);
        const std::uint64_t b = splitmix64(a ^ splitmix64(stream + 0x632BE59BD9B4E019ULL));
        std::seed_seq seq{lo(master_seed), hi(master_seed), lo(stream), hi(stream), lo(b), hi(b)};
        engine_.seed(seq);
    }

    /// Uniform in the open interval (0, 1), built from the raw engine bits so
    /// the sequence is identical across standard library implementations.
    double uniform() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

private:
    static std::uint32_t lo(std::uint64_t x) { return static_cast<std::uint32_t>(x); }
    static std::uint32_t hi(std::uint64_t x) { return static_cast<std::uint32_t>(x >> 32); }

    std::mt19937_64 engine_;
};

// --------------------------------------------------------------------------
// Records
// --------------------------------------------------------------------------

struct Scheme {
    enum class Kind { waiting_time, fixed_step };
    Kind kind = Kind::waiting_time;
    double dt = 0.0;

    static Scheme waiting_time() { return {}; }
    static Scheme fixed_step(double dt) { return {Kind::fixed_step, dt}; }
};

inline const char* to_string(Scheme::Kind k) { return k == Scheme::Kind::fixed_step ? "fixed-step" : "waiting-time"; }

struct TrajectoryRecord {
    std::size_t k0 = 0;
    double horizon = 0.0;
    std::vector<double> jump_times;
    std::vector<std::size_t> jump_channels;
    std::vector<std::size_t> memory_before;  // memory value when each jump fired
    std::size_t silent_jumps = 0;
    Matrix final_state;

    std::size_t jumps() const noexcept { return jump_times.size(); }

    /// Memory at time t: channel of the most recent jump at or before t, k0 if none.
    std::size_t memory_at(double t) const {
        std::size_t k = k0;
        for (std::size_t i = 0; i < jump_times.size() && jump_times[i] <= t; ++i) k = jump_channels[i];
        return k;
    }

    std::size_t final_memory() const { return jump_channels.empty() ? k0 : jump_channels.back(); }

    /// N(t) accumulated per transition: weight(fired channel, memory before).
    double charge(const CountingWeights& w, double t = std::numeric_limits<double>::infinity(),
                  double from = -1.0) const {
        double n = 0.0;
        for (std::size_t i = 0; i < jump_times.size() && jump_times[i] <= t; ++i) {
            if (jump_times[i] > from) n += w.weight(jump_channels[i], memory_before[i]);
        }
        return n;
    }

    /// N(t) accumulated per fired channel, ignoring the memory.
    double channel_charge(const std::vector<double>& nu, double t = std::numeric_limits<double>::infinity(),
                          double from = -1.0) const {
        double n = 0.0;
        for (std::size_t i = 0; i < jump_times.size() && jump_times[i] <= t; ++i) {
            if (jump_times[i] > from) n += nu[jump_channels[i]];
        }
        return n;
    }
};

// --------------------------------------------------------------------------
// Single trajectory
// --------------------------------------------------------------------------

namespace detail {

/// Operators available while the memory holds k: recorded L_q(k) for every
/// channel q, followed by the silent ones.
struct SectorOps {
    Matrix h_eff;
    std::vector<Matrix> ops;
    std::vector<Matrix> ops_dag_ops;  // M^dag M, so that Tr[M rho M^dag] = Tr[M^dag M rho]
    std::size_t recorded = 0;
    double max_rate = 0.0;  // largest eigenvalue of the total decay operator
};

inline std::vector<SectorOps> sector_ops(const FeedbackModel& model) {
    std::vector<SectorOps> out;
    for (std::size_t k = 0; k < model.size(); ++k) {
        SectorOps s;
        for (std::size_t q = 0; q < model.size(); ++q) s.ops.push_back(model.jump(k, q));
        s.recorded = s.ops.size();
        for (const auto& m : model.silent_ops[k]) s.ops.push_back(m);
        for (const auto& m : s.ops) s.ops_dag_ops.push_back(m.adjoint() * m);
        const Matrix gamma = model.decay_operator(k);
        s.h_eff = model.hamiltonians[k] - 0.5 * kI * gamma;
        Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(gamma), Eigen::EigenvaluesOnly);
        s.max_rate = std::max(0.0, es.eigenvalues().maxCoeff());
        out.push_back(std::move(s));
    }
    return out;
}

/// Picks an operator with probability proportional to Tr[M rho M^dag].
inline std::size_t pick_channel(const SectorOps& s, const Matrix& rho, double u) {
    std::vector<double> p;
    double total = 0.0;
    for (const auto& m : s.ops) {
        const double v = std::max(0.0, (m * rho * m.adjoint()).trace().real());
        p.push_back(v);
        total += v;
    }
    if (!(total > 0.0)) throw NumericalError("sample_trajectory: jump with vanishing total rate");
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        acc += p[i] / total;
        if (u < acc) return i;
    }
    for (std::size_t i = p.size(); i-- > 0;) {
        if (p[i] > 0.0) return i;
    }
    return p.size() - 1;
}

inline Matrix apply_jump(const Matrix& m, const Matrix& rho) {
    Matrix out = m * rho * m.adjoint();
    return hermitize(out / out.trace().real());
}

}  // namespace detail

/// Samples one trajectory on [0, horizon] starting from rho0 with memory k0.
inline TrajectoryRecord sample_trajectory(const FeedbackModel& model_in, const Matrix& rho0, std::size_t k0,
                                          double horizon, const Scheme& scheme, RngStream& rng) {
    const FeedbackModel model = validate(model_in);
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ValidationError("sample_trajectory: horizon must be positive");
    if (k0 >= model.size()) throw ValidationError("sample_trajectory: initial memory out of range");
    require_dim(rho0, model.dim, "sample_trajectory");
    if (!is_density(rho0)) throw ValidationError("sample_trajectory: rho0 is not a density matrix");
    const auto sectors = detail::sector_ops(model);

    TrajectoryRecord rec;
    rec.k0 = k0;
    rec.horizon = horizon;
    Matrix rho = rho0;
    std::size_t k = k0;

    auto record_jump = [&](double t, std::size_t op) {
        const auto& s = sectors[k];
        rho = detail::apply_jump(s.ops[op], rho);
        if (op < s.recorded) {
            rec.jump_times.push_back(t);
            rec.jump_channels.push_back(op);
            rec.memory_before.push_back(k);
            k = op;
        } else {
            ++rec.silent_jumps;
        }
    };

    if (scheme.kind == Scheme::Kind::fixed_step) {
        const double dt = scheme.dt;
        double worst = 0.0;
        for (const auto& s : sectors) worst = std::max(worst, s.max_rate);
        if (!(dt > 0.0) || dt * worst > 0.05) {
            throw ValidationError("sample_trajectory: fixed step too coarse (dt * max rate must be <= 0.05)");
        }
        const auto steps = static_cast<long long>(std::llround(horizon / dt));
        std::vector<double> p;
        Matrix drift(model.dim, model.dim);
        for (long long i = 1; i <= steps; ++i) {
            const auto& s = sectors[k];
            p.clear();
            double total = 0.0;
            for (const auto& a : s.ops_dag_ops) {
                // Tr[A rho] without forming the product
                p.push_back(dt * std::max(0.0, a.cwiseProduct(rho.transpose()).sum().real()));
                total += p.back();
            }
            const double u = rng.uniform();
            const double t = static_cast<double>(i) * dt;
            if (u < total) {
                double acc = 0.0;
                std::size_t op = p.size() - 1;
                for (std::size_t j = 0; j < p.size(); ++j) {
                    acc += p[j];
                    if (u < acc) {
                        op = j;
                        break;
                    }
                }
                record_jump(t, op);
            } else {
                // rho + dt L0(k) rho, renormalized
                drift.noalias() = s.h_eff * rho;
                drift.noalias() -= rho * s.h_eff.adjoint();
                rho += (-kI * dt) * drift;
                rho /= rho.trace().real();
            }
        }
        rec.final_state = rho;
        return rec;
    }

    // waiting-time scheme
    double t = 0.0;
    while (true) {
        const auto& s = sectors[k];
        const double remaining = horizon - t;
        auto evolved = [&](double tau) {
            const Matrix u = (-kI * tau * s.h_eff).exp();
            return Matrix(u * rho * u.adjoint());
        };
        auto survival = [&](double tau) { return evolved(tau).trace().real(); };
        const double target = rng.uniform();
        if (remaining <= 0.0 || survival(remaining) >= target) {
            if (remaining > 0.0) {
                const Matrix r = evolved(remaining);
                rho = hermitize(r / r.trace().real());
            }
            break;
        }
        std::uintmax_t iters = 200;
        auto tol = [](double a, double b) { return std::abs(b - a) <= 1e-10 * std::max(1.0, std::abs(a)); };
        const auto [a, b] = boost::math::tools::toms748_solve([&](double tau) { return survival(tau) - target; },
                                                              0.0, remaining, 1.0 - target,
                                                              survival(remaining) - target, tol, iters);
        const double tau = 0.5 * (a + b);
        const Matrix r = evolved(tau);
        rho = hermitize(r / r.trace().real());
        t += tau;
        record_jump(t, detail::pick_channel(s, rho, rng.uniform()));
    }
    rec.final_state = rho;
    return rec;
}

// --------------------------------------------------------------------------
// Ensemble estimates
// --------------------------------------------------------------------------

struct McOptions {
    std::size_t n_traj = 10000;
    double horizon = 1.0;             // counting window after burn-in
    double burn_in = 0.0;             // discarded before counting starts
    Scheme scheme;
    std::uint64_t master_seed = 0;
    std::size_t checkpoints = 11;     // equally spaced on [horizon/2, horizon]
    std::size_t jackknife_groups = 20;
    bool keep_records = false;
    unsigned threads = thread_count();
};

struct McEstimate {
    std::size_t n_traj = 0;
    std::uint64_t seed = 0;
    double horizon = 0.0;
    double mean_charge = 0.0;
    double mean_charge_se = 0.0;
    double var_charge = 0.0;
    double var_charge_se = 0.0;
    double current = 0.0;       // mean_charge / horizon
    double current_se = 0.0;
    double noise = 0.0;         // slope of Var N(t) over [horizon/2, horizon]
    double noise_se = 0.0;      // grouped jackknife
    std::vector<double> memory_freq;
    std::vector<double> memory_freq_se;
    std::vector<double> checkpoint_times;
    std::vector<double> checkpoint_mean;
    std::vector<double> checkpoint_var;
    std::optional<bool> charges_consistent;  // per-channel == per-transition on every trajectory
    std::size_t total_jumps = 0;
    std::vector<TrajectoryRecord> records;
};

namespace detail {

inline double sample_variance(const std::vector<double>& x) {
    const auto n = static_cast<double>(x.size());
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= n;
    double s = 0.0;
    for (double v : x) s += (v - mean) * (v - mean);
    return s / (n - 1.0);
}

inline double ols_slope(const std::vector<double>& t, const std::vector<double>& y) {
    const auto n = static_cast<double>(t.size());
    double mt = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        mt += t[i];
        my += y[i];
    }
    mt /= n;
    my /= n;
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        sxy += (t[i] - mt) * (y[i] - my);
        sxx += (t[i] - mt) * (t[i] - mt);
    }
    return sxy / sxx;
}

}  // namespace detail

/// Runs n_traj trajectories. Trajectory i draws its initial memory from the
/// memory distribution of `initial` and starts in the matching conditional
/// state; stream i depends only on (master_seed, i).
inline McEstimate mc_estimate(const FeedbackModel& model_in, const CountingWeights& w, const HybridState& initial,
                              const McOptions& opt) {
    const FeedbackModel model = validate(model_in);
    const std::size_t n = model.size();
    w.check(n);
    if (opt.n_traj < 2) throw ValidationError("mc_estimate: at least two trajectories are required");
    if (!(opt.horizon > 0.0)) throw ValidationError("mc_estimate: horizon must be positive");
    if (opt.burn_in < 0.0) throw ValidationError("mc_estimate: burn-in must be non-negative");
    if (opt.checkpoints < 2) throw ValidationError("mc_estimate: at least two checkpoints are required");
    detail::check_initial(model, initial);
    const Marginals marg = marginals(initial);

    std::vector<double> times;
    for (std::size_t c = 0; c < opt.checkpoints; ++c) {
        times.push_back(opt.horizon * (0.5 + 0.5 * static_cast<double>(c) / static_cast<double>(opt.checkpoints - 1)));
    }
    const bool resolved = w.channel_resolved();
    const std::vector<double> nu = resolved ? w.channel_weights() : std::vector<double>{};

    struct Sample {
        std::vector<double> charges;  // at each checkpoint, last = horizon
        std::size_t final_memory = 0;
        std::size_t jumps = 0;
        bool consistent = true;
        TrajectoryRecord record;
    };
    std::vector<Sample> samples(opt.n_traj);
    const double t0 = opt.burn_in;
    parallel_for(
        opt.n_traj,
        [&](std::size_t i) {
            RngStream rng(opt.master_seed, i);
            const double u = rng.uniform();
            std::size_t k0 = n - 1;
            double acc = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                acc += marg.memory_dist[k];
                if (u < acc && marg.memory_dist[k] > 0.0) {
                    k0 = k;
                    break;
                }
            }
            while (!marg.conditional[k0]) --k0;
            TrajectoryRecord rec = sample_trajectory(model, *marg.conditional[k0], k0, t0 + opt.horizon,
                                                     opt.scheme, rng);
            Sample s;
            for (double tc : times) s.charges.push_back(rec.charge(w, t0 + tc, t0));
            if (resolved) {
                for (double tc : times) {
                    if (rec.channel_charge(nu, t0 + tc, t0) != rec.charge(w, t0 + tc, t0)) s.consistent = false;
                }
            }
            s.final_memory = rec.final_memory();
            s.jumps = rec.jumps();
            if (opt.keep_records) s.record = std::move(rec);
            samples[i] = std::move(s);
        },
        opt.threads);

    McEstimate est;
    est.n_traj = opt.n_traj;
    est.seed = opt.master_seed;
    est.horizon = opt.horizon;
    est.checkpoint_times = times;
    const auto nt = static_cast<double>(opt.n_traj);

    std::vector<double> final_charges;
    for (const auto& s : samples) final_charges.push_back(s.charges.back());
    double mean = 0.0;
    for (double v : final_charges) mean += v;
    mean /= nt;
    const double var = detail::sample_variance(final_charges);
    double m4 = 0.0;
    for (double v : final_charges) m4 += std::pow(v - mean, 4);
    m4 /= nt;
    est.mean_charge = mean;
    est.mean_charge_se = std::sqrt(var / nt);
    est.var_charge = var;
    est.var_charge_se = std::sqrt(std::max(0.0, (m4 - var * var * (nt - 3.0) / (nt - 1.0)) / nt));
    est.current = mean / opt.horizon;
    est.current_se = est.mean_charge_se / opt.horizon;

    est.memory_freq.assign(n, 0.0);
    for (const auto& s : samples) est.memory_freq[s.final_memory] += 1.0;
    for (auto& f : est.memory_freq) {
        f /= nt;
        est.memory_freq_se.push_back(std::sqrt(f * (1.0 - f) / nt));
    }

    auto checkpoint_variances = [&](std::size_t skip_group, std::size_t groups) {
        std::vector<double> v;
        for (std::size_t c = 0; c < times.size(); ++c) {
            std::vector<double> x;
            for (std::size_t i = 0; i < samples.size(); ++i) {
                if (groups > 0 && i % groups == skip_group) continue;
                x.push_back(samples[i].charges[c]);
            }
            v.push_back(detail::sample_variance(x));
        }
        return v;
    };
    for (std::size_t c = 0; c < times.size(); ++c) {
        double m = 0.0;
        for (const auto& s : samples) m += s.charges[c];
        est.checkpoint_mean.push_back(m / nt);
    }
    est.checkpoint_var = checkpoint_variances(0, 0);
    est.noise = detail::ols_slope(times, est.checkpoint_var);

    const std::size_t groups = std::min(opt.jackknife_groups, opt.n_traj / 2);
    if (groups >= 2) {
        std::vector<double> slopes;
        for (std::size_t g = 0; g < groups; ++g) slopes.push_back(detail::ols_slope(times, checkpoint_variances(g, groups)));
        double ms = 0.0;
        for (double s : slopes) ms += s;
        ms /= static_cast<double>(groups);
        double ss = 0.0;
        for (double s : slopes) ss += (s - ms) * (s - ms);
        est.noise_se = std::sqrt(ss * static_cast<double>(groups - 1) / static_cast<double>(groups));
    }

    if (resolved) {
        est.charges_consistent = std::all_of(samples.begin(), samples.end(), [](const Sample& s) { return s.consistent; });
    }
    for (auto& s : samples) {
        est.total_jumps += s.jumps;
        if (opt.keep_records) est.records.push_back(std::move(s.record));
    }
    return est;
}

/// Same system state in every memory sector, memory drawn from memory0.
inline McEstimate mc_estimate(const FeedbackModel& model, const CountingWeights& w, const Matrix& rho0,
                              const std::vector<double>& memory0, const McOptions& opt) {
    return mc_estimate(model, w, embed(memory0, std::vector<Matrix>(memory0.size(), rho0)), opt);
}

/// One row per recorded jump: trajectory_id, time, channel_label, memory_before, charge_after.
inline void write_trajectory_csv(std::ostream& out, const std::vector<TrajectoryRecord>& records,
                                 const FeedbackModel& model, const CountingWeights& w) {
    CsvWriter csv(out);
    csv.header({"trajectory_id", "time", "channel_label", "memory_before", "charge_after"});
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        double charge = 0.0;
        for (std::size_t j = 0; j < r.jumps(); ++j) {
            charge += w.weight(r.jump_channels[j], r.memory_before[j]);
            csv.row_strings({std::to_string(i), format_number(r.jump_times[j]), model.channels[r.jump_channels[j]].label,
                             model.channels[r.memory_before[j]].label, format_number(charge)});
        }
    }
}

}  // namespace jumpfb
