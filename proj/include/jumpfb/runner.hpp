// runner.hpp: executes a parsed RunConfig and writes the CSV artifacts plus
// a report.json manifest into the output directory.

#pragma once

#include "jumpfb/config.hpp"
#include "jumpfb/csv.hpp"
#include "jumpfb/dynamics.hpp"
#include "jumpfb/parallel.hpp"
#include "jumpfb/version.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace jumpfb::runner {

using config::Json;

struct RunReport {
    Json config;
    std::vector<std::string> files;  // relative to the output directory
    std::filesystem::path directory;
    double wall_time_s = 0.0;
    std::string version = kVersion;

    Json to_json() const {
        return {{"version", version}, {"config", config}, {"files", files}, {"wall_time_s", wall_time_s}};
    }
};

namespace detail {

/// Re-raises library errors with a prefix naming the task or sweep point,
/// keeping the error category.
template <class F>
auto in_context(const std::string& ctx, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const config::ConfigError&) {
        throw;
    } catch (const DegenerateSteadyStateError& e) {
        throw DegenerateSteadyStateError(ctx + ": " + e.what(), e.kernel_dim());
    } catch (const PositivityError& e) {
        throw PositivityError(ctx + ": " + e.what());
    } catch (const NumericalError& e) {
        throw NumericalError(ctx + ": " + e.what());
    } catch (const DimensionError& e) {
        throw DimensionError(ctx + ": " + e.what());
    } catch (const ValidationError& e) {
        throw ValidationError(ctx + ": " + e.what());
    }
}

/// Memory distribution, system populations, then coherences above the diagonal.
inline std::vector<double> steady_values(const HybridState& s) {
    const Marginals m = marginals(s);
    std::vector<double> v(m.memory_dist.begin(), m.memory_dist.end());
    const Index d = s.dim();
    for (Index i = 0; i < d; ++i) v.push_back(m.system(i, i).real());
    for (Index i = 0; i < d; ++i) {
        for (Index j = i + 1; j < d; ++j) {
            v.push_back(m.system(i, j).real());
            v.push_back(m.system(i, j).imag());
        }
    }
    return v;
}

inline std::vector<double> evaluate(const FeedbackModel& model, const CountingWeights& w,
                                    const std::vector<std::string>& observables) {
    const ExtendedGenerator gen = extended_liouvillian(model);
    const HybridState ss = feedback_steady_state(gen);
    const auto names = config::steady_columns(model.labels(), model.dim);
    const auto values = steady_values(ss);
    std::map<std::string, double> cache;
    for (std::size_t i = 0; i < names.size(); ++i) cache[names[i]] = values[i];
    std::vector<double> out;
    for (const auto& o : observables) {
        if (!cache.contains(o)) {
            if (o == "J") cache[o] = average_current(gen, w, ss);
            if (o == "K") cache[o] = singular_weight(gen, w, ss);
            if (o == "D") cache[o] = steady_noise(gen, w, ss);
        }
        out.push_back(cache.at(o));
    }
    return out;
}

class OutputDir {
public:
    OutputDir(std::filesystem::path dir, std::vector<std::string>& manifest) : dir_(std::move(dir)), manifest_(manifest) {
        std::filesystem::create_directories(dir_);
    }

    template <class Fn>
    void write(const std::string& name, Fn&& fill) {
        std::ostringstream buf;
        fill(buf);
        std::ofstream out(dir_ / name, std::ios::binary | std::ios::trunc);
        out << buf.str();
        if (!out) throw Error("cannot write " + (dir_ / name).string());
        manifest_.push_back(name);
    }

    const std::filesystem::path& path() const { return dir_; }

private:
    std::filesystem::path dir_;
    std::vector<std::string>& manifest_;
};

inline void run_steady(const config::RunConfig& cfg, OutputDir& out) {
    const FeedbackModel model = cfg.model.build();
    const auto cols = config::steady_columns(model.labels(), model.dim);
    const auto row = in_context("steady", [&] { return evaluate(model, cfg.weights.resolve(cfg.model), cols); });
    out.write("steady.csv", [&](std::ostream& os) {
        CsvWriter csv(os);
        csv.header(cols);
        csv.row(row);
    });
}

inline void run_evolve(const config::RunConfig& cfg, OutputDir& out) {
    const FeedbackModel model = cfg.model.build();
    const HybridState init = cfg.initial->hybrid();
    const auto result = in_context("evolve", [&] {
        return cfg.task.method == "ode" ? evolve_memory_resolved(model, init, cfg.task.times)
                                        : evolve_extended(extended_liouvillian(model), init, cfg.task.times);
    });
    out.write("evolve.csv", [&](std::ostream& os) {
        CsvWriter csv(os);
        auto cols = config::steady_columns(model.labels(), model.dim);
        cols.insert(cols.begin(), "t");
        csv.header(cols);
        for (std::size_t i = 0; i < result.times.size(); ++i) {
            auto row = steady_values(result.states[i]);
            row.insert(row.begin(), result.times[i]);
            csv.row(row);
        }
    });
}

inline void run_correlation(const config::RunConfig& cfg, OutputDir& out) {
    const auto samples = in_context("correlation", [&] {
        const ExtendedGenerator gen = extended_liouvillian(cfg.model.build());
        return two_point_correlation(gen, cfg.weights.resolve(cfg.model), feedback_steady_state(gen), cfg.task.taus);
    });
    out.write("correlation.csv", [&](std::ostream& os) {
        CsvWriter csv(os);
        csv.header({"tau", "F_smooth"});
        for (std::size_t i = 0; i < samples.taus.size(); ++i) csv.row({samples.taus[i], samples.values[i]});
    });
    out.write("correlation_K.csv", [&](std::ostream& os) {
        CsvWriter csv(os);
        csv.header({"K"});
        csv.row({samples.singular_weight});
    });
}

inline void run_spectrum(const config::RunConfig& cfg, OutputDir& out) {
    const auto samples = in_context("spectrum", [&] {
        const ExtendedGenerator gen = extended_liouvillian(cfg.model.build());
        return power_spectrum(gen, cfg.weights.resolve(cfg.model), feedback_steady_state(gen), cfg.task.omegas);
    });
    out.write("spectrum.csv", [&](std::ostream& os) {
        CsvWriter csv(os);
        csv.header({"omega", "S"});
        for (std::size_t i = 0; i < samples.omegas.size(); ++i) csv.row({samples.omegas[i], samples.values[i]});
    });
}

inline void run_noise(const config::RunConfig& cfg, OutputDir& out) {
    std::vector<std::string> cols{"J", "K", "D"};
    const auto row = in_context("noise", [&] {
        const ExtendedGenerator gen = extended_liouvillian(cfg.model.build());
        const CountingWeights w = cfg.weights.resolve(cfg.model);
        const HybridState ss = feedback_steady_state(gen);
        std::vector<double> r{average_current(gen, w, ss), singular_weight(gen, w, ss), steady_noise(gen, w, ss)};
        if (cfg.task.checks) {
            const TiltedCumulants tc = tilted_cumulants(gen, w);
            r.insert(r.end(), {noise_by_quadrature(gen, w, ss), tc.current, tc.noise});
        }
        return r;
    });
    if (cfg.task.checks) cols.insert(cols.end(), {"D_quadrature", "J_tilted", "D_tilted"});
    out.write("noise.csv", [&](std::ostream& os) {
        CsvWriter csv(os);
        csv.header(cols);
        csv.row(row);
    });
}

inline void run_trajectories(const config::RunConfig& cfg, OutputDir& out) {
    const auto& t = cfg.task;
    const FeedbackModel model = cfg.model.build();
    const CountingWeights w = cfg.weights.resolve(cfg.model);
    const ExtendedGenerator gen = extended_liouvillian(model);
    const HybridState ss = in_context("trajectories", [&] { return feedback_steady_state(gen); });
    const HybridState init = !cfg.initial || cfg.initial->stationary ? ss : cfg.initial->hybrid();

    McOptions opt;
    opt.n_traj = t.n_traj;
    opt.horizon = t.horizon;
    opt.burn_in = t.burn_in;
    opt.scheme = t.scheme == "fixed_step" ? Scheme::fixed_step(t.dt) : Scheme::waiting_time();
    opt.master_seed = t.seed;
    opt.keep_records = t.dump;
    const McEstimate est = in_context("trajectories", [&] { return mc_estimate(model, w, init, opt); });
    const double j_exact = average_current(gen, w, ss);
    const double d_exact = steady_noise(gen, w, ss);

    out.write("mc_summary.csv", [&](std::ostream& os) {
        CsvWriter csv(os);
        std::vector<std::string> head{"n_traj",  "seed",       "horizon",    "burn_in",     "mean_charge",
                                      "mean_charge_se", "var_charge", "var_charge_se", "current", "current_se",
                                      "noise",   "noise_se",   "total_jumps", "charges_consistent"};
        std::vector<std::string> row{std::to_string(est.n_traj), std::to_string(est.seed), format_number(est.horizon),
                                     format_number(t.burn_in), format_number(est.mean_charge),
                                     format_number(est.mean_charge_se), format_number(est.var_charge),
                                     format_number(est.var_charge_se), format_number(est.current),
                                     format_number(est.current_se), format_number(est.noise),
                                     format_number(est.noise_se), std::to_string(est.total_jumps),
                                     est.charges_consistent ? (*est.charges_consistent ? "true" : "false") : "n/a"};
        for (std::size_t k = 0; k < model.size(); ++k) {
            head.push_back("P(" + model.channels[k].label + ")");
            head.push_back("P(" + model.channels[k].label + ")_se");
            row.push_back(format_number(est.memory_freq[k]));
            row.push_back(format_number(est.memory_freq_se[k]));
        }
        head.insert(head.end(), {"J_deterministic", "D_deterministic"});
        row.insert(row.end(), {format_number(j_exact), format_number(d_exact)});
        csv.header(head);
        csv.row_strings(row);
    });
    if (t.dump) {
        out.write("trajectories.csv", [&](std::ostream& os) { write_trajectory_csv(os, est.records, model, w); });
    }
}

/// One row per sweep value (ascending); each series contributes one column
/// per observable, named "<series>:<observable>".
inline void run_sweep(const config::RunConfig& cfg, OutputDir& out) {
    const auto& t = cfg.task;
    const std::size_t n_series = std::max<std::size_t>(1, t.series.size());
    const std::size_t n_obs = t.observables.size();
    std::vector<std::vector<double>> results(t.values.size() * n_series);

    parallel_for(results.size(), [&](std::size_t idx) {
        const std::size_t i = idx / n_series;
        const std::size_t s = idx % n_series;
        config::ModelConfig m = cfg.model;
        std::string ctx = "sweep " + t.parameter + "=" + format_number(t.values[i]);
        if (!t.series.empty()) {
            ctx += " series " + t.series[s].name;
            for (const auto& [key, v] : t.series[s].set.items()) m.set(key, v, "task.series." + key);
        }
        m.set(t.parameter, t.values[i], "task.parameter");
        results[idx] = in_context(ctx, [&] { return evaluate(m.build(), cfg.weights.resolve(m), t.observables); });
    });

    out.write(t.file, [&](std::ostream& os) {
        CsvWriter csv(os);
        std::vector<std::string> head{t.parameter};
        for (std::size_t s = 0; s < n_series; ++s) {
            for (const auto& o : t.observables) head.push_back(t.series.empty() ? o : t.series[s].name + ":" + o);
        }
        csv.header(head);
        for (std::size_t i = 0; i < t.values.size(); ++i) {
            std::vector<double> row{t.values[i]};
            row.reserve(1 + n_series * n_obs);
            for (std::size_t s = 0; s < n_series; ++s) {
                const auto& r = results[i * n_series + s];
                row.insert(row.end(), r.begin(), r.end());
            }
            csv.row(row);
        }
    });
}

}  // namespace detail

/// Runs the task and writes its outputs plus report.json. `directory`
/// overrides cfg.output.directory when nonempty.
inline RunReport run(const config::RunConfig& cfg, const std::filesystem::path& directory = {}) {
    const auto start = std::chrono::steady_clock::now();
    RunReport report;
    report.config = cfg.to_json();
    report.directory = directory.empty() ? std::filesystem::path(cfg.output.directory) : directory;
    detail::OutputDir out(report.directory, report.files);

    const auto& kind = cfg.task.kind;
    if (kind == "steady") {
        detail::run_steady(cfg, out);
    } else if (kind == "evolve") {
        detail::run_evolve(cfg, out);
    } else if (kind == "correlation") {
        detail::run_correlation(cfg, out);
    } else if (kind == "spectrum") {
        detail::run_spectrum(cfg, out);
    } else if (kind == "noise") {
        detail::run_noise(cfg, out);
    } else if (kind == "trajectories") {
        detail::run_trajectories(cfg, out);
    } else if (kind == "sweep") {
        detail::run_sweep(cfg, out);
    } else {
        throw config::ConfigError("task.kind", "unknown task '" + kind + "'");
    }

    report.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::ofstream(report.directory / "report.json", std::ios::binary | std::ios::trunc)
        << report.to_json().dump(2) << '\n';
    return report;
}

}  // namespace jumpfb::runner
