// config.hpp: JSON run descriptions (model, weights, initial state, task,
// output) with strict validation and a canonical echo.

#pragma once

#include "jumpfb/models.hpp"
#include "jumpfb/trajectories.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace jumpfb::config {

using Json = nlohmann::json;

/// Malformed or inconsistent configuration. `where` is the dotted field path
/// (or "line L, column C" for syntax errors).
class ConfigError : public ValidationError {
public:
    ConfigError(std::string where, const std::string& what)
        : ValidationError(where + ": " + what), where_(std::move(where)) {}
    const std::string& where() const noexcept { return where_; }

private:
    std::string where_;
};

// --------------------------------------------------------------------------
// Field helpers
// --------------------------------------------------------------------------

namespace detail {

inline std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

inline void require_object(const Json& j, const std::string& path) {
    if (!j.is_object()) throw ConfigError(path, "expected an object");
}

inline void allow_keys(const Json& j, const std::string& path, std::initializer_list<const char*> allowed) {
    require_object(j, path);
    for (const auto& [key, _] : j.items()) {
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
            throw ConfigError(join(path, key), "unknown field");
        }
    }
}

inline double number(const Json& j, const std::string& path) {
    if (!j.is_number()) throw ConfigError(path, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw ConfigError(path, "expected a finite number");
    return v;
}

inline std::uint64_t unsigned_integer(const Json& j, const std::string& path) {
    if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0)) {
        throw ConfigError(path, "expected a non-negative integer");
    }
    return j.get<std::uint64_t>();
}

inline std::string string(const Json& j, const std::string& path) {
    if (!j.is_string()) throw ConfigError(path, "expected a string");
    return j.get<std::string>();
}

inline bool boolean(const Json& j, const std::string& path) {
    if (!j.is_boolean()) throw ConfigError(path, "expected true or false");
    return j.get<bool>();
}

inline const Json& required(const Json& j, const std::string& path, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) throw ConfigError(join(path, key), "required field is missing");
    return *it;
}

inline Complex complex_entry(const Json& j, const std::string& path) {
    if (j.is_number()) return {number(j, path), 0.0};
    if (j.is_array() && j.size() == 2) return {number(j[0], path + "[0]"), number(j[1], path + "[1]")};
    throw ConfigError(path, "expected a number or an [re, im] pair");
}

inline Matrix matrix(const Json& j, Index dim, const std::string& path) {
    if (!j.is_array() || static_cast<Index>(j.size()) != dim) {
        throw ConfigError(path, "expected " + std::to_string(dim) + " rows");
    }
    Matrix m(dim, dim);
    for (Index r = 0; r < dim; ++r) {
        const auto& row = j[static_cast<std::size_t>(r)];
        const std::string rp = path + "[" + std::to_string(r) + "]";
        if (!row.is_array() || static_cast<Index>(row.size()) != dim) {
            throw ConfigError(rp, "expected " + std::to_string(dim) + " entries");
        }
        for (Index c = 0; c < dim; ++c) {
            m(r, c) = complex_entry(row[static_cast<std::size_t>(c)], rp + "[" + std::to_string(c) + "]");
        }
    }
    return m;
}

inline Json matrix_json(const Matrix& m) {
    Json rows = Json::array();
    for (Index r = 0; r < m.rows(); ++r) {
        Json row = Json::array();
        for (Index c = 0; c < m.cols(); ++c) row.push_back(Json::array({m(r, c).real(), m(r, c).imag()}));
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace detail

/// A list of numbers, or one of {"linspace": {start, stop, num}},
/// {"logspace": {start, stop, num}} (base-10 exponents) and
/// {"range": {start, stop, step}} (stop included up to rounding).
inline std::vector<double> parse_grid(const Json& j, const std::string& path) {
    using namespace detail;
    std::vector<double> out;
    if (j.is_array()) {
        for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], path + "[" + std::to_string(i) + "]"));
    } else if (j.is_object() && j.size() == 1) {
        const auto& [kind, spec] = *j.items().begin();
        const std::string sp = join(path, kind);
        if (kind == "linspace" || kind == "logspace") {
            allow_keys(spec, sp, {"start", "stop", "num"});
            const double a = number(required(spec, sp, "start"), join(sp, "start"));
            const double b = number(required(spec, sp, "stop"), join(sp, "stop"));
            const auto n = unsigned_integer(required(spec, sp, "num"), join(sp, "num"));
            for (std::uint64_t i = 0; i < n; ++i) {
                const double x = n == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
                out.push_back(kind == "linspace" ? x : std::pow(10.0, x));
            }
        } else if (kind == "range") {
            allow_keys(spec, sp, {"start", "stop", "step"});
            const double a = number(required(spec, sp, "start"), join(sp, "start"));
            const double b = number(required(spec, sp, "stop"), join(sp, "stop"));
            const double h = number(required(spec, sp, "step"), join(sp, "step"));
            if (!(h > 0.0)) throw ConfigError(join(sp, "step"), "must be positive");
            const auto n = static_cast<std::uint64_t>(std::floor((b - a) / h + 1e-9));
            if (b >= a) {
                for (std::uint64_t i = 0; i <= n; ++i) out.push_back(a + h * static_cast<double>(i));
            }
        } else {
            throw ConfigError(path, "unknown grid kind '" + kind + "'");
        }
    } else {
        throw ConfigError(path, "expected an array of numbers or a linspace/logspace/range object");
    }
    if (out.empty()) throw ConfigError(path, "grid is empty");
    return out;
}

// --------------------------------------------------------------------------
// Model
// --------------------------------------------------------------------------

struct ModelConfig {
    std::string builtin;  // "qubit_cooling", "maser", "poisson"; empty for an explicit model
    QubitParams qubit;
    MaserParams maser;
    double poisson_rate = 1.0;
    std::optional<double> gr_factor;  // maser: gr = gr_factor * gl when set
    FeedbackModel explicit_model;

    bool is_explicit() const { return builtin.empty(); }

    FeedbackModel build() const {
        if (builtin == "qubit_cooling") return qubit_cooling_model(qubit);
        if (builtin == "maser") return maser_model(resolved_maser());
        if (builtin == "poisson") return poisson_model(poisson_rate);
        return validate(explicit_model);
    }

    MaserParams resolved_maser() const {
        MaserParams p = maser;
        if (gr_factor) p.gr = *gr_factor * p.gl;
        return p;
    }

    std::vector<std::string> labels() const {
        if (builtin == "qubit_cooling") return {"-1", "+1"};
        if (builtin == "maser") return maser_labels();
        if (builtin == "poisson") return {"emit"};
        return explicit_model.labels();
    }

    Index dim() const {
        if (builtin == "qubit_cooling") return 2;
        if (builtin == "maser") return 3;
        if (builtin == "poisson") return 1;
        return explicit_model.dim;
    }

    /// Names accepted by set() with a numeric value.
    std::vector<std::string> numeric_parameters() const {
        if (builtin == "qubit_cooling") return {"nbar", "gamma", "lam", "delta"};
        if (builtin == "maser") return {"nl", "nr", "gl", "gr", "gamma", "gr_factor", "lam", "delta", "wl", "wr"};
        if (builtin == "poisson") return {"gamma"};
        return {};
    }

    void set(const std::string& name, const Json& v, const std::string& path) {
        using namespace detail;
        if (builtin == "qubit_cooling") {
            if (name == "nbar") return void(qubit.nbar = number(v, path));
            if (name == "gamma") return void(qubit.gamma = number(v, path));
            if (name == "lam") return void(qubit.lam = number(v, path));
            if (name == "delta") return void(qubit.delta = number(v, path));
            if (name == "mode") {
                const auto s = string(v, path);
                if (s == "feedback") return void(qubit.mode = DriveMode::feedback);
                if (s == "always_on") return void(qubit.mode = DriveMode::always_on);
                if (s == "off") return void(qubit.mode = DriveMode::off);
                throw ConfigError(path, "mode must be feedback, always_on or off");
            }
        } else if (builtin == "maser") {
            if (name == "nl") return void(maser.nl = number(v, path));
            if (name == "nr") return void(maser.nr = number(v, path));
            if (name == "gl") return void(maser.gl = number(v, path));
            if (name == "gr") return void(maser.gr = number(v, path));
            if (name == "gamma") {
                maser.gl = maser.gr = number(v, path);
                return;
            }
            if (name == "gr_factor") return void(gr_factor = number(v, path));
            if (name == "lam") return void(maser.lam = number(v, path));
            if (name == "delta") return void(maser.delta = number(v, path));
            if (name == "wl") return void(maser.wl = number(v, path));
            if (name == "wr") return void(maser.wr = number(v, path));
            if (name == "feedback") return void(maser.feedback = boolean(v, path));
            if (name == "variant") {
                const auto s = string(v, path);
                if (s == "quantum") return void(maser.variant = MaserVariant::quantum);
                if (s == "classical") return void(maser.variant = MaserVariant::classical);
                throw ConfigError(path, "variant must be quantum or classical");
            }
        } else if (builtin == "poisson") {
            if (name == "gamma") return void(poisson_rate = number(v, path));
        } else {
            throw ConfigError(path, "explicit models have no named parameters");
        }
        throw ConfigError(path, "unknown parameter '" + name + "' for model " + builtin);
    }

    Json to_json() const {
        Json p = Json::object();
        if (builtin == "qubit_cooling") {
            p = {{"nbar", qubit.nbar}, {"gamma", qubit.gamma}, {"lam", qubit.lam}, {"delta", qubit.delta},
                 {"mode", to_string(qubit.mode)}};
        } else if (builtin == "maser") {
            p = {{"nl", maser.nl}, {"nr", maser.nr}, {"gl", maser.gl}, {"gr", maser.gr}, {"lam", maser.lam},
                 {"delta", maser.delta}, {"wl", maser.wl}, {"wr", maser.wr}, {"variant", to_string(maser.variant)},
                 {"feedback", maser.feedback}};
            if (gr_factor) p["gr_factor"] = *gr_factor;
        } else if (builtin == "poisson") {
            p = {{"gamma", poisson_rate}};
        } else {
            const auto& m = explicit_model;
            Json h = Json::object();
            Json jumps = Json::object();
            Json silent = Json::object();
            for (std::size_t q = 0; q < m.size(); ++q) {
                const auto& lq = m.channels[q].label;
                h[lq] = detail::matrix_json(m.hamiltonians[q]);
                for (std::size_t k = 0; k < m.size(); ++k) jumps[lq][m.channels[k].label] = detail::matrix_json(m.jump(q, k));
                if (q < m.silent_ops.size() && !m.silent_ops[q].empty()) {
                    for (const auto& s : m.silent_ops[q]) silent[lq].push_back(detail::matrix_json(s));
                }
            }
            Json e = {{"dim", m.dim}, {"channels", m.labels()}, {"hamiltonians", h}, {"jump_ops", jumps}};
            if (!silent.empty()) e["silent_ops"] = silent;
            return {{"explicit", e}};
        }
        return {{"builtin", builtin}, {"params", p}};
    }
};

namespace detail {

inline FeedbackModel parse_explicit(const Json& e, const std::string& path) {
    allow_keys(e, path, {"dim", "channels", "hamiltonians", "jump_ops", "silent_ops"});
    FeedbackModel m;
    const auto d = unsigned_integer(required(e, path, "dim"), join(path, "dim"));
    if (d == 0) throw ConfigError(join(path, "dim"), "must be positive");
    m.dim = static_cast<Index>(d);

    const auto& ch = required(e, path, "channels");
    if (!ch.is_array() || ch.empty()) throw ConfigError(join(path, "channels"), "expected a nonempty list of labels");
    std::vector<std::string> labels;
    std::set<std::string> seen;
    for (std::size_t i = 0; i < ch.size(); ++i) {
        labels.push_back(string(ch[i], join(path, "channels") + "[" + std::to_string(i) + "]"));
        if (!seen.insert(labels.back()).second) throw ConfigError(join(path, "channels"), "duplicate label " + labels.back());
    }
    m.channels = make_channels(labels);
    const std::size_t n = labels.size();
    auto label_index = [&](const std::string& label, const std::string& p) {
        auto it = std::find(labels.begin(), labels.end(), label);
        if (it == labels.end()) throw ConfigError(p, "unknown channel label '" + label + "'");
        return static_cast<std::size_t>(it - labels.begin());
    };

    const std::string hp = join(path, "hamiltonians");
    const auto& h = required(e, path, "hamiltonians");
    require_object(h, hp);
    m.hamiltonians.assign(n, Matrix::Zero(m.dim, m.dim));
    for (const auto& [label, mat] : h.items()) {
        m.hamiltonians[label_index(label, join(hp, label))] = matrix(mat, m.dim, join(hp, label));
    }
    for (const auto& label : labels) {
        if (!h.contains(label)) throw ConfigError(join(hp, label), "missing Hamiltonian for memory value");
    }

    // jump_ops[q][k]; entries not listed are zero
    const std::string jp = join(path, "jump_ops");
    const auto& jumps = required(e, path, "jump_ops");
    require_object(jumps, jp);
    m.jump_ops.assign(n, std::vector<Matrix>(n, Matrix::Zero(m.dim, m.dim)));
    for (const auto& [ql, row] : jumps.items()) {
        const std::size_t q = label_index(ql, join(jp, ql));
        require_object(row, join(jp, ql));
        for (const auto& [kl, mat] : row.items()) {
            const std::string p = join(join(jp, ql), kl);
            m.jump_ops[q][label_index(kl, p)] = matrix(mat, m.dim, p);
        }
    }

    m.silent_ops.assign(n, {});
    if (auto it = e.find("silent_ops"); it != e.end()) {
        const std::string sp = join(path, "silent_ops");
        require_object(*it, sp);
        for (const auto& [ql, list] : it->items()) {
            const std::size_t q = label_index(ql, join(sp, ql));
            if (!list.is_array()) throw ConfigError(join(sp, ql), "expected a list of matrices");
            for (std::size_t i = 0; i < list.size(); ++i) {
                m.silent_ops[q].push_back(matrix(list[i], m.dim, join(sp, ql) + "[" + std::to_string(i) + "]"));
            }
        }
    }
    try {
        return validate(std::move(m));
    } catch (const Error& err) {
        throw ConfigError(path, err.what());
    }
}

}  // namespace detail

inline ModelConfig parse_model(const Json& j, const std::string& path = "model") {
    using namespace detail;
    allow_keys(j, path, {"builtin", "params", "explicit"});
    const bool has_builtin = j.contains("builtin");
    const bool has_explicit = j.contains("explicit");
    if (has_builtin == has_explicit) throw ConfigError(path, "exactly one of 'builtin' or 'explicit' is required");
    ModelConfig m;
    if (has_explicit) {
        if (j.contains("params")) throw ConfigError(join(path, "params"), "only valid with a builtin model");
        m.explicit_model = parse_explicit(j["explicit"], join(path, "explicit"));
        return m;
    }
    m.builtin = string(j["builtin"], join(path, "builtin"));
    if (m.builtin != "qubit_cooling" && m.builtin != "maser" && m.builtin != "poisson") {
        throw ConfigError(join(path, "builtin"), "unknown builtin '" + m.builtin + "' (qubit_cooling, maser, poisson)");
    }
    if (auto it = j.find("params"); it != j.end()) {
        const std::string pp = join(path, "params");
        require_object(*it, pp);
        if (m.builtin == "maser" && it->contains("gamma") && (it->contains("gl") || it->contains("gr"))) {
            throw ConfigError(pp, "'gamma' sets both gl and gr and cannot be combined with them");
        }
        for (const auto& [key, v] : it->items()) m.set(key, v, join(pp, key));
    }
    try {
        (void)m.build();
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& err) {
        throw ConfigError(path, err.what());
    }
    return m;
}

// --------------------------------------------------------------------------
// Weights and initial state
// --------------------------------------------------------------------------

struct WeightsConfig {
    enum class Kind { ones, work, matrix };
    Kind kind = Kind::ones;
    RealMatrix per_transition;  // Kind::matrix only

    CountingWeights resolve(const ModelConfig& model) const {
        const std::size_t n = model.labels().size();
        switch (kind) {
            case Kind::ones: return CountingWeights::ones(n);
            case Kind::work: return work_weights(model.resolved_maser());
            case Kind::matrix: break;
        }
        return {per_transition};
    }

    Json to_json() const {
        if (kind == Kind::ones) return "ones";
        if (kind == Kind::work) return "work";
        Json rows = Json::array();
        for (Index k = 0; k < per_transition.rows(); ++k) {
            Json row = Json::array();
            for (Index q = 0; q < per_transition.cols(); ++q) row.push_back(per_transition(k, q));
            rows.push_back(std::move(row));
        }
        return {{"per_transition", rows}};
    }
};

/// "ones", "work" (maser only), {"per_channel": {label: nu}} with missing
/// labels at zero, or {"per_transition": rows k of columns q} where row k is
/// the fired channel and column q the memory value.
inline WeightsConfig parse_weights(const Json* j, const ModelConfig& model, const std::string& path = "weights") {
    using namespace detail;
    WeightsConfig w;
    if (j == nullptr) {
        w.kind = model.builtin == "maser" ? WeightsConfig::Kind::work : WeightsConfig::Kind::ones;
        return w;
    }
    const auto labels = model.labels();
    const auto n = static_cast<Index>(labels.size());
    if (j->is_string()) {
        const auto s = j->get<std::string>();
        if (s == "ones") return w;
        if (s == "work") {
            if (model.builtin != "maser") throw ConfigError(path, "'work' weights are defined for the maser only");
            w.kind = WeightsConfig::Kind::work;
            return w;
        }
        throw ConfigError(path, "expected 'ones', 'work', per_channel or per_transition");
    }
    allow_keys(*j, path, {"per_channel", "per_transition"});
    if (j->size() != 1) throw ConfigError(path, "give exactly one of per_channel or per_transition");
    w.kind = WeightsConfig::Kind::matrix;
    w.per_transition = RealMatrix::Zero(n, n);
    if (auto it = j->find("per_channel"); it != j->end()) {
        const std::string pp = join(path, "per_channel");
        require_object(*it, pp);
        for (const auto& [label, v] : it->items()) {
            auto pos = std::find(labels.begin(), labels.end(), label);
            if (pos == labels.end()) throw ConfigError(join(pp, label), "unknown channel label '" + label + "'");
            w.per_transition.row(pos - labels.begin()).setConstant(number(v, join(pp, label)));
        }
        return w;
    }
    const auto& rows = (*j)["per_transition"];
    const std::string pp = join(path, "per_transition");
    if (!rows.is_array() || static_cast<Index>(rows.size()) != n) {
        throw ConfigError(pp, "expected " + std::to_string(n) + " rows (one per fired channel)");
    }
    for (Index k = 0; k < n; ++k) {
        const auto& row = rows[static_cast<std::size_t>(k)];
        const std::string rp = pp + "[" + std::to_string(k) + "]";
        if (!row.is_array() || static_cast<Index>(row.size()) != n) {
            throw ConfigError(rp, "expected " + std::to_string(n) + " entries (one per memory value)");
        }
        for (Index q = 0; q < n; ++q) {
            w.per_transition(k, q) = number(row[static_cast<std::size_t>(q)], rp + "[" + std::to_string(q) + "]");
        }
    }
    return w;
}

struct InitialConfig {
    bool stationary = false;
    std::vector<double> memory;
    std::string state_name;  // empty when given as a matrix
    Matrix state;

    HybridState hybrid() const { return embed(memory, std::vector<Matrix>(memory.size(), state)); }

    Json to_json(const std::vector<std::string>& labels) const {
        if (stationary) return "stationary";
        Json mem = Json::object();
        for (std::size_t k = 0; k < memory.size(); ++k) mem[labels[k]] = memory[k];
        return {{"memory", mem}, {"state", state_name.empty() ? detail::matrix_json(state) : Json(state_name)}};
    }
};

/// Named states: "ground" (basis 0), "excited" (last basis state),
/// "maximally_mixed" and "basis:<i>".
inline Matrix named_state(const std::string& name, Index d, const std::string& path) {
    if (name == "ground") return ket_bra(d, 0, 0);
    if (name == "excited") return ket_bra(d, d - 1, d - 1);
    if (name == "maximally_mixed") return Matrix::Identity(d, d) / static_cast<double>(d);
    if (name.rfind("basis:", 0) == 0) {
        try {
            std::size_t used = 0;
            const long i = std::stol(name.substr(6), &used);
            if (used == name.size() - 6 && i >= 0 && i < d) return ket_bra(d, i, i);
        } catch (const std::exception&) {
        }
        throw ConfigError(path, "basis index out of range in '" + name + "'");
    }
    throw ConfigError(path, "unknown state '" + name + "' (ground, excited, maximally_mixed, basis:<i>)");
}

inline InitialConfig parse_initial(const Json& j, const ModelConfig& model, const std::string& path = "initial") {
    using namespace detail;
    InitialConfig init;
    if (j.is_string() && j.get<std::string>() == "stationary") {
        init.stationary = true;
        return init;
    }
    allow_keys(j, path, {"memory", "state"});
    const auto labels = model.labels();
    const std::string mp = join(path, "memory");
    const auto& mem = required(j, path, "memory");
    init.memory.assign(labels.size(), 0.0);
    if (mem.is_string()) {
        const auto label = mem.get<std::string>();
        auto pos = std::find(labels.begin(), labels.end(), label);
        if (pos == labels.end()) throw ConfigError(mp, "unknown channel label '" + label + "'");
        init.memory[static_cast<std::size_t>(pos - labels.begin())] = 1.0;
    } else {
        require_object(mem, mp);
        for (const auto& [label, v] : mem.items()) {
            auto pos = std::find(labels.begin(), labels.end(), label);
            if (pos == labels.end()) throw ConfigError(join(mp, label), "unknown channel label '" + label + "'");
            const double p = number(v, join(mp, label));
            if (p < 0.0) throw ConfigError(join(mp, label), "probability must be >= 0");
            init.memory[static_cast<std::size_t>(pos - labels.begin())] = p;
        }
        double total = 0.0;
        for (double p : init.memory) total += p;
        if (std::abs(total - 1.0) > 1e-10) throw ConfigError(mp, "probabilities must sum to 1");
    }
    const std::string sp = join(path, "state");
    const auto& st = required(j, path, "state");
    if (st.is_string()) {
        init.state_name = st.get<std::string>();
        init.state = named_state(init.state_name, model.dim(), sp);
    } else {
        init.state = matrix(st, model.dim(), sp);
        if (!is_density(init.state)) throw ConfigError(sp, "not a density matrix");
    }
    return init;
}

// --------------------------------------------------------------------------
// Task and output
// --------------------------------------------------------------------------

struct Series {
    std::string name;
    Json set = Json::object();  // parameter overrides

    friend bool operator==(const Series&, const Series&) = default;
};

struct TaskConfig {
    std::string kind = "steady";
    // evolve
    std::vector<double> times;
    std::string method = "extended";  // or "ode"
    // correlation, spectrum
    std::vector<double> taus;
    std::vector<double> omegas;
    // noise
    bool checks = false;
    // trajectories
    std::size_t n_traj = 10000;
    std::uint64_t seed = 0;
    double horizon = 0.0;
    double burn_in = 0.0;
    std::string scheme = "waiting_time";  // or "fixed_step"
    double dt = 0.0;
    bool dump = false;
    // sweep
    std::string parameter;
    std::vector<double> values;
    std::string of = "steady";  // steady | power | noise
    std::vector<std::string> observables;
    std::vector<Series> series;
    std::string file = "sweep.csv";

    Json to_json() const {
        Json j = {{"kind", kind}};
        if (kind == "evolve") {
            j["times"] = times;
            j["method"] = method;
        } else if (kind == "correlation") {
            j["taus"] = taus;
        } else if (kind == "spectrum") {
            j["omegas"] = omegas;
        } else if (kind == "noise") {
            j["checks"] = checks;
        } else if (kind == "trajectories") {
            j["n_traj"] = n_traj;
            j["seed"] = seed;
            j["horizon"] = horizon;
            j["burn_in"] = burn_in;
            j["scheme"] = scheme;
            if (scheme == "fixed_step") j["dt"] = dt;
            j["dump"] = dump;
        } else if (kind == "sweep") {
            j["parameter"] = parameter;
            j["values"] = values;
            j["of"] = of;
            j["observables"] = observables;
            Json s = Json::array();
            for (const auto& e : series) s.push_back({{"name", e.name}, {"set", e.set}});
            j["series"] = s;
            j["file"] = file;
        }
        return j;
    }
};

/// Observable names available per model point: P(<label>) for the memory
/// distribution, rho_<i><i> populations, re_rho_<i><j> and im_rho_<i><j>
/// coherences (i < j), and the stationary cumulants J, K, D.
inline std::vector<std::string> steady_columns(const std::vector<std::string>& labels, Index d) {
    std::vector<std::string> cols;
    for (const auto& l : labels) cols.push_back("P(" + l + ")");
    for (Index i = 0; i < d; ++i) cols.push_back("rho_" + std::to_string(i) + std::to_string(i));
    for (Index i = 0; i < d; ++i) {
        for (Index j = i + 1; j < d; ++j) {
            cols.push_back("re_rho_" + std::to_string(i) + std::to_string(j));
            cols.push_back("im_rho_" + std::to_string(i) + std::to_string(j));
        }
    }
    return cols;
}

inline TaskConfig parse_task(const Json& j, const ModelConfig& model, const std::string& path = "task") {
    using namespace detail;
    require_object(j, path);
    TaskConfig t;
    t.kind = string(required(j, path, "kind"), join(path, "kind"));
    if (t.kind == "steady") {
        allow_keys(j, path, {"kind"});
    } else if (t.kind == "evolve") {
        allow_keys(j, path, {"kind", "times", "method"});
        t.times = parse_grid(required(j, path, "times"), join(path, "times"));
        for (std::size_t i = 0; i < t.times.size(); ++i) {
            if (t.times[i] < 0.0 || (i > 0 && !(t.times[i] > t.times[i - 1]))) {
                throw ConfigError(join(path, "times"), "times must be >= 0 and strictly increasing");
            }
        }
        if (j.contains("method")) t.method = string(j["method"], join(path, "method"));
        if (t.method != "extended" && t.method != "ode") throw ConfigError(join(path, "method"), "must be extended or ode");
    } else if (t.kind == "correlation") {
        allow_keys(j, path, {"kind", "taus"});
        t.taus = parse_grid(required(j, path, "taus"), join(path, "taus"));
        for (std::size_t i = 0; i < t.taus.size(); ++i) {
            if (!(t.taus[i] > 0.0) || (i > 0 && !(t.taus[i] > t.taus[i - 1]))) {
                throw ConfigError(join(path, "taus"), "taus must be positive and strictly increasing");
            }
        }
    } else if (t.kind == "spectrum") {
        allow_keys(j, path, {"kind", "omegas"});
        t.omegas = parse_grid(required(j, path, "omegas"), join(path, "omegas"));
    } else if (t.kind == "noise") {
        allow_keys(j, path, {"kind", "checks"});
        if (j.contains("checks")) t.checks = boolean(j["checks"], join(path, "checks"));
    } else if (t.kind == "trajectories") {
        allow_keys(j, path, {"kind", "n_traj", "seed", "horizon", "burn_in", "scheme", "dt", "dump"});
        if (j.contains("n_traj")) t.n_traj = unsigned_integer(j["n_traj"], join(path, "n_traj"));
        if (t.n_traj < 2) throw ConfigError(join(path, "n_traj"), "at least 2 trajectories are required");
        if (j.contains("seed")) t.seed = unsigned_integer(j["seed"], join(path, "seed"));
        t.horizon = number(required(j, path, "horizon"), join(path, "horizon"));
        if (!(t.horizon > 0.0)) throw ConfigError(join(path, "horizon"), "must be positive");
        if (j.contains("burn_in")) t.burn_in = number(j["burn_in"], join(path, "burn_in"));
        if (t.burn_in < 0.0) throw ConfigError(join(path, "burn_in"), "must be >= 0");
        if (j.contains("scheme")) t.scheme = string(j["scheme"], join(path, "scheme"));
        if (t.scheme == "fixed_step") {
            t.dt = number(required(j, path, "dt"), join(path, "dt"));
            if (!(t.dt > 0.0)) throw ConfigError(join(path, "dt"), "must be positive");
        } else if (t.scheme != "waiting_time") {
            throw ConfigError(join(path, "scheme"), "must be waiting_time or fixed_step");
        } else if (j.contains("dt")) {
            throw ConfigError(join(path, "dt"), "only valid with the fixed_step scheme");
        }
        if (j.contains("dump")) t.dump = boolean(j["dump"], join(path, "dump"));
    } else if (t.kind == "sweep") {
        allow_keys(j, path, {"kind", "parameter", "values", "of", "observables", "series", "file"});
        t.parameter = string(required(j, path, "parameter"), join(path, "parameter"));
        const auto numeric = model.numeric_parameters();
        if (std::find(numeric.begin(), numeric.end(), t.parameter) == numeric.end()) {
            throw ConfigError(join(path, "parameter"), "unknown numeric parameter '" + t.parameter + "'");
        }
        t.values = parse_grid(required(j, path, "values"), join(path, "values"));
        std::sort(t.values.begin(), t.values.end());
        if (std::adjacent_find(t.values.begin(), t.values.end()) != t.values.end()) {
            throw ConfigError(join(path, "values"), "duplicate sweep value");
        }
        if (j.contains("of")) t.of = string(j["of"], join(path, "of"));
        const auto steady = steady_columns(model.labels(), model.dim());
        if (t.of == "steady") {
            t.observables = steady;
        } else if (t.of == "power") {
            t.observables = {"J"};
        } else if (t.of == "noise") {
            t.observables = {"J", "K", "D"};
        } else {
            throw ConfigError(join(path, "of"), "must be steady, power or noise");
        }
        if (auto it = j.find("observables"); it != j.end()) {
            const std::string op = join(path, "observables");
            if (!it->is_array() || it->empty()) throw ConfigError(op, "expected a nonempty list of names");
            t.observables.clear();
            for (std::size_t i = 0; i < it->size(); ++i) {
                const auto name = string((*it)[i], op + "[" + std::to_string(i) + "]");
                if (name != "J" && name != "K" && name != "D" &&
                    std::find(steady.begin(), steady.end(), name) == steady.end()) {
                    throw ConfigError(op + "[" + std::to_string(i) + "]", "unknown observable '" + name + "'");
                }
                t.observables.push_back(name);
            }
        }
        if (auto it = j.find("series"); it != j.end()) {
            const std::string sp = join(path, "series");
            if (!it->is_array()) throw ConfigError(sp, "expected a list of {name, set}");
            std::set<std::string> names;
            for (std::size_t i = 0; i < it->size(); ++i) {
                const std::string ep = sp + "[" + std::to_string(i) + "]";
                allow_keys((*it)[i], ep, {"name", "set"});
                Series s;
                s.name = string(required((*it)[i], ep, "name"), join(ep, "name"));
                if (s.name.empty() || !names.insert(s.name).second) throw ConfigError(join(ep, "name"), "names must be unique and nonempty");
                if ((*it)[i].contains("set")) {
                    s.set = (*it)[i]["set"];
                    require_object(s.set, join(ep, "set"));
                    ModelConfig probe = model;
                    for (const auto& [key, v] : s.set.items()) {
                        if (key == t.parameter) throw ConfigError(join(join(ep, "set"), key), "cannot override the swept parameter");
                        probe.set(key, v, join(join(ep, "set"), key));
                    }
                }
                t.series.push_back(std::move(s));
            }
        }
        if (j.contains("file")) t.file = string(j["file"], join(path, "file"));
        if (t.file.empty() || t.file.find('/') != std::string::npos || t.file == "report.json") {
            throw ConfigError(join(path, "file"), "must be a plain file name");
        }
    } else {
        throw ConfigError(join(path, "kind"),
                          "unknown task '" + t.kind + "' (steady, evolve, correlation, spectrum, noise, trajectories, sweep)");
    }
    return t;
}

struct OutputConfig {
    std::string directory = "out";
    std::string format = "csv";

    Json to_json() const { return {{"directory", directory}, {"format", format}}; }
};

inline OutputConfig parse_output(const Json* j, const std::string& path = "output") {
    using namespace detail;
    OutputConfig o;
    if (j == nullptr) return o;
    allow_keys(*j, path, {"directory", "format"});
    if (j->contains("directory")) o.directory = string((*j)["directory"], join(path, "directory"));
    if (o.directory.empty()) throw ConfigError(join(path, "directory"), "must not be empty");
    if (j->contains("format")) o.format = string((*j)["format"], join(path, "format"));
    if (o.format != "csv") throw ConfigError(join(path, "format"), "only csv is supported");
    return o;
}

// --------------------------------------------------------------------------
// Whole document
// --------------------------------------------------------------------------

struct RunConfig {
    ModelConfig model;
    WeightsConfig weights;
    std::optional<InitialConfig> initial;
    TaskConfig task;
    OutputConfig output;

    /// Canonical echo: every default filled in, grids expanded, named
    /// parameters in fixed form. Parsing it again yields the same echo.
    Json to_json() const {
        Json j = {{"model", model.to_json()}, {"weights", weights.to_json()}, {"task", task.to_json()},
                  {"output", output.to_json()}};
        if (initial) j["initial"] = initial->to_json(model.labels());
        return j;
    }
};

inline RunConfig parse_config(const Json& j) {
    using namespace detail;
    allow_keys(j, "", {"model", "weights", "initial", "task", "output"});
    RunConfig c;
    c.model = parse_model(required(j, "", "model"));
    c.weights = parse_weights(j.contains("weights") ? &j["weights"] : nullptr, c.model);
    c.task = parse_task(required(j, "", "task"), c.model);
    if (j.contains("initial")) c.initial = parse_initial(j["initial"], c.model);
    if (c.task.kind == "evolve" && (!c.initial || c.initial->stationary)) {
        throw ConfigError("initial", "the evolve task needs an explicit memory distribution and state");
    }
    c.output = parse_output(j.contains("output") ? &j["output"] : nullptr);
    return c;
}

/// Parses JSON text; syntax errors report the line and column.
inline RunConfig parse_config_text(const std::string& text) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::parse_error& err) {
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < err.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ConfigError("line " + std::to_string(line) + ", column " + std::to_string(col), "JSON syntax error");
    }
    return parse_config(j);
}

}  // namespace jumpfb::config
