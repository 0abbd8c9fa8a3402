// Flat key = value run configuration: parsing with line-precise errors,
// per-experiment defaults, and canonical serialization for byte-stable
// round trips.

#ifndef MINMAXCBO_CONFIG_HPP
#define MINMAXCBO_CONFIG_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "minmaxcbo/common.hpp"
#include "minmaxcbo/dynamics.hpp"

namespace mmcbo {

enum class Experiment { Decay, Mfl, Lln, Moments, Stability, VerifyAssumptions };

inline const char* to_string(Experiment e) {
    switch (e) {
        case Experiment::Decay: return "decay";
        case Experiment::Mfl: return "mfl";
        case Experiment::Lln: return "lln";
        case Experiment::Moments: return "moments";
        case Experiment::Stability: return "stability";
        case Experiment::VerifyAssumptions: return "verify-assumptions";
    }
    return "?";
}

struct RunConfig {
    Experiment experiment = Experiment::Decay;
    std::string objective = "bilinear-tanh";
    int d1 = 1, d2 = 1;
    std::optional<Vec> shift_x, shift_y;

    CboParams params;  // lambda/sigma/alpha/beta/diffusion/dt/horizon/n_particles/truncation_r
    InitSampler::Kind init_kind = InitSampler::Kind::UniformBox;
    double init_center = 0.0;
    double init_scale = 2.0;

    std::uint64_t seed = 1;
    int n_seeds = 4;
    int record_stride = 1;
    double epsilon_factor = 1e-3;

    std::vector<int> n_grid;
    int m_reference = 0;
    int reps = 20;
    double p_order = 2.0;
    int probe_points = 16;
    int fixed_atoms = 512;
    std::vector<double> p_list{2.0, 4.0};
    int moment_m_factor = 8;
    bool mfl_m_sensitivity = false;

    int stability_trials = 10000;
    int stability_atoms = 16;
    double stability_box = 2.0;

    int va_samples = 100000;
    double va_radius = 10.0;

    InitSampler init_sampler() const { return {init_kind, init_center, init_scale}; }
};

// Defaults that depend on the experiment; user keys override afterwards.
inline RunConfig default_config(Experiment e) {
    RunConfig c;
    c.experiment = e;
    switch (e) {
        case Experiment::Decay:
            c.params.alpha = c.params.beta = 50.0;
            c.params.dt = 0.01;
            c.params.horizon = 2.0;
            c.params.n_particles = 100;
            c.init_kind = InitSampler::Kind::UniformBox;
            c.init_scale = 2.0;
            c.n_seeds = 4;
            break;
        case Experiment::Mfl:
            c.params.alpha = c.params.beta = 2.0;
            c.params.dt = 0.01;
            c.params.horizon = 2.0;
            c.init_kind = InitSampler::Kind::Gaussian;
            c.init_scale = 1.0;
            c.n_grid = {16, 32, 64, 128, 256};
            c.m_reference = 2048;
            c.reps = 20;
            break;
        case Experiment::Lln:
            c.params.alpha = c.params.beta = 2.0;
            c.init_kind = InitSampler::Kind::Gaussian;
            c.init_scale = 1.0;
            c.n_grid = {64, 128, 256, 512, 1024, 2048, 4096};
            c.m_reference = 0;  // auto: 64 * max(n_grid)
            c.reps = 100;
            break;
        case Experiment::Moments:
            c.params.alpha = c.params.beta = 2.0;
            c.params.dt = 0.02;
            c.params.horizon = 1.0;
            c.init_kind = InitSampler::Kind::UniformBox;
            c.init_scale = 1.5;
            c.n_grid = {16, 64, 256, 1024};
            c.n_seeds = 2;
            break;
        case Experiment::Stability:
            c.params.alpha = c.params.beta = 1.0;
            break;
        case Experiment::VerifyAssumptions:
            break;
    }
    return c;
}

namespace detail {

inline std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
    return std::string(s.substr(b, e - b));
}

[[noreturn]] inline void parse_fail(int line_no, const std::string& msg) {
    throw UsageError("config line " + std::to_string(line_no) + ": " + msg);
}

inline double parse_real(const std::string& v, int line_no, const char* key) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return d;
    } catch (...) {
        parse_fail(line_no, std::string("expected a real number for '") + key + "', got '" + v + "'");
    }
}

inline long long parse_int(const std::string& v, int line_no, const char* key) {
    try {
        std::size_t pos = 0;
        const long long d = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return d;
    } catch (...) {
        parse_fail(line_no, std::string("expected an integer for '") + key + "', got '" + v + "'");
    }
}

inline bool parse_bool(const std::string& v, int line_no, const char* key) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    parse_fail(line_no, std::string("expected true/false for '") + key + "'");
}

template <class T, class F>
std::vector<T> parse_list(const std::string& v, int line_no, const char* key, F&& one) {
    std::vector<T> out;
    std::string item;
    std::stringstream ss(v);
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) parse_fail(line_no, std::string("empty element in list for '") + key + "'");
        out.push_back(one(item));
    }
    if (out.empty()) parse_fail(line_no, std::string("empty list for '") + key + "'");
    return out;
}

}  // namespace detail

inline RunConfig parse_config(std::string_view text) {
    // First pass: collect (line number, key, value) and find the experiment.
    std::vector<std::tuple<int, std::string, std::string>> entries;
    Experiment exp = Experiment::Decay;
    {
        int line_no = 0;
        std::string line;
        std::stringstream ss{std::string(text)};
        while (std::getline(ss, line)) {
            ++line_no;
            const std::string stripped = detail::trim(line);
            if (stripped.empty() || stripped[0] == '#') continue;
            const auto eq = stripped.find('=');
            if (eq == std::string::npos)
                detail::parse_fail(line_no, "expected 'key = value'");
            const std::string key = detail::trim(stripped.substr(0, eq));
            const std::string value = detail::trim(stripped.substr(eq + 1));
            if (key.empty()) detail::parse_fail(line_no, "missing key before '='");
            entries.emplace_back(line_no, key, value);
            if (key == "experiment") {
                if (value == "decay") exp = Experiment::Decay;
                else if (value == "mfl") exp = Experiment::Mfl;
                else if (value == "lln") exp = Experiment::Lln;
                else if (value == "moments") exp = Experiment::Moments;
                else if (value == "stability") exp = Experiment::Stability;
                else if (value == "verify-assumptions") exp = Experiment::VerifyAssumptions;
                else detail::parse_fail(line_no, "unknown experiment '" + value + "'");
            }
        }
    }

    RunConfig cfg = default_config(exp);

    for (const auto& [line_no, key, value] : entries) {
        using detail::parse_bool;
        using detail::parse_fail;
        using detail::parse_int;
        using detail::parse_list;
        using detail::parse_real;
        if (key == "experiment") {
            // handled in the first pass
        } else if (key == "objective") {
            if (value != "separable-ackley" && value != "bilinear-tanh")
                parse_fail(line_no, "unknown objective '" + value + "'");
            cfg.objective = value;
        } else if (key == "d1" || key == "d2") {
            const long long d = parse_int(value, line_no, key.c_str());
            if (d < 1 || d > 64) parse_fail(line_no, key + " must be in [1, 64]");
            (key == "d1" ? cfg.d1 : cfg.d2) = static_cast<int>(d);
        } else if (key == "shift_x" || key == "shift_y") {
            const auto v = parse_list<double>(value, line_no, key.c_str(), [&](const std::string& s) {
                return parse_real(s, line_no, key.c_str());
            });
            (key == "shift_x" ? cfg.shift_x : cfg.shift_y) = v;
        } else if (key == "lambda") {
            const double v = parse_real(value, line_no, "lambda");
            if (!(v > 0.0)) parse_fail(line_no, "lambda must be positive");
            cfg.params.lambda = v;
        } else if (key == "sigma") {
            const double v = parse_real(value, line_no, "sigma");
            if (!(v >= 0.0)) parse_fail(line_no, "sigma must be nonnegative");
            cfg.params.sigma = v;
        } else if (key == "alpha" || key == "beta") {
            const double v = parse_real(value, line_no, key.c_str());
            if (!(v >= 0.0)) parse_fail(line_no, key + " must be nonnegative");
            (key == "alpha" ? cfg.params.alpha : cfg.params.beta) = v;
        } else if (key == "diffusion") {
            if (value == "anisotropic") cfg.params.diffusion = DiffusionMode::Anisotropic;
            else if (value == "isotropic") cfg.params.diffusion = DiffusionMode::Isotropic;
            else parse_fail(line_no, "diffusion must be anisotropic or isotropic");
        } else if (key == "dt") {
            const double v = parse_real(value, line_no, "dt");
            if (!(v > 0.0)) parse_fail(line_no, "dt must be positive");
            cfg.params.dt = v;
        } else if (key == "horizon") {
            const double v = parse_real(value, line_no, "horizon");
            if (!(v > 0.0)) parse_fail(line_no, "horizon must be positive");
            cfg.params.horizon = v;
        } else if (key == "n_particles") {
            const long long v = parse_int(value, line_no, "n_particles");
            if (v < 1 || v > 1000000) parse_fail(line_no, "n_particles out of range");
            cfg.params.n_particles = static_cast<int>(v);
        } else if (key == "truncation_r") {
            const double v = parse_real(value, line_no, "truncation_r");
            if (!(v > 0.0)) parse_fail(line_no, "truncation_r must be positive");
            cfg.params.truncation_r = v;
        } else if (key == "seed") {
            cfg.seed = static_cast<std::uint64_t>(parse_int(value, line_no, "seed"));
        } else if (key == "n_seeds") {
            const long long v = parse_int(value, line_no, "n_seeds");
            if (v < 1 || v > 4096) parse_fail(line_no, "n_seeds out of range");
            cfg.n_seeds = static_cast<int>(v);
        } else if (key == "init") {
            if (value == "uniform") cfg.init_kind = InitSampler::Kind::UniformBox;
            else if (value == "gauss") cfg.init_kind = InitSampler::Kind::Gaussian;
            else parse_fail(line_no, "init must be uniform or gauss");
        } else if (key == "init_center") {
            cfg.init_center = parse_real(value, line_no, "init_center");
        } else if (key == "init_scale") {
            const double v = parse_real(value, line_no, "init_scale");
            if (!(v >= 0.0)) parse_fail(line_no, "init_scale must be nonnegative");
            cfg.init_scale = v;
        } else if (key == "record_stride") {
            const long long v = parse_int(value, line_no, "record_stride");
            if (v < 1) parse_fail(line_no, "record_stride must be >= 1");
            cfg.record_stride = static_cast<int>(v);
        } else if (key == "epsilon_factor") {
            const double v = parse_real(value, line_no, "epsilon_factor");
            if (!(v > 0.0 && v < 1.0)) parse_fail(line_no, "epsilon_factor must be in (0, 1)");
            cfg.epsilon_factor = v;
        } else if (key == "n_grid") {
            cfg.n_grid = parse_list<int>(value, line_no, "n_grid", [&](const std::string& s) {
                const long long v = parse_int(s, line_no, "n_grid");
                if (v < 1) parse_fail(line_no, "n_grid entries must be positive");
                return static_cast<int>(v);
            });
        } else if (key == "m_reference") {
            const long long v = parse_int(value, line_no, "m_reference");
            if (v < 0) parse_fail(line_no, "m_reference must be nonnegative");
            cfg.m_reference = static_cast<int>(v);
        } else if (key == "reps") {
            const long long v = parse_int(value, line_no, "reps");
            if (v < 1 || v > 100000) parse_fail(line_no, "reps out of range");
            cfg.reps = static_cast<int>(v);
        } else if (key == "p_order") {
            const double v = parse_real(value, line_no, "p_order");
            if (!(v >= 1.0)) parse_fail(line_no, "p_order must be >= 1");
            cfg.p_order = v;
        } else if (key == "probe_points") {
            const long long v = parse_int(value, line_no, "probe_points");
            if (v < 1 || v > 4096) parse_fail(line_no, "probe_points out of range");
            cfg.probe_points = static_cast<int>(v);
        } else if (key == "fixed_atoms") {
            const long long v = parse_int(value, line_no, "fixed_atoms");
            if (v < 1 || v > 100000) parse_fail(line_no, "fixed_atoms out of range");
            cfg.fixed_atoms = static_cast<int>(v);
        } else if (key == "p_list") {
            cfg.p_list = parse_list<double>(value, line_no, "p_list", [&](const std::string& s) {
                const double v = parse_real(s, line_no, "p_list");
                if (!(v >= 2.0)) parse_fail(line_no, "p_list entries must be >= 2");
                return v;
            });
        } else if (key == "moment_m_factor") {
            const long long v = parse_int(value, line_no, "moment_m_factor");
            if (v < 1 || v > 1024) parse_fail(line_no, "moment_m_factor out of range");
            cfg.moment_m_factor = static_cast<int>(v);
        } else if (key == "mfl_m_sensitivity") {
            cfg.mfl_m_sensitivity = parse_bool(value, line_no, "mfl_m_sensitivity");
        } else if (key == "stability_trials") {
            const long long v = parse_int(value, line_no, "stability_trials");
            if (v < 1 || v > 10000000) parse_fail(line_no, "stability_trials out of range");
            cfg.stability_trials = static_cast<int>(v);
        } else if (key == "stability_atoms") {
            const long long v = parse_int(value, line_no, "stability_atoms");
            if (v < 2 || v > 1024) parse_fail(line_no, "stability_atoms out of range");
            cfg.stability_atoms = static_cast<int>(v);
        } else if (key == "stability_box") {
            const double v = parse_real(value, line_no, "stability_box");
            if (!(v >= 0.0)) parse_fail(line_no, "stability_box must be nonnegative");
            cfg.stability_box = v;
        } else if (key == "va_samples") {
            const long long v = parse_int(value, line_no, "va_samples");
            if (v < 2 || v > 100000000) parse_fail(line_no, "va_samples out of range");
            cfg.va_samples = static_cast<int>(v);
        } else if (key == "va_radius") {
            const double v = parse_real(value, line_no, "va_radius");
            if (!(v > 0.0)) parse_fail(line_no, "va_radius must be positive");
            cfg.va_radius = v;
        } else {
            parse_fail(line_no, "unknown key '" + key + "'");
        }
    }

    // Cross-field validation.
    if (cfg.objective == "bilinear-tanh" && cfg.d1 != cfg.d2)
        throw UsageError("config: bilinear-tanh requires d1 == d2");
    if (cfg.shift_x && static_cast<int>(cfg.shift_x->size()) != cfg.d1)
        throw UsageError("config: shift_x length must equal d1");
    if (cfg.shift_y && static_cast<int>(cfg.shift_y->size()) != cfg.d2)
        throw UsageError("config: shift_y length must equal d2");
    cfg.params.validate();
    if (cfg.experiment == Experiment::Decay && !cfg.params.decay_rate_positive())
        throw UsageError("config: decay experiment requires 2*lambda - sigma^2 > 0");
    return cfg;
}

inline std::string serialize_config(const RunConfig& c) {
    std::string out;
    const auto kv = [&out](std::string_view k, const std::string& v) {
        out += k;
        out += " = ";
        out += v;
        out += '\n';
    };
    const auto real = [](double v) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    const auto list_i = [](const std::vector<int>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) s += ',';
            s += std::to_string(v[i]);
        }
        return s;
    };
    const auto list_d = [&](const std::vector<double>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) s += ',';
            s += real(v[i]);
        }
        return s;
    };

    kv("experiment", to_string(c.experiment));
    kv("objective", c.objective);
    kv("d1", std::to_string(c.d1));
    kv("d2", std::to_string(c.d2));
    if (c.shift_x) kv("shift_x", list_d(*c.shift_x));
    if (c.shift_y) kv("shift_y", list_d(*c.shift_y));
    kv("lambda", real(c.params.lambda));
    kv("sigma", real(c.params.sigma));
    kv("alpha", real(c.params.alpha));
    kv("beta", real(c.params.beta));
    kv("diffusion",
       c.params.diffusion == DiffusionMode::Anisotropic ? "anisotropic" : "isotropic");
    kv("dt", real(c.params.dt));
    kv("horizon", real(c.params.horizon));
    kv("n_particles", std::to_string(c.params.n_particles));
    if (c.params.truncation_r) kv("truncation_r", real(*c.params.truncation_r));
    kv("seed", std::to_string(c.seed));
    kv("n_seeds", std::to_string(c.n_seeds));
    kv("init", c.init_kind == InitSampler::Kind::UniformBox ? "uniform" : "gauss");
    kv("init_center", real(c.init_center));
    kv("init_scale", real(c.init_scale));
    kv("record_stride", std::to_string(c.record_stride));
    kv("epsilon_factor", real(c.epsilon_factor));
    if (!c.n_grid.empty()) kv("n_grid", list_i(c.n_grid));
    kv("m_reference", std::to_string(c.m_reference));
    kv("reps", std::to_string(c.reps));
    kv("p_order", real(c.p_order));
    kv("probe_points", std::to_string(c.probe_points));
    kv("fixed_atoms", std::to_string(c.fixed_atoms));
    kv("p_list", list_d(c.p_list));
    kv("moment_m_factor", std::to_string(c.moment_m_factor));
    kv("mfl_m_sensitivity", c.mfl_m_sensitivity ? "true" : "false");
    kv("stability_trials", std::to_string(c.stability_trials));
    kv("stability_atoms", std::to_string(c.stability_atoms));
    kv("stability_box", real(c.stability_box));
    kv("va_samples", std::to_string(c.va_samples));
    kv("va_radius", real(c.va_radius));
    return out;
}

}  // namespace mmcbo

#endif  // MINMAXCBO_CONFIG_HPP
