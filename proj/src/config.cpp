#include "kmmr/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <sstream>

#include "kmmr/error.hpp"

namespace kmmr::config {

namespace {

std::string_view trim(std::string_view s) {
    const auto ws = " \t\r";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

std::string_view unquote(std::string_view s) {
    s = trim(s);
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = trim(s.substr(1, s.size() - 2));
    return s;
}

std::vector<std::string> split_list(std::string_view value) {
    std::vector<std::string> items;
    value = unquote(value);
    while (true) {
        const auto comma = value.find(',');
        const auto item = unquote(value.substr(0, comma));
        if (item.empty()) throw ConfigError("empty item in list '" + std::string(value) + "'");
        items.emplace_back(item);
        if (comma == std::string_view::npos) break;
        value = value.substr(comma + 1);
    }
    return items;
}

template <class Int>
Int parse_int(std::string_view s, std::string_view key) {
    s = unquote(s);
    Int v{};
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw ConfigError("bad integer '" + std::string(s) + "' for key '" + std::string(key) + "'");
    }
    return v;
}

bool parse_bool(std::string_view s, std::string_view key) {
    s = unquote(s);
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    throw ConfigError("bad boolean '" + std::string(s) + "' for key '" + std::string(key) + "'");
}

template <class T, class F>
std::string join(const std::vector<T>& xs, F&& f) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ", ";
        out += f(xs[i]);
    }
    return out;
}

}  // namespace

std::string to_string(Method m) {
    switch (m) {
        case Method::Lisc: return "lisc";
        case Method::Median: return "median";
        case Method::Silverman: return "silverman";
    }
    return {};
}

Method parse_method(const std::string& name) {
    if (name == "lisc") return Method::Lisc;
    if (name == "median") return Method::Median;
    if (name == "silverman") return Method::Silverman;
    throw ConfigError("unknown method '" + name + "' (expected lisc, median, silverman)");
}

void ExperimentConfig::validate() const {
    if (scenarios.empty()) throw ConfigError("config: scenario list is empty");
    if (true_functions.empty()) throw ConfigError("config: f_star list is empty");
    if (candidates.empty()) throw ConfigError("config: candidate list is empty");
    if (sizes.empty()) throw ConfigError("config: n list is empty");
    if (methods.empty()) throw ConfigError("config: methods list is empty");
    for (int n : sizes) {
        if (n < 4) throw ConfigError("config: n must be >= 4, got " + std::to_string(n));
    }
    if (replications < 1) throw ConfigError("config: replications must be >= 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("config: alpha must lie in (0, 1)");
    if (d && *d < 1) throw ConfigError("config: d must be >= 1");
    if (jobs < 1) throw ConfigError("config: jobs must be >= 1");
    if (output.empty()) throw ConfigError("config: output directory is empty");
    for (const auto& k : candidates) k.validate();
    if (model.kind == models::ModelSpec::Kind::Poly && model.degree < 0) {
        throw ConfigError("config: polynomial degree must be >= 0");
    }
}

int ExperimentConfig::dimension(datagen::Scenario s) const {
    return d ? *d : datagen::default_dimension(s);
}

void apply_setting(ExperimentConfig& cfg, std::string_view key, std::string_view value) {
    key = trim(key);
    try {
        if (key == "scenario") {
            cfg.scenarios.clear();
            for (const auto& s : split_list(value)) cfg.scenarios.push_back(datagen::parse_scenario(s));
        } else if (key == "f_star") {
            cfg.true_functions.clear();
            for (const auto& s : split_list(value)) {
                cfg.true_functions.push_back(datagen::parse_true_function(s));
            }
        } else if (key == "model") {
            cfg.model = models::parse_model_spec(std::string(unquote(value)));
        } else if (key == "candidates") {
            cfg.candidates.clear();
            for (const auto& s : split_list(value)) {
                cfg.candidates.push_back(kernels::parse_kernel_label(s));
            }
        } else if (key == "n") {
            cfg.sizes.clear();
            for (const auto& s : split_list(value)) cfg.sizes.push_back(parse_int<int>(s, key));
        } else if (key == "replications") {
            cfg.replications = parse_int<int>(value, key);
        } else if (key == "seed") {
            cfg.seed = parse_int<std::uint64_t>(value, key);
        } else if (key == "alpha") {
            cfg.alpha = numerics::parse_double(unquote(value), "alpha");
        } else if (key == "output") {
            cfg.output = std::string(unquote(value));
        } else if (key == "d") {
            const auto v = unquote(value);
            if (v.empty() || v == "auto") {
                cfg.d.reset();
            } else {
                cfg.d = parse_int<int>(v, key);
            }
        } else if (key == "methods") {
            cfg.methods.clear();
            for (const auto& s : split_list(value)) cfg.methods.push_back(parse_method(s));
        } else if (key == "itc_mask") {
            const auto v = unquote(value);
            if (v == "output") {
                cfg.itc_mask = models::GradMask::OutputLayer;
            } else if (v == "full") {
                cfg.itc_mask = models::GradMask::Full;
            } else {
                throw ConfigError("bad itc_mask '" + std::string(v) + "' (expected output, full)");
            }
        } else if (key == "refit_per_half") {
            cfg.refit_per_half = parse_bool(value, key);
        } else if (key == "jobs") {
            cfg.jobs = parse_int<int>(value, key);
        } else {
            throw ConfigError("unknown config key '" + std::string(key) + "'");
        }
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
}

ExperimentConfig parse_config(std::istream& in) {
    ExperimentConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view view(line);
        if (const auto hash = view.find('#'); hash != std::string_view::npos) {
            view = view.substr(0, hash);
        }
        view = trim(view);
        if (view.empty()) continue;
        const auto eq = view.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        }
        try {
            apply_setting(cfg, view.substr(0, eq), view.substr(eq + 1));
        } catch (const ConfigError& e) {
            throw ConfigError("config line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    return parse_config(in);
}

std::string canonical_text(const ExperimentConfig& cfg, bool runtime) {
    std::ostringstream out;
    out << "scenario = "
        << join(cfg.scenarios, [](auto s) { return datagen::to_string(s); }) << '\n';
    out << "f_star = "
        << join(cfg.true_functions, [](auto f) { return datagen::to_string(f); }) << '\n';
    out << "model = " << cfg.model.label() << '\n';
    out << "candidates = " << join(cfg.candidates, [](const auto& k) { return k.label(); })
        << '\n';
    out << "n = " << join(cfg.sizes, [](int n) { return std::to_string(n); }) << '\n';
    out << "replications = " << cfg.replications << '\n';
    out << "seed = " << cfg.seed << '\n';
    out << "alpha = " << numerics::format_double(cfg.alpha) << '\n';
    if (runtime) out << "output = " << cfg.output << '\n';
    out << "d = " << (cfg.d ? std::to_string(*cfg.d) : std::string("auto")) << '\n';
    out << "methods = " << join(cfg.methods, [](auto m) { return to_string(m); }) << '\n';
    out << "itc_mask = " << (cfg.itc_mask == models::GradMask::Full ? "full" : "output") << '\n';
    out << "refit_per_half = " << (cfg.refit_per_half ? "true" : "false") << '\n';
    if (runtime) out << "jobs = " << cfg.jobs << '\n';
    return out.str();
}

std::string fingerprint(const ExperimentConfig& cfg) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(numerics::fnv1a(canonical_text(cfg, false))));
    return buf;
}

}  // namespace kmmr::config
