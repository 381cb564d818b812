#include "onestep/config.hpp"

#include "onestep/activation.hpp"
#include "onestep/errors.hpp"

#include "json.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace onestep {

namespace {

using json = nlohmann::json;

const std::vector<std::string> kRecipes{"fig1", "fig3", "fig4", "fig5a", "fig5b", "fig5c",
                                        "fig6", "fig7a", "theory-grid", "taustar-table", "custom"};

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::string unquote(std::string s) {
    if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') || (s.front() == '\'' && s.back() == '\'')))
        return s.substr(1, s.size() - 2);
    return s;
}

std::map<std::string, std::string> parse_keyvalue(std::string_view text) {
    std::map<std::string, std::string> out;
    std::string section;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string t = trim(line);
        if (t.empty()) continue;
        if (t.front() == '[') {
            if (t.back() != ']') throw ConfigError("line " + std::to_string(lineno) + ": unterminated section header");
            section = trim(std::string_view(t).substr(1, t.size() - 2));
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
        std::string key = trim(std::string_view(t).substr(0, eq));
        if (!section.empty()) key = section + "." + key;
        out[key] = unquote(trim(std::string_view(t).substr(eq + 1)));
    }
    return out;
}

void flatten(const json& j, const std::string& prefix, std::map<std::string, std::string>& out) {
    if (j.is_object()) {
        for (const auto& [k, v] : j.items()) flatten(v, prefix.empty() ? k : prefix + "." + k, out);
        return;
    }
    if (j.is_array()) {
        std::string joined;
        for (const auto& v : j) {
            if (!joined.empty()) joined += ",";
            joined += v.is_string() ? v.get<std::string>() : v.dump();
        }
        out[prefix] = joined;
        return;
    }
    if (j.is_string()) {
        out[prefix] = j.get<std::string>();
    } else if (j.is_number_float()) {
        out[prefix] = format_double(j.get<double>());
    } else {
        out[prefix] = j.dump();
    }
}

std::map<std::string, std::string> parse_json(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("invalid JSON config: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("JSON config must be an object");
    if (j.contains("config") && j["config"].is_object()) j = j["config"];
    std::map<std::string, std::string> out;
    flatten(j, "", out);
    return out;
}

double to_double(const std::string& key, const std::string& v) {
    double out = 0.0;
    const auto* first = v.data();
    const auto* last = v.data() + v.size();
    const auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc() || ptr != last || !std::isfinite(out))
        throw ConfigError("key '" + key + "': '" + v + "' is not a finite number");
    return out;
}

long long to_integer(const std::string& key, const std::string& v) {
    const double x = to_double(key, v);
    if (x != std::floor(x) || std::abs(x) > 9.0e15) throw ConfigError("key '" + key + "': '" + v + "' is not an integer");
    return static_cast<long long>(x);
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size())
        throw ConfigError("key '" + key + "': '" + v + "' is not an unsigned 64-bit integer");
    return out;
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("key '" + key + "': '" + v + "' is not a boolean");
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    std::string s = v;
    if (!s.empty() && s.front() == '[' && s.back() == ']') s = s.substr(1, s.size() - 2);
    std::istringstream in(s);
    std::string item;
    while (std::getline(in, item, ',')) {
        const std::string t = trim(item);
        if (!t.empty()) out.push_back(to_double(key, t));
    }
    return out;
}

void set_key(RunConfig& c, const std::string& key, const std::string& v) {
    auto& e = c.exp;
    if (key == "n") e.n = to_integer(key, v);
    else if (key == "d") e.d = to_integer(key, v);
    else if (key == "N") e.N = to_integer(key, v);
    else if (key == "eta_bar") e.eta_bar = to_double(key, v);
    else if (key == "alpha") e.alpha = to_double(key, v);
    else if (key == "lambda") e.lambda = to_double(key, v);
    else if (key == "seed") e.seed = to_u64(key, v);
    else if (key == "replicas") e.replicas = static_cast<int>(to_integer(key, v));
    else if (key == "n_test") e.n_test = to_integer(key, v);
    else if (key == "quadrature.order") c.quadrature_order = static_cast<int>(to_integer(key, v));
    else if (key == "model.student") c.student = v;
    else if (key == "model.teacher") c.teacher = v;
    else if (key == "model.sigma_eps") c.sigma_eps = to_double(key, v);
    else if (key == "model.center") c.center = to_bool(key, v);
    else if (key == "train.steps") c.steps = static_cast<int>(to_integer(key, v));
    else if (key == "sweep.recipe") c.recipe = v;
    else if (key == "sweep.axis") c.axis = v;
    else if (key == "sweep.values") c.values = to_list(key, v);
    else if (key == "spectrum.bins") c.bins = static_cast<int>(to_integer(key, v));
    else if (key == "spectrum.spike_buffer") c.spike_buffer = to_double(key, v);
    else if (key == "largelr.r") c.oracle_r = to_double(key, v);
    else if (key == "largelr.penalty_exponent") c.penalty_exponent = to_double(key, v);
}

std::string join_values(const std::vector<double>& values) {
    std::string out;
    for (double v : values) {
        if (!out.empty()) out += ",";
        out += format_double(v);
    }
    return out;
}

std::string value_of(const RunConfig& c, const std::string& key) {
    const auto& e = c.exp;
    if (key == "n") return std::to_string(e.n);
    if (key == "d") return std::to_string(e.d);
    if (key == "N") return std::to_string(e.N);
    if (key == "eta_bar") return format_double(e.eta_bar);
    if (key == "alpha") return format_double(e.alpha);
    if (key == "lambda") return format_double(e.lambda);
    if (key == "seed") return std::to_string(e.seed);
    if (key == "replicas") return std::to_string(e.replicas);
    if (key == "n_test") return std::to_string(e.n_test);
    if (key == "quadrature.order") return std::to_string(c.quadrature_order);
    if (key == "model.student") return c.student;
    if (key == "model.teacher") return c.teacher;
    if (key == "model.sigma_eps") return format_double(c.sigma_eps);
    if (key == "model.center") return c.center ? "true" : "false";
    if (key == "train.steps") return std::to_string(c.steps);
    if (key == "sweep.recipe") return c.recipe;
    if (key == "sweep.axis") return c.axis;
    if (key == "sweep.values") return join_values(c.values);
    if (key == "spectrum.bins") return std::to_string(c.bins);
    if (key == "spectrum.spike_buffer") return format_double(c.spike_buffer);
    if (key == "largelr.r") return format_double(c.oracle_r);
    if (key == "largelr.penalty_exponent") return format_double(c.penalty_exponent);
    return {};
}

bool is_string_key(const std::string& key) {
    return key == "model.student" || key == "model.teacher" || key == "sweep.recipe" || key == "sweep.axis";
}

}  // namespace

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys{
        "n", "d", "N", "eta_bar", "alpha", "lambda", "seed", "replicas", "n_test",
        "quadrature.order", "model.student", "model.teacher", "model.sigma_eps", "model.center",
        "train.steps", "sweep.recipe", "sweep.axis", "sweep.values", "spectrum.bins",
        "spectrum.spike_buffer", "largelr.r", "largelr.penalty_exponent"};
    return keys;
}

const std::vector<std::string>& sweep_axes() {
    static const std::vector<std::string> axes{"eta_bar", "alpha", "lambda", "psi1", "psi2",
                                               "sigma_eps", "steps", "d"};
    return axes;
}

void RunConfig::validate() const {
    exp.validate();
    std::ostringstream bad;
    for (const auto& name : {student, teacher}) {
        const auto& names = builtin_activation_names();
        if (std::find(names.begin(), names.end(), name) == names.end())
            bad << " unknown activation '" << name << "';";
    }
    if (!(sigma_eps >= 0.0)) bad << " model.sigma_eps must be nonnegative;";
    if (steps < 0 || steps > 100) bad << " train.steps must lie in [0, 100];";
    if (quadrature_order < 2 || quadrature_order > 1000) bad << " quadrature.order must lie in [2, 1000];";
    if (std::find(kRecipes.begin(), kRecipes.end(), recipe) == kRecipes.end()) bad << " unknown recipe '" << recipe << "';";
    if (!axis.empty()) {
        const auto& axes = sweep_axes();
        if (std::find(axes.begin(), axes.end(), axis) == axes.end()) bad << " unknown sweep axis '" << axis << "';";
        if (values.empty()) bad << " sweep.values is empty;";
    }
    if (bins <= 0) bad << " spectrum.bins must be positive;";
    if (!(spike_buffer >= 0.0)) bad << " spectrum.spike_buffer must be nonnegative;";
    if (!(oracle_r > 0.0 && oracle_r < 0.5)) bad << " largelr.r must lie in (0, 0.5);";
    if (!(penalty_exponent > 0.0 && penalty_exponent < 1.0)) bad << " largelr.penalty_exponent must lie in (0, 1);";
    const auto msg = bad.str();
    if (!msg.empty()) throw ConfigError("invalid config:" + msg);
}

RunConfig parse_config(std::string_view text, ConfigFormat format, const RunConfig* base) {
    if (format == ConfigFormat::detect) {
        const std::string t = trim(text);
        format = (!t.empty() && t.front() == '{') ? ConfigFormat::json : ConfigFormat::keyvalue;
    }
    const auto raw = format == ConfigFormat::json ? parse_json(text) : parse_keyvalue(text);

    const auto& keys = config_keys();
    std::vector<std::string> unknown;
    for (const auto& [k, v] : raw)
        if (std::find(keys.begin(), keys.end(), k) == keys.end()) unknown.push_back(k);
    if (!unknown.empty()) {
        std::string msg = "unknown config keys:";
        for (const auto& k : unknown) msg += " " + k;
        throw ConfigError(msg);
    }
    if (!base) {
        for (const char* req : {"n", "d", "N"})
            if (!raw.count(req)) throw ConfigError(std::string("missing required config key: ") + req);
    }

    RunConfig cfg = base ? *base : RunConfig{};
    cfg.defaulted.clear();
    std::vector<std::string> errors;
    for (const auto& key : keys) {
        const auto it = raw.find(key);
        if (it == raw.end()) {
            if (!base) cfg.defaulted.push_back(key);
            continue;
        }
        try {
            set_key(cfg, key, it->second);
        } catch (const ConfigError& e) {
            errors.push_back(e.what());
        }
    }
    if (!errors.empty()) {
        std::string msg = "invalid config values:";
        for (const auto& e : errors) msg += " " + e + ";";
        throw ConfigError(msg);
    }
    cfg.validate();
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path, const RunConfig* base) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    ConfigFormat fmt = path.extension() == ".json" ? ConfigFormat::json : ConfigFormat::detect;
    return parse_config(ss.str(), fmt, base);
}

std::string format_config(const RunConfig& cfg) {
    std::ostringstream out;
    for (const auto& key : config_keys()) out << key << " = " << value_of(cfg, key) << "\n";
    return out.str();
}

std::string config_json(const RunConfig& cfg) {
    json j = json::object();
    for (const auto& key : config_keys()) {
        if (key == "sweep.values") j[key] = cfg.values;
        else if (key == "model.center") j[key] = cfg.center;
        else if (key == "seed") j[key] = cfg.exp.seed;
        else if (is_string_key(key)) j[key] = value_of(cfg, key);
        else j[key] = json::parse(value_of(cfg, key));
    }
    return j.dump(2);
}

void apply_axis(RunConfig& cfg, std::string_view axis, double value) {
    auto& e = cfg.exp;
    if (axis == "eta_bar") e.eta_bar = value;
    else if (axis == "alpha") e.alpha = value;
    else if (axis == "lambda") e.lambda = value;
    else if (axis == "psi1") e.n = static_cast<Eigen::Index>(std::llround(value * static_cast<double>(e.d)));
    else if (axis == "psi2") e.N = static_cast<Eigen::Index>(std::llround(value * static_cast<double>(e.d)));
    else if (axis == "sigma_eps") cfg.sigma_eps = value;
    else if (axis == "steps") cfg.steps = static_cast<int>(std::llround(value));
    else if (axis == "d") {
        const double psi1 = e.psi1();
        const double psi2 = e.psi2();
        e.d = static_cast<Eigen::Index>(std::llround(value));
        e.n = static_cast<Eigen::Index>(std::llround(psi1 * value));
        e.N = static_cast<Eigen::Index>(std::llround(psi2 * value));
    } else {
        throw ConfigError("unknown sweep axis '" + std::string(axis) + "'");
    }
}

}  // namespace onestep
