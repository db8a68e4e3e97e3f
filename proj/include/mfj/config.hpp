// SPDX-License-Identifier: MIT
//
// Flat "key = value" run configuration. '#' starts a comment, keys are case
// sensitive, unknown or repeated keys are errors, and every error names the
// offending line.
#pragma once

#include "mfj/csv.hpp"
#include "mfj/error.hpp"
#include "mfj/greeks.hpp"
#include "mfj/model.hpp"
#include "mfj/payoff.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mfj {

struct RunConfig {
    std::string model;  // example1 | example2 | inline
    AffineModel params{};
    Payoff payoff = Payoff::call(0.5);

    double dt = 1.0 / 4096.0;
    std::size_t n_paths = 1000;
    std::uint64_t seed = 1;
    double h_fd = 1e-3;
    FdMode fd_mode = FdMode::central;
    bool compensated = true;
    std::vector<double> dt_list{1.0 / 32, 1.0 / 64, 1.0 / 128, 1.0 / 256, 1.0 / 512};
    ConvergenceQuantity quantity = ConvergenceQuantity::state;
    std::vector<DeltaMethod> methods;  // empty: command default
    double r_time = 0.5;
    double z_mark = 0.25;
    SkorokhodMode skorokhod = SkorokhodMode::jump_removal;
    bool trace = false;

    // Output control; not part of the reproducible header.
    bool timing = false;
    unsigned threads = 0;
    std::string out = ".";

    [[nodiscard]] ModelSpec spec() const { return params.to_spec(); }
    [[nodiscard]] TimeGrid grid() const { return TimeGrid::with_step(params.horizon, dt); }
    [[nodiscard]] SimOptions sim_options() const { return SimOptions{compensated}; }
};

[[nodiscard]] inline std::string_view to_string(FdMode m) { return m == FdMode::central ? "central" : "forward"; }
[[nodiscard]] inline std::string_view to_string(SkorokhodMode m) {
    return m == SkorokhodMode::jump_removal ? "jump_removal" : "pathwise";
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split_list(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        const auto comma = s.find(',', pos);
        const auto end = comma == std::string_view::npos ? s.size() : comma;
        out.push_back(trim(s.substr(pos, end - pos)));
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return out;
}

struct Entry {
    std::string value;
    std::size_t line = 0;  // 0 for command-line overrides
};

class ConfigReader {
public:
    explicit ConfigReader(std::map<std::string, Entry> entries) : entries_(std::move(entries)) {}

    [[nodiscard]] bool has(const std::string& key) const { return entries_.count(key) != 0; }

    [[nodiscard]] ConfigError error(const std::string& key, const std::string& what) const {
        const auto it = entries_.find(key);
        if (it == entries_.end() || it->second.line == 0) return ConfigError(key + ": " + what);
        return ConfigError::at_line(it->second.line, key + ": " + what);
    }

    std::optional<std::string_view> raw(const std::string& key) {
        const auto it = entries_.find(key);
        if (it == entries_.end()) return std::nullopt;
        used_.push_back(key);
        return std::string_view(it->second.value);
    }

    void number(const std::string& key, double& out) {
        if (auto v = raw(key)) out = parse_double(key, *v);
    }

    void count(const std::string& key, std::size_t& out) {
        if (auto v = raw(key)) out = static_cast<std::size_t>(parse_uint(key, *v));
    }

    void seed(const std::string& key, std::uint64_t& out) {
        if (auto v = raw(key)) out = parse_uint(key, *v);
    }

    void flag(const std::string& key, bool& out) {
        if (auto v = raw(key)) {
            if (*v == "true" || *v == "1") {
                out = true;
            } else if (*v == "false" || *v == "0") {
                out = false;
            } else {
                throw error(key, "expected true or false, got '" + std::string(*v) + "'");
            }
        }
    }

    double parse_double(const std::string& key, std::string_view v) const {
        double x = 0.0;
        const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
        if (ec != std::errc{} || p != v.data() + v.size() || v.empty() || !std::isfinite(x)) {
            throw error(key, "malformed number '" + std::string(v) + "'");
        }
        return x;
    }

    std::uint64_t parse_uint(const std::string& key, std::string_view v) const {
        std::uint64_t x = 0;
        const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
        if (ec != std::errc{} || p != v.data() + v.size() || v.empty()) {
            throw error(key, "malformed integer '" + std::string(v) + "'");
        }
        return x;
    }

    /// Throws on the first key (by line) that was never read.
    void reject_unused() const {
        const Entry* worst = nullptr;
        std::string name;
        for (const auto& [k, e] : entries_) {
            if (std::find(used_.begin(), used_.end(), k) != used_.end()) continue;
            if (!worst || e.line < worst->line) {
                worst = &e;
                name = k;
            }
        }
        if (worst) throw error(name, "unknown key");
    }

private:
    std::map<std::string, Entry> entries_;
    std::vector<std::string> used_;
};

inline const char* const kInlineKeys[] = {"b_const",      "b_linear", "b_ratio",  "diffusion_C",   "sigma0_const",
                                          "sigma0_pi",    "jump_F",   "jump_F_z", "lambda0_const", "lambda0_eta"};

inline double* inline_field(AffineModel& p, std::string_view key) {
    if (key == "b_const") return &p.b_const;
    if (key == "b_linear") return &p.b_linear;
    if (key == "b_ratio") return &p.b_ratio;
    if (key == "diffusion_C") return &p.diffusion_C;
    if (key == "sigma0_const") return &p.sigma0_const;
    if (key == "sigma0_pi") return &p.sigma0_pi;
    if (key == "jump_F") return &p.jump_F;
    if (key == "jump_F_z") return &p.jump_F_z;
    if (key == "lambda0_const") return &p.lambda0_const;
    if (key == "lambda0_eta") return &p.lambda0_eta;
    return nullptr;
}

}  // namespace detail

/// Key/value pairs with their 1-based line numbers.
inline std::map<std::string, detail::Entry> read_entries(std::string_view text) {
    std::map<std::string, detail::Entry> entries;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        std::string_view line = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ConfigError::at_line(line_no, "expected 'key = value'");
        const std::string key(detail::trim(line.substr(0, eq)));
        const std::string value(detail::trim(line.substr(eq + 1)));
        if (key.empty()) throw ConfigError::at_line(line_no, "missing key");
        if (value.empty()) throw ConfigError::at_line(line_no, key + ": missing value");
        if (entries.count(key)) throw ConfigError::at_line(line_no, key + ": repeated key");
        entries.emplace(key, detail::Entry{value, line_no});
    }
    return entries;
}

/// (example2: K = 0.5, B = 1.5; example1: K = 4.4, B = 6.6; inline: K = x0, B = 1.5 x0.)
inline std::pair<double, double> default_strike_barrier(const std::string& model, double x0) {
    if (model == "example2") return {0.5, 1.5};
    if (model == "example1") return {4.4, 6.6};
    return {x0, 1.5 * x0};
}

/// Parses and validates. `overrides` replace (or add) keys after the text is
/// read; their errors carry no line number.
inline RunConfig parse_config(std::string_view text, const std::map<std::string, std::string>& overrides = {}) {
    auto entries = read_entries(text);
    for (const auto& [k, v] : overrides) entries[k] = detail::Entry{v, 0};
    detail::ConfigReader r(std::move(entries));

    RunConfig c;
    const auto model = r.raw("model");
    if (!model) throw ConfigError("model selector required");
    c.model = std::string(*model);
    if (c.model == "example1") {
        c.params = builtin_params(Builtin::example1);
    } else if (c.model == "example2") {
        c.params = builtin_params(Builtin::example2);
    } else if (c.model == "inline") {
        c.params = AffineModel{};
    } else {
        throw r.error("model", "expected example1, example2 or inline, got '" + c.model + "'");
    }
    for (const char* key : detail::kInlineKeys) {
        if (!r.has(key)) continue;
        if (c.model != "inline") throw r.error(key, "coefficient keys require model = inline");
        r.number(key, *detail::inline_field(c.params, key));
    }
    r.number("x0", c.params.x0);
    r.number("T", c.params.horizon);
    r.number("nu", c.params.nu);
    r.number("mark_lo", c.params.mark_lo);
    r.number("mark_hi", c.params.mark_hi);
    if (c.params.x0 == 0.0) throw r.error("x0", "initial state must be nonzero");
    if (!(c.params.horizon > 0.0)) throw r.error("T", "horizon must be positive");
    if (!(c.params.nu >= 0.0)) throw r.error("nu", "jump intensity must be non-negative");
    if (!(c.params.mark_hi >= c.params.mark_lo)) throw r.error("mark_hi", "mark support is empty");

    if (auto v = r.raw("payoff")) {
        try {
            c.payoff.kind = payoff_kind_from_string(*v);
        } catch (const EstimatorError& e) {
            throw r.error("payoff", e.what());
        }
    }
    const auto [K, B] = default_strike_barrier(c.model, c.params.x0);
    c.payoff.K = K;
    c.payoff.B = B;
    r.number("K", c.payoff.K);
    r.number("B", c.payoff.B);
    r.number("epsilon", c.payoff.epsilon);
    try {
        c.payoff.validate();
    } catch (const EstimatorError& e) {
        throw r.error(r.has("B") && c.payoff.has_barrier() ? "B" : "K", e.what());
    }

    r.number("dt", c.dt);
    if (!(c.dt > 0.0)) throw r.error("dt", "must be positive");
    try {
        (void)c.grid();
    } catch (const ModelError& e) {
        throw r.error("dt", e.what());
    }
    r.count("n_paths", c.n_paths);
    if (c.n_paths == 0) throw r.error("n_paths", "must be positive");
    r.seed("seed", c.seed);
    r.number("h_fd", c.h_fd);
    if (!(c.h_fd > 0.0)) throw r.error("h_fd", "must be positive");
    if (auto v = r.raw("fd_mode")) {
        if (*v == "central") {
            c.fd_mode = FdMode::central;
        } else if (*v == "forward") {
            c.fd_mode = FdMode::forward;
        } else {
            throw r.error("fd_mode", "expected central or forward");
        }
    }
    r.flag("compensated", c.compensated);
    if (auto v = r.raw("dt_list")) {
        c.dt_list.clear();
        for (auto item : detail::split_list(*v)) {
            const double d = r.parse_double("dt_list", item);
            if (!(d > 0.0)) throw r.error("dt_list", "steps must be positive");
            c.dt_list.push_back(d);
        }
    }
    if (auto v = r.raw("quantity")) {
        try {
            c.quantity = convergence_quantity_from_string(*v);
        } catch (const EstimatorError& e) {
            throw r.error("quantity", e.what());
        }
    }
    if (auto v = r.raw("methods")) {
        for (auto item : detail::split_list(*v)) {
            try {
                c.methods.push_back(delta_method_from_string(item));
            } catch (const EstimatorError& e) {
                throw r.error("methods", e.what());
            }
        }
    }
    c.r_time = 0.5 * c.params.horizon;
    r.number("r_time", c.r_time);
    if (!(c.r_time >= 0.0 && c.r_time <= c.params.horizon)) throw r.error("r_time", "must lie in [0, T]");
    r.number("z_mark", c.z_mark);
    if (auto v = r.raw("skorokhod")) {
        if (*v == "jump_removal") {
            c.skorokhod = SkorokhodMode::jump_removal;
        } else if (*v == "pathwise") {
            c.skorokhod = SkorokhodMode::pathwise;
        } else {
            throw r.error("skorokhod", "expected jump_removal or pathwise");
        }
    }
    r.flag("trace", c.trace);
    r.flag("timing", c.timing);
    if (auto v = r.raw("threads")) c.threads = static_cast<unsigned>(r.parse_uint("threads", *v));
    if (auto v = r.raw("out")) c.out = std::string(*v);
    r.reject_unused();

    try {
        (void)c.spec();
    } catch (const ModelError& e) {
        throw ConfigError(e.what());
    }
    return c;
}

/// "# key = value" lines for every reproducible setting, defaults included.
inline std::string config_header(const RunConfig& c, std::string_view command) {
    std::string out;
    auto line = [&](std::string_view k, const std::string& v) {
        out += "# ";
        out += k;
        out += " = ";
        out += v;
        out += '\n';
    };
    line("command", std::string(command));
    line("model", c.model);
    if (c.model == "inline") {
        AffineModel p = c.params;
        for (const char* key : detail::kInlineKeys) line(key, format_double(*detail::inline_field(p, key)));
    }
    line("x0", format_double(c.params.x0));
    line("T", format_double(c.params.horizon));
    line("nu", format_double(c.params.nu));
    line("mark_lo", format_double(c.params.mark_lo));
    line("mark_hi", format_double(c.params.mark_hi));
    line("payoff", std::string(to_string(c.payoff.kind)));
    line("K", format_double(c.payoff.K));
    line("B", format_double(c.payoff.B));
    line("epsilon", format_double(c.payoff.epsilon));
    line("dt", format_double(c.dt));
    line("n_paths", format_uint(c.n_paths));
    line("seed", format_uint(c.seed));
    line("h_fd", format_double(c.h_fd));
    line("fd_mode", std::string(to_string(c.fd_mode)));
    line("compensated", c.compensated ? "true" : "false");
    std::string list;
    for (std::size_t i = 0; i < c.dt_list.size(); ++i) {
        if (i) list += ',';
        list += format_double(c.dt_list[i]);
    }
    line("dt_list", list);
    line("quantity", std::string(to_string(c.quantity)));
    std::string methods;
    for (std::size_t i = 0; i < c.methods.size(); ++i) {
        if (i) methods += ',';
        methods += to_string(c.methods[i]);
    }
    if (!methods.empty()) line("methods", methods);
    line("r_time", format_double(c.r_time));
    line("z_mark", format_double(c.z_mark));
    line("skorokhod", std::string(to_string(c.skorokhod)));
    line("trace", c.trace ? "true" : "false");
    return out;
}

struct ReplaySource {
    std::string command;
    std::string config_text;
};

/// Recovers the command and config from the header of an emitted CSV.
inline ReplaySource read_replay_header(std::string_view csv) {
    ReplaySource src;
    std::istringstream in{std::string(csv)};
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind("# ", 0) != 0) break;
        const std::string body = line.substr(2);
        const auto eq = body.find('=');
        if (eq == std::string::npos) continue;
        const auto key = detail::trim(std::string_view(body).substr(0, eq));
        if (key == "command") {
            src.command = std::string(detail::trim(std::string_view(body).substr(eq + 1)));
        } else {
            src.config_text += body;
            src.config_text += '\n';
        }
    }
    if (src.command.empty()) throw ConfigError("replay file has no command header");
    return src;
}

}  // namespace mfj
