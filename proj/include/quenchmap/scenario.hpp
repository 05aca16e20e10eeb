#pragma once

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "quenchmap/core.hpp"
#include "quenchmap/states.hpp"

namespace quenchmap {

// One quench experiment: an initial free Gaussian superposition, optional
// pre- and post-quench traps, the quench instant, and where to look.
struct ScenarioConfig {
    PhysicalParams params;
    std::vector<PacketComponent> packets;
    std::optional<TrapSpec> pre_trap;
    std::optional<TrapSpec> post_trap;
    double quench_time = 0.0;
    Grid grid;
    std::vector<double> sample_times;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

inline double parse_double(std::string_view token, const std::string& where) {
    const auto t = trim(token);
    double value = 0.0;
    const auto* begin = t.data();
    const auto* end = t.data() + t.size();
    const auto res = std::from_chars(begin, end, value);
    if (res.ec != std::errc{} || res.ptr != end)
        throw parse_error(where + ": cannot parse '" + std::string(t) + "' as a number");
    return value;
}

inline std::size_t parse_size(std::string_view token, const std::string& where) {
    const auto t = trim(token);
    std::size_t value = 0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), value);
    if (res.ec != std::errc{} || res.ptr != t.data() + t.size())
        throw parse_error(where + ": cannot parse '" + std::string(t) +
                          "' as a non-negative integer");
    return value;
}

struct PacketDraft {
    std::optional<double> sigma0, x0, p0, weight_re, weight_im;
};

} // namespace detail

// Flat key=value format, one pair per line. '#' lines are comments. Keys:
//   hbar, mass, pre_trap.k, post_trap.k, quench_time,
//   grid.xmin, grid.xmax, grid.n, times (comma separated, strictly increasing),
//   packet.<i>.{sigma0, x0, p0, weight_re, weight_im} with i = 0, 1, ...
// Unknown and duplicate keys are errors that cite their line numbers.
inline ScenarioConfig parse_scenario(std::istream& in, const std::string& source_name) {
    std::map<std::string, int> seen_lines;
    std::optional<double> hbar, mass, quench_time, pre_k, post_k, xmin, xmax;
    std::optional<std::size_t> grid_n;
    std::optional<std::string> times_raw;
    int times_line = 0;
    std::map<std::size_t, detail::PacketDraft> drafts;

    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto stripped = detail::trim(line);
        if (stripped.empty() || stripped.front() == '#') continue;
        const auto where = source_name + ":" + std::to_string(line_no);

        const auto eq = stripped.find('=');
        if (eq == std::string_view::npos)
            throw parse_error(where + ": expected key = value");
        const std::string key{detail::trim(stripped.substr(0, eq))};
        const std::string value{detail::trim(stripped.substr(eq + 1))};
        if (key.empty()) throw parse_error(where + ": empty key");
        if (value.empty()) throw parse_error(where + ": empty value for '" + key + "'");

        const auto [it, fresh] = seen_lines.emplace(key, line_no);
        if (!fresh)
            throw parse_error(where + ": duplicate key '" + key + "' (first set on line " +
                              std::to_string(it->second) + ")");

        if (key == "hbar") hbar = detail::parse_double(value, where);
        else if (key == "mass") mass = detail::parse_double(value, where);
        else if (key == "quench_time") quench_time = detail::parse_double(value, where);
        else if (key == "pre_trap.k") pre_k = detail::parse_double(value, where);
        else if (key == "post_trap.k") post_k = detail::parse_double(value, where);
        else if (key == "grid.xmin") xmin = detail::parse_double(value, where);
        else if (key == "grid.xmax") xmax = detail::parse_double(value, where);
        else if (key == "grid.n") grid_n = detail::parse_size(value, where);
        else if (key == "times") { times_raw = value; times_line = line_no; }
        else if (key.starts_with("packet.")) {
            const auto rest = std::string_view(key).substr(7);
            const auto dot = rest.find('.');
            if (dot == std::string_view::npos)
                throw parse_error(where + ": packet keys look like packet.<index>.<field>");
            const auto index = detail::parse_size(rest.substr(0, dot), where);
            const auto field = rest.substr(dot + 1);
            auto& draft = drafts[index];
            if (field == "sigma0") draft.sigma0 = detail::parse_double(value, where);
            else if (field == "x0") draft.x0 = detail::parse_double(value, where);
            else if (field == "p0") draft.p0 = detail::parse_double(value, where);
            else if (field == "weight_re") draft.weight_re = detail::parse_double(value, where);
            else if (field == "weight_im") draft.weight_im = detail::parse_double(value, where);
            else
                throw parse_error(where + ": unknown packet field '" + std::string(field) +
                                  "'");
        } else {
            throw parse_error(where + ": unknown key '" + key + "'");
        }
    }

    ScenarioConfig cfg;
    if (hbar) cfg.params.hbar = *hbar;
    if (mass) cfg.params.mass = *mass;
    cfg.params.validate();

    if (pre_k) {
        cfg.pre_trap = TrapSpec{*pre_k};
        cfg.pre_trap->validate();
    }
    if (post_k) {
        cfg.post_trap = TrapSpec{*post_k};
        cfg.post_trap->validate();
    }
    if (quench_time) {
        if (!std::isfinite(*quench_time))
            throw validation_error(source_name + ": quench_time must be finite");
        cfg.quench_time = *quench_time;
    }

    if (!xmin || !xmax || !grid_n)
        throw validation_error(source_name +
                               ": grid.xmin, grid.xmax and grid.n are all required");
    cfg.grid = make_grid(*xmin, *xmax, *grid_n);

    if (!times_raw)
        throw validation_error(source_name + ": times is required");
    {
        const auto where = source_name + ":" + std::to_string(times_line);
        std::string token;
        std::istringstream ts{*times_raw};
        while (std::getline(ts, token, ','))
            cfg.sample_times.push_back(detail::parse_double(token, where));
        if (cfg.sample_times.empty())
            throw validation_error(where + ": times must list at least one value");
        for (std::size_t i = 1; i < cfg.sample_times.size(); ++i)
            if (!(cfg.sample_times[i] > cfg.sample_times[i - 1]))
                throw validation_error(where + ": times must be strictly increasing");
    }

    if (drafts.empty())
        throw validation_error(source_name + ": at least one packet.<i>.sigma0 is required");
    for (std::size_t i = 0; i < drafts.size(); ++i) {
        const auto it = drafts.find(i);
        if (it == drafts.end())
            throw validation_error(source_name + ": packet indices must be contiguous, " +
                                   "packet." + std::to_string(i) + " is missing");
        const auto& d = it->second;
        if (!d.sigma0)
            throw validation_error(source_name + ": packet." + std::to_string(i) +
                                   ".sigma0 is required");
        PacketComponent pc;
        pc.packet.sigma0 = *d.sigma0;
        pc.packet.x0 = d.x0.value_or(0.0);
        pc.packet.p0 = d.p0.value_or(0.0);
        pc.weight = complex{d.weight_re.value_or(1.0), d.weight_im.value_or(0.0)};
        pc.packet.validate();
        cfg.packets.push_back(pc);
    }

    return cfg;
}

inline ScenarioConfig parse_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw parse_error("cannot open config file '" + path + "'");
    return parse_scenario(in, path);
}

} // namespace quenchmap
