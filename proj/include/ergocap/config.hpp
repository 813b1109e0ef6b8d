#pragma once

// Experiment files. TOML with the sections
//   [network]  lambda d alpha beta delta epsilon b
//   [channel]  states, and either transition (rows) or invariant
//   [im]       gamma gamma_min cancellation nu_c candidate
//   [mc]       trials seed window_radius tail_fraction burn_in confidence_z threads
//   [sweep]    axis values
//   [caot]     g (one-based)
//   [outputs]  <subcommand> = file name
// Unknown keys are rejected so that typos do not silently fall back to defaults.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <toml++/toml.hpp>

#include "ergocap/error.hpp"
#include "ergocap/fsmc.hpp"
#include "ergocap/montecarlo.hpp"
#include "ergocap/sir.hpp"
#include "ergocap/spatial.hpp"

namespace ergocap {

struct Sweep {
    std::string axis;
    std::vector<double> values;
};

struct ExperimentSpec {
    NetworkParams network;
    std::optional<ChannelModel> channel;
    std::optional<ImPolicy> im;
    ExperimentConfig mc;
    std::optional<Sweep> sweep;
    std::optional<std::size_t> caot_g;  // zero-based
    std::map<std::string, std::string> outputs;
    std::string source;

    const ChannelModel& model() const { return *channel; }
};

namespace config {

inline const std::set<std::string, std::less<>>& network_axes() {
    static const std::set<std::string, std::less<>> axes{"lambda", "d", "alpha", "beta", "delta", "epsilon", "b"};
    return axes;
}

/// Mutable access to a network parameter by name, used for sweeps.
inline double& network_field(NetworkParams& p, std::string_view name) {
    if (name == "lambda") return p.lambda;
    if (name == "d") return p.d;
    if (name == "alpha") return p.alpha;
    if (name == "beta") return p.beta;
    if (name == "delta") return p.delta;
    if (name == "epsilon") return p.epsilon;
    if (name == "b") return p.b;
    throw Error(ErrorKind::Config, "sweep.axis: unknown parameter '" + std::string(name) + "'");
}

namespace detail {

[[noreturn]] inline void fail(const std::string& path, const std::string& what) {
    throw Error(ErrorKind::Config, path + ": " + what);
}

inline void check_keys(const toml::table& t, const std::string& section, std::initializer_list<std::string_view> keys) {
    for (const auto& [k, v] : t) {
        bool known = false;
        for (const auto key : keys) known = known || k.str() == key;
        if (!known) fail(section + "." + std::string(k.str()), "unknown key");
    }
}

inline const toml::table* section(const toml::table& root, std::string_view name) {
    const auto* node = root.get(name);
    if (node == nullptr) return nullptr;
    const auto* t = node->as_table();
    if (t == nullptr) fail(std::string(name), "expected a table");
    return t;
}

inline std::optional<double> number(const toml::table& t, const std::string& path, std::string_view key) {
    const auto* node = t.get(key);
    if (node == nullptr) return std::nullopt;
    if (const auto v = node->value<double>(); v && (node->is_floating_point() || node->is_integer())) return *v;
    fail(path + "." + std::string(key), "expected a number");
}

inline std::optional<std::int64_t> integer(const toml::table& t, const std::string& path, std::string_view key) {
    const auto* node = t.get(key);
    if (node == nullptr) return std::nullopt;
    if (!node->is_integer()) fail(path + "." + std::string(key), "expected an integer");
    return node->value<std::int64_t>();
}

inline std::optional<bool> boolean(const toml::table& t, const std::string& path, std::string_view key) {
    const auto* node = t.get(key);
    if (node == nullptr) return std::nullopt;
    if (!node->is_boolean()) fail(path + "." + std::string(key), "expected true or false");
    return node->value<bool>();
}

inline std::optional<std::string> string(const toml::table& t, const std::string& path, std::string_view key) {
    const auto* node = t.get(key);
    if (node == nullptr) return std::nullopt;
    if (!node->is_string()) fail(path + "." + std::string(key), "expected a string");
    return node->value<std::string>();
}

inline std::vector<double> numbers(const toml::node& node, const std::string& path) {
    const auto* arr = node.as_array();
    if (arr == nullptr) fail(path, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < arr->size(); ++i) {
        const auto& e = *arr->get(i);
        if (!(e.is_floating_point() || e.is_integer())) fail(path + "[" + std::to_string(i) + "]", "expected a number");
        out.push_back(*e.value<double>());
    }
    return out;
}

inline std::optional<std::vector<double>> numbers(const toml::table& t, const std::string& path, std::string_view key) {
    const auto* node = t.get(key);
    if (node == nullptr) return std::nullopt;
    return numbers(*node, path + "." + std::string(key));
}

inline void parse_network(const toml::table& t, NetworkParams& p) {
    check_keys(t, "network", {"lambda", "d", "alpha", "beta", "delta", "epsilon", "b"});
    for (const auto& name : network_axes()) {
        if (const auto v = number(t, "network", name)) network_field(p, name) = *v;
    }
    try {
        p.validate();
    } catch (const Error& e) {
        fail("network", e.what());
    }
}

inline ChannelModel parse_channel(const toml::table& t) {
    check_keys(t, "channel", {"states", "transition", "invariant"});
    auto states = numbers(t, "channel", "states");
    if (!states) fail("channel.states", "missing");
    const auto* transition = t.get("transition");
    const auto invariant = numbers(t, "channel", "invariant");
    if ((transition != nullptr) == invariant.has_value()) {
        fail("channel", "give exactly one of 'transition' or 'invariant'");
    }
    try {
        if (invariant) return ChannelModel::from_invariant(*states, *invariant);
        const auto* rows = transition->as_array();
        if (rows == nullptr) fail("channel.transition", "expected an array of rows");
        const auto m = static_cast<Eigen::Index>(rows->size());
        Eigen::MatrixXd p(m, m);
        for (Eigen::Index i = 0; i < m; ++i) {
            const auto row = numbers(*rows->get(static_cast<std::size_t>(i)),
                                     "channel.transition[" + std::to_string(i) + "]");
            if (static_cast<Eigen::Index>(row.size()) != m) {
                fail("channel.transition[" + std::to_string(i) + "]", "row length differs from the number of rows");
            }
            for (Eigen::Index j = 0; j < m; ++j) p(i, j) = row[static_cast<std::size_t>(j)];
        }
        return ChannelModel::validate(*states, p);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::Config) throw;
        fail("channel", e.what());
    }
}

inline ImPolicy parse_im(const toml::table& t, std::size_t m) {
    check_keys(t, "im", {"gamma", "gamma_min", "cancellation", "nu_c", "candidate"});
    ImPolicy p = ImPolicy::identity(m);
    if (const auto g = numbers(t, "im", "gamma")) p.gammas = *g;
    p.gamma_mins = numbers(t, "im", "gamma_min").value_or(p.gammas);
    p.cancellation_enabled = boolean(t, "im", "cancellation").value_or(false);
    p.nu_c = numbers(t, "im", "nu_c");
    if (const auto c = string(t, "im", "candidate")) {
        if (*c == "included") {
            p.candidate = CandidatePower::Included;
        } else if (*c == "excluded") {
            p.candidate = CandidatePower::Excluded;
        } else {
            fail("im.candidate", "expected 'included' or 'excluded'");
        }
    }
    try {
        p.validate(m);
    } catch (const Error& e) {
        fail("im", e.what());
    }
    return p;
}

inline void parse_mc(const toml::table& t, ExperimentConfig& c) {
    check_keys(t, "mc", {"trials", "seed", "window_radius", "tail_fraction", "burn_in", "confidence_z", "threads"});
    if (const auto v = integer(t, "mc", "trials")) {
        if (*v < 1) fail("mc.trials", "must be at least 1");
        c.trials = static_cast<std::size_t>(*v);
    }
    if (const auto v = integer(t, "mc", "seed")) c.seed = static_cast<std::uint64_t>(*v);
    if (const auto v = number(t, "mc", "window_radius")) c.window_radius = *v;
    if (const auto v = number(t, "mc", "tail_fraction")) c.tail_fraction = *v;
    if (const auto v = integer(t, "mc", "burn_in")) {
        if (*v < 0) fail("mc.burn_in", "must be non-negative");
        c.burn_in = static_cast<std::size_t>(*v);
    }
    if (const auto v = number(t, "mc", "confidence_z")) c.confidence_z = *v;
    if (const auto v = integer(t, "mc", "threads")) {
        if (*v < 0) fail("mc.threads", "must be non-negative");
        c.threads = static_cast<unsigned>(*v);
    }
    try {
        c.validate();
    } catch (const Error& e) {
        fail("mc", e.what());
    }
}

}  // namespace detail

inline ExperimentSpec parse(const toml::table& root, std::string source = "<memory>") {
    using namespace detail;
    check_keys(root, "", {"network", "channel", "im", "mc", "sweep", "caot", "outputs"});
    ExperimentSpec spec;
    spec.source = std::move(source);
    if (const auto* t = section(root, "network")) parse_network(*t, spec.network);
    const auto* ch = section(root, "channel");
    if (ch == nullptr) fail("channel", "missing section");
    spec.channel = parse_channel(*ch);
    const std::size_t m = spec.channel->size();
    if (const auto* t = section(root, "im")) spec.im = parse_im(*t, m);
    if (const auto* t = section(root, "mc")) parse_mc(*t, spec.mc);
    if (const auto* t = section(root, "sweep")) {
        check_keys(*t, "sweep", {"axis", "values"});
        Sweep s;
        s.axis = string(*t, "sweep", "axis").value_or("");
        if (!network_axes().contains(s.axis)) fail("sweep.axis", "'" + s.axis + "' is not a network parameter");
        s.values = numbers(*t, "sweep", "values").value_or(std::vector<double>{});
        for (std::size_t i = 0; i < s.values.size(); ++i) {
            NetworkParams probe = spec.network;
            network_field(probe, s.axis) = s.values[i];
            try {
                probe.validate();
            } catch (const Error& e) {
                fail("sweep.values[" + std::to_string(i) + "]", e.what());
            }
        }
        spec.sweep = std::move(s);
    }
    if (const auto* t = section(root, "caot")) {
        check_keys(*t, "caot", {"g"});
        const auto g = integer(*t, "caot", "g");
        if (!g) fail("caot.g", "missing");
        if (*g < 2 || *g > static_cast<std::int64_t>(m)) fail("caot.g", "must lie in [2, number of states]");
        spec.caot_g = static_cast<std::size_t>(*g - 1);
    }
    if (const auto* t = section(root, "outputs")) {
        for (const auto& [k, v] : *t) {
            if (!v.is_string()) fail("outputs." + std::string(k.str()), "expected a file name");
            spec.outputs[std::string(k.str())] = *v.value<std::string>();
        }
    }
    return spec;
}

inline ExperimentSpec parse_string(std::string_view text, std::string source = "<memory>") {
    try {
        return parse(toml::parse(text, source), source);
    } catch (const toml::parse_error& e) {
        throw Error(ErrorKind::Config, source + ":" + std::to_string(e.source().begin.line) + ": " +
                                           std::string(e.description()));
    }
}

inline ExperimentSpec load(const std::string& path) {
    try {
        return parse(toml::parse_file(path), path);
    } catch (const toml::parse_error& e) {
        throw Error(ErrorKind::Config,
                    path + ":" + std::to_string(e.source().begin.line) + ": " + std::string(e.description()));
    }
}

}  // namespace config

}  // namespace ergocap
