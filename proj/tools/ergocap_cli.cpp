// Experiment runner: reads a TOML experiment file, evaluates bounds or runs
// simulations and writes one CSV per subcommand.

#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI/CLI11.hpp>

#include "ergocap/ergocap.hpp"

#ifndef ERGOCAP_GIT_DESCRIBE
#define ERGOCAP_GIT_DESCRIBE "unknown"
#endif

namespace {

using namespace ergocap;
namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitVerification = 2;
constexpr int kExitRuntime = 3;

struct Options {
    std::string spec_path;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> trials;
    std::optional<unsigned> threads;
};

bool is_validation(ErrorKind k) {
    switch (k) {
        case ErrorKind::InvalidArgument:
        case ErrorKind::NotStochastic:
        case ErrorKind::NotOrdered:
        case ErrorKind::Reducible:
        case ErrorKind::BadStateIndex:
        case ErrorKind::BadThreshold:
        case ErrorKind::PolicyDisabled:
        case ErrorKind::MissingNuC:
        case ErrorKind::DegenerateGeometry:
        case ErrorKind::Config:
            return true;
        default:
            return false;
    }
}

struct Point {
    std::string axis;
    double value;
    NetworkParams params;
};

/// Sweep points: the configured axis and values, a single point when the
/// value list is empty, or the subcommand's default grid.
std::vector<Point> sweep_points(const ExperimentSpec& spec, const std::string& default_axis,
                                const std::vector<double>& default_values) {
    std::string axis = default_axis;
    std::vector<double> values = default_values;
    if (spec.sweep) {
        axis = spec.sweep->axis;
        values = spec.sweep->values;
    }
    NetworkParams base = spec.network;
    if (values.empty()) values.push_back(config::network_field(base, axis));
    std::vector<Point> out;
    for (const double v : values) {
        NetworkParams p = base;
        config::network_field(p, axis) = v;
        p.validate();
        out.push_back({axis, v, p});
    }
    return out;
}

std::string join_ints(std::size_t n, std::size_t base) {
    std::string s;
    for (std::size_t i = 0; i < n; ++i) s += (i ? " " : "") + std::to_string(i + base);
    return s;
}

void write_metadata(csv::Writer& w, const std::string& subcommand, const ExperimentSpec& spec) {
    const auto& n = spec.network;
    const auto& m = spec.model();
    w.meta("tool", "ergocap " + subcommand);
    w.meta("git_describe", ERGOCAP_GIT_DESCRIBE);
    w.meta("spec", spec.source);
    w.meta("seed", std::to_string(spec.mc.seed));
    w.meta("trials", std::to_string(spec.mc.trials));
    w.meta("window_radius", spec.mc.window(n.alpha));
    w.meta("burn_in", std::to_string(spec.mc.burn_in));
    w.meta("confidence_z", spec.mc.confidence_z);
    for (const auto& name : config::network_axes()) {
        NetworkParams copy = n;
        w.meta("network." + name, config::network_field(copy, name));
    }
    w.meta("channel.states", csv::format(std::vector<double>(m.states().begin(), m.states().end())));
    w.meta("channel.invariant", csv::format(std::vector<double>(m.invariant().begin(), m.invariant().end())));
    for (Eigen::Index i = 0; i < m.transition().rows(); ++i) {
        std::vector<double> row(m.transition().row(i).begin(), m.transition().row(i).end());
        w.meta("channel.transition[" + std::to_string(i + 1) + "]", csv::format(row));
    }
    if (spec.im) {
        w.meta("im.gamma", csv::format(spec.im->gammas));
        w.meta("im.gamma_min", csv::format(spec.im->gamma_mins));
        w.meta("im.cancellation", spec.im->cancellation_enabled ? "true" : "false");
        w.meta("im.candidate", spec.im->candidate == CandidatePower::Included ? "included" : "excluded");
    }
    w.meta("states", join_ints(m.size(), 1));
}

class Output {
public:
    Output(const Options& opt, const ExperimentSpec& spec, const std::string& subcommand) {
        fs::create_directories(opt.out_dir);
        const auto it = spec.outputs.find(subcommand);
        path_ = fs::path(opt.out_dir) / (it != spec.outputs.end() ? it->second : subcommand + ".csv");
        file_.open(path_);
        if (!file_) throw std::runtime_error("cannot open " + path_.string());
        writer_.emplace(file_);
        write_metadata(*writer_, subcommand, spec);
    }
    csv::Writer& operator*() { return *writer_; }
    csv::Writer* operator->() { return &*writer_; }
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
    std::ofstream file_;
    std::optional<csv::Writer> writer_;
};

std::vector<double> linspace(double a, double b, std::size_t n) {
    std::vector<double> v;
    for (std::size_t i = 0; i < n; ++i) v.push_back(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
    return v;
}

/// The policy with nu_c filled in: taken from the file, or estimated at the
/// network intensity.
ImPolicy policy_with_nu_c(const ExperimentSpec& spec, const NetworkParams& params, bool& estimated) {
    ImPolicy p = *spec.im;
    estimated = false;
    if (!p.nu_c) {
        if (!p.cancellation_enabled) {
            p.nu_c = std::vector<double>(spec.model().size(), 0.0);
        } else {
            std::vector<double> nu_c;
            for (std::size_t k = 0; k < spec.model().size(); ++k) {
                nu_c.push_back(mc::estimate_nu_c(params.lambda, k, p, params, spec.model(), spec.mc).thinned.mean);
            }
            p.nu_c = nu_c;
            estimated = true;
        }
    }
    return p;
}

int cmd_bounds(const Options& opt, const ExperimentSpec& spec) {
    const auto& model = spec.model();
    const auto pts = sweep_points(spec, "lambda", {});
    Output out(opt, spec, "bounds");
    std::vector<std::string> cols{pts.front().axis, "nu", "eta", "sigma2"};
    for (std::size_t k = 1; k <= model.size(); ++k) {
        for (const char* c : {"lower_", "upper_", "gap_", "past_singularity_"}) cols.push_back(c + std::to_string(k));
    }
    out->header(cols);
    for (const auto& p : pts) {
        const auto c = bounds::constants(p.params, model);
        std::vector<csv::Cell> row{p.value, c.nu, c.eta, c.sigma2};
        for (std::size_t k = 0; k < model.size(); ++k) {
            const auto b = bounds::outage_bounds(p.params.lambda, k, p.params, model);
            row.insert(row.end(), {b.lower, b.upper, b.gap(), std::int64_t{b.past_singularity}});
        }
        out->row(row);
    }
    return kExitOk;
}

int cmd_simulate(const Options& opt, const ExperimentSpec& spec) {
    const auto& model = spec.model();
    const auto pts = sweep_points(spec, "lambda", {});
    Output out(opt, spec, "simulate");
    out->header({pts.front().axis, "state", "q_hat", "stderr", "lower", "upper", "in_sandwich"});
    const double z = spec.mc.confidence_z;
    for (const auto& p : pts) {
        std::optional<ImPolicy> policy;
        bool estimated = false;
        if (spec.im) policy = policy_with_nu_c(spec, p.params, estimated);
        const auto q = mc::estimate_qbar(p.params.lambda, p.params, model, policy ? &*policy : nullptr, spec.mc);
        for (std::size_t k = 0; k < model.size(); ++k) {
            const auto b = policy ? bounds::im_outage_bounds(p.params.lambda, k, *policy, p.params, model)
                                  : bounds::outage_bounds(p.params.lambda, k, p.params, model);
            const auto& e = q.per_state[k];
            const bool inside = e.hi(z) >= b.lower && e.lo(z) <= b.upper;
            out->row({p.value, std::int64_t(k + 1), e.mean, e.std_error, b.lower, b.upper, std::int64_t{inside}});
        }
    }
    return kExitOk;
}

int cmd_sweep_delta(const Options& opt, const ExperimentSpec& spec) {
    if (spec.sweep && spec.sweep->axis != "delta") {
        throw Error(ErrorKind::Config, "sweep.axis: sweep-delta needs axis = \"delta\"");
    }
    const auto& model = spec.model();
    const auto pts = sweep_points(spec, "delta", linspace(1.0, 4.0, 13));
    Output out(opt, spec, "sweep-delta");
    out->header({"delta", "state", "lower", "upper", "gap", "q_hat", "stderr"});
    // The outage itself does not depend on delta, only the bounds do.
    const auto q = mc::estimate_qbar(spec.network.lambda, spec.network, model, nullptr, spec.mc);
    for (const auto& p : pts) {
        for (std::size_t k = 0; k < model.size(); ++k) {
            const auto b = bounds::outage_bounds(p.params.lambda, k, p.params, model);
            out->row({p.value, std::int64_t(k + 1), b.lower, b.upper, b.gap(), q.per_state[k].mean,
                      q.per_state[k].std_error});
        }
    }
    return kExitOk;
}

std::vector<csv::Cell> etc_cells(const bounds::EtcResult& b, const mc::EtcEstimate& e) {
    auto maybe = [&](double v) -> csv::Cell { return b.upper_available ? csv::Cell{v} : csv::Cell{std::string{}}; };
    return {b.lambda_lower, maybe(b.lambda_upper), b.etc_lower, maybe(b.etc_upper),
            e.search.lambda_hat, e.search.lambda_lo, e.search.lambda_hi, e.etc.mean, e.etc.std_error};
}

const std::vector<std::string> kEtcColumns{"lambda_lower", "lambda_upper", "etc_lower", "etc_upper", "lambda_hat",
                                           "lambda_lo",    "lambda_hi",    "etc_hat",   "etc_stderr"};

int cmd_etc(const Options& opt, const ExperimentSpec& spec) {
    const auto& model = spec.model();
    const auto pts = sweep_points(spec, "epsilon", {});
    Output out(opt, spec, "etc");
    std::vector<std::string> cols{pts.front().axis};
    cols.insert(cols.end(), kEtcColumns.begin(), kEtcColumns.end());
    cols.insert(cols.end(), {"etc_throughput", "etc_throughput_stderr"});
    out->header(cols);
    for (const auto& p : pts) {
        const double eps = p.params.epsilon;
        const auto b = bounds::etc_bounds(eps, p.params, model);
        const auto e = mc::estimate_etc(eps, p.params, model, nullptr, spec.mc);
        std::vector<csv::Cell> row{p.value};
        const auto cells = etc_cells(b, e);
        row.insert(row.end(), cells.begin(), cells.end());
        row.insert(row.end(), {e.etc_throughput.mean, e.etc_throughput.std_error});
        out->row(row);
    }
    return kExitOk;
}

int cmd_etc_caot(const Options& opt, const ExperimentSpec& spec) {
    if (!spec.caot_g) throw Error(ErrorKind::Config, "caot.g: required by etc-caot");
    const std::size_t g = *spec.caot_g;
    const auto& model = spec.model();
    const auto pts = sweep_points(spec, "epsilon", {});
    Output out(opt, spec, "etc-caot");
    const auto decision = bounds::caot_beneficial(g, spec.network.epsilon, spec.network, model);
    out->meta("caot.g", std::to_string(g + 1));
    out->meta("caot.phi_g", decision.phi_g);
    out->meta("caot.beneficial", decision.beneficial ? "true" : "false");
    out->meta("caot.gain", decision.gain);
    out->meta("caot.loss", decision.loss);
    out->meta("caot.threshold", decision.threshold);
    std::vector<std::string> cols{pts.front().axis, "mode"};
    cols.insert(cols.end(), kEtcColumns.begin(), kEtcColumns.end());
    cols.push_back("etc_active");
    out->header(cols);
    for (const auto& p : pts) {
        const double eps = p.params.epsilon;
        {
            const auto b = bounds::etc_bounds(eps, p.params, model);
            const auto e = mc::estimate_etc(eps, p.params, model, nullptr, spec.mc);
            std::vector<csv::Cell> row{p.value, std::string("no_caot")};
            const auto cells = etc_cells(b, e);
            row.insert(row.end(), cells.begin(), cells.end());
            row.push_back(e.etc.mean);
            out->row(row);
        }
        const auto b = bounds::etc_bounds_caot(eps, g, p.params, model);
        const auto e = mc::estimate_caot(eps, g, p.params, model, spec.mc);
        std::vector<csv::Cell> row{p.value, std::string("caot")};
        const auto cells = etc_cells(b, e.etc);
        row.insert(row.end(), cells.begin(), cells.end());
        row.push_back(e.etc_active.mean);
        out->row(row);
    }
    return kExitOk;
}

int cmd_etc_im(const Options& opt, const ExperimentSpec& spec) {
    if (!spec.im) throw Error(ErrorKind::Config, "im: section required by etc-im");
    const auto& model = spec.model();
    bool estimated = false;
    const ImPolicy policy = policy_with_nu_c(spec, spec.network, estimated);
    const auto pts = sweep_points(spec, "epsilon", {});
    Output out(opt, spec, "etc-im");
    out->meta("im.nu_c", csv::format(*policy.nu_c));
    out->meta("im.nu_c_source", estimated ? "estimated at network.lambda" : "spec");
    std::vector<std::string> cols{pts.front().axis, "mode"};
    cols.insert(cols.end(), kEtcColumns.begin(), kEtcColumns.end());
    out->header(cols);
    for (const auto& p : pts) {
        const double eps = p.params.epsilon;
        {
            const auto b = bounds::etc_bounds(eps, p.params, model);
            const auto e = mc::estimate_etc(eps, p.params, model, nullptr, spec.mc);
            std::vector<csv::Cell> row{p.value, std::string("no_im")};
            const auto cells = etc_cells(b, e);
            row.insert(row.end(), cells.begin(), cells.end());
            out->row(row);
        }
        const auto b = bounds::im_etc_bounds(eps, policy, p.params, model).bounds;
        const auto e = mc::estimate_etc(eps, p.params, model, &policy, spec.mc);
        std::vector<csv::Cell> row{p.value, std::string("im")};
        const auto cells = etc_cells(b, e);
        row.insert(row.end(), cells.begin(), cells.end());
        out->row(row);
    }
    return kExitOk;
}

int cmd_verify(const Options& opt, const ExperimentSpec& spec) {
    const auto& model = spec.model();
    const auto& params = spec.network;
    const double lambda = params.lambda;
    const double z = spec.mc.confidence_z;
    Output out(opt, spec, "verify");
    out->header({"check", "state", "value", "reference", "error", "tolerance", "pass"});
    bool all = true;
    auto emit = [&](const std::string& check, std::size_t state, double value, double reference, double error,
                    double tolerance, bool pass) {
        all = all && pass;
        out->row({check, std::int64_t(state), value, reference, error, tolerance, std::int64_t{pass}});
    };
    auto rel = [](double v, double r) { return r != 0.0 ? std::abs(v - r) / std::abs(r) : std::abs(v); };

    for (std::size_t k = 0; k < model.size(); ++k) {
        const auto c = mc::verify_delta_count(lambda, k, params, model, spec.mc);
        emit("delta_count", k + 1, c.mean, c.predicted, c.rel_error, 0.03, !c.negative_prediction && c.rel_error <= 0.03);
    }
    for (std::size_t k = 0; k < model.size(); ++k) {
        const auto r = mc::verify_interference_moments(lambda, k, params, model, spec.mc);
        emit("residual_mean", k + 1, r.mean, r.mean_formula, r.mean_rel_error, 0.03, r.mean_rel_error <= 0.03);
        emit("residual_variance", k + 1, r.variance, r.variance_formula, r.variance_rel_error, 0.05,
             r.variance_rel_error <= 0.05);
        const double vc = rel(r.variance, r.variance_campbell);
        emit("residual_variance_campbell", k + 1, r.variance, r.variance_campbell, vc, 0.05, vc <= 0.05);
    }
    {
        Rng rng(spec.mc.seed, tag("verify-trajectory"));
        const auto path = fsmc::simulate_trajectory(model, 0, 1000000, rng);
        const auto occ = fsmc::empirical_occupancy(path, model.size());
        for (std::size_t k = 0; k < model.size(); ++k) {
            const double err = std::abs(occ[k] - model.phi(k));
            emit("occupancy", k + 1, occ[k], model.phi(k), err, 1e-2, err <= 1e-2);
        }
    }
    {
        const double radius = spec.mc.window(params.alpha);
        const double area = std::numbers::pi * radius * radius;
        std::vector<double> counts(model.size(), 0.0);
        constexpr std::size_t kSamples = 10000;
        for (std::size_t i = 0; i < kSamples; ++i) {
            Rng rng(spec.mc.seed, tag("verify-thinning"), i);
            const auto pattern = spatial::sample_ppp(lambda, radius, model, rng, spec.mc.burn_in);
            for (std::size_t k = 0; k < model.size(); ++k) {
                counts[k] += static_cast<double>(spatial::thin_by_state(pattern, k, model.size()).size());
            }
        }
        for (std::size_t k = 0; k < model.size(); ++k) {
            const double intensity = counts[k] / (static_cast<double>(kSamples) * area);
            const double expected = model.phi(k) * lambda;
            const double err = rel(intensity, expected);
            emit("thinned_intensity", k + 1, intensity, expected, err, 0.02, err <= 0.02);
        }
    }
    {
        const auto q = mc::estimate_qbar(lambda, params, model, nullptr, spec.mc);
        for (std::size_t k = 0; k < model.size(); ++k) {
            const auto b = bounds::outage_bounds(lambda, k, params, model);
            const auto& e = q.per_state[k];
            emit("sandwich_lower", k + 1, e.mean, b.lower, z * e.std_error, z, e.hi(z) >= b.lower);
            emit("sandwich_upper", k + 1, e.mean, b.upper, z * e.std_error, z, e.lo(z) <= b.upper);
        }
    }
    std::cerr << (all ? "verify: all checks passed\n" : "verify: some checks failed (see pass column)\n");
    return all ? kExitOk : kExitVerification;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Outage bounds, transmission capacity and Monte-Carlo checks for ad hoc networks over Markov fading"};
    app.require_subcommand(1);
    Options opt;
    struct Sub {
        const char* name;
        const char* help;
        int (*run)(const Options&, const ExperimentSpec&);
    };
    const std::vector<Sub> subs{
        {"bounds", "analytic outage bounds per state", cmd_bounds},
        {"simulate", "Monte-Carlo outage estimates next to the bounds", cmd_simulate},
        {"sweep-delta", "outage bound gap versus delta", cmd_sweep_delta},
        {"etc", "capacity bounds and simulated maximum intensity versus epsilon", cmd_etc},
        {"etc-caot", "capacity with and without opportunistic transmission", cmd_etc_caot},
        {"etc-im", "capacity with and without interference management", cmd_etc_im},
        {"verify", "oracle checks of the closed-form moments and counts", cmd_verify},
    };
    std::vector<std::pair<CLI::App*, const Sub*>> registered;
    for (const auto& s : subs) {
        auto* sc = app.add_subcommand(s.name, s.help);
        sc->add_option("--spec", opt.spec_path, "experiment file (TOML)")->required()->check(CLI::ExistingFile);
        sc->add_option("--out", opt.out_dir, "output directory")->capture_default_str();
        sc->add_option("--seed", opt.seed, "override mc.seed");
        sc->add_option("--trials", opt.trials, "override mc.trials")->check(CLI::PositiveNumber);
        sc->add_option("--threads", opt.threads, "worker threads (0 = all cores)");
        registered.emplace_back(sc, &s);
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitValidation;
    }
    try {
        ExperimentSpec spec = config::load(opt.spec_path);
        if (opt.seed) spec.mc.seed = *opt.seed;
        if (opt.trials) spec.mc.trials = *opt.trials;
        if (opt.threads) spec.mc.threads = *opt.threads;
        for (const auto& [sc, s] : registered) {
            if (sc->parsed()) return s->run(opt, spec);
        }
        return kExitValidation;
    } catch (const Error& e) {
        std::cerr << "error [" << to_string(e.kind()) << "]: " << e.what() << '\n';
        return is_validation(e.kind()) ? kExitValidation : kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}
