#pragma once

// Monte-Carlo experiments at the typical receiver.
//
// Every trial owns a generator keyed by (seed, stream, trial index). Trials
// are grouped into fixed-size chunks whose partial sums are merged in chunk
// order, so results are bit-identical for any number of worker threads.

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <numbers>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "ergocap/bounds.hpp"
#include "ergocap/error.hpp"
#include "ergocap/fsmc.hpp"
#include "ergocap/rng.hpp"
#include "ergocap/sir.hpp"
#include "ergocap/spatial.hpp"

namespace ergocap {

struct ExperimentConfig {
    std::size_t trials = 100000;
    std::uint64_t seed = 1;
    std::optional<double> window_radius;  // overrides tail_fraction when set
    double tail_fraction = 0.005;         // truncated mean interference / in-window mean
    std::size_t burn_in = 0;              // 0 draws marks from the invariant law
    double confidence_z = 3.0;
    unsigned threads = 0;                 // 0 uses every hardware thread

    void validate() const {
        if (trials < 1) throw Error(ErrorKind::InvalidArgument, "trials must be at least 1");
        if (!(tail_fraction > 0.0 && tail_fraction <= 0.05)) {
            throw Error(ErrorKind::InvalidArgument, "tail_fraction must lie in (0, 0.05]");
        }
        if (window_radius && !(*window_radius > 1.0)) {
            throw Error(ErrorKind::InvalidArgument, "window radius must exceed 1");
        }
        if (!(confidence_z > 0.0)) throw Error(ErrorKind::InvalidArgument, "confidence_z must be positive");
    }

    double window(double alpha) const {
        return window_radius ? *window_radius : spatial::window_radius_for_tail_fraction(alpha, tail_fraction);
    }
};

struct Estimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t trials = 0;
    bool clamped = false;

    double lo(double z) const { return mean - z * std_error; }
    double hi(double z) const { return mean + z * std_error; }
};

namespace mc {

namespace detail {

inline constexpr std::size_t kChunk = 1024;

/// Streaming mean and second central moment, merged with Chan's update.
struct Moments {
    double n = 0.0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        n += 1.0;
        const double d = x - mean;
        mean += d / n;
        m2 += d * (x - mean);
    }

    void merge(const Moments& o) {
        if (o.n == 0.0) return;
        if (n == 0.0) {
            *this = o;
            return;
        }
        const double total = n + o.n;
        const double d = o.mean - mean;
        mean += d * o.n / total;
        m2 += o.m2 + d * d * n * o.n / total;
        n = total;
    }

    double population_variance() const { return n > 0.0 ? m2 / n : 0.0; }
    double sample_variance() const { return n > 1.0 ? m2 / (n - 1.0) : 0.0; }

    Estimate estimate() const {
        Estimate e;
        e.mean = mean;
        e.trials = static_cast<std::size_t>(n);
        e.std_error = n > 0.0 ? std::sqrt(population_variance() / n) : 0.0;
        return e;
    }
};

inline unsigned resolve_threads(unsigned requested, std::size_t chunks) {
    unsigned n = requested == 0 ? std::max(1u, std::thread::hardware_concurrency()) : requested;
    return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(chunks, 1)));
}

/// Runs trial(i, acc) for i in [0, trials) and merges the per-chunk
/// accumulators in chunk order. Acc needs default construction and merge().
template <class Acc, class Trial>
Acc reduce_trials(std::size_t trials, unsigned threads, Trial&& trial) {
    const std::size_t chunks = (trials + kChunk - 1) / kChunk;
    std::vector<Acc> parts(chunks);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        try {
            for (;;) {
                const std::size_t c = next.fetch_add(1);
                if (c >= chunks) break;
                Acc acc;
                const std::size_t end = std::min(trials, (c + 1) * kChunk);
                for (std::size_t i = c * kChunk; i < end; ++i) {
                    trial(static_cast<std::uint64_t>(i), acc);
                }
                parts[c] = std::move(acc);
            }
        } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            next.store(chunks);
        }
    };
    const unsigned n = resolve_threads(threads, chunks);
    if (n <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(n);
        for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);
    Acc total;
    for (const auto& p : parts) total.merge(p);
    return total;
}

inline std::uint64_t key(double x) { return std::bit_cast<std::uint64_t>(x); }

/// Per-trial outage accumulator: the weighted average over desired states and
/// one Bernoulli counter per state.
struct OutageAcc {
    Moments weighted;
    std::vector<double> outages;
    double n = 0.0;

    void merge(const OutageAcc& o) {
        weighted.merge(o.weighted);
        if (outages.size() < o.outages.size()) outages.resize(o.outages.size(), 0.0);
        for (std::size_t k = 0; k < o.outages.size(); ++k) outages[k] += o.outages[k];
        n += o.n;
    }
};

inline MarkedPattern& scratch_pattern() {
    thread_local MarkedPattern pattern;
    return pattern;
}

/// Outage experiment: interferers with marks >= g transmit, and the desired
/// state is drawn from {k >= g} with weights phi_k / phi_g.
struct OutageSetup {
    double lambda = 0.0;
    std::size_t g = 0;
    const ImPolicy* policy = nullptr;
};

inline OutageAcc run_outage(const OutageSetup& setup, const NetworkParams& params, const ChannelModel& model,
                            const ExperimentConfig& cfg, std::size_t trials, std::uint64_t stream) {
    const std::size_t m = model.size();
    const double radius = cfg.window(params.alpha);
    const double phi_g = model.tail_mass(setup.g);
    std::vector<double> desired(m);
    for (std::size_t k = 0; k < m; ++k) desired[k] = params.desired_gain(model.state(k));
    return reduce_trials<OutageAcc>(trials, cfg.threads, [&](std::uint64_t i, OutageAcc& acc) {
        if (acc.outages.empty()) acc.outages.assign(m, 0.0);
        Rng rng(cfg.seed, stream, i);
        auto& pattern = scratch_pattern();
        spatial::sample_ppp_into(pattern, setup.lambda, 0.0, radius, model, rng, cfg.burn_in);
        double weighted = 0.0;
        if (setup.policy == nullptr) {
            double interference = 0.0;
            for (const auto& p : pattern.points) {
                if (p.mark >= setup.g) interference += sir::received_power(p, model, params.alpha);
            }
            for (std::size_t k = setup.g; k < m; ++k) {
                if (interference > 0.0 && desired[k] / interference < params.beta) {
                    acc.outages[k] += 1.0;
                    weighted += model.phi(k) / phi_g;
                }
            }
        } else {
            MarkedPattern& active = pattern;
            if (setup.g > 0) {
                std::erase_if(active.points, [&](const Point& p) { return p.mark < setup.g; });
            }
            for (std::size_t k = setup.g; k < m; ++k) {
                if (sir::sir_with_im(active, model, k, *setup.policy, params).outage) {
                    acc.outages[k] += 1.0;
                    weighted += model.phi(k) / phi_g;
                }
            }
        }
        acc.weighted.add(weighted);
        acc.n += 1.0;
    });
}

inline Estimate bernoulli(double successes, double n) {
    Estimate e;
    e.trials = static_cast<std::size_t>(n);
    if (n <= 0.0) return e;
    e.mean = successes / n;
    e.std_error = std::sqrt(e.mean * (1.0 - e.mean) / n);
    return e;
}

inline std::uint64_t outage_stream(const OutageSetup& s) {
    std::uint64_t h = hash_combine(tag("outage"), key(s.lambda));
    h = hash_combine(h, s.g);
    if (s.policy != nullptr) {
        h = hash_combine(h, tag("im"));
        for (const double gmm : s.policy->gammas) h = hash_combine(h, key(gmm));
        h = hash_combine(h, s.policy->cancellation_enabled ? 1u : 0u);
    }
    return h;
}

}  // namespace detail

/// Outage estimate for all desired states from a common set of patterns.
struct QbarEstimate {
    Estimate total;                  // sum_k phi_k q_k (conditioned on k >= g under CAOT)
    std::vector<Estimate> per_state; // q_k with stderr sqrt(p(1-p)/n)
};

namespace detail {

inline QbarEstimate outage_estimate(const OutageSetup& setup, const NetworkParams& params, const ChannelModel& model,
                                    const ExperimentConfig& cfg, std::size_t trials) {
    cfg.validate();
    if (setup.lambda < 0.0) throw Error(ErrorKind::InvalidArgument, "lambda must be non-negative");
    if (setup.policy != nullptr) setup.policy->validate(model.size());
    const auto acc = run_outage(setup, params, model, cfg, trials, outage_stream(setup));
    QbarEstimate out;
    out.total = acc.weighted.estimate();
    for (std::size_t k = 0; k < model.size(); ++k) {
        out.per_state.push_back(bernoulli(k < acc.outages.size() ? acc.outages[k] : 0.0, acc.n));
    }
    return out;
}

}  // namespace detail

/// Fraction of trials in outage for desired state k. Each trial draws a fresh
/// PPP on the truncation window with stationary marks. A policy switches the
/// receiver to suppression plus cancellation.
inline Estimate estimate_qk(double lambda, std::size_t k, const NetworkParams& params, const ChannelModel& model,
                            const ImPolicy* policy, const ExperimentConfig& cfg) {
    if (k >= model.size()) throw Error(ErrorKind::BadStateIndex, "state index out of range");
    return detail::outage_estimate({lambda, 0, policy}, params, model, cfg, cfg.trials).per_state[k];
}

inline QbarEstimate estimate_qbar(double lambda, const NetworkParams& params, const ChannelModel& model,
                                  const ImPolicy* policy, const ExperimentConfig& cfg) {
    return detail::outage_estimate({lambda, 0, policy}, params, model, cfg, cfg.trials);
}

/// Controls for the noisy bisection on lambda. Zero values select defaults
/// derived from the experiment config.
struct SearchOptions {
    double lambda_start = 0.0;            // first probe; default eps / (pi d^2)
    double lambda_max = 1.0;
    double rel_tol = 1e-3;
    int max_iterations = 60;
    std::size_t max_trials_per_point = 0; // default 16 x cfg.trials
    std::size_t total_budget = 0;         // default 256 x cfg.trials
    bool strict = true;                   // throw BracketFailure when lambda_max is not enough
};

struct IntensitySearch {
    double lambda_hat = 0.0;
    double lambda_lo = 0.0;   // outage CI entirely below eps
    double lambda_hi = 0.0;   // outage CI entirely above eps
    Estimate q_lo;
    Estimate q_hi;
    std::size_t trials_used = 0;
    int iterations = 0;
    bool at_upper_edge = false;  // constraint never binding up to lambda_max

    double half_width() const { return 0.5 * (lambda_hi - lambda_lo); }
};

namespace detail {

/// Bisection for sum_k phi_k q_k(lambda) = eps assuming the outage is
/// nondecreasing in lambda. Every decision uses the confidence interval; a
/// point whose interval still straddles eps after the per-point budget is
/// exhausted becomes the estimate, and the bracket is then tightened around
/// it with conclusive probes at widening offsets.
inline IntensitySearch search_intensity(double epsilon, std::size_t g, const ImPolicy* policy,
                                        const NetworkParams& params, const ChannelModel& model,
                                        const ExperimentConfig& cfg, const SearchOptions& opt) {
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw Error(ErrorKind::InvalidArgument, "epsilon must lie in (0,1)");
    cfg.validate();
    const double z = cfg.confidence_z;
    const std::size_t per_point_cap = opt.max_trials_per_point ? opt.max_trials_per_point : 16 * cfg.trials;
    const std::size_t budget = opt.total_budget ? opt.total_budget : 256 * cfg.trials;
    IntensitySearch out;
    out.q_lo = Estimate{0.0, 0.0, 0, false};

    enum class Side { Below, Above, Straddle };
    struct Probe {
        Side side;
        Estimate q;
    };
    auto probe = [&](double lambda) {
        std::size_t n = cfg.trials;
        for (;;) {
            auto q = outage_estimate({lambda, g, policy}, params, model, cfg, n).total;
            out.trials_used += n;
            if (q.hi(z) < epsilon) return Probe{Side::Below, q};
            if (q.lo(z) > epsilon) return Probe{Side::Above, q};
            if (2 * n > per_point_cap || out.trials_used + 2 * n > budget) return Probe{Side::Straddle, q};
            n *= 2;
        }
    };

    // Expand until a probe is confidently above eps.
    double lambda = opt.lambda_start > 0.0 ? opt.lambda_start
                                           : epsilon / (std::numbers::pi * params.d * params.d);
    lambda = std::min(lambda, opt.lambda_max);
    std::optional<std::pair<double, Estimate>> straddle;
    for (;;) {
        ++out.iterations;
        const auto p = probe(lambda);
        if (p.side == Side::Above) {
            out.lambda_hi = lambda;
            out.q_hi = p.q;
            break;
        }
        if (p.side == Side::Below) {
            out.lambda_lo = lambda;
            out.q_lo = p.q;
        } else if (!straddle) {
            straddle = {lambda, p.q};
        }
        if (lambda >= opt.lambda_max || out.trials_used >= budget) {
            if (opt.strict) {
                throw Error(ErrorKind::BracketFailure,
                            "outage at lambda_max = " + std::to_string(opt.lambda_max) + " is still below eps");
            }
            out.at_upper_edge = true;
            out.lambda_hi = opt.lambda_max;
            out.q_hi = p.q;
            out.lambda_hat = opt.lambda_max;
            return out;
        }
        lambda = std::min(2.0 * lambda, opt.lambda_max);
    }
    // Offsets start at the CI width mapped through the secant slope of the
    // bracket and double until the probe is conclusive or leaves the bracket.
    auto settle = [&](double x, const Estimate& q) {
        out.lambda_hat = x;
        const double slope = (out.q_hi.mean - out.q_lo.mean) / (out.lambda_hi - out.lambda_lo);
        const double step = std::max(slope > 0.0 ? z * q.std_error / slope : 0.0, opt.rel_tol * x);
        for (double d = step; x - d > out.lambda_lo && out.trials_used < budget; d *= 2.0) {
            ++out.iterations;
            const auto p = probe(x - d);
            if (p.side == Side::Below) {
                out.lambda_lo = x - d;
                out.q_lo = p.q;
                break;
            }
        }
        for (double d = step; x + d < out.lambda_hi && out.trials_used < budget; d *= 2.0) {
            ++out.iterations;
            const auto p = probe(x + d);
            if (p.side == Side::Above) {
                out.lambda_hi = x + d;
                out.q_hi = p.q;
                break;
            }
        }
        return out;
    };
    // A straddling probe found while expanding lies inside [lo, hi].
    if (straddle && straddle->first > out.lambda_lo) {
        return settle(straddle->first, straddle->second);
    }

    while (out.iterations < opt.max_iterations && out.lambda_hi - out.lambda_lo > opt.rel_tol * out.lambda_hi &&
           out.trials_used < budget) {
        ++out.iterations;
        const double mid = 0.5 * (out.lambda_lo + out.lambda_hi);
        const auto p = probe(mid);
        if (p.side == Side::Below) {
            out.lambda_lo = mid;
            out.q_lo = p.q;
        } else if (p.side == Side::Above) {
            out.lambda_hi = mid;
            out.q_hi = p.q;
        } else {
            return settle(mid, p.q);
        }
    }
    // Linear interpolation of the outage between the bracket ends.
    const double dq = out.q_hi.mean - out.q_lo.mean;
    const double t = dq > 0.0 ? std::clamp((epsilon - out.q_lo.mean) / dq, 0.0, 1.0) : 0.5;
    out.lambda_hat = out.lambda_lo + t * (out.lambda_hi - out.lambda_lo);
    return out;
}

}  // namespace detail

/// Largest intensity meeting the averaged outage constraint, as a confidence
/// bracket [lambda_lo, lambda_hi] and a point estimate inside it.
inline IntensitySearch find_max_intensity(double epsilon, const NetworkParams& params, const ChannelModel& model,
                                          const ImPolicy* policy, const ExperimentConfig& cfg,
                                          const SearchOptions& opt = {}) {
    return detail::search_intensity(epsilon, 0, policy, params, model, cfg, opt);
}

struct EtcEstimate {
    IntensitySearch search;
    Estimate etc;              // b lambda_hat (1 - eps); stderr from the bracket half-width / z
    Estimate etc_throughput;   // b lambda_hat sum_k phi_k (1 - q_k(lambda_hat))
};

namespace detail {

inline EtcEstimate etc_from_search(IntensitySearch s, double epsilon, std::size_t g, const ImPolicy* policy,
                                   const NetworkParams& params, const ChannelModel& model,
                                   const ExperimentConfig& cfg) {
    EtcEstimate out;
    out.search = s;
    const double z = cfg.confidence_z;
    const double lambda_se = s.half_width() / z;
    out.etc.mean = params.b * s.lambda_hat * (1.0 - epsilon);
    out.etc.std_error = params.b * lambda_se * (1.0 - epsilon);
    out.etc.trials = s.trials_used;
    const auto q = outage_estimate({s.lambda_hat, g, policy}, params, model, cfg, cfg.trials).total;
    out.etc_throughput.mean = params.b * s.lambda_hat * (1.0 - q.mean);
    out.etc_throughput.std_error =
        params.b * std::hypot((1.0 - q.mean) * lambda_se, s.lambda_hat * q.std_error);
    out.etc_throughput.trials = q.trials;
    return out;
}

}  // namespace detail

inline EtcEstimate estimate_etc(double epsilon, const NetworkParams& params, const ChannelModel& model,
                                const ImPolicy* policy, const ExperimentConfig& cfg, const SearchOptions& opt = {}) {
    auto s = detail::search_intensity(epsilon, 0, policy, params, model, cfg, opt);
    return detail::etc_from_search(s, epsilon, 0, policy, params, model, cfg);
}

struct CaotEstimate {
    EtcEstimate etc;    // lambda is the total transmitter density
    Estimate etc_active;  // etc scaled by the active fraction phi_g
    double phi_g = 1.0;
};

/// Opportunistic transmission above state g: only marks >= g interfere and
/// the desired link is conditioned on a state >= g.
inline CaotEstimate estimate_caot(double epsilon, std::size_t g, const NetworkParams& params,
                                  const ChannelModel& model, const ExperimentConfig& cfg,
                                  const SearchOptions& opt = {}) {
    if (g >= model.size()) throw Error(ErrorKind::BadThreshold, "threshold index out of range");
    CaotEstimate out;
    out.phi_g = model.tail_mass(g);
    auto s = detail::search_intensity(epsilon, g, nullptr, params, model, cfg, opt);
    out.etc = detail::etc_from_search(s, epsilon, g, nullptr, params, model, cfg);
    out.etc_active = out.etc.etc;
    out.etc_active.mean *= out.phi_g;
    out.etc_active.std_error *= out.phi_g;
    return out;
}

/// Mean cancellation area in both bookkeeping views:
/// power_scaling = E[#C] / lambda, thinned = E[#C] / (gamma^(2/a) lambda).
struct NuCEstimate {
    Estimate count;
    Estimate power_scaling;
    Estimate thinned;
};

inline NuCEstimate estimate_nu_c(double lambda, std::size_t k, const ImPolicy& policy, const NetworkParams& params,
                                 const ChannelModel& model, const ExperimentConfig& cfg) {
    cfg.validate();
    policy.validate(model.size());
    if (!policy.cancellation_enabled) throw Error(ErrorKind::PolicyDisabled, "cancellation is disabled in the policy");
    if (k >= model.size()) throw Error(ErrorKind::BadStateIndex, "state index out of range");
    if (!(lambda > 0.0)) throw Error(ErrorKind::InvalidArgument, "lambda must be positive");
    const double radius = cfg.window(params.alpha);
    std::uint64_t stream = hash_combine(hash_combine(tag("nu_c"), detail::key(lambda)), k);
    stream = hash_combine(stream, detail::key(policy.gamma(k)));
    const auto acc = detail::reduce_trials<detail::Moments>(cfg.trials, cfg.threads,
                                                            [&](std::uint64_t i, detail::Moments& m) {
        Rng rng(cfg.seed, stream, i);
        auto& pattern = detail::scratch_pattern();
        spatial::sample_ppp_into(pattern, lambda, 0.0, radius, model, rng, cfg.burn_in);
        m.add(static_cast<double>(sir::cancellation_set(pattern, model, k, policy, params).size()));
    });
    NuCEstimate out;
    out.count = acc.estimate();
    const double scale = std::pow(policy.gamma(k), 2.0 / params.alpha);
    out.power_scaling = out.count;
    out.power_scaling.mean /= lambda;
    out.power_scaling.std_error /= lambda;
    out.thinned = out.power_scaling;
    out.thinned.mean /= scale;
    out.thinned.std_error /= scale;
    return out;
}

/// Pool-adjacent-violators fit of a nonincreasing sequence.
inline std::vector<double> isotonic_nonincreasing(const std::vector<double>& y, const std::vector<double>& w) {
    struct Block {
        double value;
        double weight;
        std::size_t count;
    };
    std::vector<Block> blocks;
    for (std::size_t i = 0; i < y.size(); ++i) {
        blocks.push_back({y[i], w[i], 1});
        while (blocks.size() > 1 && blocks[blocks.size() - 2].value < blocks.back().value) {
            const Block b = blocks.back();
            blocks.pop_back();
            Block& a = blocks.back();
            const double weight = a.weight + b.weight;
            a.value = (a.value * a.weight + b.value * b.weight) / weight;
            a.weight = weight;
            a.count += b.count;
        }
    }
    std::vector<double> out;
    for (const auto& b : blocks) out.insert(out.end(), b.count, b.value);
    return out;
}

inline constexpr std::size_t kNuCGridPoints = 16;

/// nu_c_k(gamma) on a uniform 16-point grid over [gamma_min, 1], smoothed to
/// a nonincreasing curve. The thinned view is tabulated.
inline bounds::NuCTable nu_c_table(double lambda, std::size_t k, double gamma_min, const ImPolicy& policy,
                                   const NetworkParams& params, const ChannelModel& model,
                                   const ExperimentConfig& cfg) {
    if (!(gamma_min > 0.0 && gamma_min <= 1.0)) {
        throw Error(ErrorKind::InvalidArgument, "gamma_min must lie in (0,1]");
    }
    bounds::NuCTable table;
    std::vector<double> weights;
    for (std::size_t i = 0; i < kNuCGridPoints; ++i) {
        const double gamma =
            gamma_min + (1.0 - gamma_min) * static_cast<double>(i) / static_cast<double>(kNuCGridPoints - 1);
        ImPolicy p = policy;
        p.gammas.at(k) = gamma;
        if (!p.gamma_mins.empty()) p.gamma_mins.at(k) = std::min(p.gamma_mins.at(k), gamma);
        const auto est = estimate_nu_c(lambda, k, p, params, model, cfg);
        table.gammas.push_back(gamma);
        table.raw.push_back(est.thinned.mean);
        table.raw_stderr.push_back(est.thinned.std_error);
        weights.push_back(1.0);
    }
    table.nu_c = isotonic_nonincreasing(table.raw, weights);
    return table;
}

/// Interference moments from transmitters outside the delta-level region.
struct MomentReport {
    double mean = 0.0;
    double mean_stderr = 0.0;
    double variance = 0.0;
    double mean_formula = 0.0;      // lambda s_k^(1-2/a) eta
    double variance_formula = 0.0;  // lambda s_k^(1-1/a) sigma2
    double mean_campbell = 0.0;     // direct Campbell integral over the region
    double variance_campbell = 0.0;
    double mean_rel_error = 0.0;
    double variance_rel_error = 0.0;
    double truncated_fraction = 0.0;  // share of the residual mean beyond the far radius
    double near_radius = 0.0;
    double far_radius = 0.0;
};

namespace detail {

/// Outer radius of the delta-level region for interferer mark j, floored at
/// the unit exclusion radius.
inline double region_radius(std::size_t k, std::size_t j, const NetworkParams& params, const ChannelModel& model) {
    return std::max(1.0, sir::delta_radius(model.state(k), model.state(j), params));
}

inline Moments residual_moments(double lambda, double r_in, double r_out, std::size_t trials, std::uint64_t stream,
                                std::size_t k, const NetworkParams& params, const ChannelModel& model,
                                const ExperimentConfig& cfg) {
    const double s_k = model.state(k);
    return reduce_trials<Moments>(trials, cfg.threads, [&](std::uint64_t i, Moments& m) {
        Rng rng(cfg.seed, stream, i);
        auto& pattern = scratch_pattern();
        spatial::sample_ppp_into(pattern, lambda, r_in, r_out, model, rng, cfg.burn_in);
        m.add(sir::residual_interference(pattern, model, s_k, params));
    });
}

}  // namespace detail

/// Mean and variance of the residual interference, stratified into a near
/// disk (cfg.trials trials) and a far annulus (fewer trials). Disjoint PPP
/// regions are independent, so means and variances add.
inline MomentReport verify_interference_moments(double lambda, std::size_t k, const NetworkParams& params,
                                                const ChannelModel& model, const ExperimentConfig& cfg) {
    cfg.validate();
    if (k >= model.size()) throw Error(ErrorKind::BadStateIndex, "state index out of range");
    MomentReport r;
    const double a = params.alpha;
    const double s_k = model.state(k);
    const auto c = bounds::constants(params, model);
    r.mean_formula = lambda * std::pow(s_k, 1.0 - 2.0 / a) * c.eta;
    r.variance_formula = lambda * std::pow(s_k, 1.0 - 1.0 / a) * c.sigma2;
    for (std::size_t j = 0; j < model.size(); ++j) {
        const double rho = detail::region_radius(k, j, params, model);
        const double h = model.state(j);
        r.mean_campbell += lambda * model.phi(j) * 2.0 * std::numbers::pi * h * std::pow(rho, 2.0 - a) / (a - 2.0);
        r.variance_campbell +=
            lambda * model.phi(j) * std::numbers::pi * h * h * std::pow(rho, 2.0 - 2.0 * a) / (a - 1.0);
    }
    if (!(lambda > 0.0)) {
        r.mean_rel_error = r.variance_rel_error = 0.0;
        return r;
    }
    // Far radius: the residual mean beyond R is
    //   sum_j phi_j s_j R^(2-a) / sum_j phi_j s_j rho_j^(2-a)
    // of the total; aim for 0.2%, but cap the far annulus at about 5e6
    // expected points per trial and report what is left out.
    double inside = 0.0;
    for (std::size_t j = 0; j < model.size(); ++j) {
        inside += model.phi(j) * model.state(j) * std::pow(detail::region_radius(k, j, params, model), 2.0 - a);
    }
    r.near_radius = cfg.window(a);
    const double wanted = std::pow(model.mean_gain() / (2e-3 * inside), 1.0 / (a - 2.0));
    const double cap = std::sqrt(5e6 / (lambda * std::numbers::pi));
    r.far_radius = std::max(2.0 * r.near_radius, std::min(wanted, cap));
    r.truncated_fraction = model.mean_gain() * std::pow(r.far_radius, 2.0 - a) / inside;
    const std::uint64_t stream = hash_combine(hash_combine(tag("moments"), detail::key(lambda)), k);
    const auto near =
        detail::residual_moments(lambda, 0.0, r.near_radius, cfg.trials, hash_combine(stream, 1), k, params, model, cfg);
    const std::size_t far_trials = std::max<std::size_t>(32, cfg.trials / 2000);
    const auto far = detail::residual_moments(lambda, r.near_radius, r.far_radius, far_trials, hash_combine(stream, 2),
                                              k, params, model, cfg);
    r.mean = near.mean + far.mean;
    r.mean_stderr = std::sqrt(near.sample_variance() / near.n + far.sample_variance() / far.n);
    r.variance = near.sample_variance() + far.sample_variance();
    r.mean_rel_error = std::abs(r.mean - r.mean_formula) / r.mean_formula;
    r.variance_rel_error = std::abs(r.variance - r.variance_formula) / r.variance_formula;
    return r;
}

struct CountReport {
    double mean = 0.0;
    double std_error = 0.0;
    double predicted = 0.0;  // lambda (nu s_k^(-2/a) - pi)
    double rel_error = 0.0;
    bool negative_prediction = false;
};

/// Average number of transmitters in the delta-level region, counted by
/// brute force over a disk that contains the whole region.
inline CountReport verify_delta_count(double lambda, std::size_t k, const NetworkParams& params,
                                      const ChannelModel& model, const ExperimentConfig& cfg) {
    cfg.validate();
    if (k >= model.size()) throw Error(ErrorKind::BadStateIndex, "state index out of range");
    CountReport r;
    const double rate = bounds::delta_count_rate(k, params, model);
    r.negative_prediction = !(rate > 0.0);
    r.predicted = lambda * rate;
    if (!(lambda > 0.0)) return r;
    double radius = 1.0;
    for (std::size_t j = 0; j < model.size(); ++j) {
        radius = std::max(radius, detail::region_radius(k, j, params, model));
    }
    radius *= 1.0 + 1e-9;
    const double s_k = model.state(k);
    const std::uint64_t stream = hash_combine(hash_combine(tag("delta_count"), detail::key(lambda)), k);
    const auto acc = detail::reduce_trials<detail::Moments>(cfg.trials, cfg.threads,
                                                            [&](std::uint64_t i, detail::Moments& m) {
        Rng rng(cfg.seed, stream, i);
        auto& pattern = detail::scratch_pattern();
        spatial::sample_ppp_into(pattern, lambda, 0.0, radius, model, rng, cfg.burn_in);
        std::size_t n = 0;
        for (const auto& p : pattern.points) n += sir::in_delta_region(p, model, s_k, params) ? 1 : 0;
        m.add(static_cast<double>(n));
    });
    const auto e = acc.estimate();
    r.mean = e.mean;
    r.std_error = e.std_error;
    r.rel_error = r.predicted != 0.0 ? std::abs(r.mean - r.predicted) / std::abs(r.predicted) : 0.0;
    return r;
}

}  // namespace mc

}  // namespace ergocap
