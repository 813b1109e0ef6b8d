#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ergocap/error.hpp"
#include "ergocap/fsmc.hpp"
#include "ergocap/spatial.hpp"

namespace ergocap {

struct SirSample {
    double desired_gain = 0.0;
    double interference = 0.0;
    double sir = std::numeric_limits<double>::infinity();
    bool outage = false;
};

/// Whether the decode test for cancellation counts the candidate's own power
/// in the aggregate interference I_0.
enum class CandidatePower { Included, Excluded };

/// Per-state interference management: power reduction factors gamma_k,
/// their lower limits, the cancellation switch and mean cancellation areas.
struct ImPolicy {
    std::vector<double> gammas;
    std::vector<double> gamma_mins;
    bool cancellation_enabled = false;
    std::optional<std::vector<double>> nu_c;
    CandidatePower candidate = CandidatePower::Included;

    static ImPolicy identity(std::size_t num_states) {
        ImPolicy p;
        p.gammas.assign(num_states, 1.0);
        p.gamma_mins.assign(num_states, 1.0);
        return p;
    }

    void validate(std::size_t num_states) const {
        if (gammas.size() != num_states) {
            throw Error(ErrorKind::InvalidArgument, "gamma needs one entry per channel state");
        }
        if (!gamma_mins.empty() && gamma_mins.size() != num_states) {
            throw Error(ErrorKind::InvalidArgument, "gamma_min needs one entry per channel state");
        }
        for (std::size_t k = 0; k < num_states; ++k) {
            const double lo = gamma_mins.empty() ? 0.0 : gamma_mins[k];
            if (!(gammas[k] > 0.0 && gammas[k] <= 1.0)) {
                throw Error(ErrorKind::InvalidArgument, "gamma_" + std::to_string(k + 1) + " must lie in (0,1]");
            }
            if (!gamma_mins.empty() && !(lo > 0.0 && lo <= gammas[k])) {
                throw Error(ErrorKind::InvalidArgument,
                            "gamma_min_" + std::to_string(k + 1) + " must lie in (0, gamma_" + std::to_string(k + 1) + "]");
            }
        }
        if (nu_c) {
            if (nu_c->size() != num_states) {
                throw Error(ErrorKind::InvalidArgument, "nu_c needs one entry per channel state");
            }
            for (const double v : *nu_c) {
                if (!(v >= 0.0)) {
                    throw Error(ErrorKind::InvalidArgument, "nu_c entries must be non-negative");
                }
            }
        }
    }

    double gamma(std::size_t k) const { return gammas.at(k); }
};

namespace sir {

inline double received_power(const Point& p, const ChannelModel& model, double alpha, double exclusion = 1.0) {
    return model.state(p.mark) * spatial::path_loss(p.radius, alpha, exclusion);
}

/// Shot noise at the origin: sum of s_mark * l(|X|).
inline double aggregate_interference(const MarkedPattern& pattern, const ChannelModel& model, double alpha,
                                     double exclusion = 1.0) {
    double total = 0.0;
    for (const auto& p : pattern.points) {
        total += received_power(p, model, alpha, exclusion);
    }
    return total;
}

/// s_k d^-alpha / I; infinite when there is no interference.
inline double sir(double s_k, const NetworkParams& params, double interference) {
    if (interference < 0.0) {
        throw Error(ErrorKind::InvalidArgument, "interference must be non-negative");
    }
    if (interference == 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return params.desired_gain(s_k) / interference;
}

inline SirSample evaluate(double s_k, const NetworkParams& params, double interference) {
    SirSample out;
    out.desired_gain = params.desired_gain(s_k);
    out.interference = interference;
    out.sir = sir(s_k, params, interference);
    out.outage = out.sir < params.beta;
    return out;
}

/// Outer radius of the delta-level region for an interferer of gain h:
/// d (delta beta h / s_k)^(1/alpha).
inline double delta_radius(double s_k, double interferer_gain, const NetworkParams& params) {
    if (!(s_k > 0.0) || !(interferer_gain > 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "gains must be positive");
    }
    return params.d * std::pow(params.delta * params.beta * interferer_gain / s_k, 1.0 / params.alpha);
}

/// True when this single interferer, amplified by delta, would push the SIR
/// of a receiver in state s_k below beta.
inline bool in_delta_region(const Point& p, const ChannelModel& model, double s_k, const NetworkParams& params) {
    const double rx = received_power(p, model, params.alpha);
    return rx > 0.0 && params.desired_gain(s_k) < params.delta * params.beta * rx;
}

inline MarkedPattern delta_level_set(const MarkedPattern& pattern, const ChannelModel& model, double s_k,
                                     const NetworkParams& params) {
    MarkedPattern out{{}, pattern.window_radius, pattern.inner_radius, pattern.intensity_used};
    for (const auto& p : pattern.points) {
        if (in_delta_region(p, model, s_k, params)) {
            out.points.push_back(p);
        }
    }
    return out;
}

/// Interference from transmitters outside the delta-level region.
inline double residual_interference(const MarkedPattern& pattern, const ChannelModel& model, double s_k,
                                    const NetworkParams& params) {
    double total = 0.0;
    for (const auto& p : pattern.points) {
        if (!in_delta_region(p, model, s_k, params)) {
            total += received_power(p, model, params.alpha);
        }
    }
    return total;
}

namespace detail {

/// Decode test for cancellation. `rx` is the unsuppressed received power of
/// the candidate, `total` the unsuppressed aggregate of the whole pattern.
inline bool decodable(double rx, double total, double desired, double gamma, double beta, CandidatePower candidate) {
    if (rx <= 0.0) {
        return false;
    }
    const double i0 = candidate == CandidatePower::Included ? total : total - rx;
    return gamma * rx / (desired + gamma * i0) >= beta / (beta + 1.0);
}

}  // namespace detail

/// Interferers the receiver in state k decodes and removes. Single pass:
/// every candidate is tested against the full suppressed interference, then
/// all passing interferers are removed together.
inline MarkedPattern cancellation_set(const MarkedPattern& pattern, const ChannelModel& model, std::size_t k,
                                      const ImPolicy& policy, const NetworkParams& params) {
    if (!policy.cancellation_enabled) {
        throw Error(ErrorKind::PolicyDisabled, "cancellation is disabled in the policy");
    }
    const double gamma = policy.gamma(k);
    const double desired = params.desired_gain(model.state(k));
    const double total = aggregate_interference(pattern, model, params.alpha);
    MarkedPattern out{{}, pattern.window_radius, pattern.inner_radius, pattern.intensity_used};
    for (const auto& p : pattern.points) {
        if (detail::decodable(received_power(p, model, params.alpha), total, desired, gamma, params.beta,
                              policy.candidate)) {
            out.points.push_back(p);
        }
    }
    return out;
}

struct ImOutcome {
    SirSample sample;
    std::size_t cancelled = 0;
};

/// SIR after suppression by gamma_k and removal of the cancellation set.
inline ImOutcome sir_with_im_detailed(const MarkedPattern& pattern, const ChannelModel& model, std::size_t k,
                                      const ImPolicy& policy, const NetworkParams& params) {
    const double gamma = policy.gamma(k);
    const double s_k = model.state(k);
    const double desired = params.desired_gain(s_k);
    const double total = aggregate_interference(pattern, model, params.alpha);
    ImOutcome out;
    double residual = total;
    if (policy.cancellation_enabled) {
        residual = 0.0;
        for (const auto& p : pattern.points) {
            const double rx = received_power(p, model, params.alpha);
            if (detail::decodable(rx, total, desired, gamma, params.beta, policy.candidate)) {
                ++out.cancelled;
            } else {
                residual += rx;
            }
        }
    }
    out.sample = evaluate(s_k, params, gamma * residual);
    return out;
}

inline SirSample sir_with_im(const MarkedPattern& pattern, const ChannelModel& model, std::size_t k,
                             const ImPolicy& policy, const NetworkParams& params) {
    return sir_with_im_detailed(pattern, model, k, policy, params).sample;
}

}  // namespace sir

}  // namespace ergocap
