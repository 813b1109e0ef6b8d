#pragma once

// Closed-form outage and transmission-capacity bounds.
//
// Everything here is deterministic; the mean cancellation areas nu_c that the
// interference-management bounds need are inputs (estimated elsewhere).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

#include "ergocap/error.hpp"
#include "ergocap/fsmc.hpp"
#include "ergocap/sir.hpp"
#include "ergocap/spatial.hpp"

namespace ergocap::bounds {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kBisectionRelTol = 1e-9;
inline constexpr double kSingularRelTol = 1e-12;

/// nu: mean area of the delta-level region at s_k = 1. eta, sigma2: mean and
/// variance coefficients of the interference from outside that region.
struct BoundConstants {
    double nu = 0.0;
    double eta = 0.0;
    double sigma2 = 0.0;
};

inline BoundConstants constants(const NetworkParams& params, const ChannelModel& model) {
    const double a = params.alpha;
    const double db = params.delta * params.beta;
    double sum_nu = 0.0;
    double sum_sigma = 0.0;
    for (std::size_t k = 0; k < model.size(); ++k) {
        sum_nu += model.phi(k) * std::pow(db * model.state(k), 2.0 / a);
        sum_sigma += model.phi(k) * std::pow(model.state(k), 1.0 / a + 1.0);
    }
    BoundConstants c;
    c.nu = kPi * params.d * params.d * sum_nu;
    c.eta = 2.0 * c.nu / ((a - 2.0) * std::pow(params.d, a) * db);
    c.sigma2 = kPi * std::pow(params.d, 2.0 - 2.0 * a) / (a - 1.0) * std::pow(db, 1.0 / a - 1.0) * sum_sigma;
    return c;
}

/// Mean number of delta-level interferers per unit intensity:
/// nu s_k^(-2/alpha) - pi.
inline double delta_count_rate(std::size_t k, const NetworkParams& params, const ChannelModel& model,
                               const BoundConstants& c) {
    return c.nu * std::pow(model.state(k), -2.0 / params.alpha) - kPi;
}

inline double delta_count_rate(std::size_t k, const NetworkParams& params, const ChannelModel& model) {
    return delta_count_rate(k, params, model, constants(params, model));
}

/// Intensity at which the Chebyshev denominator of Lambda_k vanishes.
inline double lambda_singularity(std::size_t k, const NetworkParams& params, const ChannelModel& model,
                                 const BoundConstants& c) {
    const double a = params.alpha;
    const double head = std::pow(model.state(k), 2.0 / a - 1.0) / (std::pow(params.d, a) * params.delta * params.beta);
    return head / c.eta;
}

/// Chebyshev term Lambda_k(lambda) =
///   s_k^(3/a-1) lambda sigma2 / (s_k^(2/a-1) / (d^a delta beta) - lambda eta)^2.
inline double lambda_cap(double lambda, std::size_t k, const NetworkParams& params, const ChannelModel& model,
                         const BoundConstants& c) {
    const double a = params.alpha;
    const double s = model.state(k);
    const double head = std::pow(s, 2.0 / a - 1.0) / (std::pow(params.d, a) * params.delta * params.beta);
    const double den = head - lambda * c.eta;
    if (std::abs(den) <= kSingularRelTol * head) {
        throw Error(ErrorKind::SingularDenominator, "Lambda_k denominator vanishes at lambda = " + std::to_string(lambda));
    }
    return std::pow(s, 3.0 / a - 1.0) * lambda * c.sigma2 / (den * den);
}

inline double lambda_cap(double lambda, std::size_t k, const NetworkParams& params, const ChannelModel& model) {
    return lambda_cap(lambda, k, params, model, constants(params, model));
}

struct OutageBounds {
    double lower = 0.0;
    double upper = 0.0;
    bool lower_clamped = false;     // probability clamp to [0,1] was active
    bool upper_clamped = false;     // (1 - Lambda)^+ hit zero or clamp to [0,1] was active
    bool past_singularity = false;  // Chebyshev term undefined; upper reported as 1

    double gap() const { return upper - lower; }
};

namespace detail {

inline double clamp01(double x, bool& clamped) {
    if (x < 0.0) {
        clamped = true;
        return 0.0;
    }
    if (x > 1.0) {
        clamped = true;
        return 1.0;
    }
    return x;
}

inline void check_state(std::size_t k, const ChannelModel& model) {
    if (k >= model.size()) {
        throw Error(ErrorKind::BadStateIndex, "state index " + std::to_string(k + 1) + " out of range");
    }
}

/// Shared form of the outage bounds:
///   lower = 1 - exp(-exp_lambda * rate)
///   upper = 1 - (1 - Lambda_k(cap_lambda))^+ exp(-exp_lambda * rate)
inline OutageBounds outage_from(double exp_lambda, double cap_lambda, std::size_t k, const NetworkParams& params,
                                const ChannelModel& model, const BoundConstants& c) {
    if (exp_lambda < 0.0 || cap_lambda < 0.0) {
        throw Error(ErrorKind::InvalidArgument, "intensity must be non-negative");
    }
    OutageBounds out;
    const double e = std::exp(-exp_lambda * delta_count_rate(k, params, model, c));
    out.lower = clamp01(1.0 - e, out.lower_clamped);
    const double singular = lambda_singularity(k, params, model, c);
    if (cap_lambda >= singular * (1.0 - kSingularRelTol)) {
        out.past_singularity = true;
        out.upper_clamped = true;
        out.upper = 1.0;
        return out;
    }
    const double cap = lambda_cap(cap_lambda, k, params, model, c);
    double plus = 1.0 - cap;
    if (plus < 0.0) {
        plus = 0.0;
        out.upper_clamped = true;
    }
    out.upper = clamp01(1.0 - plus * e, out.upper_clamped);
    out.upper = std::max(out.upper, out.lower);
    return out;
}

/// Infimum of {x > 0 : f(x) <= 0}. A geometric grid locates the first
/// satisfied cell, then bisection refines it to kBisectionRelTol. Returns
/// nullopt-like NaN when nothing in (0, x_max] satisfies the condition.
inline double infimum_where(const std::function<double(double)>& f, double x_min = 1e-15, double x_max = 1e6) {
    constexpr double kGrowth = 1.189207115002721;  // 2^(1/4)
    double prev = 0.0;
    for (double x = x_min; x <= x_max; x *= kGrowth) {
        if (f(x) <= 0.0) {
            if (prev == 0.0) {
                return 0.0;
            }
            double lo = prev;
            double hi = x;
            while ((hi - lo) > kBisectionRelTol * hi) {
                const double mid = 0.5 * (lo + hi);
                if (f(mid) <= 0.0) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return hi;
        }
        prev = x;
    }
    return std::numeric_limits<double>::quiet_NaN();
}

inline double minus_log_survival(double epsilon) { return -std::log1p(-epsilon); }

}  // namespace detail

/// Outage bounds for channel state k at intensity lambda. Past the Lambda_k
/// singularity the upper bound is 1 (flagged).
inline OutageBounds outage_bounds(double lambda, std::size_t k, const NetworkParams& params, const ChannelModel& model) {
    detail::check_state(k, model);
    const auto c = constants(params, model);
    return detail::outage_from(lambda, lambda, k, params, model, c);
}

/// Outage bounds when only transmitters in states >= g are active: the
/// intensity is thinned to lambda * sum_{j>=g} phi_j.
inline OutageBounds outage_bounds_caot(double lambda, std::size_t k, std::size_t g, const NetworkParams& params,
                                       const ChannelModel& model) {
    if (g >= model.size()) {
        throw Error(ErrorKind::BadThreshold, "threshold index " + std::to_string(g + 1) + " out of range");
    }
    return outage_bounds(lambda * model.tail_mass(g), k, params, model);
}

struct LambdaEps {
    double value = 0.0;
    bool empty_set = false;
};

/// Per-state contention intensity: the smallest lambda at which
///   (1/lambda) ln[(1 - Lambda_k(lambda))^+ / (1 - eps)] <= rate_scale * (nu s_k^(-2/a) - pi).
/// Past the Lambda_k singularity (1 - Lambda_k)^+ is taken as 0.
inline LambdaEps lambda_eps_k(double epsilon, std::size_t k, const NetworkParams& params, const ChannelModel& model,
                              double rate_scale = 1.0) {
    detail::check_state(k, model);
    if (!(epsilon > 0.0 && epsilon < 1.0)) {
        throw Error(ErrorKind::InvalidArgument, "epsilon must lie in (0,1)");
    }
    const auto c = constants(params, model);
    const double rate = rate_scale * delta_count_rate(k, params, model, c);
    const double singular = lambda_singularity(k, params, model, c);
    auto condition = [&](double lambda) {
        double plus = 0.0;
        if (lambda < singular * (1.0 - kSingularRelTol)) {
            plus = std::max(0.0, 1.0 - lambda_cap(lambda, k, params, model, c));
        }
        const double lhs = plus > 0.0 ? std::log(plus / (1.0 - epsilon)) / lambda
                                      : -std::numeric_limits<double>::infinity();
        return lhs - rate;
    };
    LambdaEps out;
    const double x = detail::infimum_where(condition);
    if (std::isnan(x)) {
        out.empty_set = true;
        return out;
    }
    out.value = x;
    return out;
}

/// Small-epsilon asymptote of lambda_eps_k:
///   s^(2/a) eps / [(sigma2 d^(2a) beta^2 delta^2 s^(1+1/a) + nu) - s^(2/a) pi].
inline double lambda_eps_k_asymptote(double epsilon, std::size_t k, const NetworkParams& params,
                                     const ChannelModel& model) {
    const auto c = constants(params, model);
    const double a = params.alpha;
    const double s = model.state(k);
    const double s2a = std::pow(s, 2.0 / a);
    const double den = (c.sigma2 * std::pow(params.d, 2.0 * a) * params.beta * params.beta * params.delta *
                            params.delta * std::pow(s, 1.0 + 1.0 / a) +
                        c.nu) -
                       s2a * kPi;
    return s2a * epsilon / den;
}

/// Which algebraic form to use for the upper bound on the contention
/// intensity. `Theorem` sums s^(2/a) phi / (nu - s^(2/a) pi); `ProofVariant`
/// sums phi s^(2/a) / (s^(-2/a) nu - pi), the per-state factor the derivation
/// arrives at.
enum class UpperBoundForm { Theorem, ProofVariant };

struct EtcResult {
    double lambda_lower = 0.0;
    double lambda_upper = 0.0;
    double etc_lower = 0.0;
    double etc_upper = 0.0;
    bool upper_available = true;
    std::vector<double> per_state_lambda_eps;
    std::vector<bool> empty_set;

    bool ordered() const { return !upper_available || lambda_lower <= lambda_upper; }
};

namespace detail {

inline void check_geometry(const NetworkParams& params, const ChannelModel& model, const BoundConstants& c,
                           std::size_t first = 0) {
    for (std::size_t k = first; k < model.size(); ++k) {
        if (!(c.nu > std::pow(model.state(k), 2.0 / params.alpha) * kPi)) {
            throw Error(ErrorKind::DegenerateGeometry,
                        "nu <= pi s_" + std::to_string(k + 1) + "^(2/alpha); d or delta too small for the bound regime");
        }
    }
}

/// s_k^(2/a) / (nu - pi s_k^(2/a)), the per-state weight of the upper bound.
inline double state_weight(std::size_t k, const NetworkParams& params, const ChannelModel& model,
                           const BoundConstants& c) {
    const double s2a = std::pow(model.state(k), 2.0 / params.alpha);
    return s2a / (c.nu - kPi * s2a);
}

inline EtcResult etc_over(double epsilon, std::size_t first, const NetworkParams& params, const ChannelModel& model,
                          UpperBoundForm form) {
    if (!(epsilon > 0.0 && epsilon < 1.0)) {
        throw Error(ErrorKind::InvalidArgument, "epsilon must lie in (0,1)");
    }
    const auto c = constants(params, model);
    check_geometry(params, model, c, first);
    EtcResult out;
    out.per_state_lambda_eps.assign(model.size(), 0.0);
    out.empty_set.assign(model.size(), false);
    double upper_sum = 0.0;
    for (std::size_t k = first; k < model.size(); ++k) {
        const double s2a = std::pow(model.state(k), 2.0 / params.alpha);
        const auto le = lambda_eps_k(epsilon, k, params, model);
        out.per_state_lambda_eps[k] = le.value;
        out.empty_set[k] = le.empty_set;
        out.lambda_lower += s2a * model.phi(k) * le.value;
        if (form == UpperBoundForm::Theorem) {
            upper_sum += model.phi(k) * state_weight(k, params, model, c);
        } else {
            upper_sum += model.phi(k) * s2a / (c.nu / s2a - kPi);
        }
    }
    out.lambda_upper = minus_log_survival(epsilon) * upper_sum;
    return out;
}

inline void fill_etc(EtcResult& r, const NetworkParams& params, double epsilon) {
    r.etc_lower = params.b * r.lambda_lower * (1.0 - epsilon);
    r.etc_upper = r.upper_available ? params.b * r.lambda_upper * (1.0 - epsilon) : 0.0;
}

}  // namespace detail

/// Bounds on the maximum contention intensity and the ergodic capacity
/// b * lambda * (1 - eps).
inline EtcResult etc_bounds(double epsilon, const NetworkParams& params, const ChannelModel& model,
                            UpperBoundForm form = UpperBoundForm::Theorem) {
    auto r = detail::etc_over(epsilon, 0, params, model, form);
    detail::fill_etc(r, params, epsilon);
    return r;
}

/// Capacity bounds when only states >= g transmit: the sums run over k >= g
/// and are divided by phi_g = sum_{k>=g} phi_k.
inline EtcResult etc_bounds_caot(double epsilon, std::size_t g, const NetworkParams& params, const ChannelModel& model,
                                 UpperBoundForm form = UpperBoundForm::Theorem) {
    if (g >= model.size()) {
        throw Error(ErrorKind::BadThreshold, "threshold index " + std::to_string(g + 1) + " out of range");
    }
    const double phi_g = model.tail_mass(g);
    if (!(phi_g > 0.0)) {
        throw Error(ErrorKind::BadThreshold, "states >= g carry no invariant mass");
    }
    auto r = detail::etc_over(epsilon, g, params, model, form);
    r.lambda_lower /= phi_g;
    r.lambda_upper /= phi_g;
    detail::fill_etc(r, params, epsilon);
    return r;
}

struct ScalingLaw {
    double value = 0.0;        // (eps/nu) sum phi s^(2/a) / (1 - pi s^(2/a) / nu)
    double nu_limit = 0.0;     // eps / (pi d^2 (delta beta)^(2/a))
    bool within_validity = true;  // eps <= 0.05
};

inline ScalingLaw scaling_lambda(double epsilon, const NetworkParams& params, const ChannelModel& model) {
    const auto c = constants(params, model);
    detail::check_geometry(params, model, c);
    ScalingLaw out;
    double sum = 0.0;
    for (std::size_t k = 0; k < model.size(); ++k) {
        const double s2a = std::pow(model.state(k), 2.0 / params.alpha);
        sum += model.phi(k) * s2a / (1.0 - kPi * s2a / c.nu);
    }
    out.value = epsilon / c.nu * sum;
    out.nu_limit =
        epsilon / (kPi * params.d * params.d * std::pow(params.delta * params.beta, 2.0 / params.alpha));
    out.within_validity = epsilon <= 0.05;
    return out;
}

/// The capacity scaling written as the inner product of the invariant vector
/// with s_eps, s_eps,k = eps s_k^(2/a) / (nu - pi s_k^(2/a)).
struct GeometricView {
    std::vector<double> s_eps;
    std::vector<double> phi;
    std::vector<double> phi_star;  // s_eps / (u^T s_eps), the direction of s_eps on the simplex
    double inner = 0.0;            // phi^T s_eps
    double optimal_inner = 0.0;    // s_eps^T s_eps / (u^T s_eps) = phi_star^T s_eps
    double theta = 0.0;            // angle between phi and s_eps, radians
};

inline GeometricView geometric_view(double epsilon, const NetworkParams& params, const ChannelModel& model) {
    const auto c = constants(params, model);
    detail::check_geometry(params, model, c);
    GeometricView g;
    g.phi.assign(model.invariant().begin(), model.invariant().end());
    for (std::size_t k = 0; k < model.size(); ++k) {
        g.s_eps.push_back(epsilon * detail::state_weight(k, params, model, c));
    }
    const double u_s = std::accumulate(g.s_eps.begin(), g.s_eps.end(), 0.0);
    const double s_s = std::inner_product(g.s_eps.begin(), g.s_eps.end(), g.s_eps.begin(), 0.0);
    const double p_p = std::inner_product(g.phi.begin(), g.phi.end(), g.phi.begin(), 0.0);
    g.inner = std::inner_product(g.phi.begin(), g.phi.end(), g.s_eps.begin(), 0.0);
    for (const double v : g.s_eps) {
        g.phi_star.push_back(v / u_s);
    }
    g.optimal_inner = s_s / u_s;
    const double cosine = std::clamp(g.inner / std::sqrt(p_p * s_s), -1.0, 1.0);
    g.theta = std::acos(cosine);
    return g;
}

/// Comparison of the capacity upper bounds with and without opportunistic
/// transmission. gain = (1/phi_g - 1) sum_{k>=g} w_k phi_k,
/// loss = sum_{k<g} w_k phi_k, threshold = eps sum_{k>=g} w_k phi_k / phi^T s_eps.
struct CaotDecision {
    bool beneficial = false;
    double gain = 0.0;
    double loss = 0.0;
    double phi_g = 0.0;
    double threshold = 0.0;
};

inline CaotDecision caot_beneficial(std::size_t g, double epsilon, const NetworkParams& params,
                                    const ChannelModel& model) {
    if (g == 0 || g >= model.size()) {
        throw Error(ErrorKind::BadThreshold, "threshold index must lie in [2, m]");
    }
    const auto c = constants(params, model);
    detail::check_geometry(params, model, c);
    CaotDecision out;
    out.phi_g = model.tail_mass(g);
    double good = 0.0;
    double total = 0.0;
    for (std::size_t k = 0; k < model.size(); ++k) {
        const double w = model.phi(k) * detail::state_weight(k, params, model, c);
        total += w;
        if (k >= g) {
            good += w;
        } else {
            out.loss += w;
        }
    }
    out.gain = out.phi_g > 0.0 ? (1.0 / out.phi_g - 1.0) * good : std::numeric_limits<double>::infinity();
    out.beneficial = out.gain >= out.loss;
    out.threshold = (epsilon * good) / (epsilon * total);
    return out;
}

// ---------------------------------------------------------------------------
// Interference management
// ---------------------------------------------------------------------------

namespace detail {

inline double nu_c_of(const ImPolicy& policy, std::size_t k) {
    if (!policy.nu_c) {
        throw Error(ErrorKind::MissingNuC, "policy has no mean cancellation areas");
    }
    return policy.nu_c->at(k);
}

}  // namespace detail

/// Outage bounds with suppression gamma_k and cancellation area nu_c_k:
///   lambda_m = gamma^(2/a) lambda (1 - nu_c/nu)^+
///   lower = 1 - exp(-lambda_m rate), upper = 1 - (1 - Lambda_k(gamma^(2/a) lambda))^+ exp(-lambda_m rate).
inline OutageBounds im_outage_bounds(double lambda, std::size_t k, const ImPolicy& policy, const NetworkParams& params,
                                     const ChannelModel& model) {
    detail::check_state(k, model);
    policy.validate(model.size());
    const double nu_c = detail::nu_c_of(policy, k);
    const auto c = constants(params, model);
    const double scaled = std::pow(policy.gamma(k), 2.0 / params.alpha) * lambda;
    const double lambda_m = scaled * std::max(0.0, 1.0 - nu_c / c.nu);
    return detail::outage_from(lambda_m, scaled, k, params, model, c);
}

enum class ImCase {
    CancellationInsideRegion,  // C_k inside the delta-level region: two-sided bounds
    RegionInsideCancellation,  // every delta-level interferer cancelable: lower bound only
};

struct ImEtcResult {
    EtcResult bounds;
    std::vector<ImCase> cases;
};

/// delta >= (1 + beta) / beta^2 puts the cancellation region inside the
/// delta-level region.
inline double containment_threshold(double beta) { return (1.0 + beta) / (beta * beta); }

/// Capacity bounds with interference management. For states whose
/// cancellation region lies inside the delta-level region the per-state
/// intensity solves the delta-level condition with the count rate shrunk by
/// (1 - nu_c/nu); otherwise it solves the quadratic Chebyshev condition and
/// no upper bound is available.
inline ImEtcResult im_etc_bounds(double epsilon, const ImPolicy& policy, const NetworkParams& params,
                                 const ChannelModel& model) {
    if (!(epsilon > 0.0 && epsilon < 1.0)) {
        throw Error(ErrorKind::InvalidArgument, "epsilon must lie in (0,1)");
    }
    policy.validate(model.size());
    const auto c = constants(params, model);
    detail::check_geometry(params, model, c);
    const double a = params.alpha;
    ImEtcResult out;
    auto& r = out.bounds;
    r.per_state_lambda_eps.assign(model.size(), 0.0);
    r.empty_set.assign(model.size(), false);
    double upper_sum = 0.0;
    for (std::size_t k = 0; k < model.size(); ++k) {
        const double nu_c = detail::nu_c_of(policy, k);
        const double gamma = policy.gamma(k);
        const double s = model.state(k);
        const double weight = std::pow(s / gamma, 2.0 / a) * model.phi(k);
        const bool inside = params.delta >= containment_threshold(params.beta) && c.nu > nu_c;
        out.cases.push_back(inside ? ImCase::CancellationInsideRegion : ImCase::RegionInsideCancellation);
        double lambda_k = 0.0;
        bool empty = false;
        if (inside) {
            const double shrink = 1.0 - nu_c / c.nu;
            const auto le = lambda_eps_k(epsilon, k, params, model, shrink);
            lambda_k = le.value;
            empty = le.empty_set;
            upper_sum += weight / ((c.nu - std::pow(s, 2.0 / a) * kPi) * shrink);
        } else {
            r.upper_available = false;
            const double head = 1.0 / (std::pow(params.d, a) * params.delta * params.beta);
            const double slope = c.eta * std::pow(s, 1.0 - 2.0 / a) * std::pow(gamma, -2.0 / a);
            const double rhs = std::pow(s, 1.0 - 1.0 / a) * std::pow(gamma, 2.0 / a) * c.sigma2 / epsilon;
            const double x = detail::infimum_where([&](double lambda) {
                const double lhs = head - lambda * slope;
                return lhs * lhs - rhs * lambda;
            });
            empty = std::isnan(x);
            lambda_k = empty ? 0.0 : x;
        }
        r.per_state_lambda_eps[k] = lambda_k;
        r.empty_set[k] = empty;
        r.lambda_lower += weight * lambda_k;
    }
    r.lambda_upper = r.upper_available ? detail::minus_log_survival(epsilon) * upper_sum : 0.0;
    detail::fill_etc(r, params, epsilon);
    return out;
}

/// Tabulated mean cancellation area nu_c_k as a function of gamma_k, on an
/// ascending gamma grid. `nu_c` is the smoothed (nonincreasing) curve, `raw`
/// and `raw_stderr` the estimates it was fitted to.
struct NuCTable {
    std::vector<double> gammas;
    std::vector<double> nu_c;
    std::vector<double> raw;
    std::vector<double> raw_stderr;

    double at(double gamma) const {
        if (gammas.empty()) {
            throw Error(ErrorKind::MissingNuC, "empty nu_c table");
        }
        if (gamma <= gammas.front()) return nu_c.front();
        if (gamma >= gammas.back()) return nu_c.back();
        const auto it = std::upper_bound(gammas.begin(), gammas.end(), gamma);
        const auto i = static_cast<std::size_t>(it - gammas.begin());
        const double t = (gamma - gammas[i - 1]) / (gammas[i] - gammas[i - 1]);
        return nu_c[i - 1] + t * (nu_c[i] - nu_c[i - 1]);
    }
};

struct GammaOptimum {
    std::vector<double> gammas;
    double objective = 0.0;
    bool objective_nonincreasing = true;  // along every table grid in [gamma_min, 1]
};

/// One state's term of the gamma program:
///   (phi s^(2/a) / (nu - pi s^(2/a)))^(a/2) / (gamma (1 - nu_c/nu)^(a/2)).
inline double gamma_objective_term(std::size_t k, double gamma, double nu_c, const NetworkParams& params,
                                   const ChannelModel& model, const BoundConstants& c) {
    const double a = params.alpha;
    const double lead = std::pow(model.phi(k) * detail::state_weight(k, params, model, c), a / 2.0);
    const double keep = 1.0 - nu_c / c.nu;
    if (!(keep > 0.0)) {
        return std::numeric_limits<double>::infinity();
    }
    return lead / (gamma * std::pow(keep, a / 2.0));
}

inline double gamma_objective(const std::vector<double>& gammas, const std::vector<NuCTable>& tables,
                              const NetworkParams& params, const ChannelModel& model) {
    const auto c = constants(params, model);
    double total = 0.0;
    for (std::size_t k = 0; k < model.size(); ++k) {
        total += gamma_objective_term(k, gammas[k], tables[k].at(gammas[k]), params, model, c);
    }
    return total;
}

/// Maximises the gamma program subject to gamma_k >= gamma_min_k. The
/// objective is nonincreasing in every gamma_k once nu_c_k(gamma) is
/// nonincreasing, so the optimum is gamma_min; the tables are checked for
/// that monotonicity (raw steps above z standard errors are rejected) and the
/// objective is scanned along every grid.
inline GammaOptimum optimize_gamma(const ImPolicy& policy, const NetworkParams& params, const ChannelModel& model,
                                   const std::vector<NuCTable>& tables, double z = 3.0) {
    policy.validate(model.size());
    if (tables.size() != model.size()) {
        throw Error(ErrorKind::MissingNuC, "need one nu_c table per state");
    }
    const auto c = constants(params, model);
    detail::check_geometry(params, model, c);
    const auto& mins = policy.gamma_mins.empty() ? policy.gammas : policy.gamma_mins;
    for (std::size_t k = 0; k < tables.size(); ++k) {
        const auto& t = tables[k];
        for (std::size_t i = 1; i < t.raw.size(); ++i) {
            const double se = std::hypot(t.raw_stderr.at(i), t.raw_stderr.at(i - 1));
            if (t.raw[i] - t.raw[i - 1] > z * se) {
                throw Error(ErrorKind::NonMonotoneTable,
                            "nu_c table for state " + std::to_string(k + 1) + " increases at gamma = " +
                                std::to_string(t.gammas[i]));
            }
        }
    }
    GammaOptimum out;
    out.gammas = mins;
    out.objective = gamma_objective(out.gammas, tables, params, model);
    for (std::size_t k = 0; k < model.size(); ++k) {
        double prev = std::numeric_limits<double>::infinity();
        for (const double g : tables[k].gammas) {
            if (g < mins[k]) continue;
            const double term = gamma_objective_term(k, g, tables[k].at(g), params, model, c);
            if (term > prev) {
                out.objective_nonincreasing = false;
            }
            prev = term;
        }
    }
    return out;
}

}  // namespace ergocap::bounds
