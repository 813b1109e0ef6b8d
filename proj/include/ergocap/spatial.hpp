#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "ergocap/error.hpp"
#include "ergocap/fsmc.hpp"
#include "ergocap/rng.hpp"

namespace ergocap {

/// Network geometry and link parameters shared by every module.
struct NetworkParams {
    double lambda = 0.01;   // transmitter intensity (nodes per unit area)
    double d = 5.0;         // TX-RX distance, d > 1
    double alpha = 3.0;     // path loss exponent, alpha > 2
    double beta = 2.0;      // SIR threshold
    double delta = 1.0;     // interfering-coverage level, delta >= 1
    double epsilon = 0.1;   // outage constraint in (0, 1)
    double b = 1.0;         // supportable rate (bps/Hz)

    void validate() const {
        auto fail = [](const std::string& what) { throw Error(ErrorKind::InvalidArgument, what); };
        if (!(lambda > 0.0)) fail("lambda must be positive");
        if (!(d > 1.0)) fail("d must exceed 1");
        if (!(alpha > 2.0)) fail("alpha must exceed 2");
        if (!(beta > 0.0)) fail("beta must be positive");
        if (!(delta >= 1.0)) fail("delta must be at least 1");
        if (!(epsilon > 0.0 && epsilon < 1.0)) fail("epsilon must lie in (0,1)");
        if (!(b > 0.0)) fail("b must be positive");
    }

    /// Received desired power s_k d^-alpha at unit transmit power.
    double desired_gain(double s_k) const { return s_k * std::pow(d, -alpha); }
};

/// A transmitter seen from the typical receiver at the origin. Locations are
/// kept in polar form because every statistic is measured at the origin.
struct Point {
    double radius = 0.0;
    double angle = 0.0;   // radians in [0, 2 pi)
    std::size_t mark = 0; // fading state index of the interference channel

    double x() const { return radius * std::cos(angle); }
    double y() const { return radius * std::sin(angle); }
};

/// One realisation of the marked PPP inside an annulus r_inner <= |X| <= R.
struct MarkedPattern {
    std::vector<Point> points;
    double window_radius = 0.0;
    double inner_radius = 0.0;
    double intensity_used = 0.0;

    std::size_t size() const noexcept { return points.size(); }
    bool empty() const noexcept { return points.empty(); }
};

namespace spatial {

/// Unit-exclusion path loss: r^-alpha for r >= exclusion, else 0.
inline double path_loss(double distance, double alpha, double exclusion = 1.0) {
    return distance >= exclusion ? std::pow(distance, -alpha) : 0.0;
}

inline std::size_t poisson_count(double mean, Rng& rng) {
    if (!(mean > 0.0)) {
        return 0;
    }
    std::poisson_distribution<long long> dist(mean);
    return static_cast<std::size_t>(dist(rng));
}

/// Fills `out` with a marked PPP on the annulus [r_inner, r_outer]. Marks are
/// drawn from the invariant law, or by running the chain for `burn_in` steps
/// per node when burn_in > 0. `out` keeps its capacity between calls.
inline void sample_ppp_into(MarkedPattern& out, double lambda, double r_inner, double r_outer,
                            const ChannelModel& model, Rng& rng, std::size_t burn_in = 0) {
    if (lambda < 0.0 || !(r_outer > 0.0) || r_inner < 0.0 || r_inner >= r_outer) {
        throw Error(ErrorKind::InvalidArgument, "sample_ppp needs lambda >= 0 and 0 <= r_inner < r_outer");
    }
    out.points.clear();
    out.window_radius = r_outer;
    out.inner_radius = r_inner;
    out.intensity_used = lambda;
    const double r2_in = r_inner * r_inner;
    const double r2_span = r_outer * r_outer - r2_in;
    const std::size_t n = poisson_count(lambda * std::numbers::pi * r2_span, rng);
    out.points.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Point p;
        p.radius = std::sqrt(r2_in + r2_span * rng.uniform());
        p.angle = 2.0 * std::numbers::pi * rng.uniform();
        p.mark = burn_in == 0 ? fsmc::sample_stationary(model, rng) : fsmc::sample_after_burn_in(model, burn_in, rng);
        out.points.push_back(p);
    }
}

inline MarkedPattern sample_ppp(double lambda, double window_radius, const ChannelModel& model, Rng& rng,
                                std::size_t burn_in = 0) {
    MarkedPattern pattern;
    sample_ppp_into(pattern, lambda, 0.0, window_radius, model, rng, burn_in);
    return pattern;
}

inline MarkedPattern sample_ppp_annulus(double lambda, double r_inner, double r_outer, const ChannelModel& model,
                                        Rng& rng) {
    MarkedPattern pattern;
    sample_ppp_into(pattern, lambda, r_inner, r_outer, model, rng);
    return pattern;
}

inline MarkedPattern thin_by_state(const MarkedPattern& pattern, std::size_t k, std::size_t num_states) {
    if (k >= num_states) {
        throw Error(ErrorKind::BadStateIndex, "state index " + std::to_string(k + 1) + " out of range");
    }
    MarkedPattern out{{}, pattern.window_radius, pattern.inner_radius, pattern.intensity_used};
    for (const auto& p : pattern.points) {
        if (p.mark == k) {
            out.points.push_back(p);
        }
    }
    return out;
}

/// Keeps only points whose mark is >= g (the transmitters active under
/// channel-aware opportunistic transmission).
inline MarkedPattern thin_by_min_state(const MarkedPattern& pattern, std::size_t g, std::size_t num_states) {
    if (g >= num_states) {
        throw Error(ErrorKind::BadThreshold, "threshold index " + std::to_string(g + 1) + " out of range");
    }
    MarkedPattern out{{}, pattern.window_radius, pattern.inner_radius, pattern.intensity_used};
    for (const auto& p : pattern.points) {
        if (p.mark >= g) {
            out.points.push_back(p);
        }
    }
    return out;
}

/// Mean interference from transmitters beyond radius R (R >= 1):
/// 2 pi lambda E[H] R^(2-alpha) / (alpha - 2).
inline double truncation_tail_mean(double lambda, double window_radius, double mean_gain, double alpha) {
    if (!(window_radius >= 1.0) || !(alpha > 2.0)) {
        throw Error(ErrorKind::InvalidArgument, "tail mean needs R >= 1 and alpha > 2");
    }
    if (std::isinf(window_radius)) {
        return 0.0;
    }
    return 2.0 * std::numbers::pi * lambda * mean_gain * std::pow(window_radius, 2.0 - alpha) / (alpha - 2.0);
}

/// Mean interference from transmitters with 1 <= |X| <= R.
inline double in_window_mean(double lambda, double window_radius, double mean_gain, double alpha) {
    return truncation_tail_mean(lambda, 1.0, mean_gain, alpha) -
           truncation_tail_mean(lambda, window_radius, mean_gain, alpha);
}

/// Smallest R with tail_mean(R) <= fraction * in_window_mean(R). The ratio
/// R^(2-alpha) / (1 - R^(2-alpha)) does not depend on lambda or the marks.
inline double window_radius_for_tail_fraction(double alpha, double fraction) {
    if (!(fraction > 0.0 && fraction < 1.0) || !(alpha > 2.0)) {
        throw Error(ErrorKind::InvalidArgument, "tail fraction must lie in (0,1) and alpha must exceed 2");
    }
    return std::pow((1.0 + fraction) / fraction, 1.0 / (alpha - 2.0));
}

}  // namespace spatial

}  // namespace ergocap
