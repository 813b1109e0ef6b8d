#pragma once

// Finite-state Markov chain fading model.
//
// State indices are 0-based throughout the library (state k here is s_{k+1}
// in one-based notation); the CLI and CSV files report one-based indices.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ergocap/error.hpp"
#include "ergocap/rng.hpp"

namespace ergocap {

namespace fsmc {

inline constexpr double kRowSumTolerance = 1e-12;
inline constexpr double kInvariantTolerance = 1e-10;
inline constexpr std::size_t kDirectSolveLimit = 64;
inline constexpr int kPowerIterationLimit = 200000;

/// True when every state can reach every other state through
/// positive-probability transitions.
inline bool is_irreducible(const Eigen::MatrixXd& transition) {
    const auto m = static_cast<std::size_t>(transition.rows());
    for (std::size_t start = 0; start < m; ++start) {
        std::vector<char> seen(m, 0);
        std::vector<std::size_t> stack{start};
        seen[start] = 1;
        std::size_t reached = 1;
        while (!stack.empty()) {
            const std::size_t i = stack.back();
            stack.pop_back();
            for (std::size_t j = 0; j < m; ++j) {
                if (!seen[j] && transition(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) > 0.0) {
                    seen[j] = 1;
                    ++reached;
                    stack.push_back(j);
                }
            }
        }
        if (reached != m) {
            return false;
        }
    }
    return true;
}

inline void check_stochastic(const Eigen::MatrixXd& transition) {
    if (transition.rows() == 0 || transition.rows() != transition.cols()) {
        throw Error(ErrorKind::NotStochastic, "transition matrix must be square and non-empty");
    }
    for (Eigen::Index i = 0; i < transition.rows(); ++i) {
        double sum = 0.0;
        for (Eigen::Index j = 0; j < transition.cols(); ++j) {
            const double p = transition(i, j);
            if (!(p >= 0.0 && p <= 1.0)) {
                std::ostringstream os;
                os << "entry (" << i + 1 << "," << j + 1 << ") = " << p << " is outside [0,1]";
                throw Error(ErrorKind::NotStochastic, os.str());
            }
            sum += p;
        }
        if (std::abs(sum - 1.0) > kRowSumTolerance) {
            std::ostringstream os;
            os.precision(17);
            os << "row " << i + 1 << " sums to " << sum << ", not 1";
            throw Error(ErrorKind::NotStochastic, os.str());
        }
    }
}

/// Stationary vector of an irreducible stochastic matrix.
///
/// Up to 64 states the balance equations (P^T - I) phi = 0 are solved directly
/// with one equation replaced by the normalisation sum(phi) = 1. Larger chains
/// use power iteration on the lazy chain (P + I) / 2, which has the same
/// stationary vector and converges for periodic chains too.
inline std::vector<double> invariant_distribution(const Eigen::MatrixXd& transition) {
    check_stochastic(transition);
    if (!is_irreducible(transition)) {
        throw Error(ErrorKind::Reducible, "transition graph is not strongly connected");
    }
    const Eigen::Index m = transition.rows();
    Eigen::VectorXd phi;
    if (static_cast<std::size_t>(m) <= kDirectSolveLimit) {
        Eigen::MatrixXd a = transition.transpose() - Eigen::MatrixXd::Identity(m, m);
        a.row(m - 1).setOnes();
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
        rhs(m - 1) = 1.0;
        phi = a.colPivHouseholderQr().solve(rhs);
    } else {
        const Eigen::MatrixXd lazy_t = 0.5 * (transition.transpose() + Eigen::MatrixXd::Identity(m, m));
        phi = Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m));
        bool converged = false;
        for (int it = 0; it < kPowerIterationLimit; ++it) {
            Eigen::VectorXd next = lazy_t * phi;
            next /= next.sum();
            const double change = (next - phi).cwiseAbs().maxCoeff();
            phi = std::move(next);
            if (change < 1e-15) {
                converged = true;
                break;
            }
        }
        if (!converged) {
            throw Error(ErrorKind::NoConvergence, "power iteration did not converge");
        }
    }
    // Clean round-off: tiny negatives and the normalisation.
    phi = phi.cwiseMax(0.0);
    phi /= phi.sum();
    const double residual = (transition.transpose() * phi - phi).cwiseAbs().maxCoeff();
    if (!(residual < kInvariantTolerance)) {
        throw Error(ErrorKind::NoConvergence, "stationary vector residual " + std::to_string(residual));
    }
    return {phi.data(), phi.data() + phi.size()};
}

}  // namespace fsmc

/// Validated fading model: ordered gains, transition matrix and its invariant
/// distribution. Immutable once built, so it can be shared between workers.
class ChannelModel {
public:
    static ChannelModel validate(std::vector<double> states, Eigen::MatrixXd transition) {
        if (states.empty()) {
            throw Error(ErrorKind::InvalidArgument, "channel needs at least one state");
        }
        for (std::size_t i = 0; i < states.size(); ++i) {
            if (!(states[i] > 0.0) || !std::isfinite(states[i])) {
                throw Error(ErrorKind::InvalidArgument, "state " + std::to_string(i + 1) + " must be a positive gain");
            }
            if (i > 0 && !(states[i - 1] < states[i])) {
                throw Error(ErrorKind::NotOrdered,
                            "states must be strictly increasing (s_" + std::to_string(i) + " >= s_" +
                                std::to_string(i + 1) + ")");
            }
        }
        if (static_cast<std::size_t>(transition.rows()) != states.size()) {
            throw Error(ErrorKind::NotStochastic, "transition matrix size does not match the number of states");
        }
        ChannelModel model;
        model.invariant_ = fsmc::invariant_distribution(transition);
        model.states_ = std::move(states);
        model.transition_ = std::move(transition);
        model.build_tables();
        return model;
    }

    /// Chain with every row equal to `invariant`. It is reversible, has the
    /// requested stationary law and is irreducible when all entries are positive.
    static ChannelModel from_invariant(std::vector<double> states, const std::vector<double>& invariant) {
        if (invariant.size() != states.size()) {
            throw Error(ErrorKind::InvalidArgument, "invariant vector size does not match the number of states");
        }
        const auto m = static_cast<Eigen::Index>(invariant.size());
        Eigen::MatrixXd p(m, m);
        for (Eigen::Index i = 0; i < m; ++i) {
            for (Eigen::Index j = 0; j < m; ++j) {
                p(i, j) = invariant[static_cast<std::size_t>(j)];
            }
        }
        return validate(std::move(states), std::move(p));
    }

    std::size_t size() const noexcept { return states_.size(); }
    double state(std::size_t k) const { return states_.at(k); }
    std::span<const double> states() const noexcept { return states_; }
    std::span<const double> invariant() const noexcept { return invariant_; }
    double phi(std::size_t k) const { return invariant_.at(k); }
    const Eigen::MatrixXd& transition() const noexcept { return transition_; }

    /// E[s^p] under the invariant distribution.
    double moment(double p) const {
        double sum = 0.0;
        for (std::size_t k = 0; k < size(); ++k) {
            sum += invariant_[k] * std::pow(states_[k], p);
        }
        return sum;
    }

    double mean_gain() const { return moment(1.0); }

    /// Probability mass of states with index >= g.
    double tail_mass(std::size_t g) const {
        double sum = 0.0;
        for (std::size_t k = g; k < size(); ++k) {
            sum += invariant_[k];
        }
        return sum;
    }

    std::size_t draw_stationary(double u) const { return draw(stationary_cdf_, u); }
    std::size_t draw_next(std::size_t current, double u) const { return draw(row_cdf_.at(current), u); }

private:
    ChannelModel() = default;

    static std::size_t draw(const std::vector<double>& cdf, double u) {
        const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        const auto idx = static_cast<std::size_t>(it - cdf.begin());
        return std::min(idx, cdf.size() - 1);
    }

    static std::vector<double> cumulative(std::vector<double> p) {
        std::partial_sum(p.begin(), p.end(), p.begin());
        p.back() = 1.0;
        return p;
    }

    void build_tables() {
        stationary_cdf_ = cumulative(invariant_);
        row_cdf_.clear();
        for (Eigen::Index i = 0; i < transition_.rows(); ++i) {
            std::vector<double> row(static_cast<std::size_t>(transition_.cols()));
            for (Eigen::Index j = 0; j < transition_.cols(); ++j) {
                row[static_cast<std::size_t>(j)] = transition_(i, j);
            }
            row_cdf_.push_back(cumulative(std::move(row)));
        }
    }

    std::vector<double> states_;
    Eigen::MatrixXd transition_;
    std::vector<double> invariant_;
    std::vector<double> stationary_cdf_;
    std::vector<std::vector<double>> row_cdf_;
};

namespace fsmc {

inline ChannelModel validate_model(std::vector<double> states, Eigen::MatrixXd transition) {
    return ChannelModel::validate(std::move(states), std::move(transition));
}

inline std::size_t step(std::size_t current, const ChannelModel& model, Rng& rng) {
    if (current >= model.size()) {
        throw Error(ErrorKind::BadStateIndex, "state index " + std::to_string(current) + " out of range");
    }
    return model.draw_next(current, rng.uniform());
}

inline std::size_t sample_stationary(const ChannelModel& model, Rng& rng) {
    return model.draw_stationary(rng.uniform());
}

/// Runs the chain for `burn_in` steps from the lowest state. Used to check
/// that drawing marks straight from the invariant law is a faithful shortcut.
inline std::size_t sample_after_burn_in(const ChannelModel& model, std::size_t burn_in, Rng& rng) {
    std::size_t state = 0;
    for (std::size_t i = 0; i < burn_in; ++i) {
        state = model.draw_next(state, rng.uniform());
    }
    return state;
}

inline std::vector<std::size_t> simulate_trajectory(const ChannelModel& model, std::size_t start, std::size_t length,
                                                    Rng& rng) {
    std::vector<std::size_t> path;
    path.reserve(length);
    std::size_t state = start;
    for (std::size_t t = 0; t < length; ++t) {
        path.push_back(state);
        state = step(state, model, rng);
    }
    return path;
}

inline std::vector<double> empirical_occupancy(std::span<const std::size_t> trajectory, std::size_t num_states) {
    if (trajectory.empty()) {
        throw Error(ErrorKind::EmptyTrajectory, "trajectory has no samples");
    }
    std::vector<double> counts(num_states, 0.0);
    for (const std::size_t s : trajectory) {
        if (s >= num_states) {
            throw Error(ErrorKind::BadStateIndex, "trajectory visits state " + std::to_string(s + 1));
        }
        counts[s] += 1.0;
    }
    for (auto& c : counts) {
        c /= static_cast<double>(trajectory.size());
    }
    return counts;
}

}  // namespace fsmc

}  // namespace ergocap
