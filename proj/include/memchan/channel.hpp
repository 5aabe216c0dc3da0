#pragma once

// Covariance assembly for the additive-noise channel with nearest-neighbour
// memory: squeezed inputs, correlated noise, classical modulation and the
// resulting individual and averaged outputs.

#include <cmath>
#include <optional>
#include <sstream>
#include <string>

#include "memchan/errors.hpp"
#include "memchan/linalg.hpp"

namespace memchan {

/// Regulator value for a noise level or residual photon budget: 1 when the
/// argument is at least 1/2, otherwise twice the argument (the top of the
/// allowed band).
[[nodiscard]] inline double default_regulator(double level, const char *what) {
    if (!(level >= 0.0)) {
        throw DomainError(std::string(what) + ": argument must be nonnegative");
    }
    return level >= 0.5 ? 1.0 : 2.0 * level;
}

[[nodiscard]] inline double default_epsilon(double noise) {
    return default_regulator(noise, "default_epsilon");
}

[[nodiscard]] inline double default_theta(double budget) {
    return default_regulator(budget, "default_theta");
}

/// Whether a regulator lies in the band allowed for the given level:
/// exactly 1 above 1/2, within [0, 2 * level] below.
[[nodiscard]] inline bool regulator_in_band(double regulator, double level) {
    constexpr double slack = 1e-12;
    if (level >= 0.5) {
        return std::abs(regulator - 1.0) <= slack;
    }
    return regulator >= 0.0 && regulator <= 2.0 * level + slack;
}

/// Channel description: number of uses n, added thermal photons per mode N,
/// memory degree s and the noise regulator epsilon.
struct ChannelParams {
    int n = 1;
    double noise = 0.0;
    double memory = 0.0;
    double epsilon = 1.0;

    /// Builds a record, resolving epsilon from the noise level when absent.
    [[nodiscard]] static ChannelParams make(int n, double noise, double memory,
                                            std::optional<double> epsilon = std::nullopt) {
        ChannelParams c{n, noise, memory, 0.0};
        if (!(noise >= 0.0)) {
            throw InvalidParameter("channel: noise N must be nonnegative");
        }
        c.epsilon = epsilon ? *epsilon : default_epsilon(noise);
        c.validate();
        return c;
    }

    /// Checks the record invariants except memory feasibility, which needs
    /// the noise covariance (see noise_covariance).
    void validate() const {
        if (n < 1) {
            throw InvalidParameter("channel: number of uses n must be >= 1");
        }
        if (!(noise >= 0.0) || !std::isfinite(noise)) {
            throw InvalidParameter("channel: noise N must be finite and nonnegative");
        }
        if (!(memory >= 0.0) || !std::isfinite(memory)) {
            throw InvalidParameter("channel: memory s must be finite and nonnegative");
        }
        if (!regulator_in_band(epsilon, noise)) {
            std::ostringstream msg;
            msg << "channel: epsilon = " << epsilon << " outside the allowed band for N = "
                << noise << (noise >= 0.5 ? " (must equal 1)" : " (must lie in [0, 2N])");
            throw InvalidParameter(msg.str());
        }
    }
};

/// Input ensemble: photon budget per mode, squeezing r, modulation
/// correlation y and the modulation regulator theta. An empty theta follows
/// default_theta of the residual budget.
struct InputParams {
    double nbar = 0.0;
    double r = 0.0;
    double y = 0.0;
    std::optional<double> theta;
};

/// A Gaussian state. The mean only matters for sampling; entropies depend on
/// the covariance alone.
struct GaussianState {
    Vector mean;
    BlockCovariance cov;
};

/// Mean photons per mode spent on squeezing, (sum_k cosh(r mu_k) - n) / (2n).
[[nodiscard]] inline double squeezed_photons(int n, double r) {
    if (!(r >= 0.0)) {
        throw InvalidParameter("squeezed_photons: r must be nonnegative");
    }
    const SpectralDecomposition d = coupling_spectrum(n);
    double sum = 0.0;
    for (Eigen::Index k = 0; k < d.eigenvalues.size(); ++k) {
        sum += std::cosh(r * d.eigenvalues(k));
    }
    return (sum - static_cast<double>(n)) / (2.0 * static_cast<double>(n));
}

/// Multimode squeezed vacuum: q block exp(-r T)/2, p block exp(r T)/2.
[[nodiscard]] inline BlockCovariance input_covariance(int n, double r) {
    if (!(r >= 0.0)) {
        throw InvalidParameter("input_covariance: r must be nonnegative");
    }
    const SpectralDecomposition d = coupling_spectrum(n);
    return {0.5 * sym_exp(d, -r), 0.5 * sym_exp(d, r)};
}

namespace detail {

// Diagonal of exp(scale * T) / 2. Identical for +scale and -scale since the
// coupling spectrum is symmetric.
inline Vector half_exp_diagonal(int n, double scale) {
    return 0.5 * coupling_spectrum(n).apply_diagonal(
                     [scale](double mu) { return std::cosh(scale * mu); });
}

// weight * diag(exp(scale T), exp(-scale T)) / 2 with every diagonal entry
// replaced by `level`. This is D + weight * V2 where D is the diagonal
// completion [D]_jj = level - weight * [V2]_jj.
inline BlockCovariance regulated(int n, double scale, double weight, double level) {
    const SpectralDecomposition d = coupling_spectrum(n);
    BlockCovariance c{0.5 * weight * sym_exp(d, scale), 0.5 * weight * sym_exp(d, -scale)};
    c.q.diagonal().setConstant(level);
    c.p.diagonal().setConstant(level);
    return c;
}

} // namespace detail

/// Smallest diagonal entry of the diagonal noise part,
/// min_j N - epsilon [V2]_jj with V2 = diag(exp(-sT), exp(sT)) / 2.
[[nodiscard]] inline double noise_slack(const ChannelParams &c) {
    const Vector diag = detail::half_exp_diagonal(c.n, c.memory);
    return c.noise - c.epsilon * diag.maxCoeff();
}

/// Correlated noise covariance V1 + epsilon V2. Every diagonal entry equals
/// N. Throws InfeasibleMemory when the diagonal part V1 goes negative.
[[nodiscard]] inline BlockCovariance noise_covariance(const ChannelParams &c) {
    c.validate();
    const Vector diag = detail::half_exp_diagonal(c.n, c.memory);
    for (Eigen::Index j = 0; j < diag.size(); ++j) {
        const double entry = c.noise - c.epsilon * diag(j);
        if (entry < -tolerance::diagonal) {
            std::ostringstream msg;
            msg << "infeasible memory: noise diagonal constraint [V1]_" << j + 1 << j + 1 << " = N - epsilon*[V2]_"
                << j + 1 << j + 1 << " = " << entry << " < 0 (N = " << c.noise << ", epsilon = " << c.epsilon
                << ", s = " << c.memory << ")";
            throw InfeasibleMemory(msg.str());
        }
    }
    return detail::regulated(c.n, -c.memory, c.epsilon, c.noise);
}

/// Photons per mode left for classical modulation after squeezing.
[[nodiscard]] inline double residual_budget(int n, const InputParams &in) {
    return in.nbar - squeezed_photons(n, in.r);
}

/// theta for this input: the explicit value after a band check, or
/// default_theta of the residual budget.
[[nodiscard]] inline double resolve_theta(int n, const InputParams &in) {
    if (!(in.nbar >= 0.0) || !std::isfinite(in.nbar)) {
        throw InvalidParameter("input: photon budget nbar must be finite and nonnegative");
    }
    const double budget = residual_budget(n, in);
    if (budget < -tolerance::diagonal) {
        std::ostringstream msg;
        msg << "infeasible squeezing: squeezed photons " << squeezed_photons(n, in.r)
            << " exceed the budget nbar = " << in.nbar << " (r = " << in.r << ")";
        throw InfeasibleSqueezing(msg.str());
    }
    if (!in.theta) {
        return default_theta(std::max(budget, 0.0));
    }
    // Budgets within roundoff of the 1/2 threshold accept either regime.
    constexpr double edge = 1e-9;
    const double theta = *in.theta;
    const bool ok = regulator_in_band(theta, budget) ||
                    (std::abs(budget - 0.5) <= edge &&
                     (regulator_in_band(theta, 0.5 + edge) || regulator_in_band(theta, 0.5 - edge)));
    if (!ok) {
        std::ostringstream msg;
        msg << "input: theta = " << theta << " outside the allowed band for residual budget "
            << budget << (budget >= 0.5 ? " (must equal 1)" : " (must lie in [0, 2*budget])");
        throw InvalidParameter(msg.str());
    }
    return theta;
}

/// Smallest diagonal entry of the diagonal modulation part,
/// min_j budget - theta [K2]_jj.
[[nodiscard]] inline double modulation_slack(int n, const InputParams &in) {
    const double theta = resolve_theta(n, in);
    const Vector diag = detail::half_exp_diagonal(n, in.y);
    return residual_budget(n, in) - theta * diag.maxCoeff();
}

/// Classical modulation covariance K1 + theta K2 with
/// K2 = diag(exp(yT), exp(-yT)) / 2. Every diagonal entry equals the residual
/// budget. Throws InfeasibleCorrelation when K1 goes negative.
[[nodiscard]] inline BlockCovariance modulation_covariance(int n, const InputParams &in) {
    if (n < 1) {
        throw InvalidParameter("modulation_covariance: n must be >= 1");
    }
    if (!std::isfinite(in.y)) {
        throw InvalidParameter("input: y must be finite");
    }
    const double theta = resolve_theta(n, in);
    const double budget = std::max(residual_budget(n, in), 0.0);
    const Vector diag = detail::half_exp_diagonal(n, in.y);
    for (Eigen::Index j = 0; j < diag.size(); ++j) {
        const double entry = budget - theta * diag(j);
        if (entry < -tolerance::diagonal) {
            std::ostringstream msg;
            msg << "infeasible correlation: modulation diagonal constraint [K1]_" << j + 1 << j + 1
                << " = (nbar - nbar_r) - theta*[K2]_" << j + 1 << j + 1 << " = " << entry
                << " < 0 (budget = " << budget << ", theta = " << theta << ", y = " << in.y << ")";
            throw InfeasibleCorrelation(msg.str());
        }
    }
    return detail::regulated(n, in.y, theta, budget);
}

/// Covariance of each individual output: input plus noise.
[[nodiscard]] inline BlockCovariance output_covariance(const ChannelParams &c, double r) {
    return input_covariance(c.n, r) + noise_covariance(c);
}

/// Covariance of the output averaged over the modulation ensemble.
[[nodiscard]] inline BlockCovariance averaged_output_covariance(const ChannelParams &c,
                                                                const InputParams &in) {
    return output_covariance(c, in.r) + modulation_covariance(c.n, in);
}

} // namespace memchan
