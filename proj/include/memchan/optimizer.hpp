#pragma once

// Feasible-region bounds and maximization of the transmission rate over the
// modulation correlation y and the input squeezing r.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <span>
#include <thread>
#include <vector>

#include "memchan/channel.hpp"
#include "memchan/entropy.hpp"
#include "memchan/errors.hpp"
#include "memchan/linalg.hpp"

namespace memchan {

enum class YSign { both, positive, negative };

struct SearchSettings {
    /// Coarse grid sizes for y (symmetric interval) and r.
    int y_points = 129;
    int r_points = 65;
    /// Final bracket widths of the golden-section refinements.
    double y_tolerance = 1e-6;
    double r_tolerance = 1e-5;
    YSign y_sign = YSign::both;
    /// Fixed theta for every evaluated point, or empty to follow default_theta.
    std::optional<double> theta;
    /// Worker threads for sweeps; 0 picks the hardware concurrency.
    unsigned threads = 0;
};

namespace detail {

inline constexpr double bisection_tolerance = 1e-10;
inline constexpr double search_cap = 64.0;

// Largest x in [0, cap] with feasible(x), assuming feasible(0) and a single
// feasible-to-infeasible transition. Returns +inf if feasible(cap).
template <typename Pred>
double largest_feasible(Pred &&feasible) {
    double lo = 0.0;
    double hi = 1.0;
    while (feasible(hi)) {
        lo = hi;
        if (hi >= search_cap) {
            return std::numeric_limits<double>::infinity();
        }
        hi *= 2.0;
    }
    while (hi - lo > bisection_tolerance) {
        const double mid = 0.5 * (lo + hi);
        (feasible(mid) ? lo : hi) = mid;
    }
    return lo;
}

} // namespace detail

/// Bounds of the allowed (s, r, y) region for a channel and photon budget.
class FeasibleRegion {
  public:
    /// Largest memory degree with a nonnegative diagonal noise part (+inf when
    /// memory cannot violate it, e.g. epsilon = 0 or a single mode).
    double s_max = 0.0;
    /// Allowed squeezing interval. r_min is 0 unless a fixed theta excludes
    /// small squeezing through its band condition.
    double r_min = 0.0;
    double r_max = 0.0;

    ChannelParams channel;
    double nbar = 0.0;
    std::optional<double> theta;

    /// Largest |y| with a nonnegative diagonal modulation part at squeezing r.
    /// Zero when theta vanishes or for a single mode, where y has no effect.
    [[nodiscard]] double y_max(double r) const {
        const InputParams in{nbar, r, 0.0, theta};
        const double th = resolve_theta(channel.n, in);
        const double budget = residual_budget(channel.n, in);
        if (channel.n == 1 || th <= 0.0 || budget - 0.5 * th <= tolerance::diagonal) {
            return 0.0;
        }
        const int n = channel.n;
        return detail::largest_feasible([&](double y) {
            return budget - th * detail::half_exp_diagonal(n, y).maxCoeff() >= 0.0;
        });
    }
};

/// Computes s_max, the squeezing interval and (through y_max) the correlation
/// band by bisection on the monotone diagonal constraints.
[[nodiscard]] inline FeasibleRegion feasible_region(const ChannelParams &channel, double nbar,
                                                    std::optional<double> theta = std::nullopt) {
    channel.validate();
    if (!(nbar >= 0.0) || !std::isfinite(nbar)) {
        throw InvalidParameter("feasible_region: nbar must be finite and nonnegative");
    }
    if (channel.noise == 0.0) {
        throw EmptyRegion("feasible_region: N = 0 forces epsilon = 0, leaving no memory band");
    }

    FeasibleRegion region;
    region.channel = channel;
    region.nbar = nbar;
    region.theta = theta;

    const int n = channel.n;
    if (channel.epsilon == 0.0 || n == 1) {
        region.s_max = std::numeric_limits<double>::infinity();
    } else {
        region.s_max = detail::largest_feasible([&](double s) {
            return channel.noise - channel.epsilon * detail::half_exp_diagonal(n, s).maxCoeff() >= 0.0;
        });
    }
    if (channel.memory > region.s_max + detail::bisection_tolerance) {
        (void)noise_covariance(channel); // throws with the violated constraint
    }

    // Largest r keeping the residual budget at or above `floor`.
    auto r_with_budget = [&](double floor) {
        if (n == 1) {
            return 0.0;
        }
        return detail::largest_feasible([&](double r) { return nbar - squeezed_photons(n, r) >= floor; });
    };

    if (!theta) {
        region.r_min = 0.0;
        region.r_max = r_with_budget(0.0);
        return region;
    }

    const double th = *theta;
    if (!(th >= 0.0) || th > 1.0 + 1e-12) {
        throw InvalidParameter("feasible_region: a fixed theta must lie in [0, 1]");
    }
    if (std::abs(th - 1.0) <= 1e-12) {
        // theta = 1 needs a residual budget of at least 1/2.
        if (nbar < 0.5) {
            throw EmptyRegion("feasible_region: theta = 1 requires nbar >= 1/2");
        }
        region.r_min = 0.0;
        region.r_max = r_with_budget(0.5);
        return region;
    }
    // theta < 1 needs a residual budget in [theta/2, 1/2).
    if (nbar < 0.5 * th) {
        throw EmptyRegion("feasible_region: nbar is below theta/2 for every squeezing");
    }
    if (n == 1 && nbar >= 0.5) {
        throw EmptyRegion("feasible_region: theta < 1 requires a residual budget below 1/2");
    }
    region.r_min = nbar >= 0.5 ? r_with_budget(0.5) : 0.0;
    region.r_max = r_with_budget(0.5 * th);
    return region;
}

/// Rate as a function of y at fixed channel, budget and squeezing. The
/// individual-output entropy does not depend on y and is computed once.
class RateAtSqueezing {
  public:
    RateAtSqueezing(const ChannelParams &channel, double nbar, double r, std::optional<double> theta)
        : channel_(channel), nbar_(nbar), r_(r), theta_(theta) {
        output_ = output_covariance(channel_, r_);
        out_spectrum_ = symplectic_eigenvalues(output_);
        require_physical(out_spectrum_);
    }

    [[nodiscard]] RateResult operator()(double y) const {
        const InputParams in{nbar_, r_, y, theta_};
        const BlockCovariance averaged = output_ + modulation_covariance(channel_.n, in);
        RateResult result;
        result.channel = channel_;
        result.input = in;
        result.theta = resolve_theta(channel_.n, in);
        result.squeezed_photons = squeezed_photons(channel_.n, r_);
        result.avg_spectrum = symplectic_eigenvalues(averaged);
        require_physical(result.avg_spectrum);
        result.out_spectrum = out_spectrum_;
        result.rate = rate_from_spectra(result.avg_spectrum, result.out_spectrum);
        return result;
    }

  private:
    ChannelParams channel_;
    double nbar_;
    double r_;
    std::optional<double> theta_;
    BlockCovariance output_;
    SymplecticSpectrum out_spectrum_;
};

namespace detail {

// Argmax order: higher rate, then smaller r, then smaller |y|, then negative y.
inline bool better(const RateResult &a, const RateResult &b) {
    if (a.rate != b.rate) {
        return a.rate > b.rate;
    }
    if (a.input.r != b.input.r) {
        return a.input.r < b.input.r;
    }
    if (std::abs(a.input.y) != std::abs(b.input.y)) {
        return std::abs(a.input.y) < std::abs(b.input.y);
    }
    return a.input.y < b.input.y;
}

inline std::vector<double> linspace(double lo, double hi, int count) {
    if (count < 1) {
        throw InvalidParameter("grid: point count must be >= 1");
    }
    if (count == 1 || hi == lo) {
        return {lo};
    }
    std::vector<double> out(static_cast<std::size_t>(count));
    const double span = hi - lo;
    for (int i = 0; i < count; ++i) {
        out[static_cast<std::size_t>(i)] = lo + span * static_cast<double>(i) / static_cast<double>(count - 1);
    }
    out.back() = hi;
    return out;
}

// Symmetric grid on [-half, half]; an odd count places 0 exactly.
inline std::vector<double> symmetric_grid(double half, int count) {
    if (count < 1) {
        throw InvalidParameter("grid: point count must be >= 1");
    }
    if (count == 1 || half == 0.0) {
        return {0.0};
    }
    std::vector<double> out(static_cast<std::size_t>(count));
    const double denom = static_cast<double>(count - 1);
    for (int i = 0; i < count; ++i) {
        out[static_cast<std::size_t>(i)] = half * (2.0 * i - denom) / denom;
    }
    return out;
}

// Golden-section maximization of eval on [lo, hi] down to width `tol`.
// Returns the best result evaluated, which never loses to `seed`.
template <typename Eval>
RateResult golden_section(Eval &&eval, double lo, double hi, double tol, RateResult seed) {
    static const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    RateResult best = std::move(seed);
    auto consider = [&best](RateResult candidate) {
        if (better(candidate, best)) {
            best = std::move(candidate);
        }
    };
    double a = lo;
    double b = hi;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    RateResult fc = eval(c);
    RateResult fd = eval(d);
    while (b - a > tol) {
        if (fc.rate >= fd.rate) {
            b = d;
            d = c;
            consider(std::move(fd));
            fd = std::move(fc);
            c = b - inv_phi * (b - a);
            fc = eval(c);
        } else {
            a = c;
            c = d;
            consider(std::move(fc));
            fc = std::move(fd);
            d = a + inv_phi * (b - a);
            fd = eval(d);
        }
    }
    consider(std::move(fc));
    consider(std::move(fd));
    return best;
}

// Grid argmax followed by golden-section refinement inside the bracket
// formed by the grid neighbours of the best point.
template <typename Eval>
RateResult grid_then_refine(Eval &&eval, const std::vector<double> &grid, double tol) {
    std::optional<RateResult> best;
    std::size_t best_index = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        RateResult candidate = eval(grid[i]);
        if (!best || better(candidate, *best)) {
            best = std::move(candidate);
            best_index = i;
        }
    }
    if (grid.size() < 2) {
        return *best;
    }
    const double lo = grid[best_index == 0 ? 0 : best_index - 1];
    const double hi = grid[std::min(best_index + 1, grid.size() - 1)];
    return golden_section(eval, lo, hi, tol, *best);
}

} // namespace detail

/// Maximum of R(r, y) over the allowed y band at fixed squeezing r.
/// The result's input record carries the argmax y*.
[[nodiscard]] inline RateResult max_over_y(const ChannelParams &channel, double nbar, double r,
                                           const SearchSettings &settings = {}) {
    const FeasibleRegion region = feasible_region(channel, nbar, settings.theta);
    if (r < region.r_min - detail::bisection_tolerance || r > region.r_max + detail::bisection_tolerance) {
        // Reproduce the constructor error that names the violated constraint.
        (void)transmission_rate(channel, InputParams{nbar, r, 0.0, settings.theta});
        throw InfeasibleSqueezing("max_over_y: r lies outside the feasible squeezing interval");
    }
    const double y_max = region.y_max(r);
    const RateAtSqueezing eval(channel, nbar, r, settings.theta);

    std::vector<double> grid;
    switch (settings.y_sign) {
    case YSign::both:
        grid = detail::symmetric_grid(y_max, settings.y_points);
        break;
    case YSign::positive:
        grid = detail::linspace(0.0, y_max, settings.y_points);
        break;
    case YSign::negative:
        grid = detail::linspace(-y_max, 0.0, settings.y_points);
        break;
    }
    return detail::grid_then_refine(eval, grid, settings.y_tolerance);
}

/// Joint maximum of R over r in [r_min, r_max] and y, with max_over_y as the
/// inner problem.
[[nodiscard]] inline RateResult max_over_ry(const ChannelParams &channel, double nbar,
                                            const SearchSettings &settings = {}) {
    const FeasibleRegion region = feasible_region(channel, nbar, settings.theta);
    auto inner = [&](double r) { return max_over_y(channel, nbar, r, settings); };
    const std::vector<double> grid = detail::linspace(region.r_min, region.r_max, settings.r_points);
    return detail::grid_then_refine(inner, grid, settings.r_tolerance);
}

struct SweepRow {
    double memory = 0.0;
    int n = 0;
    /// Grid r for r-sweeps, optimal r for n-sweeps.
    double r = 0.0;
    double y_opt = 0.0;
    double rate = 0.0;
};

enum class SweepAxis { r, n };

struct SweepResult {
    SweepAxis axis = SweepAxis::r;
    double nbar = 0.0;
    double noise = 0.0;
    std::vector<SweepRow> rows;
};

namespace detail {

// Runs job(i) for i in [0, count) on up to `threads` workers. Each job writes
// only its own slot, so results do not depend on scheduling. The first
// exception (lowest index) is rethrown.
template <typename Job>
void parallel_for(std::size_t count, unsigned threads, Job &&job) {
    if (threads == 0) {
        threads = std::max(1u, std::thread::hardware_concurrency());
    }
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                job(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back(worker);
        }
    }
    for (const auto &e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

} // namespace detail

/// For each channel and each grid r, the rate maximized over y.
[[nodiscard]] inline SweepResult sweep_r(std::span<const ChannelParams> channels, double nbar,
                                         std::span<const double> r_grid, const SearchSettings &settings = {}) {
    SweepResult result;
    result.axis = SweepAxis::r;
    result.nbar = nbar;
    result.noise = channels.empty() ? 0.0 : channels.front().noise;
    result.rows.resize(channels.size() * r_grid.size());
    detail::parallel_for(result.rows.size(), settings.threads, [&](std::size_t i) {
        const ChannelParams &channel = channels[i / r_grid.size()];
        const double r = r_grid[i % r_grid.size()];
        const RateResult best = max_over_y(channel, nbar, r, settings);
        result.rows[i] = SweepRow{channel.memory, channel.n, r, best.input.y, best.rate};
    });
    return result;
}

/// For each n, the rate maximized jointly over r and y. Every other channel
/// field is taken from the template.
[[nodiscard]] inline SweepResult sweep_n(const ChannelParams &channel_template, double nbar,
                                         std::span<const int> n_values, const SearchSettings &settings = {}) {
    SweepResult result;
    result.axis = SweepAxis::n;
    result.nbar = nbar;
    result.noise = channel_template.noise;
    result.rows.resize(n_values.size());
    detail::parallel_for(n_values.size(), settings.threads, [&](std::size_t i) {
        ChannelParams channel = channel_template;
        channel.n = n_values[i];
        const RateResult best = max_over_ry(channel, nbar, settings);
        result.rows[i] = SweepRow{channel.memory, channel.n, best.input.r, best.input.y, best.rate};
    });
    return result;
}

} // namespace memchan
