// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Thresholds are fixed here and never tuned at run time.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "memchan/memchan.hpp"
#include "oracles.hpp"

using namespace memchan;

namespace {

constexpr double kNoise = 2.0 / 3.0;
constexpr double kNbar = 2.0;
// g(8/3) - g(2/3), 40-digit evaluation.
constexpr double kMemorylessRate = 1.481369110191152693;

struct Outcome {
    bool pass = true;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char *format, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, format, args...);
    return buf;
}

// Jointly optimized rates keyed by (s, n), shared by criteria 2-4.
std::map<std::pair<double, int>, RateResult> optimize_all(const std::vector<double> &memories) {
    std::vector<std::pair<double, int>> keys;
    for (double s : memories) {
        for (int n = 2; n <= 5; ++n) {
            keys.emplace_back(s, n);
        }
    }
    std::vector<RateResult> results(keys.size());
    detail::parallel_for(keys.size(), 0, [&](std::size_t i) {
        results[i] = max_over_ry(ChannelParams::make(keys[i].second, kNoise, keys[i].first), kNbar);
    });
    std::map<std::pair<double, int>, RateResult> out;
    for (std::size_t i = 0; i < keys.size(); ++i) {
        out.emplace(keys[i], results[i]);
    }
    return out;
}

Outcome criterion_memoryless() {
    const auto start = Clock::now();
    Outcome o;
    double worst = 0.0;
    for (int n = 1; n <= 5; ++n) {
        const double rate = transmission_rate(ChannelParams::make(n, kNoise, 0.0), InputParams{kNbar, 0.0, 0.0, {}}).rate;
        worst = std::max(worst, std::abs(rate - kMemorylessRate));
    }
    const double elapsed = seconds_since(start);
    o.pass = worst <= 1e-9 && elapsed < 1.0;
    o.detail = fmt("max |R - (g(8/3) - g(2/3))| = %.3e (tol 1e-9), %.3f s (limit 1 s)", worst, elapsed);
    return o;
}

Outcome criterion_advantage(const std::map<std::pair<double, int>, RateResult> &best, double elapsed) {
    Outcome o;
    double min_r = 1e9;
    double min_gain = 1e9;
    for (double s : {0.1, 0.2}) {
        for (int n = 2; n <= 5; ++n) {
            const RateResult &res = best.at({s, n});
            min_r = std::min(min_r, res.input.r);
            min_gain = std::min(min_gain, res.rate - kMemorylessRate);
            o.pass = o.pass && res.input.r > 1e-3 && res.rate - kMemorylessRate >= 1e-4;
        }
    }
    o.pass = o.pass && elapsed < 120.0;
    o.detail = fmt("min r* = %.5f (> 1e-3), min gain = %.6f bits (>= 1e-4), %.1f s for all joint optimizations "
                   "(limit 120 s)",
                   min_r, min_gain, elapsed);
    return o;
}

Outcome criterion_growth(const std::map<std::pair<double, int>, RateResult> &best) {
    Outcome o;
    std::string text;
    for (double s : {0.1, 0.2}) {
        double previous_increment = INFINITY;
        for (int n = 3; n <= 5; ++n) {
            const double increment = best.at({s, n}).rate - best.at({s, n - 1}).rate;
            o.pass = o.pass && increment >= 0.0 && increment <= previous_increment;
            text += fmt("s=%.1f dR(%d->%d)=%.6f ", s, n - 1, n, increment);
            previous_increment = increment;
        }
    }
    double spread = 0.0;
    for (int n = 2; n <= 5; ++n) {
        spread = std::max(spread, std::abs(best.at({0.0, n}).rate - kMemorylessRate));
    }
    o.pass = o.pass && spread <= 1e-6;
    o.detail = text + fmt("| s=0 max deviation %.2e (tol 1e-6)", spread);
    return o;
}

Outcome criterion_memory_ordering(const std::map<std::pair<double, int>, RateResult> &best) {
    Outcome o;
    double min_gap = INFINITY;
    for (int n = 2; n <= 5; ++n) {
        const double r0 = best.at({0.0, n}).rate;
        const double r1 = best.at({0.1, n}).rate;
        const double r2 = best.at({0.2, n}).rate;
        min_gap = std::min({min_gap, r2 - r1, r1 - r0});
        o.pass = o.pass && r2 - r1 >= 1e-4 && r1 - r0 >= 1e-4;
    }
    o.detail = fmt("min gap between consecutive memory levels = %.6f bits (>= 1e-4)", min_gap);
    return o;
}

Outcome criterion_oracle_equivalence() {
    Outcome o;
    std::mt19937_64 engine(5);
    std::uniform_int_distribution<int> modes(1, 8);
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const BlockCovariance cov = random_physical_covariance(modes(engine), engine);
        const auto a = symplectic_eigenvalues(cov).values;
        const auto b = generic_symplectic_eigenvalues(cov).values;
        for (std::size_t k = 0; k < a.size(); ++k) {
            worst = std::max(worst, std::abs(a[k] - b[k]));
        }
    }
    o.pass = worst < 1e-10;
    o.detail = fmt("200 random physical covariances, n <= 8: max deviation %.3e (< 1e-10)", worst);
    return o;
}

Outcome criterion_monte_carlo() {
    const auto start = Clock::now();
    Outcome o;
    const std::size_t count = 200000;
    const ChannelParams c = ChannelParams::make(2, kNoise, 0.2);
    const InputParams in{kNbar, 0.1, 0.2, {}};
    const CovarianceEstimate est = estimate_output_covariance(c, in, count, 20061024, true);
    const BlockCovariance analytic = averaged_output_covariance(c, in);
    const double z = max_standard_score(est.full, analytic.full(), count);
    const double entropy_gap = std::abs(gaussian_entropy(est.blocks()) - gaussian_entropy(analytic));
    const double elapsed = seconds_since(start);
    o.pass = z <= 5.0 && entropy_gap <= 0.02 && elapsed < 30.0;
    o.detail = fmt("max standard score %.2f (<= 5), entropy gap %.4f bits (<= 0.02), %.2f s (limit 30 s)", z,
                   entropy_gap, elapsed);
    return o;
}

Outcome criterion_invariants() {
    Outcome o;
    double diag_noise = 0.0;
    double diag_mod = 0.0;
    double energy = 0.0;
    double min_lambda = INFINITY;
    double recovery = 0.0;
    int swap_mismatches = 0;
    for (const auto &pt : testing::random_feasible_points(100, 31337)) {
        const int n = pt.channel.n;
        const BlockCovariance noise = noise_covariance(pt.channel);
        const BlockCovariance k = modulation_covariance(n, pt.input);
        const double budget = residual_budget(n, pt.input);
        for (int j = 0; j < n; ++j) {
            diag_noise = std::max({diag_noise, std::abs(noise.q(j, j) - pt.channel.noise),
                                   std::abs(noise.p(j, j) - pt.channel.noise)});
            diag_mod = std::max({diag_mod, std::abs(k.q(j, j) - budget), std::abs(k.p(j, j) - budget)});
        }
        energy = std::max(energy, std::abs((input_covariance(n, pt.input.r) + k).photons_per_mode() - pt.input.nbar));

        const BlockCovariance out = output_covariance(pt.channel, pt.input.r);
        const BlockCovariance avg = out + k;
        for (const BlockCovariance *cov : {&out, &avg}) {
            for (double v : symplectic_eigenvalues(*cov).values) {
                min_lambda = std::min(min_lambda, v);
            }
        }
        if (rate_from_covariances(avg, out) != rate_from_covariances(avg.swapped(), out.swapped())) {
            ++swap_mismatches;
        }

        // s -> 0 recovers N I for several admissible epsilons.
        std::vector<double> epsilons{default_epsilon(pt.channel.noise)};
        if (pt.channel.noise < 0.5) {
            epsilons = {0.0, pt.channel.noise, 2.0 * pt.channel.noise};
        }
        for (double eps : epsilons) {
            const BlockCovariance v = noise_covariance(ChannelParams::make(n, pt.channel.noise, 1e-9, eps));
            const Matrix identity = Matrix::Identity(n, n);
            recovery = std::max({recovery, (v.q - pt.channel.noise * identity).cwiseAbs().maxCoeff(),
                                 (v.p - pt.channel.noise * identity).cwiseAbs().maxCoeff()});
        }
    }
    o.pass = diag_noise <= 1e-12 && diag_mod <= 1e-12 && energy <= 1e-10 && min_lambda >= 0.5 - 1e-9 &&
             recovery <= 1e-8 && swap_mismatches == 0;
    o.detail = fmt("100 points: diag noise dev %.1e, diag modulation dev %.1e, energy dev %.1e, min lambda %.6f, "
                   "s->0 recovery %.1e, block-swap mismatches %d",
                   diag_noise, diag_mod, energy, min_lambda, recovery, swap_mismatches);
    return o;
}

Outcome criterion_feasibility_closed_form() {
    Outcome o;
    double worst = 0.0;
    const std::vector<std::pair<double, double>> cases{{kNoise, 1.0}, {1.0, 1.0}, {0.3, 0.5}, {0.45, 0.2}, {2.5, 1.0}};
    for (const auto &[noise, eps] : cases) {
        const FeasibleRegion region = feasible_region(ChannelParams::make(2, noise, 0.0, eps), kNbar);
        worst = std::max(worst, std::abs(region.s_max - std::acosh(2.0 * noise / eps)));
    }
    o.pass = worst <= 1e-8;
    o.detail = fmt("n=2, %zu (N, epsilon) cases: max |s_max - arccosh(2N/epsilon)| = %.3e (tol 1e-8)", cases.size(),
                   worst);
    return o;
}

} // namespace

int main() {
    std::vector<std::pair<std::string, Outcome>> results;
    auto run = [&results](const std::string &name, const std::function<Outcome()> &criterion) {
        Outcome o;
        try {
            o = criterion();
        } catch (const std::exception &e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::printf("[%s] %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
        std::fflush(stdout);
        results.emplace_back(name, o);
    };

    run("C1 memoryless closed form", criterion_memoryless);

    std::map<std::pair<double, int>, RateResult> best;
    double optimize_seconds = 0.0;
    try {
        const auto start = Clock::now();
        best = optimize_all({0.0, 0.1, 0.2});
        optimize_seconds = seconds_since(start);
    } catch (const std::exception &e) {
        std::printf("joint optimization failed: %s\n", e.what());
    }
    run("C2 entanglement advantage", [&] { return criterion_advantage(best, optimize_seconds); });
    run("C3 rate growth with uses", [&] { return criterion_growth(best); });
    run("C4 memory ordering", [&] { return criterion_memory_ordering(best); });
    run("C5 symplectic oracle equivalence", criterion_oracle_equivalence);
    run("C6 Monte Carlo validation", criterion_monte_carlo);
    run("C7 invariant suite", criterion_invariants);
    run("C8 feasibility closed form", criterion_feasibility_closed_form);

    int failed = 0;
    for (const auto &[name, o] : results) {
        failed += o.pass ? 0 : 1;
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(results.size()) - failed, results.size());
    return failed == 0 ? 0 : 1;
}
