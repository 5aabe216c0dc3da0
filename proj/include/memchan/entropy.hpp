#pragma once

#include <cmath>
#include <numbers>
#include <sstream>

#include "memchan/channel.hpp"
#include "memchan/errors.hpp"
#include "memchan/linalg.hpp"

namespace memchan {

/// Entropy in bits of a thermal state with mean photon number x:
/// (x+1) log2(x+1) - x log2(x), and 0 at x = 0.
[[nodiscard]] inline double thermal_entropy(double x) {
    constexpr double negative_slack = 1e-12;
    if (!(x >= -negative_slack)) {
        std::ostringstream msg;
        msg << "thermal_entropy: mean photon number " << x << " is negative";
        throw DomainError(msg.str());
    }
    if (x < 1e-12) {
        return 0.0;
    }
    return ((x + 1.0) * std::log1p(x) - x * std::log(x)) / std::numbers::ln2;
}

/// Short alias matching the usual name of the thermal-entropy function.
[[nodiscard]] inline double g(double x) { return thermal_entropy(x); }

/// Sum of g(|lambda_j| - 1/2) over a physical spectrum.
[[nodiscard]] inline double spectrum_entropy(const SymplecticSpectrum &spectrum) {
    double total = 0.0;
    for (double lambda : spectrum.values) {
        total += thermal_entropy(lambda - 0.5);
    }
    return total;
}

/// Von Neumann entropy (bits) of the Gaussian state with this covariance.
[[nodiscard]] inline double gaussian_entropy(const BlockCovariance &cov) {
    SymplecticSpectrum spectrum = symplectic_eigenvalues(cov);
    require_physical(spectrum);
    return spectrum_entropy(spectrum);
}

struct RateResult {
    /// Bits per channel use.
    double rate = 0.0;
    SymplecticSpectrum avg_spectrum;
    SymplecticSpectrum out_spectrum;
    ChannelParams channel;
    InputParams input;
    /// Resolved theta and photons spent on squeezing at this point.
    double theta = 0.0;
    double squeezed_photons = 0.0;
};

/// (1/n) sum_j [g(avg_j - 1/2) - g(out_j - 1/2)] from two spectra.
[[nodiscard]] inline double rate_from_spectra(const SymplecticSpectrum &avg, const SymplecticSpectrum &out) {
    double total = 0.0;
    for (std::size_t j = 0; j < avg.values.size(); ++j) {
        total += thermal_entropy(avg.values[j] - 0.5) - thermal_entropy(out.values[j] - 0.5);
    }
    return total / static_cast<double>(avg.values.size());
}

/// Rate from given output and averaged-output covariances.
[[nodiscard]] inline double rate_from_covariances(const BlockCovariance &averaged, const BlockCovariance &output) {
    SymplecticSpectrum avg = symplectic_eigenvalues(averaged);
    SymplecticSpectrum out = symplectic_eigenvalues(output);
    require_physical(avg);
    require_physical(out);
    return rate_from_spectra(avg, out);
}

/// Transmission rate R(r, y) = (1/n)[S(averaged output) - S(output)].
/// Propagates the feasibility errors of the covariance constructors.
[[nodiscard]] inline RateResult transmission_rate(const ChannelParams &channel, const InputParams &input) {
    const BlockCovariance output = output_covariance(channel, input.r);
    const BlockCovariance averaged = output + modulation_covariance(channel.n, input);

    RateResult result;
    result.channel = channel;
    result.input = input;
    result.theta = resolve_theta(channel.n, input);
    result.squeezed_photons = squeezed_photons(channel.n, input.r);
    result.avg_spectrum = symplectic_eigenvalues(averaged);
    result.out_spectrum = symplectic_eigenvalues(output);
    require_physical(result.avg_spectrum);
    require_physical(result.out_spectrum);
    result.rate = rate_from_spectra(result.avg_spectrum, result.out_spectrum);
    return result;
}

} // namespace memchan
