#pragma once

// Spectral machinery for the nearest-neighbour coupling pattern and
// symplectic eigenvalues of block-diagonal covariance matrices.
//
// Every covariance in this model is block diagonal in the
// (q_1..q_n, p_1..p_n) ordering, so a 2n x 2n matrix is carried as its two
// n x n blocks.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <sstream>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "memchan/errors.hpp"

namespace memchan {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace tolerance {
/// Eigenvalues of a PSD matrix in (-psd, 0) are treated as roundoff zeros.
inline constexpr double psd = 1e-10;
/// Symplectic eigenvalues within this distance below 1/2 are clamped to 1/2.
inline constexpr double vacuum = 1e-9;
/// Diagonal slack of the regulated noise and modulation parts.
inline constexpr double diagonal = 1e-12;
} // namespace tolerance

/// The n x n path-graph pattern: zero diagonal, ones on the first off
/// diagonals. Memory, squeezing and input correlation all scale this one
/// matrix.
[[nodiscard]] inline Matrix coupling_matrix(int n) {
    if (n < 1) {
        throw DomainError("coupling_matrix: number of modes must be >= 1");
    }
    Matrix t = Matrix::Zero(n, n);
    for (int j = 0; j + 1 < n; ++j) {
        t(j, j + 1) = 1.0;
        t(j + 1, j) = 1.0;
    }
    return t;
}

/// Eigensystem of a real symmetric matrix: eigenvalues in descending order,
/// eigenvector columns matched to them.
struct SpectralDecomposition {
    Vector eigenvalues;
    Matrix eigenvectors;

    [[nodiscard]] int size() const { return static_cast<int>(eigenvalues.size()); }

    [[nodiscard]] Matrix reconstruct() const {
        return eigenvectors * eigenvalues.asDiagonal() * eigenvectors.transpose();
    }

    /// V f(D) V^T for a scalar function f applied to the eigenvalues.
    template <typename F>
    [[nodiscard]] Matrix apply(F &&f) const {
        Vector mapped = eigenvalues.unaryExpr(std::forward<F>(f));
        Matrix m = eigenvectors * mapped.asDiagonal() * eigenvectors.transpose();
        return 0.5 * (m + m.transpose());
    }

    /// Diagonal of V f(D) V^T without forming the full product.
    template <typename F>
    [[nodiscard]] Vector apply_diagonal(F &&f) const {
        Vector mapped = eigenvalues.unaryExpr(std::forward<F>(f));
        return eigenvectors.cwiseAbs2() * mapped;
    }
};

/// Closed-form eigensystem of coupling_matrix(n):
/// mu_k = 2 cos(k pi / (n+1)), v_k(j) = sqrt(2/(n+1)) sin(j k pi / (n+1)).
[[nodiscard]] inline SpectralDecomposition coupling_spectrum(int n) {
    if (n < 1) {
        throw DomainError("coupling_spectrum: number of modes must be >= 1");
    }
    const double step = std::numbers::pi / static_cast<double>(n + 1);
    const double norm = std::sqrt(2.0 / static_cast<double>(n + 1));
    SpectralDecomposition d;
    d.eigenvalues.resize(n);
    d.eigenvectors.resize(n, n);
    for (int k = 1; k <= n; ++k) {
        d.eigenvalues(k - 1) = 2.0 * std::cos(k * step);
        for (int j = 1; j <= n; ++j) {
            d.eigenvectors(j - 1, k - 1) = norm * std::sin(j * k * step);
        }
    }
    // The middle eigenvalue of an odd-sized pattern is 0 analytically.
    if (n % 2 == 1) {
        d.eigenvalues((n - 1) / 2) = 0.0;
    }
    return d;
}

/// exp(scale * M) for the matrix M described by the decomposition.
[[nodiscard]] inline Matrix sym_exp(const SpectralDecomposition &decomp, double scale) {
    if (scale == 0.0) {
        return Matrix::Identity(decomp.size(), decomp.size());
    }
    return decomp.apply([scale](double mu) { return std::exp(scale * mu); });
}

/// Numerical eigensystem of a symmetric matrix, sorted descending.
[[nodiscard]] inline SpectralDecomposition symmetric_eigen(const Matrix &m) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(m);
    if (solver.info() != Eigen::Success) {
        throw DomainError("symmetric_eigen: eigensolver did not converge");
    }
    const int n = static_cast<int>(m.rows());
    SpectralDecomposition d;
    d.eigenvalues.resize(n);
    d.eigenvectors.resize(n, n);
    // Eigen returns ascending order.
    for (int k = 0; k < n; ++k) {
        d.eigenvalues(k) = solver.eigenvalues()(n - 1 - k);
        d.eigenvectors.col(k) = solver.eigenvectors().col(n - 1 - k);
    }
    return d;
}

/// Clamps roundoff negatives of a PSD spectrum to zero; throws if an
/// eigenvalue is negative beyond the PSD tolerance (scaled by the largest
/// magnitude when that exceeds one).
inline void clamp_psd(Vector &eigenvalues, const char *what) {
    const double scale = std::max(1.0, eigenvalues.cwiseAbs().maxCoeff());
    for (Eigen::Index k = 0; k < eigenvalues.size(); ++k) {
        if (eigenvalues(k) < -tolerance::psd * scale) {
            std::ostringstream msg;
            msg << what << ": matrix is not positive semidefinite (eigenvalue "
                << eigenvalues(k) << ")";
            throw NonPhysicalCovariance(msg.str());
        }
        eigenvalues(k) = std::max(eigenvalues(k), 0.0);
    }
}

/// Principal square root of a symmetric PSD matrix.
[[nodiscard]] inline Matrix sqrt_psd(const Matrix &m) {
    SpectralDecomposition d = symmetric_eigen(m);
    clamp_psd(d.eigenvalues, "sqrt_psd");
    return d.apply([](double mu) { return std::sqrt(mu); });
}

/// Covariance diag(qBlock, pBlock) in the (q..., p...) ordering.
struct BlockCovariance {
    Matrix q;
    Matrix p;

    [[nodiscard]] int modes() const { return static_cast<int>(q.rows()); }

    /// Full 2n x 2n matrix.
    [[nodiscard]] Matrix full() const {
        const auto n = q.rows();
        Matrix v = Matrix::Zero(2 * n, 2 * n);
        v.topLeftCorner(n, n) = q;
        v.bottomRightCorner(n, n) = p;
        return v;
    }

    [[nodiscard]] BlockCovariance swapped() const { return {p, q}; }

    /// Largest deviation from symmetry over both blocks.
    [[nodiscard]] double asymmetry() const {
        return std::max((q - q.transpose()).cwiseAbs().maxCoeff(),
                        (p - p.transpose()).cwiseAbs().maxCoeff());
    }

    /// Mean photon number per mode, (Tr q + Tr p - n) / (2n).
    [[nodiscard]] double photons_per_mode() const {
        const double n = static_cast<double>(modes());
        return (q.trace() + p.trace() - n) / (2.0 * n);
    }

    friend BlockCovariance operator+(const BlockCovariance &a, const BlockCovariance &b) {
        return {a.q + b.q, a.p + b.p};
    }
};

/// Moduli of the symplectic eigenvalues, sorted descending.
struct SymplecticSpectrum {
    std::vector<double> values;
    /// Set when some value sat just below 1/2 and was clamped up.
    bool clamped = false;

    [[nodiscard]] std::size_t size() const { return values.size(); }
};

namespace detail {

inline void check_shape(const BlockCovariance &cov, const char *what) {
    if (cov.q.rows() == 0 || cov.q.rows() != cov.q.cols() || cov.p.rows() != cov.p.cols() ||
        cov.q.rows() != cov.p.rows()) {
        throw DomainError(std::string(what) + ": blocks must be square and of equal size");
    }
}

// Eigenvalues of sqrt(a) b sqrt(a), i.e. of the product a b.
inline Vector product_eigenvalues(const Matrix &a, const Matrix &b) {
    const Matrix root = sqrt_psd(a);
    Matrix similar = root * b * root;
    similar = 0.5 * (similar + similar.transpose());
    Vector w = symmetric_eigen(similar).eigenvalues;
    clamp_psd(w, "symplectic_eigenvalues");
    return w;
}

} // namespace detail

/// Symplectic spectrum of diag(A, B): the square roots of eig(A B).
///
/// eig(A B) is evaluated through both symmetric similar forms
/// sqrt(A) B sqrt(A) and sqrt(B) A sqrt(B) and averaged, so swapping the
/// blocks reproduces the result bit for bit. Throws NonPhysicalCovariance if
/// either block, or the product, has a negative eigenvalue beyond tolerance.
[[nodiscard]] inline SymplecticSpectrum symplectic_eigenvalues(const BlockCovariance &cov) {
    detail::check_shape(cov, "symplectic_eigenvalues");
    const Vector ab = detail::product_eigenvalues(cov.q, cov.p);
    const Vector ba = detail::product_eigenvalues(cov.p, cov.q);
    SymplecticSpectrum out;
    out.values.resize(static_cast<std::size_t>(ab.size()));
    for (Eigen::Index k = 0; k < ab.size(); ++k) {
        out.values[static_cast<std::size_t>(k)] = std::sqrt(0.5 * (ab(k) + ba(k)));
    }
    std::sort(out.values.begin(), out.values.end(), std::greater<>());
    return out;
}

/// Independent route: eigenvalues of Omega V for the assembled 2n x 2n
/// matrix V, with Omega = [[0, I], [-I, 0]]. They come in pairs +-i lambda,
/// the roots of det(V - lambda J) = 0 with J = i Omega.
[[nodiscard]] inline SymplecticSpectrum generic_symplectic_eigenvalues(const BlockCovariance &cov) {
    detail::check_shape(cov, "generic_symplectic_eigenvalues");
    const Matrix v = cov.full();
    const auto n = cov.q.rows();

    Vector spectrum = symmetric_eigen(v).eigenvalues;
    clamp_psd(spectrum, "generic_symplectic_eigenvalues");

    Matrix omega = Matrix::Zero(2 * n, 2 * n);
    omega.topRightCorner(n, n) = Matrix::Identity(n, n);
    omega.bottomLeftCorner(n, n) = -Matrix::Identity(n, n);

    Eigen::EigenSolver<Matrix> solver(omega * v, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success) {
        throw DomainError("generic_symplectic_eigenvalues: eigensolver did not converge");
    }
    std::vector<double> moduli;
    moduli.reserve(static_cast<std::size_t>(2 * n));
    for (Eigen::Index k = 0; k < 2 * n; ++k) {
        moduli.push_back(std::abs(solver.eigenvalues()(k)));
    }
    std::sort(moduli.begin(), moduli.end(), std::greater<>());

    SymplecticSpectrum out;
    for (std::size_t k = 0; k < moduli.size(); k += 2) {
        out.values.push_back(0.5 * (moduli[k] + moduli[k + 1]));
    }
    return out;
}

/// Enforces the uncertainty bound lambda >= 1/2: values short of it by less
/// than tolerance::vacuum are clamped (and flagged), larger violations throw.
inline void require_physical(SymplecticSpectrum &spectrum) {
    for (double &lambda : spectrum.values) {
        if (lambda >= 0.5) {
            continue;
        }
        if (lambda < 0.5 - tolerance::vacuum) {
            std::ostringstream msg;
            msg << "symplectic eigenvalue " << lambda << " is below the vacuum value 1/2";
            throw NonPhysicalCovariance(msg.str());
        }
        lambda = 0.5;
        spectrum.clamped = true;
    }
}

} // namespace memchan
