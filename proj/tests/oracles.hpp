#pragma once

// Independent references for the spectral tests: characteristic polynomial
// by Faddeev-LeVerrier and its roots by Durand-Kerner with Newton polish.

#include <Eigen/Dense>

#include <algorithm>
#include <complex>
#include <limits>
#include <vector>

namespace oracle {

using cld = std::complex<long double>;

/// Monic coefficients c[0..n] of det(tI - A) with c[0] = 1 (highest first).
inline std::vector<long double> char_poly(const Eigen::MatrixXd& a) {
    const int n = static_cast<int>(a.rows());
    using MatL = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
    const MatL A = a.cast<long double>();
    std::vector<long double> c(n + 1, 0.0L);
    c[0] = 1.0L;
    MatL m = MatL::Zero(n, n);
    for (int k = 1; k <= n; ++k) {
        m = A * m + c[k - 1] * MatL::Identity(n, n);
        c[k] = -(A * m).trace() / k;
    }
    return c;
}

inline cld horner(const std::vector<long double>& c, cld x) {
    cld y = c[0];
    for (std::size_t k = 1; k < c.size(); ++k) y = y * x + c[k];
    return y;
}

inline cld horner_derivative(const std::vector<long double>& c, cld x) {
    const std::size_t n = c.size() - 1;
    cld y = 0;
    for (std::size_t k = 0; k < n; ++k) y = y * x + c[k] * static_cast<long double>(n - k);
    return y;
}

inline std::vector<std::complex<double>> poly_roots(const std::vector<long double>& c) {
    const std::size_t n = c.size() - 1;
    std::vector<cld> z(n);
    long double bound = 1.0L;
    for (std::size_t k = 1; k <= n; ++k) bound = std::max(bound, 1.0L + std::abs(c[k]));
    const cld seed(0.4L, 0.9L);
    for (std::size_t k = 0; k < n; ++k) z[k] = std::pow(seed, static_cast<long double>(k)) * (bound * 0.5L);
    for (int it = 0; it < 2000; ++it) {
        long double change = 0.0L;
        for (std::size_t k = 0; k < n; ++k) {
            cld den = 1.0L;
            for (std::size_t j = 0; j < n; ++j)
                if (j != k) den *= z[k] - z[j];
            const cld step = horner(c, z[k]) / den;
            z[k] -= step;
            change = std::max(change, std::abs(step));
        }
        if (change < 1e-18L) break;
    }
    for (auto& r : z)
        for (int it = 0; it < 5; ++it) {
            const cld d = horner_derivative(c, r);
            if (std::abs(d) == 0.0L) break;
            r -= horner(c, r) / d;
        }
    std::vector<std::complex<double>> out;
    for (const auto& r : z) out.emplace_back(static_cast<double>(r.real()), static_cast<double>(r.imag()));
    return out;
}

/// Largest distance under a greedy nearest pairing of the two multisets.
inline double match_distance(std::vector<std::complex<double>> a, std::vector<std::complex<double>> b) {
    double worst = 0.0;
    for (const auto& x : a) {
        std::size_t best = 0;
        double bd = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < b.size(); ++k)
            if (std::abs(x - b[k]) < bd) bd = std::abs(x - b[k]), best = k;
        worst = std::max(worst, bd);
        b.erase(b.begin() + static_cast<std::ptrdiff_t>(best));
    }
    return worst;
}

}  // namespace oracle
