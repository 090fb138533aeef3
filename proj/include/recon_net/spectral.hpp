#pragma once

#include "recon_net/error.hpp"
#include "recon_net/graph.hpp"
#include "recon_net/models.hpp"
#include "recon_net/stats.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace recon_net {

/// Eigenvalues sorted by modulus, then real part, then imaginary part, all
/// descending.
struct Spectrum {
    std::vector<std::complex<double>> values;

    std::size_t size() const noexcept { return values.size(); }
};

namespace spectral_detail {

inline void sort_spectrum(std::vector<std::complex<double>>& v) {
    std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
        const double ma = std::abs(a), mb = std::abs(b);
        if (ma != mb) return ma > mb;
        if (a.real() != b.real()) return a.real() > b.real();
        return a.imag() > b.imag();
    });
}

/// Peels off rows (columns) whose off-diagonal entries within the remaining
/// block are all zero: each gives its diagonal entry as an eigenvalue, since
/// permuting it last (first) leaves a block triangular matrix. Returns the
/// indices of the block that still needs iterating.
inline std::vector<Eigen::Index> isolate(const Eigen::MatrixXd& a, std::vector<std::complex<double>>& isolated) {
    const Eigen::Index n = a.rows();
    std::vector<char> live(static_cast<std::size_t>(n), 1);
    bool changed = true;
    while (changed) {
        changed = false;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (!live[i]) continue;
            bool row_zero = true, col_zero = true;
            for (Eigen::Index j = 0; j < n && (row_zero || col_zero); ++j) {
                if (j == i || !live[j]) continue;
                if (a(i, j) != 0.0) row_zero = false;
                if (a(j, i) != 0.0) col_zero = false;
            }
            if (row_zero || col_zero) {
                live[i] = 0;
                isolated.emplace_back(a(i, i), 0.0);
                changed = true;
            }
        }
    }
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < n; ++i)
        if (live[i]) keep.push_back(i);
    return keep;
}

/// Row/column scaling by powers of two until row and column norms balance.
inline void balance(Eigen::MatrixXd& a) {
    const Eigen::Index n = a.rows();
    constexpr double radix = 2.0;
    constexpr double sqrdx = radix * radix;
    bool done = false;
    while (!done) {
        done = true;
        for (Eigen::Index i = 0; i < n; ++i) {
            double r = 0.0, c = 0.0;
            for (Eigen::Index j = 0; j < n; ++j)
                if (j != i) {
                    c += std::abs(a(j, i));
                    r += std::abs(a(i, j));
                }
            if (c == 0.0 || r == 0.0) continue;
            double g = r / radix, f = 1.0;
            const double s = c + r;
            while (c < g) {
                f *= radix;
                c *= sqrdx;
            }
            g = r * radix;
            while (c > g) {
                f /= radix;
                c /= sqrdx;
            }
            if ((c + r) / f < 0.95 * s) {
                done = false;
                a.row(i) /= f;
                a.col(i) *= f;
            }
        }
    }
}

/// Householder reduction to upper Hessenberg form.
inline void hessenberg(Eigen::MatrixXd& h) {
    const Eigen::Index n = h.rows();
    const Eigen::Index high = n - 1;
    std::vector<double> ort(static_cast<std::size_t>(n), 0.0);
    for (Eigen::Index m = 1; m <= high - 1; ++m) {
        double scale = 0.0;
        for (Eigen::Index i = m; i <= high; ++i) scale += std::abs(h(i, m - 1));
        if (scale == 0.0) continue;
        double hh = 0.0;
        for (Eigen::Index i = high; i >= m; --i) {
            ort[i] = h(i, m - 1) / scale;
            hh += ort[i] * ort[i];
        }
        double g = std::sqrt(hh);
        if (ort[m] > 0) g = -g;
        hh -= ort[m] * g;
        ort[m] -= g;
        for (Eigen::Index j = m; j < n; ++j) {
            double f = 0.0;
            for (Eigen::Index i = high; i >= m; --i) f += ort[i] * h(i, j);
            f /= hh;
            for (Eigen::Index i = m; i <= high; ++i) h(i, j) -= f * ort[i];
        }
        for (Eigen::Index i = 0; i <= high; ++i) {
            double f = 0.0;
            for (Eigen::Index j = high; j >= m; --j) f += ort[j] * h(i, j);
            f /= hh;
            for (Eigen::Index j = m; j <= high; ++j) h(i, j) -= f * ort[j];
        }
        ort[m] *= scale;
        h(m, m - 1) = scale * g;
    }
    for (Eigen::Index i = 2; i < n; ++i)
        for (Eigen::Index j = 0; j < i - 1; ++j) h(i, j) = 0.0;
}

inline double sign_of(double a, double b) { return b >= 0.0 ? std::abs(a) : -std::abs(a); }

/// Francis double-shift QR on an upper Hessenberg matrix (eigenvalues only).
inline std::vector<std::complex<double>> hessenberg_qr(Eigen::MatrixXd& a) {
    constexpr double eps = std::numeric_limits<double>::epsilon();
    const int n = static_cast<int>(a.rows());
    // Per-deflation budget as in LAPACK's dlahqr; defective clusters (zero
    // eigenvalues of sparse adjacency matrices) converge only linearly.
    const int max_its = 30 * std::max(10, n);
    std::vector<double> wr(n, 0.0), wi(n, 0.0);
    double anorm = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = std::max(i - 1, 0); j < n; ++j) anorm += std::abs(a(i, j));

    int nn = n - 1;
    double t = 0.0;
    while (nn >= 0) {
        int its = 0;
        int l;
        do {
            for (l = nn; l > 0; --l) {
                double s = std::abs(a(l - 1, l - 1)) + std::abs(a(l, l));
                if (s == 0.0) s = anorm;
                if (std::abs(a(l, l - 1)) <= eps * s) {
                    a(l, l - 1) = 0.0;
                    break;
                }
            }
            double x = a(nn, nn);
            if (l == nn) {
                wr[nn] = x + t;
                wi[nn] = 0.0;
                --nn;
            } else {
                double y = a(nn - 1, nn - 1);
                double w = a(nn, nn - 1) * a(nn - 1, nn);
                if (l == nn - 1) {
                    const double p = 0.5 * (y - x);
                    const double q = p * p + w;
                    double z = std::sqrt(std::abs(q));
                    x += t;
                    if (q >= 0.0) {
                        z = p + sign_of(z, p);
                        wr[nn - 1] = wr[nn] = x + z;
                        if (z != 0.0) wr[nn] = x - w / z;
                        wi[nn - 1] = wi[nn] = 0.0;
                    } else {
                        wr[nn - 1] = wr[nn] = x + p;
                        wi[nn - 1] = -z;
                        wi[nn] = z;
                    }
                    nn -= 2;
                } else {
                    if (its == max_its) fail(ErrorKind::numerical, "QR iteration did not converge");
                    if (its > 0 && its % 10 == 0) {
                        // exceptional shift
                        t += x;
                        for (int i = 0; i <= nn; ++i) a(i, i) -= x;
                        const double s = std::abs(a(nn, nn - 1)) + std::abs(a(nn - 1, nn - 2));
                        y = x = 0.75 * s;
                        w = -0.4375 * s * s;
                    }
                    ++its;
                    int m;
                    double p = 0.0, q = 0.0, r = 0.0, z;
                    for (m = nn - 2; m >= l; --m) {
                        z = a(m, m);
                        r = x - z;
                        double s = y - z;
                        p = (r * s - w) / a(m + 1, m) + a(m, m + 1);
                        q = a(m + 1, m + 1) - z - r - s;
                        r = a(m + 2, m + 1);
                        s = std::abs(p) + std::abs(q) + std::abs(r);
                        p /= s;
                        q /= s;
                        r /= s;
                        if (m == l) break;
                        const double u = std::abs(a(m, m - 1)) * (std::abs(q) + std::abs(r));
                        const double v = std::abs(p) * (std::abs(a(m - 1, m - 1)) + std::abs(z) + std::abs(a(m + 1, m + 1)));
                        if (u <= eps * v) break;
                    }
                    for (int i = m; i < nn - 1; ++i) {
                        a(i + 2, i) = 0.0;
                        if (i != m) a(i + 2, i - 1) = 0.0;
                    }
                    for (int k = m; k < nn; ++k) {
                        if (k != m) {
                            p = a(k, k - 1);
                            q = a(k + 1, k - 1);
                            r = 0.0;
                            if (k + 1 != nn) r = a(k + 2, k - 1);
                            if ((x = std::abs(p) + std::abs(q) + std::abs(r)) != 0.0) {
                                p /= x;
                                q /= x;
                                r /= x;
                            }
                        }
                        const double s = sign_of(std::sqrt(p * p + q * q + r * r), p);
                        if (s == 0.0) continue;
                        if (k == m) {
                            if (l != m) a(k, k - 1) = -a(k, k - 1);
                        } else {
                            a(k, k - 1) = -s * x;
                        }
                        p += s;
                        x = p / s;
                        y = q / s;
                        z = r / s;
                        q /= p;
                        r /= p;
                        for (int j = k; j <= nn; ++j) {
                            p = a(k, j) + q * a(k + 1, j);
                            if (k + 1 != nn) {
                                p += r * a(k + 2, j);
                                a(k + 2, j) -= p * z;
                            }
                            a(k + 1, j) -= p * y;
                            a(k, j) -= p * x;
                        }
                        const int mmin = nn < k + 3 ? nn : k + 3;
                        for (int i = l; i <= mmin; ++i) {
                            p = x * a(i, k) + y * a(i, k + 1);
                            if (k + 1 != nn) {
                                p += z * a(i, k + 2);
                                a(i, k + 2) -= p * r;
                            }
                            a(i, k + 1) -= p * q;
                            a(i, k) -= p;
                        }
                    }
                }
            }
        } while (l + 1 < nn);
    }
    std::vector<std::complex<double>> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) out.emplace_back(wr[i], wi[i]);
    return out;
}

}  // namespace spectral_detail

/// All eigenvalues of a real square matrix.
inline Spectrum eigenvalues(const Eigen::MatrixXd& matrix) {
    if (matrix.rows() != matrix.cols()) fail(ErrorKind::numerical, "eigenvalues need a square matrix");
    if (matrix.rows() == 0) fail(ErrorKind::numerical, "eigenvalues need a non-empty matrix");
    if (!matrix.allFinite()) fail(ErrorKind::numerical, "matrix has non-finite entries");
    Spectrum s;
    const auto keep = spectral_detail::isolate(matrix, s.values);
    if (!keep.empty()) {
        const Eigen::Index m = static_cast<Eigen::Index>(keep.size());
        Eigen::MatrixXd a(m, m);
        for (Eigen::Index i = 0; i < m; ++i)
            for (Eigen::Index j = 0; j < m; ++j) a(i, j) = matrix(keep[i], keep[j]);
        spectral_detail::balance(a);
        spectral_detail::hessenberg(a);
        const auto rest = spectral_detail::hessenberg_qr(a);
        s.values.insert(s.values.end(), rest.begin(), rest.end());
    }
    spectral_detail::sort_spectrum(s.values);
    return s;
}

/// Eigenvalue of maximum modulus (ties within 1e-9 relative go to the
/// largest real part), returned as its real part.
inline double leading_eigenvalue(const Spectrum& s) {
    if (s.values.empty()) fail(ErrorKind::numerical, "empty spectrum");
    const double top = std::abs(s.values.front());
    const double tol = 1e-9 * std::max(1.0, top);
    double best = s.values.front().real();
    for (const auto& z : s.values) {
        if (top - std::abs(z) > tol) break;
        best = std::max(best, z.real());
    }
    return best;
}

inline double leading_eigenvalue(const DirectedNetwork& net) {
    return leading_eigenvalue(eigenvalues(net.adjacency_matrix()));
}

namespace spectral_detail {

inline bool fluctuating(double p) { return p > 0.0 && p < 1.0; }

}  // namespace spectral_detail

/// (a_ij - p_ij) / sqrt(N p_ij (1 - p_ij)) on entries with 0 < p_ij < 1;
/// deterministic entries and the diagonal are 0.
inline Eigen::MatrixXd rescale_matrix(const DirectedNetwork& net, const FittedModel& model) {
    const std::size_t n = net.size();
    if (model.size() != n) fail(ErrorKind::validation, "model and network differ in node count");
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
    std::size_t live = 0;
    const double dn = static_cast<double>(n);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) {
            if (r == c) continue;
            const double p = model.link_probability(r, c);
            if (!spectral_detail::fluctuating(p)) continue;
            ++live;
            const double a = net.has_link(r, c) ? 1.0 : 0.0;
            j(r, c) = (a - p) / std::sqrt(dn * p * (1.0 - p));
        }
    if (live == 0) fail(ErrorKind::degenerate, "every link probability is 0 or 1; nothing to rescale");
    return j;
}

/// Standardized dyadic correlation; entries outside the mask are NaN.
struct TauMatrix {
    Eigen::MatrixXd values;
    std::vector<std::uint8_t> defined;  // row-major, n * n

    std::size_t size() const noexcept { return static_cast<std::size_t>(values.rows()); }
    bool is_defined(std::size_t i, std::size_t j) const { return defined[i * size() + j] != 0; }

    /// Defined values over unordered pairs i < j.
    std::vector<double> upper_values() const {
        std::vector<double> out;
        for (std::size_t i = 0; i < size(); ++i)
            for (std::size_t j = i + 1; j < size(); ++j)
                if (is_defined(i, j)) out.push_back(values(i, j));
        return out;
    }

    double mean() const {
        const auto v = upper_values();
        if (v.empty()) return std::nan("");
        return recon_net::mean(v);
    }
};

inline double dyad_tau(double p_both, double p_ij, double p_ji) {
    return (p_both - p_ij * p_ji) / std::sqrt(p_ij * (1.0 - p_ij) * p_ji * (1.0 - p_ji));
}

/// Same quantity from the full dyad distribution. The covariance is taken as
/// p_none p_both - p_ij_only p_ji_only, which avoids cancelling two near-equal terms.
inline double dyad_tau(const DyadProbabilities& d) {
    const double p_ij = d.p_ij(), p_ji = d.p_ji();
    return (d.none * d.both - d.ij_only * d.ji_only) / std::sqrt(p_ij * (1.0 - p_ij) * p_ji * (1.0 - p_ji));
}

inline TauMatrix tau_matrix(const FittedModel& model) {
    const std::size_t n = model.size();
    TauMatrix t;
    t.values = Eigen::MatrixXd::Constant(n, n, std::nan(""));
    t.defined.assign(n * n, 0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double p_ij = model.link_probability(i, j);
            const double p_ji = model.link_probability(j, i);
            if (!spectral_detail::fluctuating(p_ij) || !spectral_detail::fluctuating(p_ji)) continue;
            // DCM and F-DCM links are independent by construction: both == p_ij * p_ji exactly.
            const bool independent = model.kind() == ModelKind::DCM || model.kind() == ModelKind::FDCM;
            const double tau = independent ? dyad_tau(model.dyad(i, j).both, p_ij, p_ji) : dyad_tau(model.dyad(i, j));
            t.values(i, j) = t.values(j, i) = tau;
            t.defined[i * n + j] = t.defined[j * n + i] = 1;
        }
    return t;
}

/// F-GRM correlation through the factorized variance polynomial g_ij:
/// tau = u (v^2 - 1) sqrt(A_i A_j L_i L_j) / g_ij.
inline double fgrm_tau_closed_form(double u, double v, double assets_i, double liabilities_i, double assets_j,
                                   double liabilities_j) {
    const double a = assets_i * liabilities_j;  // A_i L_j
    const double b = assets_j * liabilities_i;  // A_j L_i
    const double ab = a * b;
    const double v2 = v * v;
    const double g2 = 1.0 + u * (v2 + 1.0) * (a + b) + u * u * (v2 + 1.0) * (v2 + 1.0) * ab +
                      u * u * v2 * a * a + u * u * v2 * b * b + u * u * u * v2 * (v2 + 1.0) * ab * (a + b) +
                      u * u * u * u * v2 * v2 * ab * ab;
    return u * (v2 - 1.0) * std::sqrt(ab) / std::sqrt(g2);
}

struct BulkShape {
    double semi_axis_re = 0.0;
    double semi_axis_im = 0.0;
    double axis_ratio = std::nan("");
    std::size_t pooled = 0;
    std::optional<double> mean_tau;
};

/// Drops the leading eigenvalue of each spectrum, pools the rest and takes
/// the 0.99 quantiles of |Re| and |Im| as semi-axes.
inline BulkShape bulk_shape(std::span<const Spectrum> spectra, const TauMatrix* tau = nullptr) {
    if (spectra.empty()) fail(ErrorKind::insufficient_data, "bulk shape needs at least one spectrum");
    std::vector<double> re, im;
    for (const Spectrum& s : spectra) {
        if (s.size() < 3) fail(ErrorKind::insufficient_data, "bulk shape needs spectra of size >= 3");
        for (std::size_t k = 1; k < s.size(); ++k) {
            re.push_back(std::abs(s.values[k].real()));
            im.push_back(std::abs(s.values[k].imag()));
        }
    }
    if (re.size() < 10) fail(ErrorKind::insufficient_data, "fewer than 10 pooled bulk eigenvalues");
    std::sort(re.begin(), re.end());
    std::sort(im.begin(), im.end());
    BulkShape b;
    b.pooled = re.size();
    b.semi_axis_re = quantile_sorted(re, 0.99);
    b.semi_axis_im = quantile_sorted(im, 0.99);
    if (b.semi_axis_re > 0.0) b.axis_ratio = b.semi_axis_im / b.semi_axis_re;
    if (tau) b.mean_tau = tau->mean();
    return b;
}

}  // namespace recon_net
