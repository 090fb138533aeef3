#pragma once

// Bounded nonlinear least squares: trust-region reflective iteration with
// Coleman-Li scaling, for boxes of the form (lower_bound, +inf).

#include "recon_net/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string>

namespace recon_net {

struct SolverConfig {
    double residual_tolerance = 1e-10;
    double step_tolerance = 1e-12;
    std::size_t max_iterations = 1000;
    double lower_bound = 1e-14;
    std::optional<Eigen::VectorXd> initial_point;  // default: all ones

    void validate() const {
        if (!(residual_tolerance > 0.0)) fail(ErrorKind::configuration, "residual_tolerance must be positive");
        if (!(step_tolerance > 0.0)) fail(ErrorKind::configuration, "step_tolerance must be positive");
        if (!(lower_bound > 0.0)) fail(ErrorKind::configuration, "lower_bound must be positive");
        if (max_iterations == 0) fail(ErrorKind::configuration, "max_iterations must be at least 1");
    }
};

struct SolverReport {
    std::size_t iterations = 0;
    std::size_t evaluations = 0;
    double residual_norm = std::numeric_limits<double>::infinity();
    bool converged = false;
    double seconds = 0.0;
    std::string message;
};

/// Raised by fitting routines when the solver stops without meeting the
/// residual tolerance; carries the report.
class NonConvergenceError : public Error {
public:
    NonConvergenceError(const std::string& what, SolverReport report)
        : Error(ErrorKind::non_convergence,
                what + " (iterations=" + std::to_string(report.iterations) +
                    ", residual_norm=" + std::to_string(report.residual_norm) + ", " + report.message + ")"),
          report_(std::move(report)) {}

    const SolverReport& report() const noexcept { return report_; }

private:
    SolverReport report_;
};

struct LeastSquaresProblem {
    std::size_t parameters = 0;
    std::size_t residuals = 0;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> residual;
    /// Optional analytic Jacobian (residuals x parameters); forward
    /// differences with relative step 1e-8 otherwise.
    std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> jacobian;
};

struct LeastSquaresResult {
    Eigen::VectorXd x;
    SolverReport report;
};

namespace trf_detail {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kEps = std::numeric_limits<double>::epsilon();

struct Scaling {
    Vec v, dv;
};

// Only a finite lower bound is present, so components pushing against it
// (positive gradient) scale with their distance to the bound.
inline Scaling cl_scaling(const Vec& x, const Vec& g, double lb) {
    Scaling s{Vec::Ones(x.size()), Vec::Zero(x.size())};
    for (Eigen::Index i = 0; i < x.size(); ++i)
        if (g[i] > 0.0) {
            s.v[i] = x[i] - lb;
            s.dv[i] = 1.0;
        }
    return s;
}

inline Vec make_strictly_feasible(Vec x, double lb) {
    for (Eigen::Index i = 0; i < x.size(); ++i)
        if (x[i] <= lb) x[i] = std::nextafter(lb, kInf);
    return x;
}

inline bool in_bounds(const Vec& x, double lb) { return (x.array() >= lb).all(); }

struct BoundHit {
    double step = kInf;
    Eigen::VectorXi hits;
};

inline BoundHit step_size_to_bound(const Vec& x, const Vec& s, double lb) {
    BoundHit out;
    out.hits = Eigen::VectorXi::Zero(x.size());
    Vec steps = Vec::Constant(x.size(), kInf);
    for (Eigen::Index i = 0; i < x.size(); ++i)
        if (s[i] != 0.0) steps[i] = std::max((lb - x[i]) / s[i], (kInf - x[i]) / s[i]);
    out.step = steps.minCoeff();
    for (Eigen::Index i = 0; i < x.size(); ++i)
        if (steps[i] == out.step) out.hits[i] = s[i] > 0.0 ? 1 : (s[i] < 0.0 ? -1 : 0);
    return out;
}

/// Roots t1 <= t2 of ||x + t s|| = delta.
inline std::pair<double, double> intersect_trust_region(const Vec& x, const Vec& s, double delta) {
    const double a = s.squaredNorm();
    const double b = x.dot(s);
    const double c = x.squaredNorm() - delta * delta;
    const double d = std::sqrt(std::max(0.0, b * b - a * c));
    const double q = -(b + std::copysign(d, b));
    double t1 = q / a, t2 = c / q;
    if (t1 > t2) std::swap(t1, t2);
    return {t1, t2};
}

inline double evaluate_quadratic(const Mat& J, const Vec& g, const Vec& s, const Vec& diag) {
    const Vec js = J * s;
    const double q = js.squaredNorm() + (diag.array() * s.array().square()).sum();
    return 0.5 * q + g.dot(s);
}

struct Quadratic1d {
    double a, b, c;
};

/// f(t) = a t^2 + b t + c along s0 + t s.
inline Quadratic1d build_quadratic_1d(const Mat& J, const Vec& g, const Vec& s, const Vec& diag,
                                      const Vec* s0 = nullptr) {
    const Vec v = J * s;
    double a = v.squaredNorm() + (s.array() * diag.array() * s.array()).sum();
    a *= 0.5;
    double b = g.dot(s);
    double c = 0.0;
    if (s0) {
        const Vec u = J * (*s0);
        b += u.dot(v);
        c = 0.5 * u.squaredNorm() + g.dot(*s0);
        b += ((*s0).array() * diag.array() * s.array()).sum();
        c += 0.5 * ((*s0).array() * diag.array() * (*s0).array()).sum();
    }
    return {a, b, c};
}

inline std::pair<double, double> minimize_quadratic_1d(const Quadratic1d& q, double lo, double hi) {
    double cand[3] = {lo, hi, lo};
    int count = 2;
    if (q.a != 0.0) {
        const double ext = -0.5 * q.b / q.a;
        if (lo < ext && ext < hi) cand[count++] = ext;
    }
    double best_t = cand[0], best_y = kInf;
    for (int k = 0; k < count; ++k) {
        const double t = cand[k];
        const double y = t * (q.a * t + q.b) + q.c;
        if (y < best_y) {
            best_y = y;
            best_t = t;
        }
    }
    return {best_t, best_y};
}

struct TrStep {
    Vec p;
    double alpha;
};

/// Solves min ||J p + f|| s.t. ||p|| <= delta given the SVD of J
/// (uf = U^T f), by Newton iteration on the secular equation.
inline TrStep solve_lsq_trust_region(std::size_t n, std::size_t m, const Vec& uf, const Vec& s, const Mat& V,
                                     double delta, double initial_alpha) {
    const Vec suf = s.array() * uf.array();
    auto phi_and_derivative = [&](double alpha) {
        const Eigen::ArrayXd denom = s.array().square() + alpha;
        const double p_norm = (suf.array() / denom).matrix().norm();
        const double phi = p_norm - delta;
        const double phi_prime = -(suf.array().square() / denom.cube()).sum() / p_norm;
        return std::pair{phi, phi_prime};
    };

    bool full_rank = false;
    if (m >= n && s.size() > 0) {
        const double threshold = kEps * static_cast<double>(m) * s[0];
        full_rank = s[s.size() - 1] > threshold;
    }
    if (full_rank) {
        const Vec p = -V * (uf.array() / s.array()).matrix();
        if (p.norm() <= delta) return {p, 0.0};
    }

    double alpha_upper = suf.norm() / delta;
    double alpha_lower = 0.0;
    if (full_rank) {
        const auto [phi, phi_prime] = phi_and_derivative(0.0);
        alpha_lower = -phi / phi_prime;
    }
    double alpha = (!full_rank && initial_alpha == 0.0)
                       ? std::max(0.001 * alpha_upper, std::sqrt(alpha_lower * alpha_upper))
                       : initial_alpha;
    for (int it = 0; it < 10; ++it) {
        if (alpha < alpha_lower || alpha > alpha_upper)
            alpha = std::max(0.001 * alpha_upper, std::sqrt(alpha_lower * alpha_upper));
        const auto [phi, phi_prime] = phi_and_derivative(alpha);
        if (phi < 0.0) alpha_upper = alpha;
        const double ratio = phi / phi_prime;
        alpha_lower = std::max(alpha_lower, alpha - ratio);
        alpha -= (phi + delta) * ratio / delta;
        if (std::abs(phi) < 0.01 * delta) break;
    }
    Vec p = -V * (suf.array() / (s.array().square() + alpha)).matrix();
    const double pn = p.norm();
    if (pn > 0.0) p *= delta / pn;
    return {p, alpha};
}

struct SelectedStep {
    Vec step, step_h;
    double predicted_reduction;
};

/// Chooses among the truncated trust-region step, its reflection off the
/// bound, and the scaled anti-gradient.
inline SelectedStep select_step(const Vec& x, const Mat& J_h, const Vec& diag_h, const Vec& g_h, Vec p, Vec p_h,
                                const Vec& d, double delta, double lb, double theta) {
    if (in_bounds(x + p, lb)) {
        const double p_value = evaluate_quadratic(J_h, g_h, p_h, diag_h);
        return {p, p_h, -p_value};
    }
    const BoundHit first = step_size_to_bound(x, p, lb);
    Vec r_h = p_h;
    for (Eigen::Index i = 0; i < r_h.size(); ++i)
        if (first.hits[i] != 0) r_h[i] = -r_h[i];
    Vec r = d.array() * r_h.array();

    p *= first.step;
    p_h *= first.step;
    const Vec x_on_bound = x + p;

    const double to_tr = intersect_trust_region(p_h, r_h, delta).second;
    const double to_bound = step_size_to_bound(x_on_bound, r, lb).step;

    double r_stride = std::min(to_bound, to_tr);
    double r_lo, r_hi;
    if (r_stride > 0.0) {
        r_lo = (1.0 - theta) * first.step / r_stride;
        r_hi = (r_stride == to_bound) ? theta * to_bound : to_tr;
    } else {
        r_lo = 0.0;
        r_hi = -1.0;
    }
    double r_value = kInf;
    if (r_lo <= r_hi) {
        const auto q = build_quadratic_1d(J_h, g_h, r_h, diag_h, &p_h);
        const auto [t, val] = minimize_quadratic_1d(q, r_lo, r_hi);
        r_value = val;
        r_h = r_h * t + p_h;
        r = d.array() * r_h.array();
    }

    p *= theta;
    p_h *= theta;
    const double p_value = evaluate_quadratic(J_h, g_h, p_h, diag_h);

    Vec ag_h = -g_h;
    Vec ag = d.array() * ag_h.array();
    const double ag_to_tr = delta / ag_h.norm();
    const double ag_to_bound = step_size_to_bound(x, ag, lb).step;
    const double ag_max = ag_to_bound < ag_to_tr ? theta * ag_to_bound : ag_to_tr;
    const auto q = build_quadratic_1d(J_h, g_h, ag_h, diag_h);
    const auto [ag_t, ag_value] = minimize_quadratic_1d(q, 0.0, ag_max);
    ag_h *= ag_t;
    ag *= ag_t;

    if (p_value < r_value && p_value < ag_value) return {p, p_h, -p_value};
    if (r_value < p_value && r_value < ag_value) return {r, r_h, -r_value};
    return {ag, ag_h, -ag_value};
}

inline Mat forward_difference_jacobian(const std::function<Vec(const Vec&)>& fn, const Vec& x, const Vec& f,
                                       double lb, std::size_t& evaluations) {
    Mat J(f.size(), x.size());
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        Vec xh = x;
        const double h = 1e-8 * std::max(1.0, std::abs(x[j]));
        xh[j] = std::max(x[j] + h, lb);
        const double step = xh[j] - x[j];
        const Vec fh = fn(xh);
        ++evaluations;
        J.col(j) = (fh - f) / step;
    }
    return J;
}

}  // namespace trf_detail

/// Minimizes 0.5 ||f(x)||^2 over x > lower_bound. Converged means the
/// residual norm reached residual_tolerance; any other stop (step or cost
/// stagnation, iteration budget) is reported as non-converged.
inline LeastSquaresResult solve_bounded_least_squares(const LeastSquaresProblem& problem,
                                                      const SolverConfig& config = {}) {
    using namespace trf_detail;
    config.validate();
    const auto start = std::chrono::steady_clock::now();
    const std::size_t n = problem.parameters;
    const std::size_t m = problem.residuals;
    const double lb = config.lower_bound;
    if (n == 0 || m == 0) fail(ErrorKind::configuration, "least-squares problem has no parameters or residuals");

    SolverReport report;
    Vec x = config.initial_point ? *config.initial_point : Vec::Ones(n);
    if (static_cast<std::size_t>(x.size()) != n) fail(ErrorKind::configuration, "initial point has wrong dimension");
    x = make_strictly_feasible(x, lb);

    auto evaluate = [&](const Vec& at) {
        Vec f = problem.residual(at);
        ++report.evaluations;
        if (static_cast<std::size_t>(f.size()) != m) fail(ErrorKind::numerical, "residual has wrong dimension");
        return f;
    };
    auto jacobian = [&](const Vec& at, const Vec& f) {
        Mat J = problem.jacobian ? problem.jacobian(at)
                                 : forward_difference_jacobian(problem.residual, at, f, lb, report.evaluations);
        if (!J.allFinite()) fail(ErrorKind::numerical, "Jacobian has non-finite entries");
        return J;
    };

    Vec f = evaluate(x);
    if (!f.allFinite()) fail(ErrorKind::numerical, "residual function returned non-finite values at the start point");
    Mat J = jacobian(x, f);
    double cost = 0.5 * f.squaredNorm();
    Vec g = J.transpose() * f;

    Scaling sc = cl_scaling(x, g, lb);
    double delta = (x.array() / sc.v.array().sqrt()).matrix().norm();
    if (delta == 0.0 || !std::isfinite(delta)) delta = 1.0;
    double alpha = 0.0;
    const double ftol = 1e-15;
    const double xtol = config.step_tolerance;
    const std::size_t max_evaluations = 100 * config.max_iterations * std::max<std::size_t>(n, 1);

    report.message = "iteration budget exhausted";
    for (;;) {
        if (std::sqrt(2.0 * cost) <= config.residual_tolerance) {
            report.message = "residual tolerance reached";
            break;
        }
        if (report.iterations >= config.max_iterations) break;

        sc = cl_scaling(x, g, lb);
        const double g_norm = (g.array() * sc.v.array()).abs().maxCoeff();
        if (g_norm == 0.0) {
            report.message = "scaled gradient vanished";
            break;
        }
        const Vec d = sc.v.array().sqrt();
        const Vec diag_h = g.array() * sc.dv.array();
        const Vec g_h = d.array() * g.array();

        Mat J_aug(m + n, n);
        J_aug.topRows(m) = J * d.asDiagonal();
        J_aug.bottomRows(n) = diag_h.array().sqrt().matrix().asDiagonal();
        const Mat J_h = J_aug.topRows(m);
        Vec f_aug = Vec::Zero(m + n);
        f_aug.head(m) = f;

        Eigen::JacobiSVD<Mat> svd(J_aug, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const Vec s = svd.singularValues();
        const Mat V = svd.matrixV();
        const Vec uf = svd.matrixU().transpose() * f_aug;

        const double theta = std::max(0.995, 1.0 - g_norm);
        double actual_reduction = -1.0;
        bool stop = false;
        Vec x_new = x, f_new = f;
        double cost_new = cost;
        while (actual_reduction <= 0.0 && report.evaluations < max_evaluations) {
            const TrStep tr = solve_lsq_trust_region(n, m + n, uf, s, V, delta, alpha);
            alpha = tr.alpha;
            const Vec p = d.array() * tr.p.array();
            const SelectedStep step = select_step(x, J_h, diag_h, g_h, p, tr.p, d, delta, lb, theta);

            x_new = make_strictly_feasible(x + step.step, lb);
            f_new = evaluate(x_new);
            const double step_h_norm = step.step_h.norm();
            if (!f_new.allFinite()) {
                delta = 0.25 * step_h_norm;
                continue;
            }
            cost_new = 0.5 * f_new.squaredNorm();
            actual_reduction = cost - cost_new;

            double ratio;
            if (step.predicted_reduction > 0.0) ratio = actual_reduction / step.predicted_reduction;
            else if (step.predicted_reduction == actual_reduction) ratio = 1.0;
            else ratio = 0.0;
            double delta_new = delta;
            if (ratio < 0.25) delta_new = 0.25 * step_h_norm;
            else if (ratio > 0.75 && step_h_norm > 0.95 * delta) delta_new = 2.0 * delta;

            const double step_norm = (x_new - x).norm();
            const bool ftol_ok = actual_reduction < ftol * cost && ratio > 0.25;
            const bool xtol_ok = step_norm < xtol * (xtol + x.norm());
            if (ftol_ok || xtol_ok) {
                report.message = xtol_ok ? "step tolerance reached" : "cost reduction stalled";
                stop = true;
                if (delta_new > 0.0) alpha *= delta / delta_new;
                delta = delta_new;
                break;
            }
            if (delta_new > 0.0) alpha *= delta / delta_new;
            delta = delta_new;
            if (delta == 0.0) {
                report.message = "trust region collapsed";
                stop = true;
                break;
            }
        }
        if (actual_reduction > 0.0) {
            x = x_new;
            f = f_new;
            cost = cost_new;
            J = jacobian(x, f);
            g = J.transpose() * f;
        }
        ++report.iterations;
        if (stop) break;
        if (report.evaluations >= max_evaluations) {
            report.message = "evaluation budget exhausted";
            break;
        }
    }

    report.residual_norm = f.norm();
    report.converged = report.residual_norm <= config.residual_tolerance;
    report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return {x, report};
}

}  // namespace recon_net
