#pragma once

#include "recon_net/error.hpp"
#include "recon_net/fitness.hpp"
#include "recon_net/graph.hpp"
#include "recon_net/models.hpp"
#include "recon_net/trf.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

namespace recon_net {

namespace estimation_detail {

/// Fitness rescaled to unit means; fitted parameters map back by the
/// product of the two scale factors.
struct NormalizedFitness {
    std::vector<double> assets, liabilities;
    double assets_scale = 1.0;
    double liabilities_scale = 1.0;
};

inline NormalizedFitness normalize(const FitnessData& f) {
    NormalizedFitness out;
    const double n = static_cast<double>(f.size());
    out.assets_scale = std::accumulate(f.assets.begin(), f.assets.end(), 0.0) / n;
    out.liabilities_scale = std::accumulate(f.liabilities.begin(), f.liabilities.end(), 0.0) / n;
    out.assets.reserve(f.size());
    out.liabilities.reserve(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
        out.assets.push_back(f.assets[i] / out.assets_scale);
        out.liabilities.push_back(f.liabilities[i] / out.liabilities_scale);
    }
    return out;
}

/// alpha = A_i L_j and beta = A_j L_i for every unordered pair with at least
/// one nonzero product.
struct PairProducts {
    std::vector<double> alpha, beta;
};

inline PairProducts pair_products(const NormalizedFitness& f) {
    PairProducts p;
    const std::size_t n = f.assets.size();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double a = f.assets[i] * f.liabilities[j];
            const double b = f.assets[j] * f.liabilities[i];
            if (a == 0.0 && b == 0.0) continue;
            p.alpha.push_back(a);
            p.beta.push_back(b);
        }
    return p;
}

struct FgrmSums {
    double links = 0.0, both = 0.0;           // sums over ordered pairs
    double links_du = 0.0, links_dv = 0.0;
    double both_du = 0.0, both_dv = 0.0;
};

inline FgrmSums fgrm_sums(const PairProducts& pp, double u, double v, bool with_derivatives) {
    FgrmSums s;
    const double u2v2 = u * u * v * v;
    for (std::size_t k = 0; k < pp.alpha.size(); ++k) {
        const double a = pp.alpha[k], b = pp.beta[k];
        const double m1 = u * a, m2 = u * b;
        const double both = u2v2 * a * b;
        const double w = 1.0 + m1 + m2 + both;
        if (!std::isfinite(w)) {
            const DyadProbabilities d = fgrm_dyad_probs(u, v, a, 1.0, b, 1.0);
            s.links += d.p_ij() + d.p_ji();
            s.both += 2.0 * d.both;
            continue;
        }
        const double links = m1 + m2 + 2.0 * both;
        s.links += links / w;
        s.both += 2.0 * both / w;
        if (!with_derivatives) continue;
        const double w2 = w * w;
        const double both_u = 2.0 * u * v * v * a * b;
        const double both_v = 2.0 * u * u * v * a * b;
        const double w_u = a + b + both_u;
        const double links_u = a + b + 2.0 * both_u;
        s.links_du += (links_u * w - links * w_u) / w2;
        s.links_dv += (2.0 * both_v * w - links * both_v) / w2;
        s.both_du += 2.0 * (both_u * w - both * w_u) / w2;
        s.both_dv += 2.0 * (both_v * w - both * both_v) / w2;
    }
    return s;
}

inline void check_density_target(double d) {
    if (!(d > 0.0 && d < 1.0)) fail(ErrorKind::domain, "density target must lie in (0, 1)");
}

inline double relative_residual(double expected, double target) {
    return target != 0.0 ? (expected - target) / target : expected;
}

}  // namespace estimation_detail

/// Tunes z so that the expected link count equals N(N-1) d. Solved in
/// relative form from z = 1 on unit-mean fitness.
inline FittedModel fit_fdcm(const FitnessData& fitness, double d_target, const SolverConfig& config = {}) {
    using namespace estimation_detail;
    check_density_target(d_target);
    fitness.validate();
    const NormalizedFitness nf = normalize(fitness);
    const std::size_t n = fitness.size();
    std::vector<double> products;
    products.reserve(n * (n - 1));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j && nf.assets[i] * nf.liabilities[j] > 0.0) products.push_back(nf.assets[i] * nf.liabilities[j]);
    const double target = static_cast<double>(n) * static_cast<double>(n - 1) * d_target;

    LeastSquaresProblem problem;
    problem.parameters = 1;
    problem.residuals = 1;
    problem.residual = [&](const Eigen::VectorXd& x) {
        double s = 0.0;
        for (double a : products) s += detail::logistic_of_product(x[0], a).p;
        return Eigen::VectorXd::Constant(1, s / target - 1.0);
    };
    problem.jacobian = [&](const Eigen::VectorXd& x) {
        double ds = 0.0;
        for (double a : products) {
            const double den = 1.0 + x[0] * a;
            ds += a / (den * den);
        }
        return Eigen::MatrixXd::Constant(1, 1, ds / target);
    };
    const LeastSquaresResult res = solve_bounded_least_squares(problem, config);
    if (!res.report.converged) throw NonConvergenceError("F-DCM fit did not converge", res.report);
    FittedModel model = FittedModel::fdcm(fitness, res.x[0] / (nf.assets_scale * nf.liabilities_scale));
    model.set_report({res.report.iterations, res.report.residual_norm, true, res.report.seconds});
    return model;
}

/// Tunes (u, v) so the expected density is d and the ratio of expected
/// reciprocated links to expected links is r.
inline FittedModel fit_fgrm(const FitnessData& fitness, double d_target, double r_target,
                            const SolverConfig& config = {}) {
    using namespace estimation_detail;
    check_density_target(d_target);
    if (!(r_target >= 0.0 && r_target < 1.0)) fail(ErrorKind::domain, "reciprocity target must lie in [0, 1)");
    fitness.validate();
    const NormalizedFitness nf = normalize(fitness);
    const PairProducts pp = pair_products(nf);
    const std::size_t n = fitness.size();
    const double target_links = static_cast<double>(n) * static_cast<double>(n - 1) * d_target;

    LeastSquaresProblem problem;
    problem.parameters = 2;
    problem.residuals = 2;
    problem.residual = [&](const Eigen::VectorXd& x) {
        const FgrmSums s = fgrm_sums(pp, x[0], x[1], false);
        Eigen::VectorXd f(2);
        f[0] = s.links / target_links - 1.0;
        f[1] = relative_residual(s.both / s.links, r_target);
        return f;
    };
    problem.jacobian = [&](const Eigen::VectorXd& x) {
        const FgrmSums s = fgrm_sums(pp, x[0], x[1], true);
        Eigen::MatrixXd J(2, 2);
        J(0, 0) = s.links_du / target_links;
        J(0, 1) = s.links_dv / target_links;
        const double scale = r_target != 0.0 ? r_target : 1.0;
        const double l2 = s.links * s.links;
        J(1, 0) = (s.both_du * s.links - s.both * s.links_du) / (l2 * scale);
        J(1, 1) = (s.both_dv * s.links - s.both * s.links_dv) / (l2 * scale);
        return J;
    };
    const LeastSquaresResult res = solve_bounded_least_squares(problem, config);
    if (!res.report.converged) throw NonConvergenceError("F-GRM fit did not converge", res.report);
    FittedModel model =
        FittedModel::fgrm(fitness, res.x[0] / (nf.assets_scale * nf.liabilities_scale), res.x[1]);
    model.set_report({res.report.iterations, res.report.residual_norm, true, res.report.seconds});
    return model;
}

/// Degree-sequence targets. DCM uses out/in; GRM adds the ordered count of
/// reciprocated links; RCM uses the non-reciprocated out/in and reciprocated
/// degree sequences. Targets may be non-integer expectations.
struct DegreeConstraints {
    std::vector<double> out_degree, in_degree;
    double reciprocated_links = 0.0;
    std::vector<double> nonrecip_out, nonrecip_in, recip_degree;
};

inline DegreeConstraints constraints_from_network(const DirectedNetwork& net) {
    const std::size_t n = net.size();
    DegreeConstraints c;
    c.out_degree.assign(n, 0.0);
    c.in_degree.assign(n, 0.0);
    c.nonrecip_out.assign(n, 0.0);
    c.nonrecip_in.assign(n, 0.0);
    c.recip_degree.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j || !net.has_link(i, j)) continue;
            c.out_degree[i] += 1.0;
            c.in_degree[j] += 1.0;
            if (net.has_link(j, i)) {
                c.reciprocated_links += 1.0;
                c.recip_degree[i] += 1.0;
            } else {
                c.nonrecip_out[i] += 1.0;
                c.nonrecip_in[j] += 1.0;
            }
        }
    return c;
}

namespace estimation_detail {

inline void check_sequence(const std::vector<double>& k, std::size_t n, const char* name) {
    if (k.size() != n) fail(ErrorKind::validation, std::string(name) + " has the wrong length");
    for (double v : k)
        if (!(v >= 0.0) || v > static_cast<double>(n - 1))
            fail(ErrorKind::validation, std::string(name) + " entries must lie in [0, N-1]");
}

inline void check_handshake(const std::vector<double>& a, const std::vector<double>& b, const char* what) {
    const double sa = std::accumulate(a.begin(), a.end(), 0.0);
    const double sb = std::accumulate(b.begin(), b.end(), 0.0);
    if (std::abs(sa - sb) > 1e-9 * std::max(1.0, std::max(sa, sb)))
        fail(ErrorKind::validation, std::string(what) + ": sums differ (" + std::to_string(sa) + " vs " +
                                        std::to_string(sb) + ")");
}

inline FittedModel model_from_vector(ModelKind kind, const Eigen::VectorXd& x, std::size_t n) {
    auto slice = [&](std::size_t k) {
        return std::vector<double>(x.data() + k * n, x.data() + (k + 1) * n);
    };
    switch (kind) {
        case ModelKind::DCM: return FittedModel::dcm(slice(0), slice(1));
        case ModelKind::GRM: return FittedModel::grm(slice(0), slice(1), x[static_cast<Eigen::Index>(2 * n)]);
        case ModelKind::RCM: return FittedModel::rcm(slice(0), slice(1), slice(2));
        default: fail(ErrorKind::domain, "not a degree model");
    }
}

}  // namespace estimation_detail

/// Fits DCM, GRM or RCM multipliers to degree-sequence targets.
inline FittedModel fit_degree_model(ModelKind kind, const DegreeConstraints& c, const SolverConfig& config = {}) {
    using namespace estimation_detail;
    std::size_t n = 0;
    std::size_t params = 0;
    std::vector<double> targets;
    switch (kind) {
        case ModelKind::DCM:
        case ModelKind::GRM:
            n = c.out_degree.size();
            if (n < 2) fail(ErrorKind::validation, "degree sequences need at least two nodes");
            check_sequence(c.out_degree, n, "out-degree");
            check_sequence(c.in_degree, n, "in-degree");
            check_handshake(c.out_degree, c.in_degree, "out/in degree");
            targets = c.out_degree;
            targets.insert(targets.end(), c.in_degree.begin(), c.in_degree.end());
            params = 2 * n;
            if (kind == ModelKind::GRM) {
                const double total = std::accumulate(c.out_degree.begin(), c.out_degree.end(), 0.0);
                if (!(c.reciprocated_links >= 0.0) || c.reciprocated_links > total)
                    fail(ErrorKind::validation, "reciprocated link target must lie in [0, L]");
                targets.push_back(c.reciprocated_links);
                params += 1;
            }
            break;
        case ModelKind::RCM:
            n = c.nonrecip_out.size();
            if (n < 2) fail(ErrorKind::validation, "degree sequences need at least two nodes");
            check_sequence(c.nonrecip_out, n, "non-reciprocated out-degree");
            check_sequence(c.nonrecip_in, n, "non-reciprocated in-degree");
            check_sequence(c.recip_degree, n, "reciprocated degree");
            check_handshake(c.nonrecip_out, c.nonrecip_in, "non-reciprocated out/in degree");
            for (std::size_t i = 0; i < n; ++i)
                if (c.nonrecip_out[i] + c.recip_degree[i] > static_cast<double>(n - 1) ||
                    c.nonrecip_in[i] + c.recip_degree[i] > static_cast<double>(n - 1))
                    fail(ErrorKind::validation, "node " + std::to_string(i) + " exceeds N-1 total degree");
            targets = c.nonrecip_out;
            targets.insert(targets.end(), c.nonrecip_in.begin(), c.nonrecip_in.end());
            targets.insert(targets.end(), c.recip_degree.begin(), c.recip_degree.end());
            params = 3 * n;
            break;
        default: fail(ErrorKind::domain, "fit_degree_model handles DCM, GRM and RCM only");
    }

    auto expectations = [kind, n](const Eigen::VectorXd& x) {
        const FittedModel model = model_from_vector(kind, x, n);
        std::vector<double> e(kind == ModelKind::GRM ? 2 * n + 1 : (kind == ModelKind::RCM ? 3 * n : 2 * n), 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) {
                const DyadProbabilities d = model.dyad(i, j);
                if (kind == ModelKind::RCM) {
                    e[i] += d.ij_only;
                    e[j] += d.ji_only;
                    e[n + j] += d.ij_only;
                    e[n + i] += d.ji_only;
                    e[2 * n + i] += d.both;
                    e[2 * n + j] += d.both;
                } else {
                    e[i] += d.p_ij();
                    e[j] += d.p_ji();
                    e[n + j] += d.p_ij();
                    e[n + i] += d.p_ji();
                    if (kind == ModelKind::GRM) e[2 * n] += 2.0 * d.both;
                }
            }
        return e;
    };

    LeastSquaresProblem problem;
    problem.parameters = params;
    problem.residuals = targets.size();
    problem.residual = [&](const Eigen::VectorXd& x) {
        const std::vector<double> e = expectations(x);
        Eigen::VectorXd f(targets.size());
        for (std::size_t k = 0; k < targets.size(); ++k) f[k] = relative_residual(e[k], targets[k]);
        return f;
    };
    const LeastSquaresResult res = solve_bounded_least_squares(problem, config);
    if (!res.report.converged)
        throw NonConvergenceError(std::string(to_string(kind)) + " fit did not converge", res.report);
    FittedModel model = model_from_vector(kind, res.x, n);
    model.set_report({res.report.iterations, res.report.residual_norm, true, res.report.seconds});
    return model;
}

}  // namespace recon_net
