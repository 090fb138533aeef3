#pragma once

#include "recon_net/error.hpp"
#include "recon_net/fitness.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace recon_net {

enum class ModelKind { DCM, FDCM, GRM, RCM, FGRM };

inline std::string_view to_string(ModelKind k) noexcept {
    switch (k) {
        case ModelKind::DCM: return "DCM";
        case ModelKind::FDCM: return "F-DCM";
        case ModelKind::GRM: return "GRM";
        case ModelKind::RCM: return "RCM";
        case ModelKind::FGRM: return "F-GRM";
    }
    return "?";
}

/// Accepts "F-DCM", "fdcm", "FDCM", ... (case and dash insensitive).
inline ModelKind parse_model_kind(std::string_view s) {
    std::string norm;
    for (char c : s)
        if (c != '-' && c != '_') norm.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (norm == "dcm") return ModelKind::DCM;
    if (norm == "fdcm") return ModelKind::FDCM;
    if (norm == "grm") return ModelKind::GRM;
    if (norm == "rcm") return ModelKind::RCM;
    if (norm == "fgrm") return ModelKind::FGRM;
    fail(ErrorKind::configuration, "unknown model kind '" + std::string(s) + "'");
}

/// Outcome distribution of one dyad {i, j}: i->j only, j->i only, both, none.
struct DyadProbabilities {
    double ij_only = 0.0;
    double ji_only = 0.0;
    double both = 0.0;
    double none = 1.0;

    double p_ij() const noexcept { return ij_only + both; }
    double p_ji() const noexcept { return ji_only + both; }
    DyadProbabilities swapped() const noexcept { return {ji_only, ij_only, both, none}; }
};

namespace detail {

inline constexpr double kOverflowGuard = 1e300;

inline void require_nonnegative(double x, const char* name) {
    if (!(x >= 0.0) || !std::isfinite(x))
        fail(ErrorKind::domain, std::string(name) + " must be finite and nonnegative");
}

inline double safe_log(double x) {
    return x > 0.0 ? std::log(x) : -std::numeric_limits<double>::infinity();
}

/// Normalizes weights (1, t_ij, t_ji, t_both) by their sum w.
inline DyadProbabilities from_terms(double t_ij, double t_ji, double t_both) {
    const double w = 1.0 + t_ij + t_ji + t_both;
    return {t_ij / w, t_ji / w, t_both / w, 1.0 / w};
}

/// Same as from_terms, taking log-terms; divides through by the largest term.
inline DyadProbabilities from_log_terms(double l_ij, double l_ji, double l_both) {
    const double m = std::max({0.0, l_ij, l_ji, l_both});
    const double e0 = std::exp(-m), e1 = std::exp(l_ij - m), e2 = std::exp(l_ji - m),
                 e3 = std::exp(l_both - m);
    const double w = e0 + e1 + e2 + e3;
    return {e1 / w, e2 / w, e3 / w, e0 / w};
}

inline bool needs_guard(double a, double b, double c) {
    return !(a <= kOverflowGuard && b <= kOverflowGuard && c <= kOverflowGuard);
}

/// x / (1 + x) and 1 / (1 + x) for x = product of nonnegative factors.
struct Bernoulli {
    double p;
    double q;
};

inline Bernoulli logistic_of_product(double a, double b, double c = 1.0) {
    const double x = a * b * c;
    if (x <= kOverflowGuard) return {x / (1.0 + x), 1.0 / (1.0 + x)};
    const double inv = (1.0 / a) / b / c;
    return {1.0 / (1.0 + inv), inv / (1.0 + inv)};
}

inline DyadProbabilities independent(Bernoulli ij, Bernoulli ji) {
    return {ij.p * ji.q, ji.p * ij.q, ij.p * ji.p, ij.q * ji.q};
}

}  // namespace detail

inline double dcm_prob(double x_i, double y_j) {
    detail::require_nonnegative(x_i, "x_i");
    detail::require_nonnegative(y_j, "y_j");
    return detail::logistic_of_product(x_i, y_j).p;
}

inline double fdcm_prob(double z, double assets_i, double liabilities_j) {
    detail::require_nonnegative(z, "z");
    detail::require_nonnegative(assets_i, "A_i");
    detail::require_nonnegative(liabilities_j, "L_j");
    return detail::logistic_of_product(z, assets_i, liabilities_j).p;
}

inline DyadProbabilities fdcm_dyad_probs(double z, const FitnessData& f, std::size_t i, std::size_t j) {
    if (i == j) fail(ErrorKind::domain, "dyad needs two distinct nodes");
    if (i >= f.size() || j >= f.size()) fail(ErrorKind::domain, "node index out of range");
    detail::require_nonnegative(z, "z");
    return detail::independent(detail::logistic_of_product(z, f.assets[i], f.liabilities[j]),
                               detail::logistic_of_product(z, f.assets[j], f.liabilities[i]));
}

inline DyadProbabilities dcm_dyad_probs(double x_i, double y_i, double x_j, double y_j) {
    for (double v : {x_i, y_i, x_j, y_j}) detail::require_nonnegative(v, "DCM multiplier");
    return detail::independent(detail::logistic_of_product(x_i, y_j), detail::logistic_of_product(x_j, y_i));
}

inline DyadProbabilities grm_dyad_probs(double x_i, double y_i, double x_j, double y_j, double z) {
    for (double v : {x_i, y_i, x_j, y_j, z}) detail::require_nonnegative(v, "GRM multiplier");
    const double t_ij = x_i * y_j, t_ji = x_j * y_i;
    const double t_both = z * z * t_ij * t_ji;
    if (!detail::needs_guard(t_ij, t_ji, t_both)) return detail::from_terms(t_ij, t_ji, t_both);
    using detail::safe_log;
    const double l_ij = safe_log(x_i) + safe_log(y_j), l_ji = safe_log(x_j) + safe_log(y_i);
    return detail::from_log_terms(l_ij, l_ji, 2.0 * safe_log(z) + l_ij + l_ji);
}

inline DyadProbabilities rcm_dyad_probs(double x_i, double y_i, double z_i, double x_j, double y_j, double z_j) {
    for (double v : {x_i, y_i, z_i, x_j, y_j, z_j}) detail::require_nonnegative(v, "RCM multiplier");
    const double t_ij = x_i * y_j, t_ji = x_j * y_i, t_both = z_i * z_j;
    if (!detail::needs_guard(t_ij, t_ji, t_both)) return detail::from_terms(t_ij, t_ji, t_both);
    using detail::safe_log;
    return detail::from_log_terms(safe_log(x_i) + safe_log(y_j), safe_log(x_j) + safe_log(y_i),
                                  safe_log(z_i) + safe_log(z_j));
}

inline DyadProbabilities fgrm_dyad_probs(double u, double v, double assets_i, double liabilities_i,
                                         double assets_j, double liabilities_j) {
    for (double x : {u, v, assets_i, liabilities_i, assets_j, liabilities_j})
        detail::require_nonnegative(x, "F-GRM input");
    const double t_ij = u * assets_i * liabilities_j;
    const double t_ji = u * assets_j * liabilities_i;
    const double uv = u * v;
    const double t_both = uv * uv * (assets_i * liabilities_j) * (assets_j * liabilities_i);
    if (!detail::needs_guard(t_ij, t_ji, t_both)) return detail::from_terms(t_ij, t_ji, t_both);
    using detail::safe_log;
    const double l_ij = safe_log(u) + safe_log(assets_i) + safe_log(liabilities_j);
    const double l_ji = safe_log(u) + safe_log(assets_j) + safe_log(liabilities_i);
    return detail::from_log_terms(l_ij, l_ji, 2.0 * safe_log(v) + l_ij + l_ji);
}

struct FdcmParams {
    double z = 1.0;
};
struct FgrmParams {
    double u = 1.0;
    double v = 1.0;
};
struct DcmParams {
    std::vector<double> x, y;
};
struct GrmParams {
    std::vector<double> x, y;
    double z = 1.0;
};
struct RcmParams {
    std::vector<double> x, y, z;
};

using ModelParams = std::variant<FdcmParams, FgrmParams, DcmParams, GrmParams, RcmParams>;

struct FitReport {
    std::size_t iterations = 0;
    double residual_norm = 0.0;
    bool converged = true;
    double seconds = 0.0;
};

/// A model family together with its parameters (and fitness for the
/// fitness-induced families). Answers dyad queries for any node pair.
class FittedModel {
public:
    static FittedModel fdcm(FitnessData fitness, double z) {
        return FittedModel(ModelKind::FDCM, std::move(fitness), FdcmParams{z});
    }
    static FittedModel fgrm(FitnessData fitness, double u, double v) {
        return FittedModel(ModelKind::FGRM, std::move(fitness), FgrmParams{u, v});
    }
    static FittedModel dcm(std::vector<double> x, std::vector<double> y) {
        return FittedModel(ModelKind::DCM, {}, DcmParams{std::move(x), std::move(y)});
    }
    static FittedModel grm(std::vector<double> x, std::vector<double> y, double z) {
        return FittedModel(ModelKind::GRM, {}, GrmParams{std::move(x), std::move(y), z});
    }
    static FittedModel rcm(std::vector<double> x, std::vector<double> y, std::vector<double> z) {
        return FittedModel(ModelKind::RCM, {}, RcmParams{std::move(x), std::move(y), std::move(z)});
    }

    ModelKind kind() const noexcept { return kind_; }
    std::size_t size() const noexcept { return n_; }
    const FitnessData& fitness() const noexcept { return fitness_; }
    const ModelParams& params() const noexcept { return params_; }
    template <class P>
    const P& params_as() const {
        return std::get<P>(params_);
    }

    const FitReport& report() const noexcept { return report_; }
    void set_report(FitReport r) { report_ = r; }

    DyadProbabilities dyad(std::size_t i, std::size_t j) const {
        if (i == j) fail(ErrorKind::domain, "dyad needs two distinct nodes");
        if (i >= n_ || j >= n_) fail(ErrorKind::domain, "node index out of range");
        switch (kind_) {
            case ModelKind::FDCM: return fdcm_dyad_probs(std::get<FdcmParams>(params_).z, fitness_, i, j);
            case ModelKind::FGRM: {
                const auto& p = std::get<FgrmParams>(params_);
                return fgrm_dyad_probs(p.u, p.v, fitness_.assets[i], fitness_.liabilities[i],
                                       fitness_.assets[j], fitness_.liabilities[j]);
            }
            case ModelKind::DCM: {
                const auto& p = std::get<DcmParams>(params_);
                return dcm_dyad_probs(p.x[i], p.y[i], p.x[j], p.y[j]);
            }
            case ModelKind::GRM: {
                const auto& p = std::get<GrmParams>(params_);
                return grm_dyad_probs(p.x[i], p.y[i], p.x[j], p.y[j], p.z);
            }
            case ModelKind::RCM: {
                const auto& p = std::get<RcmParams>(params_);
                return rcm_dyad_probs(p.x[i], p.y[i], p.z[i], p.x[j], p.y[j], p.z[j]);
            }
        }
        fail(ErrorKind::domain, "unknown model kind");
    }

    /// Unconditional probability of the link i -> j.
    double link_probability(std::size_t i, std::size_t j) const {
        if (kind_ == ModelKind::FDCM) {
            if (i == j) fail(ErrorKind::domain, "dyad needs two distinct nodes");
            return fdcm_prob(std::get<FdcmParams>(params_).z, fitness_.assets.at(i), fitness_.liabilities.at(j));
        }
        return dyad(i, j).p_ij();
    }

private:
    FittedModel(ModelKind kind, FitnessData fitness, ModelParams params)
        : kind_(kind), fitness_(std::move(fitness)), params_(std::move(params)) {
        auto check = [](double v, const char* what) {
            if (!(v >= 0.0) || !std::isfinite(v))
                fail(ErrorKind::domain, std::string(what) + " must be finite and nonnegative");
        };
        auto check_all = [&](const std::vector<double>& v, const char* what) {
            for (double x : v) check(x, what);
        };
        switch (kind_) {
            case ModelKind::FDCM:
            case ModelKind::FGRM:
                fitness_.validate();
                n_ = fitness_.size();
                if (kind_ == ModelKind::FDCM) check(std::get<FdcmParams>(params_).z, "z");
                else {
                    check(std::get<FgrmParams>(params_).u, "u");
                    check(std::get<FgrmParams>(params_).v, "v");
                }
                break;
            case ModelKind::DCM: {
                const auto& p = std::get<DcmParams>(params_);
                if (p.x.size() != p.y.size()) fail(ErrorKind::domain, "DCM x and y differ in length");
                check_all(p.x, "x");
                check_all(p.y, "y");
                n_ = p.x.size();
                break;
            }
            case ModelKind::GRM: {
                const auto& p = std::get<GrmParams>(params_);
                if (p.x.size() != p.y.size()) fail(ErrorKind::domain, "GRM x and y differ in length");
                check_all(p.x, "x");
                check_all(p.y, "y");
                check(p.z, "z");
                n_ = p.x.size();
                break;
            }
            case ModelKind::RCM: {
                const auto& p = std::get<RcmParams>(params_);
                if (p.x.size() != p.y.size() || p.x.size() != p.z.size())
                    fail(ErrorKind::domain, "RCM x, y, z differ in length");
                check_all(p.x, "x");
                check_all(p.y, "y");
                check_all(p.z, "z");
                n_ = p.x.size();
                break;
            }
        }
        if (n_ < 2) fail(ErrorKind::domain, "model needs at least two nodes");
    }

    ModelKind kind_;
    FitnessData fitness_;
    ModelParams params_;
    FitReport report_;
    std::size_t n_ = 0;
};

}  // namespace recon_net
