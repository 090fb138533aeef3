#pragma once

#include "recon_net/error.hpp"
#include "recon_net/graph.hpp"
#include "recon_net/models.hpp"
#include "recon_net/parallel.hpp"
#include "recon_net/random.hpp"
#include "recon_net/spectral.hpp"
#include "recon_net/stats.hpp"

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

namespace recon_net {

struct EnsembleConfig {
    std::size_t samples = 1000;
    std::uint64_t master_seed = 0;
};

struct EnsembleSummary {
    std::size_t samples = 0;
    std::vector<double> density;
    std::vector<double> reciprocity;  // NaN for samples without links
    std::vector<double> lambda_max;
    std::vector<std::size_t> links;
    std::vector<std::size_t> reciprocated;

    double mean_density = 0.0, std_density = 0.0;
    double mean_reciprocity = 0.0, std_reciprocity = 0.0;
    std::size_t reciprocity_defined = 0;
    double pooled_reciprocity = std::nan("");  // sum of L^<-> over sum of L
    double mean_lambda_max = 0.0, std_lambda_max = 0.0;
};

/// Draws one network: each unordered pair independently takes one of
/// (none, i->j, j->i, both), inverse-CDF on one uniform in that order.
inline DirectedNetwork sample_network(const FittedModel& model, std::uint64_t seed) {
    const std::size_t n = model.size();
    DirectedNetwork net(n);
    if (model.fitness().labels.size() == n) net.set_labels(model.fitness().labels);
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const DyadProbabilities d = model.dyad(i, j);
            const double u = rng.uniform();
            if (u < d.none) continue;
            if (u < d.none + d.ij_only) net.set_link(i, j);
            else if (u < d.none + d.ij_only + d.ji_only) net.set_link(j, i);
            else {
                net.set_link(i, j);
                net.set_link(j, i);
            }
        }
    return net;
}

struct ExpectedMetrics {
    double links = 0.0;         // E[L]
    double reciprocated = 0.0;  // E[L^<->], ordered
    double density = 0.0;
    double reciprocity = 0.0;   // E[L^<->] / E[L]
};

inline ExpectedMetrics expected_metrics(const FittedModel& model) {
    const std::size_t n = model.size();
    ExpectedMetrics e;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const DyadProbabilities d = model.dyad(i, j);
            e.links += d.p_ij() + d.p_ji();
            e.reciprocated += 2.0 * d.both;
        }
    e.density = e.links / (static_cast<double>(n) * static_cast<double>(n - 1));
    e.reciprocity = e.links > 0.0 ? e.reciprocated / e.links : std::nan("");
    return e;
}

/// Fills the aggregate fields from the per-sample vectors.
inline void finalize_summary(EnsembleSummary& s) {
    s.samples = s.density.size();
    s.mean_density = mean(s.density);
    s.std_density = sample_stddev(s.density);
    std::vector<double> rec;
    for (double r : s.reciprocity)
        if (!std::isnan(r)) rec.push_back(r);
    s.reciprocity_defined = rec.size();
    s.mean_reciprocity = rec.empty() ? std::nan("") : mean(rec);
    s.std_reciprocity = rec.empty() ? std::nan("") : sample_stddev(rec);
    const double total = static_cast<double>(std::accumulate(s.links.begin(), s.links.end(), std::size_t{0}));
    const double total_r =
        static_cast<double>(std::accumulate(s.reciprocated.begin(), s.reciprocated.end(), std::size_t{0}));
    s.pooled_reciprocity = total > 0.0 ? total_r / total : std::nan("");
    if (!s.lambda_max.empty()) {
        s.mean_lambda_max = mean(s.lambda_max);
        s.std_lambda_max = sample_stddev(s.lambda_max);
    }
}

namespace ensemble_detail {

inline void record(EnsembleSummary& s, std::size_t k, const DirectedNetwork& net, bool with_spectra) {
    const StructuralMetrics m = degrees_strengths(net);
    s.density[k] = m.density;
    s.reciprocity[k] = m.reciprocity_defined ? m.reciprocity : std::nan("");
    s.links[k] = m.links;
    s.reciprocated[k] = m.reciprocated;
    if (with_spectra) s.lambda_max[k] = leading_eigenvalue(net);
}

inline EnsembleSummary allocate(std::size_t m, bool with_spectra) {
    if (m == 0) fail(ErrorKind::configuration, "ensemble needs at least one sample");
    EnsembleSummary s;
    s.density.assign(m, 0.0);
    s.reciprocity.assign(m, 0.0);
    s.links.assign(m, 0);
    s.reciprocated.assign(m, 0);
    if (with_spectra) s.lambda_max.assign(m, 0.0);
    return s;
}

}  // namespace ensemble_detail

/// Samples M networks (sample k seeded by sub_seed(master, k)) and records
/// density, reciprocity and, optionally, the leading eigenvalue of each.
inline EnsembleSummary generate_ensemble(const FittedModel& model, const EnsembleConfig& config,
                                         unsigned threads = 1, bool with_spectra = true) {
    EnsembleSummary s = ensemble_detail::allocate(config.samples, with_spectra);
    parallel_for(config.samples, threads, [&](std::size_t k) {
        const DirectedNetwork net = sample_network(model, sub_seed(config.master_seed, k));
        ensemble_detail::record(s, k, net, with_spectra);
    });
    finalize_summary(s);
    return s;
}

inline std::vector<DirectedNetwork> sample_ensemble(const FittedModel& model, const EnsembleConfig& config,
                                                    unsigned threads = 1) {
    if (config.samples == 0) fail(ErrorKind::configuration, "ensemble needs at least one sample");
    std::vector<DirectedNetwork> out(config.samples);
    parallel_for(config.samples, threads,
                 [&](std::size_t k) { out[k] = sample_network(model, sub_seed(config.master_seed, k)); });
    return out;
}

inline EnsembleSummary summarize_ensemble(std::span<const DirectedNetwork> nets, unsigned threads = 1,
                                          bool with_spectra = true) {
    EnsembleSummary s = ensemble_detail::allocate(nets.size(), with_spectra);
    parallel_for(nets.size(), threads, [&](std::size_t k) { ensemble_detail::record(s, k, nets[k], with_spectra); });
    finalize_summary(s);
    return s;
}

/// (lambda_emp - mean) / sample standard deviation of the ensemble values.
inline double z_score(double lambda_emp, std::span<const double> ensemble) {
    if (ensemble.size() < 2) fail(ErrorKind::degenerate, "z-score needs at least two ensemble values");
    const double sd = sample_stddev(ensemble);
    if (!(sd > 0.0)) fail(ErrorKind::degenerate, "ensemble values have zero spread");
    return (lambda_emp - mean(ensemble)) / sd;
}

}  // namespace recon_net
