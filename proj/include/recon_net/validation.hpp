#pragma once

#include "recon_net/ensemble.hpp"
#include "recon_net/error.hpp"
#include "recon_net/estimation.hpp"
#include "recon_net/graph.hpp"
#include "recon_net/ingest.hpp"
#include "recon_net/models.hpp"
#include "recon_net/parallel.hpp"
#include "recon_net/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace recon_net {

/// Normalized reciprocity gap (r_emp - r_model) / (1 - r_model).
inline double rho(double r_emp, double r_model) {
    if (!(r_emp >= 0.0 && r_emp <= 1.0)) fail(ErrorKind::domain, "empirical reciprocity must lie in [0, 1]");
    if (!(r_model >= 0.0 && r_model <= 1.0)) fail(ErrorKind::domain, "model reciprocity must lie in [0, 1)");
    if (r_model == 1.0) fail(ErrorKind::domain, "rho is singular at model reciprocity 1");
    return (r_emp - r_model) / (1.0 - r_model);
}

struct ScanOptions {
    std::optional<FitnessData> fitness;  // external; default is the window's own strengths
    SolverConfig solver;
    unsigned threads = 1;
};

struct WindowResult {
    enum class Status { ok, empty, failed };
    std::size_t delta_t = 0;
    std::size_t window = 0;
    Date first_day, last_day;
    Status status = Status::ok;
    std::size_t links = 0, reciprocated = 0;
    double density = std::nan(""), reciprocity = std::nan("");
    double z = std::nan(""), r_fdcm = std::nan(""), rho = std::nan("");
    std::string message;
};

inline const char* to_string(WindowResult::Status s) {
    switch (s) {
        case WindowResult::Status::ok: return "ok";
        case WindowResult::Status::empty: return "empty";
        case WindowResult::Status::failed: return "failed";
    }
    return "?";
}

/// Window averages at one aggregation period.
struct RhoScanRow {
    std::size_t delta_t = 0;
    std::size_t windows = 0;        // complete windows in the year
    std::size_t used = 0;           // windows entering the averages
    std::size_t skipped_empty = 0;  // windows with no links
    std::size_t failed = 0;         // windows whose fit or evaluation failed
    bool missing = true;
    double density = std::nan(""), reciprocity = std::nan(""), r_fdcm = std::nan("");
    double rho = std::nan(""), rho_stderr = std::nan("");
};

struct RhoExtrema {
    std::size_t t_min = 0, t_max = 0;
    double rho_min = 0.0, rho_max = 0.0;
    std::optional<std::size_t> t_0;
};

struct RhoScanResult {
    int year = 0;
    std::size_t nodes = 0;
    std::size_t trading_days = 0;
    std::vector<RhoScanRow> rows;
    std::vector<WindowResult> windows;
    std::optional<RhoExtrema> extrema;
};

/// argmin / argmax of rho over the non-missing points and the largest sign
/// change. A crossing between consecutive points is located by linear
/// interpolation and snapped to the nearer grid point; a point with rho
/// exactly zero is itself a crossing.
inline std::optional<RhoExtrema> extract_extrema(std::span<const std::size_t> deltas, std::span<const double> rhos) {
    if (deltas.size() != rhos.size()) fail(ErrorKind::validation, "delta and rho sequences differ in length");
    std::vector<std::size_t> idx;
    for (std::size_t k = 0; k < rhos.size(); ++k)
        if (std::isfinite(rhos[k])) idx.push_back(k);
    if (idx.empty()) return std::nullopt;
    RhoExtrema e;
    e.t_min = e.t_max = deltas[idx[0]];
    e.rho_min = e.rho_max = rhos[idx[0]];
    for (std::size_t k : idx) {
        if (rhos[k] < e.rho_min) {
            e.rho_min = rhos[k];
            e.t_min = deltas[k];
        }
        if (rhos[k] > e.rho_max) {
            e.rho_max = rhos[k];
            e.t_max = deltas[k];
        }
    }
    for (std::size_t pos = 0; pos < idx.size(); ++pos) {
        const std::size_t b = idx[pos];
        if (rhos[b] == 0.0) e.t_0 = deltas[b];
        if (pos == 0) continue;
        const std::size_t a = idx[pos - 1];
        const double ra = rhos[a], rb = rhos[b];
        if ((ra < 0.0 && rb > 0.0) || (ra > 0.0 && rb < 0.0)) {
            const double da = static_cast<double>(deltas[a]), db = static_cast<double>(deltas[b]);
            const double cross = da + (db - da) * ra / (ra - rb);
            e.t_0 = cross - da <= db - cross ? deltas[a] : deltas[b];
        }
    }
    return e;
}

namespace detail {

/// Records of one year bucketed by position in the trading calendar.
struct YearIndex {
    std::vector<Date> calendar;
    std::vector<std::string> labels;
    std::vector<std::vector<std::size_t>> by_day;  // record indices
};

inline YearIndex index_year(const std::vector<TransactionRecord>& records, int year) {
    YearIndex y;
    y.calendar = trading_calendar(records, year);
    y.labels = active_nodes(records, year);
    y.by_day.resize(y.calendar.size());
    for (std::size_t k = 0; k < records.size(); ++k) {
        if (records[k].date.year != year) continue;
        const auto it = std::lower_bound(y.calendar.begin(), y.calendar.end(), records[k].date);
        y.by_day[static_cast<std::size_t>(it - y.calendar.begin())].push_back(k);
    }
    return y;
}

}  // namespace detail

/// For each aggregation period, fits F-DCM to the density of every
/// complete window and averages rho over the windows that have links.
inline RhoScanResult scan_aggregations(const std::vector<TransactionRecord>& records, int year,
                                       const std::vector<std::size_t>& deltas, const ScanOptions& options = {}) {
    if (deltas.empty()) fail(ErrorKind::configuration, "empty aggregation period list");
    for (std::size_t k = 0; k < deltas.size(); ++k) {
        if (deltas[k] == 0) fail(ErrorKind::configuration, "aggregation periods must be >= 1");
        if (k > 0 && deltas[k] <= deltas[k - 1])
            fail(ErrorKind::configuration, "aggregation periods must be strictly increasing");
    }
    options.solver.validate();
    const detail::YearIndex y = detail::index_year(records, year);
    if (y.calendar.empty()) fail(ErrorKind::validation, "no transactions in year " + std::to_string(year));
    if (y.labels.size() < 2) fail(ErrorKind::validation, "fewer than two active banks in year " + std::to_string(year));
    std::optional<FitnessData> external;
    if (options.fitness) external = align_fitness(*options.fitness, y.labels);

    std::unordered_map<std::string, std::size_t> node;
    for (std::size_t i = 0; i < y.labels.size(); ++i) node.emplace(y.labels[i], i);

    RhoScanResult out;
    out.year = year;
    out.nodes = y.labels.size();
    out.trading_days = y.calendar.size();
    for (std::size_t delta : deltas)
        for (std::size_t w = 0; w + 1 <= y.calendar.size() / delta; ++w) {
            WindowResult cell;
            cell.delta_t = delta;
            cell.window = w;
            cell.first_day = y.calendar[w * delta];
            cell.last_day = y.calendar[w * delta + delta - 1];
            out.windows.push_back(cell);
        }

    parallel_for(out.windows.size(), options.threads, [&](std::size_t c) {
        WindowResult& cell = out.windows[c];
        DirectedNetwork net(y.labels, true);
        for (std::size_t day = cell.window * cell.delta_t; day < (cell.window + 1) * cell.delta_t; ++day)
            for (std::size_t k : y.by_day[day]) {
                const TransactionRecord& r = records[k];
                net.add_weight(node.at(r.lender), node.at(r.borrower), r.amount);
            }
        cell.links = net.link_count();
        cell.reciprocated = reciprocated_link_count(net);
        cell.density = density(net);
        if (cell.links == 0) {
            cell.status = WindowResult::Status::empty;
            cell.message = "no links";
            return;
        }
        cell.reciprocity = static_cast<double>(cell.reciprocated) / static_cast<double>(cell.links);
        try {
            const FitnessData fitness = external ? *external : fitness_from_strengths(net);
            const FittedModel fdcm = fit_fdcm(fitness, cell.density, options.solver);
            cell.z = fdcm.params_as<FdcmParams>().z;
            cell.r_fdcm = expected_metrics(fdcm).reciprocity;
            cell.rho = rho(cell.reciprocity, cell.r_fdcm);
        } catch (const Error& e) {
            cell.status = WindowResult::Status::failed;
            cell.message = e.what();
        }
    });

    std::size_t c = 0;
    for (std::size_t delta : deltas) {
        RhoScanRow row;
        row.delta_t = delta;
        std::vector<double> d, r, rf, rh;
        for (; c < out.windows.size() && out.windows[c].delta_t == delta; ++c) {
            const WindowResult& cell = out.windows[c];
            ++row.windows;
            if (cell.status == WindowResult::Status::empty) ++row.skipped_empty;
            else if (cell.status == WindowResult::Status::failed) ++row.failed;
            else {
                d.push_back(cell.density);
                r.push_back(cell.reciprocity);
                rf.push_back(cell.r_fdcm);
                rh.push_back(cell.rho);
            }
        }
        row.used = rh.size();
        row.missing = rh.empty();
        if (!row.missing) {
            row.density = mean(d);
            row.reciprocity = mean(r);
            row.r_fdcm = mean(rf);
            row.rho = mean(rh);
            row.rho_stderr = rh.size() > 1 ? sample_stddev(rh) / std::sqrt(static_cast<double>(rh.size())) : std::nan("");
        }
        out.rows.push_back(row);
    }
    std::vector<std::size_t> ds;
    std::vector<double> rs;
    for (const RhoScanRow& row : out.rows) {
        ds.push_back(row.delta_t);
        rs.push_back(row.rho);
    }
    out.extrema = extract_extrema(ds, rs);
    return out;
}

struct RocResult {
    std::vector<double> thresholds;  // first entry +inf (nothing predicted positive)
    std::vector<double> tpr;
    std::vector<double> fpr;
    double auc = std::nan("");
};

/// Curve over all distinct score thresholds, a point predicted positive iff
/// its score is >= threshold; AUC by the trapezoidal rule.
inline RocResult roc_auc(std::span<const double> scores, std::span<const std::uint8_t> observed) {
    if (scores.size() != observed.size()) fail(ErrorKind::validation, "scores and observations differ in length");
    std::size_t pos = 0;
    for (std::size_t k = 0; k < scores.size(); ++k) {
        if (!std::isfinite(scores[k])) fail(ErrorKind::validation, "non-finite score");
        if (observed[k]) ++pos;
    }
    const std::size_t neg = scores.size() - pos;
    if (pos == 0 || neg == 0) fail(ErrorKind::domain, "AUC is undefined when all observations share one class");
    std::vector<std::size_t> order(scores.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    RocResult roc;
    roc.thresholds.push_back(std::numeric_limits<double>::infinity());
    roc.tpr.push_back(0.0);
    roc.fpr.push_back(0.0);
    std::size_t tp = 0, fp = 0;
    for (std::size_t k = 0; k < order.size();) {
        const double t = scores[order[k]];
        for (; k < order.size() && scores[order[k]] == t; ++k) (observed[order[k]] ? tp : fp) += 1;
        roc.thresholds.push_back(t);
        roc.tpr.push_back(static_cast<double>(tp) / static_cast<double>(pos));
        roc.fpr.push_back(static_cast<double>(fp) / static_cast<double>(neg));
    }
    double area = 0.0;
    for (std::size_t k = 1; k < roc.tpr.size(); ++k)
        area += (roc.fpr[k] - roc.fpr[k - 1]) * (roc.tpr[k] + roc.tpr[k - 1]) * 0.5;
    roc.auc = area;
    return roc;
}

/// Fraction of (positive, negative) pairs ranked correctly, ties 1/2.
inline double mann_whitney_auc(std::span<const double> scores, std::span<const std::uint8_t> observed) {
    if (scores.size() != observed.size()) fail(ErrorKind::validation, "scores and observations differ in length");
    double wins = 0.0;
    std::size_t pairs = 0;
    for (std::size_t a = 0; a < scores.size(); ++a) {
        if (!observed[a]) continue;
        for (std::size_t b = 0; b < scores.size(); ++b) {
            if (observed[b]) continue;
            ++pairs;
            if (scores[a] > scores[b]) wins += 1.0;
            else if (scores[a] == scores[b]) wins += 0.5;
        }
    }
    if (pairs == 0) fail(ErrorKind::domain, "AUC is undefined when all observations share one class");
    return wins / static_cast<double>(pairs);
}

/// ROC of the model's link probabilities against the observed adjacency
/// over all ordered off-diagonal pairs.
inline RocResult roc_auc(const FittedModel& model, const DirectedNetwork& observed) {
    if (model.size() != observed.size()) fail(ErrorKind::validation, "model and network sizes differ");
    const std::size_t n = model.size();
    std::vector<double> scores;
    std::vector<std::uint8_t> obs;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j) {
                scores.push_back(model.link_probability(i, j));
                obs.push_back(observed.has_link(i, j) ? 1 : 0);
            }
    return roc_auc(scores, obs);
}

struct CrossEntropy {
    double value = 0.0;  // mean per unordered pair; +inf when infinite
    bool infinite = false;
    std::size_t dyads = 0;
    std::size_t impossible_dyads = 0;  // observed class given probability 0
};

using DyadFunction = std::function<DyadProbabilities(std::size_t, std::size_t)>;

/// Mean over unordered pairs i<j of -ln P(observed class), classes
/// {none, i->j only, j->i only, both}.
inline CrossEntropy cross_entropy(const DyadFunction& dyad, const DirectedNetwork& observed) {
    const std::size_t n = observed.size();
    if (n < 2) fail(ErrorKind::invalid_network, "cross-entropy needs at least two nodes");
    CrossEntropy ce;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const DyadProbabilities d = dyad(i, j);
            const bool ij = observed.has_link(i, j), ji = observed.has_link(j, i);
            const double p = ij ? (ji ? d.both : d.ij_only) : (ji ? d.ji_only : d.none);
            ++ce.dyads;
            if (p <= 0.0) {
                ++ce.impossible_dyads;
                ce.infinite = true;
                continue;
            }
            total -= std::log(p);
        }
    ce.value = ce.infinite ? std::numeric_limits<double>::infinity() : total / static_cast<double>(ce.dyads);
    return ce;
}

inline CrossEntropy cross_entropy(const FittedModel& model, const DirectedNetwork& observed) {
    if (model.size() != observed.size()) fail(ErrorKind::validation, "model and network sizes differ");
    return cross_entropy([&](std::size_t i, std::size_t j) { return model.dyad(i, j); }, observed);
}

}  // namespace recon_net
