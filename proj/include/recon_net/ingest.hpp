#pragma once

#include "recon_net/csv.hpp"
#include "recon_net/ensemble.hpp"
#include "recon_net/error.hpp"
#include "recon_net/fitness.hpp"
#include "recon_net/graph.hpp"
#include "recon_net/models.hpp"
#include "recon_net/random.hpp"

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace recon_net {

struct Date {
    int year = 1970;
    int month = 1;
    int day = 1;

    friend auto operator<=>(const Date&, const Date&) = default;

    std::string iso() const {
        char buf[16];
        std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", year, month, day);
        return buf;
    }

    static bool leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }
    static int days_in_month(int y, int m) {
        static constexpr int days[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
        return m == 2 && leap(y) ? 29 : days[m - 1];
    }

    /// 0 = Monday ... 6 = Sunday.
    int weekday() const {
        // Sakamoto's method gives 0 = Sunday.
        static constexpr int t[] = {0, 3, 2, 5, 0, 3, 5, 1, 4, 6, 2, 4};
        int y = year - (month < 3 ? 1 : 0);
        const int dow = (y + y / 4 - y / 100 + y / 400 + t[month - 1] + day) % 7;
        return (dow + 6) % 7;
    }

    Date next() const {
        Date d = *this;
        if (++d.day > days_in_month(d.year, d.month)) {
            d.day = 1;
            if (++d.month > 12) {
                d.month = 1;
                ++d.year;
            }
        }
        return d;
    }

    static std::optional<Date> parse(std::string_view s) {
        s = csv::trim(s);
        if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
        auto num = [&](std::size_t pos, std::size_t len, int& out) {
            out = 0;
            for (std::size_t k = pos; k < pos + len; ++k) {
                if (!std::isdigit(static_cast<unsigned char>(s[k]))) return false;
                out = out * 10 + (s[k] - '0');
            }
            return true;
        };
        Date d;
        if (!num(0, 4, d.year) || !num(5, 2, d.month) || !num(8, 2, d.day)) return std::nullopt;
        if (d.month < 1 || d.month > 12 || d.day < 1 || d.day > days_in_month(d.year, d.month)) return std::nullopt;
        return d;
    }
};

struct TransactionRecord {
    Date date;
    std::string lender;
    std::string borrower;
    double amount = 0.0;
    std::string maturity;  // empty when absent
};

/// Reads `date,lender,borrower,amount[,maturity]` CSV (header required).
inline std::vector<TransactionRecord> parse_transactions(std::istream& in) {
    std::vector<TransactionRecord> out;
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    auto where = [&] { return "line " + std::to_string(line_no) + ": "; };
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (csv::trim(line).empty()) continue;
        const auto fields = csv::split(line);
        if (!header_seen) {
            header_seen = true;
            std::vector<std::string> h;
            for (const auto& f : fields) h.push_back(csv::lower(f));
            const bool base = h.size() >= 4 && h[0] == "date" && h[1] == "lender" && h[2] == "borrower" &&
                              h[3] == "amount";
            if (!base || h.size() > 5 || (h.size() == 5 && h[4] != "maturity"))
                fail(ErrorKind::parse, where() + "expected header date,lender,borrower,amount[,maturity]");
            continue;
        }
        if (fields.size() < 4) fail(ErrorKind::parse, where() + "expected at least 4 fields, got " + std::to_string(fields.size()));
        if (fields.size() > 5) fail(ErrorKind::parse, where() + "expected at most 5 fields, got " + std::to_string(fields.size()));
        TransactionRecord r;
        const auto date = Date::parse(fields[0]);
        if (!date) fail(ErrorKind::parse, where() + "invalid ISO-8601 date '" + fields[0] + "'");
        r.date = *date;
        r.lender = fields[1];
        r.borrower = fields[2];
        if (r.lender.empty() || r.borrower.empty()) fail(ErrorKind::parse, where() + "empty lender or borrower");
        if (!csv::parse_double(fields[3], r.amount)) fail(ErrorKind::parse, where() + "invalid amount '" + fields[3] + "'");
        if (!(r.amount > 0.0)) fail(ErrorKind::validation, where() + "amount must be positive");
        if (r.lender == r.borrower) fail(ErrorKind::validation, where() + "lender equals borrower (self-loop)");
        if (fields.size() == 5) r.maturity = fields[4];
        out.push_back(std::move(r));
    }
    if (!header_seen) fail(ErrorKind::parse, "transactions file is empty (missing header)");
    return out;
}

inline void write_transactions(std::ostream& out, const std::vector<TransactionRecord>& records) {
    out << "date,lender,borrower,amount,maturity\n";
    for (const auto& r : records)
        out << r.date.iso() << ',' << r.lender << ',' << r.borrower << ',' << csv::format_double(r.amount) << ','
            << r.maturity << '\n';
}

struct AggregationWindow {
    int year = 0;
    std::size_t delta_t = 1;
    std::size_t index = 0;
    std::vector<Date> days;  // sorted, exactly delta_t trading days
};

/// Sorted distinct transaction dates within the year.
inline std::vector<Date> trading_calendar(const std::vector<TransactionRecord>& records, int year) {
    std::set<Date> days;
    for (const auto& r : records)
        if (r.date.year == year) days.insert(r.date);
    return {days.begin(), days.end()};
}

/// Sorted labels of every bank lending or borrowing during the year.
inline std::vector<std::string> active_nodes(const std::vector<TransactionRecord>& records, int year) {
    std::set<std::string> nodes;
    for (const auto& r : records)
        if (r.date.year == year) {
            nodes.insert(r.lender);
            nodes.insert(r.borrower);
        }
    return {nodes.begin(), nodes.end()};
}

/// Consecutive disjoint windows of delta_t trading days; a trailing partial
/// window is dropped.
inline std::vector<AggregationWindow> make_windows(const std::vector<Date>& calendar, int year, std::size_t delta_t) {
    if (delta_t == 0) fail(ErrorKind::configuration, "aggregation period must be at least one trading day");
    std::vector<AggregationWindow> out;
    for (std::size_t start = 0; start + delta_t <= calendar.size(); start += delta_t) {
        AggregationWindow w;
        w.year = year;
        w.delta_t = delta_t;
        w.index = out.size();
        w.days.assign(calendar.begin() + static_cast<std::ptrdiff_t>(start),
                      calendar.begin() + static_cast<std::ptrdiff_t>(start + delta_t));
        out.push_back(std::move(w));
    }
    return out;
}

/// Weighted snapshot of the window on the given node set: a_ij = 1 iff some
/// in-window transaction i -> j, w_ij = summed amounts.
inline DirectedNetwork aggregate(const std::vector<TransactionRecord>& records, const AggregationWindow& window,
                                 const std::vector<std::string>& labels) {
    DirectedNetwork net(labels, true);
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < labels.size(); ++i) index.emplace(labels[i], i);
    for (const auto& r : records) {
        if (!std::binary_search(window.days.begin(), window.days.end(), r.date)) continue;
        const auto li = index.find(r.lender);
        const auto bi = index.find(r.borrower);
        if (li == index.end() || bi == index.end())
            fail(ErrorKind::validation, "transaction on " + r.date.iso() + " references a bank outside the node set");
        net.add_weight(li->second, bi->second, r.amount);
    }
    return net;
}

inline DirectedNetwork aggregate(const std::vector<TransactionRecord>& records, const AggregationWindow& window) {
    return aggregate(records, window, active_nodes(records, window.year));
}

/// Assets are money lent (out-strength), liabilities money borrowed
/// (in-strength).
inline FitnessData fitness_from_strengths(const DirectedNetwork& net) {
    if (!net.weighted()) fail(ErrorKind::validation, "fitness from strengths needs a weighted network");
    const StructuralMetrics m = degrees_strengths(net);
    FitnessData f;
    f.assets = m.s_out;
    f.liabilities = m.s_in;
    f.labels = net.labels();
    return f;
}

struct DistributionSpec {
    enum class Kind { lognormal, pareto, constant };
    Kind kind = Kind::constant;
    double first = 1.0;   // mu | alpha | c
    double second = 0.0;  // sigma | x_min

    void validate() const {
        switch (kind) {
            case Kind::lognormal:
                if (!std::isfinite(first) || !(second >= 0.0) || !std::isfinite(second))
                    fail(ErrorKind::configuration, "lognormal needs finite mu and sigma >= 0");
                break;
            case Kind::pareto:
                if (!(first > 0.0) || !(second > 0.0) || !std::isfinite(first) || !std::isfinite(second))
                    fail(ErrorKind::configuration, "pareto needs alpha > 0 and x_min > 0");
                break;
            case Kind::constant:
                if (!(first > 0.0) || !std::isfinite(first)) fail(ErrorKind::configuration, "constant needs c > 0");
                break;
        }
    }

    double draw(Rng& rng) const {
        switch (kind) {
            case Kind::lognormal: return std::exp(first + second * rng.normal());
            case Kind::pareto: return second * std::pow(rng.uniform_open_low(), -1.0 / first);
            case Kind::constant: return first;
        }
        return first;
    }

    /// "lognormal:MU,SIGMA", "pareto:ALPHA,XMIN" or "constant:C".
    static DistributionSpec parse(std::string_view text) {
        const auto colon = text.find(':');
        const std::string name = csv::lower(csv::trim(text.substr(0, colon)));
        std::vector<double> args;
        if (colon != std::string_view::npos)
            for (const auto& f : csv::split(text.substr(colon + 1))) {
                double v;
                if (!csv::parse_double(f, v)) fail(ErrorKind::configuration, "bad distribution parameter '" + f + "'");
                args.push_back(v);
            }
        DistributionSpec d;
        if (name == "lognormal" && args.size() == 2) d = {Kind::lognormal, args[0], args[1]};
        else if (name == "pareto" && args.size() == 2) d = {Kind::pareto, args[0], args[1]};
        else if (name == "constant" && args.size() == 1) d = {Kind::constant, args[0], 0.0};
        else fail(ErrorKind::configuration, "unrecognized distribution '" + std::string(text) + "'");
        d.validate();
        return d;
    }
};

inline std::vector<std::string> default_labels(std::size_t n) {
    std::vector<std::string> labels;
    const int width = n <= 1000 ? 3 : (n <= 10000 ? 4 : 6);
    for (std::size_t i = 0; i < n; ++i) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "B%0*zu", width, i);
        labels.emplace_back(buf);
    }
    return labels;
}

/// Independent draws for all assets, then all liabilities, from one stream.
inline FitnessData synth_fitness(std::size_t n, const DistributionSpec& dist, std::uint64_t seed) {
    if (n < 2) fail(ErrorKind::configuration, "synthetic fitness needs n >= 2");
    dist.validate();
    Rng rng(seed);
    FitnessData f;
    f.assets.reserve(n);
    f.liabilities.reserve(n);
    for (std::size_t i = 0; i < n; ++i) f.assets.push_back(dist.draw(rng));
    for (std::size_t i = 0; i < n; ++i) f.liabilities.push_back(dist.draw(rng));
    f.labels = default_labels(n);
    return f;
}

inline FitnessData read_fitness_csv(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    bool header = false;
    FitnessData f;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (csv::trim(line).empty()) continue;
        const auto fields = csv::split(line);
        const std::string where = "fitness line " + std::to_string(line_no) + ": ";
        if (!header) {
            if (fields.size() != 3 || csv::lower(fields[0]) != "node" || csv::lower(fields[1]) != "assets" ||
                csv::lower(fields[2]) != "liabilities")
                fail(ErrorKind::parse, where + "expected header node,assets,liabilities");
            header = true;
            continue;
        }
        if (fields.size() != 3) fail(ErrorKind::parse, where + "expected 3 fields");
        double a, l;
        if (!csv::parse_double(fields[1], a) || !csv::parse_double(fields[2], l))
            fail(ErrorKind::parse, where + "invalid number");
        f.labels.push_back(fields[0]);
        f.assets.push_back(a);
        f.liabilities.push_back(l);
    }
    if (!header) fail(ErrorKind::parse, "fitness file is empty (missing header)");
    f.validate();
    return f;
}

inline void write_fitness_csv(std::ostream& out, const FitnessData& f) {
    out << "node,assets,liabilities\n";
    for (std::size_t i = 0; i < f.size(); ++i)
        out << (f.labels.size() == f.size() ? f.labels[i] : std::to_string(i)) << ','
            << csv::format_double(f.assets[i]) << ',' << csv::format_double(f.liabilities[i]) << '\n';
}

/// Fitness aligned to the given labels; missing labels are an error.
inline FitnessData align_fitness(const FitnessData& f, const std::vector<std::string>& labels) {
    std::unordered_map<std::string, std::size_t> idx;
    for (std::size_t i = 0; i < f.labels.size(); ++i) idx.emplace(f.labels[i], i);
    FitnessData out;
    out.labels = labels;
    for (const auto& l : labels) {
        const auto it = idx.find(l);
        if (it == idx.end()) fail(ErrorKind::validation, "no fitness entry for node '" + l + "'");
        out.assets.push_back(f.assets[it->second]);
        out.liabilities.push_back(f.liabilities[it->second]);
    }
    return out;
}

/// Weekdays of the year starting from January 1st.
inline std::vector<Date> weekday_calendar(int year, std::size_t days) {
    std::vector<Date> out;
    Date d{year, 1, 1};
    while (out.size() < days && d.year == year) {
        if (d.weekday() < 5) out.push_back(d);
        d = d.next();
    }
    if (out.size() < days) fail(ErrorKind::configuration, "year has fewer weekdays than requested trading days");
    return out;
}

/// Synthetic transaction stream over a year of trading days.
///
/// stream_fdcm: each ordered pair draws a persistent intensity multiplier
/// G ~ Exp(1) and then Poisson(rate A_i L_j G) loans per day. The chance of
/// no loan in any window of k days is 1 / (1 + k rate A_i L_j), so every
/// aggregation level is exactly an F-DCM snapshot with z = k rate.
/// stream_fgrm: each day is an independent F-GRM draw with (rate, v); each
/// link becomes one loan.
struct StreamSpec {
    enum class Kind { stream_fdcm, stream_fgrm };
    Kind kind = Kind::stream_fdcm;
    int year = 2000;
    std::size_t trading_days = 250;
    double rate = 0.01;
    double v = 1.0;
    double amount_sigma = 0.0;  // log-normal amount noise; 0 means unit loans
};

inline std::vector<TransactionRecord> synth_transactions(const FitnessData& fitness, const StreamSpec& spec,
                                                         std::uint64_t seed) {
    fitness.validate();
    if (!(spec.rate >= 0.0) || !std::isfinite(spec.rate)) fail(ErrorKind::configuration, "rate must be >= 0");
    if (!(spec.v >= 0.0) || !std::isfinite(spec.v)) fail(ErrorKind::configuration, "v must be >= 0");
    if (!(spec.amount_sigma >= 0.0)) fail(ErrorKind::configuration, "amount_sigma must be >= 0");
    const std::size_t n = fitness.size();
    const std::vector<std::string> labels =
        fitness.labels.size() == n ? fitness.labels : default_labels(n);
    const std::vector<Date> days = weekday_calendar(spec.year, spec.trading_days);
    Rng rng(seed);
    std::vector<TransactionRecord> out;
    auto amount = [&] { return spec.amount_sigma > 0.0 ? std::exp(spec.amount_sigma * rng.normal()) : 1.0; };

    if (spec.kind == StreamSpec::Kind::stream_fdcm) {
        std::vector<double> intensity(n * n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (i != j) intensity[i * n + j] = spec.rate * fitness.assets[i] * fitness.liabilities[j] * rng.exponential();
        for (const Date& day : days)
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) {
                    if (i == j || intensity[i * n + j] == 0.0) continue;
                    const std::uint64_t loans = rng.poisson(intensity[i * n + j]);
                    for (std::uint64_t k = 0; k < loans; ++k)
                        out.push_back({day, labels[i], labels[j], amount(), "ON"});
                }
        return out;
    }
    FitnessData f = fitness;
    f.labels = labels;
    const FittedModel daily = FittedModel::fgrm(f, spec.rate, spec.v);
    for (std::size_t t = 0; t < days.size(); ++t) {
        const DirectedNetwork net = sample_network(daily, sub_seed(seed, t + 1));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (i != j && net.has_link(i, j)) out.push_back({days[t], labels[i], labels[j], amount(), "ON"});
    }
    return out;
}

}  // namespace recon_net
