#pragma once

#include "recon_net/spectral.hpp"
#include "recon_net/validation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace recon_net::svg {

namespace detail {

inline std::string fmt(double x, const char* spec = "%.6g") {
    char buf[48];
    std::snprintf(buf, sizeof buf, spec, x);
    return buf;
}

inline std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

inline const char* palette(std::size_t k) {
    static constexpr const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                             "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
    return colors[k % 10];
}

/// Step from {1, 2, 5} x 10^k giving about `target` intervals.
inline double nice_step(double span, int target = 5) {
    if (!(span > 0.0)) return 1.0;
    const double raw = span / target;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double r = raw / mag;
    return (r < 1.5 ? 1.0 : r < 3.5 ? 2.0 : r < 7.5 ? 5.0 : 10.0) * mag;
}

/// Plot frame with linear axes; data coordinates map into the inner box.
class Canvas {
public:
    Canvas(double x0, double x1, double y0, double y1, std::string title, std::string xlabel, std::string ylabel)
        : title_(std::move(title)), xlabel_(std::move(xlabel)), ylabel_(std::move(ylabel)) {
        widen(x0, x1);
        widen(y0, y1);
        x0_ = x0, x1_ = x1, y0_ = y0, y1_ = y1;
    }

    double px(double x) const { return kLeft + (x - x0_) / (x1_ - x0_) * (kWidth - kLeft - kRight); }
    double py(double y) const { return kHeight - kBottom - (y - y0_) / (y1_ - y0_) * (kHeight - kTop - kBottom); }

    void add(const std::string& element) { body_ << element << '\n'; }

    void circle(double x, double y, double r, const char* color, double opacity = 0.6) {
        add("<circle cx=\"" + fmt(px(x), "%.2f") + "\" cy=\"" + fmt(py(y), "%.2f") + "\" r=\"" + fmt(r, "%.2f") +
            "\" fill=\"" + color + "\" fill-opacity=\"" + fmt(opacity, "%.2f") + "\"/>");
    }

    void polyline(const std::vector<std::pair<double, double>>& pts, const char* color, double width = 1.5,
                  const char* dash = nullptr) {
        if (pts.empty()) return;
        std::string p;
        for (const auto& [x, y] : pts) p += fmt(px(x), "%.2f") + "," + fmt(py(y), "%.2f") + " ";
        if (!p.empty()) p.pop_back();
        add(std::string("<polyline fill=\"none\" stroke=\"") + color + "\" stroke-width=\"" + fmt(width, "%.2f") +
            "\"" + (dash ? std::string(" stroke-dasharray=\"") + dash + "\"" : std::string()) + " points=\"" + p +
            "\"/>");
    }

    void rect(double x0, double y0, double x1, double y1, const char* color) {
        const double left = px(std::min(x0, x1)), right = px(std::max(x0, x1));
        const double top = py(std::max(y0, y1)), bottom = py(std::min(y0, y1));
        add("<rect x=\"" + fmt(left, "%.2f") + "\" y=\"" + fmt(top, "%.2f") + "\" width=\"" +
            fmt(std::max(right - left, 1.0), "%.2f") + "\" height=\"" + fmt(bottom - top, "%.2f") + "\" fill=\"" +
            color + "\" stroke=\"#333\" stroke-width=\"0.5\"/>");
    }

    void legend(std::size_t slot, const std::string& text, const char* color) {
        const double y = kTop + 14.0 + 16.0 * static_cast<double>(slot);
        const double x = kWidth - kRight - 150.0;
        add("<rect x=\"" + fmt(x, "%.2f") + "\" y=\"" + fmt(y - 9.0, "%.2f") + "\" width=\"10\" height=\"10\" fill=\"" +
            color + "\"/>");
        add("<text x=\"" + fmt(x + 14.0, "%.2f") + "\" y=\"" + fmt(y, "%.2f") + "\" font-size=\"11\">" + escape(text) +
            "</text>");
    }

    std::string finish() const {
        std::ostringstream out;
        out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
            << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\">\n";
        out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
        out << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(title_)
            << "</text>\n";
        // Clip data to the plotting box.
        out << "<defs><clipPath id=\"box\"><rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\""
            << kWidth - kLeft - kRight << "\" height=\"" << kHeight - kTop - kBottom << "\"/></clipPath></defs>\n";
        axes(out);
        out << "<g clip-path=\"url(#box)\">\n" << body_.str() << "</g>\n</svg>\n";
        return out.str();
    }

    static constexpr int kWidth = 640, kHeight = 480;
    static constexpr int kLeft = 70, kRight = 20, kTop = 40, kBottom = 55;

private:
    static void widen(double& lo, double& hi) {
        if (!(hi > lo)) {
            const double pad = lo == 0.0 ? 1.0 : std::abs(lo) * 0.1;
            lo -= pad;
            hi += pad;
        }
    }

    void axes(std::ostringstream& out) const {
        const int l = kLeft, r = kWidth - kRight, t = kTop, b = kHeight - kBottom;
        out << "<rect x=\"" << l << "\" y=\"" << t << "\" width=\"" << r - l << "\" height=\"" << b - t
            << "\" fill=\"none\" stroke=\"black\"/>\n";
        const double xs = nice_step(x1_ - x0_);
        for (double v = std::ceil(x0_ / xs) * xs; v <= x1_ + 1e-9 * xs; v += xs) {
            const double x = px(v);
            out << "<line x1=\"" << fmt(x, "%.2f") << "\" y1=\"" << b << "\" x2=\"" << fmt(x, "%.2f") << "\" y2=\""
                << b + 5 << "\" stroke=\"black\"/>\n";
            out << "<text x=\"" << fmt(x, "%.2f") << "\" y=\"" << b + 18 << "\" text-anchor=\"middle\" font-size=\"11\">"
                << fmt(std::abs(v) < 1e-12 * xs ? 0.0 : v, "%.4g") << "</text>\n";
        }
        const double ys = nice_step(y1_ - y0_);
        for (double v = std::ceil(y0_ / ys) * ys; v <= y1_ + 1e-9 * ys; v += ys) {
            const double y = py(v);
            out << "<line x1=\"" << l - 5 << "\" y1=\"" << fmt(y, "%.2f") << "\" x2=\"" << l << "\" y2=\""
                << fmt(y, "%.2f") << "\" stroke=\"black\"/>\n";
            out << "<text x=\"" << l - 8 << "\" y=\"" << fmt(y + 4.0, "%.2f") << "\" text-anchor=\"end\" font-size=\"11\">"
                << fmt(std::abs(v) < 1e-12 * ys ? 0.0 : v, "%.4g") << "</text>\n";
        }
        out << "<text x=\"" << (l + r) / 2 << "\" y=\"" << kHeight - 12 << "\" text-anchor=\"middle\" font-size=\"13\">"
            << escape(xlabel_) << "</text>\n";
        out << "<text x=\"18\" y=\"" << (t + b) / 2 << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18 "
            << (t + b) / 2 << ")\">" << escape(ylabel_) << "</text>\n";
    }

    std::string title_, xlabel_, ylabel_;
    double x0_ = 0, x1_ = 1, y0_ = 0, y1_ = 1;
    std::ostringstream body_;
};

}  // namespace detail

struct ScatterOptions {
    std::string title = "Eigenvalues";
    bool drop_leading = false;          // plot bulks only
    std::optional<double> ellipse_tau;  // overlay semi-axes (1 + tau, 1 - tau)
};

/// Eigenvalue clouds, one color per series. Returns nullopt when there is
/// nothing to draw.
inline std::optional<std::string> spectrum_scatter(std::span<const std::vector<Spectrum>> series,
                                                   std::span<const std::string> names, const ScatterOptions& opt = {}) {
    double lo_x = std::numeric_limits<double>::infinity(), hi_x = -lo_x, lo_y = lo_x, hi_y = -lo_x;
    std::size_t points = 0;
    for (const auto& spectra : series)
        for (const Spectrum& s : spectra)
            for (std::size_t k = opt.drop_leading ? 1 : 0; k < s.size(); ++k) {
                lo_x = std::min(lo_x, s.values[k].real());
                hi_x = std::max(hi_x, s.values[k].real());
                lo_y = std::min(lo_y, s.values[k].imag());
                hi_y = std::max(hi_y, s.values[k].imag());
                ++points;
            }
    if (points == 0) return std::nullopt;
    if (opt.ellipse_tau) {
        const double a = 1.0 + *opt.ellipse_tau, b = 1.0 - *opt.ellipse_tau;
        lo_x = std::min(lo_x, -a), hi_x = std::max(hi_x, a);
        lo_y = std::min(lo_y, -b), hi_y = std::max(hi_y, b);
    }
    const double px = 0.05 * (hi_x - lo_x), py = 0.05 * (hi_y - lo_y);
    detail::Canvas c(lo_x - px, hi_x + px, lo_y - py, hi_y + py, opt.title, "Re(lambda)", "Im(lambda)");
    for (std::size_t k = 0; k < series.size(); ++k) {
        for (const Spectrum& s : series[k])
            for (std::size_t e = opt.drop_leading ? 1 : 0; e < s.size(); ++e)
                c.circle(s.values[e].real(), s.values[e].imag(), 1.6, detail::palette(k), 0.45);
        c.legend(k, k < names.size() ? names[k] : "series " + std::to_string(k), detail::palette(k));
    }
    if (opt.ellipse_tau) {
        const double a = 1.0 + *opt.ellipse_tau, b = 1.0 - *opt.ellipse_tau;
        std::vector<std::pair<double, double>> pts;
        for (int k = 0; k <= 360; ++k) {
            const double t = 2.0 * M_PI * k / 360.0;
            pts.emplace_back(a * std::cos(t), b * std::sin(t));
        }
        c.polyline(pts, "black", 1.5, "6,3");
        c.legend(series.size(), "axes 1+tau, 1-tau (tau=" + detail::fmt(*opt.ellipse_tau, "%.3g") + ")", "black");
    }
    return c.finish();
}

/// One polyline per scan (year) with a horizontal zero line.
inline std::optional<std::string> rho_curve(std::span<const RhoScanResult> scans) {
    double lo_x = std::numeric_limits<double>::infinity(), hi_x = -lo_x, lo_y = 0.0, hi_y = 0.0;
    std::size_t points = 0;
    for (const auto& s : scans)
        for (const auto& r : s.rows)
            if (!r.missing && std::isfinite(r.rho)) {
                lo_x = std::min(lo_x, static_cast<double>(r.delta_t));
                hi_x = std::max(hi_x, static_cast<double>(r.delta_t));
                lo_y = std::min(lo_y, r.rho);
                hi_y = std::max(hi_y, r.rho);
                ++points;
            }
    if (points == 0) return std::nullopt;
    const double py = 0.08 * (hi_y - lo_y);
    detail::Canvas c(lo_x, hi_x, lo_y - py, hi_y + py, "rho_F-DCM versus aggregation period", "aggregation period (trading days)",
                     "rho_F-DCM");
    c.polyline({{lo_x, 0.0}, {hi_x, 0.0}}, "black", 1.0, "4,3");
    for (std::size_t k = 0; k < scans.size(); ++k) {
        std::vector<std::pair<double, double>> pts;
        for (const auto& r : scans[k].rows)
            if (!r.missing && std::isfinite(r.rho)) pts.emplace_back(static_cast<double>(r.delta_t), r.rho);
        c.polyline(pts, detail::palette(k), 1.8);
        c.legend(k, std::to_string(scans[k].year), detail::palette(k));
    }
    return c.finish();
}

inline std::optional<std::string> roc_curve(const RocResult& roc) {
    if (roc.tpr.empty()) return std::nullopt;
    detail::Canvas c(0.0, 1.0, 0.0, 1.0, "ROC (AUC = " + detail::fmt(roc.auc, "%.4f") + ")", "false positive rate",
                     "true positive rate");
    c.polyline({{0.0, 0.0}, {1.0, 1.0}}, "#999", 1.0, "4,3");
    std::vector<std::pair<double, double>> pts;
    for (std::size_t k = 0; k < roc.tpr.size(); ++k) pts.emplace_back(roc.fpr[k], roc.tpr[k]);
    c.polyline(pts, detail::palette(0), 2.0);
    return c.finish();
}

/// Histogram of the defined tau values; a degenerate sample gives one bar.
inline std::optional<std::string> tau_histogram(std::span<const double> taus, std::size_t bins = 40) {
    std::vector<double> v;
    for (double t : taus)
        if (std::isfinite(t)) v.push_back(t);
    if (v.empty() || bins == 0) return std::nullopt;
    const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
    double lo = *mn, hi = *mx;
    std::vector<double> counts;
    double width;
    if (hi - lo <= 1e-12 * std::max(1.0, std::abs(lo))) {
        width = std::max(std::abs(lo) * 0.05, 1e-3);
        lo -= width / 2;
        hi = lo + width;
        counts.assign(1, static_cast<double>(v.size()));
    } else {
        width = (hi - lo) / static_cast<double>(bins);
        counts.assign(bins, 0.0);
        for (double t : v) counts[std::min(bins - 1, static_cast<std::size_t>((t - lo) / width))] += 1.0;
    }
    const double top = *std::max_element(counts.begin(), counts.end());
    const double pad = 0.05 * (hi - lo);
    detail::Canvas c(lo - pad, hi + pad, 0.0, top * 1.05, "Histogram of tau_ij", "tau_ij", "count");
    for (std::size_t k = 0; k < counts.size(); ++k)
        if (counts[k] > 0) c.rect(lo + width * k, 0.0, lo + width * (k + 1), counts[k], detail::palette(0));
    return c.finish();
}

/// Writes the figure, or warns on stderr and writes nothing when empty.
inline bool write(const std::string& path, const std::optional<std::string>& figure) {
    if (!figure) {
        std::cerr << "warning: nothing to plot, " << path << " not written\n";
        return false;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::io, "cannot write " + path);
    out << *figure;
    return true;
}

}  // namespace recon_net::svg
