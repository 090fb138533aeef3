#pragma once

// JSON and CSV forms of the result types. Everything written here is a pure
// function of its input so reruns reproduce bytes exactly; wall-clock values
// are kept out.

#include "recon_net/csv.hpp"
#include "recon_net/ensemble.hpp"
#include "recon_net/error.hpp"
#include "recon_net/graph.hpp"
#include "recon_net/models.hpp"
#include "recon_net/spectral.hpp"
#include "recon_net/trf.hpp"
#include "recon_net/validation.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace recon_net {

using Json = nlohmann::ordered_json;

namespace detail {

/// NaN and infinities have no JSON literal; they become null.
inline Json number(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

inline Json numbers(std::span<const double> xs) {
    Json a = Json::array();
    for (double x : xs) a.push_back(number(x));
    return a;
}

inline double get_number(const Json& j, const char* key) {
    if (!j.contains(key)) fail(ErrorKind::parse, std::string("missing field '") + key + "'");
    const Json& v = j.at(key);
    if (v.is_null()) return std::nan("");
    if (!v.is_number()) fail(ErrorKind::parse, std::string("field '") + key + "' is not a number");
    return v.get<double>();
}

inline std::vector<double> get_numbers(const Json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_array()) fail(ErrorKind::parse, std::string("missing array '") + key + "'");
    std::vector<double> out;
    for (const Json& v : j.at(key)) {
        if (!v.is_number()) fail(ErrorKind::parse, std::string("array '") + key + "' holds a non-number");
        out.push_back(v.get<double>());
    }
    return out;
}

}  // namespace detail

inline Json to_json(const SolverConfig& c) {
    Json j;
    j["residual_tolerance"] = c.residual_tolerance;
    j["step_tolerance"] = c.step_tolerance;
    j["max_iterations"] = c.max_iterations;
    j["lower_bound"] = c.lower_bound;
    return j;
}

/// Missing keys keep their defaults.
inline SolverConfig solver_config_from_json(const Json& j) {
    SolverConfig c;
    if (!j.is_object()) fail(ErrorKind::configuration, "solver config must be an object");
    try {
        if (j.contains("residual_tolerance")) c.residual_tolerance = j.at("residual_tolerance").get<double>();
        if (j.contains("step_tolerance")) c.step_tolerance = j.at("step_tolerance").get<double>();
        if (j.contains("max_iterations")) c.max_iterations = j.at("max_iterations").get<std::size_t>();
        if (j.contains("lower_bound")) c.lower_bound = j.at("lower_bound").get<double>();
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::configuration, std::string("solver config: ") + e.what());
    }
    c.validate();
    return c;
}

inline Json to_json(const FitnessData& f) {
    Json j;
    j["labels"] = f.labels;
    j["assets"] = detail::numbers(f.assets);
    j["liabilities"] = detail::numbers(f.liabilities);
    return j;
}

inline FitnessData fitness_from_json(const Json& j) {
    FitnessData f;
    f.assets = detail::get_numbers(j, "assets");
    f.liabilities = detail::get_numbers(j, "liabilities");
    if (j.contains("labels")) f.labels = j.at("labels").get<std::vector<std::string>>();
    f.validate();
    return f;
}

inline Json to_json(const FittedModel& m) {
    Json j;
    j["kind"] = std::string(to_string(m.kind()));
    j["nodes"] = m.size();
    Json p;
    std::visit(
        [&](const auto& params) {
            using P = std::decay_t<decltype(params)>;
            if constexpr (std::is_same_v<P, FdcmParams>) p["z"] = params.z;
            else if constexpr (std::is_same_v<P, FgrmParams>) {
                p["u"] = params.u;
                p["v"] = params.v;
            } else if constexpr (std::is_same_v<P, DcmParams>) {
                p["x"] = params.x;
                p["y"] = params.y;
            } else {
                p["x"] = params.x;
                p["y"] = params.y;
                p["z"] = params.z;
            }
        },
        m.params());
    j["params"] = p;
    if (m.kind() == ModelKind::FDCM || m.kind() == ModelKind::FGRM) j["fitness"] = to_json(m.fitness());
    Json r;
    r["iterations"] = m.report().iterations;
    r["residual_norm"] = detail::number(m.report().residual_norm);
    r["converged"] = m.report().converged;
    j["report"] = r;
    return j;
}

inline FittedModel model_from_json(const Json& j) {
    try {
        const ModelKind kind = parse_model_kind(j.at("kind").get<std::string>());
        const Json& p = j.at("params");
        auto vec = [&](const char* key) { return detail::get_numbers(p, key); };
        FittedModel m = [&] {
            switch (kind) {
                case ModelKind::FDCM: return FittedModel::fdcm(fitness_from_json(j.at("fitness")), detail::get_number(p, "z"));
                case ModelKind::FGRM:
                    return FittedModel::fgrm(fitness_from_json(j.at("fitness")), detail::get_number(p, "u"),
                                             detail::get_number(p, "v"));
                case ModelKind::DCM: return FittedModel::dcm(vec("x"), vec("y"));
                case ModelKind::GRM: return FittedModel::grm(vec("x"), vec("y"), detail::get_number(p, "z"));
                case ModelKind::RCM: return FittedModel::rcm(vec("x"), vec("y"), vec("z"));
            }
            fail(ErrorKind::parse, "unknown model kind");
        }();
        if (j.contains("report")) {
            const Json& r = j.at("report");
            FitReport fr;
            fr.iterations = r.value("iterations", std::size_t{0});
            fr.residual_norm = detail::get_number(r, "residual_norm");
            fr.converged = r.value("converged", true);
            m.set_report(fr);
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::parse, std::string("model file: ") + e.what());
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::configuration) fail(ErrorKind::parse, e.what());
        throw;
    }
}

/// {"n", "labels", "edges": [[i, j], ...], "weights": [...]} with edges in
/// row-major order; weights only for weighted networks.
inline Json to_json(const DirectedNetwork& net) {
    Json j;
    j["n"] = net.size();
    j["labels"] = net.labels();
    Json edges = Json::array();
    Json weights = Json::array();
    for (std::size_t i = 0; i < net.size(); ++i)
        for (std::size_t k = 0; k < net.size(); ++k)
            if (net.has_link(i, k)) {
                edges.push_back(Json::array({i, k}));
                if (net.weighted()) weights.push_back(net.weight(i, k));
            }
    j["edges"] = edges;
    if (net.weighted()) j["weights"] = weights;
    return j;
}

inline DirectedNetwork network_from_json(const Json& j) {
    try {
        const std::size_t n = j.at("n").get<std::size_t>();
        const bool weighted = j.contains("weights");
        DirectedNetwork net(n, weighted);
        if (j.contains("labels")) net.set_labels(j.at("labels").get<std::vector<std::string>>());
        const Json& edges = j.at("edges");
        for (std::size_t e = 0; e < edges.size(); ++e) {
            const std::size_t a = edges[e].at(0).get<std::size_t>(), b = edges[e].at(1).get<std::size_t>();
            if (a >= n || b >= n || a == b) fail(ErrorKind::parse, "network edge out of range or self-loop");
            if (weighted) net.add_weight(a, b, j.at("weights").at(e).get<double>());
            else net.set_link(a, b);
        }
        return net;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::parse, std::string("network file: ") + e.what());
    }
}

inline Json to_json(const EnsembleSummary& s) {
    Json j;
    j["samples"] = s.samples;
    j["mean_density"] = detail::number(s.mean_density);
    j["std_density"] = detail::number(s.std_density);
    j["mean_reciprocity"] = detail::number(s.mean_reciprocity);
    j["std_reciprocity"] = detail::number(s.std_reciprocity);
    j["reciprocity_defined"] = s.reciprocity_defined;
    j["pooled_reciprocity"] = detail::number(s.pooled_reciprocity);
    if (!s.lambda_max.empty()) {
        j["mean_lambda_max"] = detail::number(s.mean_lambda_max);
        j["std_lambda_max"] = detail::number(s.std_lambda_max);
    }
    j["density"] = detail::numbers(s.density);
    j["reciprocity"] = detail::numbers(s.reciprocity);
    if (!s.lambda_max.empty()) j["lambda_max"] = detail::numbers(s.lambda_max);
    j["links"] = s.links;
    j["reciprocated"] = s.reciprocated;
    return j;
}

inline Json to_json(const BulkShape& b) {
    Json j;
    j["semi_axis_re"] = detail::number(b.semi_axis_re);
    j["semi_axis_im"] = detail::number(b.semi_axis_im);
    j["axis_ratio"] = detail::number(b.axis_ratio);
    j["pooled"] = b.pooled;
    j["mean_tau"] = b.mean_tau ? detail::number(*b.mean_tau) : Json(nullptr);
    return j;
}

inline Json to_json(const RhoScanResult& s) {
    Json j;
    j["year"] = s.year;
    j["nodes"] = s.nodes;
    j["trading_days"] = s.trading_days;
    Json rows = Json::array();
    for (const RhoScanRow& r : s.rows) {
        Json row;
        row["delta_t"] = r.delta_t;
        row["windows"] = r.windows;
        row["used"] = r.used;
        row["skipped_empty"] = r.skipped_empty;
        row["failed"] = r.failed;
        row["missing"] = r.missing;
        row["density"] = detail::number(r.density);
        row["reciprocity"] = detail::number(r.reciprocity);
        row["r_fdcm"] = detail::number(r.r_fdcm);
        row["rho"] = detail::number(r.rho);
        row["rho_stderr"] = detail::number(r.rho_stderr);
        rows.push_back(row);
    }
    j["rows"] = rows;
    if (s.extrema) {
        Json e;
        e["t_min"] = s.extrema->t_min;
        e["rho_min"] = s.extrema->rho_min;
        e["t_0"] = s.extrema->t_0 ? Json(*s.extrema->t_0) : Json(nullptr);
        e["t_max"] = s.extrema->t_max;
        e["rho_max"] = s.extrema->rho_max;
        j["extrema"] = e;
    } else {
        j["extrema"] = nullptr;
    }
    return j;
}

inline Json to_json(const RocResult& r) {
    Json j;
    j["auc"] = detail::number(r.auc);
    j["thresholds"] = detail::numbers(r.thresholds);
    j["tpr"] = detail::numbers(r.tpr);
    j["fpr"] = detail::numbers(r.fpr);
    return j;
}

inline Json to_json(const CrossEntropy& c) {
    Json j;
    j["value"] = detail::number(c.value);
    j["infinite"] = c.infinite;
    j["dyads"] = c.dyads;
    j["impossible_dyads"] = c.impossible_dyads;
    return j;
}

/// Pretty JSON with a trailing newline.
inline void write_json(std::ostream& out, const Json& j) { out << j.dump(2) << '\n'; }

inline void write_rho_scan_csv(std::ostream& out, std::span<const RhoScanResult> scans) {
    using csv::format_double;
    out << "year,delta_t,windows,used,skipped_empty,failed,missing,density,reciprocity,r_fdcm,rho,rho_stderr\n";
    for (const RhoScanResult& s : scans)
        for (const RhoScanRow& r : s.rows)
            out << s.year << ',' << r.delta_t << ',' << r.windows << ',' << r.used << ',' << r.skipped_empty << ','
                << r.failed << ',' << (r.missing ? 1 : 0) << ',' << format_double(r.density) << ','
                << format_double(r.reciprocity) << ',' << format_double(r.r_fdcm) << ',' << format_double(r.rho)
                << ',' << format_double(r.rho_stderr) << '\n';
}

inline void write_rho_scan_csv(std::ostream& out, const RhoScanResult& s) {
    write_rho_scan_csv(out, std::span<const RhoScanResult>(&s, 1));
}

inline void write_rho_windows_csv(std::ostream& out, std::span<const RhoScanResult> scans) {
    using csv::format_double;
    out << "year,delta_t,window,first_day,last_day,status,links,reciprocated,density,reciprocity,z,r_fdcm,rho\n";
    for (const RhoScanResult& s : scans)
        for (const WindowResult& w : s.windows)
            out << s.year << ',' << w.delta_t << ',' << w.window << ',' << w.first_day.iso() << ','
                << w.last_day.iso() << ',' << to_string(w.status) << ',' << w.links << ',' << w.reciprocated << ','
                << format_double(w.density) << ',' << format_double(w.reciprocity) << ',' << format_double(w.z)
                << ',' << format_double(w.r_fdcm) << ',' << format_double(w.rho) << '\n';
}

inline void write_rho_windows_csv(std::ostream& out, const RhoScanResult& s) {
    write_rho_windows_csv(out, std::span<const RhoScanResult>(&s, 1));
}

inline void write_roc_csv(std::ostream& out, const RocResult& r) {
    out << "threshold,fpr,tpr\n";
    for (std::size_t k = 0; k < r.tpr.size(); ++k)
        out << csv::format_double(r.thresholds[k]) << ',' << csv::format_double(r.fpr[k]) << ','
            << csv::format_double(r.tpr[k]) << '\n';
}

/// Rows sample_id,re,im in spectrum order.
inline void write_spectra_csv(std::ostream& out, std::span<const Spectrum> spectra) {
    out << "sample_id,re,im\n";
    for (std::size_t s = 0; s < spectra.size(); ++s)
        for (const auto& v : spectra[s].values)
            out << s << ',' << csv::format_double(v.real()) << ',' << csv::format_double(v.imag()) << '\n';
}

}  // namespace recon_net
