// recon-net: batch front end over the recon_net library.

#include "recon_net/recon_net.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace recon_net;

namespace {

constexpr const char* kVersion = "0.1.0";

int exit_code(ErrorKind k) {
    switch (k) {
        case ErrorKind::configuration: return 1;
        case ErrorKind::numerical:
        case ErrorKind::non_convergence: return 3;
        default: return 2;
    }
}

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string hex(std::uint64_t x) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
    return buf;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::io, "cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Json read_json(const std::string& path) {
    try {
        return Json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::parse, path + ": " + e.what());
    }
}

std::vector<TransactionRecord> load_transactions(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::io, "cannot read " + path);
    try {
        return parse_transactions(in);
    } catch (const Error& e) {
        fail(e.kind(), path + ": " + e.what());
    }
}

FitnessData load_fitness(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::io, "cannot read " + path);
    try {
        return read_fitness_csv(in);
    } catch (const Error& e) {
        fail(e.kind(), path + ": " + e.what());
    }
}

/// Output directory bookkeeping: every artifact goes through here so the
/// manifest can list its size and hash.
class Outputs {
public:
    explicit Outputs(std::string dir) : dir_(std::move(dir)) {
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec) fail(ErrorKind::io, "cannot create output directory " + dir_ + ": " + ec.message());
    }

    const std::string& dir() const { return dir_; }

    void text(const std::string& name, const std::string& content, bool listed = true) {
        const fs::path path = fs::path(dir_) / name;
        if (path.has_parent_path()) fs::create_directories(path.parent_path());
        std::ofstream out(path, std::ios::binary);
        if (!out) fail(ErrorKind::io, "cannot write " + path.string());
        out << content;
        if (!out) fail(ErrorKind::io, "write failed for " + path.string());
        if (listed) files_.push_back({name, content.size(), fnv1a(content)});
    }

    void json(const std::string& name, const Json& j) {
        std::ostringstream ss;
        write_json(ss, j);
        text(name, ss.str());
    }

    template <class F>
    void stream(const std::string& name, F&& writer) {
        std::ostringstream ss;
        writer(ss);
        text(name, ss.str());
    }

    void figure(const std::string& name, const std::optional<std::string>& svg) {
        if (!svg) {
            std::cerr << "warning: nothing to plot, " << name << " not written\n";
            return;
        }
        text(name, *svg, false);
        figures_.push_back(name);
    }

    Json listing() const {
        Json arr = Json::array();
        for (const auto& f : files_) arr.push_back({{"file", f.name}, {"bytes", f.bytes}, {"fnv1a64", hex(f.hash)}});
        return arr;
    }

    Json figure_listing() const { return figures_; }

private:
    struct Entry {
        std::string name;
        std::size_t bytes;
        std::uint64_t hash;
    };
    std::string dir_;
    std::vector<Entry> files_;
    std::vector<std::string> figures_;
};

/// Wall-clock phases, kept out of the JSON artifacts so reruns stay
/// byte-identical.
class Timer {
public:
    void phase(const std::string& name) {
        close();
        name_ = name;
        start_ = std::chrono::steady_clock::now();
    }
    std::string report(unsigned threads) {
        close();
        std::ostringstream ss;
        ss << "threads " << threads << '\n';
        double total = 0.0;
        for (const auto& [n, s] : done_) {
            ss << n << ' ' << s << '\n';
            total += s;
        }
        ss << "total " << total << '\n';
        return ss.str();
    }

private:
    void close() {
        if (name_.empty()) return;
        done_.emplace_back(name_, std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count());
        name_.clear();
    }
    std::string name_;
    std::chrono::steady_clock::time_point start_;
    std::vector<std::pair<std::string, double>> done_;
};

/// Options shared by all subcommands.
struct Common {
    std::string out = "out";
    std::string config;
    unsigned threads = 0;
    std::uint64_t seed = 0;
};

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--out", c.out, "Output directory")->capture_default_str();
    sub->add_option("--config", c.config, "JSON file of option values; command-line flags win");
    sub->add_option("--threads", c.threads, "Worker threads (0: logical cores; RECON_NET_THREADS overrides)");
    sub->add_option("--seed", c.seed, "Master seed")->capture_default_str();
}

/// Effective option values of a subcommand, excluding ones that do not
/// change results (thread count, config path, output directory).
Json effective_config(const CLI::App* sub) {
    Json j;
    j["command"] = sub->get_name();
    Json opts;
    for (const CLI::Option* o : sub->get_options()) {
        const std::string name = o->get_single_name();
        if (o->get_lnames().empty() || name == "help" || name == "threads" || name == "config" || name == "out")
            continue;
        const auto results = o->results();
        if (!results.empty()) opts[name] = results.back();
        else if (!o->get_default_str().empty()) opts[name] = o->get_default_str();
    }
    j["options"] = opts;
    return j;
}

void check_range(const char* field, double x, double lo, double hi, bool open_lo, bool open_hi) {
    const bool ok = std::isfinite(x) && (open_lo ? x > lo : x >= lo) && (open_hi ? x < hi : x <= hi);
    if (!ok) {
        std::ostringstream ss;
        ss << field << " must lie in " << (open_lo ? '(' : '[') << lo << ", " << hi << (open_hi ? ')' : ']')
           << ", got " << csv::format_double(x);
        fail(ErrorKind::configuration, ss.str());
    }
}

/// "1:260", "1,2,5", "1:10:3,50" (ranges inclusive).
std::vector<std::size_t> parse_deltas(const std::string& spec) {
    std::vector<std::size_t> out;
    auto number = [&](const std::string& s) -> std::size_t {
        std::size_t v = 0;
        const auto t = csv::trim(s);
        const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
        if (r.ec != std::errc() || r.ptr != t.data() + t.size() || v == 0)
            fail(ErrorKind::configuration, "--delta-t: bad aggregation period '" + s + "'");
        return v;
    };
    for (const std::string& part : csv::split(spec)) {
        std::vector<std::string> f;
        std::stringstream ss(part);
        for (std::string x; std::getline(ss, x, ':');) f.push_back(x);
        if (f.size() == 1) out.push_back(number(f[0]));
        else if (f.size() == 2 || f.size() == 3) {
            const std::size_t a = number(f[0]), b = number(f[1]), step = f.size() == 3 ? number(f[2]) : 1;
            if (b < a) fail(ErrorKind::configuration, "--delta-t: empty range '" + part + "'");
            for (std::size_t d = a; d <= b; d += step) out.push_back(d);
        } else {
            fail(ErrorKind::configuration, "--delta-t: bad range '" + part + "'");
        }
    }
    if (out.empty()) fail(ErrorKind::configuration, "--delta-t: empty list");
    return out;
}

std::vector<int> parse_years(const std::string& spec) {
    std::vector<int> years;
    if (csv::trim(spec).empty()) return years;
    for (const std::string& part : csv::split(spec)) {
        int y = 0;
        const auto r = std::from_chars(part.data(), part.data() + part.size(), y);
        if (r.ec != std::errc() || r.ptr != part.data() + part.size())
            fail(ErrorKind::configuration, "--year: bad year '" + part + "'");
        years.push_back(y);
    }
    return years;
}

SolverConfig solver_from(std::size_t max_iterations, double residual_tol, double step_tol) {
    SolverConfig c;
    c.max_iterations = max_iterations;
    c.residual_tolerance = residual_tol;
    c.step_tolerance = step_tol;
    c.validate();
    return c;
}

Json metrics_json(const DirectedNetwork& net) {
    Json j;
    j["nodes"] = net.size();
    j["links"] = net.link_count();
    j["reciprocated"] = reciprocated_link_count(net);
    j["density"] = density(net);
    j["reciprocity"] = net.link_count() ? Json(reciprocity(net)) : Json(nullptr);
    return j;
}

Json expected_json(const FittedModel& m) {
    const ExpectedMetrics e = expected_metrics(m);
    return {{"links", e.links}, {"reciprocated", e.reciprocated}, {"density", e.density},
            {"reciprocity", detail::number(e.reciprocity)}};
}


// ---- subcommands ----------------------------------------------------------

struct SynthArgs {
    std::size_t nodes = 50;
    std::string distribution = "lognormal:0,1";
    std::string fitness;
    std::string stream = "none";
    double rate = 0.01, v = 1.0, amount_sigma = 0.0;
    int year = 2000;
    std::size_t days = 250;
};

Json run_synth(const SynthArgs& a, const Common& c, Outputs& out, Timer& timer) {
    timer.phase("fitness");
    FitnessData f;
    if (!a.fitness.empty()) f = load_fitness(a.fitness);
    else {
        if (a.nodes < 2) fail(ErrorKind::configuration, "--nodes must be at least 2");
        f = synth_fitness(a.nodes, DistributionSpec::parse(a.distribution), sub_seed(c.seed, 0));
    }
    out.stream("fitness.csv", [&](std::ostream& s) { write_fitness_csv(s, f); });
    Json summary{{"nodes", f.size()}};
    if (a.stream == "none") return summary;
    StreamSpec spec;
    if (a.stream == "fdcm") spec.kind = StreamSpec::Kind::stream_fdcm;
    else if (a.stream == "fgrm") spec.kind = StreamSpec::Kind::stream_fgrm;
    else fail(ErrorKind::configuration, "--stream must be none, fdcm or fgrm, got '" + a.stream + "'");
    if (spec.kind == StreamSpec::Kind::stream_fgrm) check_range("--rate", a.rate, 0.0, 1e300, true, false);
    spec.year = a.year;
    spec.trading_days = a.days;
    spec.rate = a.rate;
    spec.v = a.v;
    spec.amount_sigma = a.amount_sigma;
    timer.phase("transactions");
    const auto records = synth_transactions(f, spec, sub_seed(c.seed, 1));
    out.stream("transactions.csv", [&](std::ostream& s) { write_transactions(s, records); });
    summary["transactions"] = records.size();
    summary["trading_days"] = a.days;
    return summary;
}

struct AggregateArgs {
    std::string transactions;
    int year = 0;
    std::size_t delta_t = 0;
    std::size_t window = 0;
};

Json run_aggregate(const AggregateArgs& a, Outputs& out, Timer& timer) {
    timer.phase("aggregate");
    const auto records = load_transactions(a.transactions);
    const auto calendar = trading_calendar(records, a.year);
    if (calendar.empty()) fail(ErrorKind::validation, "no transactions in year " + std::to_string(a.year));
    const std::size_t delta = a.delta_t == 0 ? calendar.size() : a.delta_t;
    const auto windows = make_windows(calendar, a.year, delta);
    if (a.window >= windows.size())
        fail(ErrorKind::configuration, "--window " + std::to_string(a.window) + " out of range: year has " +
                                           std::to_string(windows.size()) + " complete windows");
    const DirectedNetwork net = aggregate(records, windows[a.window], active_nodes(records, a.year));
    out.json("network.json", to_json(net));
    if (net.link_count() > 0) {
        const FitnessData f = fitness_from_strengths(net);
        out.stream("fitness.csv", [&](std::ostream& s) { write_fitness_csv(s, f); });
    }
    Json summary = metrics_json(net);
    summary["delta_t"] = delta;
    summary["window"] = a.window;
    summary["first_day"] = windows[a.window].days.front().iso();
    summary["last_day"] = windows[a.window].days.back().iso();
    return summary;
}

struct SolverArgs {
    std::size_t max_iterations = 1000;
    double residual_tolerance = 1e-10;
    double step_tolerance = 1e-12;
};

void add_solver(CLI::App* sub, SolverArgs& s) {
    sub->add_option("--max-iterations", s.max_iterations, "Solver iteration budget")->capture_default_str();
    sub->add_option("--residual-tolerance", s.residual_tolerance, "Solver residual tolerance")->capture_default_str();
    sub->add_option("--step-tolerance", s.step_tolerance, "Solver step tolerance")->capture_default_str();
}

struct FitArgs {
    std::string model = "fgrm";
    std::string fitness, network;
    std::optional<double> density_target, reciprocity_target;
    SolverArgs solver;
};

Json run_fit(const FitArgs& a, Outputs& out, Timer& timer) {
    const ModelKind kind = [&] {
        try {
            return parse_model_kind(a.model);
        } catch (const Error& e) {
            fail(ErrorKind::configuration, std::string("--model: ") + e.what());
        }
    }();
    if (a.density_target) check_range("--density", *a.density_target, 0.0, 1.0, true, true);
    if (a.reciprocity_target) check_range("--reciprocity", *a.reciprocity_target, 0.0, 1.0, false, false);
    const SolverConfig solver = solver_from(a.solver.max_iterations, a.solver.residual_tolerance, a.solver.step_tolerance);
    std::optional<DirectedNetwork> net;
    if (!a.network.empty()) net = network_from_json(read_json(a.network));

    timer.phase("fit");
    std::optional<FittedModel> model;
    if (kind == ModelKind::FDCM || kind == ModelKind::FGRM) {
        FitnessData f;
        if (!a.fitness.empty()) {
            f = load_fitness(a.fitness);
            if (net) f = align_fitness(f, net->labels());
        } else if (net) {
            f = fitness_from_strengths(*net);
        } else {
            fail(ErrorKind::configuration, "fit needs --fitness or a weighted --network");
        }
        const double d = a.density_target ? *a.density_target : net ? density(*net) : std::nan("");
        if (!std::isfinite(d)) fail(ErrorKind::configuration, "--density is required without --network");
        if (kind == ModelKind::FDCM) model = fit_fdcm(f, d, solver);
        else {
            const double r = a.reciprocity_target ? *a.reciprocity_target : net ? reciprocity(*net) : std::nan("");
            if (!std::isfinite(r)) fail(ErrorKind::configuration, "--reciprocity is required without --network");
            model = fit_fgrm(f, d, r, solver);
        }
    } else {
        if (!net) fail(ErrorKind::configuration, "degree models need --network");
        model = fit_degree_model(kind, constraints_from_network(*net), solver);
    }
    out.json("fitted.json", to_json(*model));
    Json summary;
    summary["kind"] = std::string(to_string(model->kind()));
    summary["params"] = to_json(*model)["params"];
    if (model->kind() == ModelKind::DCM || model->kind() == ModelKind::RCM || model->kind() == ModelKind::GRM)
        summary.erase("params");
    summary["expected"] = expected_json(*model);
    summary["iterations"] = model->report().iterations;
    summary["residual_norm"] = detail::number(model->report().residual_norm);
    return summary;
}

struct SampleArgs {
    std::string model_file, observed;
    std::size_t samples = 1000;
    bool lambda_max = true;
    bool save_networks = true;
};

Json run_sample(const SampleArgs& a, const Common& c, unsigned threads, Outputs& out, Timer& timer) {
    if (a.samples == 0) fail(ErrorKind::configuration, "--samples must be at least 1");
    const Json model_json = read_json(a.model_file);
    const FittedModel model = model_from_json(model_json);
    const EnsembleConfig cfg{a.samples, c.seed};
    timer.phase("sample");
    const auto nets = sample_ensemble(model, cfg, threads);
    timer.phase("summarize");
    const EnsembleSummary s = summarize_ensemble(nets, threads, a.lambda_max);
    Json ensemble = to_json(s);
    ensemble["seed"] = c.seed;
    ensemble["expected"] = expected_json(model);
    if (!a.observed.empty()) {
        const DirectedNetwork obs = network_from_json(read_json(a.observed));
        if (obs.size() != model.size()) fail(ErrorKind::validation, "observed network size differs from the model");
        const double lambda = leading_eigenvalue(obs);
        Json o = metrics_json(obs);
        o["lambda_max"] = lambda;
        if (a.lambda_max && s.lambda_max.size() > 1) o["z_score"] = detail::number(z_score(lambda, s.lambda_max));
        ensemble["observed"] = o;
    }
    out.json("ensemble.json", ensemble);
    if (a.save_networks) {
        timer.phase("write samples");
        Json index;
        index["model"] = model_json;
        index["seed"] = c.seed;
        index["samples"] = a.samples;
        Json files = Json::array();
        char name[64];
        for (std::size_t k = 0; k < nets.size(); ++k) {
            std::snprintf(name, sizeof name, "sample_%06zu.json", k);
            out.json(std::string("samples/") + name, to_json(nets[k]));
            files.push_back(name);
        }
        index["files"] = files;
        out.json("samples/index.json", index);
    }
    Json summary{{"samples", s.samples},
                 {"mean_density", detail::number(s.mean_density)},
                 {"mean_reciprocity", detail::number(s.mean_reciprocity)}};
    if (ensemble.contains("observed") && ensemble["observed"].contains("z_score"))
        summary["z_score"] = ensemble["observed"]["z_score"];
    return summary;
}

struct SpectraArgs {
    std::string networks, network, model_file;
    bool rescale = false;
};

Json run_spectra(const SpectraArgs& a, unsigned threads, Outputs& out, Timer& timer) {
    if (a.networks.empty() == a.network.empty()) fail(ErrorKind::configuration, "give exactly one of --networks or --network");
    timer.phase("load");
    std::vector<std::string> paths;
    std::optional<Json> model_json;
    if (!a.network.empty()) paths.push_back(a.network);
    else {
        const fs::path dir(a.networks);
        if (!fs::is_directory(dir)) fail(ErrorKind::io, "not a directory: " + a.networks);
        if (fs::exists(dir / "index.json")) {
            const Json index = read_json((dir / "index.json").string());
            for (const auto& f : index.at("files")) paths.push_back((dir / f.get<std::string>()).string());
            if (index.contains("model")) model_json = index.at("model");
        } else {
            for (const auto& e : fs::directory_iterator(dir))
                if (e.path().extension() == ".json") paths.push_back(e.path().string());
            std::sort(paths.begin(), paths.end());
        }
    }
    if (paths.empty()) fail(ErrorKind::insufficient_data, "no networks to analyze");
    if (!a.model_file.empty()) model_json = read_json(a.model_file);
    std::optional<FittedModel> model;
    if (model_json) model = model_from_json(*model_json);
    if (a.rescale && !model) fail(ErrorKind::configuration, "--rescale needs --model-file or a samples index with a model");

    std::vector<DirectedNetwork> nets(paths.size());
    parallel_for(paths.size(), threads, [&](std::size_t k) { nets[k] = network_from_json(read_json(paths[k])); });
    timer.phase("eigenvalues");
    std::vector<Spectrum> spectra(nets.size());
    parallel_for(nets.size(), threads, [&](std::size_t k) {
        if (model && nets[k].size() != model->size()) fail(ErrorKind::validation, paths[k] + ": size differs from the model");
        spectra[k] = eigenvalues(a.rescale ? rescale_matrix(nets[k], *model) : nets[k].adjacency_matrix());
    });
    out.stream("spectra.csv", [&](std::ostream& s) { write_spectra_csv(s, spectra); });

    timer.phase("shape");
    Json bulk;
    bulk["matrix"] = a.rescale ? "rescaled" : "adjacency";
    bulk["networks"] = nets.size();
    std::vector<double> leading;
    for (const auto& s : spectra) leading.push_back(leading_eigenvalue(s));
    bulk["leading_eigenvalue"] = detail::numbers(leading);
    std::optional<TauMatrix> tau;
    if (model) tau = tau_matrix(*model);
    try {
        bulk["bulk"] = to_json(bulk_shape(spectra, tau ? &*tau : nullptr));
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::insufficient_data) throw;
        bulk["bulk"] = nullptr;
    }
    if (tau) {
        const auto values = tau->upper_values();
        bulk["tau"] = {{"defined_dyads", values.size()}, {"mean", detail::number(tau->mean())}};
    }
    out.json("bulk.json", bulk);

    const std::vector<std::vector<Spectrum>> series = {spectra};
    svg::ScatterOptions opt;
    opt.title = a.rescale ? "Bulk of the rescaled spectra" : "Adjacency spectra";
    opt.drop_leading = a.rescale;
    if (a.rescale && tau && std::isfinite(tau->mean())) opt.ellipse_tau = tau->mean();
    const std::vector<std::string> names = {a.rescale ? "rescaled J" : "A"};
    out.figure("spectra.svg", svg::spectrum_scatter(series, names, opt));
    if (tau) out.figure("tau_histogram.svg", svg::tau_histogram(tau->upper_values()));
    Json summary{{"networks", nets.size()}, {"matrix", bulk["matrix"]}};
    if (!bulk["bulk"].is_null()) summary["axis_ratio"] = bulk["bulk"]["axis_ratio"];
    return summary;
}

struct ScanArgs {
    std::string transactions, fitness, years, deltas = "1,2,5,10,20,50,100,250";
    SolverArgs solver;
};

Json run_scan(const ScanArgs& a, unsigned threads, Outputs& out, Timer& timer) {
    const auto deltas = parse_deltas(a.deltas);
    ScanOptions opt;
    opt.solver = solver_from(a.solver.max_iterations, a.solver.residual_tolerance, a.solver.step_tolerance);
    opt.threads = threads;
    if (!a.fitness.empty()) opt.fitness = load_fitness(a.fitness);
    timer.phase("load");
    const auto records = load_transactions(a.transactions);
    std::vector<int> years = parse_years(a.years);
    if (years.empty()) {
        std::set<int> all;
        for (const auto& r : records) all.insert(r.date.year);
        years.assign(all.begin(), all.end());
    }
    timer.phase("scan");
    std::vector<RhoScanResult> scans;
    for (int y : years) scans.push_back(scan_aggregations(records, y, deltas, opt));
    Json all = Json::array();
    for (const auto& s : scans) all.push_back(to_json(s));
    out.json("rho_scan.json", all);
    out.stream("rho_scan.csv", [&](std::ostream& s) { write_rho_scan_csv(s, scans); });
    out.stream("rho_scan_windows.csv", [&](std::ostream& s) { write_rho_windows_csv(s, scans); });
    out.figure("rho_scan.svg", svg::rho_curve(scans));
    Json summary = Json::array();
    for (const auto& s : scans) {
        Json e;
        e["year"] = s.year;
        std::size_t failed = 0;
        for (const auto& r : s.rows) failed += r.failed;
        e["failed_windows"] = failed;
        e["extrema"] = to_json(s)["extrema"];
        summary.push_back(e);
    }
    return summary;
}

struct ValidateArgs {
    std::string model_file, network;
};

Json run_validate(const ValidateArgs& a, Outputs& out, Timer& timer) {
    timer.phase("validate");
    const FittedModel model = model_from_json(read_json(a.model_file));
    const DirectedNetwork net = network_from_json(read_json(a.network));
    if (net.size() != model.size()) fail(ErrorKind::validation, "network size differs from the model");
    const RocResult roc = roc_auc(model, net);
    const CrossEntropy ce = cross_entropy(model, net);
    Json v;
    v["model"] = std::string(to_string(model.kind()));
    v["observed"] = metrics_json(net);
    v["expected"] = expected_json(model);
    v["auc"] = roc.auc;
    v["cross_entropy"] = to_json(ce);
    const ExpectedMetrics e = expected_metrics(model);
    v["rho"] = net.link_count() && e.reciprocity < 1.0 ? Json(rho(reciprocity(net), e.reciprocity)) : Json(nullptr);
    v["lambda_max"] = leading_eigenvalue(net);
    out.json("validation.json", v);
    out.stream("roc.csv", [&](std::ostream& s) { write_roc_csv(s, roc); });
    out.figure("roc.svg", svg::roc_curve(roc));
    return {{"auc", roc.auc}, {"cross_entropy", v["cross_entropy"]["value"]}, {"rho", v["rho"]}};
}

std::string num(const Json& j) {
    if (j.is_null()) return "n/a";
    if (j.is_number_float()) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.6g", j.get<double>());
        return buf;
    }
    return j.dump();
}

Json run_report(const std::string& dir, Outputs& out, Timer& timer) {
    timer.phase("report");
    const fs::path in(dir);
    if (!fs::is_directory(in)) fail(ErrorKind::io, "not a directory: " + dir);
    auto maybe = [&](const char* name) -> std::optional<Json> {
        if (!fs::exists(in / name)) return std::nullopt;
        return read_json((in / name).string());
    };
    std::ostringstream md;
    md << "# recon-net report\n\n";
    std::vector<std::string> sections;
    if (const auto f = maybe("fitted.json")) {
        sections.push_back("fitted");
        md << "## Fitted model\n\n- kind: " << f->at("kind").get<std::string>() << "\n- nodes: " << num(f->at("nodes"))
           << '\n';
        for (const auto& [k, v] : f->at("params").items())
            if (v.is_number()) md << "- " << k << ": " << num(v) << '\n';
        md << "- solver iterations: " << num(f->at("report").at("iterations")) << "\n\n";
    }
    if (const auto e = maybe("ensemble.json")) {
        sections.push_back("ensemble");
        md << "## Ensemble\n\n| quantity | mean | sd |\n|---|---|---|\n";
        md << "| density | " << num(e->at("mean_density")) << " | " << num(e->at("std_density")) << " |\n";
        md << "| reciprocity | " << num(e->at("mean_reciprocity")) << " | " << num(e->at("std_reciprocity")) << " |\n";
        if (e->contains("mean_lambda_max"))
            md << "| lambda_max | " << num(e->at("mean_lambda_max")) << " | " << num(e->at("std_lambda_max")) << " |\n";
        if (e->contains("observed") && e->at("observed").contains("z_score"))
            md << "\nObserved lambda_max z-score: " << num(e->at("observed").at("z_score")) << '\n';
        md << '\n';
    }
    if (const auto b = maybe("bulk.json")) {
        sections.push_back("bulk");
        md << "## Spectra (" << b->at("matrix").get<std::string>() << ")\n\n- networks: " << num(b->at("networks"))
           << '\n';
        if (!b->at("bulk").is_null())
            md << "- semi-axes: " << num(b->at("bulk").at("semi_axis_re")) << " (Re), "
               << num(b->at("bulk").at("semi_axis_im")) << " (Im)\n- axis ratio: " << num(b->at("bulk").at("axis_ratio"))
               << '\n';
        if (b->contains("tau")) md << "- mean tau: " << num(b->at("tau").at("mean")) << '\n';
        md << '\n';
    }
    if (const auto s = maybe("rho_scan.json")) {
        sections.push_back("rho_scan");
        md << "## Aggregation scan\n\n| year | rho_min | t_min | t_0 | t_max | rho_max |\n|---|---|---|---|---|---|\n";
        for (const auto& y : *s) {
            const Json& e = y.at("extrema");
            if (e.is_null()) md << "| " << num(y.at("year")) << " | n/a | n/a | n/a | n/a | n/a |\n";
            else
                md << "| " << num(y.at("year")) << " | " << num(e.at("rho_min")) << " | " << num(e.at("t_min")) << " | "
                   << num(e.at("t_0")) << " | " << num(e.at("t_max")) << " | " << num(e.at("rho_max")) << " |\n";
        }
        md << '\n';
    }
    if (const auto v = maybe("validation.json")) {
        sections.push_back("validation");
        md << "## Validation\n\n- AUC: " << num(v->at("auc")) << "\n- cross-entropy per dyad: "
           << num(v->at("cross_entropy").at("value")) << "\n- rho: " << num(v->at("rho")) << "\n\n";
    }
    if (sections.empty()) fail(ErrorKind::insufficient_data, "no known artifacts in " + dir);
    out.text("report.md", md.str());
    return {{"sections", sections}};
}

/// argv with the subcommand's --config values spliced in ahead of the
/// user's flags; options take the last value given, so flags win.
std::vector<std::string> expand_config(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    std::string path;
    for (std::size_t k = 0; k < args.size(); ++k) {
        if (args[k] == "--config" && k + 1 < args.size()) path = args[k + 1];
        else if (args[k].rfind("--config=", 0) == 0) path = args[k].substr(9);
    }
    if (path.empty() || args.empty()) return args;
    Json cfg;
    try {
        cfg = Json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::configuration, "--config " + path + ": " + e.what());
    } catch (const Error& e) {
        fail(ErrorKind::configuration, e.what());
    }
    if (!cfg.is_object()) fail(ErrorKind::configuration, "--config " + path + ": expected a JSON object");
    std::vector<std::string> spliced;
    for (const auto& [key, value] : cfg.items()) {
        const std::string flag = "--" + key;
        if (value.is_boolean()) spliced.push_back(flag + (value.get<bool>() ? "" : "=false"));
        else if (value.is_array()) {
            std::string joined;
            for (const auto& v : value) joined += (joined.empty() ? "" : ",") + (v.is_string() ? v.get<std::string>() : v.dump());
            spliced.push_back(flag);
            spliced.push_back(joined);
        } else if (value.is_null()) {
            continue;
        } else {
            spliced.push_back(flag);
            spliced.push_back(value.is_string() ? value.get<std::string>() : value.dump());
        }
    }
    args.insert(args.begin() + 1, spliced.begin(), spliced.end());
    return args;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"recon-net: fitness-induced network reconstruction"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    Common common;
    SynthArgs synth;
    auto* s_synth = app.add_subcommand("synth", "Generate synthetic fitness and transaction data");
    s_synth->add_option("--nodes", synth.nodes, "Number of banks")->capture_default_str();
    s_synth->add_option("--distribution", synth.distribution, "lognormal:MU,SIGMA | pareto:ALPHA,XMIN | constant:C")
        ->capture_default_str();
    s_synth->add_option("--fitness", synth.fitness, "Use this fitness file instead of drawing one")->check(CLI::ExistingFile);
    s_synth->add_option("--stream", synth.stream, "Transaction stream: none, fdcm or fgrm")->capture_default_str();
    s_synth->add_option("--rate", synth.rate, "fdcm: loan intensity scale; fgrm: daily u")->capture_default_str();
    s_synth->add_option("--v", synth.v, "fgrm stream reciprocity parameter")->capture_default_str();
    s_synth->add_option("--year", synth.year, "Calendar year of the stream")->capture_default_str();
    s_synth->add_option("--days", synth.days, "Trading days")->capture_default_str();
    s_synth->add_option("--amount-sigma", synth.amount_sigma, "Log-normal loan size spread")->capture_default_str();
    add_common(s_synth, common);

    AggregateArgs agg;
    auto* s_agg = app.add_subcommand("aggregate", "Aggregate transactions into one window network");
    s_agg->add_option("--transactions", agg.transactions, "Transactions CSV")->required()->check(CLI::ExistingFile);
    s_agg->add_option("--year", agg.year, "Calendar year")->required();
    s_agg->add_option("--delta-t", agg.delta_t, "Window length in trading days (0: whole year)")->capture_default_str();
    s_agg->add_option("--window", agg.window, "Window index")->capture_default_str();
    add_common(s_agg, common);

    FitArgs fit;
    double density_target = std::nan(""), reciprocity_target = std::nan("");
    auto* s_fit = app.add_subcommand("fit", "Fit a model to density/reciprocity or degree targets");
    s_fit->add_option("--model", fit.model, "fdcm, fgrm, dcm, grm or rcm")->capture_default_str();
    s_fit->add_option("--fitness", fit.fitness, "Fitness CSV (node,assets,liabilities)")->check(CLI::ExistingFile);
    s_fit->add_option("--network", fit.network, "Observed network JSON")->check(CLI::ExistingFile);
    auto* o_density = s_fit->add_option("--density", density_target, "Target density");
    auto* o_recip = s_fit->add_option("--reciprocity", reciprocity_target, "Target reciprocity (fgrm)");
    add_solver(s_fit, fit.solver);
    add_common(s_fit, common);

    SampleArgs sample;
    auto* s_sample = app.add_subcommand("sample", "Sample an ensemble from a fitted model");
    s_sample->add_option("--model-file", sample.model_file, "fitted.json")->required()->check(CLI::ExistingFile);
    s_sample->add_option("--samples", sample.samples, "Ensemble size")->capture_default_str();
    s_sample->add_option("--observed", sample.observed, "Observed network JSON for the lambda_max z-score")
        ->check(CLI::ExistingFile);
    s_sample->add_flag("--lambda-max,!--no-lambda-max", sample.lambda_max, "Leading eigenvalue per sample");
    s_sample->add_flag("--save-networks,!--no-save-networks", sample.save_networks, "Write samples/ directory");
    add_common(s_sample, common);

    SpectraArgs spectra;
    auto* s_spec = app.add_subcommand("spectra", "Eigenvalues of sampled or observed networks");
    s_spec->add_option("--networks", spectra.networks, "Directory of network JSON files");
    s_spec->add_option("--network", spectra.network, "Single network JSON")->check(CLI::ExistingFile);
    s_spec->add_option("--model-file", spectra.model_file, "Model for rescaling and tau")->check(CLI::ExistingFile);
    s_spec->add_flag("--rescale", spectra.rescale, "Use (a - p) / sqrt(N p (1 - p)) instead of the adjacency");
    add_common(s_spec, common);

    ScanArgs scan;
    auto* s_scan = app.add_subcommand("scan", "rho_F-DCM across aggregation periods");
    s_scan->add_option("--transactions", scan.transactions, "Transactions CSV")->required()->check(CLI::ExistingFile);
    s_scan->add_option("--year", scan.years, "Year or comma list (default: every year in the data)");
    s_scan->add_option("--delta-t", scan.deltas, "Periods: list and ranges, e.g. 1:20,50,100")->capture_default_str();
    s_scan->add_option("--fitness", scan.fitness, "External fitness CSV (default: window strengths)")
        ->check(CLI::ExistingFile);
    add_solver(s_scan, scan.solver);
    add_common(s_scan, common);

    ValidateArgs val;
    auto* s_val = app.add_subcommand("validate", "ROC/AUC and cross-entropy of a model against a network");
    s_val->add_option("--model-file", val.model_file, "fitted.json")->required()->check(CLI::ExistingFile);
    s_val->add_option("--network", val.network, "Observed network JSON")->required()->check(CLI::ExistingFile);
    add_common(s_val, common);

    std::string report_dir;
    auto* s_rep = app.add_subcommand("report", "Markdown summary of the artifacts in a directory");
    s_rep->add_option("--dir", report_dir, "Directory to summarize (default: --out)");
    add_common(s_rep, common);

    try {
        try {
            auto args = expand_config(argc, argv);
            std::reverse(args.begin(), args.end());
            app.parse(std::move(args));
        } catch (const CLI::ParseError& e) {
            return app.exit(e) == 0 ? 0 : 1;
        }
        if (o_density->count()) fit.density_target = density_target;
        if (o_recip->count()) fit.reciprocity_target = reciprocity_target;

        CLI::App* sub = app.get_subcommands().front();
        const unsigned threads = resolve_threads(common.threads);
        Outputs out(common.out);
        Timer timer;
        Json summary;
        if (sub == s_synth) summary = run_synth(synth, common, out, timer);
        else if (sub == s_agg) summary = run_aggregate(agg, out, timer);
        else if (sub == s_fit) summary = run_fit(fit, out, timer);
        else if (sub == s_sample) summary = run_sample(sample, common, threads, out, timer);
        else if (sub == s_spec) summary = run_spectra(spectra, threads, out, timer);
        else if (sub == s_scan) summary = run_scan(scan, threads, out, timer);
        else if (sub == s_val) summary = run_validate(val, out, timer);
        else summary = run_report(report_dir.empty() ? common.out : report_dir, out, timer);

        out.text("timings.txt", timer.report(threads), false);
        Json manifest;
        manifest["tool"] = "recon-net";
        manifest["version"] = kVersion;
        manifest["config"] = effective_config(sub);
        manifest["summary"] = summary;
        manifest["outputs"] = out.listing();
        manifest["figures"] = out.figure_listing();
        manifest["timings"] = "timings.txt";
        out.json("manifest.json", manifest);
        std::cout << summary.dump() << '\n';
        return 0;
    } catch (const NonConvergenceError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const Error& e) {
        std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
