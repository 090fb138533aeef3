#include "recon_net/recon_net.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

namespace fs = std::filesystem;
using namespace recon_net;

namespace {

class Cli : public testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() / ("recon_net_cli_" + std::string(testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    int run(const std::string& args) const {
        const std::string cmd = std::string(RECON_NET_CLI) + " " + args + " > " + path("stdout.txt") + " 2> " + path("stderr.txt");
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }

    std::string slurp(const std::string& name) const {
        std::ifstream in(path(name), std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    void write(const std::string& name, const std::string& content) const {
        std::ofstream(path(name), std::ios::binary) << content;
    }

    void write_unit_fitness(std::size_t n) const {
        std::ostringstream ss;
        FitnessData f;
        f.assets.assign(n, 1.0);
        f.liabilities.assign(n, 1.0);
        f.labels = default_labels(n);
        write_fitness_csv(ss, f);
        write("unit.csv", ss.str());
    }

    fs::path dir_;
};

}  // namespace

TEST_F(Cli, FitClosedFormFixture) {
    write_unit_fitness(6);
    ASSERT_EQ(run("fit --fitness " + path("unit.csv") + " --model fgrm --density 0.5 --reciprocity 0.8 --out " + path("o")), 0)
        << slurp("stderr.txt");
    const Json m = Json::parse(slurp("o/manifest.json"));
    EXPECT_NEAR(m["summary"]["params"]["u"].get<double>(), 0.25, 1e-6);
    EXPECT_NEAR(m["summary"]["params"]["v"].get<double>(), 4.0, 1e-6);
    EXPECT_EQ(m["outputs"][0]["file"], "fitted.json");
    const FittedModel fitted = model_from_json(Json::parse(slurp("o/fitted.json")));
    EXPECT_NEAR(fitted.params_as<FgrmParams>().v, 4.0, 1e-6);
    EXPECT_TRUE(fs::exists(path("o/timings.txt")));
}

TEST_F(Cli, OutOfRangeDensityIsConfigError) {
    write_unit_fitness(4);
    EXPECT_EQ(run("fit --fitness " + path("unit.csv") + " --density 1.2 --reciprocity 0.5 --out " + path("o")), 1);
    EXPECT_NE(slurp("stderr.txt").find("--density"), std::string::npos);
    EXPECT_EQ(run("fit --fitness " + path("unit.csv") + " --density 0.2 --reciprocity -1 --out " + path("o")), 1);
    EXPECT_NE(slurp("stderr.txt").find("--reciprocity"), std::string::npos);
}

TEST_F(Cli, UsageErrorsExitOne) {
    EXPECT_EQ(run(""), 1);
    EXPECT_EQ(run("frobnicate"), 1);
    EXPECT_EQ(run("fit --fitness " + path("missing.csv") + " --density 0.2"), 1);
    EXPECT_EQ(run("fit --help"), 0);
}

TEST_F(Cli, DataErrorsExitTwo) {
    write("bad.csv", "date,lender,borrower,amount\n2000-01-03,A,B,-1\n");
    EXPECT_EQ(run("scan --transactions " + path("bad.csv") + " --out " + path("o")), 2);
    EXPECT_NE(slurp("stderr.txt").find("line 2"), std::string::npos);
}

TEST_F(Cli, NonConvergenceExitsThreeWithReport) {
    write_unit_fitness(4);
    EXPECT_EQ(run("fit --fitness " + path("unit.csv") + " --density 0.9 --reciprocity 0.1 --out " + path("o")), 3);
    const std::string err = slurp("stderr.txt");
    EXPECT_NE(err.find("iterations="), std::string::npos);
    EXPECT_NE(err.find("residual_norm="), std::string::npos);
}

TEST_F(Cli, ConfigFileWithFlagOverride) {
    write_unit_fitness(5);
    write("cfg.json", "{\"model\": \"fgrm\", \"fitness\": \"" + path("unit.csv") + "\", \"density\": 0.5, \"reciprocity\": 0.8}");
    ASSERT_EQ(run("fit --config " + path("cfg.json") + " --reciprocity 0.5 --out " + path("o")), 0) << slurp("stderr.txt");
    const Json m = Json::parse(slurp("o/manifest.json"));
    EXPECT_NEAR(m["summary"]["params"]["v"].get<double>(), 1.0, 1e-6);
    EXPECT_EQ(m["config"]["options"]["reciprocity"], "0.5");
    write("bad.json", "{\"no-such-option\": 1}");
    EXPECT_EQ(run("fit --config " + path("bad.json")), 1);
}

TEST_F(Cli, ScanOnFdcmStreamStaysNearZero) {
    ASSERT_EQ(run("synth --nodes 40 --stream fdcm --rate 0.02 --days 100 --seed 11 --out " + path("s")), 0);
    ASSERT_EQ(run("scan --transactions " + path("s/transactions.csv") + " --fitness " + path("s/fitness.csv") +
                  " --delta-t 1,5,20 --out " + path("o")),
              0)
        << slurp("stderr.txt");
    std::istringstream csv(slurp("o/rho_scan.csv"));
    std::string line;
    std::getline(csv, line);
    EXPECT_EQ(line, "year,delta_t,windows,used,skipped_empty,failed,missing,density,reciprocity,r_fdcm,rho,rho_stderr");
    std::size_t rows = 0;
    while (std::getline(csv, line)) {
        const auto f = csv::split(line);
        ASSERT_EQ(f.size(), 12u);
        double rho = 0.0, se = 0.0;
        ASSERT_TRUE(csv::parse_double(f[10], rho));
        ASSERT_TRUE(csv::parse_double(f[11], se));
        EXPECT_LT(std::abs(rho), 4.0 * se) << line;
        ++rows;
    }
    EXPECT_EQ(rows, 3u);
    EXPECT_TRUE(fs::exists(path("o/rho_scan.svg")));
    EXPECT_TRUE(fs::exists(path("o/rho_scan_windows.csv")));
}

TEST_F(Cli, SampleSpectraValidateReportPipeline) {
    ASSERT_EQ(run("synth --nodes 30 --stream fgrm --rate 0.05 --v 3 --days 20 --seed 5 --out " + path("s")), 0);
    ASSERT_EQ(run("aggregate --transactions " + path("s/transactions.csv") + " --year 2000 --out " + path("a")), 0)
        << slurp("stderr.txt");
    ASSERT_EQ(run("fit --network " + path("a/network.json") + " --model fgrm --out " + path("o")), 0) << slurp("stderr.txt");
    ASSERT_EQ(run("sample --model-file " + path("o/fitted.json") + " --samples 20 --seed 42 --observed " +
                  path("a/network.json") + " --out " + path("o")),
              0)
        << slurp("stderr.txt");
    EXPECT_TRUE(fs::exists(path("o/samples/sample_000019.json")));
    const Json ens = Json::parse(slurp("o/ensemble.json"));
    EXPECT_EQ(ens["samples"], 20);
    EXPECT_TRUE(ens["observed"]["z_score"].is_number());
    ASSERT_EQ(run("spectra --networks " + path("o/samples") + " --rescale --out " + path("o")), 0) << slurp("stderr.txt");
    const Json bulk = Json::parse(slurp("o/bulk.json"));
    EXPECT_EQ(bulk["matrix"], "rescaled");
    EXPECT_GT(bulk["tau"]["mean"].get<double>(), 0.0);  // v > 1 in the generating stream
    EXPECT_TRUE(fs::exists(path("o/spectra.svg")));
    EXPECT_TRUE(fs::exists(path("o/tau_histogram.svg")));
    ASSERT_EQ(run("validate --model-file " + path("o/fitted.json") + " --network " + path("a/network.json") + " --out " +
                  path("o")),
              0)
        << slurp("stderr.txt");
    EXPECT_EQ(slurp("o/roc.csv").rfind("threshold,fpr,tpr\n", 0), 0u);
    ASSERT_EQ(run("report --out " + path("o")), 0) << slurp("stderr.txt");
    const std::string md = slurp("o/report.md");
    EXPECT_NE(md.find("## Fitted model"), std::string::npos);
    EXPECT_NE(md.find("## Validation"), std::string::npos);
}

TEST_F(Cli, ThreadEnvironmentOverrideKeepsBytes) {
    write_unit_fitness(20);
    ASSERT_EQ(run("fit --fitness " + path("unit.csv") + " --model fdcm --density 0.3 --out " + path("f")), 0);
    ASSERT_EQ(run("sample --model-file " + path("f/fitted.json") + " --samples 30 --threads 1 --out " + path("a")), 0);
    const std::string cmd = "RECON_NET_THREADS=3 " + std::string(RECON_NET_CLI) + " sample --model-file " +
                            path("f/fitted.json") + " --samples 30 --threads 1 --out " + path("b") + " > /dev/null";
    ASSERT_EQ(std::system(cmd.c_str()), 0);
    EXPECT_EQ(slurp("a/ensemble.json"), slurp("b/ensemble.json"));
    EXPECT_EQ(slurp("a/manifest.json"), slurp("b/manifest.json"));
    EXPECT_NE(slurp("b/timings.txt").find("threads 3"), std::string::npos);
}
