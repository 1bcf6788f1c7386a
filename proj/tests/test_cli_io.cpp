#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "bohm/cli_io.hpp"

namespace {

namespace fs = std::filesystem;
using namespace bohm;
using namespace bohm::cli;

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("bohm_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
        unsetenv("BOHM_OUTPUT_DIR");
    }
    void TearDown() override {
        unsetenv("BOHM_OUTPUT_DIR");
        fs::remove_all(dir_);
    }
    fs::path write_config(const std::string& text) {
        const auto p = dir_ / "config.json";
        std::ofstream(p) << text;
        return p;
    }
    int run(std::vector<std::string> args) {
        out_.str("");
        err_.str("");
        return run_cli(std::move(args), out_, err_);
    }
    fs::path dir_;
    std::ostringstream out_, err_;
};

TEST(Config, EmptyDocumentGivesReferenceDefaults) {
    const auto c = parse_config_text("{}");
    EXPECT_EQ(c.physics.mass, 1.0);
    EXPECT_EQ(c.physics.hbar, 1.0);
    EXPECT_EQ(c.physics.sigma0, 0.5);
    EXPECT_EQ(c.physics.half_separation, 5.0);
    EXPECT_EQ(c.scenario, Scenario::two_slit);
    EXPECT_EQ(c.swarm.n_trajectories, 200u);
}

TEST(Config, NegativeWidthNamesTheField) {
    try {
        parse_config_text(R"({"physics": {"sigma0": -1}})");
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.path(), "physics.sigma0");
    }
}

TEST(Config, UnknownAndIllTypedKeys) {
    auto path_of = [](const std::string& text) {
        try {
            parse_config_text(text);
        } catch (const ConfigError& e) {
            return e.path();
        }
        return std::string("<none>");
    };
    EXPECT_EQ(path_of(R"({"physics": {"sigma": 1}})"), "physics.sigma");
    EXPECT_EQ(path_of(R"({"colour": 1})"), "colour");
    EXPECT_EQ(path_of(R"({"grid": {"n_points": "many"}})"), "grid.n_points");
    EXPECT_EQ(path_of(R"({"grid": {"n_points": 0}})"), "grid.n_points");
    EXPECT_EQ(path_of(R"({"seed": -4})"), "seed");
    EXPECT_EQ(path_of(R"({"times": [1, "x"]})"), "times[1]");
    EXPECT_EQ(path_of(R"({"detection": {"counts": [10, 5]}})"), "detection.counts[1]");
    EXPECT_EQ(path_of(R"({"scenario": "three_slit"})"), "scenario");
    EXPECT_EQ(path_of(R"({"physics": {"center": 1}})"), "physics.center");
    EXPECT_EQ(path_of("{not json"), "<file>");
    EXPECT_EQ(path_of(R"({"scenario": "single_packet", "physics": {"center": 1}})"), "<none>");
}

TEST(Config, RoundTripsThroughJson) {
    RunConfig c;
    c.scenario = Scenario::single_packet;
    c.physics.sigma0 = 0.8;
    c.times = {1.0, 2.5};
    c.detection.counts = {7, 70};
    c.seed = 99;
    const auto back = config_from_json(to_json(c));
    EXPECT_EQ(to_json(back), to_json(c));
}

TEST(Output, SeventeenDigitsRoundTrip) {
    for (double v : {0.1, 1.0 / 3.0, -2.718281828459045, 1e-300, 6.02214076e23}) EXPECT_EQ(std::strtod(num(v).c_str(), nullptr), v);
    EXPECT_EQ(num(std::nan("")), "nan");
    EXPECT_EQ(fnv1a64(""), 14695981039346656037ULL);
    EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
}

TEST_F(CliTest, FlagBeatsFileBeatsDefault) {
    const auto cfg = write_config(R"({"physics": {"sigma0": 0.7, "mass": 2}, "grid": {"n_points": 5}})");
    ASSERT_EQ(run({"fields", "-c", cfg.string(), "--sigma0", "0.6", "-o", (dir_ / "out").string()}), 0) << err_.str();
    const auto manifest = json::parse(slurp(dir_ / "out" / "manifest_fields.json"));
    EXPECT_EQ(manifest["config"]["physics"]["sigma0"].get<double>(), 0.6);
    EXPECT_EQ(manifest["config"]["physics"]["mass"].get<double>(), 2.0);
    EXPECT_EQ(manifest["config"]["physics"]["hbar"].get<double>(), 1.0);
}

TEST_F(CliTest, OutputDirectoryPrecedence) {
    const auto cfg = write_config("{\"output_dir\": \"" + (dir_ / "from_file").string() + "\", \"grid\": {\"n_points\": 3}}");
    ASSERT_EQ(run({"fields", "-c", cfg.string()}), 0);
    EXPECT_TRUE(fs::exists(dir_ / "from_file" / "fields.csv"));
    setenv("BOHM_OUTPUT_DIR", (dir_ / "from_env").c_str(), 1);
    ASSERT_EQ(run({"fields", "-c", cfg.string()}), 0);
    EXPECT_TRUE(fs::exists(dir_ / "from_env" / "fields.csv"));
    ASSERT_EQ(run({"fields", "-c", cfg.string(), "-o", (dir_ / "from_flag").string()}), 0);
    EXPECT_TRUE(fs::exists(dir_ / "from_flag" / "fields.csv"));
}

TEST_F(CliTest, ConfigErrorsExitTwoWithMachineReadableLine) {
    EXPECT_EQ(run({"fields", "--n-points", "0", "-o", dir_.string()}), 2);
    const auto line = json::parse(err_.str());
    EXPECT_EQ(line["error"], "ConfigError");
    EXPECT_EQ(line["path"], "grid.n_points");
    EXPECT_EQ(run({"fields", "--sigma0", "-1", "-o", dir_.string()}), 2);
    EXPECT_EQ(json::parse(err_.str())["path"], "physics.sigma0");
    EXPECT_EQ(run({"teleport"}), 2);
    EXPECT_EQ(json::parse(err_.str())["error"], "UsageError");
    EXPECT_EQ(run({"fields", "-c", (dir_ / "missing.json").string()}), 2);
    const auto bad = write_config(R"({"physics": {"sigmaa": 1}})");
    EXPECT_EQ(run({"fields", "-c", bad.string()}), 2);
    EXPECT_EQ(json::parse(err_.str())["path"], "physics.sigmaa");
}

TEST_F(CliTest, ComputeErrorsExitOne) {
    // five grid points cannot resolve the fringes
    EXPECT_EQ(run({"analyze", "--n-points", "5", "-o", dir_.string()}), 1);
    EXPECT_EQ(json::parse(err_.str())["error"], "ResolutionError");
}

TEST_F(CliTest, HelpExitsZero) {
    EXPECT_EQ(run({"--help"}), 0);
    EXPECT_NE(out_.str().find("trajectories"), std::string::npos);
}

TEST_F(CliTest, FieldsSchemaAndValues) {
    ASSERT_EQ(run({"fields", "--times", "1", "10", "--n-points", "11", "-o", dir_.string()}), 0);
    std::istringstream csv(slurp(dir_ / "fields.csv"));
    std::string line;
    std::getline(csv, line);
    EXPECT_EQ(line, "x,t,rho,flux,velocity,Q,K");
    std::size_t rows = 0;
    const SuperpositionConfig s{};
    while (std::getline(csv, line)) {
        ++rows;
        double x, t, r, j, v, q, k;
        ASSERT_EQ(std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf,%lf,%lf", &x, &t, &r, &j, &v, &q, &k), 7);
        EXPECT_EQ(r, normalization_prefactor(s, t) * rho(s, x, t));
        EXPECT_EQ(v, velocity(s, x, t));
    }
    EXPECT_EQ(rows, 22u);
}

TEST_F(CliTest, NumericalFieldsAgreeWithClosedForms) {
    ASSERT_EQ(run({"fields", "--scenario", "single_packet", "--n-points", "21", "--times", "0.5", "-o",
                   (dir_ / "a").string()}),
              0);
    ASSERT_EQ(run({"fields", "--numerical", "--scenario", "single_packet", "--n-points", "21", "--times", "0.5", "-o",
                   (dir_ / "b").string()}),
              0);
    std::istringstream a(slurp(dir_ / "a" / "fields.csv")), b(slurp(dir_ / "b" / "fields.csv"));
    std::string la, lb;
    std::getline(a, la);
    std::getline(b, lb);
    int compared = 0;
    while (std::getline(a, la) && std::getline(b, lb)) {
        double xa[7], xb[7];
        std::sscanf(la.c_str(), "%lf,%lf,%lf,%lf,%lf,%lf,%lf", xa, xa + 1, xa + 2, xa + 3, xa + 4, xa + 5, xa + 6);
        std::sscanf(lb.c_str(), "%lf,%lf,%lf,%lf,%lf,%lf,%lf", xb, xb + 1, xb + 2, xb + 3, xb + 4, xb + 5, xb + 6);
        if (std::isnan(xb[4])) continue;  // density below the floor far out
        EXPECT_NEAR(xa[4], xb[4], 1e-6 * std::max(1.0, std::abs(xa[4])));
        ++compared;
    }
    EXPECT_GT(compared, 5);
}

TEST_F(CliTest, DeterministicArtifacts) {
    for (const char* sub : {"a", "b"}) {
        const auto out = (dir_ / sub).string();
        ASSERT_EQ(run({"trajectories", "--n-trajectories", "20", "--seed", "5", "-o", out}), 0);
        ASSERT_EQ(run({"detect", "--counts", "100", "5000", "--seed", "5", "-o", out}), 0);
        ASSERT_EQ(run({"analyze", "-o", out}), 0);
    }
    for (const char* f : {"trajectories.csv", "trajectory_status.csv", "non_crossing.csv", "frames.csv", "frame_000.csv",
                          "frame_001.csv", "extrema.csv", "ladder.csv", "energy.csv"})
        EXPECT_EQ(slurp(dir_ / "a" / f), slurp(dir_ / "b" / f)) << f;
    ASSERT_EQ(run({"detect", "--counts", "100", "5000", "--seed", "6", "-o", (dir_ / "c").string()}), 0);
    EXPECT_NE(slurp(dir_ / "a" / "frame_001.csv"), slurp(dir_ / "c" / "frame_001.csv"));
}

TEST_F(CliTest, ManifestChecksumsMatchFiles) {
    ASSERT_EQ(run({"detect", "--counts", "10", "20", "-o", dir_.string()}), 0);
    const auto m = json::parse(slurp(dir_ / "manifest_detect.json"));
    EXPECT_EQ(m["subcommand"], "detect");
    ASSERT_EQ(m["artifacts"].size(), 3u);
    for (const auto& a : m["artifacts"]) {
        const auto bytes = slurp(dir_ / a["file"].get<std::string>());
        char hex[17];
        std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(fnv1a64(bytes)));
        EXPECT_EQ(a["fnv1a64"], hex);
        EXPECT_EQ(a["bytes"].get<std::size_t>(), bytes.size());
    }
}

TEST_F(CliTest, TrajectoriesReportNonCrossing) {
    ASSERT_EQ(run({"trajectories", "--n-trajectories", "30", "-o", dir_.string()}), 0);
    const auto nc = slurp(dir_ / "non_crossing.csv");
    EXPECT_EQ(nc.substr(0, nc.find('\n')),
              "ordered,checked_times,first_violation_t,lower_id,upper_id,side_confined,completed,total");
    EXPECT_NE(nc.find("\ntrue,101,,,,true,30,30"), std::string::npos) << nc;
}

TEST_F(CliTest, VerifyExitCodeMatchesReport) {
    const int code = run({"verify", "-o", dir_.string()});
    const auto report = slurp(dir_ / "verify.csv");
    ASSERT_FALSE(report.empty());
    std::size_t lines = 0;
    for (char ch : report) lines += ch == '\n';
    EXPECT_EQ(lines, 12u);  // header + 11 checks
    const bool any_failed = report.find(",false,") != std::string::npos;
    EXPECT_EQ(code, any_failed ? 3 : 0);
    if (any_failed) {
        EXPECT_EQ(json::parse(err_.str().substr(0, err_.str().find('\n')))["error"], "VerifyFailure");
    }
}

}  // namespace
