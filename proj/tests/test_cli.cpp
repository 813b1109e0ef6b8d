#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

namespace fs = std::filesystem;

namespace {

struct Table {
    std::vector<std::string> meta;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    std::size_t col(const std::string& name) const {
        for (std::size_t i = 0; i < columns.size(); ++i) {
            if (columns[i] == name) return i;
        }
        throw std::runtime_error("no column " + name);
    }
};

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

Table read_csv(const fs::path& path) {
    std::ifstream in(path);
    Table t;
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind("# ", 0) == 0) {
            t.meta.push_back(line);
        } else if (t.columns.empty()) {
            t.columns = split(line);
        } else {
            t.rows.push_back(split(line));
        }
    }
    return t;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() / ("ergocap_cli_" + std::to_string(::getpid()) + "_" +
                                            ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    int run(const std::string& args) {
        const std::string cmd = std::string(ERGOCAP_CLI_PATH) + " " + args + " > " + (dir_ / "stdout.txt").string() +
                                " 2> " + (dir_ / "stderr.txt").string();
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }

    fs::path write_spec(const std::string& name, const std::string& text) {
        const auto p = dir_ / name;
        std::ofstream(p) << text;
        return p;
    }

    std::string config(const std::string& name) { return std::string(ERGOCAP_CONFIG_DIR) + "/" + name; }

    fs::path dir_;
};

const char* kSmall = R"(
[network]
lambda = 0.002
d = 5.0
alpha = 3.0
beta = 2.0

[channel]
states = [0.5, 2.0]
invariant = [0.5, 0.5]

[mc]
trials = 3000
seed = 5
window_radius = 60.0
)";

}  // namespace

TEST_F(Cli, SweepDeltaProducesMonotoneGaps) {
    ASSERT_EQ(run("sweep-delta --spec " + config("fig1.toml") + " --out " + dir_.string() + " --trials 2000"), 0);
    const auto t = read_csv(dir_ / "sweep-delta.csv");
    EXPECT_EQ(t.columns, (std::vector<std::string>{"delta", "state", "lower", "upper", "gap", "q_hat", "stderr"}));
    ASSERT_EQ(t.rows.size(), 26u);
    std::map<std::string, double> prev;
    for (const auto& r : t.rows) {
        const double gap = std::stod(r[t.col("gap")]);
        const auto it = prev.find(r[1]);
        if (it != prev.end()) {
            EXPECT_LE(gap, it->second);
        }
        prev[r[1]] = gap;
    }
    bool has_seed = false, has_git = false;
    for (const auto& m : t.meta) {
        has_seed = has_seed || m.rfind("# seed: ", 0) == 0;
        has_git = has_git || m.rfind("# git_describe: ", 0) == 0;
        EXPECT_EQ(m.find("thread"), std::string::npos);
    }
    EXPECT_TRUE(has_seed);
    EXPECT_TRUE(has_git);
}

TEST_F(Cli, EmptySweepIsSinglePoint) {
    const auto spec = write_spec("s.toml", std::string(kSmall) + "[sweep]\naxis = \"lambda\"\nvalues = []\n");
    ASSERT_EQ(run("bounds --spec " + spec.string() + " --out " + dir_.string()), 0);
    const auto t = read_csv(dir_ / "bounds.csv");
    ASSERT_EQ(t.rows.size(), 1u);
    EXPECT_EQ(t.columns.front(), "lambda");
    EXPECT_EQ(std::stod(t.rows[0][0]), 0.002);
}

TEST_F(Cli, BoundsColumnsReproducibleFromLoggedParameters) {
    const auto spec = write_spec("s.toml", kSmall);
    ASSERT_EQ(run("bounds --spec " + spec.string() + " --out " + dir_.string()), 0);
    const auto t = read_csv(dir_ / "bounds.csv");
    // nu = pi d^2 sum phi (delta beta s)^(2/3) at d = 5, delta beta = 2.
    const double nu = 3.14159265358979323846 * 25.0 * 0.5 * (1.0 + std::pow(4.0, 2.0 / 3.0));
    EXPECT_NEAR(std::stod(t.rows[0][t.col("nu")]), nu, 1e-12);
    const double lower1 = 1.0 - std::exp(-0.002 * (nu * std::pow(0.5, -2.0 / 3.0) - 3.14159265358979323846));
    EXPECT_NEAR(std::stod(t.rows[0][t.col("lower_1")]), lower1, 1e-14);
}

TEST_F(Cli, OutputsAreBitIdenticalAcrossThreadCounts) {
    const auto spec = write_spec("s.toml", kSmall);
    const auto a = dir_ / "a";
    const auto b = dir_ / "b";
    ASSERT_EQ(run("simulate --spec " + spec.string() + " --out " + a.string() + " --threads 1"), 0);
    ASSERT_EQ(run("simulate --spec " + spec.string() + " --out " + b.string() + " --threads 3"), 0);
    EXPECT_EQ(slurp(a / "simulate.csv"), slurp(b / "simulate.csv"));
    ASSERT_EQ(run("simulate --spec " + spec.string() + " --out " + b.string() + " --seed 6"), 0);
    EXPECT_NE(slurp(a / "simulate.csv"), slurp(b / "simulate.csv"));
}

TEST_F(Cli, ValidationErrorsExitWithOne) {
    const auto bad = write_spec("bad.toml", std::string(kSmall) + "[sweep]\naxis = \"zeta\"\n");
    EXPECT_EQ(run("bounds --spec " + bad.string() + " --out " + dir_.string()), 1);
    EXPECT_NE(slurp(dir_ / "stderr.txt").find("sweep.axis"), std::string::npos);
    EXPECT_EQ(run("bounds --out " + dir_.string()), 1);  // missing --spec
    EXPECT_EQ(run("nonsense"), 1);
    const auto caot = write_spec("c.toml", kSmall);
    EXPECT_EQ(run("etc-caot --spec " + caot.string() + " --out " + dir_.string()), 1);  // no [caot]
}

TEST_F(Cli, EtcWritesBoundsAndSearch) {
    const auto spec = write_spec("s.toml", std::string(kSmall) + "[sweep]\naxis = \"epsilon\"\nvalues = [0.1]\n");
    ASSERT_EQ(run("etc --spec " + spec.string() + " --out " + dir_.string() + " --trials 2000"), 0);
    const auto t = read_csv(dir_ / "etc.csv");
    ASSERT_EQ(t.rows.size(), 1u);
    const double lo = std::stod(t.rows[0][t.col("lambda_lo")]);
    const double hi = std::stod(t.rows[0][t.col("lambda_hi")]);
    const double hat = std::stod(t.rows[0][t.col("lambda_hat")]);
    EXPECT_LE(lo, hat);
    EXPECT_LE(hat, hi);
}

TEST_F(Cli, HelpExitsZero) { EXPECT_EQ(run("--help"), 0); }
