#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fdmlmc/config.hpp"
#include "fdmlmc/experiment.hpp"

using namespace fdmlmc;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("fdmlmc_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

// Data rows below the header, split on commas; the column-name row is dropped.
std::vector<std::vector<double>> csv_rows(const std::string& text) {
    std::vector<std::vector<double>> rows;
    std::istringstream in(text);
    std::string line;
    bool names = true;
    while (std::getline(in, line)) {
        if (line.empty() || line.front() == '#') continue;
        if (names) {
            names = false;
            continue;
        }
        std::vector<double> row;
        std::istringstream cells(line);
        std::string cell;
        while (std::getline(cells, cell, ',')) row.push_back(std::stod(cell));
        rows.push_back(row);
    }
    return rows;
}

int run_quiet(const ExperimentConfig& cfg) {
    std::ostringstream log;
    return run(cfg, log);
}

ExperimentConfig quick(Command command, const fs::path& out) {
    ExperimentConfig c;
    c.command = command;
    c.T = 0.2;
    c.output = out.string();
    c.workers = 1;
    return c;
}

} // namespace

TEST(Config, Defaults) {
    const auto c = parse_config("");
    EXPECT_EQ(c.command, Command::DetRun);
    EXPECT_EQ(c.lambda, 0.5);
    EXPECT_EQ(c.scheme, SchemeKind::Explicit);
    EXPECT_EQ(c.flux_speed, FluxSpeed::Interval);
    EXPECT_EQ(c.K, 5.0);
    EXPECT_EQ(c.N0, 41u);
    EXPECT_EQ(c.T, 1.0);
    EXPECT_EQ(c.Q, 30);
    EXPECT_EQ(c.dist, ParamDistribution{});
    EXPECT_EQ(c.ref_cells, 3321u);
}

TEST(Config, ParsesKeysCommentsAndBlankLines) {
    const auto c = parse_config("# experiment\n\ncommand = mlmc-run\nlambda = 1.5   # super-diffusive\n"
                                "scheme = explicit-implicit\nL = 3\nseed = 17\nflux_speed = endpoint\n");
    EXPECT_EQ(c.command, Command::MlmcRun);
    EXPECT_EQ(c.lambda, 1.5);
    EXPECT_EQ(c.scheme, SchemeKind::ExplicitImplicit);
    EXPECT_EQ(c.L, 3);
    EXPECT_EQ(c.seed, 17u);
    EXPECT_EQ(c.flux_speed, FluxSpeed::Endpoint);
    EXPECT_EQ(c.solver_config().flux_speed, FluxSpeed::Endpoint);
}

TEST(Config, RejectsCriticalOrderForEstimators) {
    EXPECT_THROW(parse_config("command = mlmc-run\nlambda = 1\n"), ConfigError);
    EXPECT_THROW(parse_config("command = table-repro\nlambda = 1\nL = 1\n"), ConfigError);
    EXPECT_NO_THROW(parse_config("command = det-run\nlambda = 1\n"));
    EXPECT_NO_THROW(parse_config("command = mc-run\nlambda = 1\nmc_samples = 4\n"));
    try {
        parse_config("command = mlmc-run\nlambda = 1\n");
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("lambda"), std::string::npos);
    }
}

TEST(Config, RejectsEvenCoarseGrid) {
    try {
        parse_config("N0 = 40\n");
        ADD_FAILURE() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("N0"), std::string::npos);
    }
}

TEST(Config, UnknownKeyReportsItsLine) {
    try {
        parse_config("lambda = 0.5\n\nlamda = 0.7\n");
        ADD_FAILURE() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.line(), 3u);
        EXPECT_NE(std::string(e.what()).find("lamda"), std::string::npos);
    }
}

TEST(Config, RejectsMalformedLines) {
    EXPECT_THROW(parse_config("lambda 0.5\n"), ConfigError);
    EXPECT_THROW(parse_config("= 0.5\n"), ConfigError);
    EXPECT_THROW(parse_config("lambda = 0.5\nlambda = 0.7\n"), ConfigError);
    EXPECT_THROW(parse_config("lambda = half\n"), ConfigError);
    EXPECT_THROW(parse_config("scheme = implicit\n"), ConfigError);
    EXPECT_THROW(parse_config("flux_speed = fast\n"), ConfigError);
    EXPECT_THROW(parse_config("lambda = 2\n"), ConfigError);
    EXPECT_THROW(parse_config("cfl = 1\n"), ConfigError);
    EXPECT_THROW(parse_config("mu_min = 0.8\n"), ConfigError);
}

TEST(Config, HeaderRoundTrip) {
    auto c = parse_config("command = table-repro\nlambda = 0.75\nscheme = explicit-implicit\nL = 2\n"
                          "c_min = 0.01\nalpha_max = 0.3\nepsilon = 0.123456789012345\nplan_only = true\n"
                          "flux_speed = endpoint\nworkers = 3\n");
    const auto header = emit_header(c);
    EXPECT_EQ(header.find("workers"), std::string::npos);
    const auto back = parse_header(header + metadata_line("cells", "369") + "x,value\n1,2\n");
    c.workers = back.workers;
    EXPECT_EQ(back, c);
}

TEST(Run, DetRunWritesOneRowPerCell) {
    const auto dir = scratch("det");
    ASSERT_EQ(run_quiet(quick(Command::DetRun, dir)), 0);
    const auto text = slurp(dir / "solution.csv");
    const auto rows = csv_rows(text);
    ASSERT_EQ(rows.size(), 41u);
    EXPECT_NEAR(rows.front()[0], -5.0 + 5.0 / 41.0, 1e-12);
    for (const auto& r : rows) {
        EXPECT_GE(r[1], 0.1 - 1e-12);
        EXPECT_LE(r[1], 0.85 + 1e-12);
    }
    EXPECT_NE(text.find("# @ cells: 41"), std::string::npos);
    EXPECT_EQ(parse_header(text).command, Command::DetRun);
}

TEST(Run, TableReproPlanOnly) {
    const auto dir = scratch("plan");
    auto c = quick(Command::TableRepro, dir);
    c.L = 4;
    c.plan_only = true;
    ASSERT_EQ(run_quiet(c), 0);
    const auto text = slurp(dir / "table.csv");
    EXPECT_NE(text.find("\n4,4169;429;63;10;2,3321,"), std::string::npos);
    EXPECT_NE(text.find("\n1,14;2,123,"), std::string::npos);
    EXPECT_NE(text.find("r1,r2_runtime,r2_runtime_raw,r2_work_model"), std::string::npos);
}

TEST(Run, DegenerateMlmcMatchesDeterministicRun) {
    const auto det_dir = scratch("degenerate_det"), mlmc_dir = scratch("degenerate_mlmc");
    auto det = quick(Command::DetRun, det_dir);
    det.L = 2;
    det.params = {0.03, 0.45, 0.1};
    ASSERT_EQ(run_quiet(det), 0);
    auto ml = quick(Command::MlmcRun, mlmc_dir);
    ml.L = 2;
    ml.dist = ParamDistribution::point(det.params);
    ASSERT_EQ(run_quiet(ml), 0);
    const auto a = csv_rows(slurp(det_dir / "solution.csv"));
    const auto b = csv_rows(slurp(mlmc_dir / "mean.csv"));
    ASSERT_EQ(a.size(), 369u);
    ASSERT_EQ(b.size(), a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i][0], b[i][0]);
        EXPECT_NEAR(a[i][1], b[i][1], 1e-13);
        EXPECT_NEAR(b[i][2], 0.0, 1e-13);
    }
}

TEST(Run, OutputIsByteIdenticalAcrossWorkerCounts) {
    std::string first;
    for (int w : {1, 2, 4}) {
        const auto dir = scratch("workers");
        auto c = quick(Command::MlmcRun, dir);
        c.L = 1;
        c.seed = 5;
        c.workers = w;
        ASSERT_EQ(run_quiet(c), 0);
        const auto text = slurp(dir / "mean.csv") + slurp(dir / "variance.csv");
        if (first.empty())
            first = text;
        else
            EXPECT_EQ(text, first) << "workers=" << w;
    }
}

TEST(Run, ConvergenceStudyReportsAnOrder) {
    const auto dir = scratch("conv");
    auto c = quick(Command::ConvergenceStudy, dir);
    c.L = 2;
    ASSERT_EQ(run_quiet(c), 0);
    const auto text = slurp(dir / "table.csv");
    EXPECT_NE(text.find("level,N,dx,l1_error\n0,41,"), std::string::npos);
    EXPECT_NE(text.find("\norder\n"), std::string::npos);
}

TEST(Run, FluxSpeedReachesTheSolver) {
    const auto a_dir = scratch("speed_interval"), b_dir = scratch("speed_endpoint");
    auto a = quick(Command::DetRun, a_dir);
    auto b = quick(Command::DetRun, b_dir);
    b.flux_speed = FluxSpeed::Endpoint;
    ASSERT_EQ(run_quiet(a), 0);
    ASSERT_EQ(run_quiet(b), 0);
    EXPECT_NE(csv_rows(slurp(a_dir / "solution.csv")), csv_rows(slurp(b_dir / "solution.csv")));
    EXPECT_NE(slurp(b_dir / "solution.csv").find("# flux_speed = endpoint"), std::string::npos);
}

TEST(Run, ValidatesBeforeRunning) {
    const auto dir = scratch("invalid");
    auto c = quick(Command::MlmcRun, dir);
    c.lambda = 1.0;
    EXPECT_THROW(run_quiet(c), ConfigError);
    EXPECT_FALSE(fs::exists(dir / "mean.csv"));
}

TEST(Executable, SmokeRun) {
    const auto dir = scratch("exe");
    const auto log = dir / "log.txt";
    const std::string exe = FDMLMC_CLI_PATH;
    const std::string ok = "\"" + exe + "\" det-run --out \"" + dir.string() + "\" --set T=0.1 --workers 1 > \"" +
                           log.string() + "\" 2>&1";
    ASSERT_EQ(std::system(ok.c_str()), 0) << slurp(log);
    EXPECT_TRUE(fs::exists(dir / "solution.csv"));
    EXPECT_EQ(csv_rows(slurp(dir / "solution.csv")).size(), 41u);

    const auto cfg = dir / "bad.cfg";
    std::ofstream(cfg) << "command = mlmc-run\nbogus = 1\n";
    const std::string bad = "\"" + exe + "\" --config \"" + cfg.string() + "\" > \"" + log.string() + "\" 2>&1";
    EXPECT_NE(std::system(bad.c_str()), 0);
    const auto msg = slurp(log);
    EXPECT_NE(msg.find("error: line 2: unknown key 'bogus'"), std::string::npos) << msg;
}
