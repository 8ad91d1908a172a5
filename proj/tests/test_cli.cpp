#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"

namespace fs = std::filesystem;
using namespace iolws::cli;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result invoke(std::vector<std::string> args)
{
    args.insert(args.begin(), "iolws-sim");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    int code = run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p)
{
    std::ifstream f(p, std::ios::binary);
    std::stringstream s;
    s << f.rdbuf();
    return s.str();
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name)
    {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

} // namespace

TEST_CASE("run writes reproducible artifacts")
{
    TempDir tmp("iolws_cli_run");
    auto a = tmp.path / "a", b = tmp.path / "b";
    for (const auto& dir : {a, b}) {
        auto r = invoke({"run", "--atten-db", "65", "--safety", "true", "--reps", "25", "--seed", "4", "--out", dir.string()});
        REQUIRE(r.code == kOk);
    }
    for (const char* file : {"durations.csv", "ecdf.csv", "summary.txt", "config.yaml"}) {
        REQUIRE(fs::exists(a / file));
        CHECK(slurp(a / file) == slurp(b / file));
    }
    CHECK(slurp(a / "durations.csv").find("# seed=4") != std::string::npos);
    CHECK(slurp(a / "summary.txt").find("mean") != std::string::npos);

    // The written config reproduces the run.
    auto c = tmp.path / "c";
    auto r = invoke({"run", "--config", (a / "config.yaml").string(), "--out", c.string()});
    REQUIRE(r.code == kOk);
    CHECK(slurp(c / "durations.csv") == slurp(a / "durations.csv"));
}

TEST_CASE("usage errors")
{
    CHECK(invoke({}).code == kUsage);
    CHECK(invoke({"teleport"}).code == kUsage);
    CHECK(invoke({"run", "--reps", "many"}).code == kUsage);
    CHECK(invoke({"run", "--atten-db", "200", "--out", "/tmp/iolws_cli_unused"}).code == kUsage);
    CHECK(invoke({"run", "--config", "/nonexistent/cfg.yaml"}).code == kUsage);
    CHECK(invoke({"sweep", "--atten-db", ""}).code == kUsage);
    CHECK(invoke({"report", "--dir", "/nonexistent/iolws"}).code == kUsage);
    CHECK(invoke({"--help"}).code == kOk);
    fs::remove_all("/tmp/iolws_cli_unused");
}

TEST_CASE("infeasible scenario")
{
    TempDir tmp("iolws_cli_dead");
    auto r = invoke({"run", "--atten-db", "100", "--reps", "2", "--out", tmp.path.string()});
    CHECK(r.code == kInfeasible);
    CHECK(r.err.find("TOO_MANY_DISCARDS") != std::string::npos);
}

TEST_CASE("sweep and report")
{
    TempDir tmp("iolws_cli_sweep");
    auto r = invoke({"sweep", "--atten-db", "30,50", "--reps", "30", "--threads", "2", "--out", tmp.path.string()});
    REQUIRE(r.code == kOk);
    CHECK(fs::exists(tmp.path / "table.csv"));
    CHECK(fs::exists(tmp.path / "connect_30dB_iolw" / "durations.csv"));
    CHECK(fs::exists(tmp.path / "connect_50dB_iolws" / "ecdf.csv"));

    auto rep = invoke({"report", "--dir", tmp.path.string()});
    CHECK(rep.code == kOk);
    CHECK(rep.out.find("30") != std::string::npos);
}

TEST_CASE("calibration with a starved budget diverges")
{
    TempDir tmp("iolws_cli_cal");
    auto r = invoke({"calibrate", "--budget", "1", "--reps", "20", "--out", tmp.path.string()});
    CHECK(r.code == kCalibration);
}
