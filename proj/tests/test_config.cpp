#include <doctest.h>

#include <cstdio>
#include <unistd.h>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "minmaxcbo/config.hpp"
#include "minmaxcbo/driver.hpp"

using namespace mmcbo;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempDir {
    std::filesystem::path dir;
    TempDir() {
        dir = std::filesystem::temp_directory_path() /
              ("mmcbo_test_" + std::to_string(::getpid()) + "_" +
               std::to_string(counter()++));
        std::filesystem::create_directories(dir);
    }
    ~TempDir() { std::filesystem::remove_all(dir); }
    static int& counter() {
        static int c = 0;
        return c;
    }
    std::string prefix(const std::string& name) const { return (dir / name).string(); }
};

}  // namespace

TEST_CASE("empty document yields the documented decay defaults") {
    const RunConfig cfg = parse_config("");
    CHECK(cfg.experiment == Experiment::Decay);
    CHECK(cfg.objective == "bilinear-tanh");
    CHECK(cfg.d1 == 1);
    CHECK(cfg.d2 == 1);
    CHECK(cfg.params.lambda == 1.0);
    CHECK(cfg.params.sigma == 0.5);
    CHECK(cfg.params.alpha == 50.0);
    CHECK(cfg.params.beta == 50.0);
    CHECK(cfg.params.dt == 0.01);
    CHECK(cfg.params.horizon == 2.0);
    CHECK(cfg.params.n_particles == 100);
    CHECK(cfg.params.diffusion == DiffusionMode::Anisotropic);
    CHECK(cfg.seed == 1);
}

TEST_CASE("comments, blank lines, and spacing are accepted") {
    const RunConfig cfg = parse_config(
        "# a comment\n"
        "\n"
        "experiment = decay\n"
        "  sigma   =  0.25 \n"
        "n_particles=32\n");
    CHECK(cfg.params.sigma == 0.25);
    CHECK(cfg.params.n_particles == 32);
}

TEST_CASE("errors carry the offending line") {
    CHECK_THROWS_WITH_AS(parse_config("sigma = -1\n"),
                         "config line 1: sigma must be nonnegative", UsageError);
    CHECK_THROWS_WITH_AS(parse_config("\nbogus_key = 3\n"),
                         "config line 2: unknown key 'bogus_key'", UsageError);
    CHECK_THROWS_WITH_AS(parse_config("lambda = abc\n"),
                         "config line 1: expected a real number for 'lambda', got 'abc'",
                         UsageError);
    CHECK_THROWS_AS(parse_config("experiment = warp\n"), UsageError);
    CHECK_THROWS_AS(parse_config("sigma\n"), UsageError);
}

TEST_CASE("experiment key placement does not matter for defaults") {
    // reps default differs between mfl (20) and lln (100); the experiment key
    // appears after other keys and must still control the defaults.
    const RunConfig cfg = parse_config("alpha = 3\nexperiment = lln\n");
    CHECK(cfg.experiment == Experiment::Lln);
    CHECK(cfg.reps == 100);
    CHECK(cfg.params.alpha == 3.0);
    CHECK(cfg.params.beta == 2.0);  // lln default
}

TEST_CASE("decay precondition 2*lambda - sigma^2 > 0 is enforced") {
    CHECK_THROWS_AS(parse_config("experiment = decay\nlambda = 0.5\nsigma = 1.5\n"), UsageError);
    // The same parameters are fine for a non-decay experiment.
    const RunConfig cfg = parse_config("experiment = moments\nlambda = 0.5\nsigma = 1.5\n");
    CHECK(cfg.params.sigma == 1.5);
}

TEST_CASE("config round-trips through serialization") {
    const std::string doc =
        "experiment = mfl\n"
        "objective = bilinear-tanh\n"
        "n_grid = 8,16,32\n"
        "m_reference = 256\n"
        "reps = 3\n"
        "sigma = 0.25\n"
        "seed = 77\n";
    const RunConfig a = parse_config(doc);
    const std::string ser = serialize_config(a);
    const RunConfig b = parse_config(ser);
    CHECK(serialize_config(b) == ser);
    CHECK(b.params.sigma == a.params.sigma);
    CHECK(b.n_grid == a.n_grid);
    CHECK(b.seed == a.seed);
}

TEST_CASE("shift vectors must match dimensions") {
    CHECK_THROWS_AS(parse_config("objective = separable-ackley\nd1 = 2\nd2 = 2\nshift_x = 1\n"),
                    UsageError);
    const RunConfig cfg = parse_config(
        "objective = separable-ackley\nd1 = 2\nd2 = 2\nshift_x = 1,1\nshift_y = -1,-1\n");
    REQUIRE(cfg.shift_x.has_value());
    CHECK((*cfg.shift_x)[1] == 1.0);
}

TEST_CASE("dispatch writes schema-stable files and honors exit codes") {
    TempDir tmp;
    std::ostringstream log;

    // A small decay run.
    RunConfig cfg = parse_config(
        "experiment = decay\n"
        "n_particles = 16\n"
        "horizon = 0.2\n"
        "n_seeds = 2\n");
    const auto res = dispatch(cfg, tmp.prefix("a"), log);
    CHECK((res.exit_code == 0 || res.exit_code == 1));
    const std::string csv = slurp(tmp.prefix("a") + "_decay.csv");
    CHECK(csv.rfind("t,vx,vy,v,bound\r\n", 0) == 0);
    CHECK(csv.find("\r\n") != std::string::npos);
    const std::string verdict = slurp(tmp.prefix("a") + "_verdict.txt");
    CHECK(verdict.find("verdict:") != std::string::npos);
    // No leftover temporary files.
    CHECK_FALSE(std::filesystem::exists(tmp.prefix("a") + "_decay.csv.tmp"));
}

TEST_CASE("dispatch output is byte-identical across reruns and worker counts") {
    TempDir tmp;
    std::ostringstream log;
    const RunConfig cfg = parse_config(
        "experiment = stability\n"
        "stability_trials = 300\n");

    set_worker_count(1);
    dispatch(cfg, tmp.prefix("w1"), log);
    set_worker_count(3);
    dispatch(cfg, tmp.prefix("w3"), log);
    set_worker_count(1);

    CHECK(slurp(tmp.prefix("w1") + "_stability.csv") == slurp(tmp.prefix("w3") + "_stability.csv"));
    CHECK(slurp(tmp.prefix("w1") + "_verdict.txt") == slurp(tmp.prefix("w3") + "_verdict.txt"));
}

TEST_CASE("mfl dispatch emits the documented schema with fit summary rows") {
    TempDir tmp;
    std::ostringstream log;
    const RunConfig cfg = parse_config(
        "experiment = mfl\n"
        "n_grid = 4,8\n"
        "m_reference = 32\n"
        "reps = 2\n"
        "dt = 0.05\n"
        "horizon = 0.2\n");
    dispatch(cfg, tmp.prefix("m"), log);
    const std::string csv = slurp(tmp.prefix("m") + "_mfl.csv");
    CHECK(csv.rfind("n,rep,e_n\r\n", 0) == 0);
    CHECK(csv.find("fit,slope,") != std::string::npos);
    CHECK(csv.find("fit,r2,") != std::string::npos);
}

TEST_CASE("verify-assumptions dispatch reports the bound check") {
    TempDir tmp;
    std::ostringstream log;
    const RunConfig cfg = parse_config(
        "experiment = verify-assumptions\n"
        "objective = separable-ackley\n"
        "d1 = 2\nd2 = 2\n"
        "va_samples = 2000\n");
    const auto res = dispatch(cfg, tmp.prefix("va"), log);
    CHECK(res.exit_code == 0);
    const std::string csv = slurp(tmp.prefix("va") + "_verify-assumptions.csv");
    CHECK(csv.rfind("metric,value\r\n", 0) == 0);
    CHECK(csv.find("bound_ok,1") != std::string::npos);
}
