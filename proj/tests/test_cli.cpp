// End-to-end tests for the pdflood binary: each case runs the real
// executable (path passed as argv[1]) and checks exit codes, stderr error
// JSON, and output files.

#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <sys/wait.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "pdflood/grid.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string g_binary;

struct RunResult {
    int status = -1;
    std::string stdout_text;
    std::string stderr_text;
};

RunResult run_cli(const std::string& args) {
    const fs::path out_file = fs::temp_directory_path() / "pdflood_cli_stdout.txt";
    const fs::path err_file = fs::temp_directory_path() / "pdflood_cli_stderr.txt";
    const std::string command = g_binary + " " + args + " > " + out_file.string() +
                                " 2> " + err_file.string();
    const int raw = std::system(command.c_str());
    RunResult result;
    result.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    const auto slurp = [](const fs::path& p) {
        std::ifstream in(p);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    result.stdout_text = slurp(out_file);
    result.stderr_text = slurp(err_file);
    return result;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path work_dir() {
    const fs::path dir = fs::temp_directory_path() / "pdflood_cli_test";
    fs::create_directories(dir);
    return dir;
}

} // namespace

TEST_CASE("synth then downscale, baseline, evaluate closes the loop") {
    const fs::path dir = work_dir();
    const fs::path fixture = dir / "fixture";
    fs::remove_all(fixture);

    // small grid keeps the suite fast; defaults otherwise
    const fs::path synth_cfg = dir / "synth.json";
    {
        std::ofstream out(synth_cfg);
        out << R"({"valley": {"nrows": 120, "ncols": 120, "channel_row": 60, "seed": 99},
                   "output_dir": ")"
            << fixture.string() << R"("})";
    }
    auto synth = run_cli("synth --config " + synth_cfg.string());
    REQUIRE(synth.status == 0);
    for (const char* name :
         {"fine_dem.asc", "coarse_dem.asc", "coarse_depth.asc", "truth.asc", "hwm.csv",
          "scenario.json"}) {
        CHECK(fs::exists(fixture / name));
    }

    const std::string common = " --fine-dem " + (fixture / "fine_dem.asc").string() +
                               " --coarse-dem " + (fixture / "coarse_dem.asc").string() +
                               " --coarse-depth " + (fixture / "coarse_depth.asc").string();

    const fs::path product = dir / "product";
    fs::remove_all(product);
    auto down = run_cli("downscale" + common + " --hwm " + (fixture / "hwm.csv").string() +
                        " --out " + product.string());
    REQUIRE(down.status == 0);
    for (const char* name :
         {"mean.asc", "lower95.asc", "upper95.asc", "prob_exceed.asc", "metrics.json"}) {
        CHECK(fs::exists(product / name));
    }
    const json metrics = json::parse(read_file(product / "metrics.json"));
    CHECK(metrics.at("sigma_hat").get<double>() > 0.0);
    CHECK(metrics.at("dof").get<int>() >= 2);

    SUBCASE("re-running is bit-identical") {
        const std::string first = read_file(product / "mean.asc") +
                                  read_file(product / "prob_exceed.asc") +
                                  read_file(product / "metrics.json");
        const fs::path again = dir / "product_again";
        fs::remove_all(again);
        auto rerun = run_cli("downscale" + common + " --hwm " +
                             (fixture / "hwm.csv").string() + " --out " + again.string());
        REQUIRE(rerun.status == 0);
        const std::string second = read_file(again / "mean.asc") +
                                   read_file(again / "prob_exceed.asc") +
                                   read_file(again / "metrics.json");
        CHECK(first == second);
    }

    SUBCASE("baseline emits baseline.asc") {
        const fs::path base_dir = dir / "baseline";
        fs::remove_all(base_dir);
        auto base = run_cli("baseline" + common + " --out " + base_dir.string());
        REQUIRE(base.status == 0);
        CHECK(fs::exists(base_dir / "baseline.asc"));
        CHECK(!fs::exists(base_dir / "mean.asc"));
    }

    SUBCASE("evaluate scores the probabilistic product") {
        auto eval = run_cli("evaluate --truth " + (fixture / "truth.asc").string() +
                            " --product " + product.string() + " --out " +
                            (dir / "report.json").string());
        REQUIRE(eval.status == 0);
        const json report = json::parse(read_file(dir / "report.json"));
        CHECK(report.at("accuracy").get<double>() >= 0.9);
        CHECK(report.at("coverage95").get<double>() >= 0.9);
        CHECK(report.at("mae").get<double>() <= 0.5);
    }

    SUBCASE("evaluating both products emits a comparison table") {
        const fs::path base_dir = dir / "baseline_cmp";
        fs::remove_all(base_dir);
        auto base = run_cli("baseline" + common + " --out " + base_dir.string());
        REQUIRE(base.status == 0);
        auto eval = run_cli("evaluate --truth " + (fixture / "truth.asc").string() +
                            " --product " + product.string() + " --deterministic " +
                            (base_dir / "baseline.asc").string());
        REQUIRE(eval.status == 0);
        const json cmp = json::parse(eval.stdout_text);
        CHECK(cmp.at("reports").at("pdflood").contains("mae"));
        CHECK(cmp.at("reports").at("baseline").at("coverage95").is_null());
        CHECK(cmp.at("best").contains("mae"));
        CHECK(cmp.at("best").at("coverage95") == json::array({"pdflood"}));
    }

    SUBCASE("evaluating the truth against itself gives mae 0") {
        auto eval = run_cli("evaluate --truth " + (fixture / "truth.asc").string() +
                            " --deterministic " + (fixture / "truth.asc").string());
        REQUIRE(eval.status == 0);
        const json report = json::parse(eval.stdout_text);
        CHECK(report.at("mae").get<double>() == 0.0);
        CHECK(report.at("accuracy").get<double>() == 1.0);
        CHECK(report.at("coverage95").is_null());
    }
}

TEST_CASE("input errors exit 2 with machine-readable codes") {
    const fs::path dir = work_dir();

    SUBCASE("missing DEM path is E_INPUT") {
        auto r = run_cli("downscale --fine-dem /does/not/exist.asc --coarse-dem x "
                         "--coarse-depth y --hwm z --out " +
                         (dir / "o").string());
        CHECK(r.status == 2);
        const json err = json::parse(r.stderr_text);
        CHECK(err.at("code") == "E_INPUT");
    }

    SUBCASE("factor mismatch between DEMs is E_ALIGN") {
        // 9x9 fine vs 3x3 coarse with inconsistent cell sizes
        pdflood::Grid fine(9, 9, 5.0);
        pdflood::Grid coarse(3, 3, 10.0); // ratio 2 but dims say 3
        write_ascii_grid(fine, dir / "fine.asc");
        write_ascii_grid(coarse, dir / "coarse.asc");
        write_ascii_grid(coarse, dir / "depth.asc");
        auto r = run_cli("downscale --fine-dem " + (dir / "fine.asc").string() +
                         " --coarse-dem " + (dir / "coarse.asc").string() +
                         " --coarse-depth " + (dir / "depth.asc").string() + " --hwm " +
                         (dir / "depth.asc").string() + " --out " + (dir / "o").string());
        CHECK(r.status == 2);
        const json err = json::parse(r.stderr_text);
        CHECK(err.at("code") == "E_ALIGN");
    }

    SUBCASE("misaligned evaluation grids are E_ALIGN") {
        pdflood::Grid a(4, 4, 5.0);
        pdflood::Grid b(5, 5, 5.0);
        write_ascii_grid(a, dir / "a.asc");
        write_ascii_grid(b, dir / "b.asc");
        auto r = run_cli("evaluate --truth " + (dir / "a.asc").string() +
                         " --deterministic " + (dir / "b.asc").string());
        CHECK(r.status == 2);
        CHECK(json::parse(r.stderr_text).at("code") == "E_ALIGN");
    }
}

TEST_CASE("calibrate recovers the toy fixture and honors the seed") {
    const fs::path dir = work_dir();
    // toy design: depth = alpha + beta*log(theta) at 4 locations, truth 0.05
    const double alpha[] = {6.0, 6.1, 6.2, 6.3};
    const double beta[] = {0.9, 1.0, 1.1, 0.8};
    {
        std::ofstream out(dir / "design.csv");
        out << "theta,loc_1,loc_2,loc_3,loc_4\n";
        for (int j = 0; j < 10; ++j) {
            const double theta = 0.012 + 0.0095 * j;
            out << theta;
            for (int i = 0; i < 4; ++i) out << ',' << alpha[i] + beta[i] * std::log(theta);
            out << '\n';
        }
    }
    {
        std::ofstream out(dir / "obs.csv");
        out << "z_1,z_2,z_3,z_4\n";
        const double noise[] = {0.004, -0.007, 0.009, -0.002};
        for (int i = 0; i < 4; ++i) {
            out << (i ? "," : "") << alpha[i] + beta[i] * std::log(0.05) + noise[i];
        }
        out << '\n';
    }

    const std::string base = "calibrate --design " + (dir / "design.csv").string() +
                             " --obs " + (dir / "obs.csv").string();
    auto r = run_cli(base + " --seed 7 --out " + (dir / "posterior.json").string());
    REQUIRE(r.status == 0);
    const json posterior = json::parse(read_file(dir / "posterior.json"));
    CHECK(std::fabs(posterior.at("theta_star").get<double>() - 0.05) <= 0.01);
    CHECK(posterior.at("seed") == 7);

    SUBCASE("same seed reproduces the posterior bit-exactly") {
        auto again = run_cli(base + " --seed 7 --out " + (dir / "posterior2.json").string());
        REQUIRE(again.status == 0);
        CHECK(read_file(dir / "posterior.json") == read_file(dir / "posterior2.json"));
    }

    SUBCASE("a missing seed is an input error") {
        auto bad = run_cli(base + " --out " + (dir / "p.json").string());
        CHECK(bad.status == 2);
        CHECK(json::parse(bad.stderr_text).at("code") == "E_INPUT");
    }

    SUBCASE("p < 3 designs is an input error") {
        {
            std::ofstream out(dir / "design2.csv");
            out << "theta,loc_1,loc_2,loc_3,loc_4\n0.02,1,2,3,4\n0.06,2,3,4,5\n";
        }
        auto bad = run_cli("calibrate --design " + (dir / "design2.csv").string() +
                           " --obs " + (dir / "obs.csv").string() + " --seed 3");
        CHECK(bad.status == 2);
        CHECK(json::parse(bad.stderr_text).at("code") == "E_INPUT");
    }
}

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: test_cli <pdflood-binary>\n");
        return 1;
    }
    g_binary = argv[1];
    doctest::Context context;
    return context.run();
}
