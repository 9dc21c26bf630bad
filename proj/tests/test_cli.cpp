#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "simmatch/io.hpp"
#include "simmatch/rng.hpp"
#include "simmatch/synthbench.hpp"
#include "test_util.hpp"

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;
using namespace simmatch;

namespace {

const std::string cli = SIMMATCH_CLI_PATH;

int run(const std::string& args) {
    const int rc = std::system((cli + " " + args + " >/dev/null 2>&1").c_str());
    return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path temp_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "simmatch_cli_test" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("match: self match of a 20-point file") {
    const fs::path dir = temp_dir("selfmatch");
    RngStream rng(50);
    const PointCloud cloud = testutil::random_cloud(rng, 20, 3);
    io::write_point_file((dir / "pts.txt").string(), cloud);

    const fs::path out = dir / "result.json";
    const int rc = run("match " + (dir / "pts.txt").string() + " " + (dir / "pts.txt").string() +
                       " -o " + out.string());
    REQUIRE(rc == 0);

    const nlohmann::json j = nlohmann::json::parse(slurp(out));
    REQUIRE(j["matches"].size() == 20);
    for (const auto& pr : j["matches"]) {
        CHECK(pr[0].get<int>() == pr[1].get<int>());
    }
    CHECK(j["scale"].get<double>() == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(j["rotation"].size() == 9);
    CHECK(j["translation"].size() == 3);
    CHECK(j["config_echo"]["mu"].get<double>() == 0.15);
    CHECK(j["phi_value"].get<double>() == doctest::Approx(-0.15 * 20).epsilon(1e-6));
}

TEST_CASE("match: icp baseline flag") {
    const fs::path dir = temp_dir("icpflag");
    RngStream rng(55);
    const PointCloud cloud = testutil::random_cloud(rng, 15, 3);
    io::write_point_file((dir / "pts.txt").string(), cloud);
    const fs::path out = dir / "icp.json";
    REQUIRE(run("match " + (dir / "pts.txt").string() + " " + (dir / "pts.txt").string() +
                " --baseline icp -o " + out.string()) == 0);
    const nlohmann::json j = nlohmann::json::parse(slurp(out));
    CHECK(j["matches"].size() == 15);
    CHECK(j["scale"].get<double>() == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("match: dimension mismatch exits 3") {
    const fs::path dir = temp_dir("dims");
    RngStream rng(51);
    io::write_point_file((dir / "a.txt").string(), testutil::random_cloud(rng, 5, 3));
    io::write_point_file((dir / "b.txt").string(), testutil::random_cloud(rng, 5, 2));
    CHECK(run("match " + (dir / "a.txt").string() + " " + (dir / "b.txt").string()) == 3);
}

TEST_CASE("match: parse error exits 2, degenerate cloud exits 4") {
    const fs::path dir = temp_dir("badfiles");
    {
        std::ofstream f(dir / "bad.txt");
        f << "1 2 3\nnot numbers here\n";
    }
    {
        std::ofstream f(dir / "flat.txt");
        f << "1 1 1\n1 1 1\n1 1 1\n";
    }
    RngStream rng(52);
    io::write_point_file((dir / "ok.txt").string(), testutil::random_cloud(rng, 5, 3));
    CHECK(run("match " + (dir / "bad.txt").string() + " " + (dir / "ok.txt").string()) == 2);
    CHECK(run("match " + (dir / "flat.txt").string() + " " + (dir / "ok.txt").string()) == 4);
}

TEST_CASE("gen: level zero produces a parseable exact trial") {
    const fs::path dir = temp_dir("genzero");
    const int rc = run("gen --category noise --level 0 --seed 9 --out-dir " + dir.string());
    REQUIRE(rc == 0);

    const PointCloud model = io::read_point_file((dir / "model.txt").string());
    const PointCloud scene = io::read_point_file((dir / "scene.txt").string());
    CHECK(model.size() == 60);  // builtin shape
    CHECK(scene.size() == 60);

    const nlohmann::json gt = nlohmann::json::parse(slurp(dir / "ground_truth.json"));
    REQUIRE(gt["pairs"].size() == 60);
    const double s = gt["transform"]["scale"].get<double>();
    CHECK(s >= 0.5);
    CHECK(s <= 1.5);

    // Round trip: the written scene equals transform(model) bit-for-bit after
    // the 17-digit text round trip.
    Matrix rot(3, 3);
    for (Index i = 0; i < 3; ++i)
        for (Index j = 0; j < 3; ++j) rot(i, j) = gt["transform"]["rotation"][i * 3 + j].get<double>();
    Vector tr(3);
    for (Index i = 0; i < 3; ++i) tr[i] = gt["transform"]["translation"][i].get<double>();
    SimilarityTransform t;
    t.scale = s;
    t.rotation = rot;
    t.translation = tr;
    CHECK((scene.points() - t.apply(model.points())).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("gen: outlier counts and occlusion guard") {
    const fs::path dir = temp_dir("genoutlier");
    RngStream rng(53);
    io::write_point_file((dir / "base.txt").string(), testutil::random_cloud(rng, 40, 3));
    REQUIRE(run("gen " + (dir / "base.txt").string() +
                " --category outliers --level 0.5 --out-dir " + dir.string()) == 0);
    CHECK(io::read_point_file((dir / "scene.txt").string()).size() == 60);

    CHECK(run("gen " + (dir / "base.txt").string() +
              " --category occlusion --level 1.0 --out-dir " + dir.string()) == 2);
    CHECK(run("gen " + (dir / "base.txt").string() +
              " --category bogus --level 0.1 --out-dir " + dir.string()) == 2);
}

TEST_CASE("gen then match: paper-protocol instance solved to full accuracy") {
    const fs::path dir = temp_dir("genmatch");
    REQUIRE(run("gen --category noise --level 0 --seed 4 --out-dir " + dir.string()) == 0);
    const fs::path out = dir / "match.json";
    REQUIRE(run("match " + (dir / "model.txt").string() + " " + (dir / "scene.txt").string() +
                " -o " + out.string()) == 0);

    const nlohmann::json gt = nlohmann::json::parse(slurp(dir / "ground_truth.json"));
    const nlohmann::json mj = nlohmann::json::parse(slurp(out));
    std::set<std::pair<int, int>> gt_pairs, found;
    for (const auto& pr : gt["pairs"]) gt_pairs.insert({pr[0].get<int>(), pr[1].get<int>()});
    for (const auto& pr : mj["matches"]) found.insert({pr[0].get<int>(), pr[1].get<int>()});
    std::size_t hits = 0;
    for (const auto& pr : found) {
        hits += gt_pairs.count(pr);
    }
    CHECK(hits == gt_pairs.size());
    CHECK(mj["scale"].get<double>() ==
          doctest::Approx(gt["transform"]["scale"].get<double>()).epsilon(1e-3));
}

TEST_CASE("bundled data file equals the builtin shape") {
    const PointCloud file = io::read_point_file(std::string(SIMMATCH_DATA_DIR) + "/helix60.txt");
    CHECK(file.points() == default_shape().points());
}

TEST_CASE("bench: tiny run produces consistent deterministic CSVs") {
    const fs::path dir1 = temp_dir("bench1");
    const fs::path dir2 = temp_dir("bench2");
    RngStream rng(54);
    const fs::path base = dir1 / "base.txt";
    io::write_point_file(base.string(), testutil::random_cloud(rng, 12, 3));

    const std::string common = "bench --base " + base.string() +
                               " --trials 2 --seed 5 --categories noise --baseline icp --no-timing";
    REQUIRE(run(common + " --out-dir " + dir1.string()) == 0);
    REQUIRE(run(common + " --out-dir " + dir2.string()) == 0);

    CHECK(slurp(dir1 / "trials.csv") == slurp(dir2 / "trials.csv"));
    CHECK(slurp(dir1 / "summary.csv") == slurp(dir2 / "summary.csv"));
    CHECK(fs::exists(dir1 / "summary_noise.csv"));
    CHECK(fs::exists(dir1 / "bench_meta.json"));

    std::istringstream trials(slurp(dir1 / "trials.csv"));
    std::string line;
    std::getline(trials, line);
    CHECK(line == "category,level,trial,method,accuracy,runtime_s");
    int rows = 0;
    while (std::getline(trials, line)) ++rows;
    CHECK(rows == 5 * 2 * 2);  // 5 default noise levels x 2 trials x 2 methods
}
