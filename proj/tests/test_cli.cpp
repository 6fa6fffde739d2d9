#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include <nlohmann/json.hpp>

#include "catch_amalgamated.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string err;
};

fs::path scratch(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("wtank_cli_" + std::to_string(::getpid()) + "_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Run run(const std::string& args, const fs::path& dir) {
    const fs::path err = dir / "stderr.txt";
    const std::string cmd = std::string(WTANK_CLI_PATH) + " " + args + " > " + (dir / "stdout.txt").string() + " 2> " + err.string();
    const int st = std::system(cmd.c_str());
    return {WIFEXITED(st) ? WEXITSTATUS(st) : -1, slurp(err)};
}

void write_config(const fs::path& p, const std::string& body) {
    std::ofstream out(p);
    out << body;
}

const char* small = " --n_modes 4 --grid_points 401";

}  // namespace

TEST_CASE("identical runs write byte-identical files", "[cli]") {
    const fs::path a = scratch("det_a"), b = scratch("det_b");
    for (const fs::path& d : {a, b}) {
        REQUIRE(run(std::string("spectrum") + small + " --output_dir " + d.string(), d).code == 0);
        REQUIRE(run(std::string("finite_demo --seed 5 --format json --output_dir ") + d.string(), d).code == 0);
    }
    int files = 0;
    for (const auto& e : fs::directory_iterator(a)) {
        const std::string name = e.path().filename().string();
        if (name.rfind("std", 0) == 0) continue;
        CHECK(slurp(e.path()) == slurp(b / name));
        ++files;
    }
    CHECK(files >= 4);
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST_CASE("summary carries config echo, tolerances and verdict", "[cli]") {
    const fs::path d = scratch("summary");
    REQUIRE(run(std::string("spectrum") + small + " --gamma 0.04 --output_dir " + d.string(), d).code == 0);
    const auto j = nlohmann::json::parse(slurp(d / "spectrum.json"));
    CHECK(j.at("command") == "spectrum");
    CHECK(j.at("config").at("gamma") == 0.04);
    CHECK(j.at("config").at("n_modes") == 4);
    CHECK(j.contains("tolerances"));
    CHECK(j.at("verdict") == "PASS");
    CHECK(fs::exists(d / "spectrum_A.csv"));
    fs::remove_all(d);
}

TEST_CASE("config file with flag overrides", "[cli]") {
    const fs::path d = scratch("config");
    write_config(d / "run.cfg", "# small run\ngamma = 0.06\nn_modes = 5\ngrid_points = 401\n");
    REQUIRE(run("spectrum --config " + (d / "run.cfg").string() + " --n_modes 3 --output_dir " + d.string(), d).code == 0);
    const auto j = nlohmann::json::parse(slurp(d / "spectrum.json"));
    CHECK(j.at("config").at("gamma") == 0.06);
    CHECK(j.at("config").at("n_modes") == 3);
    fs::remove_all(d);
}

TEST_CASE("unknown config key exits 2 and names the key", "[cli]") {
    const fs::path d = scratch("badkey");
    write_config(d / "bad.cfg", "gamma = 0.05\nbogus_key = 1\n");
    const Run r = run("spectrum --config " + (d / "bad.cfg").string() + " --output_dir " + d.string(), d);
    CHECK(r.code == 2);
    CHECK(r.err.find("bogus_key") != std::string::npos);
    CHECK(run("spectrum --format xml --output_dir " + d.string(), d).code == 2);
    CHECK(run("--output_dir " + d.string(), d).code == 2);
    fs::remove_all(d);
}

TEST_CASE("regime violations exit 3", "[cli]") {
    const fs::path d = scratch("regime");
    const Run neg = run(std::string("controllability") + small + " --gamma -0.1 --output_dir " + d.string(), d);
    CHECK(neg.code == 3);
    const Run ly = run("lyapunov --gamma 0.5 --output_dir " + d.string(), d);
    CHECK(ly.code == 3);
    CHECK(ly.err.find("gamma_s") != std::string::npos);
    fs::remove_all(d);
}

TEST_CASE("controllability at gamma = 0 reports exactly the even modes", "[cli]") {
    const fs::path d = scratch("gamma0");
    REQUIRE(run(std::string("controllability") + small + " --gamma 0 --output_dir " + d.string(), d).code == 0);
    const auto j = nlohmann::json::parse(slurp(d / "controllability.json"));
    CHECK(j.at("uncontrollable_modes") == nlohmann::json({-4, -2, 2, 4}));
    CHECK(j.at("verdict") == "PASS");
    fs::remove_all(d);
}
