// Drives the vanetsim binary and checks exit codes and outputs.

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <doctest.h>

namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::temp_directory_path() / "vanet_cli_test";

struct Result {
    int code;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Result vanetsim(const std::string& args) {
    fs::create_directories(kWork);
    const auto out = kWork / "stdout.txt";
    const auto err = kWork / "stderr.txt";
    const std::string cmd = std::string(VANETSIM_BIN) + " " + args + " >" + out.string() + " 2>" + err.string();
    const int raw = std::system(cmd.c_str());
    return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, slurp(out), slurp(err)};
}

std::string path(const char* name) { return (kWork / name).string(); }

}  // namespace

TEST_CASE("run") {
    fs::remove_all(kWork);
    const auto r = vanetsim("run --seed 42 --set duration=5 --out " + path("r42"));
    CHECK(r.code == 0);
    for (const char* k : {"mean_e2e_delay_s", "delivery_probability", "collision_ratio", "avg_throughput_bps"})
        CHECK(r.out.find(k) != std::string::npos);
    CHECK(slurp(path("r42") + "/summary.csv").find(",42,") != std::string::npos);

    const auto big = vanetsim("run --set n_vehicles=450 --set duration=1 --out " + path("r450"));
    CHECK(big.code == 0);
    CHECK(slurp(path("r450") + "/summary.csv").find("\n450,") != std::string::npos);

    const auto missing = vanetsim("run --config " + path("nope.yaml"));
    CHECK(missing.code == 2);
    CHECK(missing.err.find("file not found") != std::string::npos);

    const auto typo = vanetsim("run --set cw_mni=3");
    CHECK(typo.code == 2);
    CHECK(typo.err.find("cw_mni") != std::string::npos);

    const auto bad = vanetsim("run --set mac.cw_min=0 --out " + path("bad"));
    CHECK(bad.code == 2);
    CHECK(bad.err.find("mac.cw_min") != std::string::npos);

    CHECK(vanetsim("frobnicate").code == 2);
    CHECK(vanetsim("").code == 2);
}

TEST_CASE("sweep") {
    const auto one = vanetsim("sweep --protocols clbp --counts 50 --seeds 3 --set duration=3 --out " + path("s1"));
    CHECK(one.code == 0);
    const auto table = slurp(path("s1") + "/figure4_delivery.csv");
    CHECK(table.find("\n50,") != std::string::npos);
    CHECK(table.find("CLBP-like") != std::string::npos);

    CHECK(vanetsim("sweep --protocols , --counts 50 --out " + path("s0")).code == 2);
    CHECK(vanetsim("sweep --protocols quantum --counts 50 --out " + path("s0")).code == 2);
    CHECK(vanetsim("sweep --jobs 0 --out " + path("s0")).code == 2);

    const auto dbg = vanetsim("sweep --protocols hybrid,cmds --counts 40 --seeds 1 --jobs 2 --debug-events "
                              "--set duration=2 --out " + path("s2"));
    CHECK(dbg.code == 0);
    CHECK(fs::exists(path("s2") + "/runs/hybrid-n40-s1/events.log"));
    CHECK(vanetsim("validate " + path("s2") + "/runs/cmds-n40-s1").code == 0);
}

TEST_CASE("validate") {
    const auto dir = path("v");
    REQUIRE(vanetsim("run --seed 5 --set duration=3 --trace --out " + dir).code == 0);
    CHECK(fs::exists(dir + "/hop_trace.txt"));
    const auto ok = vanetsim("validate " + dir);
    CHECK(ok.code == 0);
    CHECK(ok.out.starts_with("PASS"));

    {
        std::ofstream out(dir + "/summary.csv", std::ios::app);
        out << "tampered\n";
    }
    const auto tampered = vanetsim("validate " + dir);
    CHECK(tampered.code == 1);
    CHECK(tampered.out.find("summary.csv") != std::string::npos);

    fs::remove(dir + "/events.log");
    CHECK(vanetsim("validate " + dir).code == 2);
    CHECK(vanetsim("validate " + path("nowhere")).code == 2);
}

TEST_CASE("gen-scenario round trip") {
    const auto gen = vanetsim("gen-scenario --set n_vehicles=20 --set duration=4 --out " + path("g"));
    CHECK(gen.code == 0);
    const auto cfg = path("g") + "/config.yaml";
    CHECK(slurp(cfg).find("trace:") != std::string::npos);
    const auto r = vanetsim("run --config " + cfg + " --out " + path("gr"));
    CHECK(r.code == 0);
    CHECK(vanetsim("validate " + path("gr")).code == 0);
    fs::remove_all(kWork);
}
