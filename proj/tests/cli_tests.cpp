#include <doctest.h>

#include "dpound/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

std::string repo_root() {
    const char* env = std::getenv("DPOUND_REPO_ROOT");
    return env != nullptr ? env : ".";
}

std::string cfg(const std::string& name) {
    return repo_root() + "/configs/" + name;
}

int cli(std::vector<std::string> args) {
    args.insert(args.begin(), "dpoundsim");
    std::vector<char*> argv;
    for (std::string& a : args) argv.push_back(a.data());
    return dpound::run_cli((int)argv.size(), argv.data());
}

fs::path fresh_dir(const std::string& tag) {
    fs::path dir = fs::temp_directory_path() / ("dpound-cli-" + tag);
    fs::remove_all(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

} // namespace

TEST_CASE("validate accepts the shipped worlds and scenarios") {
    CHECK(cli({"validate", "--world", cfg("standard-world.cfg")}) == 0);
    CHECK(cli({"validate", "--world", cfg("standard-world.cfg"), "--scenario",
               cfg("u3-baseline.cfg")}) == 0);
    CHECK(cli({"validate", "--scenario", cfg("u2-baseline.cfg")}) != 0);
}

TEST_CASE("run writes the four artifacts and reports success") {
    fs::path out = fresh_dir("run");
    CHECK(cli({"run", "--world", cfg("standard-world.cfg"), "--scenario",
               cfg("u1-baseline.cfg"), "--out", out.string()}) == 0);
    for (const char* name :
         {"trace.txt", "journal.txt", "exposure.txt", "postconditions.txt"}) {
        CAPTURE(name);
        CHECK(fs::exists(out / name));
    }
    CHECK(slurp(out / "trace.txt").find("# world") != std::string::npos);
    CHECK(slurp(out / "postconditions.txt").find("postconditions ok") !=
          std::string::npos);
}

TEST_CASE("run in an expected-failure scenario still exits clean") {
    fs::path out = fresh_dir("expected-failure");
    CHECK(cli({"run", "--world", cfg("standard-world.cfg"), "--scenario",
               cfg("u1-bad-alias.cfg"), "--out", out.string()}) == 0);
    CHECK(slurp(out / "postconditions.txt").find("UnknownAlias") !=
          std::string::npos);
}

TEST_CASE("run exits nonzero when the outcome contradicts the script") {
    // a scenario that predicts a failure which never happens
    fs::path bad = fs::temp_directory_path() / "dpound-cli-contradiction.cfg";
    std::ofstream(bad) << "[scenario]\n"
                          "name = wrong-prediction\n"
                          "use_case = u1\n"
                          "amount = 5000\n"
                          "expect_success = no\n"
                          "expected_error = ComplianceFailed\n";
    fs::path out = fresh_dir("contradiction");
    CHECK(cli({"run", "--world", cfg("standard-world.cfg"), "--scenario",
               bad.string(), "--out", out.string()}) == 1);
    CHECK(slurp(out / "postconditions.txt").find("postconditions FAILED") !=
          std::string::npos);
}

TEST_CASE("replay confirms a fresh trace and flags a perturbed one") {
    fs::path out = fresh_dir("replay");
    REQUIRE(cli({"run", "--world", cfg("standard-world.cfg"), "--scenario",
                 cfg("u1-baseline.cfg"), "--out", out.string()}) == 0);
    fs::path trace = out / "trace.txt";
    CHECK(cli({"replay", "--world", cfg("standard-world.cfg"), "--scenario",
               cfg("u1-baseline.cfg"), "--trace", trace.string()}) == 0);
    CHECK(cli({"replay", "--world", cfg("standard-world.cfg"), "--scenario",
               cfg("u1-baseline.cfg"), "--trace", trace.string(), "--seed",
               "99"}) == 1);
}

TEST_CASE("matrix renders the battery and the assessment table") {
    fs::path out = fresh_dir("matrix");
    CHECK(cli({"matrix", "--suite", "u2", "--out", out.string()}) == 0);
    std::string table = slurp(out / "matrix.txt");
    CHECK(table.find("privacy") != std::string::npos); // header row
    CHECK(table.find("u2.s1=1 u2.s2=1") != std::string::npos);
    CHECK(table.find("u2.s1=3 u2.s2=5") != std::string::npos); // last cell
    CHECK(table.find("FAIL") == std::string::npos);
    CHECK(slurp(out / "suitability.txt").find("u2.s1:") != std::string::npos);
}

TEST_CASE("bad invocations exit with a usage error") {
    CHECK(cli({"frobnicate"}) == 2);
    CHECK(cli({"run", "--world", "/nonexistent.cfg", "--scenario",
               cfg("u1-baseline.cfg"), "--out", "/tmp/dpound-cli-x"}) == 2);
    CHECK(cli({"replay", "--world", cfg("standard-world.cfg"), "--scenario",
               cfg("u1-baseline.cfg"), "--trace", "/nonexistent-trace.txt"}) ==
          2);
}
