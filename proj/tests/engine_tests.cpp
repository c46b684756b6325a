#include <doctest.h>

#include "dpound/config.hpp"
#include "dpound/engine.hpp"

#include <cstdlib>
#include <string>

using namespace dpound;

namespace {

std::string repo_root() {
    const char* env = std::getenv("DPOUND_REPO_ROOT");
    return env != nullptr ? env : ".";
}

WorldSpec world_cfg(const std::string& name) {
    auto w = load_world_file(repo_root() + "/configs/" + name);
    REQUIRE(w.ok());
    return w.value();
}

ScenarioSpec scenario_cfg(const std::string& name) {
    auto s = load_scenario_file(repo_root() + "/configs/" + name);
    REQUIRE(s.ok());
    return s.value();
}

} // namespace

TEST_CASE("a baseline wallet payment completes inside the tick budget") {
    auto r = run_scenario(world_cfg("standard-world.cfg"),
                          scenario_cfg("u1-baseline.cfg"));
    REQUIRE(r.ok());
    const RunResult& run = r.value();
    CHECK(run.status == RunStatus::Completed);
    CHECK(run.all_succeeded);
    CHECK(run.postconditions_ok);
    CHECK(run.conservation_ok);
    CHECK(run.failure_codes.empty());
    for (const std::string& clause : run.clauses) {
        CAPTURE(clause);
        CHECK(clause.rfind("ok ", 0) == 0);
    }
    CHECK(run.hops > 0);
}

TEST_CASE("pass-through routing seals personal data away from the carrier") {
    WorldSpec w = world_cfg("standard-world.cfg");
    // option 1 carries the payee details in the clear through the core; option
    // 2 routes the same hop with the details sealed to the receiving provider
    w.bindings["u1.s2"] = 2;
    auto r = run_scenario(w, scenario_cfg("u1-baseline.cfg"));
    REQUIRE(r.ok());
    CHECK(r.value().postconditions_ok);
    CHECK(r.value().seal_ops > 0);
    CHECK(r.value().open_ops > 0);
    bool core_saw_name = false;
    for (const auto& [stage, who, kind] : r.value().exposure) {
        if (who == "boe-cbdc" && kind == DatumKind::Name) core_saw_name = true;
    }
    CHECK_FALSE(core_saw_name);
}

TEST_CASE("two runs of the same scenario produce identical artifacts") {
    WorldSpec w = world_cfg("standard-world.cfg");
    ScenarioSpec sc = scenario_cfg("u2-baseline.cfg");
    auto a = run_scenario(w, sc);
    auto b = run_scenario(w, sc);
    REQUIRE(a.ok());
    REQUIRE(b.ok());
    CHECK(a.value().trace_text == b.value().trace_text);
    CHECK(a.value().journal_text == b.value().journal_text);
    CHECK(a.value().exposure_text == b.value().exposure_text);
    CHECK(a.value().postconditions_text == b.value().postconditions_text);
}

TEST_CASE("a recorded trace replays clean and catches tampering") {
    WorldSpec w = world_cfg("standard-world.cfg");
    ScenarioSpec sc = scenario_cfg("u1-baseline.cfg");
    auto r = run_scenario(w, sc);
    REQUIRE(r.ok());

    auto ok = replay_scenario(w, sc, r.value().trace_text);
    REQUIRE(ok.ok());
    CHECK(ok.value().match);

    WorldSpec other = w;
    other.seed = w.seed + 1;
    auto bad = replay_scenario(other, sc, r.value().trace_text);
    REQUIRE(bad.ok());
    CHECK_FALSE(bad.value().match);
    CHECK_FALSE(bad.value().detail.empty());
}

TEST_CASE("an above-limit credit splits between wallet and linked account") {
    auto r = run_scenario(world_cfg("standard-world.cfg"),
                          scenario_cfg("u1-split-credit.cfg"));
    REQUIRE(r.ok());
    const RunResult& run = r.value();
    CHECK(run.status == RunStatus::Completed);
    CHECK(run.postconditions_ok);
    // 5000 arriving against 2000 of headroom: only the headroom is ever
    // minted, the rest is paid into the linked bank account
    CHECK(run.journal_text.find("core.mint|W-0001|2000|") !=
          std::string::npos);
    CHECK(run.journal_text.find("|3000|") != std::string::npos);
}

TEST_CASE("a rejected payee-side screening leaves no net movement") {
    auto r = run_scenario(world_cfg("standard-world.cfg"),
                          scenario_cfg("u1-payee-reject.cfg"));
    REQUIRE(r.ok());
    const RunResult& run = r.value();
    CHECK(run.status == RunStatus::Completed);
    CHECK_FALSE(run.all_succeeded);
    CHECK(run.postconditions_ok); // the expected failure, with zero deltas
    CHECK(run.conservation_ok);
    CHECK(run.failure_codes.count("ComplianceFailed") == 1);
}

TEST_CASE("an expired funds lock fails the checkout and frees the funds") {
    auto r = run_scenario(world_cfg("standard-world.cfg"),
                          scenario_cfg("u3-lock-expiry.cfg"));
    REQUIRE(r.ok());
    CHECK(r.value().status == RunStatus::Completed);
    CHECK(r.value().postconditions_ok);
    CHECK(r.value().failure_codes.count("LockExpired") == 1);
}

TEST_CASE("a consumer that never answers is reported as a deadlock") {
    auto r = run_scenario(world_cfg("standard-world.cfg"),
                          scenario_cfg("u3-stalled.cfg"));
    REQUIRE(r.ok());
    CHECK(r.value().status == RunStatus::Deadlocked);
    CHECK(r.value().postconditions_ok);
    CHECK(r.value().conservation_ok);
}

TEST_CASE("an exhausted tick budget is reported as divergence") {
    WorldSpec w = world_cfg("standard-world.cfg");
    w.toggles.tick_budget = 3;
    auto r = run_scenario(w, scenario_cfg("u1-baseline.cfg"));
    REQUIRE(r.ok());
    CHECK(r.value().status == RunStatus::Diverged);
    CHECK(r.value().conservation_ok); // money stays balanced even mid-flight
}

TEST_CASE("running without bindings is refused up front") {
    WorldSpec w = world_cfg("standard-world.cfg");
    w.bindings.clear();
    auto r = run_scenario(w, scenario_cfg("u1-baseline.cfg"));
    CHECK(r.error() == Err::BindingMissing);
}
