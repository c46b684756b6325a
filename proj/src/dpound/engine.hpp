#pragma once

#include "dpound/world.hpp"

#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

namespace dpound {

enum class RunStatus { Completed, Deadlocked, Diverged };

const char* run_status_name(RunStatus s);

// (stage, participant, datum kind) triple: who saw which class of personal
// data, attributed to the design-option stage of the message that carried it.
using ExposureKey = std::tuple<std::string, ParticipantId, DatumKind>;

struct RunResult {
    RunStatus status = RunStatus::Completed;
    bool conservation_ok = true;
    std::string conservation_detail;
    bool postconditions_ok = false;
    std::vector<std::string> clauses; // "ok <text>" / "FAIL <text>"

    std::string trace_text;
    std::string journal_text;
    std::string exposure_text;
    std::string postconditions_text;

    Pence liquidity_demand = 0;
    std::uint64_t hops = 0;
    std::set<std::string> failure_codes;
    std::set<ExposureKey> exposure;
    std::map<std::string, int> bindings;
    bool unsettled_batch = false;
    bool all_succeeded = false;

    std::uint64_t seal_ops = 0;
    std::uint64_t open_ops = 0;
};

Result<RunResult> run_scenario(const WorldSpec& world, const ScenarioSpec& scenario);

// Re-runs the scenario and byte-compares the fresh trace against a recorded
// one. `detail` carries the first divergence when the comparison fails.
struct ReplayReport {
    bool match = false;
    std::string detail;
};

Result<ReplayReport> replay_scenario(const WorldSpec& world,
                                     const ScenarioSpec& scenario,
                                     const std::string& recorded_trace);

} // namespace dpound
