#pragma once

#include "dpound/engine.hpp"

#include <map>
#include <set>
#include <string>
#include <vector>

namespace dpound {

// One cell of the design-option battery: a full run of the standard world
// with a specific option bound into every slot the use case draws on.
struct MatrixRow {
    int use_case = 1;
    std::map<std::string, int> bindings;
    bool run_ok = false;     // terminated cleanly, postconditions held
    bool privacy_ok = false; // observed exposure matched the expectation
    Pence liquidity = 0;
    std::uint64_t hops = 0;
    std::set<std::string> failures;
    std::set<ParticipantId> exposed; // watched parties that saw personal data
    std::string trace_text;          // kept for conformance and replay checks
    std::string journal_text;
    std::string exposure_text;
};

struct MatrixReport {
    std::vector<MatrixRow> rows;
    bool all_ok = false;
    std::string text; // rendered table, one row per run
};

// Every valid combination of design options for the given use cases
// (1, 2, 3, or 0 for all). The third use case couples its lock and release
// slots, and settlement sub-options only vary where the release path uses
// the checkout machinery.
std::vector<std::map<std::string, int>> matrix_bindings(int use_case);

int matrix_use_case(const std::map<std::string, int>& bindings);

// Which of the watched parties (issuer, overlay network, partner
// institutions) are expected to see personal data under these bindings.
std::set<ParticipantId> expected_exposure(const std::map<std::string, int>& bindings);

// Observed counterpart, distilled from a run's exposure records.
std::set<ParticipantId> observed_exposure(const RunResult& result);

Result<MatrixReport> run_matrix(int use_case = 0);

// Design-option assessments: how well each option serves the use case once
// privacy, liquidity cost and operational fit are weighed together.
enum class Rating { Suitable, Partial, Unsuitable };
const char* rating_name(Rating r);
Rating suitability(const std::string& slot, int option);
std::string render_suitability();

} // namespace dpound
