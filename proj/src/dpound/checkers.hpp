#pragma once

#include "dpound/money.hpp"

#include <string>

namespace dpound {

// Validators that work from the artifact text alone, with no access to the
// engine's internal state. Used by the test suite to cross-check what a run
// wrote against what the files themselves imply.

struct CheckReport {
    bool ok = true;
    std::string detail;
};

// Double-entry and issuance checks over journal.txt:
//  - every amount is positive
//  - settlement credits and debits balance within each tick
//  - net settlement flow into the backing account equals post-genesis
//    minting minus burning and waterfall spill
CheckReport check_journal(const std::string& journal_text,
                          const std::string& backing_account);

// Shape checks over trace.txt: header lines first, six pipe-separated fields
// per body line, non-decreasing ticks, unique message ids.
CheckReport check_trace(const std::string& trace_text);

// True when a component role appears in exposure.txt holding personal data.
// Alias rows do not count: an alias is the datum payments are addressed by.
bool role_exposed(const std::string& exposure_text, const std::string& role);

// Reduces trace.txt to its role-level edge set: unique
// "sender_role>receiver_role:kind" lines in order of first appearance.
// Tick numbers and message ids drop out, so the result is stable against
// timing shifts that do not change who talks to whom.
std::string trace_edges(const std::string& trace_text);

} // namespace dpound
