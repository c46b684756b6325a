#pragma once

#include "dpound/world.hpp"

namespace dpound {

// Creates the scenario's flow(s), seeds API registrations and directory feeds
// implied by the world's bindings, and queues the opening message(s).
void initiate_scenario(World& world);

// Delivers one message to its receiver's handler. All balance changes happen
// inside handlers through the ledger and rail APIs.
void handle_message(World& world, const Envelope& env);

// Engine callbacks for time-driven events.
void on_timeout_outcomes(World& world, const std::vector<ConfirmOutcome>& outs);
void on_core_locks_expired(World& world, const std::vector<LockId>& locks);
void on_pip_timers(World& world);
void on_batch_results(World& world, const std::vector<BatchResult>& results);

} // namespace dpound
