#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace dpound {

// Identifiers are plain strings with a typed prefix, issued from per-kind
// counters so every run mints the same sequence (W-0001, W-0002, ...).
using WalletId = std::string;
using AccountId = std::string;
using LockId = std::string;
using PendingId = std::string;
using MsgId = std::string;
using InstructionId = std::string;
using BatchId = std::string;
using FlowId = std::string;
using EscrowId = std::string;
using RegistrationId = std::string;
using ParticipantId = std::string;
using SortCode = std::string;
using Alias = std::string;

enum class IdKind {
    Wallet,
    Account,
    Lock,
    Pending,
    Message,
    Instruction,
    Batch,
    Flow,
    Escrow,
    Registration,
};

class IdSequencer {
public:
    std::string next(IdKind kind);

private:
    std::map<IdKind, std::uint64_t> counters_;
};

} // namespace dpound
