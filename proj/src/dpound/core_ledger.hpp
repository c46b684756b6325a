#pragma once

#include "dpound/envelope.hpp"
#include "dpound/error.hpp"
#include "dpound/ids.hpp"
#include "dpound/money.hpp"
#include "dpound/roles.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dpound {

enum class WalletKind { User, Technical };

struct Wallet {
    WalletId id;
    ParticipantId owner;
    ParticipantId managing_pip;
    WalletKind kind = WalletKind::User;
    std::optional<Pence> holding_limit; // user wallets only
    std::optional<AccountId> linked_account; // waterfall target
    Pence ledger_balance = 0;
};

enum class LockState { Active, Released, Expired, Cancelled };

const char* lock_state_name(LockState s);

struct LedgerLock {
    LockId id;
    WalletId wallet;
    Pence amount = 0;
    std::string beneficiary; // account or wallet id, bound at creation
    Tick expiry = 0;
    LockState state = LockState::Active;
};

enum class PendingState { AwaitingPipConfirmation, Completed, Rejected };
enum class PendingKind { Mint, Transfer };

struct PendingCredit {
    PendingId id;
    WalletId wallet;
    Pence amount = 0;
    PendingKind kind = PendingKind::Mint;
    PendingState state = PendingState::AwaitingPipConfirmation;
    WalletId source_wallet;    // transfer only
    AccountId funding_account; // mint only: rail account that funded it
    Tick created = 0;
    FlowId flow;
};

enum class HoldingLimitMode { Waterfall, Reject };

struct LimitDecision {
    enum class Kind { FullCredit, Partial, Rejected } kind = Kind::FullCredit;
    Pence credit = 0;
    Pence excess = 0;
};

struct JournalEntry {
    Tick tick = 0;
    std::string kind; // e.g. core.mint, core.reserve
    std::string account;
    Pence amount = 0;
    std::string counterparty;
};

struct MintOutcome {
    bool completed = false;
    Pence credited = 0;
    std::optional<PendingId> pending;
};

struct TransferOutcome {
    bool completed = false;
    std::optional<PendingId> pending;
};

// What happened when a pending credit was decided. The caller owns routing the
// rail legs this implies (waterfall spill, compensating return).
struct ConfirmOutcome {
    bool credited = false;
    Pence credited_amount = 0;
    Pence waterfall_excess = 0;
    std::optional<AccountId> spill_account;
    bool rejected = false;
    Err reject_reason = Err::None;
    PendingKind pending_kind = PendingKind::Mint;
    WalletId target_wallet;
    WalletId source_wallet;    // transfer reject: funds reverted here
    AccountId funding_account; // mint reject: refund goes here
    Pence amount = 0;          // original pending amount
    PendingId pending_id;
    FlowId flow;
};

struct ReleaseInfo {
    WalletId wallet;
    Pence amount = 0;
    std::string beneficiary;
};

// The digital pound core ledger: wallets, two-phase credits, funds locks and
// the mint/burn boundary. Balances only change through the checked operations
// below; every change lands in the journal.
class CoreLedger {
public:
    explicit CoreLedger(IdSequencer* ids) : ids_(ids) {}

    Result<WalletId> open_wallet(const ParticipantId& owner,
                                 const ParticipantId& managing_pip,
                                 Role managing_pip_role, WalletKind kind,
                                 std::optional<Pence> holding_limit,
                                 std::optional<AccountId> linked_account);

    // Setup-only immediate credit used to seed opening balances.
    Status genesis_mint(const WalletId& wallet, Pence amount,
                        const AccountId& funding_account);

    Result<MintOutcome> mint_to(const WalletId& wallet, Pence amount,
                                const AccountId& funding_account, Tick now,
                                const FlowId& flow);

    Result<ConfirmOutcome> confirm_credit(const PendingId& pending,
                                          const ParticipantId& pip,
                                          bool approve, HoldingLimitMode mode,
                                          Tick now);

    // Pendings older than `timeout` are auto-rejected; returns their outcomes
    // so the caller can issue compensating returns.
    std::vector<ConfirmOutcome> timeout_pendings(Tick now, Tick timeout,
                                                 HoldingLimitMode mode);

    LimitDecision enforce_holding_limit(const WalletId& wallet, Pence incoming,
                                        HoldingLimitMode mode) const;

    Result<TransferOutcome> transfer(const WalletId& from, const WalletId& to,
                                     Pence amount, Pence min_available,
                                     const ParticipantId& authorised_by,
                                     Tick now, const FlowId& flow);

    Result<LockId> lock_funds(const WalletId& wallet, Pence amount,
                              const std::string& beneficiary, Tick expiry,
                              const ParticipantId& authorised_by, Tick now);

    std::vector<LockId> expire_locks(Tick now);

    Status cancel_lock(const LockId& lock, const ParticipantId& authorised_by,
                       Tick now);

    Result<ReleaseInfo> release_and_burn(const LockId& lock,
                                         const ParticipantId& authorised_by,
                                         Tick now);

    Result<ReleaseInfo> release_and_transfer(const LockId& lock,
                                             const WalletId& to,
                                             const ParticipantId& authorised_by,
                                             Tick now);

    Status burn_from(const WalletId& wallet, Pence amount,
                     const AccountId& target_account,
                     const ParticipantId& authorised_by, Tick now,
                     Pence min_available = 0);

    // accessors
    bool wallet_exists(const WalletId& w) const { return wallets_.count(w) != 0; }
    const Wallet& wallet(const WalletId& w) const { return wallets_.at(w); }
    Pence balance(const WalletId& w) const { return wallets_.at(w).ledger_balance; }
    Pence active_locks(const WalletId& w) const;
    Pence available(const WalletId& w) const;
    const LedgerLock& lock(const LockId& l) const { return locks_.at(l); }
    bool lock_exists(const LockId& l) const { return locks_.count(l) != 0; }
    const PendingCredit* pending(const PendingId& p) const;
    std::vector<PendingId> awaiting_pendings() const;

    Pence sum_wallets() const;
    Pence suspense() const { return suspense_; }
    Pence pending_mint_total() const { return pending_mint_total_; }
    Pence mint_total() const { return mint_total_; }
    Pence burn_total() const { return burn_total_; }

    const std::vector<JournalEntry>& journal() const { return journal_; }
    const std::map<WalletId, Wallet>& wallets() const { return wallets_; }

private:
    void journal_add(Tick tick, const std::string& kind,
                     const std::string& account, Pence amount,
                     const std::string& counterparty);
    // Shared availability guard for ledger debits.
    Status check_debit(const Wallet& w, Pence amount, Pence min_available) const;

    IdSequencer* ids_;
    std::map<WalletId, Wallet> wallets_;
    std::map<LockId, LedgerLock> locks_;
    std::map<PendingId, PendingCredit> pendings_;
    std::vector<JournalEntry> journal_;
    Pence suspense_ = 0;          // reserved transfer funds awaiting confirmation
    Pence pending_mint_total_ = 0; // mint instructions awaiting confirmation
    Pence mint_total_ = 0;
    Pence burn_total_ = 0;
};

} // namespace dpound
