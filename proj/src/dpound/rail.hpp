#pragma once

#include "dpound/core_ledger.hpp"
#include "dpound/error.hpp"
#include "dpound/ids.hpp"
#include "dpound/money.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace dpound {

struct SettlementAccount {
    AccountId id;
    ParticipantId owner;
    Pence balance = 0;
};

// A customer-facing (or institution-internal) account on some institution's
// book. The host institution must hold a settlement account.
struct BookAccount {
    AccountId id;
    ParticipantId host;
    ParticipantId owner;
    Pence balance = 0;
};

enum class FpsMode { Dcsp, Dcnsp };

struct FpsMembership {
    ParticipantId participant;
    SortCode sort_code;
    FpsMode mode = FpsMode::Dcsp;
    ParticipantId sponsor; // DCNSP only: a DCSP whose settlement account is used
};

struct FpsPayment {
    std::string client_ref; // idempotency key; duplicates are rejected
    AccountId from_account; // book account or settlement account
    SortCode dest_sort;
    AccountId dest_account;
    Pence amount = 0;
};

struct FpsClearing {
    InstructionId instruction;
    ParticipantId dest_participant; // institution credited (or sponsor host)
    ParticipantId notify;           // who receives the single scheme notification
    AccountId credited_account;
    bool dcnsp = false;
};

enum class BatchState { Open, Netted, Settled };

struct Obligation {
    AccountId debtor;   // settlement account
    AccountId creditor; // settlement account
    Pence amount = 0;
    FlowId flow;
};

struct NetSettlementBatch {
    BatchId id;
    Tick window_end = 0;
    BatchState state = BatchState::Open;
    std::vector<Obligation> obligations;
    // per-account net positions, computed when the batch closes
    std::map<AccountId, std::int64_t> nets;
};

struct BatchResult {
    BatchId id;
    bool settled = false;
    std::map<AccountId, std::int64_t> nets;
};

// The settlement-rail side of the ecosystem: RTGS settlement accounts,
// commercial bank books, the instant payment scheme and the deferred
// net-settlement payment system. One configured settlement account (the
// backing account) mirrors the core ledger's mint/burn boundary.
class SettlementRail {
public:
    explicit SettlementRail(IdSequencer* ids) : ids_(ids) {}

    AccountId open_settlement_account(const ParticipantId& owner, Pence balance);
    Result<AccountId> open_book_account(const ParticipantId& host,
                                        const ParticipantId& owner,
                                        Pence balance);

    void set_backing_account(const AccountId& acc) { backing_ = acc; }
    const AccountId& backing_account() const { return backing_; }

    Status register_fps_participant(const ParticipantId& p,
                                    const SortCode& sort_code, FpsMode mode,
                                    const ParticipantId& sponsor = {});

    void set_scheme_open(bool open) { scheme_open_ = open; }
    bool scheme_open() const { return scheme_open_; }

    Result<FpsClearing> fps_pay(const FpsPayment& payment, Tick now);

    Status rtgs_transfer(const AccountId& from, const AccountId& to,
                         Pence amount, Tick now, const std::string& tag = "rtgs");

    Status book_transfer(const AccountId& from, const AccountId& to,
                         Pence amount, Tick now);
    Status book_credit(const AccountId& account, Pence amount, Tick now,
                       const std::string& counterparty);
    Status book_debit(const AccountId& account, Pence amount, Tick now,
                      const std::string& counterparty);

    // Deferred net settlement. Obligations join the batch whose window covers
    // `now`; close_due_batches nets every batch whose window has ended and
    // tries to settle it.
    BatchId append_obligation(const AccountId& debtor, const AccountId& creditor,
                              Pence amount, Tick now, Tick window,
                              const FlowId& flow);
    // Withdraws a flow's obligations from a still-open batch.
    Status cancel_obligation(const BatchId& id, const FlowId& flow);
    std::vector<BatchResult> close_due_batches(Tick now);
    std::vector<BatchResult> flush_batches(Tick now); // scenario end
    Result<BatchResult> settle_batch(const BatchId& id, Tick now);

    // accessors
    bool settlement_exists(const AccountId& a) const { return settlement_.count(a) != 0; }
    bool book_exists(const AccountId& a) const { return books_.count(a) != 0; }
    Pence settlement_balance(const AccountId& a) const { return settlement_.at(a).balance; }
    Pence book_balance(const AccountId& a) const { return books_.at(a).balance; }
    const BookAccount& book(const AccountId& a) const { return books_.at(a); }
    const SettlementAccount& settlement(const AccountId& a) const { return settlement_.at(a); }
    std::optional<FpsMembership> membership(const ParticipantId& p) const;
    const std::map<BatchId, NetSettlementBatch>& batches() const { return batches_; }
    std::vector<BatchId> unsettled_batches() const;

    Pence sum_settlement() const;
    Pence sum_books() const;

    const std::vector<JournalEntry>& journal() const { return journal_; }
    const std::map<AccountId, SettlementAccount>& settlement_accounts() const { return settlement_; }
    const std::map<AccountId, BookAccount>& book_accounts() const { return books_; }

private:
    void journal_add(Tick tick, const std::string& kind,
                     const std::string& account, Pence amount,
                     const std::string& counterparty);
    NetSettlementBatch& batch_for(Tick now, Tick window);

    IdSequencer* ids_;
    std::map<AccountId, SettlementAccount> settlement_;
    std::map<AccountId, BookAccount> books_;
    std::map<SortCode, FpsMembership> fps_by_sort_;
    std::map<ParticipantId, SortCode> fps_by_participant_;
    std::set<std::string> seen_refs_;
    std::map<BatchId, NetSettlementBatch> batches_;
    std::vector<JournalEntry> journal_;
    AccountId backing_;
    bool scheme_open_ = true;
};

} // namespace dpound
