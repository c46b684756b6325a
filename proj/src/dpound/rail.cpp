#include "dpound/rail.hpp"

#include <algorithm>
#include <cassert>

namespace dpound {

void SettlementRail::journal_add(Tick tick, const std::string& kind,
                                 const std::string& account, Pence amount,
                                 const std::string& counterparty) {
    journal_.push_back(JournalEntry{tick, kind, account, amount, counterparty});
}

AccountId SettlementRail::open_settlement_account(const ParticipantId& owner,
                                                  Pence balance) {
    SettlementAccount acc;
    acc.id = ids_->next(IdKind::Account);
    acc.owner = owner;
    acc.balance = balance;
    AccountId id = acc.id;
    settlement_.emplace(id, std::move(acc));
    return id;
}

Result<AccountId> SettlementRail::open_book_account(const ParticipantId& host,
                                                    const ParticipantId& owner,
                                                    Pence balance) {
    bool host_has_settlement = false;
    for (const auto& [id, acc] : settlement_) {
        if (acc.owner == host) {
            host_has_settlement = true;
            break;
        }
    }
    if (!host_has_settlement) return Err::UnknownAccount;
    BookAccount acc;
    acc.id = ids_->next(IdKind::Account);
    acc.host = host;
    acc.owner = owner;
    acc.balance = balance;
    AccountId id = acc.id;
    books_.emplace(id, std::move(acc));
    return id;
}

Status SettlementRail::register_fps_participant(const ParticipantId& p,
                                                const SortCode& sort_code,
                                                FpsMode mode,
                                                const ParticipantId& sponsor) {
    if (mode == FpsMode::Dcnsp) {
        auto it = fps_by_participant_.find(sponsor);
        if (it == fps_by_participant_.end()) return Err::SponsorNotDcsp;
        if (fps_by_sort_.at(it->second).mode != FpsMode::Dcsp)
            return Err::SponsorNotDcsp;
    } else {
        // settling participants hold their own settlement account
        bool has_settlement = false;
        for (const auto& [id, acc] : settlement_) {
            if (acc.owner == p) {
                has_settlement = true;
                break;
            }
        }
        if (!has_settlement) return Err::NotFpsParticipant;
    }
    FpsMembership m;
    m.participant = p;
    m.sort_code = sort_code;
    m.mode = mode;
    m.sponsor = sponsor;
    fps_by_sort_[sort_code] = m;
    fps_by_participant_[p] = sort_code;
    return {};
}

std::optional<FpsMembership> SettlementRail::membership(
    const ParticipantId& p) const {
    auto it = fps_by_participant_.find(p);
    if (it == fps_by_participant_.end()) return std::nullopt;
    return fps_by_sort_.at(it->second);
}

namespace {

AccountId settlement_account_of(
    const std::map<AccountId, SettlementAccount>& settlement,
    const ParticipantId& owner) {
    for (const auto& [id, acc] : settlement) {
        if (acc.owner == owner) return id;
    }
    return {};
}

} // namespace

Result<FpsClearing> SettlementRail::fps_pay(const FpsPayment& payment,
                                            Tick now) {
    if (!scheme_open_) return Err::SchemeClosed;
    if (payment.amount == 0) return Err::ZeroAmount;
    if (!seen_refs_.insert(payment.client_ref).second)
        return Err::DuplicateInstruction;

    auto dit = fps_by_sort_.find(payment.dest_sort);
    if (dit == fps_by_sort_.end()) return Err::UnknownDestination;
    const FpsMembership& dest = dit->second;

    // destination settlement side: own account for direct settlers, the
    // sponsor's account for non-settling participants
    ParticipantId dest_settler =
        dest.mode == FpsMode::Dcsp ? dest.participant : dest.sponsor;
    AccountId dest_settlement = settlement_account_of(settlement_, dest_settler);
    if (dest_settlement.empty()) return Err::UnknownDestination;

    bool credit_settlement_directly = payment.dest_account == dest_settlement;
    if (!credit_settlement_directly) {
        auto bit = books_.find(payment.dest_account);
        if (bit == books_.end()) return Err::UnknownDestination;
        // the destination account must sit on the settling institution's book
        if (bit->second.host != dest_settler) return Err::UnknownDestination;
    }

    // source side: a book account backed by its host's settlement account, or
    // an institution paying straight from its settlement account
    AccountId src_settlement;
    BookAccount* src_book = nullptr;
    if (auto bit = books_.find(payment.from_account); bit != books_.end()) {
        src_book = &bit->second;
        src_settlement = settlement_account_of(settlement_, src_book->host);
        if (src_settlement.empty()) return Err::UnknownAccount;
        if (src_book->balance < payment.amount) return Err::InsufficientFunds;
        if (settlement_.at(src_settlement).balance < payment.amount)
            return Err::InsufficientFunds;
    } else if (settlement_.count(payment.from_account) != 0) {
        src_settlement = payment.from_account;
        if (settlement_.at(src_settlement).balance < payment.amount)
            return Err::InsufficientFunds;
    } else {
        return Err::UnknownAccount;
    }

    // clear: exactly one debit and one credit at account level, with the
    // interbank movement across RTGS settlement accounts applied immediately
    InstructionId instr = ids_->next(IdKind::Instruction);
    if (src_book != nullptr) {
        src_book->balance -= payment.amount;
        journal_add(now, "bank.debit", src_book->id, payment.amount, instr);
    }
    if (src_settlement != dest_settlement) {
        settlement_.at(src_settlement).balance -= payment.amount;
        journal_add(now, "rtgs.debit", src_settlement, payment.amount, instr);
        auto bal = money_add(settlement_.at(dest_settlement).balance, payment.amount);
        if (!bal) return Err::Overflow;
        settlement_.at(dest_settlement).balance = *bal;
        journal_add(now, "rtgs.credit", dest_settlement, payment.amount, instr);
    }
    if (!credit_settlement_directly) {
        BookAccount& dst = books_.at(payment.dest_account);
        auto bal = money_add(dst.balance, payment.amount);
        if (!bal) return Err::Overflow;
        dst.balance = *bal;
        journal_add(now, "bank.credit", dst.id, payment.amount, instr);
    }
    journal_add(now, "fps.clear", payment.from_account, payment.amount,
                payment.dest_account);

    FpsClearing clearing;
    clearing.instruction = instr;
    clearing.dest_participant = dest_settler;
    clearing.credited_account =
        credit_settlement_directly ? dest_settlement : payment.dest_account;
    clearing.dcnsp = dest.mode == FpsMode::Dcnsp;
    // exactly one notification: the destination participant itself; for a
    // non-settling participant the scheme notifies it directly while funds sit
    // with the sponsor
    clearing.notify = dest.participant;
    return clearing;
}

Status SettlementRail::rtgs_transfer(const AccountId& from, const AccountId& to,
                                     Pence amount, Tick now,
                                     const std::string& tag) {
    if (amount == 0) return {}; // cleared no-op
    auto fit = settlement_.find(from);
    auto tit = settlement_.find(to);
    if (fit == settlement_.end() || tit == settlement_.end())
        return Err::UnknownAccount;
    if (fit->second.balance < amount) return Err::InsufficientSettlementFunds;
    auto bal = money_add(tit->second.balance, amount);
    if (!bal) return Err::Overflow;
    fit->second.balance -= amount;
    tit->second.balance = *bal;
    journal_add(now, tag + ".debit", from, amount, to);
    journal_add(now, tag + ".credit", to, amount, from);
    return {};
}

Status SettlementRail::book_transfer(const AccountId& from, const AccountId& to,
                                     Pence amount, Tick now) {
    auto fit = books_.find(from);
    auto tit = books_.find(to);
    if (fit == books_.end() || tit == books_.end()) return Err::UnknownAccount;
    if (fit->second.host != tit->second.host) return Err::UnknownAccount;
    if (fit->second.balance < amount) return Err::InsufficientFunds;
    auto bal = money_add(tit->second.balance, amount);
    if (!bal) return Err::Overflow;
    fit->second.balance -= amount;
    tit->second.balance = *bal;
    journal_add(now, "bank.debit", from, amount, to);
    journal_add(now, "bank.credit", to, amount, from);
    return {};
}

Status SettlementRail::book_credit(const AccountId& account, Pence amount,
                                   Tick now, const std::string& counterparty) {
    auto it = books_.find(account);
    if (it == books_.end()) return Err::UnknownAccount;
    auto bal = money_add(it->second.balance, amount);
    if (!bal) return Err::Overflow;
    it->second.balance = *bal;
    journal_add(now, "bank.credit", account, amount, counterparty);
    return {};
}

Status SettlementRail::book_debit(const AccountId& account, Pence amount,
                                  Tick now, const std::string& counterparty) {
    auto it = books_.find(account);
    if (it == books_.end()) return Err::UnknownAccount;
    if (it->second.balance < amount) return Err::InsufficientFunds;
    it->second.balance -= amount;
    journal_add(now, "bank.debit", account, amount, counterparty);
    return {};
}

NetSettlementBatch& SettlementRail::batch_for(Tick now, Tick window) {
    for (auto& [id, b] : batches_) {
        if (b.state == BatchState::Open && now < b.window_end) return b;
    }
    NetSettlementBatch b;
    b.id = ids_->next(IdKind::Batch);
    // windows close on the tick grid
    b.window_end = ((now / window) + 1) * window;
    BatchId id = b.id;
    return batches_.emplace(id, std::move(b)).first->second;
}

BatchId SettlementRail::append_obligation(const AccountId& debtor,
                                          const AccountId& creditor,
                                          Pence amount, Tick now, Tick window,
                                          const FlowId& flow) {
    NetSettlementBatch& b = batch_for(now, window);
    b.obligations.push_back(Obligation{debtor, creditor, amount, flow});
    return b.id;
}

Status SettlementRail::cancel_obligation(const BatchId& id, const FlowId& flow) {
    auto it = batches_.find(id);
    if (it == batches_.end()) return Err::EmptyBatch;
    NetSettlementBatch& b = it->second;
    if (b.state != BatchState::Open) return Err::AlreadyDecided;
    auto& obs = b.obligations;
    obs.erase(std::remove_if(obs.begin(), obs.end(),
                             [&](const Obligation& o) { return o.flow == flow; }),
              obs.end());
    return {};
}

Result<BatchResult> SettlementRail::settle_batch(const BatchId& id, Tick now) {
    auto it = batches_.find(id);
    if (it == batches_.end()) return Err::EmptyBatch;
    NetSettlementBatch& b = it->second;
    if (b.obligations.empty()) {
        b.state = BatchState::Settled;
        return BatchResult{b.id, true, {}};
    }
    if (b.state == BatchState::Settled) return Err::AlreadyDecided;

    // net pairwise obligations into per-account positions
    b.nets.clear();
    for (const Obligation& o : b.obligations) {
        b.nets[o.debtor] -= static_cast<std::int64_t>(o.amount);
        b.nets[o.creditor] += static_cast<std::int64_t>(o.amount);
    }
    std::int64_t sum = 0;
    for (const auto& [acc, net] : b.nets) sum += net;
    assert(sum == 0 && "net positions must sum to zero");
    b.state = BatchState::Netted;

    // all-or-nothing: verify every net debtor can fund its position first
    for (const auto& [acc, net] : b.nets) {
        if (net >= 0) continue;
        auto ait = settlement_.find(acc);
        if (ait == settlement_.end()) return Err::UnknownAccount;
        if (ait->second.balance < static_cast<Pence>(-net))
            return Err::InsufficientSettlementFunds;
    }
    for (const auto& [acc, net] : b.nets) {
        if (net < 0) {
            settlement_.at(acc).balance -= static_cast<Pence>(-net);
            journal_add(now, "rtgs.debit", acc, static_cast<Pence>(-net), b.id);
        }
    }
    for (const auto& [acc, net] : b.nets) {
        if (net > 0) {
            settlement_.at(acc).balance += static_cast<Pence>(net);
            journal_add(now, "rtgs.credit", acc, static_cast<Pence>(net), b.id);
        }
    }
    b.state = BatchState::Settled;
    return BatchResult{b.id, true, b.nets};
}

std::vector<BatchResult> SettlementRail::close_due_batches(Tick now) {
    std::vector<BatchResult> out;
    for (auto& [id, b] : batches_) {
        if (b.state == BatchState::Open && b.window_end <= now) {
            auto r = settle_batch(id, now);
            if (r.ok()) {
                out.push_back(r.value());
            } else {
                out.push_back(BatchResult{id, false, b.nets});
            }
        }
    }
    return out;
}

// Forces still-open windows closed.  Batches already netted but unsettled
// stay put: that failure was reported when the window closed.
std::vector<BatchResult> SettlementRail::flush_batches(Tick now) {
    std::vector<BatchResult> out;
    for (auto& [id, b] : batches_) {
        if (b.state == BatchState::Open) {
            auto r = settle_batch(id, now);
            if (r.ok()) {
                out.push_back(r.value());
            } else {
                out.push_back(BatchResult{id, false, b.nets});
            }
        }
    }
    return out;
}

std::vector<BatchId> SettlementRail::unsettled_batches() const {
    std::vector<BatchId> out;
    for (const auto& [id, b] : batches_) {
        if (b.state == BatchState::Netted) out.push_back(id);
    }
    return out;
}

Pence SettlementRail::sum_settlement() const {
    Pence sum = 0;
    for (const auto& [id, acc] : settlement_) sum += acc.balance;
    return sum;
}

Pence SettlementRail::sum_books() const {
    Pence sum = 0;
    for (const auto& [id, acc] : books_) sum += acc.balance;
    return sum;
}

} // namespace dpound
