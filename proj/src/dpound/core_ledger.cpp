#include "dpound/core_ledger.hpp"

#include <algorithm>

namespace dpound {

const char* lock_state_name(LockState s) {
    switch (s) {
        case LockState::Active: return "Active";
        case LockState::Released: return "Released";
        case LockState::Expired: return "Expired";
        case LockState::Cancelled: return "Cancelled";
    }
    return "Unknown";
}

void CoreLedger::journal_add(Tick tick, const std::string& kind,
                             const std::string& account, Pence amount,
                             const std::string& counterparty) {
    journal_.push_back(JournalEntry{tick, kind, account, amount, counterparty});
}

Result<WalletId> CoreLedger::open_wallet(const ParticipantId& owner,
                                         const ParticipantId& managing_pip,
                                         Role managing_pip_role, WalletKind kind,
                                         std::optional<Pence> holding_limit,
                                         std::optional<AccountId> linked_account) {
    if (!can_manage_wallets(managing_pip_role)) return Err::NotAuthorised;
    if (kind == WalletKind::Technical && holding_limit.has_value())
        return Err::TechnicalWithLimit;
    if (kind == WalletKind::User && !can_onboard_users(managing_pip_role))
        return Err::NotAuthorised;
    Wallet w;
    w.id = ids_->next(IdKind::Wallet);
    w.owner = owner;
    w.managing_pip = managing_pip;
    w.kind = kind;
    w.holding_limit = holding_limit;
    w.linked_account = std::move(linked_account);
    WalletId id = w.id;
    wallets_.emplace(id, std::move(w));
    return id;
}

Status CoreLedger::genesis_mint(const WalletId& wallet, Pence amount,
                                const AccountId& funding_account) {
    auto it = wallets_.find(wallet);
    if (it == wallets_.end()) return Err::UnknownWallet;
    auto bal = money_add(it->second.ledger_balance, amount);
    if (!bal) return Err::Overflow;
    it->second.ledger_balance = *bal;
    auto total = money_add(mint_total_, amount);
    if (!total) return Err::Overflow;
    mint_total_ = *total;
    journal_add(0, "core.mint", wallet, amount, funding_account);
    return {};
}

Result<MintOutcome> CoreLedger::mint_to(const WalletId& wallet, Pence amount,
                                        const AccountId& funding_account,
                                        Tick now, const FlowId& flow) {
    if (amount == 0) return Err::ZeroAmount;
    auto it = wallets_.find(wallet);
    if (it == wallets_.end()) return Err::UnknownWallet;
    Wallet& w = it->second;
    MintOutcome out;
    if (w.kind == WalletKind::Technical) {
        auto bal = money_add(w.ledger_balance, amount);
        if (!bal) return Err::Overflow;
        auto total = money_add(mint_total_, amount);
        if (!total) return Err::Overflow;
        w.ledger_balance = *bal;
        mint_total_ = *total;
        journal_add(now, "core.mint", wallet, amount, funding_account);
        out.completed = true;
        out.credited = amount;
        return out;
    }
    PendingCredit p;
    p.id = ids_->next(IdKind::Pending);
    p.wallet = wallet;
    p.amount = amount;
    p.kind = PendingKind::Mint;
    p.funding_account = funding_account;
    p.created = now;
    p.flow = flow;
    auto bucket = money_add(pending_mint_total_, amount);
    if (!bucket) return Err::Overflow;
    pending_mint_total_ = *bucket;
    out.pending = p.id;
    pendings_.emplace(p.id, std::move(p));
    return out;
}

LimitDecision CoreLedger::enforce_holding_limit(const WalletId& wallet,
                                                Pence incoming,
                                                HoldingLimitMode mode) const {
    LimitDecision d;
    d.credit = incoming;
    const Wallet& w = wallets_.at(wallet);
    if (w.kind == WalletKind::Technical || !w.holding_limit) return d;
    Pence limit = *w.holding_limit;
    Pence resting = w.ledger_balance;
    // excess = max(0, balance + incoming - limit)
    Pence headroom = limit > resting ? limit - resting : 0;
    if (incoming <= headroom) return d;
    Pence excess = incoming - headroom;
    if (mode == HoldingLimitMode::Reject) {
        d.kind = LimitDecision::Kind::Rejected;
        d.credit = 0;
        d.excess = incoming;
        return d;
    }
    d.kind = LimitDecision::Kind::Partial;
    d.credit = headroom;
    d.excess = excess;
    return d;
}

Result<ConfirmOutcome> CoreLedger::confirm_credit(const PendingId& pending,
                                                  const ParticipantId& pip,
                                                  bool approve,
                                                  HoldingLimitMode mode,
                                                  Tick now) {
    auto it = pendings_.find(pending);
    if (it == pendings_.end()) return Err::UnknownWallet;
    PendingCredit& p = it->second;
    const Wallet& w = wallets_.at(p.wallet);
    if (w.managing_pip != pip) return Err::WrongPip;
    if (p.state != PendingState::AwaitingPipConfirmation)
        return Err::AlreadyDecided;

    ConfirmOutcome out;
    out.pending_kind = p.kind;
    out.target_wallet = p.wallet;
    out.source_wallet = p.source_wallet;
    out.funding_account = p.funding_account;
    out.amount = p.amount;
    out.pending_id = p.id;
    out.flow = p.flow;

    auto fail_pending = [&](Err reason) {
        p.state = PendingState::Rejected;
        out.rejected = true;
        out.reject_reason = reason;
        if (p.kind == PendingKind::Transfer) {
            // revert the reserved debit back to the source wallet
            suspense_ -= p.amount;
            wallets_.at(p.source_wallet).ledger_balance += p.amount;
            journal_add(now, "core.revert", p.source_wallet, p.amount, p.wallet);
        } else {
            pending_mint_total_ -= p.amount;
        }
    };

    if (!approve) {
        fail_pending(Err::None);
        return out;
    }

    LimitDecision d = enforce_holding_limit(p.wallet, p.amount, mode);
    if (d.kind == LimitDecision::Kind::Rejected) {
        fail_pending(Err::HoldingLimitExceeded);
        return out;
    }

    Wallet& target = wallets_.at(p.wallet);
    auto bal = money_add(target.ledger_balance, d.credit);
    if (!bal) return Err::Overflow;
    target.ledger_balance = *bal;
    p.state = PendingState::Completed;
    out.credited = true;
    out.credited_amount = d.credit;
    out.waterfall_excess = d.excess;
    if (d.excess > 0) out.spill_account = target.linked_account;

    if (p.kind == PendingKind::Mint) {
        pending_mint_total_ -= p.amount;
        mint_total_ += d.credit;
        journal_add(now, "core.mint", p.wallet, d.credit, p.funding_account);
        // the never-minted excess is refunded on the rail by the caller
    } else {
        suspense_ -= p.amount;
        journal_add(now, "core.credit", p.wallet, d.credit, p.source_wallet);
        if (d.excess > 0) {
            // excess leaves the ledger toward the linked bank account
            burn_total_ += d.excess;
            journal_add(now, "core.spill", p.wallet, d.excess,
                        target.linked_account.value_or(""));
        }
    }
    return out;
}

std::vector<ConfirmOutcome> CoreLedger::timeout_pendings(Tick now, Tick timeout,
                                                         HoldingLimitMode mode) {
    std::vector<ConfirmOutcome> out;
    std::vector<PendingId> stale;
    for (const auto& [id, p] : pendings_) {
        if (p.state == PendingState::AwaitingPipConfirmation &&
            now > p.created && now - p.created >= timeout) {
            stale.push_back(id);
        }
    }
    for (const PendingId& id : stale) {
        PendingCredit& p = pendings_.at(id);
        ConfirmOutcome o;
        o.pending_kind = p.kind;
        o.target_wallet = p.wallet;
        o.source_wallet = p.source_wallet;
        o.funding_account = p.funding_account;
        o.amount = p.amount;
        o.pending_id = p.id;
        o.flow = p.flow;
        o.rejected = true;
        o.reject_reason = Err::PipTimeout;
        p.state = PendingState::Rejected;
        if (p.kind == PendingKind::Transfer) {
            suspense_ -= p.amount;
            wallets_.at(p.source_wallet).ledger_balance += p.amount;
            journal_add(now, "core.revert", p.source_wallet, p.amount, p.wallet);
        } else {
            pending_mint_total_ -= p.amount;
        }
        out.push_back(o);
    }
    (void)mode;
    return out;
}

Status CoreLedger::check_debit(const Wallet& w, Pence amount,
                               Pence min_available) const {
    if (amount > w.ledger_balance) return Err::InsufficientAvailable;
    Pence post = w.ledger_balance - amount;
    Pence locked = active_locks(w.id);
    if (post < locked) return Err::InsufficientAvailable;
    if (post - locked < min_available) return Err::InsufficientAvailable;
    return {};
}

Result<TransferOutcome> CoreLedger::transfer(const WalletId& from,
                                             const WalletId& to, Pence amount,
                                             Pence min_available,
                                             const ParticipantId& authorised_by,
                                             Tick now, const FlowId& flow) {
    if (amount == 0) return Err::ZeroAmount;
    auto fit = wallets_.find(from);
    if (fit == wallets_.end()) return Err::UnknownWallet;
    auto tit = wallets_.find(to);
    if (tit == wallets_.end()) return Err::UnknownWallet;
    Wallet& src = fit->second;
    if (src.managing_pip != authorised_by) return Err::NotAuthorised;
    if (Status s = check_debit(src, amount, min_available); !s) return s.error();

    TransferOutcome out;
    if (tit->second.kind == WalletKind::Technical) {
        auto bal = money_add(tit->second.ledger_balance, amount);
        if (!bal) return Err::Overflow;
        src.ledger_balance -= amount;
        tit->second.ledger_balance = *bal;
        journal_add(now, "core.xfer", from, amount, to);
        out.completed = true;
        return out;
    }
    // user wallet target: reserve now, credit on the payee PIP's confirmation
    src.ledger_balance -= amount;
    suspense_ += amount;
    PendingCredit p;
    p.id = ids_->next(IdKind::Pending);
    p.wallet = to;
    p.amount = amount;
    p.kind = PendingKind::Transfer;
    p.source_wallet = from;
    p.created = now;
    p.flow = flow;
    journal_add(now, "core.reserve", from, amount, to);
    out.pending = p.id;
    pendings_.emplace(p.id, std::move(p));
    return out;
}

Result<LockId> CoreLedger::lock_funds(const WalletId& wallet, Pence amount,
                                      const std::string& beneficiary,
                                      Tick expiry,
                                      const ParticipantId& authorised_by,
                                      Tick now) {
    if (amount == 0) return Err::ZeroAmount;
    auto it = wallets_.find(wallet);
    if (it == wallets_.end()) return Err::UnknownWallet;
    if (it->second.managing_pip != authorised_by) return Err::NotAuthorised;
    if (available(wallet) < amount) return Err::InsufficientAvailable;
    LedgerLock l;
    l.id = ids_->next(IdKind::Lock);
    l.wallet = wallet;
    l.amount = amount;
    l.beneficiary = beneficiary;
    l.expiry = expiry;
    LockId id = l.id;
    locks_.emplace(id, std::move(l));
    journal_add(now, "core.lock", wallet, amount, id);
    return id;
}

std::vector<LockId> CoreLedger::expire_locks(Tick now) {
    std::vector<LockId> expired;
    for (auto& [id, l] : locks_) {
        // exclusive: a lock whose expiry equals the current tick is still live
        if (l.state == LockState::Active && l.expiry < now) {
            l.state = LockState::Expired;
            journal_add(now, "core.expire", l.wallet, l.amount, id);
            expired.push_back(id);
        }
    }
    return expired;
}

Status CoreLedger::cancel_lock(const LockId& lock,
                               const ParticipantId& authorised_by, Tick now) {
    auto it = locks_.find(lock);
    if (it == locks_.end()) return Err::LockNotActive;
    LedgerLock& l = it->second;
    if (l.state != LockState::Active) return Err::LockNotActive;
    if (wallets_.at(l.wallet).managing_pip != authorised_by)
        return Err::NotAuthorised;
    l.state = LockState::Cancelled;
    journal_add(now, "core.cancel", l.wallet, l.amount, lock);
    return {};
}

Result<ReleaseInfo> CoreLedger::release_and_burn(const LockId& lock,
                                                 const ParticipantId& authorised_by,
                                                 Tick now) {
    auto it = locks_.find(lock);
    if (it == locks_.end()) return Err::LockNotActive;
    LedgerLock& l = it->second;
    if (l.state != LockState::Active) return Err::LockNotActive;
    Wallet& w = wallets_.at(l.wallet);
    if (w.managing_pip != authorised_by) return Err::NotAuthorised;
    // the lock guarantees cover: ledger debit cannot take balance below the
    // remaining locked amount, so available balance is unchanged
    l.state = LockState::Released;
    w.ledger_balance -= l.amount;
    burn_total_ += l.amount;
    journal_add(now, "core.release", l.wallet, l.amount, lock);
    journal_add(now, "core.burn", l.wallet, l.amount, l.beneficiary);
    return ReleaseInfo{l.wallet, l.amount, l.beneficiary};
}

Result<ReleaseInfo> CoreLedger::release_and_transfer(
    const LockId& lock, const WalletId& to, const ParticipantId& authorised_by,
    Tick now) {
    auto it = locks_.find(lock);
    if (it == locks_.end()) return Err::LockNotActive;
    LedgerLock& l = it->second;
    if (l.state != LockState::Active) return Err::LockNotActive;
    auto tit = wallets_.find(to);
    if (tit == wallets_.end()) return Err::UnknownWallet;
    if (tit->second.kind != WalletKind::Technical) return Err::NotAuthorised;
    Wallet& w = wallets_.at(l.wallet);
    if (w.managing_pip != authorised_by) return Err::NotAuthorised;
    auto bal = money_add(tit->second.ledger_balance, l.amount);
    if (!bal) return Err::Overflow;
    l.state = LockState::Released;
    w.ledger_balance -= l.amount;
    tit->second.ledger_balance = *bal;
    journal_add(now, "core.release", l.wallet, l.amount, lock);
    journal_add(now, "core.xfer", l.wallet, l.amount, to);
    return ReleaseInfo{l.wallet, l.amount, l.beneficiary};
}

Status CoreLedger::burn_from(const WalletId& wallet, Pence amount,
                             const AccountId& target_account,
                             const ParticipantId& authorised_by, Tick now,
                             Pence min_available) {
    if (amount == 0) return Err::ZeroAmount;
    auto it = wallets_.find(wallet);
    if (it == wallets_.end()) return Err::UnknownWallet;
    Wallet& w = it->second;
    if (w.managing_pip != authorised_by) return Err::NotAuthorised;
    if (Status s = check_debit(w, amount, min_available); !s) return s.error();
    w.ledger_balance -= amount;
    burn_total_ += amount;
    journal_add(now, "core.burn", wallet, amount, target_account);
    return {};
}

Pence CoreLedger::active_locks(const WalletId& w) const {
    Pence sum = 0;
    for (const auto& [id, l] : locks_) {
        if (l.wallet == w && l.state == LockState::Active) sum += l.amount;
    }
    return sum;
}

Pence CoreLedger::available(const WalletId& w) const {
    Pence bal = wallets_.at(w).ledger_balance;
    Pence locked = active_locks(w);
    return bal >= locked ? bal - locked : 0;
}

const PendingCredit* CoreLedger::pending(const PendingId& p) const {
    auto it = pendings_.find(p);
    return it == pendings_.end() ? nullptr : &it->second;
}

std::vector<PendingId> CoreLedger::awaiting_pendings() const {
    std::vector<PendingId> out;
    for (const auto& [id, p] : pendings_) {
        if (p.state == PendingState::AwaitingPipConfirmation) out.push_back(id);
    }
    return out;
}

Pence CoreLedger::sum_wallets() const {
    Pence sum = 0;
    for (const auto& [id, w] : wallets_) sum += w.ledger_balance;
    return sum;
}

} // namespace dpound
