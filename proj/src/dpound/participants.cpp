#include "dpound/participants.hpp"

#include <cassert>
#include <string>

namespace dpound {

namespace {

using Refs = std::map<std::string, std::string>;

struct Cast {
    ParticipantId cb, fps, dir, tsp, eps, fmi, acq, courier;
};

Cast cast_of(const World& w) {
    Cast c;
    c.cb = w.wired("central_bank");
    c.fps = w.wired("fps_scheme");
    c.dir = w.wired("alias_service");
    c.tsp = w.wired("overlay_tsp");
    c.eps = w.wired("eps");
    c.fmi = w.wired("fmi");
    c.acq = w.wired("acquirer");
    c.courier = w.wired("delivery_agent");
    return c;
}

Flow& flow_of(World& w, const Envelope& env) { return w.flows.at(env.flow); }

int opt(const World& w, const std::string& slot) { return w.binding(slot); }

std::string ref_of(const Envelope& env, const std::string& key) {
    auto it = env.refs.find(key);
    return it == env.refs.end() ? std::string{} : it->second;
}

Pence pence_ref(const Envelope& env, const std::string& key) {
    std::string v = ref_of(env, key);
    return v.empty() ? 0 : static_cast<Pence>(std::stoull(v));
}

PersonalDatum name_of(const World& w, const ParticipantId& p) {
    return PersonalDatum{DatumKind::Name, p, w.display(p)};
}

PersonalDatum alias_datum(const ParticipantId& subject, const Alias& a) {
    return PersonalDatum{DatumKind::PhoneAlias, subject, a};
}

PersonalDatum acct_datum(const ParticipantId& subject, const AccountId& a) {
    return PersonalDatum{DatumKind::AccountDetails, subject, a};
}

PersonalDatum purpose_datum(const ParticipantId& subject, const std::string& p) {
    return PersonalDatum{DatumKind::TransactionPurpose, subject, p};
}

std::string find_datum(const PersonalData& data, DatumKind kind) {
    for (const auto& d : data) {
        if (d.kind == kind)
            return d.value;
    }
    return {};
}

ParticipantId find_subject(const PersonalData& data, DatumKind kind) {
    for (const auto& d : data) {
        if (d.kind == kind)
            return d.subject;
    }
    return {};
}

// First wallet owned by a participant (technical wallets for intermediaries).
WalletId wallet_owned_by(const World& w, const ParticipantId& p) {
    for (const auto& [id, wl] : w.ledger.wallets()) {
        if (wl.owner == p)
            return id;
    }
    return {};
}

AccountId book_owned_by(const World& w, const ParticipantId& p) {
    for (const auto& [id, b] : w.rail.book_accounts()) {
        if (b.owner == p)
            return id;
    }
    return {};
}

// An institution's account on its own books, used to fund outgoing payments.
AccountId own_funds_account(const World& w, const ParticipantId& p) {
    for (const auto& [id, b] : w.rail.book_accounts()) {
        if (b.owner == p && b.host == p)
            return id;
    }
    return {};
}

// An institution's claim held at another institution (a sponsor account).
AccountId external_book_of(const World& w, const ParticipantId& p) {
    for (const auto& [id, b] : w.rail.book_accounts()) {
        if (b.owner == p && b.host != p)
            return id;
    }
    return {};
}

AccountId settlement_of(const World& w, const ParticipantId& p) {
    for (const auto& [id, a] : w.rail.settlement_accounts()) {
        if (a.owner == p)
            return id;
    }
    return {};
}

SealedSection seal(World& w, const ParticipantId& author,
                   const ParticipantId& recipient, PersonalData payload,
                   Refs refs = {}) {
    auto r = w.keydir.seal(author, recipient, std::move(payload), std::move(refs));
    assert(r.ok());
    return r.value();
}

Err err_from_name(const std::string& name) {
    static const std::map<std::string, Err> table = {
        {"Overflow", Err::Overflow},
        {"Underflow", Err::Underflow},
        {"ZeroAmount", Err::ZeroAmount},
        {"UnknownWallet", Err::UnknownWallet},
        {"WrongPip", Err::WrongPip},
        {"AlreadyDecided", Err::AlreadyDecided},
        {"HoldingLimitExceeded", Err::HoldingLimitExceeded},
        {"InsufficientAvailable", Err::InsufficientAvailable},
        {"LockNotActive", Err::LockNotActive},
        {"NotAuthorised", Err::NotAuthorised},
        {"UnknownAccount", Err::UnknownAccount},
        {"UnknownDestination", Err::UnknownDestination},
        {"InsufficientFunds", Err::InsufficientFunds},
        {"DuplicateInstruction", Err::DuplicateInstruction},
        {"SchemeClosed", Err::SchemeClosed},
        {"InsufficientSettlementFunds", Err::InsufficientSettlementFunds},
        {"UnknownAlias", Err::UnknownAlias},
        {"NotRegistered", Err::NotRegistered},
        {"ConsumerRejected", Err::ConsumerRejected},
        {"ComplianceFailed", Err::ComplianceFailed},
        {"PipTimeout", Err::PipTimeout},
        {"RtpExpired", Err::RtpExpired},
        {"BeneficiaryMismatch", Err::BeneficiaryMismatch},
        {"DeliveryFailed", Err::DeliveryFailed},
        {"LockExpired", Err::LockExpired},
    };
    auto it = table.find(name);
    return it == table.end() ? Err::ConfigError : it->second;
}

std::string pstr(Pence v) { return std::to_string(v); }

Stage s1_stage(const Flow& f) {
    return f.use_case == 1 ? Stage::U1S1
           : f.use_case == 2 ? Stage::U2S1
                             : Stage::U3S1;
}

std::string s1_slot(const Flow& f) {
    return f.use_case == 1 ? "u1.s1" : f.use_case == 2 ? "u2.s1" : "u3.s1";
}

// ---------------------------------------------------------------------------
// use case 1: account-to-wallet payment
// ---------------------------------------------------------------------------

void u1_notify_payer(World& w, Flow& f, const std::string& status,
                     Err error = Err::None) {
    ParticipantId bank = w.wired("u1.payer_bank");
    Refs refs{{"status", status}};
    if (error != Err::None)
        refs["error"] = err_name(error);
    w.send(bank, f.payer_user, MsgKind::PaymentStatusNotice, Stage::U1S2, f.id, 0,
           refs);
}

void u1_fail(World& w, Flow& f, Err e) {
    w.fail_flow(f, e);
    u1_notify_payer(w, f, "failed", e);
}

void u1_start_funding(World& w, Flow& f) {
    Cast c = cast_of(w);
    ParticipantId bank = w.wired("u1.payer_bank");
    WalletId dest = f.notes.at("dest_wallet");
    ParticipantId payee_pip = w.ledger.wallet(dest).managing_pip;
    Pence x = f.amount;

    switch (opt(w, "u1.s2")) {
    case 1: { // scheme payment into the issuance backing account, then mint
        w.send(bank, c.fps, MsgKind::FpsInstruction, Stage::U1S2, f.id, x,
               {{"from", f.payer_account},
                {"dest_sort", w.sort_of(c.cb)},
                {"dest_acct", w.rail.backing_account()},
                {"wallet", dest},
                {"ref", f.id + ":fund"},
                {"purpose", "funding"}},
               {name_of(w, f.payer_user)});
        break;
    }
    case 2: { // the bank's own wallet-provider arm pays from its float
        AccountId internal = own_funds_account(w, bank);
        if (!w.rail.book_transfer(f.payer_account, internal, x, w.now)) {
            u1_fail(w, f, Err::InsufficientFunds);
            break;
        }
        f.funding = RailLeg{RailLeg::Kind::Book, f.payer_account, internal, x, {}};
        w.send(bank, w.wired("u1.payer_bank_pip"), MsgKind::InteropFundingNotice,
               Stage::U1S2, f.id, x, {{"wallet", dest}, {"ref", f.id + ":fund"}},
               {name_of(w, f.payer_user)});
        break;
    }
    case 3: { // scheme payment to the payee provider's partner bank
        ParticipantId partner = w.wired("u1.payee_pip_bank");
        w.send(bank, c.fps, MsgKind::FpsInstruction, Stage::U1S2, f.id, x,
               {{"from", f.payer_account},
                {"dest_sort", w.sort_of(partner)},
                {"dest_acct", own_funds_account(w, partner)},
                {"wallet", dest},
                {"pip", payee_pip},
                {"ref", f.id + ":fund"},
                {"purpose", "funding"}},
               {name_of(w, f.payer_user)});
        break;
    }
    case 4: { // payee provider joins the scheme as a non-settling participant
        w.send(bank, c.fps, MsgKind::FpsInstruction, Stage::U1S2, f.id, x,
               {{"from", f.payer_account},
                {"dest_sort", w.sort_of(payee_pip)},
                {"dest_acct", external_book_of(w, payee_pip)},
                {"wallet", dest},
                {"ref", f.id + ":fund"},
                {"purpose", "funding"}},
               {name_of(w, f.payer_user)});
        break;
    }
    case 5: { // scheme payment to a market infrastructure that holds wallets
        w.send(bank, c.fps, MsgKind::FpsInstruction, Stage::U1S2, f.id, x,
               {{"from", f.payer_account},
                {"dest_sort", w.sort_of(c.fmi)},
                {"dest_acct", own_funds_account(w, c.fmi)},
                {"wallet", dest},
                {"ref", f.id + ":fund"},
                {"purpose", "funding"}},
               {name_of(w, f.payer_user)});
        break;
    }
    case 6: { // deferred net settlement; everything moves when the batch settles
        BatchId batch = w.rail.append_obligation(
            settlement_of(w, bank), w.rail.backing_account(), x, w.now,
            w.spec.toggles.batch_window, f.id);
        f.funding = RailLeg{RailLeg::Kind::EpsObligation, f.payer_account, {}, x,
                            batch};
        w.send(bank, c.eps, MsgKind::EpsInstruction, Stage::U1S2, f.id, x,
               {{"wallet", dest}, {"batch", batch}, {"ref", f.id + ":fund"}},
               {name_of(w, f.payer_user)},
               {seal(w, bank, payee_pip, {name_of(w, f.payer_user)})});
        break;
    }
    default:
        assert(false && "unbound funding option");
    }
}

// Returns bank-side funds to the payer after a rejected or timed-out credit.
void unwind_funding(World& w, Flow& f, Err reason) {
    Cast c = cast_of(w);
    switch (f.funding.kind) {
    case RailLeg::Kind::Book: {
        ParticipantId bank = w.rail.book(f.funding.source).host;
        w.rail.book_transfer(own_funds_account(w, bank), f.funding.source,
                             f.funding.amount, w.now);
        w.fail_flow(f, reason);
        u1_notify_payer(w, f, "failed", reason);
        break;
    }
    case RailLeg::Kind::Fps: {
        // the credited institution pays the money back over the scheme
        const BookAccount& credited = w.rail.book(f.funding.credited);
        ParticipantId holder = credited.owner;
        ParticipantId payer_bank = w.rail.book(f.funding.source).host;
        FpsPayment back;
        back.client_ref = f.id + ":refund";
        back.from_account = f.funding.credited;
        back.dest_sort = w.sort_of(payer_bank);
        back.dest_account = f.funding.source;
        back.amount = f.funding.amount;
        auto r = w.rail.fps_pay(back, w.now);
        assert(r.ok());
        w.fail_flow(f, reason);
        w.send(c.fps, payer_bank, MsgKind::FpsCreditNotice, Stage::U1S2, f.id,
               f.funding.amount,
               {{"account", f.funding.source},
                {"purpose", "refund"},
                {"error", err_name(reason)},
                {"ref", back.client_ref}});
        (void)holder;
        break;
    }
    case RailLeg::Kind::EpsObligation: {
        w.rail.cancel_obligation(f.funding.batch, f.id);
        w.fail_flow(f, reason);
        u1_notify_payer(w, f, "failed", reason);
        break;
    }
    case RailLeg::Kind::None:
        w.fail_flow(f, reason);
        break;
    }
}

// ---------------------------------------------------------------------------
// central bank helpers
// ---------------------------------------------------------------------------

// Pays out of the backing account over the scheme and queues the scheme's
// credit notification. Used for refunds, waterfall spills and merchant payouts
// executed by the central bank. The rail call happens here, in the same step
// as the core-ledger change it mirrors, so issuance stays matched throughout.
void backing_payout(World& w, const FlowId& flow, const AccountId& dest,
                    Pence amount, const std::string& purpose, Stage stage,
                    Refs extra = {}) {
    Cast c = cast_of(w);
    ParticipantId dest_bank = w.rail.book(dest).host;
    FpsPayment p;
    p.client_ref = flow + ":" + purpose;
    p.from_account = w.rail.backing_account();
    p.dest_sort = w.sort_of(dest_bank);
    p.dest_account = dest;
    p.amount = amount;
    auto r = w.rail.fps_pay(p, w.now);
    assert(r.ok());
    Refs refs{{"account", dest}, {"purpose", purpose}, {"ref", p.client_ref}};
    for (auto& [k, v] : extra)
        refs[k] = v;
    w.send(c.fps, dest_bank, MsgKind::FpsCreditNotice, stage, flow, amount, refs);
}

// Routes the result of a pending-credit decision: payee notification, holding
// limit spill, or the compensating return of the funding leg.
void on_confirm_outcome(World& w, const ConfirmOutcome& o, Err decline_reason,
                        Stage stage) {
    Cast c = cast_of(w);
    Flow& f = w.flows.at(o.flow);
    if (o.credited) {
        if (o.waterfall_excess > 0 && o.spill_account) {
            backing_payout(w, f.id, *o.spill_account, o.waterfall_excess, "spill",
                           stage);
        }
        ParticipantId pip = w.ledger.wallet(o.target_wallet).managing_pip;
        w.send(c.cb, pip, MsgKind::WalletCreditNotice, stage, f.id,
               o.credited_amount,
               {{"wallet", o.target_wallet}, {"pending", o.pending_id}});
        if (o.pending_kind == PendingKind::Transfer) {
            ParticipantId src_pip = w.ledger.wallet(o.source_wallet).managing_pip;
            w.send(c.cb, src_pip, MsgKind::PaymentCompleted, stage, f.id,
                   o.credited_amount, {{"status", "ok"}});
        }
        return;
    }
    Err reason = o.reject_reason != Err::None ? o.reject_reason : decline_reason;
    w.note_failure(reason);
    if (o.pending_kind == PendingKind::Mint) {
        // money already sits in the backing account; send it straight back
        backing_payout(w, f.id, f.funding.source, o.amount, "refund", stage,
                       {{"error", err_name(reason)}});
        w.fail_flow(f, reason);
    } else {
        ParticipantId src_pip = w.ledger.wallet(o.source_wallet).managing_pip;
        w.send(c.cb, src_pip, MsgKind::PaymentCompleted, stage, f.id, o.amount,
               {{"status", "failed"}, {"error", err_name(reason)}});
    }
}

// ---------------------------------------------------------------------------
// use case 2/3 helpers
// ---------------------------------------------------------------------------

ParticipantId consumer_pip(const World& w, const Flow& f) {
    return w.ledger.wallet(f.consumer_wallet).managing_pip;
}

ParticipantId merchant_bank(const World& w, const Flow& f) {
    return w.rail.book(f.merchant_account).host;
}

void decline_rtp(World& w, Flow& f, Err reason) {
    Cast c = cast_of(w);
    ParticipantId pip = consumer_pip(w, f);
    w.fail_flow(f, reason);
    Refs refs{{"decision", "declined"},
              {"error", err_name(reason)},
              {"order", f.order_ref},
              {"reply_to", c.acq}};
    Stage st = s1_stage(f);
    std::string via = f.notes.count("reply_via") ? f.notes.at("reply_via")
                                                 : std::string("direct");
    if (via == "cbdc")
        w.send(pip, c.cb, MsgKind::RtpResponse, st, f.id, 0, refs);
    else if (via == "tsp")
        w.send(pip, c.tsp, MsgKind::RtpResponse, st, f.id, 0, refs);
    else
        w.send(pip, c.acq, MsgKind::RtpResponse, st, f.id, 0, refs);
}

void accept_rtp(World& w, Flow& f) {
    Cast c = cast_of(w);
    ParticipantId pip = consumer_pip(w, f);
    Refs refs{{"decision", "accepted"},
              {"order", f.order_ref},
              {"reply_to", c.acq}};
    Stage st = s1_stage(f);
    std::string via = f.notes.count("reply_via") ? f.notes.at("reply_via")
                                                 : std::string("direct");
    if (via == "cbdc")
        w.send(pip, c.cb, MsgKind::RtpResponse, st, f.id, 0, refs);
    else if (via == "tsp")
        w.send(pip, c.tsp, MsgKind::RtpResponse, st, f.id, 0, refs);
    else
        w.send(pip, c.acq, MsgKind::RtpResponse, st, f.id, 0, refs);
}

// Executes the wallet-to-bank-account settlement leg for the bound option.
// Shared by the checkout flow and the release step of the escrowed purchase.
void execute_u2_settlement(World& w, Flow& f) {
    Cast c = cast_of(w);
    ParticipantId pip = consumer_pip(w, f);
    Pence x = f.amount;
    Pence min = w.active_pip_locks(pip, f.consumer_wallet);
    switch (opt(w, "u2.s2")) {
    case 1: { // central bank redeems the wallet balance and pays the merchant
        w.send(pip, c.cb, MsgKind::PaymentInstruction, Stage::U2S2, f.id, x,
               {{"op", "burn_pay"},
                {"wallet", f.consumer_wallet},
                {"dest_sort", w.sort_of(merchant_bank(w, f))},
                {"dest_acct", f.merchant_account},
                {"order", f.order_ref},
                {"min", pstr(min)},
                {"ref", f.id + ":burnpay"}},
               {name_of(w, f.payee_user), acct_datum(f.payee_user, f.merchant_account)});
        break;
    }
    case 2: { // acquirer's partner institution fronts the bank-money payout
        WalletId dest = wallet_owned_by(w, w.wired("acquirer_pip"));
        f.notes["payout_dest_acct"] = f.merchant_account;
        f.notes["payout_dest_sort"] = w.sort_of(merchant_bank(w, f));
        w.send(pip, c.cb, MsgKind::PaymentInstruction, Stage::U2S2, f.id, x,
               {{"op", "transfer"},
                {"from", f.consumer_wallet},
                {"to", dest},
                {"order", f.order_ref},
                {"min", pstr(min)},
                {"ref", f.id + ":pay"}});
        break;
    }
    case 3: { // consumer's provider collects into its own wallet, bank arm pays
        WalletId dest = wallet_owned_by(w, pip);
        f.notes["payout_dest_acct"] = f.merchant_account;
        f.notes["payout_dest_sort"] = w.sort_of(merchant_bank(w, f));
        w.send(pip, c.cb, MsgKind::PaymentInstruction, Stage::U2S2, f.id, x,
               {{"op", "transfer"},
                {"from", f.consumer_wallet},
                {"to", dest},
                {"order", f.order_ref},
                {"min", pstr(min)},
                {"ref", f.id + ":pay"}});
        break;
    }
    case 4: { // market infrastructure takes the wallet funds and pays out
        WalletId dest = wallet_owned_by(w, c.fmi);
        f.notes["payout_dest_acct"] = f.merchant_account;
        f.notes["payout_dest_sort"] = w.sort_of(merchant_bank(w, f));
        w.send(pip, c.cb, MsgKind::PaymentInstruction, Stage::U2S2, f.id, x,
               {{"op", "transfer"},
                {"from", f.consumer_wallet},
                {"to", dest},
                {"order", f.order_ref},
                {"min", pstr(min)},
                {"ref", f.id + ":pay"}});
        break;
    }
    case 5: { // deferred net settlement with the funds locked until the window
        w.send(pip, c.cb, MsgKind::PaymentInstruction, Stage::U2S2, f.id, x,
               {{"op", "eps_pay"},
                {"wallet", f.consumer_wallet},
                {"dest_bank", merchant_bank(w, f)},
                {"order", f.order_ref},
                {"min", pstr(min)},
                {"ref", f.id + ":eps"}});
        w.send(pip, c.eps, MsgKind::EpsInstruction, Stage::U2S2, f.id, x,
               {{"order", f.order_ref},
                {"acct", f.merchant_account},
                {"ref", f.id + ":eps"}},
               {name_of(w, f.payee_user), acct_datum(f.payee_user, f.merchant_account)});
        break;
    }
    default:
        assert(false && "unbound settlement option");
    }
}

void place_lock(World& w, Flow& f) {
    Cast c = cast_of(w);
    ParticipantId pip = consumer_pip(w, f);
    Pence x = f.amount;
    Tick expiry = w.now + w.scenario.lock_expiry_offset;
    switch (opt(w, "u3.s2")) {
    case 1: { // lock on the core ledger with the beneficiary kept opaque
        Pence min = w.active_pip_locks(pip, f.consumer_wallet);
        w.send(pip, c.cb, MsgKind::LockInstruction, Stage::U3S2, f.id, x,
               {{"op", "lock"},
                {"wallet", f.consumer_wallet},
                {"commit", "beneficiary:" + f.id},
                {"expiry", std::to_string(expiry)},
                {"order", f.order_ref},
                {"min", pstr(min)},
                {"ref", f.id + ":lock"}});
        break;
    }
    case 2:
    case 3:
    case 4: { // lock on the provider's own books
        PipLock lock;
        lock.id = w.ids.next(IdKind::Lock);
        lock.pip = pip;
        lock.wallet = f.consumer_wallet;
        lock.amount = x;
        lock.beneficiary = f.order_ref;
        lock.expiry = expiry;
        w.pip_locks[lock.id] = lock;
        f.pip_lock = lock.id;
        int o = opt(w, "u3.s2");
        if (o == 2) { // confirmation routed through the core system, sealed
            w.send(pip, c.cb, MsgKind::LockConfirmation, Stage::U3S2, f.id, x,
                   {{"forward_to", c.acq}, {"order", f.order_ref}},
                   {},
                   {seal(w, pip, c.acq,
                         {purpose_datum(f.payer_user, f.order_ref)},
                         {{"order", f.order_ref}, {"lock", lock.id}})});
        } else if (o == 3) { // direct provider-to-acquirer confirmation
            w.send(pip, c.acq, MsgKind::LockConfirmation, Stage::U3S2, f.id, x,
                   {{"order", f.order_ref}, {"lock", lock.id}},
                   {purpose_datum(f.payer_user, f.order_ref)});
        } else { // via the shared network operator
            w.send(pip, c.tsp, MsgKind::LockConfirmation, Stage::U3S2, f.id, x,
                   {{"forward_to", c.acq},
                    {"order", f.order_ref},
                    {"lock", lock.id}},
                   {purpose_datum(f.payer_user, f.order_ref)});
        }
        break;
    }
    case 5: { // funds moved into the market infrastructure's escrow wallet
        Pence min = w.active_pip_locks(pip, f.consumer_wallet);
        WalletId dest = wallet_owned_by(w, c.fmi);
        w.send(pip, c.cb, MsgKind::PaymentInstruction, Stage::U3S2, f.id, x,
               {{"op", "transfer"},
                {"from", f.consumer_wallet},
                {"to", dest},
                {"order", f.order_ref},
                {"min", pstr(min)},
                {"ref", f.id + ":escrow"}});
        w.send(pip, c.fmi, MsgKind::LockInstruction, Stage::U3S2, f.id, x,
               {{"order", f.order_ref},
                {"beneficiary", f.merchant_account},
                {"dest_sort", w.sort_of(merchant_bank(w, f))},
                {"expiry", std::to_string(expiry)},
                {"ref", f.id + ":escrow"}},
               {purpose_datum(f.payer_user, f.order_ref)});
        break;
    }
    default:
        assert(false && "unbound lock option");
    }
}

void maybe_finish_escrow(World& w, Flow& f) {
    Cast c = cast_of(w);
    if (!f.notes.count("escrow_funded") || !f.notes.count("escrow_terms"))
        return;
    EscrowRecord esc;
    esc.id = w.ids.next(IdKind::Escrow);
    esc.from_wallet = f.consumer_wallet;
    esc.amount = f.amount;
    esc.beneficiary = f.notes.at("payout_dest_acct");
    esc.expiry = static_cast<Tick>(std::stoull(f.notes.at("escrow_expiry")));
    w.escrows[esc.id] = esc;
    f.escrow = esc.id;
    w.send(c.fmi, c.acq, MsgKind::LockConfirmation, Stage::U3S2, f.id, f.amount,
           {{"order", f.order_ref}, {"escrow", esc.id}});
}

void cancel_lock_holding(World& w, Flow& f, Err reason) {
    Cast c = cast_of(w);
    ParticipantId pip = consumer_pip(w, f);
    int s2 = opt(w, "u3.s2");
    if (s2 == 1) {
        w.send(pip, c.cb, MsgKind::CancelLockInstruction, Stage::U3S2, f.id, 0,
               {{"lock", f.core_lock}, {"error", err_name(reason)}});
    } else if (s2 == 5) {
        w.send(pip, c.fmi, MsgKind::CancelLockInstruction, Stage::U3S2, f.id, 0,
               {{"escrow", f.escrow},
                {"order", f.order_ref},
                {"error", err_name(reason)}});
    } else {
        if (w.pip_locks.count(f.pip_lock) &&
            w.pip_locks.at(f.pip_lock).state == LockState::Active)
            w.pip_locks.at(f.pip_lock).state = LockState::Cancelled;
        w.fail_flow(f, reason);
        w.send(pip, f.payer_user, MsgKind::PaymentStatusNotice, Stage::U3S2, f.id,
               0, {{"status", "cancelled"}, {"error", err_name(reason)}});
    }
}

// ---------------------------------------------------------------------------
// per-kind handlers
// ---------------------------------------------------------------------------

void handle_pay_initiate(World& w, const Envelope& env) {
    Cast c = cast_of(w);
    Flow& f = flow_of(w, env);
    std::string alias = ref_of(env, "alias");
    f.notes["alias"] = alias;
    switch (opt(w, "u1.s1")) {
    case 3: // the overlay service answers payee checks from its data feed
        w.send(env.receiver, c.tsp, MsgKind::CopRequest, Stage::U1S1, f.id, 0,
               {{"alias", alias}}, {alias_datum(f.payee_user, alias)});
        break;
    default: // resolve the alias to a provider first
        w.send(env.receiver, c.dir, MsgKind::AliasLookupRequest, Stage::U1S1,
               f.id, 0, {{"alias", alias}}, {alias_datum(f.payee_user, alias)});
        break;
    }
}

void handle_alias_lookup_request(World& w, const Envelope& env) {
    std::string alias = ref_of(env, "alias");
    auto it = w.alias_directory.find(alias);
    Flow& f = flow_of(w, env);
    if (it == w.alias_directory.end()) {
        w.send(env.receiver, env.sender, MsgKind::AliasLookupResponse,
               env.stage, f.id, 0,
               {{"alias", alias}, {"error", err_name(Err::UnknownAlias)}});
        return;
    }
    w.send(env.receiver, env.sender, MsgKind::AliasLookupResponse, env.stage,
           f.id, 0, {{"alias", alias}, {"pip", it->second.pip}},
           {alias_datum(find_subject(env.plain, DatumKind::PhoneAlias), alias)});
}

void handle_alias_lookup_response_u1(World& w, const Envelope& env) {
    Cast c = cast_of(w);
    Flow& f = flow_of(w, env);
    ParticipantId bank = env.receiver;
    if (!ref_of(env, "error").empty()) {
        u1_fail(w, f, Err::UnknownAlias);
        return;
    }
    ParticipantId pip = ref_of(env, "pip");
    std::string alias = ref_of(env, "alias");
    switch (opt(w, "u1.s1")) {
    case 1: // call the provider's payee-check API directly
        w.send(bank, pip, MsgKind::CopRequest, Stage::U1S1, f.id, 0,
               {{"alias", alias}, {"reply_to", bank}},
               {alias_datum(f.payee_user, alias)});
        break;
    case 2: // via the overlay aggregator, payload sealed end to end
        w.send(bank, c.tsp, MsgKind::CopRequest, Stage::U1S1, f.id, 0,
               {{"pip", pip}, {"reply_to", bank}, {"alias", alias}},
               {alias_datum(f.payee_user, alias)},
               {seal(w, bank, pip, {name_of(w, f.payer_user)},
                     {{"alias", alias}})});
        break;
    case 4: // routed over the core system's messaging, sealed end to end
        w.send(bank, c.cb, MsgKind::CopRequest, Stage::U1S1, f.id, 0,
               {{"pip", pip}, {"reply_to", bank}, {"alias", alias}},
               {alias_datum(f.payee_user, alias)},
               {seal(w, bank, pip, {name_of(w, f.payer_user)},
                     {{"alias", alias}})});
        break;
    default:
        assert(false);
    }
}

void handle_alias_lookup_response_acq(World& w, const Envelope& env) {
    Cast c = cast_of(w);
    Flow& f = flow_of(w, env);
    if (!ref_of(env, "error").empty()) {
        w.fail_flow(f, Err::UnknownAlias);
        w.send(c.acq, f.payee_user, MsgKind::PaymentStatusNotice, s1_stage(f),
               f.id, 0,
               {{"order", f.order_ref},
                {"status", "declined"},
                {"error", err_name(Err::UnknownAlias)}});
        return;
    }
    ParticipantId pip = ref_of(env, "pip");
    std::string alias = ref_of(env, "alias");
    MsgKind kind = f.use_case == 3 ? MsgKind::RtlRequest : MsgKind::RtpRequest;
    Stage st = s1_stage(f);
    int s1 = opt(w, s1_slot(f));
    PersonalData payload{name_of(w, f.payee_user),
                         purpose_datum(f.payer_user, f.order_ref)};
    Refs payload_refs{{"order", f.order_ref}, {"reply_to", c.acq}};
    if (s1 == 1) { // request routed over the core system, sealed for the PIP
        w.send(c.acq, c.cb, kind, st, f.id, f.amount,
               {{"pip", pip}, {"alias", alias}, {"order", f.order_ref}},
               {alias_datum(f.payer_user, alias)},
               {seal(w, c.acq, pip, payload, payload_refs)});
    } else { // direct API call, pre-registered access
        Refs refs{{"order", f.order_ref},
                  {"alias", alias},
                  {"reply_to", c.acq}};
        w.send(c.acq, pip, kind, st, f.id, f.amount, refs,
               {name_of(w, f.payee_user),
                purpose_datum(f.payer_user, f.order_ref),
                alias_datum(f.payer_user, alias)});
    }
}

void handle_cop_request(World& w, const Envelope& env) {
    Cast c = cast_of(w);
    Flow& f = flow_of(w, env);
    ParticipantId me = env.receiver;
    std::string alias = ref_of(env, "alias");

    if (me == c.tsp) {
        std::string pip = ref_of(env, "pip");
        if (pip.empty()) { // answering from the aggregated data feed
            auto it = w.tsp_feed.find(alias);
            if (it == w.tsp_feed.end()) {
                w.send(me, env.sender, MsgKind::CopResponse, Stage::U1S1, f.id,
                       0,
                       {{"alias", alias},
                        {"error", err_name(Err::UnknownAlias)}});
                return;
            }
            w.send(me, env.sender, MsgKind::CopResponse, Stage::U1S1, f.id, 0,
                   {{"alias", alias}, {"wallet", it->second.wallet}},
                   it->second.cop_payload);
            return;
        }
        w.send(me, pip, MsgKind::CopRequest, Stage::U1S1, f.id, 0, env.refs,
               env.plain, env.sealed);
        return;
    }
    if (me == c.cb) {
        w.send(me, ref_of(env, "pip"), MsgKind::CopRequest, Stage::U1S1, f.id,
               0, env.refs, env.plain, env.sealed);
        return;
    }

    // payee's wallet provider
    auto entry = w.alias_directory.find(alias);
    if (entry == w.alias_directory.end() || entry->second.pip != me) {
        w.send(me, env.sender, MsgKind::CopResponse, Stage::U1S1, f.id, 0,
               {{"alias", alias},
                {"reply_to", ref_of(env, "reply_to")},
                {"error", err_name(Err::UnknownAlias)}});
        return;
    }
    if (env.sealed.empty()) { // direct call: access registration applies
        if (!w.dcr_valid(env.sender, me)) {
            w.send(me, env.sender, MsgKind::CopResponse, Stage::U1S1, f.id, 0,
                   {{"alias", alias},
                    {"error", err_name(Err::NotRegistered)}});
            return;
        }
        ParticipantId owner = w.ledger.wallet(entry->second.wallet).owner;
        w.send(me, env.sender, MsgKind::CopResponse, Stage::U1S1, f.id, 0,
               {{"alias", alias}, {"wallet", entry->second.wallet}},
               {name_of(w, owner)});
        return;
    }
    // sealed request forwarded by an intermediary
    auto idx = w.find_section_for(env, me);
    if (idx) {
        auto opened = w.open_sealed(env, *idx, me);
        if (opened.ok())
            f.notes["payer_name"] = find_datum(opened.value(), DatumKind::Name);
    }
    ParticipantId reply_to = ref_of(env, "reply_to");
    ParticipantId owner = w.ledger.wallet(entry->second.wallet).owner;
    w.send(me, env.sender, MsgKind::CopResponse, Stage::U1S1, f.id, 0,
           {{"alias", alias}, {"reply_to", reply_to}},
           {},
           {seal(w, me, reply_to, {name_of(w, owner)},
                 {{"wallet", entry->second.wallet}})});
}

void handle_cop_response(World& w, const Envelope& env) {
    Cast c = cast_of(w);
    Flow& f = flow_of(w, env);
    ParticipantId me = env.receiver;
    if (me == c.tsp || me == c.cb) { // routing hop on the way back
        w.send(me, ref_of(env, "reply_to"), MsgKind::CopResponse, Stage::U1S1,
               f.id, 0, env.refs, env.plain, env.sealed);
        return;
    }
    if (!ref_of(env, "error").empty()) {
        u1_fail(w, f, err_from_name(ref_of(env, "error")));
        return;
    }
    std::string payee_name;
    std::string wallet = ref_of(env, "wallet");
    if (!env.sealed.empty()) {
        auto idx = w.find_section_for(env, me);
        assert(idx);
        auto opened = w.open_sealed(env, *idx, me);
        assert(opened.ok());
        payee_name = find_datum(opened.value(), DatumKind::Name);
        wallet = env.sealed[*idx].refs.count("wallet")
                     ? env.sealed[*idx].refs.at("wallet")
                     : wallet;
    } else {
        payee_name = find_datum(env.plain, DatumKind::Name);
    }
    f.cop_ok = true;
    f.cop_name = payee_name;
    f.notes["dest_wallet"] = wallet;
    w.send(me, f.payer_user, MsgKind::CopResultNotice, Stage::U1S1, f.id, 0,
           {{"wallet", wallet}},
           {PersonalDatum{DatumKind::Name, f.payee_user, payee_name}});
}

void handle_cop_result_notice(World& w, const Envelope& env) {
    Flow& f = flow_of(w, env);
    bool approve = w.scenario.authorise == Authorise::Approve;
    Refs refs{{"decision", approve ? "approve" : "reject"}};
    if (w.scenario.authorise_delay > 0) {
        w.send_at(w.now + w.scenario.authorise_delay, env.receiver, env.sender,
                  MsgKind::PayAuthorise, Stage::U1S1, f.id, 0, refs);
    } else {
        w.send(env.receiver, env.sender, MsgKind::PayAuthorise, Stage::U1S1,
               f.id, 0, refs);
    }
}

void handle_pay_authorise(World& w, const Envelope& env) {
    Flow& f = flow_of(w, env);
    if (ref_of(env, "decision") != "approve") {
        u1_fail(w, f, Err::ConsumerRejected);
        return;
    }
    u1_start_funding(w, f);
}

void handle_fps_instruction(World& w, const Envelope& env) {
    Cast c = cast_of(w);
    Flow& f = flow_of(w, env);
    FpsPayment p;
    p.client_ref = ref_of(env, "ref");
    p.from_account = ref_of(env, "from");
    p.dest_sort = ref_of(env, "dest_sort");
    p.dest_account = ref_of(env, "dest_acct");
    p.amount = env.amount;
    auto r = w.rail.fps_pay(p, w.now);
    if (!r.ok()) {
        w.note_failure(r.error());
        w.send(c.fps, env.sender, MsgKind::PaymentStatusNotice, env.stage, f.id,
               env.amount,
               {{"ref", p.client_ref}, {"error", err_name(r.error())}});
        return;
    }
    const FpsClearing& clearing = r.value();
    std::string purpose = ref_of(env, "purpose");
    if (purpose == "funding")
        f.funding = RailLeg{RailLeg::Kind::Fps, p.from_account,
                            clearing.credited_account, env.amount, {}};

    Refs notice{{"ref", p.client_ref},
                {"account", clearing.credited_account},
                {"purpose", purpose}};
    if (!ref_of(env, "wallet").empty())
        notice["wallet"] = ref_of(env, "wallet");
    if (!ref_of(env, "pip").empty())
        notice["pip"] = ref_of(env, "pip");
    if (!ref_of(env, "order").empty())
        notice["order"] = ref_of(env, "order");

    // settlement into the backing account is issuance: mint in the same step
    if (clearing.credited_account == w.rail.backing_account()) {
        auto m = w.ledger.mint_to(ref_of(env, "wallet"), env.amount,
                                  w.rail.backing_account(), w.now, f.id);
        assert(m.ok());
        if (m.value().pending)
            notice["pending"] = *m.value().pending;
    }

    w.send(c.fps, env.sender, MsgKind::PaymentCompleted, env.stage, f.id,
           env.amount, {{"ref", p.client_ref}, {"status", "ok"}});
    w.send(c.fps, clearing.notify, MsgKind::FpsCreditNotice, env.stage, f.id,
           env.amount, notice, env.plain);
}

void handle_fps_credit_notice(World& w, const Envelope& env) {
    Cast c = cast_of(w);
    Flow& f = flow_of(w, env);
    ParticipantId me = env.receiver;
    Role role = env.receiver_role;
    std::string purpose = ref_of(env, "purpose");

    if (me == c.cb) { // issuance funding arrived; pending credit already opened
        ParticipantId pip =
            w.ledger.wallet(ref_of(env, "wallet")).managing_pip;
        w.send(me, pip, MsgKind::CreditConfirmationRequest, env.stage, f.id,
               env.amount,
               {{"pending", ref_of(env, "pending")},
                {"wallet", ref_of(env, "wallet")},
                {"ref", ref_of(env, "ref")}},
               env.plain);
        return;
    }

    if (role == Role::Pip || role == Role::Fmi) {
        if (purpose == "funding") { // pay on into the destination wallet
            WalletId src = wallet_owned_by(w, me);
            WalletId dest = ref_of(env, "wallet");
            ParticipantId payee_pip = w.ledger.wallet(dest).managing_pip;
            std::string payer_name = find_datum(env.plain, DatumKind::Name);
            if (payee_pip == me && !payer_name.empty())
                f.notes["payer_name"] = payer_name;
            std::vector<SealedSection> sections;
            if (payee_pip != me && !payer_name.empty())
                sections.push_back(
                    seal(w, me, payee_pip,
                         {PersonalDatum{DatumKind::Name, f.payer_user,
                                        payer_name}}));
            w.send(me, c.cb, MsgKind::PaymentInstruction, env.stage, f.id,
                   env.amount,
                   {{"op", "transfer"},
                    {"from", src},
                    {"to", dest},
                    {"min", pstr(w.active_pip_locks(me, src))},
                    {"ref", f.id + ":core"}},
                   {}, sections);
        }
        return;
    }

    // a commercial bank: the credit has already been posted to the book
    if (purpose == "funding" && !ref_of(env, "pip").empty()) {
        w.send(me, ref_of(env, "pip"), MsgKind::InteropFundingNotice, env.stage,
               f.id, env.amount,
               {{"wallet", ref_of(env, "wallet")}, {"ref", ref_of(env, "ref")}},
               env.plain);
        return;
    }
    AccountId credited = ref_of(env, "account");
    ParticipantId owner = w.rail.book(credited).owner;
    if (!ref_of(env, "order").empty()) {
        w.send(me, owner, MsgKind::MerchantCreditNotice, env.stage, f.id,
               env.amount,
               {{"order", ref_of(env, "order")}, {"account", credited}},
               env.plain);
        return;
    }
    Refs refs{{"account", credited}, {"purpose", purpose}};
    std::string status = "credited";
    if (purpose == "refund") {
        status = "failed";
        refs["error"] = ref_of(env, "error");
    }
    refs["status"] = status;
    w.send(me, owner, MsgKind::PaymentStatusNotice, env.stage, f.id, env.amount,
           refs);
}

void handle_interop_funding_notice(World& w, const Envelope& env) {
    Cast c = cast_of(w);
    Flow& f = flow_of(w, env);
    ParticipantId me = env.receiver;
    WalletId src = wallet_owned_by(w, me);
    WalletId dest = ref_of(env, "wallet");
    ParticipantId payee_pip = w.ledger.wallet(dest).managing_pip;
    std::string payer_name = find_datum(env.plain, DatumKind::Name);
    if (payee_pip == me && !payer_name.empty())
        f.notes["payer_name"] = payer_name;
    std::vector<SealedSection> sections;
    if (payee_pip != me && !payer_name.empty())
        sections.push_back(seal(
            w, me, payee_pip,
            {PersonalDatum{DatumKind::Name, f.payer_user, payer_name}}));
    w.send(me, c.cb, MsgKind::PaymentInstruction, env.stage, f.id, env.amount,
           {{"op", "transfer"},
            {"from", src},
            {"to", dest},
            {"min", pstr(w.active_pip_locks(me, src))},
            {"ref", f.id + ":core"}},
           {}, sections);
}

void handle_payment_instruction(World& w, const Envelope& env) {
    Cast c = cast_of(w);
    Flow& f = flow_of(w, env);
    std::string op = ref_of(env, "op");
    Pence min = pence_ref(env, "min");

    if (op == "transfer") {
        auto r = w.ledger.transfer(ref_of(env, "from"), ref_of(env, "to"),
                                   env.amount, min, env.sender, w.now, f.id);
        if (!r.ok()) {
            w.note_failure(r.error());
            w.send(c.cb, env.sender, MsgKind::PaymentCompleted, env.stage, f.id,
                   env.amount,
                   {{"status", "failed"},
                    {"error", err_name(r.error())},
                    {"ref", ref_of(env, "ref")}});
            return;
        }
        if (r.value().completed) {
            ParticipantId pip =
                w.ledger.wallet(ref_of(env, "to")).managing_pip;
            Refs refs{{"wallet", ref_of(env, "to")},
                      {"ref", ref_of(env, "ref")}};
            if (!ref_of(env, "order").empty())
                refs["order"] = ref_of(env, "order");
            w.send(c.cb, pip, MsgKind::WalletCreditNotice, env.stage, f.id,
                   env.amount, refs);
            w.send(c.cb, env.sender, MsgKind::PaymentCompleted, env.stage, f.id,
                   env.amount, {{"status", "ok"}, {"ref", ref_of(env, "ref")}});
        } else {
            ParticipantId pip =
                w.ledger.wallet(ref_of(env, "to")).managing_pip;
            w.send(c.cb, pip, MsgKind::CreditConfirmationRequest, env.stage,
                   f.id, env.amount,
                   {{"pending", *r.value().pending},
                    {"wallet", ref_of(env, "to")},
                    {"ref", ref_of(env, "ref")}},
                   {}, env.sealed);
        }
        return;
    }

    if (op == "burn_pay") {
        if (!w.rail.scheme_open()) {
            w.note_failure(Err::SchemeClosed);
            w.send(c.cb, env.sender, MsgKind::PaymentCompleted, env.stage, f.id,
                   env.amount,
                   {{"status", "failed"},
                    {"error", err_name(Err::SchemeClosed)}});
            return;
        }
        auto s = w.ledger.burn_from(ref_of(env, "wallet"), env.amount,
                                    w.rail.backing_account(), env.sender, w.now,
                                    min);
        if (!s.ok()) {
            w.note_failure(s.error());
            w.send(c.cb, env.sender, MsgKind::PaymentCompleted, env.stage, f.id,
                   env.amount,
                   {{"status", "failed"}, {"error", err_name(s.error())}});
            return;
        }
        backing_payout(w, f.id, ref_of(env, "dest_acct"), env.amount, "payout",
                       env.stage, {{"order", ref_of(env, "order")}});
        w.send(c.cb, env.sender, MsgKind::PaymentCompleted, env.stage, f.id,
               env.amount, {{"status", "ok"}, {"ref", ref_of(env, "ref")}});
        return;
    }

    if (op == "eps_pay") {
        auto l = w.ledger.lock_funds(ref_of(env, "wallet"), env.amount,
                                     "eps:" + f.id,
                                     w.now + 2 * w.spec.toggles.batch_window,
                                     env.sender, w.now);
        if (!l.ok()) {
            w.note_failure(l.error());
            w.send(c.cb, env.sender, MsgKind::PaymentCompleted, env.stage, f.id,
                   env.amount,
                   {{"status", "failed"}, {"error", err_name(l.error())}});
            return;
        }
        f.core_lock = l.value();
        BatchId batch = w.rail.append_obligation(
            w.rail.backing_account(),
            settlement_of(w, ref_of(env, "dest_bank")), env.amount, w.now,
            w.spec.toggles.batch_window, f.id);
        f.funding =
            RailLeg{RailLeg::Kind::EpsObligation, {}, {}, env.amount, batch};
        w.send(c.cb, env.sender, MsgKind::PaymentCompleted, env.stage, f.id,
               env.amount, {{"status", "ok"}, {"ref", ref_of(env, "ref")}});
        return;
    }

    assert(false && "unknown core instruction");
}

void handle_lock_instruction(World& w, const Envelope& env) {
    Cast c = cast_of(w);
    Flow& f = flow_of(w, env);
    ParticipantId me = env.receiver;
    if (me == c.cb) {
        auto r = w.ledger.lock_funds(
            ref_of(env, "wallet"), env.amount, ref_of(env, "commit"),
            static_cast<Tick>(std::stoull(ref_of(env, "expiry"))), env.sender,
            w.now);
        if (!r.ok()) {
            w.note_failure(r.error());
            w.send(c.cb, env.sender, MsgKind::LockConfirmation, env.stage, f.id,
                   env.amount, {{"error", err_name(r.error())}});
            return;
        }
        w.send(c.cb, env.sender, MsgKind::LockConfirmation, env.stage, f.id,
               env.amount,
               {{"lock", r.value()}, {"order", ref_of(env, "order")}});
        return;
    }
    // market infrastructure escrow terms
    f.notes["escrow_terms"] = "1";
    f.notes["payout_dest_acct"] = ref_of(env, "beneficiary");
    f.notes["payout_dest_sort"] = ref_of(env, "dest_sort");
    f.notes["escrow_expiry"] = ref_of(env, "expiry");
    maybe_finish_escrow(w, f);
}

void handle_lock_confirmation(World& w, const Envelope& env) {
    Cast c = cast_of(w);
    Flow& f = flow_of(w, env);
    ParticipantId me = env.receiver;
    if (me == c.cb || me == c.tsp) { // routing hop
        w.send(me, ref_of(env, "forward_to"), MsgKind::LockConfirmation,
               env.stage, f.id, env.amount, env.refs, env.plain, env.sealed);
        return;
    }
    if (env.receiver_role == Role::Pip && me != c.acq) {
        // the core ledger confirmed (or refused) the lock we asked for
        if (!ref_of(env, "error").empty()) {
            Err e = err_from_name(ref_of(env, "error"));
            w.fail_flow(f, e);
            w.send(me, f.payer_user, MsgKind::PaymentStatusNotice, Stage::U3S2,
                   f.id, 0, {{"status", "failed"}, {"error", err_name(e)}});
            w.send(me, c.acq, MsgKind::PaymentStatusNotice, Stage::U3S2, f.id,
                   0,
                   {{"order", f.order_ref},
                    {"status", "failed"},
                    {"error", err_name(e)}});
            return;
        }
        f.core_lock = ref_of(env, "lock");
        w.send(me, c.acq, MsgKind::LockConfirmation, Stage::U3S2, f.id,
               env.amount,
               {{"order", f.order_ref}, {"lock", f.core_lock}});
        return;
    }
    // acquirer: payment is secured, tell the merchant to fulfil
    if (env.sender_role == Role::Pip && opt(w, "u3.s2") == 3 &&
        !w.dcr_valid(env.sender, me)) {
        // the provider's direct API access has lapsed; refuse the confirmation
        w.send(me, env.sender, MsgKind::CancelLockInstruction, Stage::U3S2,
               f.id, 0,
               {{"order", f.order_ref},
                {"error", err_name(Err::NotRegistered)}});
        return;
    }
    auto idx = w.find_section_for(env, me);
    if (idx)
        w.open_sealed(env, *idx, me);
    if (f.use_case == 3 && opt(w, "u3.s3") == 2) {
        int leg = opt(w, "u2.s2");
        if (leg == 2) {
            w.send(me, w.wired("acquirer_pip"), MsgKind::CreditInstruction,
                   Stage::U2S2, f.id, f.amount,
                   {{"order", f.order_ref},
                    {"dest_sort", w.sort_of(merchant_bank(w, f))},
                    {"dest_acct", f.merchant_account}},
                   {name_of(w, f.payer_user)});
        } else if (leg == 4) {
            w.send(me, c.fmi, MsgKind::CreditInstruction, Stage::U2S2, f.id,
                   f.amount,
                   {{"order", f.order_ref},
                    {"dest_sort", w.sort_of(merchant_bank(w, f))},
                    {"dest_acct", f.merchant_account}},
                   {name_of(w, f.payer_user)});
        }
    }
    w.send(me, f.payee_user, MsgKind::PaymentStatusNotice, Stage::U3S2, f.id,
           f.amount, {{"order", f.order_ref}, {"status", "locked"}});
}

void handle_cancel_lock_instruction(World& w, const Envelope& env) {
    Cast c = cast_of(w);
    Flow& f = flow_of(w, env);
    ParticipantId me = env.receiver;
    if (me == c.cb) {
        auto s = w.ledger.cancel_lock(ref_of(env, "lock"), env.sender, w.now);
        Refs refs{{"lock", ref_of(env, "lock")},
                  {"error", ref_of(env, "error")}};
        if (!s.ok())
            refs["cancel_error"] = err_name(s.error());
        w.send(c.cb, env.sender, MsgKind::LockCancelled, env.stage, f.id, 0,
               refs);
        return;
    }
    if (me == c.fmi) {
        if (w.escrows.count(f.escrow) &&
            w.escrows.at(f.escrow).state == EscrowState::Active) {
            w.escrows.at(f.escrow).state = EscrowState::Refunded;
            f.notes["refund_leg"] = "1";
            w.send(me, c.cb, MsgKind::PaymentInstruction, Stage::U3S2, f.id,
                   f.amount,
                   {{"op", "transfer"},
                    {"from", wallet_owned_by(w, me)},
                    {"to", f.consumer_wallet},
                    {"min", "0"},
                    {"ref", f.id + ":escrowrefund"}});
        }
        w.send(me, env.sender, MsgKind::LockCancelled, env.stage, f.id, 0,
               {{"escrow", f.escrow}, {"error", ref_of(env, "error")}});
        return;
    }
    // consumer's provider received the cancel request from the acquirer
    cancel_lock_holding(w, f, err_from_name(ref_of(env, "error")));
}

void handle_lock_cancelled(World& w, const Envelope& env) {
    Flow& f = flow_of(w, env);
    ParticipantId me = env.receiver;
    Err e = err_from_name(ref_of(env, "error"));
    w.fail_flow(f, e);
    w.send(me, f.payer_user, MsgKind::PaymentStatusNotice, Stage::U3S2, f.id, 0,
           {{"status", "cancelled"}, {"error", err_name(e)}});
}

void handle_credit_confirmation_request(World& w, const Envelope& env) {
    Cast c = cast_of(w);
    Flow& f = flow_of(w, env);
    ParticipantId me = env.receiver;
    auto idx = w.find_section_for(env, me);
    if (idx) {
        auto opened = w.open_sealed(env, *idx, me);
        if (opened.ok()) {
            std::string n = find_datum(opened.value(), DatumKind::Name);
            if (!n.empty())
                f.notes["payer_name"] = n;
        }
    }
    if (!find_datum(env.plain, DatumKind::Name).empty())
        f.notes["payer_name"] = find_datum(env.plain, DatumKind::Name);

    bool refund_leg = f.notes.count("refund_leg") != 0;
    bool approve = true;
    Err reason = Err::None;
    if (!refund_leg) {
        if (!w.compliance_pass.at(me)) {
            approve = false;
            reason = Err::ComplianceFailed;
        } else if (f.use_case == 1 &&
                   w.scenario.pip_decision == PipDecision::Reject) {
            approve = false;
            reason = Err::ComplianceFailed;
        } else if (f.use_case == 1 &&
                   w.scenario.pip_decision == PipDecision::Timeout) {
            return; // never answers; the pending credit times out
        }
    }
    Refs refs{{"pending", ref_of(env, "pending")},
              {"decision", approve ? "approve" : "reject"}};
    if (reason != Err::None)
        refs["reason"] = err_name(reason);
    w.send(me, c.cb, MsgKind::CreditConfirmationResponse, env.stage, f.id,
           env.amount, refs);
}

void handle_credit_confirmation_response(World& w, const Envelope& env) {
    bool approve = ref_of(env, "decision") == "approve";
    auto r = w.ledger.confirm_credit(ref_of(env, "pending"), env.sender,
                                     approve, w.spec.toggles.holding_mode,
                                     w.now);
    if (!r.ok()) {
        w.note_failure(r.error());
        return;
    }
    Err fallback = Err::ComplianceFailed;
    if (!ref_of(env, "reason").empty())
        fallback = err_from_name(ref_of(env, "reason"));
    on_confirm_outcome(w, r.value(), fallback, env.stage);
}

void handle_wallet_credit_notice(World& w, const Envelope& env) {
    Cast c = cast_of(w);
    Flow& f = flow_of(w, env);
    ParticipantId me = env.receiver;
    WalletId wallet = ref_of(env, "wallet");
    const Wallet& wl = w.ledger.wallet(wallet);

    if (wl.kind == WalletKind::Technical) {
        if (f.use_case == 3 && opt(w, "u3.s2") == 5 && me == c.fmi &&
            f.escrow.empty() && !f.notes.count("refund_leg")) {
            f.notes["escrow_funded"] = "1";
            maybe_finish_escrow(w, f);
            return;
        }
        if (f.notes.count("payout_dest_acct")) {
            PersonalData payer;
            if (f.notes.count("payer_name"))
                payer.push_back(PersonalDatum{DatumKind::Name, f.payer_user,
                                              f.notes.at("payer_name")});
            if (me == c.fmi) { // pays the merchant from its own funds
                w.send(me, c.fps, MsgKind::FpsInstruction, Stage::U2S2, f.id,
                       env.amount,
                       {{"from", own_funds_account(w, me)},
                        {"dest_sort", f.notes.at("payout_dest_sort")},
                        {"dest_acct", f.notes.at("payout_dest_acct")},
                        {"purpose", "payout"},
                        {"order", f.order_ref},
                        {"ref", f.id + ":payout"}},
                       payer);
            } else { // a provider pays via its banking arm
                ParticipantId arm = me == w.wired("acquirer_pip")
                                        ? w.wired("acquirer_bank")
                                        : w.wired("consumer_pip_bank");
                w.send(me, arm, MsgKind::PayoutInstruction, Stage::U2S2, f.id,
                       env.amount,
                       {{"dest_sort", f.notes.at("payout_dest_sort")},
                        {"dest_acct", f.notes.at("payout_dest_acct")},
                        {"order", f.order_ref},
                        {"ref", f.id + ":payout"}},
                       payer);
            }
            return;
        }
        return;
    }

    // a user wallet was credited: tell the owner
    PersonalData payer;
    if (f.notes.count("payer_name"))
        payer.push_back(PersonalDatum{DatumKind::Name, f.payer_user,
                                      f.notes.at("payer_name")});
    w.send(me, wl.owner, MsgKind::CreditNotice, env.stage, f.id, env.amount,
           {{"wallet", wallet}}, payer);
}

void handle_credit_notice(World& w, const Envelope& env) {
    Flow& f = flow_of(w, env);
    if (f.use_case == 1 && env.receiver == f.payee_user &&
        f.status == FlowStatus::InFlight)
        f.status = FlowStatus::Succeeded;
}

void handle_payout_instruction(World& w, const Envelope& env) {
    Cast c = cast_of(w);
    Flow& f = flow_of(w, env);
    ParticipantId me = env.receiver;
    w.send(me, c.fps, MsgKind::FpsInstruction, Stage::U2S2, f.id, env.amount,
           {{"from", own_funds_account(w, me)},
            {"dest_sort", ref_of(env, "dest_sort")},
            {"dest_acct", ref_of(env, "dest_acct")},
            {"purpose", "payout"},
            {"order", ref_of(env, "order")},
            {"ref", ref_of(env, "ref")}},
           env.plain);
}

void handle_payment_completed(World& w, const Envelope& env) {
    Cast c = cast_of(w);
    Flow& f = flow_of(w, env);
    ParticipantId me = env.receiver;
    std::string status = ref_of(env, "status");

    if (env.sender == c.fps) { // clearing acknowledgement to the sending bank
        if (f.use_case == 1 && me == w.wired("u1.payer_bank"))
            u1_notify_payer(w, f, "sent");
        return;
    }

    if (status == "failed") {
        Err e = err_from_name(ref_of(env, "error"));
        if (f.use_case == 1) {
            switch (f.funding.kind) {
            case RailLeg::Kind::Book:
                w.send(me, w.rail.book(f.funding.source).host,
                       MsgKind::InteropCompleted, env.stage, f.id,
                       f.funding.amount,
                       {{"status", "failed"}, {"error", err_name(e)}});
                break;
            case RailLeg::Kind::Fps: {
                const BookAccount& credited = w.rail.book(f.funding.credited);
                if (credited.owner == me || credited.host == me) {
                    unwind_funding(w, f, e);
                } else {
                    w.send(me, credited.host, MsgKind::InteropCompleted,
                           env.stage, f.id, f.funding.amount,
                           {{"status", "failed"}, {"error", err_name(e)}});
                }
                break;
            }
            default:
                unwind_funding(w, f, e);
                break;
            }
        } else {
            w.fail_flow(f, e);
            ParticipantId pip = consumer_pip(w, f);
            w.send(pip, f.payer_user, MsgKind::PaymentStatusNotice, env.stage,
                   f.id, 0, {{"status", "failed"}, {"error", err_name(e)}});
            w.send(pip, c.acq, MsgKind::PaymentStatusNotice, env.stage, f.id, 0,
                   {{"order", f.order_ref},
                    {"status", "failed"},
                    {"error", err_name(e)}});
        }
        return;
    }

    // success acknowledgements that need forwarding
    if (f.use_case == 1 && f.funding.kind == RailLeg::Kind::Book)
        w.send(me, w.rail.book(f.funding.source).host, MsgKind::InteropCompleted,
               env.stage, f.id, f.funding.amount, {{"status", "ok"}});
}

void handle_interop_completed(World& w, const Envelope& env) {
    Flow& f = flow_of(w, env);
    ParticipantId me = env.receiver;
    if (ref_of(env, "status") == "failed") {
        Err e = err_from_name(ref_of(env, "error"));
        if (f.funding.kind == RailLeg::Kind::Book) {
            unwind_funding(w, f, e); // puts the book money back and notifies
        } else if (f.funding.kind == RailLeg::Kind::Fps) {
            unwind_funding(w, f, e);
        } else {
            w.fail_flow(f, e);
        }
        (void)me;
        return;
    }
    if (f.use_case == 1)
        u1_notify_payer(w, f, "sent");
}

void handle_eps_instruction(World& w, const Envelope& env) {
    Cast c = cast_of(w);
    Flow& f = flow_of(w, env);
    ParticipantId me = env.receiver;
    if (me == c.eps) {
        if (f.use_case == 1) { // forward payment detail to the issuer
            w.send(me, c.cb, MsgKind::EpsInstruction, env.stage, f.id,
                   env.amount,
                   {{"wallet", ref_of(env, "wallet")},
                    {"batch", ref_of(env, "batch")},
                    {"ref", ref_of(env, "ref")}},
                   {}, env.sealed);
        } else {
            f.notes["eps_dest_acct"] = ref_of(env, "acct");
        }
        return;
    }
    // central bank: remember what to mint once the batch settles
    f.notes["eps_mint_wallet"] = ref_of(env, "wallet");
    f.stash = env.sealed;
}

void handle_eps_completed(World& w, const Envelope& env) {
    Flow& f = flow_of(w, env);
    ParticipantId me = env.receiver;
    if (!ref_of(env, "error").empty()) {
        if (f.use_case == 1) {
            w.fail_flow(f, err_from_name(ref_of(env, "error")));
            u1_notify_payer(w, f, "failed",
                            err_from_name(ref_of(env, "error")));
        }
        return;
    }
    if (f.use_case == 1) {
        u1_notify_payer(w, f, "sent");
        return;
    }
    // merchant's bank: the settled net included this payment
    w.send(me, w.rail.book(ref_of(env, "acct")).owner,
           MsgKind::MerchantCreditNotice, env.stage, f.id, env.amount,
           {{"order", ref_of(env, "order")},
            {"account", ref_of(env, "acct")}});
}

// --- commerce ---------------------------------------------------------------

void handle_order_request(World& w, const Envelope& env) {
    Cast c = cast_of(w);
    Flow& f = flow_of(w, env);
    w.send(env.receiver, c.acq, MsgKind::PaymentRequest, s1_stage(f), f.id,
           f.amount,
           {{"order", f.order_ref}, {"alias", ref_of(env, "alias")}},
           {name_of(w, f.payer_user),
            alias_datum(f.payer_user, ref_of(env, "alias"))});
}

void handle_payment_request(World& w, const Envelope& env) {
    Cast c = cast_of(w);
    Flow& f = flow_of(w, env);
    std::string alias = ref_of(env, "alias");

    if (f.use_case == 2) { // pre-arrange the payout route where one is needed
        int leg = opt(w, "u2.s2");
        if (leg == 2) {
            w.send(c.acq, w.wired("acquirer_pip"), MsgKind::CreditInstruction,
                   Stage::U2S2, f.id, f.amount,
                   {{"order", f.order_ref},
                    {"dest_sort", w.sort_of(merchant_bank(w, f))},
                    {"dest_acct", f.merchant_account}},
                   {name_of(w, f.payer_user)});
        } else if (leg == 4) {
            w.send(c.acq, c.fmi, MsgKind::CreditInstruction, Stage::U2S2, f.id,
                   f.amount,
                   {{"order", f.order_ref},
                    {"dest_sort", w.sort_of(merchant_bank(w, f))},
                    {"dest_acct", f.merchant_account}},
                   {name_of(w, f.payer_user)});
        }
    }

    int s1 = opt(w, s1_slot(f));
    if (s1 == 3) { // the shared network resolves the alias itself
        MsgKind kind = f.use_case == 3 ? MsgKind::RtlRequest
                                       : MsgKind::RtpRequest;
        w.send(c.acq, c.tsp, kind, s1_stage(f), f.id, f.amount,
               {{"order", f.order_ref},
                {"alias", alias},
                {"reply_to", c.acq}},
               {name_of(w, f.payee_user),
                purpose_datum(f.payer_user, f.order_ref),
                alias_datum(f.payer_user, alias)});
        return;
    }
    w.send(c.acq, c.dir, MsgKind::AliasLookupRequest, s1_stage(f), f.id, 0,
           {{"alias", alias}}, {alias_datum(f.payer_user, alias)});
}

void handle_rtp_request(World& w, const Envelope& env) {
    Cast c = cast_of(w);
    Flow& f = flow_of(w, env);
    ParticipantId me = env.receiver;
    Stage st = s1_stage(f);

    if (me == c.cb) { // routing hop, payload sealed for the provider
        w.send(me, ref_of(env, "pip"), env.kind, st, f.id, env.amount,
               {{"order", ref_of(env, "order")}, {"via", "cbdc"}}, env.plain,
               env.sealed);
        return;
    }
    if (me == c.tsp) { // shared network: resolves and forwards in the clear
        auto it = w.alias_directory.find(ref_of(env, "alias"));
        if (it == w.alias_directory.end()) {
            w.send(me, ref_of(env, "reply_to"), MsgKind::RtpResponse, st, f.id,
                   0,
                   {{"decision", "declined"},
                    {"order", ref_of(env, "order")},
                    {"error", err_name(Err::UnknownAlias)}});
            w.fail_flow(f, Err::UnknownAlias);
            return;
        }
        w.send(me, it->second.pip, env.kind, st, f.id, env.amount,
               {{"order", ref_of(env, "order")},
                {"reply_to", ref_of(env, "reply_to")},
                {"via", "tsp"}},
               env.plain);
        return;
    }

    // consumer's wallet provider
    std::string via = ref_of(env, "via");
    f.notes["reply_via"] = via.empty() ? "direct" : via;
    PersonalData payload = env.plain;
    if (!env.sealed.empty()) {
        auto idx = w.find_section_for(env, me);
        if (idx) {
            auto opened = w.open_sealed(env, *idx, me);
            if (opened.ok())
                payload = opened.value();
        }
    }
    if (f.notes.at("reply_via") == "direct" && !w.dcr_valid(env.sender, me)) {
        decline_rtp(w, f, Err::NotRegistered);
        return;
    }
    if (!w.compliance_pass.at(me)) {
        decline_rtp(w, f, Err::ComplianceFailed);
        return;
    }
    Pence usable = w.ledger.available(f.consumer_wallet);
    Pence held = w.active_pip_locks(me, f.consumer_wallet);
    if (usable < held || usable - held < f.amount) {
        decline_rtp(w, f, Err::InsufficientAvailable);
        return;
    }
    f.rtp_sent = w.now;
    std::string merchant_name = find_datum(payload, DatumKind::Name);
    std::string purpose = find_datum(payload, DatumKind::TransactionPurpose);
    PersonalData prompt;
    if (!merchant_name.empty())
        prompt.push_back(
            PersonalDatum{DatumKind::Name, f.payee_user, merchant_name});
    if (!purpose.empty())
        prompt.push_back(purpose_datum(f.payer_user, purpose));
    w.send(me, f.payer_user, MsgKind::AuthorisePrompt, st, f.id, f.amount,
           {{"order", f.order_ref}}, prompt);
}

void handle_authorise_prompt(World& w, const Envelope& env) {
    Flow& f = flow_of(w, env);
    if (w.scenario.stall_consumer)
        return; // no decision ever comes back
    bool approve = w.scenario.authorise == Authorise::Approve;
    Refs refs{{"order", f.order_ref},
              {"decision", approve ? "approve" : "reject"}};
    if (w.scenario.authorise_delay > 0) {
        w.send_at(w.now + w.scenario.authorise_delay, env.receiver, env.sender,
                  MsgKind::AuthoriseDecision, env.stage, f.id, 0, refs);
    } else {
        w.send(env.receiver, env.sender, MsgKind::AuthoriseDecision, env.stage,
               f.id, 0, refs);
    }
}

void handle_authorise_decision(World& w, const Envelope& env) {
    Flow& f = flow_of(w, env);
    if (w.now > f.rtp_sent + w.spec.toggles.rtp_expiry) {
        decline_rtp(w, f, Err::RtpExpired);
        return;
    }
    if (ref_of(env, "decision") != "approve") {
        decline_rtp(w, f, Err::ConsumerRejected);
        return;
    }
    if (f.use_case == 2) {
        accept_rtp(w, f);
        execute_u2_settlement(w, f);
    } else {
        place_lock(w, f);
    }
}

void handle_rtp_response(World& w, const Envelope& env) {
    Cast c = cast_of(w);
    Flow& f = flow_of(w, env);
    ParticipantId me = env.receiver;
    if (me == c.cb || me == c.tsp) {
        w.send(me, ref_of(env, "reply_to"), MsgKind::RtpResponse, env.stage,
               f.id, env.amount, env.refs, env.plain, env.sealed);
        return;
    }
    if (ref_of(env, "decision") != "accepted") {
        w.send(me, f.payee_user, MsgKind::PaymentStatusNotice, env.stage, f.id,
               0,
               {{"order", f.order_ref},
                {"status", "declined"},
                {"error", ref_of(env, "error")}});
    }
}

void handle_payment_status_notice(World& w, const Envelope& env) {
    Cast c = cast_of(w);
    Flow& f = flow_of(w, env);
    ParticipantId me = env.receiver;

    if (env.receiver_role == Role::User) {
        if (me == f.payee_user && f.use_case != 1 &&
            (ref_of(env, "status") == "declined" ||
             ref_of(env, "status") == "failed")) {
            // merchant learns the payment died; void the order
            w.send(me, f.payer_user, MsgKind::OrderCancelled, Stage::None, f.id,
                   0,
                   {{"order", f.order_ref}, {"error", ref_of(env, "error")}});
        }
        if (me == f.payee_user && ref_of(env, "status") == "locked") {
            // payment secured: hand the goods to the courier, unless the
            // scenario keeps the merchant idle to let the lock lapse
            if (!w.scenario.wait_for_lock_expiry) {
                f.product_dispatched = true;
                w.send(me, c.courier, MsgKind::DispatchNotice, Stage::None,
                       f.id, 0, {{"order", f.order_ref}},
                       {name_of(w, f.payer_user)});
            }
        }
        return;
    }
    if (me == c.acq) {
        w.send(me, f.payee_user, MsgKind::PaymentStatusNotice, env.stage, f.id,
               0, env.refs);
        return;
    }
    // a bank-side scheme failure for the funding leg (use case 1)
    if (!ref_of(env, "error").empty() && f.use_case == 1) {
        u1_fail(w, f, err_from_name(ref_of(env, "error")));
    }
}

void handle_merchant_credit_notice(World& w, const Envelope& env) {
    Cast c = cast_of(w);
    Flow& f = flow_of(w, env);
    f.merchant_paid = true;
    if (f.use_case == 2) {
        if (f.status == FlowStatus::InFlight)
            f.status = FlowStatus::Succeeded;
        w.send(env.receiver, f.payer_user, MsgKind::OrderConfirmed, Stage::None,
               f.id, 0, {{"order", f.order_ref}});
        return;
    }
    // delivery-versus-payment: funds arrived, release the goods
    w.send(env.receiver, c.courier, MsgKind::HandoverApproval, Stage::None,
           f.id, 0, {{"order", f.order_ref}});
}

void handle_dispatch_notice(World& w, const Envelope& env) {
    Cast c = cast_of(w);
    Flow& f = flow_of(w, env);
    w.send(c.courier, f.payer_user, MsgKind::DeliveryArrival, Stage::None, f.id,
           0, {{"order", f.order_ref}});
    if (w.scenario.delivery == DeliveryOutcome::Success) {
        w.send(c.courier, f.payer_user, MsgKind::ReleasePrompt, Stage::U3S3,
               f.id, 0, {{"order", f.order_ref}});
    } else {
        w.send(c.courier, f.payee_user, MsgKind::DeliveryResult, Stage::None,
               f.id, 0,
               {{"order", f.order_ref},
                {"result", "failed"},
                {"error", err_name(Err::DeliveryFailed)}});
    }
}

void handle_release_prompt(World& w, const Envelope& env) {
    Cast c = cast_of(w);
    Flow& f = flow_of(w, env);
    if (w.scenario.release_authorise == Authorise::Approve) {
        w.send(env.receiver, consumer_pip(w, f), MsgKind::ReleaseApproval,
               Stage::U3S3, f.id, 0, {{"order", f.order_ref}});
    } else {
        w.send(env.receiver, c.courier, MsgKind::DeliveryResult, Stage::None,
               f.id, 0,
               {{"order", f.order_ref},
                {"result", "refused"},
                {"error", err_name(Err::ConsumerRejected)}});
    }
}

void handle_release_approval(World& w, const Envelope& env) {
    Cast c = cast_of(w);
    Flow& f = flow_of(w, env);
    ParticipantId pip = env.receiver;
    f.release_requested = true;
    switch (opt(w, "u3.s3")) {
    case 1: { // reveal the beneficiary to the issuer and settle centrally
        w.send(pip, c.cb, MsgKind::ReleaseInstruction, Stage::U3S3, f.id,
               f.amount,
               {{"lock", f.core_lock},
                {"commit", "beneficiary:" + f.id},
                {"dest_sort", w.sort_of(merchant_bank(w, f))},
                {"dest_acct", f.merchant_account},
                {"order", f.order_ref},
                {"ref", f.id + ":release"}},
               {name_of(w, f.payee_user),
                acct_datum(f.payee_user, f.merchant_account)});
        break;
    }
    case 2: { // provider releases its own hold, then pays per the bound leg
        if (w.pip_locks.count(f.pip_lock))
            w.pip_locks.at(f.pip_lock).state = LockState::Released;
        execute_u2_settlement(w, f);
        break;
    }
    case 3: { // escrow payout by the market infrastructure
        w.send(pip, c.fmi, MsgKind::ReleaseInstruction, Stage::U3S3, f.id,
               f.amount,
               {{"escrow", f.escrow},
                {"order", f.order_ref},
                {"ref", f.id + ":release"}});
        break;
    }
    default:
        assert(false);
    }
}

void handle_release_instruction(World& w, const Envelope& env) {
    Cast c = cast_of(w);
    Flow& f = flow_of(w, env);
    ParticipantId me = env.receiver;
    if (me == c.cb) {
        LockId lock = ref_of(env, "lock");
        if (!w.ledger.lock_exists(lock) ||
            w.ledger.lock(lock).beneficiary != ref_of(env, "commit")) {
            w.note_failure(Err::BeneficiaryMismatch);
            w.send(me, env.sender, MsgKind::ReleaseCompleted, env.stage, f.id,
                   0, {{"error", err_name(Err::BeneficiaryMismatch)}});
            return;
        }
        auto r = w.ledger.release_and_burn(lock, env.sender, w.now);
        if (!r.ok()) {
            w.note_failure(r.error());
            w.send(me, env.sender, MsgKind::ReleaseCompleted, env.stage, f.id,
                   0, {{"error", err_name(r.error())}});
            return;
        }
        backing_payout(w, f.id, ref_of(env, "dest_acct"), r.value().amount,
                       "payout", Stage::U3S3,
                       {{"order", ref_of(env, "order")}});
        w.send(me, env.sender, MsgKind::ReleaseCompleted, env.stage, f.id,
               r.value().amount, {{"lock", lock}});
        return;
    }
    // market infrastructure escrow
    EscrowId esc = ref_of(env, "escrow");
    if (!w.escrows.count(esc) ||
        w.escrows.at(esc).state != EscrowState::Active) {
        w.note_failure(Err::LockNotActive);
        w.send(me, env.sender, MsgKind::ReleaseCompleted, env.stage, f.id, 0,
               {{"error", err_name(Err::LockNotActive)}});
        return;
    }
    w.escrows.at(esc).state = EscrowState::Released;
    w.send(me, c.fps, MsgKind::FpsInstruction, Stage::U3S3, f.id,
           w.escrows.at(esc).amount,
           {{"from", own_funds_account(w, me)},
            {"dest_sort", f.notes.at("payout_dest_sort")},
            {"dest_acct", f.notes.at("payout_dest_acct")},
            {"purpose", "payout"},
            {"order", f.order_ref},
            {"ref", f.id + ":payout"}});
    w.send(me, env.sender, MsgKind::ReleaseCompleted, env.stage, f.id,
           w.escrows.at(esc).amount, {{"escrow", esc}});
}

void handle_release_completed(World& w, const Envelope& env) {
    Flow& f = flow_of(w, env);
    if (!ref_of(env, "error").empty()) {
        Err e = err_from_name(ref_of(env, "error"));
        w.fail_flow(f, e);
        w.send(env.receiver, f.payer_user, MsgKind::PaymentStatusNotice,
               Stage::U3S3, f.id, 0,
               {{"status", "failed"}, {"error", err_name(e)}});
        return;
    }
    w.send(env.receiver, f.payer_user, MsgKind::PaymentStatusNotice,
           Stage::U3S3, f.id, env.amount, {{"status", "released"}});
}

void handle_delivery_result(World& w, const Envelope& env) {
    Cast c = cast_of(w);
    Flow& f = flow_of(w, env);
    if (env.receiver == c.courier) { // consumer refused at the door
        w.send(c.courier, f.payee_user, MsgKind::DeliveryResult, Stage::None,
               f.id, 0,
               {{"order", f.order_ref},
                {"result", "failed"},
                {"error", ref_of(env, "error")}});
        return;
    }
    // merchant: delivery failed, void the order and free the funds
    w.send(env.receiver, c.acq, MsgKind::OrderCancelled, Stage::None, f.id, 0,
           {{"order", f.order_ref}, {"error", ref_of(env, "error")}});
}

void handle_order_cancelled(World& w, const Envelope& env) {
    Cast c = cast_of(w);
    Flow& f = flow_of(w, env);
    if (env.receiver == c.acq) {
        w.send(c.acq, consumer_pip(w, f), MsgKind::CancelLockInstruction,
               Stage::U3S2, f.id, 0,
               {{"order", f.order_ref}, {"error", ref_of(env, "error")}});
        return;
    }
    // consumer: terminal notice, nothing to do
}

void handle_handover_approval(World& w, const Envelope& env) {
    Flow& f = flow_of(w, env);
    w.send(env.receiver, f.payer_user, MsgKind::ProductHandover, Stage::None,
           f.id, 0, {{"order", f.order_ref}});
}

void handle_product_handover(World& w, const Envelope& env) {
    Flow& f = flow_of(w, env);
    f.product_delivered = true;
    if (f.status == FlowStatus::InFlight)
        f.status = FlowStatus::Succeeded;
}

void handle_cop_data_feed(World& w, const Envelope& env) {
    AliasEntry entry;
    entry.alias = ref_of(env, "alias");
    entry.wallet = ref_of(env, "wallet");
    entry.pip = env.sender;
    entry.cop_payload = env.plain;
    w.tsp_feed[entry.alias] = entry;
}

void handle_credit_instruction(World& w, const Envelope& env) {
    Flow& f = flow_of(w, env);
    f.notes["payout_dest_acct"] = ref_of(env, "dest_acct");
    f.notes["payout_dest_sort"] = ref_of(env, "dest_sort");
    std::string n = find_datum(env.plain, DatumKind::Name);
    if (!n.empty())
        f.notes["payer_name"] = n;
}

void handle_unlock_notice(World& w, const Envelope& env) {
    Cast c = cast_of(w);
    Flow& f = flow_of(w, env);
    ParticipantId me = env.receiver;
    w.fail_flow(f, Err::LockExpired);
    w.send(me, f.payer_user, MsgKind::PaymentStatusNotice, Stage::U3S2, f.id, 0,
           {{"status", "expired"}, {"error", err_name(Err::LockExpired)}});
    w.send(me, c.acq, MsgKind::PaymentStatusNotice, Stage::U3S2, f.id, 0,
           {{"order", f.order_ref},
            {"status", "failed"},
            {"error", err_name(Err::LockExpired)}});
}

} // namespace

// ---------------------------------------------------------------------------

void initiate_scenario(World& w) {
    Cast c = cast_of(w);
    const ScenarioSpec& sc = w.scenario;

    auto seed_dcr = [&](const ParticipantId& client,
                        const ParticipantId& provider) {
        Tick granted = 0;
        w.dcr_register(client, provider, granted);
        if (sc.dcr_expired)
            w.dcr_registrations.back().expires = 0;
    };

    auto make_flow = [&](Pence amount) -> Flow& {
        Flow f;
        f.id = w.ids.next(IdKind::Flow);
        f.use_case = sc.use_case;
        f.amount = amount;
        if (sc.use_case == 1) {
            f.payer_user = w.wired("u1.payer");
            f.payee_user = w.wired("u1.payee");
            f.payer_account = book_owned_by(w, f.payer_user);
            f.payee_wallet = wallet_owned_by(w, f.payee_user);
        } else {
            f.payer_user = w.wired("consumer");
            f.payee_user = w.wired("merchant");
            f.consumer_wallet = wallet_owned_by(w, f.payer_user);
            f.merchant_account = book_owned_by(w, f.payee_user);
            f.order_ref = "ORD:" + f.id;
        }
        w.flows[f.id] = f;
        return w.flows[f.id];
    };

    auto alias_for = [&](const WalletId& wallet) -> Alias {
        if (!sc.alias_valid)
            return "no-such-alias";
        for (const auto& [a, entry] : w.alias_directory) {
            if (entry.wallet == wallet)
                return a;
        }
        return "no-such-alias";
    };

    if (sc.use_case == 1) {
        if (opt(w, "u1.s1") == 1) {
            ParticipantId payee = w.wired("u1.payee");
            seed_dcr(w.wired("u1.payer_bank"),
                     w.ledger.wallet(wallet_owned_by(w, payee)).managing_pip);
        }
        if (opt(w, "u1.s1") == 3) {
            for (const auto& [a, entry] : w.alias_directory) {
                w.send(entry.pip, c.tsp, MsgKind::CopDataFeed, Stage::U1S1, "",
                       0, {{"alias", a}, {"wallet", entry.wallet}},
                       entry.cop_payload);
            }
        }
        auto start = [&](Pence amount) {
            Flow& f = make_flow(amount);
            Alias a = alias_for(f.payee_wallet);
            w.send(f.payer_user, w.wired("u1.payer_bank"), MsgKind::PayInitiate,
                   Stage::U1S1, f.id, amount, {{"alias", a}},
                   {name_of(w, f.payer_user),
                    alias_datum(f.payee_user, a),
                    purpose_datum(f.payer_user, "gift")});
        };
        start(sc.amount);
        if (sc.second_amount > 0)
            start(sc.second_amount);
        return;
    }

    ParticipantId consumer = w.wired("consumer");
    ParticipantId pip = w.ledger.wallet(wallet_owned_by(w, consumer)).managing_pip;
    if (sc.use_case == 2 && opt(w, "u2.s1") == 2)
        seed_dcr(c.acq, pip);
    if (sc.use_case == 3) {
        if (opt(w, "u3.s1") == 2)
            seed_dcr(c.acq, pip);
        if (opt(w, "u3.s2") == 3)
            seed_dcr(pip, c.acq);
    }

    Flow& f = make_flow(sc.amount);
    Alias a = alias_for(f.consumer_wallet);
    w.send(f.payer_user, f.payee_user, MsgKind::OrderRequest, Stage::None, f.id,
           f.amount, {{"order", f.order_ref}, {"alias", a}},
           {name_of(w, f.payer_user),
            purpose_datum(f.payer_user, f.order_ref)});
}

void handle_message(World& w, const Envelope& env) {
    // a terminated flow still drains its in-flight notifications
    switch (env.kind) {
    case MsgKind::PayInitiate: handle_pay_initiate(w, env); break;
    case MsgKind::AliasLookupRequest: handle_alias_lookup_request(w, env); break;
    case MsgKind::AliasLookupResponse:
        if (flow_of(w, env).use_case == 1)
            handle_alias_lookup_response_u1(w, env);
        else
            handle_alias_lookup_response_acq(w, env);
        break;
    case MsgKind::CopDataFeed: handle_cop_data_feed(w, env); break;
    case MsgKind::CopRequest: handle_cop_request(w, env); break;
    case MsgKind::CopResponse: handle_cop_response(w, env); break;
    case MsgKind::CopResultNotice: handle_cop_result_notice(w, env); break;
    case MsgKind::PayAuthorise: handle_pay_authorise(w, env); break;
    case MsgKind::FpsInstruction: handle_fps_instruction(w, env); break;
    case MsgKind::FpsCreditNotice: handle_fps_credit_notice(w, env); break;
    case MsgKind::InteropFundingNotice:
        handle_interop_funding_notice(w, env);
        break;
    case MsgKind::PaymentInstruction: handle_payment_instruction(w, env); break;
    case MsgKind::CreditConfirmationRequest:
        handle_credit_confirmation_request(w, env);
        break;
    case MsgKind::CreditConfirmationResponse:
        handle_credit_confirmation_response(w, env);
        break;
    case MsgKind::WalletCreditNotice: handle_wallet_credit_notice(w, env); break;
    case MsgKind::CreditNotice: handle_credit_notice(w, env); break;
    case MsgKind::PaymentCompleted: handle_payment_completed(w, env); break;
    case MsgKind::InteropCompleted: handle_interop_completed(w, env); break;
    case MsgKind::PaymentStatusNotice:
        handle_payment_status_notice(w, env);
        break;
    case MsgKind::EpsInstruction: handle_eps_instruction(w, env); break;
    case MsgKind::EpsCompleted: handle_eps_completed(w, env); break;
    case MsgKind::OrderRequest: handle_order_request(w, env); break;
    case MsgKind::PaymentRequest: handle_payment_request(w, env); break;
    case MsgKind::RtpRequest:
    case MsgKind::RtlRequest: handle_rtp_request(w, env); break;
    case MsgKind::RtpResponse: handle_rtp_response(w, env); break;
    case MsgKind::AuthorisePrompt: handle_authorise_prompt(w, env); break;
    case MsgKind::AuthoriseDecision: handle_authorise_decision(w, env); break;
    case MsgKind::PayoutInstruction: handle_payout_instruction(w, env); break;
    case MsgKind::CreditInstruction: handle_credit_instruction(w, env); break;
    case MsgKind::MerchantCreditNotice:
        handle_merchant_credit_notice(w, env);
        break;
    case MsgKind::OrderConfirmed: break; // terminal consumer notice
    case MsgKind::LockInstruction: handle_lock_instruction(w, env); break;
    case MsgKind::LockConfirmation: handle_lock_confirmation(w, env); break;
    case MsgKind::CancelLockInstruction:
        handle_cancel_lock_instruction(w, env);
        break;
    case MsgKind::LockCancelled: handle_lock_cancelled(w, env); break;
    case MsgKind::UnlockNotice: handle_unlock_notice(w, env); break;
    case MsgKind::ReleasePrompt: handle_release_prompt(w, env); break;
    case MsgKind::ReleaseApproval: handle_release_approval(w, env); break;
    case MsgKind::ReleaseInstruction: handle_release_instruction(w, env); break;
    case MsgKind::ReleaseCompleted: handle_release_completed(w, env); break;
    case MsgKind::DispatchNotice: handle_dispatch_notice(w, env); break;
    case MsgKind::DeliveryArrival: break; // consumer waits at the door
    case MsgKind::DeliveryResult: handle_delivery_result(w, env); break;
    case MsgKind::HandoverApproval: handle_handover_approval(w, env); break;
    case MsgKind::ProductHandover: handle_product_handover(w, env); break;
    case MsgKind::OrderCancelled: handle_order_cancelled(w, env); break;
    default: break;
    }
}

void on_timeout_outcomes(World& w, const std::vector<ConfirmOutcome>& outs) {
    for (const auto& o : outs) {
        Stage st = w.flows.at(o.flow).use_case == 1 ? Stage::U1S2 : Stage::U3S2;
        on_confirm_outcome(w, o, Err::PipTimeout, st);
    }
}

void on_core_locks_expired(World& w, const std::vector<LockId>& locks) {
    Cast c = cast_of(w);
    for (const LockId& l : locks) {
        for (auto& [id, f] : w.flows) {
            if (f.core_lock == l && f.status == FlowStatus::InFlight) {
                ParticipantId pip =
                    w.ledger.wallet(w.ledger.lock(l).wallet).managing_pip;
                w.send(c.cb, pip, MsgKind::UnlockNotice, Stage::U3S2, f.id, 0,
                       {{"lock", l}});
            }
        }
    }
}

void on_pip_timers(World& w) {
    Cast c = cast_of(w);
    for (auto& [id, lock] : w.pip_locks) {
        if (lock.state == LockState::Active && lock.expiry < w.now) {
            lock.state = LockState::Expired;
            for (auto& [fid, f] : w.flows) {
                if (f.pip_lock == id && f.status == FlowStatus::InFlight) {
                    w.fail_flow(f, Err::LockExpired);
                    w.send(lock.pip, f.payer_user,
                           MsgKind::PaymentStatusNotice, Stage::U3S2, f.id, 0,
                           {{"status", "expired"},
                            {"error", err_name(Err::LockExpired)}});
                    w.send(lock.pip, c.acq, MsgKind::PaymentStatusNotice,
                           Stage::U3S2, f.id, 0,
                           {{"order", f.order_ref},
                            {"status", "failed"},
                            {"error", err_name(Err::LockExpired)}});
                }
            }
        }
    }
    for (auto& [id, esc] : w.escrows) {
        if (esc.state == EscrowState::Active && esc.expiry < w.now) {
            for (auto& [fid, f] : w.flows) {
                if (f.escrow == id && f.status == FlowStatus::InFlight) {
                    esc.state = EscrowState::Refunded;
                    f.notes["refund_leg"] = "1";
                    w.fail_flow(f, Err::LockExpired);
                    w.send(c.fmi, c.cb, MsgKind::PaymentInstruction,
                           Stage::U3S2, f.id, esc.amount,
                           {{"op", "transfer"},
                            {"from", wallet_owned_by(w, c.fmi)},
                            {"to", f.consumer_wallet},
                            {"min", "0"},
                            {"ref", f.id + ":escrowrefund"}});
                    w.send(c.fmi, consumer_pip(w, f),
                           MsgKind::PaymentStatusNotice, Stage::U3S2, f.id, 0,
                           {{"order", f.order_ref},
                            {"status", "expired"},
                            {"error", err_name(Err::LockExpired)}});
                }
            }
        }
    }
}

void on_batch_results(World& w, const std::vector<BatchResult>& results) {
    Cast c = cast_of(w);
    for (const auto& res : results) {
        for (auto& [fid, f] : w.flows) {
            if (f.funding.kind != RailLeg::Kind::EpsObligation ||
                f.funding.batch != res.id)
                continue;
            if (!res.settled) {
                Err e = Err::InsufficientSettlementFunds;
                w.note_failure(e);
                if (f.use_case == 1) {
                    w.fail_flow(f, e);
                    w.send(c.eps, w.wired("u1.payer_bank"),
                           MsgKind::EpsCompleted, Stage::U1S2, f.id, f.amount,
                           {{"ref", f.id + ":fund"}, {"error", err_name(e)}});
                } else {
                    w.ledger.cancel_lock(f.core_lock, consumer_pip(w, f),
                                         w.now);
                    w.fail_flow(f, e);
                    w.send(c.eps, consumer_pip(w, f), MsgKind::EpsCompleted,
                           Stage::U2S2, f.id, f.amount,
                           {{"ref", f.id + ":eps"}, {"error", err_name(e)}});
                }
                continue;
            }
            if (f.use_case == 1) {
                // customer debit, issuance and notification settle together
                w.rail.book_debit(f.funding.source, f.amount, w.now, "eps");
                auto m = w.ledger.mint_to(f.notes.at("eps_mint_wallet"),
                                          f.amount, w.rail.backing_account(),
                                          w.now, f.id);
                assert(m.ok() && m.value().pending);
                ParticipantId pip =
                    w.ledger.wallet(f.notes.at("eps_mint_wallet")).managing_pip;
                w.send(c.cb, pip, MsgKind::CreditConfirmationRequest,
                       Stage::U1S2, f.id, f.amount,
                       {{"pending", *m.value().pending},
                        {"wallet", f.notes.at("eps_mint_wallet")},
                        {"ref", f.id + ":fund"}},
                       {}, f.stash);
                w.send(c.eps, w.wired("u1.payer_bank"), MsgKind::EpsCompleted,
                       Stage::U1S2, f.id, f.amount,
                       {{"ref", f.id + ":fund"}});
            } else {
                auto r = w.ledger.release_and_burn(f.core_lock,
                                                   consumer_pip(w, f), w.now);
                assert(r.ok());
                w.rail.book_credit(f.notes.at("eps_dest_acct"), f.amount,
                                   w.now, "eps");
                w.send(c.eps, merchant_bank(w, f), MsgKind::EpsCompleted,
                       Stage::U2S2, f.id, f.amount,
                       {{"acct", f.notes.at("eps_dest_acct")},
                        {"order", f.order_ref},
                        {"ref", f.id + ":eps"}});
            }
        }
    }
}

} // namespace dpound
