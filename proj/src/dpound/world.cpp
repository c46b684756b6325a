#include "dpound/world.hpp"

#include <algorithm>
#include <cassert>
#include <sstream>

namespace dpound {

const Participant& World::participant(const ParticipantId& p) const {
    auto it = participant_index.find(p);
    assert(it != participant_index.end());
    return participants[it->second];
}

Role World::role_of(const ParticipantId& p) const { return participant(p).role; }

ParticipantId World::wired(const std::string& function) const {
    auto it = spec.wiring.find(function);
    assert(it != spec.wiring.end());
    return it->second;
}

WalletId World::wallet_key(const std::string& key) const {
    auto it = wallet_keys.find(key);
    assert(it != wallet_keys.end());
    return it->second;
}

AccountId World::account_key(const std::string& key) const {
    auto it = account_keys.find(key);
    assert(it != account_keys.end());
    return it->second;
}

int World::binding(const std::string& slot) const {
    auto it = spec.bindings.find(slot);
    return it == spec.bindings.end() ? 0 : it->second;
}

MsgId World::send(const ParticipantId& sender, const ParticipantId& receiver,
                  MsgKind kind, Stage stage, const FlowId& flow, Pence amount,
                  std::map<std::string, std::string> refs, PersonalData plain,
                  std::vector<SealedSection> sealed) {
    Envelope env;
    env.id = ids.next(IdKind::Message);
    env.flow = flow;
    env.stage = stage;
    env.kind = kind;
    env.sender = sender;
    env.sender_role = role_of(sender);
    env.receiver = receiver;
    env.receiver_role = role_of(receiver);
    env.amount = amount;
    env.refs = std::move(refs);
    env.plain = std::move(plain);
    env.sealed = std::move(sealed);
    MsgId id = env.id;
    queues[sender].push_back(Queued{std::move(env), now});
    return id;
}

MsgId World::send_at(Tick when, const ParticipantId& sender,
                     const ParticipantId& receiver, MsgKind kind, Stage stage,
                     const FlowId& flow, Pence amount,
                     std::map<std::string, std::string> refs, PersonalData plain,
                     std::vector<SealedSection> sealed) {
    Envelope env;
    env.id = ids.next(IdKind::Message);
    env.flow = flow;
    env.stage = stage;
    env.kind = kind;
    env.sender = sender;
    env.sender_role = role_of(sender);
    env.receiver = receiver;
    env.receiver_role = role_of(receiver);
    env.amount = amount;
    env.refs = std::move(refs);
    env.plain = std::move(plain);
    env.sealed = std::move(sealed);
    MsgId id = env.id;
    scheduled.emplace(when, std::move(env));
    return id;
}

std::optional<std::size_t>
World::find_section_for(const Envelope& env, const ParticipantId& recipient) const {
    for (std::size_t i = 0; i < env.sealed.size(); ++i) {
        if (env.sealed[i].recipient == recipient)
            return i;
    }
    return std::nullopt;
}

Result<PersonalData> World::open_sealed(const Envelope& env, std::size_t section,
                                        const ParticipantId& opener) {
    return open_section(keydir, exposure, env, section, opener, role_of(opener));
}

SortCode World::sort_of(const ParticipantId& bank) const {
    auto m = rail.membership(bank);
    return m ? m->sort_code : SortCode{};
}

void World::note_failure(Err e) { failure_codes.insert(err_name(e)); }

void World::fail_flow(Flow& flow, Err e) {
    if (flow.status == FlowStatus::InFlight) {
        flow.status = FlowStatus::Failed;
        flow.failure = e;
    }
    note_failure(e);
}

Pence World::cbdc_position(const ParticipantId& p) const {
    Pence total = 0;
    for (const auto& [id, w] : ledger.wallets()) {
        if (w.owner == p)
            total += w.ledger_balance;
    }
    return total;
}

// Bank-money position: settlement balance plus claims held at *other*
// institutions. A self-hosted account is the institution's own liability and
// already mirrored by its settlement funds, so it is not counted twice.
Pence World::cbm_position(const ParticipantId& p) const {
    Pence total = 0;
    for (const auto& [id, acct] : rail.settlement_accounts()) {
        if (acct.owner == p)
            total += acct.balance;
    }
    for (const auto& [id, book] : rail.book_accounts()) {
        if (book.owner == p && book.host != p)
            total += book.balance;
    }
    return total;
}

void World::sample_liquidity() {
    Pence demand = 0;
    for (const auto& part : participants) {
        if (!part.intermediary)
            continue;
        Pence cbdc = cbdc_position(part.name);
        Pence cbm = cbm_position(part.name);
        Pence init_cbdc = init_cbdc_position.count(part.name)
                              ? init_cbdc_position.at(part.name)
                              : 0;
        Pence init_cbm = init_cbm_position.count(part.name)
                             ? init_cbm_position.at(part.name)
                             : 0;
        if (cbdc < init_cbdc)
            demand += init_cbdc - cbdc;
        if (cbm < init_cbm)
            demand += init_cbm - cbm;
    }
    for (const auto& [id, esc] : escrows) {
        if (esc.state == EscrowState::Active)
            demand += esc.amount;
    }
    liquidity_peak = std::max(liquidity_peak, demand);
}

WorldTotals World::totals() const {
    WorldTotals t;
    t.wallets = ledger.sum_wallets();
    t.suspense = ledger.suspense();
    t.pending_mint = ledger.pending_mint_total();
    t.settlement = rail.sum_settlement();
    t.books = rail.sum_books();
    return t;
}

void World::drain_journals() {
    const auto& core = ledger.journal();
    for (; core_drained < core.size(); ++core_drained) {
        const auto& e = core[core_drained];
        std::ostringstream line;
        line << e.tick << "|" << e.kind << "|" << e.account << "|" << e.amount
             << "|" << e.counterparty;
        journal_lines.push_back(line.str());
    }
    const auto& railj = rail.journal();
    for (; rail_drained < railj.size(); ++rail_drained) {
        const auto& e = railj[rail_drained];
        std::ostringstream line;
        line << e.tick << "|" << e.kind << "|" << e.account << "|" << e.amount
             << "|" << e.counterparty;
        journal_lines.push_back(line.str());
    }
}

void World::trace_message(const Envelope& env) {
    std::ostringstream line;
    line << now << "|" << env.id << "|" << role_name(env.sender_role) << "|"
         << role_name(env.receiver_role) << "|" << msg_kind_name(env.kind) << "|"
         << env.sealed.size();
    trace_lines.push_back(line.str());
}

bool World::dcr_valid(const ParticipantId& client,
                      const ParticipantId& provider) const {
    for (const auto& reg : dcr_registrations) {
        if (reg.client == client && reg.provider == provider && now < reg.expires)
            return true;
    }
    return false;
}

void World::dcr_register(const ParticipantId& client,
                         const ParticipantId& provider, Tick granted) {
    DcrRegistration reg;
    reg.id = ids.next(IdKind::Registration);
    reg.client = client;
    reg.provider = provider;
    reg.granted = granted;
    reg.expires = granted + spec.toggles.dcr_ttl;
    dcr_registrations.push_back(reg);
}

Pence World::active_pip_locks(const ParticipantId& pip,
                              const WalletId& wallet) const {
    Pence total = 0;
    for (const auto& [id, lock] : pip_locks) {
        if (lock.pip == pip && lock.wallet == wallet &&
            lock.state == LockState::Active)
            total += lock.amount;
    }
    return total;
}

Result<World*> build_world(World& world, const WorldSpec& spec,
                           const ScenarioSpec& scenario) {
    world.spec = spec;
    world.scenario = scenario;

    // Scenario overrides adjust the spec copy before anything is created.
    for (const auto& [key, balance] : scenario.balance_overrides) {
        for (auto& w : world.spec.wallets) {
            if (w.key == key)
                w.balance = balance;
        }
    }
    for (const auto& [key, limit] : scenario.limit_overrides) {
        for (auto& w : world.spec.wallets) {
            if (w.key == key)
                w.holding_limit = limit;
        }
    }
    const WorldSpec& ws = world.spec;

    for (const auto& ps : ws.participants) {
        if (world.participant_index.count(ps.name))
            return Err::ConfigError;
        Participant p;
        p.name = ps.name;
        p.role = ps.role;
        p.intermediary = ps.intermediary;
        p.display_name = ps.display_name.empty() ? ps.name : ps.display_name;
        world.participant_index[p.name] = world.participants.size();
        world.participants.push_back(p);
        world.keydir.register_participant(p.name);
        world.compliance_pass[p.name] = true;
    }
    if (!scenario.compliance_fail_at.empty())
        world.compliance_pass[scenario.compliance_fail_at] = false;

    Pence wallet_total = 0;
    for (const auto& w : ws.wallets)
        wallet_total += w.balance;

    for (const auto& ss : ws.settlements) {
        if (!world.participant_index.count(ss.owner))
            return Err::ConfigError;
        Pence balance = ss.balance;
        if (ss.key == ws.backing_key)
            balance = wallet_total; // backing mirrors issuance one to one
        auto acct = world.rail.open_settlement_account(ss.owner, balance);
        world.account_keys[ss.key] = acct;
        if (ss.key == ws.backing_key)
            world.rail.set_backing_account(acct);
    }
    if (world.rail.backing_account().empty())
        return Err::ConfigError;

    for (const auto& bs : ws.books) {
        auto acct = world.rail.open_book_account(bs.host, bs.owner, bs.balance);
        if (!acct.ok())
            return acct.error();
        world.account_keys[bs.key] = acct.value();
    }

    for (const auto& wsp : ws.wallets) {
        std::optional<AccountId> linked;
        if (!wsp.linked_account_key.empty()) {
            if (!world.account_keys.count(wsp.linked_account_key))
                return Err::ConfigError;
            linked = world.account_keys[wsp.linked_account_key];
        }
        auto opened = world.ledger.open_wallet(wsp.owner, wsp.pip,
                                               world.role_of(wsp.pip), wsp.kind,
                                               wsp.holding_limit, linked);
        if (!opened.ok())
            return opened.error();
        world.wallet_keys[wsp.key] = opened.value();
        if (wsp.balance > 0) {
            auto minted = world.ledger.genesis_mint(
                opened.value(), wsp.balance, world.rail.backing_account());
            if (!minted.ok())
                return minted.error();
        }
    }

    for (const auto& fs : ws.fps_members) {
        auto reg = world.rail.register_fps_participant(fs.participant, fs.sort_code,
                                                       fs.mode, fs.sponsor);
        if (!reg.ok())
            return reg.error();
    }
    world.rail.set_scheme_open(ws.toggles.rtgs_open);

    world.alias_host = ws.toggles.alias_directory_host;
    for (const auto& as : ws.aliases) {
        if (!world.wallet_keys.count(as.wallet_key))
            return Err::ConfigError;
        AliasEntry entry;
        entry.alias = as.alias;
        entry.wallet = world.wallet_keys[as.wallet_key];
        entry.pip = as.pip;
        const auto& owner = world.ledger.wallet(entry.wallet).owner;
        entry.cop_payload = {
            PersonalDatum{DatumKind::Name, owner, world.display(owner)},
            PersonalDatum{DatumKind::AccountDetails, owner, entry.wallet}};
        world.alias_directory[as.alias] = entry;
    }

    for (const auto& part : world.participants) {
        if (!part.intermediary)
            continue;
        world.init_cbdc_position[part.name] = world.cbdc_position(part.name);
        world.init_cbm_position[part.name] = world.cbm_position(part.name);
    }

    world.genesis_totals = world.totals();
    world.drain_journals();
    return &world;
}

// ---------------------------------------------------------------------------

WorldSpec standard_world_spec() {
    WorldSpec w;
    w.name = "standard";
    w.seed = 7;

    auto part = [&](const char* name, Role role, const char* display,
                    bool intermediary = false) {
        ParticipantSpec p;
        p.name = name;
        p.role = role;
        p.display_name = display;
        p.intermediary = intermediary;
        w.participants.push_back(p);
    };

    part("boe-cbdc", Role::CentralBankCbdcSystem, "Digital Pound Core");
    part("boe-rtgs", Role::CentralBankRtgs, "RTGS Service");
    part("fps", Role::FpsScheme, "Faster Payment Scheme");
    part("directory", Role::AliasService, "Alias Directory");
    part("overlay-tsp", Role::Tsp, "Overlay Services Ltd");
    part("alex", Role::User, "Alex Murray");
    part("jamie", Role::User, "Jamie Murray");
    part("northbank", Role::CommercialBank, "Northbank plc");
    part("northbank-pip", Role::Pip, "Northbank Digital Money", true);
    part("pip-east", Role::Pip, "Eastside Wallets", true);
    part("pip-east-bank", Role::CommercialBank, "Eastside Partner Bank", true);
    part("westco-bank", Role::CommercialBank, "Westco Bank");
    part("clearhouse", Role::Fmi, "Clearhouse Markets", true);
    part("eps", Role::EnhancedPaymentSystem, "Enhanced Payment System");
    part("priya", Role::User, "Priya Shah");
    part("pip-south", Role::Pip, "Southgate Wallets", true);
    part("pip-south-bank", Role::CommercialBank, "Southgate Partner Bank", true);
    part("bloom", Role::User, "Bloom Home Goods");
    part("bloom-bank", Role::CommercialBank, "Merchant Bank plc");
    part("acq", Role::Acquirer, "Acme Acquiring");
    part("acq-inst-pip", Role::Pip, "Acme Partner Wallets", true);
    part("acq-inst-bank", Role::CommercialBank, "Acme Partner Bank", true);
    part("courier", Role::DeliveryAgent, "Swift Couriers");

    auto settle = [&](const char* key, const char* owner, Pence balance) {
        SettlementSpec s;
        s.key = key;
        s.owner = owner;
        s.balance = balance;
        w.settlements.push_back(s);
    };
    settle("backing", "boe-cbdc", 0); // sized to issuance by the builder
    settle("northbank.settle", "northbank", 100'000'000);
    settle("pip-east-bank.settle", "pip-east-bank", 100'000'000);
    settle("westco-bank.settle", "westco-bank", 100'000'000);
    settle("clearhouse.settle", "clearhouse", 100'000'000);
    settle("pip-south-bank.settle", "pip-south-bank", 100'000'000);
    settle("bloom-bank.settle", "bloom-bank", 100'000'000);
    settle("acq-inst-bank.settle", "acq-inst-bank", 100'000'000);

    auto book = [&](const char* key, const char* host, const char* owner,
                    Pence balance) {
        BookSpec b;
        b.key = key;
        b.host = host;
        b.owner = owner;
        b.balance = balance;
        w.books.push_back(b);
    };
    book("alex.acct", "northbank", "alex", 100'000);
    book("northbank.internal", "northbank", "northbank", 50'000'000);
    book("pip-east.sponsor-acct", "westco-bank", "pip-east", 0);
    book("pip-east-bank.internal", "pip-east-bank", "pip-east-bank", 50'000'000);
    book("jamie.linked", "northbank", "jamie", 0);
    book("clearhouse.funds", "clearhouse", "clearhouse", 50'000'000);
    book("priya.linked", "pip-south-bank", "priya", 0);
    book("pip-south-bank.internal", "pip-south-bank", "pip-south-bank", 50'000'000);
    book("bloom.acct", "bloom-bank", "bloom", 0);
    book("acq-inst-bank.internal", "acq-inst-bank", "acq-inst-bank", 50'000'000);

    auto wallet = [&](const char* key, const char* owner, const char* pip,
                      WalletKind kind, std::optional<Pence> limit,
                      const char* linked, Pence balance) {
        WalletSpec ws;
        ws.key = key;
        ws.owner = owner;
        ws.pip = pip;
        ws.kind = kind;
        ws.holding_limit = limit;
        ws.linked_account_key = linked;
        ws.balance = balance;
        w.wallets.push_back(ws);
    };
    wallet("jamie.wallet", "jamie", "pip-east", WalletKind::User, 2'000'000,
           "jamie.linked", 100'000);
    wallet("priya.wallet", "priya", "pip-south", WalletKind::User, 2'000'000,
           "priya.linked", 1'000'000);
    wallet("northbank-pip.wallet", "northbank-pip", "northbank-pip",
           WalletKind::Technical, std::nullopt, "", 10'000'000);
    wallet("pip-east.wallet", "pip-east", "pip-east", WalletKind::Technical,
           std::nullopt, "", 10'000'000);
    wallet("clearhouse.wallet", "clearhouse", "clearhouse", WalletKind::Technical,
           std::nullopt, "", 10'000'000);
    wallet("pip-south.wallet", "pip-south", "pip-south", WalletKind::Technical,
           std::nullopt, "", 10'000'000);
    wallet("acq-inst-pip.wallet", "acq-inst-pip", "acq-inst-pip",
           WalletKind::Technical, std::nullopt, "", 10'000'000);
    w.backing_key = "backing";

    auto fps = [&](const char* participant, const char* sort, FpsMode mode,
                   const char* sponsor = "") {
        FpsSpec f;
        f.participant = participant;
        f.sort_code = sort;
        f.mode = mode;
        f.sponsor = sponsor;
        w.fps_members.push_back(f);
    };
    fps("boe-cbdc", "04-00-01", FpsMode::Dcsp);
    fps("northbank", "20-10-01", FpsMode::Dcsp);
    fps("pip-east-bank", "20-10-02", FpsMode::Dcsp);
    fps("westco-bank", "20-10-03", FpsMode::Dcsp);
    fps("clearhouse", "20-10-04", FpsMode::Dcsp);
    fps("pip-south-bank", "20-10-05", FpsMode::Dcsp);
    fps("bloom-bank", "20-10-06", FpsMode::Dcsp);
    fps("acq-inst-bank", "20-10-07", FpsMode::Dcsp);
    fps("pip-east", "20-20-01", FpsMode::Dcnsp, "westco-bank");

    auto alias = [&](const char* a, const char* wallet_key, const char* pip) {
        AliasSpec as;
        as.alias = a;
        as.wallet_key = wallet_key;
        as.pip = pip;
        w.aliases.push_back(as);
    };
    alias("+44-7700-9001", "jamie.wallet", "pip-east");
    alias("+44-7700-9002", "priya.wallet", "pip-south");

    w.wiring["central_bank"] = "boe-cbdc";
    w.wiring["rtgs"] = "boe-rtgs";
    w.wiring["fps_scheme"] = "fps";
    w.wiring["alias_service"] = "directory";
    w.wiring["overlay_tsp"] = "overlay-tsp";
    w.wiring["u1.payer"] = "alex";
    w.wiring["u1.payee"] = "jamie";
    w.wiring["u1.payer_bank"] = "northbank";
    w.wiring["u1.payer_bank_pip"] = "northbank-pip";
    w.wiring["u1.payee_pip"] = "pip-east";
    w.wiring["u1.payee_pip_bank"] = "pip-east-bank";
    w.wiring["u1.sponsor_bank"] = "westco-bank";
    w.wiring["fmi"] = "clearhouse";
    w.wiring["eps"] = "eps";
    w.wiring["consumer"] = "priya";
    w.wiring["consumer_pip"] = "pip-south";
    w.wiring["consumer_pip_bank"] = "pip-south-bank";
    w.wiring["merchant"] = "bloom";
    w.wiring["merchant_bank"] = "bloom-bank";
    w.wiring["acquirer"] = "acq";
    w.wiring["acquirer_pip"] = "acq-inst-pip";
    w.wiring["acquirer_bank"] = "acq-inst-bank";
    w.wiring["delivery_agent"] = "courier";

    w.toggles.alias_directory_host = "directory";
    return w;
}

} // namespace dpound
