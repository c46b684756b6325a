#pragma once

#include "dpound/config.hpp"
#include "dpound/core_ledger.hpp"
#include "dpound/envelope.hpp"
#include "dpound/error.hpp"
#include "dpound/ids.hpp"
#include "dpound/rail.hpp"
#include "dpound/roles.hpp"

#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace dpound {

struct Participant {
    ParticipantId name;
    Role role = Role::User;
    bool intermediary = false;
    std::string display_name;
};

struct DcrRegistration {
    RegistrationId id;
    ParticipantId client;
    ParticipantId provider; // whose API the client may call
    Tick granted = 0;
    Tick expires = 0;
};

// A funds lock kept on a PIP's own books; the core ledger only sees the
// aggregate through the minimum-available-balance field on later payments.
struct PipLock {
    LockId id;
    ParticipantId pip;
    WalletId wallet;
    Pence amount = 0;
    std::string beneficiary;
    Tick expiry = 0;
    LockState state = LockState::Active;
};

enum class EscrowState { Active, Released, Refunded };

struct EscrowRecord {
    EscrowId id;
    WalletId from_wallet;
    Pence amount = 0;
    std::string beneficiary;
    Tick expiry = 0;
    EscrowState state = EscrowState::Active;
};

struct AliasEntry {
    Alias alias;
    WalletId wallet;
    ParticipantId pip;
    PersonalData cop_payload; // populated only when the directory answers CoP
};

enum class FlowStatus { InFlight, Succeeded, Failed };

// How the bank-money leg of a flow moved, kept so a failed flow can unwind it.
struct RailLeg {
    enum class Kind { None, Fps, Book, EpsObligation } kind = Kind::None;
    AccountId source;
    AccountId credited;
    Pence amount = 0;
    BatchId batch; // deferred-settlement obligations only
};

// One end-to-end payment journey. A scenario normally drives a single flow;
// the concurrency suite drives two.
struct Flow {
    FlowId id;
    int use_case = 1;
    Pence amount = 0;
    FlowStatus status = FlowStatus::InFlight;
    Err failure = Err::None;

    ParticipantId payer_user;
    ParticipantId payee_user;
    AccountId payer_account;
    WalletId payee_wallet;
    WalletId consumer_wallet;
    AccountId merchant_account;

    std::string cop_name;
    bool cop_ok = false;

    PendingId pending;
    LockId core_lock;
    LockId pip_lock;
    EscrowId escrow;
    RailLeg funding;

    std::string order_ref;
    Tick rtp_sent = 0;
    bool product_dispatched = false;
    bool product_delivered = false;
    bool merchant_paid = false;
    bool release_requested = false;

    std::map<std::string, std::string> notes;
    std::vector<SealedSection> stash; // sections held for a later leg
};

struct WorldTotals {
    Pence wallets = 0;
    Pence suspense = 0;
    Pence pending_mint = 0;
    Pence settlement = 0;
    Pence books = 0;
    Pence global() const {
        return wallets + suspense + pending_mint + settlement + books;
    }
};

// Everything a run touches. Handlers in participants.cpp mutate this through
// the ledger/rail APIs and the send() helper; the engine drives delivery.
struct World {
    WorldSpec spec;
    ScenarioSpec scenario;

    IdSequencer ids;
    CoreLedger ledger{&ids};
    SettlementRail rail{&ids};
    KeyDirectory keydir;
    ExposureLog exposure;

    std::vector<Participant> participants; // creation order drives scheduling
    std::map<ParticipantId, std::size_t> participant_index;

    std::map<std::string, WalletId> wallet_keys;
    std::map<std::string, AccountId> account_keys;
    std::map<Alias, AliasEntry> alias_directory;
    ParticipantId alias_host;

    Tick now = 0;
    struct Queued {
        Envelope env;
        Tick sent = 0;
    };
    std::map<ParticipantId, std::deque<Queued>> queues;
    std::multimap<Tick, Envelope> scheduled; // deferred sends (user think time)
    std::vector<Envelope> delivered;
    std::vector<std::string> trace_lines;
    std::vector<std::string> journal_lines;
    std::size_t core_drained = 0;
    std::size_t rail_drained = 0;

    std::map<FlowId, Flow> flows;
    std::vector<DcrRegistration> dcr_registrations;
    std::map<LockId, PipLock> pip_locks;
    std::map<EscrowId, EscrowRecord> escrows;
    std::map<ParticipantId, bool> compliance_pass;
    std::map<Alias, AliasEntry> tsp_feed; // directory data fed to the overlay

    std::uint64_t messages_delivered = 0;
    Pence liquidity_peak = 0;
    std::map<ParticipantId, Pence> init_cbdc_position;
    std::map<ParticipantId, Pence> init_cbm_position;
    std::set<std::string> failure_codes; // error names observed by handlers
    WorldTotals genesis_totals;

    // --- helpers -----------------------------------------------------------
    const Participant& participant(const ParticipantId& p) const;
    Role role_of(const ParticipantId& p) const;
    ParticipantId wired(const std::string& function) const;
    WalletId wallet_key(const std::string& key) const;
    AccountId account_key(const std::string& key) const;
    int binding(const std::string& slot) const;

    const std::string& display(const ParticipantId& p) const {
        return participant(p).display_name;
    }

    MsgId send(const ParticipantId& sender, const ParticipantId& receiver,
               MsgKind kind, Stage stage, const FlowId& flow, Pence amount = 0,
               std::map<std::string, std::string> refs = {},
               PersonalData plain = {}, std::vector<SealedSection> sealed = {});

    // Same as send but the message enters the sender's queue at `when`.
    MsgId send_at(Tick when, const ParticipantId& sender,
                  const ParticipantId& receiver, MsgKind kind, Stage stage,
                  const FlowId& flow, Pence amount = 0,
                  std::map<std::string, std::string> refs = {},
                  PersonalData plain = {}, std::vector<SealedSection> sealed = {});

    Result<PersonalData> open_sealed(const Envelope& env, std::size_t section,
                                     const ParticipantId& opener);
    std::optional<std::size_t> find_section_for(const Envelope& env,
                                                const ParticipantId& recipient) const;

    SortCode sort_of(const ParticipantId& bank) const;

    void note_failure(Err e);
    void fail_flow(Flow& flow, Err e);

    Pence cbdc_position(const ParticipantId& p) const;
    Pence cbm_position(const ParticipantId& p) const;
    void sample_liquidity();

    WorldTotals totals() const;
    void drain_journals();
    void trace_message(const Envelope& env);

    bool dcr_valid(const ParticipantId& client, const ParticipantId& provider) const;
    void dcr_register(const ParticipantId& client, const ParticipantId& provider,
                      Tick granted);
    Pence active_pip_locks(const ParticipantId& pip, const WalletId& wallet) const;
};

// Builds the runtime world from a spec: participants, accounts, wallets with
// genesis balances, scheme memberships, alias directory and key directory.
Result<World*> build_world(World& world, const WorldSpec& spec,
                           const ScenarioSpec& scenario);

// The fully-populated reference world every scenario and the matrix run on.
WorldSpec standard_world_spec();

} // namespace dpound
