#pragma once

#include "dpound/error.hpp"
#include "dpound/ids.hpp"
#include "dpound/money.hpp"
#include "dpound/personal_data.hpp"
#include "dpound/roles.hpp"

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace dpound {

using Tick = std::uint64_t;

// Capability slot a message belongs to. Exposure verdicts are attributed to
// the design option bound to the message's slot in the run under evaluation.
enum class Stage {
    None,
    U1S1, // confirmation of payee
    U1S2, // bank-money to digital-pound settlement
    U2S1, // request to pay
    U2S2, // digital-pound to bank-money settlement
    U3S1, // request to lock
    U3S2, // lock placement and confirmation
    U3S3, // release and pay
};

const char* stage_name(Stage s);

enum class MsgKind {
    // onboarding / directory
    KeyExchange,
    CopDataFeed,
    // initiation and confirmation of payee
    PayInitiate,
    AliasLookupRequest,
    AliasLookupResponse,
    DcrRegisterRequest,
    DcrRegisterResponse,
    CopRequest,
    CopResponse,
    CopResultNotice,
    PayAuthorise,
    // rail and core funding legs
    FpsInstruction,
    FpsCreditNotice,
    FpsReturn,
    InteropFundingNotice,
    PaymentInstruction,
    MintInstruction,
    CreditConfirmationRequest,
    CreditConfirmationResponse,
    ComplianceDataRequest,
    ComplianceDataResponse,
    ConfidentialDataRequest,
    ConfidentialDataResponse,
    CreditNotice,
    PaymentCompleted,
    InteropCompleted,
    PaymentStatusNotice,
    WalletCreditNotice,
    EpsInstruction,
    EpsCompleted,
    // commerce
    OrderRequest,
    PaymentRequest,
    RtpRequest,
    RtpResponse,
    AuthorisePrompt,
    AuthoriseDecision,
    PayoutInstruction,
    CreditInstruction,
    MerchantCreditNotice,
    SettlementCompleted,
    OrderConfirmed,
    // locks and delivery
    RtlRequest,
    LockInstruction,
    LockConfirmation,
    CancelLockInstruction,
    LockCancelled,
    UnlockNotice,
    ReleaseRequest,
    ReleasePrompt,
    ReleaseApproval,
    ReleaseInstruction,
    ReleaseCompleted,
    DispatchNotice,
    DeliveryArrival,
    DeliveryResult,
    HandoverApproval,
    ProductHandover,
    OrderCancelled,
};

const char* msg_kind_name(MsgKind k);

// Content addressed to exactly one recipient; other handlers can route the
// section but cannot read it. Stands in for recipient-key encryption.
struct SealedSection {
    ParticipantId recipient;
    PersonalData payload;
    std::map<std::string, std::string> refs; // opaque ids usable only after opening
};

struct Envelope {
    MsgId id;
    FlowId flow;
    Stage stage = Stage::None;
    MsgKind kind = MsgKind::KeyExchange;
    ParticipantId sender;
    Role sender_role = Role::User;
    ParticipantId receiver;
    Role receiver_role = Role::User;
    Pence amount = 0;
    std::map<std::string, std::string> refs; // routing metadata, opaque ids
    PersonalData plain;                      // readable by every handler
    std::vector<SealedSection> sealed;
};

// Who may be sealed to. Wraps the key-establishment ceremony participants go
// through at onboarding; entry count and seal/open counts feed the
// key-management cost metric.
class KeyDirectory {
public:
    void register_participant(const ParticipantId& p);
    void revoke(const ParticipantId& p);
    bool has(const ParticipantId& p) const;

    Result<SealedSection> seal(const ParticipantId& author,
                               const ParticipantId& recipient,
                               PersonalData payload,
                               std::map<std::string, std::string> refs = {});

    std::size_t entry_count() const { return registered_.size(); }
    std::uint64_t seal_ops() const { return seal_ops_; }
    std::uint64_t open_ops() const { return open_ops_; }
    void count_open() { ++open_ops_; }

private:
    std::set<ParticipantId> registered_;
    std::uint64_t seal_ops_ = 0;
    std::uint64_t open_ops_ = 0;
};

enum class Channel {
    PlaintextField,
    OpenedSection,
};

const char* channel_name(Channel c);

struct ExposureRow {
    ParticipantId participant;
    Role role;
    DatumKind kind;
    ParticipantId subject;
    MsgId message;
    Channel channel;

    friend bool operator<(const ExposureRow& a, const ExposureRow& b) {
        if (a.participant != b.participant) return a.participant < b.participant;
        if (a.role != b.role) return a.role < b.role;
        if (a.kind != b.kind) return a.kind < b.kind;
        if (a.subject != b.subject) return a.subject < b.subject;
        if (a.message != b.message) return a.message < b.message;
        return a.channel < b.channel;
    }
};

struct OpenEvent {
    MsgId message;
    std::size_t section;
    ParticipantId opener;
};

// Which component ever held which datum in the clear, and over what channel.
// Rows deduplicate; the log also keeps the raw open events so an independent
// scanner can rebuild the rows from the message record.
class ExposureLog {
public:
    void record_plain(const Envelope& env, const ParticipantId& who, Role role);
    void record_open(const Envelope& env, std::size_t section,
                     const ParticipantId& who, Role role);

    bool exposed(const ParticipantId& who, DatumKind kind) const;
    bool exposed_role(Role role, DatumKind kind) const;

    const std::set<ExposureRow>& rows() const { return rows_; }
    const std::vector<OpenEvent>& opens() const { return opens_; }

    std::string render() const; // component_role|datum_kind|message_id|channel

private:
    std::set<ExposureRow> rows_;
    std::vector<OpenEvent> opens_;
};

// Opens a sealed section for `opener`. Only the addressed recipient may read;
// anyone else gets NotRecipient and no exposure row is added. Reopening is
// idempotent at the report level (rows deduplicate).
Result<PersonalData> open_section(KeyDirectory& directory, ExposureLog& log,
                                  const Envelope& env, std::size_t section,
                                  const ParticipantId& opener, Role opener_role);

// Rebuilds the exposure row set from first principles: walk every delivered
// message, mark sender and receiver for each plaintext datum, and mark openers
// recorded in the open-event log. Used to cross-check ExposureLog.
std::set<ExposureRow> brute_force_exposure(
    const std::vector<Envelope>& delivered,
    const std::vector<OpenEvent>& opens,
    const std::map<ParticipantId, Role>& roles);

} // namespace dpound
