#include "dpound/envelope.hpp"

#include <sstream>

namespace dpound {

const char* stage_name(Stage s) {
    switch (s) {
        case Stage::None: return "none";
        case Stage::U1S1: return "u1.s1";
        case Stage::U1S2: return "u1.s2";
        case Stage::U2S1: return "u2.s1";
        case Stage::U2S2: return "u2.s2";
        case Stage::U3S1: return "u3.s1";
        case Stage::U3S2: return "u3.s2";
        case Stage::U3S3: return "u3.s3";
    }
    return "none";
}

const char* msg_kind_name(MsgKind k) {
    switch (k) {
        case MsgKind::KeyExchange: return "KeyExchange";
        case MsgKind::CopDataFeed: return "CopDataFeed";
        case MsgKind::PayInitiate: return "PayInitiate";
        case MsgKind::AliasLookupRequest: return "AliasLookupRequest";
        case MsgKind::AliasLookupResponse: return "AliasLookupResponse";
        case MsgKind::DcrRegisterRequest: return "DcrRegisterRequest";
        case MsgKind::DcrRegisterResponse: return "DcrRegisterResponse";
        case MsgKind::CopRequest: return "CopRequest";
        case MsgKind::CopResponse: return "CopResponse";
        case MsgKind::CopResultNotice: return "CopResultNotice";
        case MsgKind::PayAuthorise: return "PayAuthorise";
        case MsgKind::FpsInstruction: return "FpsInstruction";
        case MsgKind::FpsCreditNotice: return "FpsCreditNotice";
        case MsgKind::FpsReturn: return "FpsReturn";
        case MsgKind::InteropFundingNotice: return "InteropFundingNotice";
        case MsgKind::PaymentInstruction: return "PaymentInstruction";
        case MsgKind::MintInstruction: return "MintInstruction";
        case MsgKind::CreditConfirmationRequest: return "CreditConfirmationRequest";
        case MsgKind::CreditConfirmationResponse: return "CreditConfirmationResponse";
        case MsgKind::ComplianceDataRequest: return "ComplianceDataRequest";
        case MsgKind::ComplianceDataResponse: return "ComplianceDataResponse";
        case MsgKind::ConfidentialDataRequest: return "ConfidentialDataRequest";
        case MsgKind::ConfidentialDataResponse: return "ConfidentialDataResponse";
        case MsgKind::CreditNotice: return "CreditNotice";
        case MsgKind::PaymentCompleted: return "PaymentCompleted";
        case MsgKind::InteropCompleted: return "InteropCompleted";
        case MsgKind::PaymentStatusNotice: return "PaymentStatusNotice";
        case MsgKind::WalletCreditNotice: return "WalletCreditNotice";
        case MsgKind::EpsInstruction: return "EpsInstruction";
        case MsgKind::EpsCompleted: return "EpsCompleted";
        case MsgKind::OrderRequest: return "OrderRequest";
        case MsgKind::PaymentRequest: return "PaymentRequest";
        case MsgKind::RtpRequest: return "RtpRequest";
        case MsgKind::RtpResponse: return "RtpResponse";
        case MsgKind::AuthorisePrompt: return "AuthorisePrompt";
        case MsgKind::AuthoriseDecision: return "AuthoriseDecision";
        case MsgKind::PayoutInstruction: return "PayoutInstruction";
        case MsgKind::CreditInstruction: return "CreditInstruction";
        case MsgKind::MerchantCreditNotice: return "MerchantCreditNotice";
        case MsgKind::SettlementCompleted: return "SettlementCompleted";
        case MsgKind::OrderConfirmed: return "OrderConfirmed";
        case MsgKind::RtlRequest: return "RtlRequest";
        case MsgKind::LockInstruction: return "LockInstruction";
        case MsgKind::LockConfirmation: return "LockConfirmation";
        case MsgKind::CancelLockInstruction: return "CancelLockInstruction";
        case MsgKind::LockCancelled: return "LockCancelled";
        case MsgKind::UnlockNotice: return "UnlockNotice";
        case MsgKind::ReleaseRequest: return "ReleaseRequest";
        case MsgKind::ReleasePrompt: return "ReleasePrompt";
        case MsgKind::ReleaseApproval: return "ReleaseApproval";
        case MsgKind::ReleaseInstruction: return "ReleaseInstruction";
        case MsgKind::ReleaseCompleted: return "ReleaseCompleted";
        case MsgKind::DispatchNotice: return "DispatchNotice";
        case MsgKind::DeliveryArrival: return "DeliveryArrival";
        case MsgKind::DeliveryResult: return "DeliveryResult";
        case MsgKind::HandoverApproval: return "HandoverApproval";
        case MsgKind::ProductHandover: return "ProductHandover";
        case MsgKind::OrderCancelled: return "OrderCancelled";
    }
    return "Unknown";
}

const char* channel_name(Channel c) {
    switch (c) {
        case Channel::PlaintextField: return "PlaintextField";
        case Channel::OpenedSection: return "OpenedSection";
    }
    return "Unknown";
}

void KeyDirectory::register_participant(const ParticipantId& p) {
    registered_.insert(p);
}

void KeyDirectory::revoke(const ParticipantId& p) { registered_.erase(p); }

bool KeyDirectory::has(const ParticipantId& p) const {
    return registered_.count(p) != 0;
}

Result<SealedSection> KeyDirectory::seal(const ParticipantId& author,
                                         const ParticipantId& recipient,
                                         PersonalData payload,
                                         std::map<std::string, std::string> refs) {
    if (!has(author) || !has(recipient)) return Err::UnknownRecipientKey;
    ++seal_ops_;
    SealedSection s;
    s.recipient = recipient;
    s.payload = std::move(payload);
    s.refs = std::move(refs);
    return s;
}

void ExposureLog::record_plain(const Envelope& env, const ParticipantId& who,
                               Role role) {
    for (const PersonalDatum& d : env.plain) {
        rows_.insert(ExposureRow{who, role, d.kind, d.subject, env.id,
                                 Channel::PlaintextField});
    }
}

void ExposureLog::record_open(const Envelope& env, std::size_t section,
                              const ParticipantId& who, Role role) {
    opens_.push_back(OpenEvent{env.id, section, who});
    for (const PersonalDatum& d : env.sealed[section].payload) {
        rows_.insert(ExposureRow{who, role, d.kind, d.subject, env.id,
                                 Channel::OpenedSection});
    }
}

bool ExposureLog::exposed(const ParticipantId& who, DatumKind kind) const {
    for (const ExposureRow& r : rows_) {
        if (r.participant == who && r.kind == kind) return true;
    }
    return false;
}

bool ExposureLog::exposed_role(Role role, DatumKind kind) const {
    for (const ExposureRow& r : rows_) {
        if (r.role == role && r.kind == kind) return true;
    }
    return false;
}

std::string ExposureLog::render() const {
    std::ostringstream out;
    for (const ExposureRow& r : rows_) {
        out << role_name(r.role) << '|' << datum_kind_name(r.kind) << '|'
            << r.message << '|' << channel_name(r.channel) << '\n';
    }
    return out.str();
}

Result<PersonalData> open_section(KeyDirectory& directory, ExposureLog& log,
                                  const Envelope& env, std::size_t section,
                                  const ParticipantId& opener, Role opener_role) {
    if (section >= env.sealed.size()) return Err::NotRecipient;
    if (env.sealed[section].recipient != opener) return Err::NotRecipient;
    if (!directory.has(opener)) return Err::UnknownRecipientKey;
    directory.count_open();
    log.record_open(env, section, opener, opener_role);
    return env.sealed[section].payload;
}

std::set<ExposureRow> brute_force_exposure(
    const std::vector<Envelope>& delivered,
    const std::vector<OpenEvent>& opens,
    const std::map<ParticipantId, Role>& roles) {
    std::set<ExposureRow> rows;
    auto role_of = [&roles](const ParticipantId& p) {
        auto it = roles.find(p);
        return it == roles.end() ? Role::User : it->second;
    };
    for (const Envelope& env : delivered) {
        for (const PersonalDatum& d : env.plain) {
            rows.insert(ExposureRow{env.sender, role_of(env.sender), d.kind,
                                    d.subject, env.id, Channel::PlaintextField});
            rows.insert(ExposureRow{env.receiver, role_of(env.receiver), d.kind,
                                    d.subject, env.id, Channel::PlaintextField});
        }
    }
    for (const OpenEvent& ev : opens) {
        for (const Envelope& env : delivered) {
            if (env.id != ev.message) continue;
            if (ev.section >= env.sealed.size()) continue;
            for (const PersonalDatum& d : env.sealed[ev.section].payload) {
                rows.insert(ExposureRow{ev.opener, role_of(ev.opener), d.kind,
                                        d.subject, env.id,
                                        Channel::OpenedSection});
            }
        }
    }
    return rows;
}

} // namespace dpound
