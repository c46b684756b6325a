#include "dpound/error.hpp"

namespace dpound {

const char* err_name(Err e) {
    switch (e) {
        case Err::None: return "None";
        case Err::Overflow: return "Overflow";
        case Err::Underflow: return "Underflow";
        case Err::ZeroAmount: return "ZeroAmount";
        case Err::UnknownWallet: return "UnknownWallet";
        case Err::TechnicalWithLimit: return "TechnicalWithLimit";
        case Err::WrongPip: return "WrongPip";
        case Err::AlreadyDecided: return "AlreadyDecided";
        case Err::HoldingLimitExceeded: return "HoldingLimitExceeded";
        case Err::InsufficientAvailable: return "InsufficientAvailable";
        case Err::LockNotActive: return "LockNotActive";
        case Err::NotAuthorised: return "NotAuthorised";
        case Err::UnknownAccount: return "UnknownAccount";
        case Err::UnknownDestination: return "UnknownDestination";
        case Err::InsufficientFunds: return "InsufficientFunds";
        case Err::DuplicateInstruction: return "DuplicateInstruction";
        case Err::SponsorNotDcsp: return "SponsorNotDcsp";
        case Err::NotFpsParticipant: return "NotFpsParticipant";
        case Err::SchemeClosed: return "SchemeClosed";
        case Err::InsufficientSettlementFunds: return "InsufficientSettlementFunds";
        case Err::EmptyBatch: return "EmptyBatch";
        case Err::CoreDebitFailed: return "CoreDebitFailed";
        case Err::UnknownRecipientKey: return "UnknownRecipientKey";
        case Err::NotRecipient: return "NotRecipient";
        case Err::UnknownAlias: return "UnknownAlias";
        case Err::NotRegistered: return "NotRegistered";
        case Err::ConsumerRejected: return "ConsumerRejected";
        case Err::ComplianceFailed: return "ComplianceFailed";
        case Err::PipTimeout: return "PipTimeout";
        case Err::RtpExpired: return "RtpExpired";
        case Err::BeneficiaryMismatch: return "BeneficiaryMismatch";
        case Err::DeliveryFailed: return "DeliveryFailed";
        case Err::LockExpired: return "LockExpired";
        case Err::BindingMissing: return "BindingMissing";
        case Err::IncompatibleBindings: return "IncompatibleBindings";
        case Err::ScenarioDeadlock: return "ScenarioDeadlock";
        case Err::TickBudgetExhausted: return "TickBudgetExhausted";
        case Err::TraceMismatch: return "TraceMismatch";
        case Err::ConfigError: return "ConfigError";
        case Err::IoError: return "IoError";
    }
    return "Unknown";
}

} // namespace dpound
