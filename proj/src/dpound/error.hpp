#pragma once

#include <cassert>
#include <optional>
#include <string>
#include <utility>

namespace dpound {

enum class Err {
    None = 0,
    // arithmetic
    Overflow,
    Underflow,
    ZeroAmount,
    // core ledger
    UnknownWallet,
    TechnicalWithLimit,
    WrongPip,
    AlreadyDecided,
    HoldingLimitExceeded,
    InsufficientAvailable,
    LockNotActive,
    NotAuthorised,
    // rail
    UnknownAccount,
    UnknownDestination,
    InsufficientFunds,
    DuplicateInstruction,
    SponsorNotDcsp,
    NotFpsParticipant,
    SchemeClosed,
    InsufficientSettlementFunds,
    EmptyBatch,
    CoreDebitFailed,
    // privacy
    UnknownRecipientKey,
    NotRecipient,
    // participants
    UnknownAlias,
    NotRegistered,
    ConsumerRejected,
    ComplianceFailed,
    PipTimeout,
    RtpExpired,
    BeneficiaryMismatch,
    DeliveryFailed,
    LockExpired,
    // engine
    BindingMissing,
    IncompatibleBindings,
    ScenarioDeadlock,
    TickBudgetExhausted,
    TraceMismatch,
    ConfigError,
    IoError,
};

const char* err_name(Err e);

// Minimal value-or-error carrier for domain operations. Domain failures are
// expected outcomes here, not exceptional states.
template <typename T>
class Result {
public:
    Result(T value) : value_(std::move(value)), err_(Err::None) {}
    Result(Err e) : err_(e) { assert(e != Err::None); }

    bool ok() const { return err_ == Err::None; }
    explicit operator bool() const { return ok(); }
    Err error() const { return err_; }

    const T& value() const {
        assert(ok());
        return *value_;
    }
    T& value() {
        assert(ok());
        return *value_;
    }

private:
    std::optional<T> value_;
    Err err_;
};

// Result for operations with no payload.
class Status {
public:
    Status() : err_(Err::None) {}
    Status(Err e) : err_(e) {}
    static Status ok_status() { return Status(); }

    bool ok() const { return err_ == Err::None; }
    explicit operator bool() const { return ok(); }
    Err error() const { return err_; }

private:
    Err err_;
};

} // namespace dpound
