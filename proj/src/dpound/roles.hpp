#pragma once

#include <optional>
#include <string>

namespace dpound {

// Every participant in a world has exactly one role. The role decides which
// operations it may perform and how exposure is reported.
enum class Role {
    CentralBankCbdcSystem,
    CentralBankRtgs,
    Pip,
    PipLite,
    CommercialBank,
    Acquirer,
    Tsp,
    Fmi,
    AliasService,
    EnhancedPaymentSystem,
    User,
    DeliveryAgent,
    FpsScheme,
};

const char* role_name(Role r);
std::optional<Role> role_from_name(const std::string& name);

// True for roles allowed to hold and operate digital pound wallets on behalf
// of users (wallet management requires intermediary status).
inline bool can_manage_wallets(Role r) {
    return r == Role::Pip || r == Role::PipLite || r == Role::Fmi;
}

// PIP-lite participants get wallet and core-ledger API access but may not
// onboard users, so they can only hold their own technical wallets.
inline bool can_onboard_users(Role r) { return r == Role::Pip; }

} // namespace dpound
