#include "dpound/roles.hpp"

namespace dpound {

const char* role_name(Role r) {
    switch (r) {
        case Role::CentralBankCbdcSystem: return "CentralBankCbdcSystem";
        case Role::CentralBankRtgs: return "CentralBankRtgs";
        case Role::Pip: return "Pip";
        case Role::PipLite: return "PipLite";
        case Role::CommercialBank: return "CommercialBank";
        case Role::Acquirer: return "Acquirer";
        case Role::Tsp: return "Tsp";
        case Role::Fmi: return "Fmi";
        case Role::AliasService: return "AliasService";
        case Role::EnhancedPaymentSystem: return "EnhancedPaymentSystem";
        case Role::User: return "User";
        case Role::DeliveryAgent: return "DeliveryAgent";
        case Role::FpsScheme: return "FpsScheme";
    }
    return "Unknown";
}

std::optional<Role> role_from_name(const std::string& name) {
    static const Role all[] = {
        Role::CentralBankCbdcSystem, Role::CentralBankRtgs, Role::Pip,
        Role::PipLite, Role::CommercialBank, Role::Acquirer, Role::Tsp,
        Role::Fmi, Role::AliasService, Role::EnhancedPaymentSystem,
        Role::User, Role::DeliveryAgent, Role::FpsScheme,
    };
    for (Role r : all) {
        if (name == role_name(r)) return r;
    }
    return std::nullopt;
}

} // namespace dpound
