#include "dpound/personal_data.hpp"

namespace dpound {

const char* datum_kind_name(DatumKind k) {
    switch (k) {
        case DatumKind::Name: return "Name";
        case DatumKind::PhoneAlias: return "PhoneAlias";
        case DatumKind::AccountDetails: return "AccountDetails";
        case DatumKind::TransactionPurpose: return "TransactionPurpose";
    }
    return "Unknown";
}

} // namespace dpound
