#pragma once

#include "dpound/ids.hpp"

#include <string>
#include <vector>

namespace dpound {

// Kinds of data that relate to an identified ecosystem user. PhoneAlias is
// the shared routing identifier; the others are identifying payment data.
enum class DatumKind {
    Name,
    PhoneAlias,
    AccountDetails,
    TransactionPurpose,
};

const char* datum_kind_name(DatumKind k);

struct PersonalDatum {
    DatumKind kind;
    ParticipantId subject; // whose data this is
    std::string value;

    friend bool operator<(const PersonalDatum& a, const PersonalDatum& b) {
        if (a.kind != b.kind) return a.kind < b.kind;
        if (a.subject != b.subject) return a.subject < b.subject;
        return a.value < b.value;
    }
    friend bool operator==(const PersonalDatum& a, const PersonalDatum& b) {
        return a.kind == b.kind && a.subject == b.subject && a.value == b.value;
    }
};

using PersonalData = std::vector<PersonalDatum>;

} // namespace dpound
