#include "dpound/ids.hpp"

#include <cstdio>

namespace dpound {

namespace {

const char* prefix_for(IdKind kind) {
    switch (kind) {
        case IdKind::Wallet: return "W";
        case IdKind::Account: return "ACC";
        case IdKind::Lock: return "LCK";
        case IdKind::Pending: return "PND";
        case IdKind::Message: return "MSG";
        case IdKind::Instruction: return "INS";
        case IdKind::Batch: return "BAT";
        case IdKind::Flow: return "FLW";
        case IdKind::Escrow: return "ESC";
        case IdKind::Registration: return "REG";
    }
    return "ID";
}

} // namespace

std::string IdSequencer::next(IdKind kind) {
    std::uint64_t n = ++counters_[kind];
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s-%04llu", prefix_for(kind),
                  static_cast<unsigned long long>(n));
    return buf;
}

} // namespace dpound
