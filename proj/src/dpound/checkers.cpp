#include "dpound/checkers.hpp"

#include <cstdint>
#include <map>
#include <set>
#include <sstream>
#include <vector>

namespace dpound {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, sep))
        out.push_back(field);
    return out;
}

bool is_number(const std::string& s) {
    if (s.empty())
        return false;
    for (char c : s)
        if (c < '0' || c > '9')
            return false;
    return true;
}

} // namespace

CheckReport check_journal(const std::string& journal_text,
                          const std::string& backing_account) {
    CheckReport rep;
    std::istringstream in(journal_text);
    std::string line;

    std::map<std::uint64_t, std::int64_t> rtgs_net_by_tick;
    std::int64_t minted = 0, burned = 0, spilled = 0, genesis = 0;
    std::int64_t backing_in = 0;
    std::size_t n = 0;

    while (std::getline(in, line)) {
        ++n;
        if (line.empty() || line[0] == '#')
            continue;
        auto f = split(line, '|');
        if (f.size() != 5) {
            rep.ok = false;
            rep.detail = "line " + std::to_string(n) + ": expected 5 fields";
            return rep;
        }
        if (!is_number(f[0]) || !is_number(f[3])) {
            rep.ok = false;
            rep.detail = "line " + std::to_string(n) + ": bad tick or amount";
            return rep;
        }
        std::uint64_t tick = std::stoull(f[0]);
        std::int64_t amount = std::stoll(f[3]);
        const std::string& kind = f[1];
        const std::string& account = f[2];
        if (amount <= 0) {
            rep.ok = false;
            rep.detail = "line " + std::to_string(n) + ": non-positive amount";
            return rep;
        }
        if (kind == "rtgs.credit") {
            rtgs_net_by_tick[tick] += amount;
            if (account == backing_account)
                backing_in += amount;
        } else if (kind == "rtgs.debit") {
            rtgs_net_by_tick[tick] -= amount;
            if (account == backing_account)
                backing_in -= amount;
        } else if (kind == "core.mint") {
            minted += amount;
            if (tick == 0)
                genesis += amount;
        } else if (kind == "core.burn") {
            burned += amount;
        } else if (kind == "core.spill") {
            spilled += amount;
        }
    }

    for (const auto& [tick, net] : rtgs_net_by_tick) {
        if (net != 0) {
            rep.ok = false;
            rep.detail = "settlement legs do not balance at tick " +
                         std::to_string(tick) + " (net " +
                         std::to_string(net) + ")";
            return rep;
        }
    }

    std::int64_t issued_delta = (minted - genesis) - burned - spilled;
    if (issued_delta != backing_in) {
        rep.ok = false;
        rep.detail = "issuance " + std::to_string(issued_delta) +
                     " does not match net backing inflow " +
                     std::to_string(backing_in);
        return rep;
    }
    return rep;
}

CheckReport check_trace(const std::string& trace_text) {
    CheckReport rep;
    std::istringstream in(trace_text);
    std::string line;
    std::uint64_t last_tick = 0;
    std::set<std::string> seen_ids;
    std::size_t n = 0;
    bool in_header = true;

    while (std::getline(in, line)) {
        ++n;
        if (line.empty())
            continue;
        if (line[0] == '#') {
            if (!in_header) {
                rep.ok = false;
                rep.detail = "line " + std::to_string(n) +
                             ": header after body";
                return rep;
            }
            continue;
        }
        in_header = false;
        auto f = split(line, '|');
        if (f.size() != 6) {
            rep.ok = false;
            rep.detail = "line " + std::to_string(n) + ": expected 6 fields";
            return rep;
        }
        if (!is_number(f[0]) || !is_number(f[5])) {
            rep.ok = false;
            rep.detail = "line " + std::to_string(n) +
                         ": bad tick or section count";
            return rep;
        }
        std::uint64_t tick = std::stoull(f[0]);
        if (tick < last_tick) {
            rep.ok = false;
            rep.detail = "line " + std::to_string(n) + ": ticks went backwards";
            return rep;
        }
        last_tick = tick;
        if (!seen_ids.insert(f[1]).second) {
            rep.ok = false;
            rep.detail = "line " + std::to_string(n) +
                         ": duplicate message id " + f[1];
            return rep;
        }
    }
    return rep;
}

bool role_exposed(const std::string& exposure_text, const std::string& role) {
    std::istringstream in(exposure_text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#')
            continue;
        auto f = split(line, '|');
        if (f.size() < 2)
            continue;
        if (f[0] == role && f[1] != "PhoneAlias")
            return true;
    }
    return false;
}

std::string trace_edges(const std::string& trace_text) {
    std::istringstream in(trace_text);
    std::string line;
    std::set<std::string> seen;
    std::string out;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#')
            continue;
        auto f = split(line, '|');
        if (f.size() != 6)
            continue;
        std::string edge = f[2] + ">" + f[3] + ":" + f[4];
        if (seen.insert(edge).second) {
            out += edge;
            out += '\n';
        }
    }
    return out;
}

} // namespace dpound
