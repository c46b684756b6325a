#include "dpound/config.hpp"

#include "dpound/world.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

namespace dpound {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::optional<Pence> parse_pence(const std::string& s) {
    if (s.empty()) return std::nullopt;
    Pence value = 0;
    for (char c : s) {
        if (c == '_') continue; // allow 1_000_000 style grouping
        if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
        if (value > (kMaxPence - (c - '0')) / 10) return std::nullopt;
        value = value * 10 + static_cast<Pence>(c - '0');
    }
    return value;
}

std::optional<bool> parse_bool(const std::string& s) {
    if (s == "true" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "no" || s == "off") return false;
    return std::nullopt;
}

} // namespace

std::optional<std::string> ConfigSection::get(const std::string& key) const {
    for (const auto& [k, v] : entries) {
        if (k == key) return v;
    }
    return std::nullopt;
}

std::string ConfigSection::get_or(const std::string& key,
                                  const std::string& fallback) const {
    auto v = get(key);
    return v ? *v : fallback;
}

const ConfigSection* ConfigFile::first(const std::string& name) const {
    for (const ConfigSection& s : sections) {
        if (s.name == name) return &s;
    }
    return nullptr;
}

std::vector<const ConfigSection*> ConfigFile::all(const std::string& name) const {
    std::vector<const ConfigSection*> out;
    for (const ConfigSection& s : sections) {
        if (s.name == name) out.push_back(&s);
    }
    return out;
}

Result<ConfigFile> parse_config_text(const std::string& text) {
    ConfigFile file;
    std::istringstream in(text);
    std::string raw;
    ConfigSection* current = nullptr;
    while (std::getline(in, raw)) {
        std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        if (line.front() == '[') {
            if (line.back() != ']') return Err::ConfigError;
            file.sections.push_back(ConfigSection{trim(line.substr(1, line.size() - 2)), {}});
            current = &file.sections.back();
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos || current == nullptr) return Err::ConfigError;
        current->entries.emplace_back(trim(line.substr(0, eq)),
                                      trim(line.substr(eq + 1)));
    }
    return file;
}

Result<ConfigFile> load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) return Err::IoError;
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

namespace {

Result<WalletKind> parse_wallet_kind(const std::string& s) {
    if (s == "user") return WalletKind::User;
    if (s == "technical") return WalletKind::Technical;
    return Err::ConfigError;
}

} // namespace

Result<WorldSpec> parse_world(const ConfigFile& file) {
    WorldSpec world;
    if (const ConfigSection* s = file.first("world")) {
        std::string base = s->get_or("base", "");
        if (base == "standard") {
            world = standard_world_spec();
        } else if (!base.empty()) {
            return Err::ConfigError;
        }
        world.name = s->get_or("name", world.name);
        if (auto seed = s->get("seed")) {
            auto v = parse_pence(*seed);
            if (!v) return Err::ConfigError;
            world.seed = *v;
        }
    }
    for (const ConfigSection* s : file.all("participant")) {
        ParticipantSpec p;
        auto name = s->get("name");
        auto role = s->get("role");
        if (!name || !role) return Err::ConfigError;
        auto r = role_from_name(*role);
        if (!r) return Err::ConfigError;
        p.name = *name;
        p.role = *r;
        p.display_name = s->get_or("display", *name);
        if (auto i = s->get("intermediary")) {
            auto b = parse_bool(*i);
            if (!b) return Err::ConfigError;
            p.intermediary = *b;
        }
        world.participants.push_back(p);
    }
    for (const ConfigSection* s : file.all("settlement_account")) {
        SettlementSpec a;
        auto key = s->get("key");
        auto owner = s->get("owner");
        if (!key || !owner) return Err::ConfigError;
        a.key = *key;
        a.owner = *owner;
        auto bal = parse_pence(s->get_or("balance", "0"));
        if (!bal) return Err::ConfigError;
        a.balance = *bal;
        world.settlements.push_back(a);
    }
    for (const ConfigSection* s : file.all("book_account")) {
        BookSpec a;
        auto key = s->get("key");
        auto host = s->get("host");
        auto owner = s->get("owner");
        if (!key || !host || !owner) return Err::ConfigError;
        a.key = *key;
        a.host = *host;
        a.owner = *owner;
        auto bal = parse_pence(s->get_or("balance", "0"));
        if (!bal) return Err::ConfigError;
        a.balance = *bal;
        world.books.push_back(a);
    }
    for (const ConfigSection* s : file.all("wallet")) {
        WalletSpec w;
        auto key = s->get("key");
        auto owner = s->get("owner");
        auto pip = s->get("pip");
        if (!key || !owner || !pip) return Err::ConfigError;
        w.key = *key;
        w.owner = *owner;
        w.pip = *pip;
        auto kind = parse_wallet_kind(s->get_or("kind", "user"));
        if (!kind) return Err::ConfigError;
        w.kind = kind.value();
        if (auto limit = s->get("holding_limit")) {
            auto v = parse_pence(*limit);
            if (!v) return Err::ConfigError;
            w.holding_limit = *v;
        }
        w.linked_account_key = s->get_or("linked_account", "");
        auto bal = parse_pence(s->get_or("balance", "0"));
        if (!bal) return Err::ConfigError;
        w.balance = *bal;
        world.wallets.push_back(w);
    }
    for (const ConfigSection* s : file.all("fps_member")) {
        FpsSpec f;
        auto participant = s->get("participant");
        auto sort = s->get("sort_code");
        if (!participant || !sort) return Err::ConfigError;
        f.participant = *participant;
        f.sort_code = *sort;
        std::string mode = s->get_or("mode", "dcsp");
        if (mode == "dcsp") {
            f.mode = FpsMode::Dcsp;
        } else if (mode == "dcnsp") {
            f.mode = FpsMode::Dcnsp;
            f.sponsor = s->get_or("sponsor", "");
            if (f.sponsor.empty()) return Err::ConfigError;
        } else {
            return Err::ConfigError;
        }
        world.fps_members.push_back(f);
    }
    for (const ConfigSection* s : file.all("alias")) {
        AliasSpec a;
        auto alias = s->get("alias");
        auto wallet = s->get("wallet");
        auto pip = s->get("pip");
        if (!alias || !wallet || !pip) return Err::ConfigError;
        a.alias = *alias;
        a.wallet_key = *wallet;
        a.pip = *pip;
        world.aliases.push_back(a);
    }
    if (const ConfigSection* s = file.first("backing")) {
        world.backing_key = s->get_or("settlement_account", "");
    }
    if (const ConfigSection* s = file.first("wiring")) {
        for (const auto& [k, v] : s->entries) world.wiring[k] = v;
    }
    if (const ConfigSection* s = file.first("bindings")) {
        for (const auto& [k, v] : s->entries) {
            if (v.size() < 2 || v[0] != 'd') return Err::ConfigError;
            auto n = parse_pence(v.substr(1));
            if (!n) return Err::ConfigError;
            world.bindings[k] = static_cast<int>(*n);
        }
    }
    if (const ConfigSection* s = file.first("toggles")) {
        Toggles& t = world.toggles;
        auto tick = [&](const char* key, Tick& out) -> bool {
            if (auto v = s->get(key)) {
                auto n = parse_pence(*v);
                if (!n) return false;
                out = *n;
            }
            return true;
        };
        if (!tick("batch_window", t.batch_window)) return Err::ConfigError;
        if (!tick("pending_timeout", t.pending_timeout)) return Err::ConfigError;
        if (!tick("tick_budget", t.tick_budget)) return Err::ConfigError;
        if (!tick("dcr_ttl", t.dcr_ttl)) return Err::ConfigError;
        if (!tick("rtp_expiry", t.rtp_expiry)) return Err::ConfigError;
        std::string mode = s->get_or("holding_limit_mode", "waterfall");
        if (mode == "waterfall") {
            t.holding_mode = HoldingLimitMode::Waterfall;
        } else if (mode == "reject") {
            t.holding_mode = HoldingLimitMode::Reject;
        } else {
            return Err::ConfigError;
        }
        if (auto v = s->get("fmi_pull_mode")) {
            auto b = parse_bool(*v);
            if (!b) return Err::ConfigError;
            t.fmi_pull_mode = *b;
        }
        if (auto v = s->get("rtgs_open")) {
            auto b = parse_bool(*v);
            if (!b) return Err::ConfigError;
            t.rtgs_open = *b;
        }
        t.alias_directory_host = s->get_or("alias_directory_host", "");
    }
    return world;
}

Result<ScenarioSpec> parse_scenario(const ConfigFile& file) {
    ScenarioSpec sc;
    const ConfigSection* s = file.first("scenario");
    if (s == nullptr) return Err::ConfigError;
    sc.name = s->get_or("name", sc.name);
    auto uc = s->get("use_case");
    if (!uc) return Err::ConfigError;
    if (*uc == "u1") {
        sc.use_case = 1;
    } else if (*uc == "u2") {
        sc.use_case = 2;
    } else if (*uc == "u3") {
        sc.use_case = 3;
    } else {
        return Err::ConfigError;
    }
    auto pence = [&](const char* key, Pence& out) -> bool {
        if (auto v = s->get(key)) {
            auto n = parse_pence(*v);
            if (!n) return false;
            out = *n;
        }
        return true;
    };
    if (!pence("amount", sc.amount)) return Err::ConfigError;
    if (!pence("second_amount", sc.second_amount)) return Err::ConfigError;
    Pence tick_v = sc.initiate_tick;
    if (!pence("initiate_tick", tick_v)) return Err::ConfigError;
    sc.initiate_tick = tick_v;
    tick_v = sc.authorise_delay;
    if (!pence("authorise_delay", tick_v)) return Err::ConfigError;
    sc.authorise_delay = tick_v;
    tick_v = sc.lock_expiry_offset;
    if (!pence("lock_expiry_offset", tick_v)) return Err::ConfigError;
    sc.lock_expiry_offset = tick_v;

    auto authorise = [&](const char* key, Authorise& out) -> bool {
        if (auto v = s->get(key)) {
            if (*v == "approve") {
                out = Authorise::Approve;
            } else if (*v == "reject") {
                out = Authorise::Reject;
            } else {
                return false;
            }
        }
        return true;
    };
    if (!authorise("authorise", sc.authorise)) return Err::ConfigError;
    if (!authorise("release_authorise", sc.release_authorise)) return Err::ConfigError;
    if (auto v = s->get("pip_decision")) {
        if (*v == "approve") {
            sc.pip_decision = PipDecision::Approve;
        } else if (*v == "reject") {
            sc.pip_decision = PipDecision::Reject;
        } else if (*v == "timeout") {
            sc.pip_decision = PipDecision::Timeout;
        } else {
            return Err::ConfigError;
        }
    }
    if (auto v = s->get("delivery")) {
        if (*v == "success") {
            sc.delivery = DeliveryOutcome::Success;
        } else if (*v == "failed") {
            sc.delivery = DeliveryOutcome::Failed;
        } else {
            return Err::ConfigError;
        }
    }
    auto boolean = [&](const char* key, bool& out) -> bool {
        if (auto v = s->get(key)) {
            auto b = parse_bool(*v);
            if (!b) return false;
            out = *b;
        }
        return true;
    };
    if (!boolean("alias_valid", sc.alias_valid)) return Err::ConfigError;
    if (!boolean("scheme_closed", sc.scheme_closed)) return Err::ConfigError;
    if (!boolean("wait_for_lock_expiry", sc.wait_for_lock_expiry)) return Err::ConfigError;
    if (!boolean("dcr_expired", sc.dcr_expired)) return Err::ConfigError;
    if (!boolean("stall_consumer", sc.stall_consumer)) return Err::ConfigError;
    if (!boolean("expect_success", sc.expect_success)) return Err::ConfigError;
    sc.compliance_fail_at = s->get_or("compliance_fail_at", "");
    sc.expected_error = s->get_or("expected_error", "");

    for (const ConfigSection* o : file.all("override")) {
        auto wallet = o->get("wallet");
        if (!wallet) return Err::ConfigError;
        if (auto v = o->get("balance")) {
            auto n = parse_pence(*v);
            if (!n) return Err::ConfigError;
            sc.balance_overrides[*wallet] = *n;
        }
        if (auto v = o->get("holding_limit")) {
            auto n = parse_pence(*v);
            if (!n) return Err::ConfigError;
            sc.limit_overrides[*wallet] = *n;
        }
    }
    return sc;
}

Result<WorldSpec> load_world_file(const std::string& path) {
    auto file = load_config_file(path);
    if (!file) return file.error();
    return parse_world(file.value());
}

Result<ScenarioSpec> load_scenario_file(const std::string& path) {
    auto file = load_config_file(path);
    if (!file) return file.error();
    return parse_scenario(file.value());
}

std::vector<std::string> required_slots(int use_case) {
    switch (use_case) {
        case 1: return {"u1.s1", "u1.s2"};
        case 2: return {"u2.s1", "u2.s2"};
        case 3: return {"u3.s1", "u3.s2", "u3.s3", "u2.s2"};
        default: return {};
    }
}

Status validate_bindings(const WorldSpec& world, int use_case) {
    for (const std::string& slot : required_slots(use_case)) {
        if (world.bindings.count(slot) == 0) return Err::BindingMissing;
    }
    auto in_range = [&](const char* slot, int lo, int hi) {
        auto it = world.bindings.find(slot);
        if (it == world.bindings.end()) return true;
        return it->second >= lo && it->second <= hi;
    };
    if (!in_range("u1.s1", 1, 4) || !in_range("u1.s2", 1, 6) ||
        !in_range("u2.s1", 1, 3) || !in_range("u2.s2", 1, 5) ||
        !in_range("u3.s1", 1, 3) || !in_range("u3.s2", 1, 5) ||
        !in_range("u3.s3", 1, 3)) {
        return Err::ConfigError;
    }
    if (use_case == 3) {
        int s2 = world.bindings.at("u3.s2");
        int s3 = world.bindings.at("u3.s3");
        // the release path must match who holds the lock
        bool compatible = (s2 == 1 && s3 == 1) ||
                          ((s2 == 2 || s2 == 3 || s2 == 4) && s3 == 2) ||
                          (s2 == 5 && s3 == 3);
        if (!compatible) return Err::IncompatibleBindings;
    }
    return {};
}

} // namespace dpound
