#pragma once

#include "dpound/core_ledger.hpp"
#include "dpound/error.hpp"
#include "dpound/ids.hpp"
#include "dpound/money.hpp"
#include "dpound/rail.hpp"
#include "dpound/roles.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dpound {

// Plain-text line-oriented config: '[section]' headers, 'key = value' lines,
// '#' comments. Sections may repeat; order is preserved.
struct ConfigSection {
    std::string name;
    std::vector<std::pair<std::string, std::string>> entries;

    std::optional<std::string> get(const std::string& key) const;
    std::string get_or(const std::string& key, const std::string& fallback) const;
};

struct ConfigFile {
    std::vector<ConfigSection> sections;

    const ConfigSection* first(const std::string& name) const;
    std::vector<const ConfigSection*> all(const std::string& name) const;
};

Result<ConfigFile> parse_config_text(const std::string& text);
Result<ConfigFile> load_config_file(const std::string& path);

struct ParticipantSpec {
    std::string name;
    Role role = Role::User;
    bool intermediary = false;     // counted in the liquidity-demand metric
    std::string display_name;      // legal name used in personal-data fields
};

struct SettlementSpec {
    std::string key; // symbolic handle other config sections refer to
    std::string owner;
    Pence balance = 0;
};

struct BookSpec {
    std::string key;
    std::string host;
    std::string owner;
    Pence balance = 0;
};

struct WalletSpec {
    std::string key;
    std::string owner;
    std::string pip;
    WalletKind kind = WalletKind::User;
    std::optional<Pence> holding_limit;
    std::string linked_account_key;
    Pence balance = 0;
};

struct FpsSpec {
    std::string participant;
    SortCode sort_code;
    FpsMode mode = FpsMode::Dcsp;
    std::string sponsor;
};

struct AliasSpec {
    Alias alias;
    std::string wallet_key;
    std::string pip;
};

struct Toggles {
    Tick batch_window = 50;
    Tick pending_timeout = 100;
    Tick tick_budget = 1000;
    Tick dcr_ttl = 600;
    Tick rtp_expiry = 300;
    HoldingLimitMode holding_mode = HoldingLimitMode::Waterfall;
    bool fmi_pull_mode = false; // confidential data pulled from the FMI's API
    bool rtgs_open = true;
    std::string alias_directory_host; // defaults to the alias-service participant
};

struct WorldSpec {
    std::string name = "world";
    std::uint64_t seed = 7;
    std::vector<ParticipantSpec> participants;
    std::vector<SettlementSpec> settlements;
    std::vector<BookSpec> books;
    std::vector<WalletSpec> wallets;
    std::vector<FpsSpec> fps_members;
    std::vector<AliasSpec> aliases;
    std::string backing_key; // settlement account mirroring mint/burn
    std::map<std::string, std::string> wiring; // function -> participant name
    std::map<std::string, int> bindings;       // "u1.s2" -> option number
    Toggles toggles;
};

enum class Authorise { Approve, Reject };
enum class PipDecision { Approve, Reject, Timeout };
enum class DeliveryOutcome { Success, Failed };

struct ScenarioSpec {
    std::string name = "scenario";
    int use_case = 1; // 1, 2 or 3
    Pence amount = 5000;
    Tick initiate_tick = 1;
    Authorise authorise = Authorise::Approve;
    Tick authorise_delay = 0;
    Authorise release_authorise = Authorise::Approve;
    PipDecision pip_decision = PipDecision::Approve;
    DeliveryOutcome delivery = DeliveryOutcome::Success;
    bool alias_valid = true;
    std::string compliance_fail_at; // participant whose screening fails
    bool scheme_closed = false;
    Tick lock_expiry_offset = 200;
    bool wait_for_lock_expiry = false;
    bool dcr_expired = false; // pre-dated registration, forces NotRegistered
    bool stall_consumer = false; // consumer never answers; drives the run aground
    bool expect_success = true;
    std::string expected_error;
    Pence second_amount = 0; // optional concurrent payment (use case 1)
    std::map<std::string, Pence> balance_overrides; // wallet key -> balance
    std::map<std::string, Pence> limit_overrides;   // wallet key -> holding limit
};

Result<WorldSpec> parse_world(const ConfigFile& file);
Result<ScenarioSpec> parse_scenario(const ConfigFile& file);
Result<WorldSpec> load_world_file(const std::string& path);
Result<ScenarioSpec> load_scenario_file(const std::string& path);

// The slots a use case draws on; used to validate bindings before a run.
std::vector<std::string> required_slots(int use_case);

// U3 couples the lock holder to the release path; settlement slot rules are
// validated here as well.
Status validate_bindings(const WorldSpec& world, int use_case);

} // namespace dpound
