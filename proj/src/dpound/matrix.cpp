#include "dpound/matrix.hpp"

#include "dpound/world.hpp"

#include <iomanip>
#include <sstream>

namespace dpound {

namespace {

const char* kIssuer = "boe-cbdc";
const char* kOverlay = "overlay-tsp";
const char* kPartnerBank = "pip-east-bank";
const char* kAcquirerPip = "acq-inst-pip";

bool watched(const ParticipantId& p) {
    return p == kIssuer || p == kOverlay || p == kPartnerBank ||
           p == kAcquirerPip;
}

std::string bindings_label(const std::map<std::string, int>& bindings) {
    std::ostringstream out;
    bool first = true;
    for (const auto& [slot, option] : bindings) {
        if (!first)
            out << " ";
        out << slot << "=" << option;
        first = false;
    }
    return out.str();
}

} // namespace

std::vector<std::map<std::string, int>> matrix_bindings(int use_case) {
    std::vector<std::map<std::string, int>> out;
    if (use_case == 0 || use_case == 1) {
        for (int s1 = 1; s1 <= 4; ++s1)
            for (int s2 = 1; s2 <= 6; ++s2)
                out.push_back({{"u1.s1", s1}, {"u1.s2", s2}});
    }
    if (use_case == 0 || use_case == 2) {
        for (int s1 = 1; s1 <= 3; ++s1)
            for (int s2 = 1; s2 <= 5; ++s2)
                out.push_back({{"u2.s1", s1}, {"u2.s2", s2}});
    }
    if (use_case == 0 || use_case == 3) {
        for (int s1 = 1; s1 <= 3; ++s1) {
            out.push_back({{"u3.s1", s1},
                           {"u3.s2", 1},
                           {"u3.s3", 1},
                           {"u2.s2", 1}});
            out.push_back({{"u3.s1", s1},
                           {"u3.s2", 5},
                           {"u3.s3", 3},
                           {"u2.s2", 1}});
            for (int s2 = 2; s2 <= 4; ++s2)
                for (int leg = 1; leg <= 5; ++leg)
                    out.push_back({{"u3.s1", s1},
                                   {"u3.s2", s2},
                                   {"u3.s3", 2},
                                   {"u2.s2", leg}});
        }
    }
    return out;
}

int matrix_use_case(const std::map<std::string, int>& bindings) {
    if (bindings.count("u3.s1"))
        return 3;
    if (bindings.count("u2.s1"))
        return 2;
    return 1;
}

std::set<ParticipantId> expected_exposure(
    const std::map<std::string, int>& bindings) {
    std::set<ParticipantId> out;
    auto at = [&](const char* slot) {
        auto it = bindings.find(slot);
        return it == bindings.end() ? 0 : it->second;
    };
    switch (matrix_use_case(bindings)) {
    case 1:
        if (at("u1.s2") == 1)
            out.insert(kIssuer);
        if (at("u1.s1") == 3)
            out.insert(kOverlay);
        if (at("u1.s2") == 3)
            out.insert(kPartnerBank);
        break;
    case 2:
        if (at("u2.s2") == 1)
            out.insert(kIssuer);
        if (at("u2.s1") == 3)
            out.insert(kOverlay);
        if (at("u2.s2") == 2)
            out.insert(kAcquirerPip);
        break;
    case 3:
        if (at("u3.s3") == 1)
            out.insert(kIssuer);
        if (at("u3.s3") == 2 && at("u2.s2") == 1)
            out.insert(kIssuer);
        if (at("u3.s1") == 3 || at("u3.s2") == 4)
            out.insert(kOverlay);
        if (at("u3.s3") == 2 && at("u2.s2") == 2)
            out.insert(kAcquirerPip);
        break;
    }
    return out;
}

std::set<ParticipantId> observed_exposure(const RunResult& result) {
    std::set<ParticipantId> out;
    for (const auto& [stage, participant, kind] : result.exposure) {
        if (kind == DatumKind::PhoneAlias)
            continue;
        if (watched(participant))
            out.insert(participant);
    }
    return out;
}

Result<MatrixReport> run_matrix(int use_case) {
    MatrixReport report;
    report.all_ok = true;
    std::ostringstream table;
    table << "use  bindings                                      run      "
             "privacy  liquidity  hops  failures\n";

    for (const auto& bindings : matrix_bindings(use_case)) {
        int uc = matrix_use_case(bindings);
        WorldSpec world = standard_world_spec();
        for (const auto& [slot, option] : bindings)
            world.bindings[slot] = option;

        ScenarioSpec sc;
        sc.use_case = uc;
        sc.name = "matrix-u" + std::to_string(uc);
        sc.amount = 5000;

        auto run = run_scenario(world, sc);
        if (!run.ok())
            return run.error();
        const RunResult& r = run.value();

        MatrixRow row;
        row.use_case = uc;
        row.bindings = bindings;
        row.run_ok = r.status == RunStatus::Completed && r.conservation_ok &&
                     r.postconditions_ok;
        row.exposed = observed_exposure(r);
        row.privacy_ok = row.exposed == expected_exposure(bindings);
        row.liquidity = r.liquidity_demand;
        row.hops = r.hops;
        row.failures = r.failure_codes;
        row.trace_text = r.trace_text;
        row.journal_text = r.journal_text;
        row.exposure_text = r.exposure_text;
        report.all_ok = report.all_ok && row.run_ok && row.privacy_ok;

        table << "u" << uc << "   " << std::left << std::setw(46)
              << bindings_label(bindings) << std::setw(9)
              << (row.run_ok ? "ok" : "FAIL") << std::setw(9)
              << (row.privacy_ok ? "ok" : "FAIL") << std::setw(11)
              << row.liquidity << std::setw(6) << row.hops;
        if (row.failures.empty()) {
            table << "-";
        } else {
            bool first = true;
            for (const auto& fcode : row.failures) {
                if (!first)
                    table << ",";
                table << fcode;
                first = false;
            }
        }
        table << "\n";
        report.rows.push_back(std::move(row));
    }
    report.text = table.str();
    return report;
}

const char* rating_name(Rating r) {
    switch (r) {
    case Rating::Suitable: return "suitable";
    case Rating::Partial: return "partial";
    case Rating::Unsuitable: return "unsuitable";
    }
    return "?";
}

Rating suitability(const std::string& slot, int option) {
    struct Row {
        const char* slot;
        Rating ratings[6];
        int count;
    };
    static const Row table[] = {
        {"u1.s1",
         {Rating::Partial, Rating::Suitable, Rating::Unsuitable,
          Rating::Partial, Rating::Partial, Rating::Partial},
         4},
        {"u1.s2",
         {Rating::Unsuitable, Rating::Partial, Rating::Partial,
          Rating::Unsuitable, Rating::Partial, Rating::Partial},
         6},
        {"u2.s1",
         {Rating::Partial, Rating::Suitable, Rating::Suitable, Rating::Partial,
          Rating::Partial, Rating::Partial},
         3},
        {"u2.s2",
         {Rating::Unsuitable, Rating::Partial, Rating::Partial, Rating::Partial,
          Rating::Partial, Rating::Partial},
         5},
        {"u3.s1",
         {Rating::Partial, Rating::Suitable, Rating::Suitable, Rating::Partial,
          Rating::Partial, Rating::Partial},
         3},
        {"u3.s2",
         {Rating::Partial, Rating::Partial, Rating::Partial, Rating::Partial,
          Rating::Suitable, Rating::Partial},
         5},
        {"u3.s3",
         {Rating::Unsuitable, Rating::Partial, Rating::Suitable,
          Rating::Partial, Rating::Partial, Rating::Partial},
         3},
    };
    for (const Row& row : table) {
        if (slot == row.slot && option >= 1 && option <= row.count)
            return row.ratings[option - 1];
    }
    return Rating::Unsuitable;
}

std::string render_suitability() {
    static const struct {
        const char* slot;
        int count;
    } slots[] = {
        {"u1.s1", 4}, {"u1.s2", 6}, {"u2.s1", 3}, {"u2.s2", 5},
        {"u3.s1", 3}, {"u3.s2", 5}, {"u3.s3", 3},
    };
    std::ostringstream out;
    for (const auto& s : slots) {
        out << s.slot << ":";
        for (int option = 1; option <= s.count; ++option)
            out << " " << option << "=" << rating_name(suitability(s.slot, option));
        out << "\n";
    }
    return out.str();
}

} // namespace dpound
