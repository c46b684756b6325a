#include "dpound/cli.hpp"

#include "dpound/engine.hpp"
#include "dpound/matrix.hpp"
#include "dpound/world.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace dpound {

namespace {

constexpr int kOk = 0;
constexpr int kCheckFailed = 1;
constexpr int kUsage = 2;

std::optional<WorldSpec> load_world(const std::string& path, int& exit_code) {
    if (path.empty())
        return standard_world_spec();
    auto w = load_world_file(path);
    if (!w.ok()) {
        std::cerr << "error: cannot load world " << path << ": "
                  << err_name(w.error()) << "\n";
        exit_code = kUsage;
        return std::nullopt;
    }
    return w.value();
}

std::optional<ScenarioSpec> load_scenario(const std::string& path,
                                          int& exit_code) {
    auto s = load_scenario_file(path);
    if (!s.ok()) {
        std::cerr << "error: cannot load scenario " << path << ": "
                  << err_name(s.error()) << "\n";
        exit_code = kUsage;
        return std::nullopt;
    }
    return s.value();
}

std::string resolve_out(const std::string& flag) {
    if (!flag.empty())
        return flag;
    if (const char* env = std::getenv("DPOUND_SANDBOX_OUT"))
        return env;
    return "out";
}

bool write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        std::cerr << "error: cannot write " << path.string() << "\n";
        return false;
    }
    out << text;
    return true;
}

std::optional<std::string> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        return std::nullopt;
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

int cmd_validate(const std::string& world_path,
                 const std::string& scenario_path) {
    int code = kOk;
    auto world = load_world(world_path, code);
    if (!world)
        return code;
    std::vector<int> cases;
    if (!scenario_path.empty()) {
        auto sc = load_scenario(scenario_path, code);
        if (!sc)
            return code;
        cases.push_back(sc->use_case);
    } else {
        cases = {1, 2, 3};
    }
    for (int uc : cases) {
        auto v = validate_bindings(*world, uc);
        if (!v.ok()) {
            std::cerr << "world " << world->name << ": use case " << uc
                      << " bindings invalid: " << err_name(v.error()) << "\n";
            return kCheckFailed;
        }
    }
    // a dry build catches wiring problems the binding check cannot see
    ScenarioSpec probe;
    World w;
    auto built = build_world(w, *world, probe);
    if (!built.ok()) {
        std::cerr << "world " << world->name
                  << ": build failed: " << err_name(built.error()) << "\n";
        return kCheckFailed;
    }
    std::cout << "world " << world->name << ": ok\n";
    return kOk;
}

int cmd_run(const std::string& world_path, const std::string& scenario_path,
            const std::string& out_flag, std::optional<std::uint64_t> seed) {
    int code = kOk;
    auto world = load_world(world_path, code);
    if (!world)
        return code;
    auto scenario = load_scenario(scenario_path, code);
    if (!scenario)
        return code;
    if (seed)
        world->seed = *seed;

    auto run = run_scenario(*world, *scenario);
    if (!run.ok()) {
        std::cerr << "error: run failed to start: " << err_name(run.error())
                  << "\n";
        return kUsage;
    }
    const RunResult& r = run.value();

    std::filesystem::path dir = resolve_out(out_flag);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        std::cerr << "error: cannot create " << dir.string() << "\n";
        return kUsage;
    }
    if (!write_file(dir / "trace.txt", r.trace_text) ||
        !write_file(dir / "journal.txt", r.journal_text) ||
        !write_file(dir / "exposure.txt", r.exposure_text) ||
        !write_file(dir / "postconditions.txt", r.postconditions_text))
        return kUsage;

    std::cout << "scenario " << scenario->name << ": "
              << run_status_name(r.status) << ", postconditions "
              << (r.postconditions_ok ? "ok" : "FAILED") << "\n";
    std::cout << "liquidity demand " << r.liquidity_demand << ", messages "
              << r.hops << ", artifacts in " << dir.string() << "\n";
    bool ok = r.postconditions_ok && r.conservation_ok;
    return ok ? kOk : kCheckFailed;
}

int cmd_matrix(const std::string& out_flag, const std::string& suite) {
    int use_case = 0;
    if (suite == "u1")
        use_case = 1;
    else if (suite == "u2")
        use_case = 2;
    else if (suite == "u3")
        use_case = 3;
    else if (suite != "all") {
        std::cerr << "error: unknown suite " << suite << "\n";
        return kUsage;
    }
    auto report = run_matrix(use_case);
    if (!report.ok()) {
        std::cerr << "error: matrix failed to run: "
                  << err_name(report.error()) << "\n";
        return kUsage;
    }
    std::filesystem::path dir = resolve_out(out_flag);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        std::cerr << "error: cannot create " << dir.string() << "\n";
        return kUsage;
    }
    if (!write_file(dir / "matrix.txt", report.value().text) ||
        !write_file(dir / "suitability.txt", render_suitability()))
        return kUsage;
    std::cout << report.value().text;
    std::cout << (report.value().all_ok ? "matrix ok" : "matrix FAILED")
              << " (" << report.value().rows.size() << " runs)\n";
    return report.value().all_ok ? kOk : kCheckFailed;
}

int cmd_replay(const std::string& world_path, const std::string& scenario_path,
               const std::string& trace_path,
               std::optional<std::uint64_t> seed) {
    int code = kOk;
    auto world = load_world(world_path, code);
    if (!world)
        return code;
    auto scenario = load_scenario(scenario_path, code);
    if (!scenario)
        return code;
    if (seed)
        world->seed = *seed;
    auto recorded = read_file(trace_path);
    if (!recorded) {
        std::cerr << "error: cannot read trace " << trace_path << "\n";
        return kUsage;
    }
    auto rep = replay_scenario(*world, *scenario, *recorded);
    if (!rep.ok()) {
        std::cerr << "error: replay failed to start: " << err_name(rep.error())
                  << "\n";
        return kUsage;
    }
    if (rep.value().match) {
        std::cout << "replay ok: trace matches\n";
        return kOk;
    }
    std::cout << "replay mismatch: " << rep.value().detail << "\n";
    return kCheckFailed;
}

} // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"deterministic digital pound ecosystem simulator"};
    app.require_subcommand(1);

    std::string world_path, scenario_path, out_flag, trace_path;
    std::string suite = "all";
    std::optional<std::uint64_t> seed;

    auto* validate = app.add_subcommand("validate", "check a world file");
    validate->add_option("--world", world_path, "world config (default: built-in)");
    validate->add_option("--scenario", scenario_path, "scenario config");

    auto* run = app.add_subcommand("run", "run one scenario and write artifacts");
    run->add_option("--world", world_path, "world config (default: built-in)");
    run->add_option("--scenario", scenario_path, "scenario config")->required();
    run->add_option("--out", out_flag, "artifact directory");
    run->add_option("--seed", seed, "override the world seed");

    auto* matrix = app.add_subcommand("matrix", "run the design-option battery");
    matrix->add_option("--out", out_flag, "artifact directory");
    matrix->add_option("--suite", suite, "u1, u2, u3 or all");

    auto* replay = app.add_subcommand("replay", "re-run and compare a trace");
    replay->add_option("--world", world_path, "world config (default: built-in)");
    replay->add_option("--scenario", scenario_path, "scenario config")->required();
    replay->add_option("--trace", trace_path, "recorded trace file")->required();
    replay->add_option("--seed", seed, "override the world seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    if (validate->parsed())
        return cmd_validate(world_path, scenario_path);
    if (run->parsed())
        return cmd_run(world_path, scenario_path, out_flag, seed);
    if (matrix->parsed())
        return cmd_matrix(out_flag, suite);
    if (replay->parsed())
        return cmd_replay(world_path, scenario_path, trace_path, seed);
    return kUsage;
}

} // namespace dpound
