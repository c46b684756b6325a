#include "dpound/engine.hpp"

#include "dpound/participants.hpp"

#include <algorithm>
#include <sstream>

namespace dpound {

namespace {

bool queues_empty(const World& w) {
    if (!w.scheduled.empty())
        return false;
    for (const auto& [p, q] : w.queues) {
        if (!q.empty())
            return false;
    }
    return true;
}

bool flows_terminal(const World& w) {
    if (w.flows.empty())
        return false;
    for (const auto& [id, f] : w.flows) {
        if (f.status == FlowStatus::InFlight)
            return false;
    }
    return true;
}

// Anything that will still fire by itself: pending credits, funds locks of
// any flavour, or a settlement window that has not closed yet.
bool timers_armed(const World& w) {
    if (!w.ledger.awaiting_pendings().empty())
        return true;
    for (const auto& [id, f] : w.flows) {
        if (!f.core_lock.empty() && w.ledger.lock_exists(f.core_lock) &&
            w.ledger.lock(f.core_lock).state == LockState::Active)
            return true;
    }
    for (const auto& [id, l] : w.pip_locks) {
        if (l.state == LockState::Active)
            return true;
    }
    for (const auto& [id, e] : w.escrows) {
        if (e.state == EscrowState::Active)
            return true;
    }
    for (const auto& [id, b] : w.rail.batches()) {
        if (b.state == BatchState::Open)
            return true;
    }
    return false;
}

struct Checkpointer {
    World& w;
    bool ok = true;
    std::string detail;

    void check() {
        w.drain_journals();
        Pence g = w.totals().global();
        Pence g0 = w.genesis_totals.global();
        if (ok && g != g0) {
            ok = false;
            std::ostringstream d;
            d << "tick " << w.now << ": total money " << g << " != genesis "
              << g0;
            detail = d.str();
        }
        w.sample_liquidity();
    }
};

void deliver(World& w, const Envelope& env, Checkpointer& cp) {
    w.trace_message(env);
    w.exposure.record_plain(env, env.sender, env.sender_role);
    w.exposure.record_plain(env, env.receiver, env.receiver_role);
    w.delivered.push_back(env);
    ++w.messages_delivered;
    handle_message(w, env);
    cp.check();
}

std::string header(const World& w) {
    std::ostringstream h;
    h << "# world " << w.spec.name << "\n";
    h << "# scenario " << w.scenario.name << "\n";
    h << "# seed " << w.spec.seed << "\n";
    h << "# bindings";
    for (const auto& [slot, option] : w.spec.bindings)
        h << " " << slot << "=" << option;
    h << "\n";
    return h.str();
}

std::string join_lines(const std::vector<std::string>& lines) {
    std::string out;
    for (const auto& l : lines) {
        out += l;
        out += '\n';
    }
    return out;
}

struct Snapshot {
    std::map<WalletId, Pence> wallets;
    std::map<AccountId, Pence> books;
};

Snapshot snapshot(const World& w) {
    Snapshot s;
    for (const auto& [id, wl] : w.ledger.wallets())
        s.wallets[id] = wl.ledger_balance;
    for (const auto& [id, b] : w.rail.book_accounts())
        s.books[id] = b.balance;
    return s;
}

struct Clauses {
    std::vector<std::string> lines;
    bool all_ok = true;

    void add(bool ok, const std::string& text) {
        lines.push_back((ok ? "ok   " : "FAIL ") + text);
        all_ok = all_ok && ok;
    }
};

void evaluate_postconditions(World& w, const Snapshot& genesis,
                             RunStatus status, const Checkpointer& cp,
                             RunResult& out) {
    const ScenarioSpec& sc = w.scenario;
    Clauses c;

    if (sc.stall_consumer) {
        c.add(status == RunStatus::Deadlocked,
              "run stalled with no timers armed and was reported as deadlock");
    } else {
        c.add(status == RunStatus::Completed, "run terminated cleanly");
    }
    c.add(cp.ok, "total money constant at every checkpoint" +
                     (cp.ok ? std::string{} : " (" + cp.detail + ")"));

    Pence issued = w.ledger.sum_wallets() + w.ledger.suspense() +
                   w.ledger.pending_mint_total();
    Pence backing = w.rail.settlement(w.rail.backing_account()).balance;
    c.add(issued == backing,
          "backing account mirrors outstanding digital pounds (" +
              std::to_string(backing) + " vs " + std::to_string(issued) + ")");

    c.add(w.ledger.suspense() == 0, "suspense empty at end of run");
    c.add(w.ledger.awaiting_pendings().empty(),
          "no pending credits left awaiting confirmation");

    bool locks_done = true;
    for (const auto& [id, f] : w.flows) {
        if (!f.core_lock.empty() && w.ledger.lock_exists(f.core_lock) &&
            w.ledger.lock(f.core_lock).state == LockState::Active)
            locks_done = false;
    }
    for (const auto& [id, l] : w.pip_locks)
        if (l.state == LockState::Active)
            locks_done = false;
    for (const auto& [id, e] : w.escrows)
        if (e.state == EscrowState::Active)
            locks_done = false;
    c.add(locks_done, "every funds lock reached a terminal state");

    bool expect_risk = sc.expected_error == "InsufficientSettlementFunds";
    bool unsettled = !w.rail.unsettled_batches().empty();
    out.unsettled_batch = unsettled;
    if (expect_risk) {
        c.add(unsettled, "netted batch left unsettled: settlement risk realised");
    } else {
        c.add(!unsettled, "no unsettled net batches left behind");
    }

    bool succeeded = true;
    for (const auto& [id, f] : w.flows)
        succeeded = succeeded && f.status == FlowStatus::Succeeded;
    out.all_succeeded = succeeded && !w.flows.empty();

    if (sc.stall_consumer) {
        bool inflight = true;
        for (const auto& [id, f] : w.flows)
            inflight = inflight && f.status == FlowStatus::InFlight;
        c.add(inflight, "stalled flow still in flight, as scripted");
    } else if (sc.expect_success) {
        c.add(out.all_succeeded, "every flow completed successfully");
    } else {
        bool failed = !w.flows.empty();
        std::string got;
        for (const auto& [id, f] : w.flows) {
            failed = failed && f.status == FlowStatus::Failed;
            got = err_name(f.failure);
        }
        c.add(failed, "flow failed as scripted");
        if (!sc.expected_error.empty())
            c.add(got == sc.expected_error, "failure reason " + got +
                                                " matches expected " +
                                                sc.expected_error);
    }

    // user-visible balance movements
    auto wallet_delta = [&](const WalletId& id) {
        return w.ledger.balance(id) - genesis.wallets.at(id);
    };
    auto book_delta = [&](const AccountId& id) {
        return w.rail.book(id).balance - genesis.books.at(id);
    };
    Pence total = 0;
    for (const auto& [id, f] : w.flows)
        total += f.amount;

    if (!w.flows.empty()) {
        const Flow& first = w.flows.begin()->second;
        bool success_case = sc.expect_success && !sc.stall_consumer;
        if (first.use_case == 1) {
            Pence payer = book_delta(first.payer_account);
            const Wallet& payee = w.ledger.wallet(first.payee_wallet);
            Pence received = wallet_delta(first.payee_wallet);
            if (payee.linked_account)
                received += book_delta(*payee.linked_account);
            if (success_case) {
                c.add(payer == -total, "payer account debited by the full amount");
                c.add(received == total,
                      "payee received the full amount across wallet and linked account");
                if (payee.holding_limit)
                    c.add(w.ledger.balance(first.payee_wallet) <=
                              *payee.holding_limit,
                          "payee wallet within its holding limit");
            } else {
                c.add(payer == 0, "payer account untouched after failure");
                c.add(received == 0, "payee balances untouched after failure");
            }
        } else {
            Pence consumer = wallet_delta(first.consumer_wallet);
            Pence merchant = book_delta(first.merchant_account);
            if (success_case) {
                c.add(consumer == -total, "consumer wallet debited by the amount");
                c.add(merchant == total, "merchant account credited by the amount");
                if (first.use_case == 3)
                    c.add(first.product_delivered && first.merchant_paid,
                          "goods delivered and merchant paid");
            } else {
                c.add(consumer == 0, "consumer wallet untouched after failure");
                c.add(merchant == 0, "merchant account untouched after failure");
            }
        }
    }

    out.clauses = c.lines;
    out.postconditions_ok = c.all_ok;

    std::ostringstream txt;
    txt << header(w);
    txt << "status " << run_status_name(status) << "\n";
    for (const auto& line : c.lines)
        txt << line << "\n";
    txt << (c.all_ok ? "postconditions ok" : "postconditions FAILED") << "\n";
    out.postconditions_text = txt.str();
}

} // namespace

const char* run_status_name(RunStatus s) {
    switch (s) {
    case RunStatus::Completed: return "completed";
    case RunStatus::Deadlocked: return "deadlocked";
    case RunStatus::Diverged: return "tick-budget-exhausted";
    }
    return "?";
}

Result<RunResult> run_scenario(const WorldSpec& world,
                               const ScenarioSpec& scenario) {
    auto v = validate_bindings(world, scenario.use_case);
    if (!v.ok())
        return v.error();

    World w;
    auto built = build_world(w, world, scenario);
    if (!built.ok())
        return built.error();
    if (scenario.scheme_closed)
        w.rail.set_scheme_open(false);

    Snapshot genesis = snapshot(w);
    Checkpointer cp{w, true, {}};
    cp.check();

    RunStatus status = RunStatus::Completed;
    bool initiated = false;

    while (true) {
        if (w.now >= w.spec.toggles.tick_budget) {
            status = RunStatus::Diverged;
            break;
        }
        ++w.now;

        // deferred sends whose time has come enter the sender's queue
        for (auto it = w.scheduled.begin();
             it != w.scheduled.end() && it->first <= w.now;) {
            w.queues[it->second.sender].push_back(
                World::Queued{it->second, it->first});
            it = w.scheduled.erase(it);
        }

        // timers: lock expiry, provider-side holds, credit timeouts, batches
        auto expired = w.ledger.expire_locks(w.now);
        if (!expired.empty())
            on_core_locks_expired(w, expired);
        on_pip_timers(w);
        auto timeouts =
            w.ledger.timeout_pendings(w.now, w.spec.toggles.pending_timeout,
                                      w.spec.toggles.holding_mode);
        if (!timeouts.empty())
            on_timeout_outcomes(w, timeouts);
        auto closed = w.rail.close_due_batches(w.now);
        if (!closed.empty())
            on_batch_results(w, closed);
        cp.check();

        if (!initiated && w.now == scenario.initiate_tick) {
            initiate_scenario(w);
            initiated = true;
            cp.check();
        }

        // deliver everything sent before this tick, one message per sender
        // per pass, senders visited in participant creation order
        bool delivered_any = true;
        while (delivered_any) {
            delivered_any = false;
            for (const auto& part : w.participants) {
                auto qit = w.queues.find(part.name);
                if (qit == w.queues.end() || qit->second.empty())
                    continue;
                if (qit->second.front().sent >= w.now)
                    continue;
                Envelope env = qit->second.front().env;
                qit->second.pop_front();
                deliver(w, env, cp);
                delivered_any = true;
            }
        }

        if (!initiated)
            continue;
        if (queues_empty(w) && flows_terminal(w)) {
            auto rest = w.rail.flush_batches(w.now);
            if (!rest.empty()) {
                on_batch_results(w, rest);
                cp.check();
                if (!queues_empty(w))
                    continue;
            }
            break;
        }
        if (queues_empty(w) && !flows_terminal(w) && !timers_armed(w)) {
            status = RunStatus::Deadlocked;
            break;
        }
    }

    RunResult out;
    out.status = status;
    out.conservation_ok = cp.ok;
    out.conservation_detail = cp.detail;
    out.liquidity_demand = w.liquidity_peak;
    out.hops = w.messages_delivered;
    out.failure_codes = w.failure_codes;
    out.bindings = w.spec.bindings;
    out.seal_ops = w.keydir.seal_ops();
    out.open_ops = w.keydir.open_ops();

    // attribute every exposure row to the stage of the message that caused it
    std::map<MsgId, Stage> stage_of;
    for (const auto& env : w.delivered)
        stage_of[env.id] = env.stage;
    for (const auto& row : w.exposure.rows()) {
        Stage st = stage_of.count(row.message) ? stage_of.at(row.message)
                                               : Stage::None;
        out.exposure.insert({stage_name(st), row.participant, row.kind});
    }

    out.trace_text = header(w) + join_lines(w.trace_lines);
    out.journal_text = header(w) + join_lines(w.journal_lines);
    out.exposure_text = header(w) + w.exposure.render();
    evaluate_postconditions(w, genesis, status, cp, out);
    return out;
}

Result<ReplayReport> replay_scenario(const WorldSpec& world,
                                     const ScenarioSpec& scenario,
                                     const std::string& recorded_trace) {
    auto run = run_scenario(world, scenario);
    if (!run.ok())
        return run.error();
    ReplayReport rep;
    if (run.value().trace_text == recorded_trace) {
        rep.match = true;
        return rep;
    }
    rep.match = false;
    std::istringstream fresh(run.value().trace_text);
    std::istringstream rec(recorded_trace);
    std::string a, b;
    std::size_t line = 0;
    while (true) {
        bool ga = static_cast<bool>(std::getline(fresh, a));
        bool gb = static_cast<bool>(std::getline(rec, b));
        ++line;
        if (!ga && !gb)
            break;
        if (!ga || !gb || a != b) {
            std::ostringstream d;
            d << "first divergence at line " << line << ": fresh=\""
              << (ga ? a : "<eof>") << "\" recorded=\"" << (gb ? b : "<eof>")
              << "\"";
            rep.detail = d.str();
            break;
        }
    }
    if (rep.detail.empty())
        rep.detail = "traces differ";
    return rep;
}

} // namespace dpound
