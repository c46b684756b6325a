#include <doctest.h>

#include "dpound/core_ledger.hpp"

#include <map>
#include <random>
#include <vector>

using namespace dpound;

namespace {

// Independent shadow of one wallet's lock book. Mirrors every operation with
// its own arithmetic so the ledger under test is never consulted to predict
// its own answers.
struct ShadowLock {
    Pence amount = 0;
    Tick expiry = 0;
    LockState state = LockState::Active;
};

struct ShadowWallet {
    Pence ledger = 0;
    std::map<LockId, ShadowLock> locks;

    Pence active() const {
        Pence sum = 0;
        for (const auto& [id, l] : locks)
            if (l.state == LockState::Active) sum += l.amount;
        return sum;
    }
    Pence available() const { return ledger - active(); }
};

struct Harness {
    IdSequencer ids;
    CoreLedger ledger{&ids};
    std::map<WalletId, ShadowWallet> shadow;
    WalletId sink; // technical wallet absorbing transfers
    long violations = 0;

    void verify(bool cond, const char* what) {
        if (!cond) {
            ++violations;
            FAIL_CHECK(what);
        }
    }

    void verify_wallet(const WalletId& w) {
        const ShadowWallet& s = shadow.at(w);
        verify(ledger.balance(w) == s.ledger, "ledger balance drifted");
        verify(ledger.active_locks(w) == s.active(), "active lock sum drifted");
        verify(ledger.available(w) == s.available(),
               "available != ledger - active locks");
        for (const auto& [id, sl] : s.locks)
            verify(ledger.lock(id).state == sl.state, "lock state drifted");
    }

    void verify_all() {
        for (const auto& [w, s] : shadow) verify_wallet(w);
    }
};

} // namespace

TEST_CASE("randomized lock workloads never break the availability identity") {
    std::mt19937 rng(0x10cc5eed);
    long cases = 0;
    long locks_created = 0;
    long releases = 0;
    long expiries = 0;

    for (int c = 0; c < 1000; ++c) {
        Harness h;
        Tick now = 1;
        std::vector<WalletId> ws;
        for (int i = 0; i < 2; ++i) {
            auto r = h.ledger.open_wallet("holder", "pip", Role::Pip,
                                          WalletKind::User, std::nullopt,
                                          std::nullopt);
            REQUIRE(r.ok());
            Pence start = 1000 + (Pence)(rng() % 9000);
            REQUIRE(h.ledger.genesis_mint(r.value(), start, "seed").ok());
            h.shadow[r.value()].ledger = start;
            ws.push_back(r.value());
        }
        {
            auto r = h.ledger.open_wallet("pip", "pip", Role::Pip,
                                          WalletKind::Technical, std::nullopt,
                                          std::nullopt);
            REQUIRE(r.ok());
            h.sink = r.value();
        }

        std::vector<LockId> known;
        for (int op = 0; op < 14; ++op) {
            WalletId w = ws[rng() % ws.size()];
            ShadowWallet& s = h.shadow[w];
            switch (rng() % 6) {
            case 0: { // take a lock, sometimes over the available balance
                Pence amount = (Pence)(rng() % (s.available() + 500));
                Tick expiry = now + 1 + (Tick)(rng() % 5);
                auto r = h.ledger.lock_funds(w, amount, "beneficiary", expiry,
                                             "pip", now);
                if (amount == 0) {
                    h.verify(r.error() == Err::ZeroAmount,
                             "zero lock not refused");
                } else if (amount > s.available()) {
                    h.verify(r.error() == Err::InsufficientAvailable,
                             "over-available lock accepted");
                } else {
                    h.verify(r.ok(), "in-budget lock refused");
                    s.locks[r.value()] = {amount, expiry, LockState::Active};
                    known.push_back(r.value());
                    ++locks_created;
                }
                break;
            }
            case 1: { // cancel, regardless of current state
                if (known.empty()) break;
                LockId l = known[rng() % known.size()];
                ShadowWallet& owner = h.shadow[h.ledger.lock(l).wallet];
                ShadowLock& sl = owner.locks.at(l);
                auto st = h.ledger.cancel_lock(l, "pip", now);
                if (sl.state == LockState::Active) {
                    h.verify(st.ok(), "cancel of active lock refused");
                    sl.state = LockState::Cancelled;
                } else {
                    h.verify(st.error() == Err::LockNotActive,
                             "cancel of settled lock accepted");
                }
                break;
            }
            case 2: { // release and burn toward the beneficiary
                if (known.empty()) break;
                LockId l = known[rng() % known.size()];
                ShadowWallet& owner = h.shadow[h.ledger.lock(l).wallet];
                ShadowLock& sl = owner.locks.at(l);
                Pence avail_before =
                    h.ledger.available(h.ledger.lock(l).wallet);
                auto r = h.ledger.release_and_burn(l, "pip", now);
                if (sl.state == LockState::Active) {
                    h.verify(r.ok(), "release of active lock refused");
                    h.verify(r.value().amount == sl.amount,
                             "release amount mismatch");
                    // the ledger loses the locked funds, the spendable part
                    // is untouched
                    h.verify(h.ledger.available(r.value().wallet) ==
                                 avail_before,
                             "release changed available balance");
                    sl.state = LockState::Released;
                    owner.ledger -= sl.amount;
                    ++releases;
                } else {
                    h.verify(r.error() == Err::LockNotActive,
                             "release of settled lock accepted");
                }
                break;
            }
            case 3: { // let time pass and sweep expiries
                now += 1 + (Tick)(rng() % 4);
                auto fired = h.ledger.expire_locks(now);
                std::size_t expected = 0;
                for (auto& [wid, sw] : h.shadow)
                    for (auto& [id, sl] : sw.locks)
                        if (sl.state == LockState::Active && sl.expiry < now) {
                            sl.state = LockState::Expired;
                            ++expected;
                        }
                h.verify(fired.size() == expected,
                         "expiry sweep count mismatch");
                expiries += (long)expected;
                break;
            }
            case 4: { // spend against the available balance
                Pence amount = (Pence)(rng() % (s.available() + 300));
                auto r = h.ledger.transfer(w, h.sink, amount, 0, "pip", now,
                                           "FLOW");
                if (amount == 0) {
                    h.verify(r.error() == Err::ZeroAmount,
                             "zero transfer not refused");
                } else if (amount > s.available()) {
                    h.verify(r.error() == Err::InsufficientAvailable,
                             "transfer dipped into locked funds");
                } else {
                    h.verify(r.ok(), "in-budget transfer refused");
                    s.ledger -= amount;
                }
                break;
            }
            case 5: { // wrong-provider actions must not disturb anything
                if (known.empty()) break;
                LockId l = known[rng() % known.size()];
                auto st = h.ledger.cancel_lock(l, "someone-else", now);
                h.verify(!st.ok(), "foreign cancel accepted");
                break;
            }
            }
            h.verify_all();
        }
        CHECK(h.violations == 0);
        ++cases;
    }

    CHECK(cases == 1000);
    // the generator actually exercised every transition
    CHECK(locks_created > 1500);
    CHECK(releases > 400);
    CHECK(expiries > 300);
}
