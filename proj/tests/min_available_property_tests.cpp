#include <doctest.h>

#include "dpound/core_ledger.hpp"

#include <map>
#include <random>
#include <vector>

using namespace dpound;

// When a provider holds checkout locks on its own books instead of on the
// core ledger, the only thing protecting those earmarks is the
// minimum-available floor it passes with every payment it authorises. This
// suite drives random workloads of provider-side locks, consumer spends and
// checkout settlements, then replays the recorded trajectory to prove the
// wallet never held less than the sum of outstanding earmarks.
TEST_CASE("provider-held earmarks survive randomized spend workloads") {
    std::mt19937 rng(0xea53a7e);
    long grants = 0;
    long grant_refusals = 0;
    long settlements = 0;
    long spends = 0;
    long spend_refusals = 0;

    for (int c = 0; c < 1000; ++c) {
        IdSequencer ids;
        CoreLedger ledger{&ids};
        auto wallet = ledger.open_wallet("consumer", "pip", Role::Pip,
                                         WalletKind::User, std::nullopt,
                                         std::nullopt);
        REQUIRE(wallet.ok());
        auto merchant = ledger.open_wallet("pip", "pip", Role::Pip,
                                           WalletKind::Technical, std::nullopt,
                                           std::nullopt);
        REQUIRE(merchant.ok());
        WalletId w = wallet.value();
        Pence start = 500 + (Pence)(rng() % 3000);
        REQUIRE(ledger.genesis_mint(w, start, "seed").ok());

        // provider's off-ledger lock book: id -> amount
        std::map<int, Pence> earmarks;
        int next_earmark = 0;
        auto locked_sum = [&] {
            Pence sum = 0;
            for (const auto& [id, a] : earmarks) sum += a;
            return sum;
        };

        // recorded trajectory for the closing sweep
        std::vector<std::pair<Pence, Pence>> history; // (balance, earmarked)
        history.emplace_back(ledger.balance(w), locked_sum());

        Tick now = 1;
        for (int op = 0; op < 20; ++op, ++now) {
            switch (rng() % 5) {
            case 0: { // merchant asks for an earmark at checkout
                Pence amount = 1 + (Pence)(rng() % 500);
                // the provider only grants what the wallet can still cover
                if (locked_sum() + amount <= ledger.balance(w)) {
                    earmarks[next_earmark++] = amount;
                    ++grants;
                } else {
                    ++grant_refusals;
                }
                break;
            }
            case 1: { // checkout completes: pay the merchant, drop the earmark
                if (earmarks.empty()) break;
                auto it = earmarks.begin();
                std::advance(it, rng() % earmarks.size());
                Pence floor = locked_sum() - it->second;
                auto r = ledger.transfer(w, merchant.value(), it->second,
                                         floor, "pip", now, "FLOW");
                // funds were earmarked, so the payment can never bounce
                REQUIRE(r.ok());
                earmarks.erase(it);
                ++settlements;
                break;
            }
            case 2: { // checkout abandoned: the earmark just evaporates
                if (earmarks.empty()) break;
                auto it = earmarks.begin();
                std::advance(it, rng() % earmarks.size());
                earmarks.erase(it);
                break;
            }
            case 3: { // the consumer spends elsewhere through the provider
                Pence amount = 1 + (Pence)(rng() % 700);
                Pence floor = locked_sum();
                bool fits = ledger.balance(w) >= amount &&
                            ledger.balance(w) - amount >= floor;
                auto r = ledger.transfer(w, merchant.value(), amount, floor,
                                         "pip", now, "FLOW");
                if (fits) {
                    CHECK(r.ok());
                    ++spends;
                } else {
                    CHECK(r.error() == Err::InsufficientAvailable);
                    ++spend_refusals;
                }
                break;
            }
            case 4: { // incoming funds
                Pence amount = 1 + (Pence)(rng() % 400);
                REQUIRE(ledger.genesis_mint(w, amount, "seed").ok());
                break;
            }
            }
            history.emplace_back(ledger.balance(w), locked_sum());
        }

        // closing sweep over the recorded trajectory
        long breaches = 0;
        for (const auto& [balance, earmarked] : history)
            if (balance < earmarked) ++breaches;
        CHECK(breaches == 0);
    }

    // every branch genuinely ran
    CHECK(grants > 2000);
    CHECK(grant_refusals > 200);
    CHECK(settlements > 1000);
    CHECK(spends > 1000);
    CHECK(spend_refusals > 200);
}
