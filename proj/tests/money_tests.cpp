#include <doctest.h>

#include "dpound/money.hpp"

using namespace dpound;

TEST_CASE("checked addition reports overflow instead of wrapping") {
    CHECK(money_add(2, 3) == Pence{5});
    CHECK(money_add(0, 0) == Pence{0});
    CHECK(money_add(kMaxPence, 0) == kMaxPence);
    CHECK_FALSE(money_add(kMaxPence, 1).has_value());
    CHECK_FALSE(money_add(kMaxPence - 4, 5).has_value());
}

TEST_CASE("checked subtraction reports underflow") {
    CHECK(money_sub(5, 3) == Pence{2});
    CHECK(money_sub(5, 5) == Pence{0});
    CHECK_FALSE(money_sub(3, 5).has_value());
    CHECK_FALSE(money_sub(0, 1).has_value());
}

TEST_CASE("pence render as pounds with two decimals") {
    CHECK(format_pence(0) == "0.00");
    CHECK(format_pence(5) == "0.05");
    CHECK(format_pence(5000) == "50.00");
    CHECK(format_pence(123456789) == "1234567.89");
}
