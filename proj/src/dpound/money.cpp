#include "dpound/money.hpp"

namespace dpound {

std::string format_pence(Pence value) {
    // Render as pounds.pence, e.g. 5000 -> "50.00".
    std::string pounds = std::to_string(value / 100);
    std::string pence = std::to_string(value % 100);
    if (pence.size() < 2) pence.insert(pence.begin(), '0');
    return pounds + "." + pence;
}

} // namespace dpound
