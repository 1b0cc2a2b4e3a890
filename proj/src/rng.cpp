#include "dexter/rng.hpp"

namespace dexter {

uint64_t Rng::next_below(uint64_t bound) {
    // Rejection sampling over the largest multiple of bound that fits,
    // so every residue is equally likely.
    uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    uint64_t value;
    do {
        value = engine_();
    } while (value >= limit);
    return value % bound;
}

double Rng::next_double() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

}  // namespace dexter
