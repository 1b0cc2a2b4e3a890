#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace dexter {

// Deterministic random source. All derived draws (bounded ints, doubles,
// shuffles) are implemented here rather than with std distributions, whose
// output is implementation-defined; the same seed therefore produces the
// same sequence on every platform.
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    // Uniform integer in [0, bound) via rejection sampling; bound must be > 0.
    uint64_t next_below(uint64_t bound);

    // Uniform double in [0, 1) with 53 bits of precision.
    double next_double();

    // Fisher-Yates shuffle, iterating from the back.
    template <typename T>
    void shuffle(std::vector<T>& values) {
        for (size_t i = values.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(next_below(i));
            std::swap(values[i - 1], values[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace dexter
