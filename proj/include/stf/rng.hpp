#pragma once

#include <algorithm>
#include <cstdint>
#include <string_view>
#include <vector>

namespace stf {

// Deterministic random source. All randomness in a run derives from one
// root seed; independent consumers take named substreams so that adding a
// new consumer does not perturb existing ones.
//
// Distributions are generated locally (not via std::<distribution>, whose
// output is implementation-defined), so streams are stable across
// platforms and standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    // Independent generator derived from this generator's seed and a name.
    Rng substream(std::string_view name) const;

    std::uint64_t next_u64();

    // Uniform in [0, 1).
    double uniform();
    double uniform(double lo, double hi);

    // Standard normal via Box-Muller; one spare value is cached.
    double normal();

    // Uniform integer in [0, n).
    std::size_t index(std::size_t n);

    template <typename T>
    void shuffle(std::vector<T>& items) {
        // Fisher-Yates with our own index stream.
        for (std::size_t i = items.size(); i > 1; --i) {
            std::swap(items[i - 1], items[index(i)]);
        }
    }

    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
    std::uint64_t state_;
    double spare_normal_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace stf
