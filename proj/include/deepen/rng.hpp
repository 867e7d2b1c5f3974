#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace deepen {

/// Counter-based deterministic random stream (splitmix64 finalizer over a
/// Weyl sequence). A stream is identified by (seed, purpose); distinct
/// purposes yield statistically independent streams, so adding a new
/// consumer never perturbs the draws of existing ones.
class RandomStream {
public:
    RandomStream(std::uint64_t seed, std::string_view purpose);

    std::uint64_t next_u64();

    /// Uniform in [0, 1), 53-bit resolution.
    double next_unit();

    double uniform(double lo, double hi);

    /// Unbiased integer in [0, n). n must be > 0.
    std::uint64_t next_below(std::uint64_t n);

    /// Standard normal via Box-Muller; draws come in deterministic pairs.
    double normal();

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(next_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    bool has_cached_normal_ = false;
    double cached_normal_ = 0.0;
};

}  // namespace deepen
