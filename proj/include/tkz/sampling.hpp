#pragma once

// Seeded randomness and the row-ordering strategies used by the Kaczmarz sweeps.

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tkz {

/// SplitMix64: a 64-bit counter-based generator. Satisfies UniformRandomBitGenerator
/// and produces the same stream on every platform.
class SplitMix64 {
public:
    using result_type = std::uint64_t;

    explicit SplitMix64(std::uint64_t seed = 0) noexcept : state_(seed) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform integer in [0, bound) by rejection; bound must be >= 1.
    std::uint64_t below(std::uint64_t bound) noexcept;

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    /// Standard normal draw (Box-Muller, one value per call).
    double normal() noexcept;

private:
    std::uint64_t state_;
};

/// Independent sub-seed for stream `stream` of a base seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

/// Row order of one epoch, 0-based indices.
using Permutation = std::vector<std::size_t>;

bool is_permutation_of_range(const Permutation& p);

/// In-place Fisher-Yates shuffle (i from the back, j uniform in [0, i]).
void fisher_yates(Permutation& p, SplitMix64& rng);

enum class Strategy { Incremental, ShuffleOnce, RandomReshuffle };

std::string_view to_string(Strategy s) noexcept;
std::optional<Strategy> parse_strategy(std::string_view name) noexcept;

/// Per-run permutation source.
///
///  - Incremental: (0, 1, ..., m-1) every epoch.
///  - ShuffleOnce: one Fisher-Yates draw at epoch 0, reused afterwards.
///  - RandomReshuffle: a fresh draw every epoch.
class PermutationStream {
public:
    PermutationStream(Strategy kind, std::size_t m, std::uint64_t seed);

    Permutation next();

    Strategy kind() const noexcept { return kind_; }
    std::size_t size() const noexcept { return m_; }
    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t epoch() const noexcept { return epoch_; }

    /// True when every epoch uses the same order.
    bool fixed_order() const noexcept { return kind_ != Strategy::RandomReshuffle; }

private:
    Strategy kind_;
    std::size_t m_;
    std::uint64_t seed_;
    std::uint64_t epoch_ = 0;
    SplitMix64 rng_;
    Permutation cached_;
};

}  // namespace tkz
