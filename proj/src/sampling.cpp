#include "tkz/sampling.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <utility>

namespace tkz {

std::uint64_t SplitMix64::below(std::uint64_t bound) noexcept {
    // Reject the top partial bucket so every residue is equally likely.
    const std::uint64_t limit = max() - max() % bound;
    std::uint64_t r;
    do {
        r = (*this)();
    } while (r >= limit);
    return r % bound;
}

double SplitMix64::normal() noexcept {
    double u1;
    do {
        u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
    SplitMix64 mix(seed ^ (0xD1B54A32D192ED03ULL * (stream + 1)));
    mix();
    return mix();
}

bool is_permutation_of_range(const Permutation& p) {
    std::vector<bool> seen(p.size(), false);
    for (std::size_t v : p) {
        if (v >= p.size() || seen[v]) return false;
        seen[v] = true;
    }
    return true;
}

void fisher_yates(Permutation& p, SplitMix64& rng) {
    for (std::size_t i = p.size(); i > 1; --i) {
        const std::size_t j = rng.below(i);
        std::swap(p[i - 1], p[j]);
    }
}

std::string_view to_string(Strategy s) noexcept {
    switch (s) {
        case Strategy::Incremental: return "is";
        case Strategy::ShuffleOnce: return "so";
        case Strategy::RandomReshuffle: return "rr";
    }
    return "?";
}

std::optional<Strategy> parse_strategy(std::string_view name) noexcept {
    if (name == "is") return Strategy::Incremental;
    if (name == "so") return Strategy::ShuffleOnce;
    if (name == "rr") return Strategy::RandomReshuffle;
    return std::nullopt;
}

PermutationStream::PermutationStream(Strategy kind, std::size_t m, std::uint64_t seed)
    : kind_(kind), m_(m), seed_(seed), rng_(seed) {
    if (m == 0) throw std::invalid_argument("PermutationStream: m must be >= 1");
}

Permutation PermutationStream::next() {
    ++epoch_;
    if (kind_ == Strategy::ShuffleOnce && !cached_.empty()) return cached_;

    Permutation p(m_);
    std::iota(p.begin(), p.end(), std::size_t{0});
    if (kind_ == Strategy::Incremental) return p;

    fisher_yates(p, rng_);
    if (kind_ == Strategy::ShuffleOnce) cached_ = p;
    return p;
}

}  // namespace tkz
