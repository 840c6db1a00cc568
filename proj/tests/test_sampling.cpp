#include <doctest.h>

#include <stdexcept>

#include <map>
#include <numeric>
#include <set>

#include "tkz/sampling.hpp"

using namespace tkz;

TEST_CASE("SplitMix64 reproduces the reference stream") {
    SplitMix64 rng(0);
    CHECK(rng() == 0xe220a8397b1dcdafULL);
    CHECK(rng() == 0x6e789e6aa1b965f4ULL);
    CHECK(rng() == 0x06c45d188009454fULL);
}

TEST_CASE("bounded and real draws stay in range") {
    SplitMix64 rng(42);
    for (int i = 0; i < 10000; ++i) {
        CHECK(rng.below(7) < 7);
        const double u = rng.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
    CHECK(rng.below(1) == 0);
}

TEST_CASE("normal draws have roughly unit variance") {
    SplitMix64 rng(3);
    double s = 0.0, s2 = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal();
        s += z;
        s2 += z * z;
    }
    CHECK(std::abs(s / n) < 0.01);
    CHECK(std::abs(s2 / n - 1.0) < 0.02);
}

TEST_CASE("derived seeds differ per stream and are stable") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t s = 0; s < 100; ++s) seen.insert(derive_seed(5, s));
    CHECK(seen.size() == 100);
    CHECK(derive_seed(5, 3) == derive_seed(5, 3));
    CHECK(derive_seed(5, 3) != derive_seed(6, 3));
}

TEST_CASE("Fisher-Yates follows its swap transcript") {
    // Replay: for i = m-1 down to 1 swap p[i] with p[below(i + 1)].
    SplitMix64 a(77), b(77);
    Permutation p(9);
    std::iota(p.begin(), p.end(), std::size_t{0});
    fisher_yates(p, a);

    Permutation ref(9);
    std::iota(ref.begin(), ref.end(), std::size_t{0});
    for (std::size_t i = ref.size() - 1; i >= 1; --i) {
        const std::size_t j = b.below(i + 1);
        std::swap(ref[i], ref[j]);
    }
    CHECK(p == ref);
    CHECK(is_permutation_of_range(p));
}

TEST_CASE("Fisher-Yates is uniform over S_3") {
    SplitMix64 rng(11);
    std::map<Permutation, int> counts;
    const int draws = 60000;
    for (int i = 0; i < draws; ++i) {
        Permutation p{0, 1, 2};
        fisher_yates(p, rng);
        ++counts[p];
    }
    REQUIRE(counts.size() == 6);
    double chi2 = 0.0;
    for (const auto& [perm, c] : counts) chi2 += (c - draws / 6.0) * (c - draws / 6.0) / (draws / 6.0);
    CHECK(chi2 < 20.5);  // 5 degrees of freedom, p = 0.001
}

TEST_CASE("permutation validity") {
    CHECK(is_permutation_of_range({2, 0, 1}));
    CHECK_FALSE(is_permutation_of_range({0, 0, 1}));
    CHECK_FALSE(is_permutation_of_range({0, 3, 1}));
    CHECK(is_permutation_of_range({}));
}

TEST_CASE("incremental order is the identity every epoch") {
    PermutationStream s(Strategy::Incremental, 5, 1);
    for (int e = 0; e < 3; ++e) CHECK(s.next() == Permutation{0, 1, 2, 3, 4});
    CHECK(s.fixed_order());
}

TEST_CASE("shuffle-once reuses its first draw") {
    PermutationStream s(Strategy::ShuffleOnce, 20, 9);
    const Permutation first = s.next();
    CHECK(is_permutation_of_range(first));
    for (int e = 0; e < 5; ++e) CHECK(s.next() == first);
}

TEST_CASE("random reshuffling redraws and is seed-determined") {
    PermutationStream s(Strategy::RandomReshuffle, 20, 9), t(Strategy::RandomReshuffle, 20, 9);
    const Permutation a = s.next(), b = s.next();
    CHECK(a != b);
    CHECK(t.next() == a);
    CHECK(t.next() == b);
    CHECK_FALSE(s.fixed_order());
    CHECK(s.epoch() == 2);
}

TEST_CASE("strategy names round trip") {
    for (auto k : {Strategy::Incremental, Strategy::ShuffleOnce, Strategy::RandomReshuffle}) {
        CHECK(parse_strategy(to_string(k)) == k);
    }
    CHECK_FALSE(parse_strategy("random"));
    CHECK_THROWS_AS(PermutationStream(Strategy::Incremental, 0, 0), std::invalid_argument);
}
