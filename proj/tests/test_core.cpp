#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "sgdkit/core.hpp"

using namespace sgdkit;

TEST_CASE("rng streams are reproducible per seed") {
    RngState a(42), b(42), c(43);
    bool all_equal = true, any_diff = false;
    for (int i = 0; i < 1000; ++i) {
        const auto x = a.next_u64();
        all_equal = all_equal && (x == b.next_u64());
        any_diff = any_diff || (x != c.next_u64());
    }
    CHECK(all_equal);
    CHECK(any_diff);
    CHECK(RngState::generator_name() == "xoshiro256**");
}

TEST_CASE("next_double stays in [0,1)") {
    RngState rng(7);
    for (int i = 0; i < 10000; ++i) {
        const double v = rng.next_double();
        CHECK(v >= 0.0);
        CHECK(v < 1.0);
    }
}

TEST_CASE("sample_batch size == m is a permutation subset") {
    RngState rng(7);
    const IndexBatch batch = sample_batch(rng, 5, 5);
    std::set<std::uint32_t> seen(batch.indices.begin(), batch.indices.end());
    CHECK(seen == std::set<std::uint32_t>{0, 1, 2, 3, 4});
}

TEST_CASE("sample_batch is deterministic for equal seeds") {
    RngState a(7), b(7);
    const IndexBatch x = sample_batch(a, 10, 3);
    const IndexBatch y = sample_batch(b, 10, 3);
    CHECK(x.indices == y.indices);
}

TEST_CASE("sample_batch rejects invalid sizes") {
    RngState rng(1);
    CHECK_THROWS_AS(sample_batch(rng, 3, 4), ConfigError);
    CHECK_THROWS_AS(sample_batch(rng, 3, 0), ConfigError);
}

TEST_CASE("batches never contain duplicates") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        RngState rng(seed);
        for (std::size_t m = 1; m <= 6; ++m) {
            for (std::size_t size = 1; size <= m; ++size) {
                const IndexBatch batch = sample_batch(rng, m, size);
                std::set<std::uint32_t> seen(batch.indices.begin(), batch.indices.end());
                CHECK(seen.size() == size);
                for (auto i : seen) CHECK(i < m);
            }
        }
    }
}

TEST_CASE("size-1 draws are uniform within 5 sigma") {
    RngState rng(2024);
    const int draws = 10000, m = 10;
    std::vector<int> counts(m, 0);
    for (int i = 0; i < draws; ++i) ++counts[sample_batch(rng, m, 1).indices[0]];
    const double expect = draws / double(m);
    const double sigma = std::sqrt(draws * (1.0 / m) * (1.0 - 1.0 / m));
    for (int c : counts) CHECK(std::abs(c - expect) <= 5.0 * sigma);
}

TEST_CASE("vector helpers") {
    ParamVector a{1.0, 2.0}, b{3.0, -1.0};
    CHECK(dot(a, b) == doctest::Approx(1.0));
    CHECK(squared_norm(a) == doctest::Approx(5.0));
    axpy(2.0, b, a);
    CHECK(a[0] == doctest::Approx(7.0));
    CHECK(a[1] == doctest::Approx(0.0));
    ParamVector short_vec{1.0};
    CHECK_THROWS_AS(dot(a, short_vec), ShapeError);
    CHECK(all_finite(a));
    a[0] = std::nan("");
    CHECK(!all_finite(a));
}
