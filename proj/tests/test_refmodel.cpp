#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "bitfusion/refmodel.hpp"

using namespace bitfusion;
using namespace bitfusion::ref;

namespace {

Tensor random_tensor(std::vector<std::size_t> shape, unsigned bits, bool is_signed,
                     std::mt19937& rng) {
    Tensor t = Tensor::zeros(std::move(shape), bits, is_signed);
    for (auto& v : t.values) {
        v = min_value(bits, is_signed) + std::int64_t(rng() % (1ull << bits));
    }
    return t;
}

} // namespace

TEST_CASE("gemm_ref basics", "[refmodel]") {
    SECTION("identity times M is M") {
        std::mt19937 rng(3);
        const Tensor m = random_tensor({5, 5}, 8, true, rng);
        Tensor id = Tensor::zeros({5, 5}, 8, true);
        for (std::size_t i = 0; i < 5; ++i) id.at2(i, i) = 1;
        const Tensor out = gemm_ref(id, m);
        CHECK(out.values == m.values);
    }
    SECTION("worked single element") {
        Tensor a = Tensor::zeros({1, 1}, 8, false);
        Tensor b = Tensor::zeros({1, 1}, 8, false);
        a.values[0] = 11;
        b.values[0] = 6;
        CHECK(gemm_ref(a, b).values[0] == 66);
    }
    SECTION("shape mismatch") {
        CHECK_THROWS_AS(gemm_ref(Tensor::zeros({2, 3}), Tensor::zeros({2, 3})), ConfigError);
    }
    SECTION("matches an independent loop order") {
        std::mt19937 rng(5);
        const Tensor a = random_tensor({7, 9}, 8, true, rng);
        const Tensor b = random_tensor({9, 4}, 8, true, rng);
        const Tensor c = gemm_ref(a, b);
        // k-outermost accumulation as the second route.
        Tensor d = Tensor::zeros({7, 4}, 32, true);
        for (std::size_t k = 0; k < 9; ++k) {
            for (std::size_t i = 0; i < 7; ++i) {
                for (std::size_t j = 0; j < 4; ++j) {
                    d.at2(i, j) = add_wrap32(static_cast<std::int32_t>(d.at2(i, j)),
                                             a.at2(i, k) * b.at2(k, j));
                }
            }
        }
        CHECK(c.values == d.values);
    }
}

TEST_CASE("conv_ref basics", "[refmodel]") {
    SECTION("1x1 all-ones kernel sums channels") {
        std::mt19937 rng(7);
        const Tensor x = random_tensor({3, 3, 4}, 4, true, rng);
        Tensor w = Tensor::zeros({1, 1, 1, 4}, 2, false);
        for (auto& v : w.values) v = 1;
        const Tensor out = conv_ref(x, w, 1);
        REQUIRE(out.shape == std::vector<std::size_t>{3, 3, 1});
        for (std::size_t i = 0; i < 9; ++i) {
            std::int64_t sum = 0;
            for (std::size_t c = 0; c < 4; ++c) sum += x.values[i * 4 + c];
            CHECK(out.values[i] == sum);
        }
    }
    SECTION("conv equals gemm on the im2col expansion") {
        std::mt19937 rng(11);
        const Tensor x = random_tensor({6, 6, 3}, 8, true, rng);
        const Tensor w = random_tensor({5, 3, 3, 3}, 4, true, rng);
        const Tensor direct = conv_ref(x, w, 1);

        const Tensor cols = im2col(x, 3, 3, 1);
        Tensor wmat = Tensor::zeros({w.dim(1) * w.dim(2) * w.dim(3), w.dim(0)}, w.bits, true);
        for (std::size_t f = 0; f < w.dim(0); ++f) {
            for (std::size_t t = 0; t < wmat.dim(0); ++t) {
                wmat.at2(t, f) = w.values[f * wmat.dim(0) + t];
            }
        }
        const Tensor viagemm = gemm_ref(cols, wmat);
        REQUIRE(viagemm.values == direct.values);
    }
}

TEST_CASE("pool, activation and requantization", "[refmodel]") {
    SECTION("window of one is the identity") {
        std::mt19937 rng(13);
        const Tensor x = random_tensor({4, 4, 2}, 8, true, rng);
        CHECK(pool_ref(x, 1).values == x.values);
    }
    SECTION("max semantics") {
        Tensor x = Tensor::zeros({2, 2, 1}, 8, true);
        x.values = {3, 9, 1, 4};
        CHECK(pool_ref(x, 2).values == std::vector<std::int64_t>{9});
    }
    SECTION("relu is idempotent") {
        std::mt19937 rng(17);
        const Tensor x = random_tensor({4, 4, 3}, 8, true, rng);
        const Tensor once = act_ref(x);
        CHECK(act_ref(once).values == once.values);
        for (auto v : once.values) CHECK(v >= 0);
    }
    SECTION("requant shifts then saturates") {
        Tensor x = Tensor::zeros({1, 4}, 32, true);
        x.values = {66, -7, 100000, -100000};
        const Tensor out = requant_ref(x, 2, 8);
        CHECK(out.values == std::vector<std::int64_t>{16, -2, 127, -128});
    }
}
