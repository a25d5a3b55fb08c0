#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <vector>

#include "bitfusion/fusion.hpp"

using namespace bitfusion;

namespace {

const std::vector<unsigned> kSpatialBits{2, 4, 8};
const std::vector<unsigned> kAllBits{2, 4, 8, 16};

} // namespace

TEST_CASE("fusion config derived quantities", "[fusion]") {
    struct Row {
        unsigned ib, wb, footprint, count, cycles;
    };
    // Footprint * fused_pe_count is always the full 16-brick unit.
    const Row rows[] = {
        {2, 2, 1, 16, 1}, {4, 2, 2, 8, 1},  {2, 4, 2, 8, 1},  {4, 4, 4, 4, 1},
        {8, 2, 4, 4, 1},  {2, 8, 4, 4, 1},  {8, 4, 8, 2, 1},  {8, 8, 16, 1, 1},
        {16, 8, 16, 1, 2}, {8, 16, 16, 1, 2}, {16, 16, 16, 1, 4}, {16, 2, 4, 4, 2},
    };
    for (const Row& r : rows) {
        const FusionConfig c{r.ib, r.wb};
        CAPTURE(r.ib, r.wb);
        CHECK(c.spatial_footprint() == r.footprint);
        CHECK(c.fused_pe_count() == r.count);
        CHECK(c.temporal_cycles() == r.cycles);
        CHECK(c.fused_pe_count() * c.spatial_footprint() == kBricksPerUnit);
    }
}

TEST_CASE("decompose produces exact little-endian 2-bit slices", "[fusion]") {
    SECTION("worked 4-bit unsigned value") {
        const SliceVector s = decompose(11, 4, false);
        REQUIRE(s.count == 2);
        CHECK(s.slices[0].bits == 0b11);
        CHECK_FALSE(s.slices[0].is_signed);
        CHECK(s.slices[1].bits == 0b10);
        CHECK_FALSE(s.slices[1].is_signed);
        CHECK(s.recompose() == 11);
    }
    SECTION("worked 4-bit signed value") {
        const SliceVector s = decompose(-5, 4, true);
        REQUIRE(s.count == 2);
        CHECK(s.slices[0].bits == 0b11);
        CHECK_FALSE(s.slices[0].is_signed);
        CHECK(s.slices[1].bits == 0b10);
        CHECK(s.slices[1].is_signed);
        CHECK(s.recompose() == -5);
    }
    SECTION("zero decomposes to all-zero slices") {
        for (unsigned bits : kAllBits) {
            const SliceVector s = decompose(0, bits, true);
            for (unsigned i = 0; i < s.count; ++i) CHECK(s.slices[i].bits == 0);
            CHECK(s.recompose() == 0);
        }
    }
    SECTION("recomposition is exact over every 4- and 8-bit value") {
        for (unsigned bits : {4u, 8u}) {
            for (int sg = 0; sg < 2; ++sg) {
                const bool is_signed = sg != 0;
                for (std::int64_t v = min_value(bits, is_signed);
                     v <= max_value(bits, is_signed); ++v) {
                    const SliceVector s = decompose(v, bits, is_signed);
                    REQUIRE(s.recompose() == v);
                    // Only the top slice may carry the sign.
                    for (unsigned i = 0; i + 1 < s.count; ++i) {
                        REQUIRE_FALSE(s.slices[i].is_signed);
                    }
                }
            }
        }
    }
    SECTION("out-of-range values are rejected") {
        CHECK_THROWS_AS(decompose(16, 4, false), RangeError);
        CHECK_THROWS_AS(decompose(8, 4, true), RangeError);
        CHECK_THROWS_AS(decompose(-1, 4, false), RangeError);
        CHECK_THROWS_AS(decompose(1, 3, false), RangeError);
    }
}

TEST_CASE("shift table follows the 2i+2j rule", "[fusion]") {
    CHECK(shift_table({4, 4}).flat() == std::vector<unsigned>{0, 2, 2, 4});
    CHECK(shift_table({2, 2}).flat() == std::vector<unsigned>{0});
    CHECK(shift_table({8, 2}).flat() == std::vector<unsigned>{0, 2, 4, 6});

    // shift_table(a,b) is the transpose of shift_table(b,a).
    for (unsigned a : kSpatialBits) {
        for (unsigned b : kSpatialBits) {
            const ShiftTable t = shift_table({a, b});
            const ShiftTable u = shift_table({b, a});
            REQUIRE(t.input_slices == u.weight_slices);
            REQUIRE(t.weight_slices == u.input_slices);
            for (unsigned i = 0; i < t.input_slices; ++i) {
                for (unsigned j = 0; j < t.weight_slices; ++j) {
                    REQUIRE(t.shift(i, j) == u.shift(j, i));
                }
            }
        }
    }
}

TEST_CASE("fused PE multiply worked values", "[fusion]") {
    CHECK(fused_pe_multiply(11, false, 6, false, {4, 4}) == 66);
    for (std::int64_t x = -8; x < 8; ++x) {
        CHECK(fused_pe_multiply(x, true, 0, true, {4, 4}) == 0);
    }
    CHECK_THROWS_AS(fused_pe_multiply(300, false, 1, false, FusionConfig{8, 8}), RangeError);
    CHECK_THROWS_AS(fused_pe_multiply(1, false, 1, false, FusionConfig{16, 8}), ConfigError);
}

TEST_CASE("fused PE multiply is exact for narrow configs, exhaustively", "[fusion]") {
    // The 8x8 exhaustive sweep lives in the acceptance suite; cover the rest
    // here plus a sampled 8-bit check.
    for (unsigned ib : {2u, 4u}) {
        for (unsigned wb : {2u, 4u}) {
            const FusionConfig c{ib, wb};
            for (int xs = 0; xs < 2; ++xs) {
                for (int ws = 0; ws < 2; ++ws) {
                    for (std::int64_t x = min_value(ib, xs); x <= max_value(ib, xs); ++x) {
                        for (std::int64_t w = min_value(wb, ws); w <= max_value(wb, ws); ++w) {
                            REQUIRE(fused_pe_multiply(x, xs, w, ws, c) == x * w);
                        }
                    }
                }
            }
        }
    }
    std::mt19937 rng(7);
    for (int trial = 0; trial < 20000; ++trial) {
        const bool xs = rng() & 1, ws = rng() & 1;
        const std::int64_t x = std::int64_t(rng() % 256) + min_value(8, xs);
        const std::int64_t w = std::int64_t(rng() % 256) + min_value(8, ws);
        REQUIRE(fused_pe_multiply(x, xs, w, ws, FusionConfig{8, 8}) == x * w);
    }
}

TEST_CASE("fusion unit cycle sums one product per lane", "[fusion]") {
    SECTION("mixed 4x2 example on two active lanes") {
        const FusionConfig c{4, 2};
        std::vector<std::int64_t> inputs(c.fused_pe_count(), 0);
        std::vector<std::int64_t> weights(c.fused_pe_count(), 0);
        inputs[0] = 15;
        inputs[1] = 10;
        weights[0] = 1;
        weights[1] = 2;
        CHECK(fusion_unit_cycle(inputs, false, weights, false, 0, c) == 35);
    }
    SECTION("sixteen ternary one-times-one lanes") {
        const FusionConfig c{2, 2};
        std::vector<std::int64_t> ones(16, 1);
        CHECK(fusion_unit_cycle(ones, true, ones, true, 0, c) == 16);
    }
    SECTION("lane count must match the config") {
        std::vector<std::int64_t> v(3, 1);
        CHECK_THROWS_AS(fusion_unit_cycle(v, true, v, true, 0, FusionConfig{2, 2}),
                        ConfigError);
    }
    SECTION("random lanes match a wide-integer dot product") {
        std::mt19937 rng(11);
        for (unsigned ib : kSpatialBits) {
            for (unsigned wb : kSpatialBits) {
                const FusionConfig c{ib, wb};
                for (int trial = 0; trial < 2000; ++trial) {
                    const bool xs = rng() & 1, ws = rng() & 1;
                    std::vector<std::int64_t> x(c.fused_pe_count());
                    std::vector<std::int64_t> w(c.fused_pe_count());
                    std::int64_t expect = 0;
                    const std::int32_t psum_in = static_cast<std::int32_t>(rng());
                    for (std::size_t i = 0; i < x.size(); ++i) {
                        x[i] = min_value(ib, xs) + std::int64_t(rng() % (1ull << ib));
                        w[i] = min_value(wb, ws) + std::int64_t(rng() % (1ull << wb));
                        expect += x[i] * w[i];
                    }
                    const std::int32_t out =
                        fusion_unit_cycle(x, xs, w, ws, psum_in, c);
                    REQUIRE(out == wrap32(psum_in + expect));
                }
            }
        }
    }
}

TEST_CASE("temporal multiply handles 16-bit operands over multiple cycles", "[fusion]") {
    SECTION("worked values") {
        auto r = temporal_multiply(1, true, 1, true, FusionConfig{16, 16});
        CHECK(r.product == 1);
        CHECK(r.cycles == 4);

        r = temporal_multiply(-32768, true, 32767, true, FusionConfig{16, 16});
        CHECK(r.product == -1073709056);
        CHECK(r.cycles == 4);

        r = temporal_multiply(300, true, 7, true, FusionConfig{16, 8});
        CHECK(r.product == 2100);
        CHECK(r.cycles == 2);
    }
    SECTION("spatial configs are rejected") {
        CHECK_THROWS_AS(temporal_multiply(1, true, 1, true, FusionConfig{8, 8}), ConfigError);
        CHECK_THROWS_AS(temporal_multiply(70000, false, 1, true, FusionConfig{16, 16}),
                        RangeError);
    }
    SECTION("random operands match the oracle for every 16-bit config") {
        std::mt19937_64 rng(13);
        for (unsigned ib : kAllBits) {
            for (unsigned wb : kAllBits) {
                const FusionConfig c{ib, wb};
                if (!c.is_temporal()) continue;
                for (int trial = 0; trial < 5000; ++trial) {
                    const bool xs = rng() & 1, ws = rng() & 1;
                    const std::int64_t x = min_value(ib, xs) + std::int64_t(rng() % (1ull << ib));
                    const std::int64_t w = min_value(wb, ws) + std::int64_t(rng() % (1ull << wb));
                    const TemporalResult r = temporal_multiply(x, xs, w, ws, c);
                    REQUIRE(r.product == wrap32(x * w));
                    REQUIRE(r.cycles == c.temporal_cycles());
                }
            }
        }
    }
}

TEST_CASE("partial sums wrap in 32-bit two's complement and report overflow", "[fusion]") {
    const FusionConfig c{8, 8};
    std::vector<std::int64_t> x{127}, w{127};
    std::uint64_t overflows = 0;
    const std::int32_t near_max = 2147483647 - 100;
    const std::int32_t out = fusion_unit_cycle(x, true, w, true, near_max, c, &overflows);
    CHECK(out == wrap32(std::int64_t(near_max) + 127 * 127));
    CHECK(overflows == 1);
}
