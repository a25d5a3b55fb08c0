#pragma once

#include <algorithm>
#include <optional>
#include <unordered_set>
#include <vector>

#include "bitfusion/fusion.hpp"
#include "bitfusion/scratchpad.hpp"

namespace bitfusion {

struct ArrayGeometry {
    unsigned rows = 8;
    unsigned cols = 8;
    unsigned bricks_per_unit = kBricksPerUnit;
    unsigned buffer_access_bits = 32;

    constexpr bool valid() const {
        return rows >= 1 && cols >= 1 && bricks_per_unit == kBricksPerUnit &&
               buffer_access_bits % 16 == 0 && buffer_access_bits >= 16;
    }
    constexpr unsigned units() const { return rows * cols; }
};

enum class ComputeOp { MulAdd, Max };

// Per-column output stage: optional max pooling over consecutive emissions,
// then activation, then arithmetic-shift requantization with saturation.
struct ColumnPostUnit {
    bool pool_max = false;
    unsigned pool_window = 1;
    bool relu = false;
    unsigned requant_shift = 0;
    unsigned out_bits = 32;

    // pooling state
    std::int64_t pool_acc = 0;
    unsigned pool_fill = 0;

    std::int64_t apply_post(std::int64_t v) const {
        if (relu && v < 0) v = 0;
        return shift_saturate(v, requant_shift, out_bits);
    }

    // Feeds one accumulated partial sum; returns the finished output once the
    // pooling window (if any) completes.
    std::optional<std::int64_t> feed(std::int32_t psum) {
        if (!pool_max || pool_window <= 1) {
            return apply_post(psum);
        }
        pool_acc = (pool_fill == 0) ? psum : std::max<std::int64_t>(pool_acc, psum);
        if (++pool_fill < pool_window) return std::nullopt;
        pool_fill = 0;
        return apply_post(pool_acc);
    }
};

inline std::int64_t column_post(std::int32_t psum, ColumnPostUnit& unit) {
    const auto out = unit.feed(psum);
    return out ? *out : 0;
}

// Role a tile loop plays when mapped onto the array.
enum class TileRole {
    Wave,      // advances outputs over time (batch rows, output positions)
    Column,    // spreads outputs across array columns (output channels)
    Reduction, // folded into the partial-sum chain (input channels, kernel taps)
};

struct TileLoop {
    std::uint64_t extent = 1;
    TileRole role = TileRole::Reduction;
    bool has_ib = false;
    std::uint64_t ib_stride = 0;
    bool has_wb = false;
    std::uint64_t wb_stride = 0;
    bool has_ob = false;
    std::uint64_t ob_stride = 0; // stride 0 on a wave loop: pooled window dim
};

struct TileSpec {
    std::vector<TileLoop> loops;
    std::uint64_t ib_base = 0;
    std::uint64_t wb_base = 0;
    std::uint64_t ob_base = 0;
    bool has_weights = true;
    ComputeOp op = ComputeOp::MulAdd;
    // When false, emitted values are raw partial sums kept resident in OBUF
    // for a later pass over the remaining reduction tiles.
    bool finalize = true;
};

struct TileStats {
    std::uint64_t cycles = 0;
    std::uint64_t fill_cycles = 0;
    std::uint64_t compute_waves = 0; // systolic steps of the whole array
    std::uint64_t macs = 0;
    std::uint64_t brick_madds = 0;
    std::uint64_t unit_waves = 0;
    std::uint64_t tree_level_ops = 0;
    std::uint64_t psum_overflows = 0;
    std::uint64_t outputs_emitted = 0;

    TileStats& operator+=(const TileStats& o) {
        cycles += o.cycles;
        fill_cycles += o.fill_cycles;
        compute_waves += o.compute_waves;
        macs += o.macs;
        brick_madds += o.brick_madds;
        unit_waves += o.unit_waves;
        tree_level_ops += o.tree_level_ops;
        psum_overflows += o.psum_overflows;
        outputs_emitted += o.outputs_emitted;
        return *this;
    }
};

// The systolic array for one instruction block: a rows x cols grid of fusion
// units, border input buffers feeding rows, per-unit weight buffers, and
// column accumulators with post units above the output buffer. Fusion units
// hold no input/output/psum storage of their own; only weight state and the
// small temporal accumulator exist per unit.
class SystolicArray {
public:
    SystolicArray(const ArrayGeometry& geom, const FusionConfig& config,
                  bool inputs_signed, bool weights_signed, ColumnPostUnit post_template,
                  std::uint64_t ibuf_bits, std::uint64_t wbuf_bits, std::uint64_t obuf_bits)
        : geom_(geom),
          config_(config),
          inputs_signed_(inputs_signed),
          weights_signed_(weights_signed),
          ibuf_(ScratchpadKind::Ibuf, ibuf_bits, geom.rows, geom.buffer_access_bits),
          wbuf_(ScratchpadKind::Wbuf, wbuf_bits, geom.units(), geom.buffer_access_bits),
          obuf_(ScratchpadKind::Obuf, obuf_bits, geom.cols, geom.buffer_access_bits),
          post_(geom.cols, post_template),
          pool_slots_(geom.cols) {
        BF_CHECK(geom.valid(), "invalid array geometry");
        BF_CHECK(config.valid(), "invalid fusion config");
        BF_CHECK(geom.buffer_access_bits >= std::max(config.input_bits, config.weight_bits),
                 "buffer access width below operand bitwidth");
    }

    Scratchpad& ibuf() { return ibuf_; }
    Scratchpad& wbuf() { return wbuf_; }
    Scratchpad& obuf() { return obuf_; }
    const Scratchpad& ibuf() const { return ibuf_; }
    const Scratchpad& wbuf() const { return wbuf_; }
    const Scratchpad& obuf() const { return obuf_; }
    const FusionConfig& config() const { return config_; }
    const ArrayGeometry& geometry() const { return geom_; }

    void mark_output_valid(std::uint64_t elem_bit_addr) { valid_outputs_.insert(elem_bit_addr); }
    void clear_output_valid() { valid_outputs_.clear(); }
    bool output_valid(std::uint64_t elem_bit_addr) const {
        return valid_outputs_.count(elem_bit_addr) != 0;
    }

    TileStats run_tile(const TileSpec& spec) {
        std::vector<const TileLoop*> wave_loops, col_loops, red_loops;
        for (const TileLoop& l : spec.loops) {
            switch (l.role) {
                case TileRole::Wave: wave_loops.push_back(&l); break;
                case TileRole::Column: col_loops.push_back(&l); break;
                case TileRole::Reduction: red_loops.push_back(&l); break;
            }
        }
        const std::uint64_t waves = extent_product(wave_loops);
        const std::uint64_t columns = extent_product(col_loops);
        const std::uint64_t reduction = extent_product(red_loops);

        const unsigned lanes = config_.fused_pe_count();
        const unsigned tc = config_.temporal_cycles();
        const std::uint64_t red_chunk = std::uint64_t(geom_.rows) * lanes;
        const std::uint64_t n_red_chunks = ceil_div(reduction, red_chunk);
        const std::uint64_t n_col_chunks = ceil_div(columns, geom_.cols);

        const bool pooled = std::any_of(spec.loops.begin(), spec.loops.end(), [](const TileLoop& l) {
            return l.role == TileRole::Wave && l.has_ob && l.ob_stride == 0;
        });

        TileStats stats;
        stats.fill_cycles = geom_.rows + geom_.cols - 1;
        stats.compute_waves = n_col_chunks * waves * n_red_chunks;
        stats.cycles = stats.fill_cycles + stats.compute_waves * tc;
        stats.unit_waves = stats.compute_waves * geom_.units();
        stats.tree_level_ops = stats.unit_waves * 2; // two shift-add tree levels per 16-brick unit

        std::vector<std::uint64_t> wave_it(wave_loops.size(), 0);
        std::vector<std::uint64_t> col_it(col_loops.size(), 0);
        std::vector<std::uint64_t> red_it(red_loops.size(), 0);

        for (std::uint64_t cc = 0; cc < n_col_chunks; ++cc) {
            for (std::uint64_t w = 0; w < waves; ++w) {
                set_odometer(wave_loops, w, wave_it);
                for (unsigned cp = 0; cp < geom_.cols; ++cp) {
                    const std::uint64_t c = cc * geom_.cols + cp;
                    if (c >= columns) break;
                    set_odometer(col_loops, c, col_it);

                    std::int32_t acc = 0;
                    bool acc_init = false;
                    for (std::uint64_t r = 0; r < reduction; ++r) {
                        set_odometer(red_loops, r, red_it);
                        const unsigned row = static_cast<unsigned>((r / lanes) % geom_.rows);
                        const std::uint64_t ib_addr = spec.ib_base +
                            walk_offset(wave_loops, wave_it, &TileLoop::has_ib, &TileLoop::ib_stride) +
                            walk_offset(col_loops, col_it, &TileLoop::has_ib, &TileLoop::ib_stride) +
                            walk_offset(red_loops, red_it, &TileLoop::has_ib, &TileLoop::ib_stride);
                        const std::uint64_t raw_in =
                            ibuf_.extract(row, ib_addr, config_.input_bits);
                        const std::int64_t in_val =
                            interpret(raw_in, config_.input_bits, inputs_signed_);

                        ++stats.macs;
                        if (spec.op == ComputeOp::Max) {
                            const std::int32_t v = static_cast<std::int32_t>(in_val);
                            acc = acc_init ? std::max(acc, v) : v;
                            acc_init = true;
                            continue;
                        }

                        std::int64_t wt_val = 1;
                        if (spec.has_weights) {
                            const unsigned unit = row * geom_.cols + cp;
                            const std::uint64_t wb_addr = spec.wb_base +
                                walk_offset(wave_loops, wave_it, &TileLoop::has_wb, &TileLoop::wb_stride) +
                                walk_offset(col_loops, col_it, &TileLoop::has_wb, &TileLoop::wb_stride) +
                                walk_offset(red_loops, red_it, &TileLoop::has_wb, &TileLoop::wb_stride);
                            const std::uint64_t raw_wt =
                                wbuf_.extract(unit, wb_addr, config_.weight_bits);
                            wt_val = interpret(raw_wt, config_.weight_bits, weights_signed_);
                        }
                        const std::int32_t product = configured_multiply(
                            in_val, inputs_signed_, wt_val, spec.has_weights && weights_signed_,
                            config_, &stats.psum_overflows);
                        stats.brick_madds += config_.spatial_footprint() * tc;
                        bool ovf = false;
                        acc = add_wrap32(acc, product, &ovf);
                        if (ovf) ++stats.psum_overflows;
                    }

                    emit(spec, pooled, wave_loops, wave_it, col_loops, col_it, cp, acc, stats);
                }
            }
        }
        return stats;
    }

private:
    template <typename Flag, typename Stride>
    static std::uint64_t walk_offset(const std::vector<const TileLoop*>& loops,
                                     const std::vector<std::uint64_t>& iters, Flag flag,
                                     Stride stride) {
        std::uint64_t off = 0;
        for (std::size_t i = 0; i < loops.size(); ++i) {
            if ((*loops[i]).*flag) off += iters[i] * ((*loops[i]).*stride);
        }
        return off;
    }

    static std::uint64_t extent_product(const std::vector<const TileLoop*>& loops) {
        std::uint64_t p = 1;
        for (const TileLoop* l : loops) p *= l->extent;
        return p;
    }

    // Row-major odometer: first loop in declaration order varies slowest.
    static void set_odometer(const std::vector<const TileLoop*>& loops, std::uint64_t linear,
                             std::vector<std::uint64_t>& out) {
        for (std::size_t i = loops.size(); i-- > 0;) {
            out[i] = linear % loops[i]->extent;
            linear /= loops[i]->extent;
        }
    }

    void emit(const TileSpec& spec, bool pooled,
              const std::vector<const TileLoop*>& wave_loops,
              const std::vector<std::uint64_t>& wave_it,
              const std::vector<const TileLoop*>& col_loops,
              const std::vector<std::uint64_t>& col_it, unsigned col_port, std::int32_t psum,
              TileStats& stats) {
        const std::uint64_t addr = spec.ob_base +
            walk_offset(wave_loops, wave_it, &TileLoop::has_ob, &TileLoop::ob_stride) +
            walk_offset(col_loops, col_it, &TileLoop::has_ob, &TileLoop::ob_stride);
        ColumnPostUnit& post = post_[col_port];

        if (pooled) {
            // The pooling register lives in the post unit: the window's raw
            // partial sums never touch the output buffer.
            PoolSlot& slot = pool_slots_[col_port];
            if (slot.active && slot.addr == addr) {
                slot.value = std::max<std::int64_t>(slot.value, psum);
            } else {
                BF_CHECK(!slot.active, "pooled window interleaved across outputs");
                slot = PoolSlot{true, addr, psum};
            }
            bool window_done = true;
            for (std::size_t i = 0; i < wave_loops.size(); ++i) {
                const TileLoop& l = *wave_loops[i];
                if (l.has_ob && l.ob_stride == 0 && wave_it[i] + 1 != l.extent) {
                    window_done = false;
                    break;
                }
            }
            if (!window_done) return;
            const std::int64_t out = post.apply_post(slot.value);
            slot.active = false;
            obuf_.write_value(addr, post.out_bits, static_cast<std::uint64_t>(out));
            ++stats.outputs_emitted;
            return;
        }

        std::int32_t value = psum;
        if (output_valid(addr)) {
            const std::int64_t prior =
                interpret(obuf_.read_counted(addr, 32), 32, true);
            bool ovf = false;
            value = add_wrap32(static_cast<std::int32_t>(prior), psum, &ovf);
            if (ovf) ++stats.psum_overflows;
        }
        if (spec.finalize) {
            const std::int64_t out = post.apply_post(value);
            obuf_.write_value(addr, post.out_bits, static_cast<std::uint64_t>(out));
            valid_outputs_.erase(addr);
        } else {
            obuf_.write_value(addr, 32, static_cast<std::uint32_t>(value));
            mark_output_valid(addr);
        }
        ++stats.outputs_emitted;
    }

    struct PoolSlot {
        bool active = false;
        std::uint64_t addr = 0;
        std::int64_t value = 0;
    };

    ArrayGeometry geom_;
    FusionConfig config_;
    bool inputs_signed_;
    bool weights_signed_;
    Scratchpad ibuf_;
    Scratchpad wbuf_;
    Scratchpad obuf_;
    std::vector<ColumnPostUnit> post_;
    std::vector<PoolSlot> pool_slots_;
    std::unordered_set<std::uint64_t> valid_outputs_;
};

struct MatvecResult {
    std::vector<std::int32_t> outputs;
    TileStats stats;
    std::uint64_t ibuf_reads = 0;
    std::uint64_t wbuf_reads = 0;
    std::uint64_t obuf_writes = 0;
};

// One matrix-vector product run as a single tile: outputs[j] = sum_i
// inputs[i] * weights[i*m + j]. Operands are deposited into fresh buffers
// first, so the returned counters cover exactly this product.
inline MatvecResult systolic_matvec(std::span<const std::int64_t> inputs, bool inputs_signed,
                                    std::span<const std::int64_t> weights, bool weights_signed,
                                    std::size_t m, const FusionConfig& config,
                                    const ArrayGeometry& geom) {
    const std::size_t k = inputs.size();
    if (m == 0 || k == 0 || weights.size() != k * m) {
        throw ConfigError("systolic_matvec: dimension mismatch");
    }
    const std::uint64_t ib_bits = std::uint64_t(k) * config.input_bits;
    const std::uint64_t wb_bits = std::uint64_t(k) * m * config.weight_bits;
    const std::uint64_t ob_bits = std::uint64_t(m) * 32;

    SystolicArray array(geom, config, inputs_signed, weights_signed, ColumnPostUnit{},
                        std::max<std::uint64_t>(ib_bits, geom.buffer_access_bits),
                        std::max<std::uint64_t>(wb_bits, geom.buffer_access_bits),
                        std::max<std::uint64_t>(ob_bits, geom.buffer_access_bits));

    BitStore staging(std::max(ib_bits, wb_bits));
    for (std::size_t i = 0; i < k; ++i) {
        if (!fits(inputs[i], config.input_bits, inputs_signed)) {
            throw RangeError("systolic_matvec: input out of range");
        }
        staging.write(i * config.input_bits, config.input_bits,
                      static_cast<std::uint64_t>(inputs[i]));
    }
    array.ibuf().deposit(0, ib_bits, staging, 0);
    // Weights land transposed (column-major by output) so a unit's lanes are
    // contiguous in its buffer.
    for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t i = 0; i < k; ++i) {
            if (!fits(weights[i * m + j], config.weight_bits, weights_signed)) {
                throw RangeError("systolic_matvec: weight out of range");
            }
            staging.write((j * k + i) * config.weight_bits, config.weight_bits,
                          static_cast<std::uint64_t>(weights[i * m + j]));
        }
    }
    array.wbuf().deposit(0, wb_bits, staging, 0);

    TileSpec spec;
    spec.loops = {
        TileLoop{m, TileRole::Column, false, 0, true, std::uint64_t(k) * config.weight_bits,
                 true, 32},
        TileLoop{k, TileRole::Reduction, true, config.input_bits, true, config.weight_bits,
                 false, 0},
    };
    MatvecResult res;
    res.stats = array.run_tile(spec);
    res.outputs.reserve(m);
    for (std::size_t j = 0; j < m; ++j) {
        res.outputs.push_back(static_cast<std::int32_t>(
            interpret(array.obuf().read_value(j * 32, 32), 32, true)));
    }
    res.ibuf_reads = array.ibuf().data_array_reads();
    res.wbuf_reads = array.wbuf().data_array_reads();
    res.obuf_writes = array.obuf().data_array_writes();
    return res;
}

} // namespace bitfusion
