#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "bitfusion/array.hpp"
#include "bitfusion/fusion.hpp"
#include "bitfusion/scratchpad.hpp"

namespace bitfusion {

// Address stream a gen-addr instruction contributes to. The on-chip targets
// drive buffer-side walks, mem-in/mem-out drive the off-chip side of
// ld-mem/st-mem.
enum class GenAddrTarget { Ibuf, Obuf, Wbuf, MemIn, MemOut };

inline const char* to_string(GenAddrTarget t) {
    switch (t) {
        case GenAddrTarget::Ibuf: return "ibuf";
        case GenAddrTarget::Obuf: return "obuf";
        case GenAddrTarget::Wbuf: return "wbuf";
        case GenAddrTarget::MemIn: return "mem-in";
        case GenAddrTarget::MemOut: return "mem-out";
    }
    return "?";
}

inline const char* to_string(ComputeOp op) {
    return op == ComputeOp::MulAdd ? "mul-add" : "max";
}

// Opens a block: fixes the fusion configuration, operand sign modes, the
// output stage (bits/shift/relu/pooling window) and the off-chip base
// address of each buffer's backing tensor for the whole block.
struct SetupInst {
    unsigned input_bits = 8;
    unsigned weight_bits = 8;
    unsigned output_bits = 32;
    unsigned requant_shift = 0;
    bool inputs_signed = false;
    bool weights_signed = true;
    bool relu = false;
    unsigned pool_window = 0; // 0 or 1: no pooling
    std::uint64_t ibuf_base = 0; // off-chip bit addresses
    std::uint64_t obuf_base = 0;
    std::uint64_t wbuf_base = 0;

    bool operator==(const SetupInst&) const = default;
};

struct BlockEndInst {
    std::uint64_t next_inst = 0;
    bool operator==(const BlockEndInst&) const = default;
};

struct LoopInst {
    unsigned loop_id = 0;
    std::uint64_t iterations = 1;
    bool operator==(const LoopInst&) const = default;
};

struct ComputeInst {
    ComputeOp op = ComputeOp::MulAdd;
    bool operator==(const ComputeInst&) const = default;
};

// Attaches a loop's stride to the address program of the next ld-mem,
// st-mem, rd-buf or wr-buf instruction. Strides are in bits.
struct GenAddrInst {
    GenAddrTarget target = GenAddrTarget::MemIn;
    unsigned loop_id = 0;
    std::uint64_t stride = 0;
    bool operator==(const GenAddrInst&) const = default;
};

struct LdMemInst {
    ScratchpadKind target = ScratchpadKind::Ibuf;
    std::uint64_t num_words = 0; // element count; element width follows the setup
    bool operator==(const LdMemInst&) const = default;
};

struct StMemInst {
    ScratchpadKind target = ScratchpadKind::Obuf;
    std::uint64_t num_words = 0;
    bool operator==(const StMemInst&) const = default;
};

struct RdBufInst {
    ScratchpadKind target = ScratchpadKind::Ibuf;
    bool operator==(const RdBufInst&) const = default;
};

struct WrBufInst {
    ScratchpadKind target = ScratchpadKind::Obuf;
    bool operator==(const WrBufInst&) const = default;
};

using Instruction = std::variant<SetupInst, BlockEndInst, LoopInst, ComputeInst, GenAddrInst,
                                 LdMemInst, StMemInst, RdBufInst, WrBufInst>;

struct InstructionBlock {
    std::vector<Instruction> instructions;

    bool operator==(const InstructionBlock&) const = default;

    const SetupInst* setup() const {
        if (instructions.empty()) return nullptr;
        return std::get_if<SetupInst>(&instructions.front());
    }
    FusionConfig config() const {
        const SetupInst* s = setup();
        return s ? FusionConfig{s->input_bits, s->weight_bits} : FusionConfig{};
    }
    std::vector<const LoopInst*> loops() const {
        std::vector<const LoopInst*> out;
        for (const Instruction& inst : instructions) {
            if (const auto* l = std::get_if<LoopInst>(&inst)) out.push_back(l);
        }
        return out;
    }
    std::size_t size() const { return instructions.size(); }
};

struct Violation {
    std::size_t index; // instruction index within the block
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
    std::string to_string() const {
        std::string s;
        for (const Violation& v : violations) {
            s += "  [" + std::to_string(v.index) + "] " + v.message + "\n";
        }
        return s;
    }
};

namespace detail {

inline bool is_operational(const Instruction& inst) {
    return std::holds_alternative<LdMemInst>(inst) || std::holds_alternative<StMemInst>(inst) ||
           std::holds_alternative<RdBufInst>(inst) || std::holds_alternative<WrBufInst>(inst);
}

} // namespace detail

inline ValidationReport validate(const InstructionBlock& block) {
    ValidationReport report;
    auto flag = [&](std::size_t i, std::string msg) {
        report.violations.push_back({i, std::move(msg)});
    };

    const auto& insts = block.instructions;
    if (insts.empty()) {
        flag(0, "empty block: no setup");
        return report;
    }
    if (!std::holds_alternative<SetupInst>(insts.front())) {
        flag(0, "no setup: block must begin with a setup instruction");
    }
    if (!std::holds_alternative<BlockEndInst>(insts.back())) {
        flag(insts.size() - 1, "block must end with block-end");
    }

    std::vector<unsigned> loop_ids;
    for (std::size_t i = 0; i < insts.size(); ++i) {
        if (const auto* l = std::get_if<LoopInst>(&insts[i])) {
            for (unsigned id : loop_ids) {
                if (id == l->loop_id) {
                    flag(i, "duplicate loop id " + std::to_string(l->loop_id));
                }
            }
            loop_ids.push_back(l->loop_id);
        }
    }

    for (std::size_t i = 0; i < insts.size(); ++i) {
        const Instruction& inst = insts[i];
        if (i > 0 && std::holds_alternative<SetupInst>(inst)) {
            flag(i, "setup must be the first instruction of a block");
        }
        if (i + 1 < insts.size() && std::holds_alternative<BlockEndInst>(inst)) {
            flag(i, "block-end before the end of the block");
        }
        if (const auto* s = std::get_if<SetupInst>(&inst)) {
            if (!valid_operand_bits(s->input_bits)) flag(i, "input bitwidth must be 2, 4, 8 or 16");
            if (!valid_operand_bits(s->weight_bits)) flag(i, "weight bitwidth must be 2, 4, 8 or 16");
            if (!valid_operand_bits(s->output_bits) && s->output_bits != 32) {
                flag(i, "output bitwidth must be 2, 4, 8, 16 or 32");
            }
            if (s->requant_shift >= 32) flag(i, "requantize shift must be below 32");
        }
        if (const auto* g = std::get_if<GenAddrInst>(&inst)) {
            bool declared = false;
            for (unsigned id : loop_ids) declared |= (id == g->loop_id);
            if (!declared) {
                flag(i, "gen-addr references undeclared loop " + std::to_string(g->loop_id));
            }
            const bool attached = i + 1 < insts.size() &&
                                  (detail::is_operational(insts[i + 1]) ||
                                   std::holds_alternative<GenAddrInst>(insts[i + 1]));
            if (!attached) {
                flag(i, "dangling gen-addr: must precede ld-mem, st-mem, rd-buf or wr-buf");
            }
        }
    }
    return report;
}

} // namespace bitfusion
