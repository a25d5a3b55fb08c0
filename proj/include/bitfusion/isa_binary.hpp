#pragma once

#include <cstring>
#include <span>
#include <vector>

#include "bitfusion/isa.hpp"

// Binary block format: magic "BFIS", one version byte, a little-endian u32
// count of 64-bit words, then the words. Instructions are fixed-width 64-bit
// words with the opcode in the low byte; a setup word is followed by three
// operand words holding the input/output/weight base addresses.

namespace bitfusion {

namespace wire {

constexpr std::uint8_t kMagic[4] = {'B', 'F', 'I', 'S'};
constexpr std::uint8_t kVersion = 1;

enum Opcode : std::uint8_t {
    kSetup = 0x01,
    kBlockEnd = 0x02,
    kLoop = 0x03,
    kCompute = 0x04,
    kGenAddr = 0x05,
    kLdMem = 0x06,
    kStMem = 0x07,
    kRdBuf = 0x08,
    kWrBuf = 0x09,
};

constexpr std::uint64_t kMax48 = (std::uint64_t{1} << 48) - 1;
constexpr std::uint64_t kMax40 = (std::uint64_t{1} << 40) - 1;

inline std::uint64_t field(std::uint64_t value, unsigned lsb, std::uint64_t limit,
                           const char* what) {
    if (value > limit) throw ConfigError(std::string("encode: ") + what + " field overflows");
    return value << lsb;
}

} // namespace wire

inline void encode_block(const InstructionBlock& block, std::vector<std::uint64_t>& words) {
    using namespace wire;
    const ValidationReport report = validate(block);
    if (!report.ok()) {
        throw ConfigError("encode: block fails validation:\n" + report.to_string());
    }
    for (const Instruction& inst : block.instructions) {
        if (const auto* s = std::get_if<SetupInst>(&inst)) {
            std::uint64_t flags = (s->inputs_signed ? 1u : 0u) | (s->weights_signed ? 2u : 0u) |
                                  (s->relu ? 4u : 0u);
            words.push_back(kSetup | field(s->input_bits, 8, 0xFF, "ibits") |
                            field(s->weight_bits, 16, 0xFF, "wbits") |
                            field(s->output_bits, 24, 0xFF, "obits") |
                            field(s->requant_shift, 32, 0xFF, "shift") |
                            field(flags, 40, 0xFF, "flags") |
                            field(s->pool_window, 48, 0xFFFF, "pool"));
            words.push_back(s->ibuf_base);
            words.push_back(s->obuf_base);
            words.push_back(s->wbuf_base);
        } else if (const auto* e = std::get_if<BlockEndInst>(&inst)) {
            words.push_back(kBlockEnd | field(e->next_inst, 8, kMax48, "next"));
        } else if (const auto* l = std::get_if<LoopInst>(&inst)) {
            words.push_back(kLoop | field(l->loop_id, 8, 0xFF, "loop id") |
                            field(l->iterations, 16, kMax48, "iterations"));
        } else if (const auto* c = std::get_if<ComputeInst>(&inst)) {
            words.push_back(kCompute |
                            field(c->op == ComputeOp::Max ? 1 : 0, 8, 0xFF, "op"));
        } else if (const auto* g = std::get_if<GenAddrInst>(&inst)) {
            words.push_back(kGenAddr | field(static_cast<unsigned>(g->target), 8, 0xFF, "target") |
                            field(g->loop_id, 16, 0xFF, "loop id") |
                            field(g->stride, 24, kMax40, "stride"));
        } else if (const auto* m = std::get_if<LdMemInst>(&inst)) {
            words.push_back(kLdMem | field(static_cast<unsigned>(m->target), 8, 0xFF, "buf") |
                            field(m->num_words, 16, kMax48, "words"));
        } else if (const auto* m2 = std::get_if<StMemInst>(&inst)) {
            words.push_back(kStMem | field(static_cast<unsigned>(m2->target), 8, 0xFF, "buf") |
                            field(m2->num_words, 16, kMax48, "words"));
        } else if (const auto* r = std::get_if<RdBufInst>(&inst)) {
            words.push_back(kRdBuf | field(static_cast<unsigned>(r->target), 8, 0xFF, "buf"));
        } else if (const auto* w = std::get_if<WrBufInst>(&inst)) {
            words.push_back(kWrBuf | field(static_cast<unsigned>(w->target), 8, 0xFF, "buf"));
        }
    }
}

inline std::vector<std::uint8_t> encode(std::span<const InstructionBlock> blocks) {
    using namespace wire;
    std::vector<std::uint64_t> words;
    for (const InstructionBlock& b : blocks) encode_block(b, words);

    std::vector<std::uint8_t> bytes;
    bytes.reserve(9 + words.size() * 8);
    bytes.insert(bytes.end(), std::begin(kMagic), std::end(kMagic));
    bytes.push_back(kVersion);
    const std::uint32_t count = static_cast<std::uint32_t>(words.size());
    for (unsigned i = 0; i < 4; ++i) bytes.push_back(std::uint8_t(count >> (8 * i)));
    for (std::uint64_t w : words) {
        for (unsigned i = 0; i < 8; ++i) bytes.push_back(std::uint8_t(w >> (8 * i)));
    }
    return bytes;
}

inline std::vector<std::uint8_t> encode(const InstructionBlock& block) {
    return encode(std::span<const InstructionBlock>(&block, 1));
}

namespace detail {

inline ScratchpadKind decode_buf(std::uint64_t v) {
    if (v > 2) throw ParseError("decode: bad scratchpad field");
    return static_cast<ScratchpadKind>(v);
}

} // namespace detail

inline std::vector<InstructionBlock> decode(std::span<const std::uint8_t> bytes) {
    using namespace wire;
    if (bytes.empty()) return {};
    if (bytes.size() < 9 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
        throw ParseError("decode: missing BFIS magic");
    }
    if (bytes[4] != kVersion) throw ParseError("decode: unsupported version");
    std::uint32_t count = 0;
    for (unsigned i = 0; i < 4; ++i) count |= std::uint32_t(bytes[5 + i]) << (8 * i);
    if (bytes.size() != 9 + std::size_t(count) * 8) {
        throw ParseError("decode: truncated or oversized stream");
    }

    auto word_at = [&](std::size_t idx) {
        std::uint64_t w = 0;
        for (unsigned i = 0; i < 8; ++i) w |= std::uint64_t(bytes[9 + idx * 8 + i]) << (8 * i);
        return w;
    };

    std::vector<InstructionBlock> blocks;
    InstructionBlock current;
    bool in_block = false;
    for (std::size_t idx = 0; idx < count; ++idx) {
        const std::uint64_t w = word_at(idx);
        const std::uint8_t opcode = std::uint8_t(w & 0xFF);
        Instruction inst;
        switch (opcode) {
            case kSetup: {
                SetupInst s;
                s.input_bits = unsigned((w >> 8) & 0xFF);
                s.weight_bits = unsigned((w >> 16) & 0xFF);
                s.output_bits = unsigned((w >> 24) & 0xFF);
                s.requant_shift = unsigned((w >> 32) & 0xFF);
                const unsigned flags = unsigned((w >> 40) & 0xFF);
                s.inputs_signed = flags & 1;
                s.weights_signed = flags & 2;
                s.relu = flags & 4;
                s.pool_window = unsigned((w >> 48) & 0xFFFF);
                if (idx + 3 >= count) throw ParseError("decode: setup missing base-address words");
                s.ibuf_base = word_at(idx + 1);
                s.obuf_base = word_at(idx + 2);
                s.wbuf_base = word_at(idx + 3);
                idx += 3;
                if (in_block) throw ParseError("decode: setup inside a block");
                in_block = true;
                current.instructions.clear();
                inst = s;
                break;
            }
            case kBlockEnd:
                inst = BlockEndInst{(w >> 8) & kMax48};
                break;
            case kLoop:
                inst = LoopInst{unsigned((w >> 8) & 0xFF), (w >> 16) & kMax48};
                break;
            case kCompute:
                inst = ComputeInst{((w >> 8) & 0xFF) ? ComputeOp::Max : ComputeOp::MulAdd};
                break;
            case kGenAddr: {
                const std::uint64_t t = (w >> 8) & 0xFF;
                if (t > 4) throw ParseError("decode: bad gen-addr target");
                inst = GenAddrInst{static_cast<GenAddrTarget>(t), unsigned((w >> 16) & 0xFF),
                                   (w >> 24) & kMax40};
                break;
            }
            case kLdMem:
                inst = LdMemInst{detail::decode_buf((w >> 8) & 0xFF), (w >> 16) & kMax48};
                break;
            case kStMem:
                inst = StMemInst{detail::decode_buf((w >> 8) & 0xFF), (w >> 16) & kMax48};
                break;
            case kRdBuf:
                inst = RdBufInst{detail::decode_buf((w >> 8) & 0xFF)};
                break;
            case kWrBuf:
                inst = WrBufInst{detail::decode_buf((w >> 8) & 0xFF)};
                break;
            default:
                throw ParseError("decode: unknown opcode " + std::to_string(opcode));
        }
        if (!in_block) throw ParseError("decode: instruction outside a block");
        current.instructions.push_back(inst);
        if (opcode == kBlockEnd) {
            blocks.push_back(std::move(current));
            current = InstructionBlock{};
            in_block = false;
        }
    }
    if (in_block) throw ParseError("decode: unterminated block");
    return blocks;
}

} // namespace bitfusion
