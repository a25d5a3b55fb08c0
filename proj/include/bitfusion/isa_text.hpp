#pragma once

#include <charconv>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "bitfusion/isa.hpp"

// Assembly format: one instruction per line, `name field=value ...`,
// `#` starts a comment. A `setup` line opens a block, `block-end` closes it.

namespace bitfusion {

namespace detail {

struct FieldMap {
    std::map<std::string, std::uint64_t, std::less<>> fields;
    std::size_t line;

    std::uint64_t take(std::string_view name, std::optional<std::uint64_t> fallback = {}) {
        auto it = fields.find(name);
        if (it == fields.end()) {
            if (fallback) return *fallback;
            throw ParseError("line " + std::to_string(line) + ": missing field '" +
                             std::string(name) + "'");
        }
        const std::uint64_t v = it->second;
        fields.erase(it);
        return v;
    }

    void expect_empty() const {
        if (!fields.empty()) {
            throw ParseError("line " + std::to_string(line) + ": unknown field '" +
                             fields.begin()->first + "'");
        }
    }
};

inline ScratchpadKind parse_buf(std::uint64_t v, std::size_t line) {
    if (v > 2) throw ParseError("line " + std::to_string(line) + ": bad scratchpad");
    return static_cast<ScratchpadKind>(v);
}

inline std::uint64_t parse_enum(std::string_view tok, std::size_t line,
                                std::initializer_list<std::pair<std::string_view, std::uint64_t>> names) {
    for (const auto& [name, value] : names) {
        if (tok == name) return value;
    }
    // fall through to numeric parse
    std::uint64_t v = 0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size()) {
        throw ParseError("line " + std::to_string(line) + ": bad value '" + std::string(tok) + "'");
    }
    return v;
}

} // namespace detail

inline std::vector<InstructionBlock> assemble(std::string_view text) {
    using detail::parse_enum;
    std::vector<InstructionBlock> blocks;
    InstructionBlock current;
    bool in_block = false;

    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t eol = text.find('\n', pos);
        std::string_view line = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos
                                                                               : eol - pos);
        pos = (eol == std::string_view::npos) ? text.size() + 1 : eol + 1;
        ++line_no;

        if (const auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        std::istringstream ss{std::string(line)};
        std::string name;
        if (!(ss >> name)) continue; // blank line

        detail::FieldMap fm;
        fm.line = line_no;
        std::string tok;
        std::vector<std::pair<std::string, std::string>> raw_fields;
        while (ss >> tok) {
            const auto eq = tok.find('=');
            if (eq == std::string::npos || eq == 0) {
                throw ParseError("line " + std::to_string(line_no) + ": expected field=value, got '" +
                                 tok + "'");
            }
            raw_fields.emplace_back(tok.substr(0, eq), tok.substr(eq + 1));
        }
        auto parse_fields = [&](auto value_parser) {
            for (auto& [k, v] : raw_fields) fm.fields[k] = value_parser(k, v);
        };

        Instruction inst;
        if (name == "setup") {
            parse_fields([&](const std::string& k, const std::string& v) -> std::uint64_t {
                (void)k;
                return parse_enum(v, line_no, {});
            });
            SetupInst s;
            s.input_bits = static_cast<unsigned>(fm.take("ibits"));
            s.weight_bits = static_cast<unsigned>(fm.take("wbits"));
            s.output_bits = static_cast<unsigned>(fm.take("obits", 32));
            s.requant_shift = static_cast<unsigned>(fm.take("shift", 0));
            s.inputs_signed = fm.take("isign", 0) != 0;
            s.weights_signed = fm.take("wsign", 1) != 0;
            s.relu = fm.take("relu", 0) != 0;
            s.pool_window = static_cast<unsigned>(fm.take("pool", 0));
            s.ibuf_base = fm.take("ibase", 0);
            s.obuf_base = fm.take("obase", 0);
            s.wbuf_base = fm.take("wbase", 0);
            fm.expect_empty();
            if (in_block) {
                throw ParseError("line " + std::to_string(line_no) +
                                 ": setup inside a block (missing block-end)");
            }
            in_block = true;
            current.instructions.clear();
            inst = s;
        } else if (name == "block-end") {
            parse_fields([&](const std::string&, const std::string& v) {
                return parse_enum(v, line_no, {});
            });
            BlockEndInst e;
            e.next_inst = fm.take("next", 0);
            fm.expect_empty();
            inst = e;
        } else if (name == "loop") {
            parse_fields([&](const std::string&, const std::string& v) {
                return parse_enum(v, line_no, {});
            });
            LoopInst l;
            l.loop_id = static_cast<unsigned>(fm.take("id"));
            l.iterations = fm.take("iters");
            fm.expect_empty();
            inst = l;
        } else if (name == "compute") {
            parse_fields([&](const std::string&, const std::string& v) {
                return parse_enum(v, line_no, {{"mul-add", 0}, {"max", 1}});
            });
            ComputeInst c;
            c.op = fm.take("op", 0) ? ComputeOp::Max : ComputeOp::MulAdd;
            fm.expect_empty();
            inst = c;
        } else if (name == "gen-addr") {
            parse_fields([&](const std::string&, const std::string& v) {
                return parse_enum(v, line_no,
                                  {{"ibuf", 0}, {"obuf", 1}, {"wbuf", 2}, {"mem-in", 3}, {"mem-out", 4}});
            });
            GenAddrInst g;
            g.target = static_cast<GenAddrTarget>(fm.take("target"));
            if (static_cast<unsigned>(g.target) > 4) {
                throw ParseError("line " + std::to_string(line_no) + ": bad gen-addr target");
            }
            g.loop_id = static_cast<unsigned>(fm.take("loop"));
            g.stride = fm.take("stride");
            fm.expect_empty();
            inst = g;
        } else if (name == "ld-mem" || name == "st-mem") {
            parse_fields([&](const std::string&, const std::string& v) {
                return parse_enum(v, line_no, {{"ibuf", 0}, {"obuf", 1}, {"wbuf", 2}});
            });
            const ScratchpadKind buf = detail::parse_buf(fm.take("buf"), line_no);
            const std::uint64_t words = fm.take("words");
            fm.expect_empty();
            if (name == "ld-mem") {
                inst = LdMemInst{buf, words};
            } else {
                inst = StMemInst{buf, words};
            }
        } else if (name == "rd-buf" || name == "wr-buf") {
            parse_fields([&](const std::string&, const std::string& v) {
                return parse_enum(v, line_no, {{"ibuf", 0}, {"obuf", 1}, {"wbuf", 2}});
            });
            const ScratchpadKind buf = detail::parse_buf(fm.take("buf"), line_no);
            fm.expect_empty();
            if (name == "rd-buf") {
                inst = RdBufInst{buf};
            } else {
                inst = WrBufInst{buf};
            }
        } else {
            throw ParseError("line " + std::to_string(line_no) + ": unknown mnemonic '" + name + "'");
        }

        if (!in_block) {
            throw ParseError("line " + std::to_string(line_no) + ": instruction outside a block");
        }
        current.instructions.push_back(inst);
        if (std::holds_alternative<BlockEndInst>(inst)) {
            blocks.push_back(std::move(current));
            current = InstructionBlock{};
            in_block = false;
        }
    }
    if (in_block) {
        throw ParseError("unterminated block: missing block-end");
    }
    return blocks;
}

inline std::string disassemble(const InstructionBlock& block) {
    std::ostringstream out;
    struct Printer {
        std::ostringstream& out;
        void operator()(const SetupInst& s) {
            out << "setup ibits=" << s.input_bits << " wbits=" << s.weight_bits
                << " obits=" << s.output_bits << " shift=" << s.requant_shift
                << " isign=" << (s.inputs_signed ? 1 : 0) << " wsign=" << (s.weights_signed ? 1 : 0)
                << " relu=" << (s.relu ? 1 : 0) << " pool=" << s.pool_window
                << " ibase=" << s.ibuf_base << " obase=" << s.obuf_base
                << " wbase=" << s.wbuf_base;
        }
        void operator()(const BlockEndInst& e) { out << "block-end next=" << e.next_inst; }
        void operator()(const LoopInst& l) {
            out << "loop id=" << l.loop_id << " iters=" << l.iterations;
        }
        void operator()(const ComputeInst& c) { out << "compute op=" << to_string(c.op); }
        void operator()(const GenAddrInst& g) {
            out << "gen-addr target=" << to_string(g.target) << " loop=" << g.loop_id
                << " stride=" << g.stride;
        }
        void operator()(const LdMemInst& m) {
            out << "ld-mem buf=" << to_string(m.target) << " words=" << m.num_words;
        }
        void operator()(const StMemInst& m) {
            out << "st-mem buf=" << to_string(m.target) << " words=" << m.num_words;
        }
        void operator()(const RdBufInst& b) { out << "rd-buf buf=" << to_string(b.target); }
        void operator()(const WrBufInst& b) { out << "wr-buf buf=" << to_string(b.target); }
    } printer{out};
    for (const Instruction& inst : block.instructions) {
        std::visit(printer, inst);
        out << "\n";
    }
    return out.str();
}

inline std::string disassemble(const std::vector<InstructionBlock>& blocks) {
    std::string out;
    for (const InstructionBlock& b : blocks) {
        out += disassemble(b);
        out += "\n";
    }
    return out;
}

} // namespace bitfusion
