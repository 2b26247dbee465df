#include "orderly/assembler.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>

#include "orderly/text.hpp"

namespace orderly {

std::string to_string(const Diagnostic& d) {
    return "line " + std::to_string(d.line) + ": " + (d.severity == Severity::Error ? "error: " : "warning: ") +
           d.message;
}

namespace {

enum class Section { None, Code, Data, Annotations };

// An operand that is either a number or a label resolved after the first pass.
struct Value {
    std::uint64_t number = 0;
    std::string label;
};

struct PendingInstruction {
    std::size_t line;
    Instruction insn;
    std::optional<Value> imm;  // overrides insn.imm once resolved
};

struct PendingPair {
    std::size_t line;
    Value begin;
    Value end;
};

bool is_identifier(std::string_view s) {
    if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
    for (char c : s) {
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
    }
    return true;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    while (true) {
        const auto pos = s.find(sep);
        out.push_back(trim(s.substr(0, pos)));
        if (pos == std::string_view::npos) break;
        s.remove_prefix(pos + 1);
    }
    return out;
}

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

class Assembler {
public:
    AssemblyResult run(std::string_view source) {
        std::size_t line_no = 0;
        std::istringstream in{std::string(source)};
        std::string raw;
        while (std::getline(in, raw)) {
            ++line_no;
            line_ = line_no;
            std::string_view text = raw;
            if (auto c = text.find(';'); c != std::string_view::npos) text = text.substr(0, c);
            statement(trim(text));
        }
        last_line_ = std::max<std::size_t>(line_no, 1);
        return finish();
    }

private:
    void error(std::string msg, std::size_t line = 0) {
        diags_.push_back({line ? line : line_, std::move(msg), Severity::Error});
    }
    void warning(std::string msg, std::size_t line = 0) {
        diags_.push_back({line ? line : line_, std::move(msg), Severity::Warning});
    }

    void statement(std::string_view text) {
        if (text.empty()) return;
        if (section_ == Section::Annotations && text.front() != '.') {
            annotation(text);
            return;
        }
        if (auto colon = text.find(':'); colon != std::string_view::npos && is_identifier(trim(text.substr(0, colon)))) {
            define_label(std::string(trim(text.substr(0, colon))));
            text = trim(text.substr(colon + 1));
            if (text.empty()) return;
        }
        if (text.front() == '.') directive(text);
        else instruction(text);
    }

    void define_label(const std::string& name) {
        if (labels_.count(name)) {
            error("duplicate label: " + name);
            return;
        }
        switch (section_) {
            case Section::Code: labels_[name] = {true, code_.size()}; break;
            case Section::Data: labels_[name] = {false, words_.size()}; break;
            default: error("label outside .code or .data section: " + name); break;
        }
    }

    // key=value arguments of a directive.
    std::map<std::string, std::uint64_t> directive_args(std::string_view args, std::initializer_list<const char*> keys,
                                                        std::initializer_list<const char*> optional = {}) {
        std::map<std::string, std::uint64_t> out;
        std::istringstream in{std::string(args)};
        std::string tok;
        while (in >> tok) {
            const auto eq = tok.find('=');
            const auto v = eq == std::string::npos ? std::nullopt : parse_number(tok.substr(eq + 1));
            if (!v) {
                error("invalid directive argument: " + tok);
                continue;
            }
            out[lower(tok.substr(0, eq))] = *v;
        }
        for (const char* k : keys) {
            if (!out.count(k)) error(std::string("missing directive argument: ") + k);
        }
        for (const auto& [k, v] : out) {
            bool known = false;
            for (const char* a : keys) known = known || k == a;
            for (const char* a : optional) known = known || k == a;
            if (!known) error("unknown directive argument: " + k);
        }
        return out;
    }

    void directive(std::string_view text) {
        const auto space = text.find_first_of(" \t");
        const std::string name = lower(text.substr(0, space));
        const std::string_view rest = space == std::string_view::npos ? std::string_view{} : trim(text.substr(space));
        if (name == ".enclave") {
            auto a = directive_args(rest, {"base", "size"});
            layout_.base = a["base"];
            layout_.size = a["size"];
            enclave_line_ = line_;
            section_ = Section::None;
        } else if (name == ".code") {
            auto a = directive_args(rest, {"offset"}, {"length"});
            layout_.code_offset = a["offset"];
            if (a.count("length")) declared_code_length_ = a["length"];
            code_line_ = line_;
            section_ = Section::Code;
        } else if (name == ".data") {
            auto a = directive_args(rest, {"offset", "length"});
            layout_.data_offset = a["offset"];
            layout_.data_length = a["length"];
            section_ = Section::Data;
        } else if (name == ".heap") {
            auto a = directive_args(rest, {"offset", "size"});
            layout_.heap_offset = a["offset"];
            layout_.heap_size = a["size"];
            section_ = Section::None;
        } else if (name == ".stack") {
            auto a = directive_args(rest, {"offset", "size"});
            layout_.stack_offset = a["offset"];
            layout_.stack_size = a["size"];
            section_ = Section::None;
        } else if (name == ".word") {
            if (section_ != Section::Data) {
                error(".word outside .data section");
                return;
            }
            for (auto tok : split(rest, ',')) {
                auto v = parse_number(tok);
                if (!v) error("invalid immediate: " + std::string(tok));
                else words_.push_back(*v);
            }
        } else if (name == ".annotations") {
            section_ = Section::Annotations;
            annotations_line_ = line_;
        } else {
            error("unknown directive: " + name);
        }
    }

    Value value(std::string_view tok) {
        if (auto v = parse_number(tok)) return {*v, {}};
        if (is_identifier(tok)) return {0, std::string(tok)};
        error("invalid immediate: " + std::string(tok));
        return {};
    }

    void annotation(std::string_view text) {
        const auto eq = text.find('=');
        if (eq == std::string_view::npos) {
            error("invalid annotation: " + std::string(text));
            return;
        }
        const std::string key = lower(trim(text.substr(0, eq)));
        const std::string_view val = trim(text.substr(eq + 1));
        if (key == "secure" || key == "ocall") {
            if (val.size() < 2 || val.front() != '(' || val.back() != ')') {
                error("invalid annotation pair: " + std::string(val));
                return;
            }
            auto parts = split(val.substr(1, val.size() - 2), ',');
            if (parts.size() != 2) {
                error("invalid annotation pair: " + std::string(val));
                return;
            }
            (key == "secure" ? secure_ : ocall_).push_back({line_, value(parts[0]), value(parts[1])});
        } else if (key == "entry" || key == "sanitised" || key == "exit") {
            if (single_annotations_.count(key)) error("duplicate annotation: " + key);
            single_annotations_[key] = {line_, value(val)};
        } else {
            error("unknown annotation key: " + key);
        }
    }

    std::optional<Register> reg(std::string_view tok) {
        auto r = parse_register(tok);
        if (!r) error("invalid register: " + std::string(tok));
        return r;
    }

    // [reg], [reg+n], [reg-n]
    std::optional<std::pair<Register, std::int32_t>> memory(std::string_view tok) {
        if (tok.size() < 3 || tok.front() != '[' || tok.back() != ']') {
            error("invalid memory operand: " + std::string(tok));
            return std::nullopt;
        }
        std::string_view inner = trim(tok.substr(1, tok.size() - 2));
        const auto sign = inner.find_first_of("+-");
        auto r = reg(trim(inner.substr(0, sign)));
        if (!r) return std::nullopt;
        std::int64_t disp = 0;
        if (sign != std::string_view::npos) {
            auto magnitude = parse_number(trim(inner.substr(sign + 1)));
            if (!magnitude || *magnitude > 0x80000000ULL || (inner[sign] == '+' && *magnitude > 0x7fffffffULL)) {
                error("invalid memory operand: " + std::string(tok));
                return std::nullopt;
            }
            disp = inner[sign] == '-' ? -static_cast<std::int64_t>(*magnitude) : static_cast<std::int64_t>(*magnitude);
        }
        return std::make_pair(*r, static_cast<std::int32_t>(disp));
    }

    void instruction(std::string_view text) {
        if (section_ != Section::Code) {
            error("instruction outside .code section");
            return;
        }
        const auto space = text.find_first_of(" \t");
        const std::string mnemonic = lower(text.substr(0, space));
        const std::string_view rest = space == std::string_view::npos ? std::string_view{} : trim(text.substr(space));
        std::vector<std::string_view> ops;
        if (!rest.empty()) ops = split(rest, ',');

        auto op = parse_opcode(mnemonic);
        if (!op) {
            error("unknown instruction: " + mnemonic);
            return;
        }
        auto arity = [&](std::size_t n) {
            if (ops.size() == n) return true;
            error("operand arity mismatch: " + mnemonic + " expects " + std::to_string(n));
            return false;
        };

        PendingInstruction p{line_, Instruction{}, std::nullopt};
        Instruction& i = p.insn;
        i.op = *op;
        switch (*op) {
            case Opcode::Movi: {
                if (!arity(2)) return;
                auto d = reg(ops[0]);
                if (!d) return;
                i.dst = *d;
                p.imm = value(ops[1]);
                break;
            }
            case Opcode::Movr: {
                if (!arity(2)) return;
                auto d = reg(ops[0]);
                auto s = reg(ops[1]);
                if (!d || !s) return;
                i = Instruction::movr(*d, *s);
                break;
            }
            case Opcode::Load: {
                if (!arity(2)) return;
                auto d = reg(ops[0]);
                auto m = memory(ops[1]);
                if (!d || !m) return;
                i = Instruction::load(*d, m->first, m->second);
                break;
            }
            case Opcode::Store: {
                if (!arity(2)) return;
                auto m = memory(ops[0]);
                auto s = reg(ops[1]);
                if (!m || !s) return;
                i = Instruction::store(m->first, m->second, *s);
                break;
            }
            case Opcode::Add: case Opcode::Sub: case Opcode::And: case Opcode::Or:
            case Opcode::Xor: case Opcode::Shl: case Opcode::Shr: case Opcode::Cmp: {
                if (!arity(2)) return;
                auto d = reg(ops[0]);
                if (!d) return;
                i.dst = *d;
                if (auto s = parse_register(ops[1])) {
                    i.src = *s;
                } else {
                    i.has_imm = true;
                    p.imm = value(ops[1]);
                }
                break;
            }
            case Opcode::Jmp:
            case Opcode::Call:
                if (!arity(1)) return;
                p.imm = value(ops[0]);
                break;
            case Opcode::Jcc: {
                if (!arity(2)) return;
                auto c = parse_condition(ops[0]);
                if (!c) {
                    error("invalid condition: " + std::string(ops[0]));
                    return;
                }
                i.cond = *c;
                p.imm = value(ops[1]);
                break;
            }
            case Opcode::Jmpr: case Opcode::Callr: case Opcode::Push: case Opcode::Pop: {
                if (!arity(1)) return;
                auto r = reg(ops[0]);
                if (!r) return;
                i.dst = *r;
                break;
            }
            case Opcode::Ret:
            case Opcode::Eexit:
                if (!arity(0)) return;
                break;
            case Opcode::Flagset: {
                if (!arity(2)) return;
                auto f = parse_flag(ops[0]);
                auto bit = parse_number(ops[1]);
                if (!f || (*f != FlagId::AC && *f != FlagId::DF)) {
                    error("invalid flag: " + std::string(ops[0]));
                    return;
                }
                if (!bit || *bit > 1) {
                    error("invalid flag bit: " + std::string(ops[1]));
                    return;
                }
                i = Instruction::flagset(*f, *bit == 1);
                break;
            }
            case Opcode::Ocall: {
                if (!arity(1)) return;
                auto id = parse_number(ops[0]);
                if (!id || *id > 0xffff) {
                    error("invalid ocall id: " + std::string(ops[0]));
                    return;
                }
                i.imm = *id;
                break;
            }
        }
        code_.push_back(std::move(p));
    }

    std::optional<std::uint64_t> resolve(const Value& v, std::size_t line) {
        if (v.label.empty()) return v.number;
        auto it = labels_.find(v.label);
        if (it == labels_.end()) {
            error("undefined label: " + v.label, line);
            return std::nullopt;
        }
        return address_of(it->second);
    }

    struct LabelTarget {
        bool code;
        std::size_t index;
    };

    std::uint64_t address_of(const LabelTarget& t) const {
        return t.code ? layout_.base + layout_.code_offset + kInstructionWidth * t.index
                      : layout_.base + layout_.data_offset + 8 * t.index;
    }

    AssemblyResult finish() {
        if (!enclave_line_) error("missing .enclave directive", 1);
        if (!code_line_) error("missing .code directive", 1);

        const std::uint64_t code_bytes = code_.size() * kInstructionWidth;
        if (declared_code_length_) {
            if (code_bytes > *declared_code_length_) {
                error("region overflow: code", code_line_);
            } else if (code_bytes < *declared_code_length_) {
                warning("code shorter than declared length; length set to " + to_hex(code_bytes), code_line_);
            }
        }
        layout_.code_length = code_bytes;
        if (words_.size() * 8 > layout_.data_length) error("region overflow: data", enclave_line_);

        EnclaveImage image;
        image.layout = layout_;
        for (const auto& p : code_) {
            Instruction insn = p.insn;
            if (p.imm) {
                if (auto v = resolve(*p.imm, p.line)) insn.imm = *v;
            }
            image.code.push_back(insn);
        }
        if (!words_.empty()) image.data.push_back({layout_.data_offset, words_});
        for (const auto& [name, target] : labels_) image.symbols[name] = address_of(target);

        if (annotations_line_) {
            TransitionAnnotations ann;
            auto single = [&](const char* key, Address& out) {
                auto it = single_annotations_.find(key);
                if (it == single_annotations_.end()) {
                    error(std::string("missing annotation: ") + key, annotations_line_);
                    return;
                }
                if (auto v = resolve(it->second.second, it->second.first)) out = *v;
            };
            single("entry", ann.entry_address);
            single("sanitised", ann.entry_sanitisation_done);
            single("exit", ann.exit_address);
            auto pairs = [&](const std::vector<PendingPair>& in, std::vector<AddressPair>& out) {
                for (const auto& p : in) {
                    auto b = resolve(p.begin, p.line);
                    auto e = resolve(p.end, p.line);
                    if (b && e) out.push_back({*b, *e});
                }
            };
            pairs(secure_, ann.secure);
            pairs(ocall_, ann.ocall);
            image.annotations = ann;
        }

        const bool parse_failed = std::any_of(diags_.begin(), diags_.end(),
                                              [](const Diagnostic& d) { return d.severity == Severity::Error; });
        if (!parse_failed) {
            for (auto& e : validate_image(image)) error(e, enclave_line_ ? enclave_line_ : 1);
        }
        for (auto& d : diags_) d.line = std::min(std::max<std::size_t>(d.line, 1), last_line_);

        AssemblyResult result;
        result.diagnostics = std::move(diags_);
        const bool failed = std::any_of(result.diagnostics.begin(), result.diagnostics.end(),
                                        [](const Diagnostic& d) { return d.severity == Severity::Error; });
        if (!failed) result.image = std::move(image);
        return result;
    }

    std::vector<Diagnostic> diags_;
    std::size_t line_ = 0;
    std::size_t last_line_ = 1;
    Section section_ = Section::None;
    EnclaveLayout layout_;
    std::optional<std::uint64_t> declared_code_length_;
    std::size_t enclave_line_ = 0;
    std::size_t code_line_ = 0;
    std::size_t annotations_line_ = 0;
    std::map<std::string, LabelTarget> labels_;
    std::vector<PendingInstruction> code_;
    std::vector<std::uint64_t> words_;
    std::map<std::string, std::pair<std::size_t, Value>> single_annotations_;
    std::vector<PendingPair> secure_;
    std::vector<PendingPair> ocall_;
};

}  // namespace

AssemblyResult assemble(std::string_view source) { return Assembler{}.run(source); }

}  // namespace orderly
