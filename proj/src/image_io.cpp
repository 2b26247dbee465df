#include <json.hpp>

#include "orderly/assembler.hpp"
#include "orderly/text.hpp"

namespace orderly {

namespace {

using ojson = nlohmann::ordered_json;

struct ContainerError {
    std::string message;
};

[[noreturn]] void malformed(const std::string& what) { throw ContainerError{"malformed container: " + what}; }

std::uint64_t hex_field(const ojson& j, const std::string& what) {
    if (!j.is_string()) malformed(what);
    auto v = parse_hex(j.get<std::string>());
    if (!v) malformed(what);
    return *v;
}

std::int64_t signed_hex_field(const ojson& j, const std::string& what) {
    if (!j.is_string()) malformed(what);
    std::string s = j.get<std::string>();
    const bool negative = !s.empty() && s.front() == '-';
    auto v = parse_hex(negative ? std::string_view(s).substr(1) : std::string_view(s));
    if (!v || *v > 0x80000000ULL || (!negative && *v > 0x7fffffffULL)) malformed(what);
    return negative ? -static_cast<std::int64_t>(*v) : static_cast<std::int64_t>(*v);
}

const ojson& member(const ojson& obj, const char* key) {
    if (!obj.is_object() || !obj.contains(key)) malformed(std::string("missing key ") + key);
    return obj.at(key);
}

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

ojson encode_instruction(const Instruction& i) {
    ojson args = ojson::array();
    auto reg = [](Register r) { return std::string(register_name(r)); };
    auto rhs = [&]() { return i.has_imm ? to_hex(i.imm) : reg(i.src); };
    switch (i.op) {
        case Opcode::Movi: args = {reg(i.dst), to_hex(i.imm)}; break;
        case Opcode::Movr: args = {reg(i.dst), reg(i.src)}; break;
        case Opcode::Load: args = {reg(i.dst), reg(i.src), to_signed_hex(i.disp)}; break;
        case Opcode::Store: args = {reg(i.dst), to_signed_hex(i.disp), reg(i.src)}; break;
        case Opcode::Add: case Opcode::Sub: case Opcode::And: case Opcode::Or:
        case Opcode::Xor: case Opcode::Shl: case Opcode::Shr: case Opcode::Cmp:
            args = {reg(i.dst), rhs()};
            break;
        case Opcode::Jmp: case Opcode::Call: case Opcode::Ocall: args.push_back(to_hex(i.imm)); break;
        case Opcode::Jcc: args = {std::string(condition_name(i.cond)), to_hex(i.imm)}; break;
        case Opcode::Jmpr: case Opcode::Callr: case Opcode::Push: case Opcode::Pop: args.push_back(reg(i.dst)); break;
        case Opcode::Flagset: args = {lower(flag_name(i.flag)), to_hex(i.imm)}; break;
        case Opcode::Ret: case Opcode::Eexit: break;
    }
    ojson out;
    out["op"] = std::string(opcode_name(i.op));
    out["args"] = std::move(args);
    return out;
}

Instruction decode_instruction(const ojson& j, std::size_t index) {
    const std::string where = "code[" + std::to_string(index) + "]";
    const ojson& op_j = member(j, "op");
    const ojson& args = member(j, "args");
    if (!op_j.is_string() || !args.is_array()) malformed(where);
    const std::string name = op_j.get<std::string>();
    auto op = parse_opcode(name);
    if (!op || name != opcode_name(*op)) throw ContainerError{"unknown opcode: " + name};

    auto arity = [&](std::size_t n) {
        if (args.size() != n) malformed(where + " arity");
    };
    auto reg = [&](std::size_t k) {
        if (!args[k].is_string()) malformed(where);
        auto r = parse_register(args[k].get<std::string>());
        if (!r || args[k].get<std::string>() != register_name(*r)) malformed(where + " register");
        return *r;
    };
    auto imm = [&](std::size_t k) { return hex_field(args[k], where); };

    Instruction i;
    switch (*op) {
        case Opcode::Movi: arity(2); i = Instruction::movi(reg(0), imm(1)); break;
        case Opcode::Movr: arity(2); i = Instruction::movr(reg(0), reg(1)); break;
        case Opcode::Load:
            arity(3);
            i = Instruction::load(reg(0), reg(1), static_cast<std::int32_t>(signed_hex_field(args[2], where)));
            break;
        case Opcode::Store:
            arity(3);
            i = Instruction::store(reg(0), static_cast<std::int32_t>(signed_hex_field(args[1], where)), reg(2));
            break;
        case Opcode::Add: case Opcode::Sub: case Opcode::And: case Opcode::Or:
        case Opcode::Xor: case Opcode::Shl: case Opcode::Shr: case Opcode::Cmp: {
            arity(2);
            const Register dst = reg(0);
            const bool is_imm = args[1].is_string() && args[1].get<std::string>().rfind("0x", 0) == 0;
            if (*op == Opcode::Cmp) i = is_imm ? Instruction::cmp_imm(dst, imm(1)) : Instruction::cmp(dst, reg(1));
            else i = is_imm ? Instruction::alu_imm(*op, dst, imm(1)) : Instruction::alu(*op, dst, reg(1));
            break;
        }
        case Opcode::Jmp: arity(1); i = Instruction::jmp(imm(0)); break;
        case Opcode::Call: arity(1); i = Instruction::call(imm(0)); break;
        case Opcode::Jcc: {
            arity(2);
            if (!args[0].is_string()) malformed(where);
            auto c = parse_condition(args[0].get<std::string>());
            if (!c || args[0].get<std::string>() != condition_name(*c)) malformed(where + " condition");
            i = Instruction::jcc(*c, imm(1));
            break;
        }
        case Opcode::Jmpr: arity(1); i = Instruction::jmpr(reg(0)); break;
        case Opcode::Callr: arity(1); i = Instruction::callr(reg(0)); break;
        case Opcode::Push: arity(1); i = Instruction::push(reg(0)); break;
        case Opcode::Pop: arity(1); i = Instruction::pop(reg(0)); break;
        case Opcode::Ret: arity(0); i = Instruction::ret(); break;
        case Opcode::Eexit: arity(0); i = Instruction::eexit(); break;
        case Opcode::Flagset: {
            arity(2);
            if (!args[0].is_string()) malformed(where);
            const std::string f_name = args[0].get<std::string>();
            auto f = parse_flag(f_name);
            if (!f || (*f != FlagId::AC && *f != FlagId::DF) || f_name != lower(flag_name(*f))) {
                malformed(where + " flag");
            }
            const auto bit = imm(1);
            if (bit > 1) malformed(where + " flag bit");
            i = Instruction::flagset(*f, bit == 1);
            break;
        }
        case Opcode::Ocall: {
            arity(1);
            const auto id = imm(0);
            if (id > 0xffff) malformed(where + " ocall id");
            i = Instruction::ocall(static_cast<std::uint16_t>(id));
            break;
        }
    }
    return i;
}

ojson encode_annotations(const TransitionAnnotations& a) {
    auto pairs = [](const std::vector<AddressPair>& in) {
        ojson arr = ojson::array();
        for (const auto& p : in) {
            ojson o;
            o["begin"] = to_hex(p.begin);
            o["end"] = to_hex(p.end);
            arr.push_back(std::move(o));
        }
        return arr;
    };
    ojson out;
    out["entry_address"] = to_hex(a.entry_address);
    out["entry_sanitisation_done"] = to_hex(a.entry_sanitisation_done);
    out["secure"] = pairs(a.secure);
    out["ocall"] = pairs(a.ocall);
    out["exit_address"] = to_hex(a.exit_address);
    return out;
}

TransitionAnnotations decode_annotations(const ojson& j) {
    auto pairs = [](const ojson& arr, const char* what) {
        if (!arr.is_array()) malformed(what);
        std::vector<AddressPair> out;
        for (const auto& p : arr) out.push_back({hex_field(member(p, "begin"), what), hex_field(member(p, "end"), what)});
        return out;
    };
    TransitionAnnotations a;
    a.entry_address = hex_field(member(j, "entry_address"), "entry_address");
    a.entry_sanitisation_done = hex_field(member(j, "entry_sanitisation_done"), "entry_sanitisation_done");
    a.secure = pairs(member(j, "secure"), "secure");
    a.ocall = pairs(member(j, "ocall"), "ocall");
    a.exit_address = hex_field(member(j, "exit_address"), "exit_address");
    return a;
}

constexpr std::array<const char*, 10> kLayoutKeys = {
    "base", "size", "code_offset", "code_length", "data_offset",
    "data_length", "heap_offset", "heap_size", "stack_offset", "stack_size",
};

std::array<std::uint64_t EnclaveLayout::*, 10> layout_fields() {
    return {&EnclaveLayout::base,        &EnclaveLayout::size,         &EnclaveLayout::code_offset,
            &EnclaveLayout::code_length, &EnclaveLayout::data_offset,  &EnclaveLayout::data_length,
            &EnclaveLayout::heap_offset, &EnclaveLayout::heap_size,    &EnclaveLayout::stack_offset,
            &EnclaveLayout::stack_size};
}

}  // namespace

std::string serialize_image(const EnclaveImage& image) {
    ojson doc;
    doc["format_version"] = image.format_version;
    ojson layout;
    const auto fields = layout_fields();
    for (std::size_t k = 0; k < kLayoutKeys.size(); ++k) layout[kLayoutKeys[k]] = to_hex(image.layout.*fields[k]);
    doc["layout"] = std::move(layout);
    ojson code = ojson::array();
    for (const auto& i : image.code) code.push_back(encode_instruction(i));
    doc["code"] = std::move(code);
    ojson data = ojson::array();
    for (const auto& seg : image.data) {
        ojson words = ojson::array();
        for (auto w : seg.words) words.push_back(to_hex(w));
        ojson s;
        s["offset"] = to_hex(seg.offset);
        s["words"] = std::move(words);
        data.push_back(std::move(s));
    }
    doc["data"] = std::move(data);
    ojson symbols = ojson::object();
    for (const auto& [name, addr] : image.symbols) symbols[name] = to_hex(addr);
    doc["symbols"] = std::move(symbols);
    if (image.annotations) doc["annotations"] = encode_annotations(*image.annotations);
    return doc.dump();
}

ImageParseResult parse_image(std::string_view bytes) {
    ImageParseResult result;
    ojson doc;
    try {
        doc = ojson::parse(bytes);
    } catch (const nlohmann::json::exception&) {
        result.diagnostics.push_back({1, "malformed container", Severity::Error});
        return result;
    }
    EnclaveImage image;
    try {
        if (!doc.is_object()) malformed("top level");
        const ojson& version = member(doc, "format_version");
        if (!version.is_number_integer()) malformed("format_version");
        image.format_version = version.get<int>();

        const ojson& layout = member(doc, "layout");
        const auto fields = layout_fields();
        for (std::size_t k = 0; k < kLayoutKeys.size(); ++k) {
            image.layout.*fields[k] = hex_field(member(layout, kLayoutKeys[k]), kLayoutKeys[k]);
        }

        const ojson& code = member(doc, "code");
        if (!code.is_array()) malformed("code");
        for (std::size_t k = 0; k < code.size(); ++k) image.code.push_back(decode_instruction(code[k], k));

        const ojson& data = member(doc, "data");
        if (!data.is_array()) malformed("data");
        for (const auto& seg : data) {
            DataSegment s;
            s.offset = hex_field(member(seg, "offset"), "data offset");
            const ojson& words = member(seg, "words");
            if (!words.is_array()) malformed("data words");
            for (const auto& w : words) s.words.push_back(hex_field(w, "data word"));
            image.data.push_back(std::move(s));
        }

        const ojson& symbols = member(doc, "symbols");
        if (!symbols.is_object()) malformed("symbols");
        for (const auto& [name, addr] : symbols.items()) image.symbols[name] = hex_field(addr, "symbol " + name);

        if (doc.contains("annotations")) image.annotations = decode_annotations(doc.at("annotations"));
    } catch (const ContainerError& e) {
        result.diagnostics.push_back({1, e.message, Severity::Error});
        return result;
    } catch (const nlohmann::json::exception& e) {
        result.diagnostics.push_back({1, std::string("malformed container: ") + e.what(), Severity::Error});
        return result;
    }
    for (auto& e : validate_image(image)) result.diagnostics.push_back({1, e, Severity::Error});
    if (result.diagnostics.empty()) result.image = std::move(image);
    return result;
}

std::string serialize_annotations(const TransitionAnnotations& annotations) {
    return encode_annotations(annotations).dump();
}

std::optional<TransitionAnnotations> parse_annotations(std::string_view bytes, std::string* error) {
    try {
        return decode_annotations(ojson::parse(bytes));
    } catch (const ContainerError& e) {
        if (error) *error = e.message;
    } catch (const nlohmann::json::exception&) {
        if (error) *error = "malformed container";
    }
    return std::nullopt;
}

}  // namespace orderly
