#include "orderly/heuristics.hpp"

#include <algorithm>

namespace orderly {

namespace {

std::vector<AddressPair> call_site_pairs(const EnclaveImage& image, Address target) {
    std::vector<AddressPair> out;
    for (std::size_t i = 0; i < image.code.size(); ++i) {
        const auto& insn = image.code[i];
        if (insn.op == Opcode::Call && insn.imm == target) {
            const Address site = instruction_address(image, i);
            out.push_back({site, site + kInstructionWidth});
        }
    }
    return out;
}

}  // namespace

AnnotationDerivation derive_annotations(const EnclaveImage& image) {
    AnnotationDerivation result;
    auto note = [&](std::string msg, Severity sev) { result.diagnostics.push_back({0, std::move(msg), sev}); };

    if (image.annotations) {
        note("image carries explicit annotations; heuristic skipped", Severity::Warning);
        result.annotations = image.annotations;
        return result;
    }

    auto required = [&](const char* name, const char* what) -> Address {
        auto it = image.symbols.find(name);
        if (it == image.symbols.end()) {
            note(std::string("no ") + what + " symbol", Severity::Error);
            return 0;
        }
        return it->second;
    };

    TransitionAnnotations a;
    a.entry_address = required("enclave_entry", "entry");
    a.entry_sanitisation_done = required("sanitised", "sanitisation-done");
    a.exit_address = required("eexit_point", "exit");

    for (const auto& [name, addr] : image.symbols) {
        const bool is_ecall = name.rfind("ecall_", 0) == 0;
        const bool is_ocall = name.rfind("ocall_", 0) == 0;
        if (!is_ecall && !is_ocall) continue;
        auto pairs = call_site_pairs(image, addr);
        if (pairs.empty()) {
            note((is_ecall ? "ecall without call sites: " : "ocall without call sites: ") + name, Severity::Warning);
        }
        auto& dst = is_ecall ? a.secure : a.ocall;
        dst.insert(dst.end(), pairs.begin(), pairs.end());
    }
    auto by_begin = [](const AddressPair& x, const AddressPair& y) { return x.begin < y.begin; };
    std::sort(a.secure.begin(), a.secure.end(), by_begin);
    std::sort(a.ocall.begin(), a.ocall.end(), by_begin);

    const bool failed = std::any_of(result.diagnostics.begin(), result.diagnostics.end(),
                                    [](const Diagnostic& d) { return d.severity == Severity::Error; });
    if (failed) return result;

    for (auto& e : validate_annotations(image, a)) note(e, Severity::Error);
    if (std::none_of(result.diagnostics.begin(), result.diagnostics.end(),
                     [](const Diagnostic& d) { return d.severity == Severity::Error; })) {
        result.annotations = std::move(a);
    }
    return result;
}

}  // namespace orderly
