#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "orderly/assembler.hpp"
#include "orderly/heuristics.hpp"

using namespace orderly;

namespace {

EnclaveImage load_sample(const std::string& name) {
    std::ifstream in(std::string(ORDERLY_CORPUS_DIR) + "/" + name + ".eml");
    std::stringstream ss;
    ss << in.rdbuf();
    return *assemble(ss.str()).image;
}

EnclaveImage assembled(const std::string& body) {
    auto r = assemble(".enclave base=0x10000 size=0x10000\n.code offset=0\n" + body);
    EXPECT_TRUE(r.ok());
    return *r.image;
}

std::vector<std::string> messages(const AnnotationDerivation& d, Severity sev) {
    std::vector<std::string> out;
    for (const auto& x : d.diagnostics) {
        if (x.severity == sev) out.push_back(x.message);
    }
    return out;
}

}  // namespace

TEST(Heuristics, OkMinimal) {
    const auto img = load_sample("ok_minimal");
    const auto d = derive_annotations(img);
    ASSERT_TRUE(d.ok());
    const auto& a = *d.annotations;
    EXPECT_EQ(a.entry_address, img.symbols.at("enclave_entry"));
    EXPECT_EQ(a.entry_sanitisation_done, img.symbols.at("sanitised"));
    EXPECT_EQ(a.exit_address, img.symbols.at("eexit_point"));
    ASSERT_EQ(a.secure.size(), 1u);
    // The only CALL to ecall_add.
    std::size_t site = 0;
    for (std::size_t i = 0; i < img.code.size(); ++i) {
        if (img.code[i].op == Opcode::Call && img.code[i].imm == img.symbols.at("ecall_add")) site = i;
    }
    EXPECT_EQ(a.secure[0].begin, instruction_address(img, site));
    EXPECT_EQ(a.secure[0].end, instruction_address(img, site + 1));
    EXPECT_TRUE(a.ocall.empty());
}

TEST(Heuristics, OcallSitesPairedAndSorted) {
    const auto img = assembled(
        "enclave_entry:\n    call ocall_write\nsanitised:\n    call ecall_b\n    call ocall_write\n"
        "    call ecall_a\neexit_point:\n    eexit\necall_a:\n    ret\necall_b:\n    ret\nocall_write:\n    ret\n");
    const auto d = derive_annotations(img);
    ASSERT_TRUE(d.ok());
    EXPECT_EQ(d.annotations->ocall, (std::vector<AddressPair>{{0x10000, 0x10004}, {0x10008, 0x1000c}}));
    EXPECT_EQ(d.annotations->secure, (std::vector<AddressPair>{{0x10004, 0x10008}, {0x1000c, 0x10010}}));
}

TEST(Heuristics, MissingSymbols) {
    const auto d = derive_annotations(assembled("enclave_entry:\n    call ecall_x\neexit_point:\n    eexit\necall_x:\n    ret\n"));
    EXPECT_FALSE(d.ok());
    EXPECT_EQ(messages(d, Severity::Error), std::vector<std::string>{"no sanitisation-done symbol"});
}

TEST(Heuristics, EcallWithoutCallSitesWarns) {
    const auto d = derive_annotations(assembled(
        "enclave_entry:\nsanitised:\n    call ecall_x\neexit_point:\n    eexit\necall_x:\n    ret\necall_unused:\n    ret\n"));
    ASSERT_TRUE(d.ok());
    EXPECT_EQ(messages(d, Severity::Warning), std::vector<std::string>{"ecall without call sites: ecall_unused"});
}

TEST(Heuristics, ExplicitAnnotationsWin) {
    auto img = load_sample("ok_minimal");
    TransitionAnnotations a{img.symbols.at("enclave_entry"), img.symbols.at("sanitised"), {}, {},
                            img.symbols.at("eexit_point")};
    img.annotations = a;
    const auto d = derive_annotations(img);
    ASSERT_TRUE(d.ok());
    EXPECT_EQ(*d.annotations, a);
    EXPECT_EQ(messages(d, Severity::Warning).size(), 1u);
}

TEST(Heuristics, Idempotent) {
    const auto img = load_sample("ok_with_ocall");
    const auto a = derive_annotations(img);
    const auto b = derive_annotations(img);
    ASSERT_TRUE(a.ok());
    EXPECT_EQ(*a.annotations, *b.annotations);
    EXPECT_EQ(a.annotations->ocall.size(), 1u);
}

TEST(Heuristics, InvalidDerivationFails) {
    // The call site is the last instruction, so its return address is not code.
    const auto d = derive_annotations(assembled("enclave_entry:\n    jmp sanitised\necall_x:\n    ret\neexit_point:\n    eexit\nsanitised:\n    call ecall_x\n"));
    EXPECT_FALSE(d.ok());
    EXPECT_FALSE(messages(d, Severity::Error).empty());
}
