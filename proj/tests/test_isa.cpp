#include <gtest/gtest.h>

#include "oracles.hpp"
#include "orderly/isa.hpp"

using namespace orderly;

TEST(IsaNames, RegistersRoundTrip) {
    for (std::size_t i = 0; i < kRegisterCount; ++i) {
        const auto r = static_cast<Register>(i);
        EXPECT_EQ(parse_register(register_name(r)), r);
    }
    EXPECT_EQ(parse_register("RAX"), Register::Rax);
    EXPECT_EQ(parse_register("r16"), std::nullopt);
    EXPECT_EQ(register_name(Register::R10), "r10");
}

TEST(IsaNames, OpcodesConditionsFlagsRoundTrip) {
    for (int i = 0; i <= static_cast<int>(Opcode::Eexit); ++i) {
        const auto op = static_cast<Opcode>(i);
        EXPECT_EQ(parse_opcode(opcode_name(op)), op);
    }
    for (int i = 0; i < 6; ++i) {
        const auto c = static_cast<Condition>(i);
        EXPECT_EQ(parse_condition(condition_name(c)), c);
    }
    for (std::size_t i = 0; i < kFlagCount; ++i) {
        const auto f = static_cast<FlagId>(i);
        EXPECT_EQ(parse_flag(flag_name(f)), f);
    }
    EXPECT_EQ(parse_opcode("movi"), Opcode::Movi);
    EXPECT_EQ(parse_opcode("NOP"), std::nullopt);
}

TEST(IsaLayout, ClassifiesRegions) {
    const auto l = oracle::test_layout(8);
    EXPECT_EQ(classify_address(l, 0x10000), AddressRegion::TrustedCode);
    EXPECT_EQ(classify_address(l, 0x1001c), AddressRegion::TrustedCode);
    EXPECT_EQ(classify_address(l, 0x10020), AddressRegion::TrustedData);
    EXPECT_EQ(classify_address(l, 0x14000), AddressRegion::TrustedData);
    EXPECT_EQ(classify_address(l, 0x16000), AddressRegion::TrustedHeap);
    EXPECT_EQ(classify_address(l, 0x18ff8), AddressRegion::TrustedStack);
    EXPECT_EQ(classify_address(l, 0x1fff8), AddressRegion::TrustedData);
    EXPECT_EQ(classify_address(l, 0x20000), AddressRegion::Untrusted);
    EXPECT_EQ(classify_address(l, 0xffff), AddressRegion::Untrusted);
    EXPECT_EQ(classify_address(l, 0), AddressRegion::Untrusted);
}

TEST(IsaLayout, InstructionAddressing) {
    EnclaveImage img;
    img.layout = oracle::test_layout(3);
    img.code = {Instruction::eexit(), Instruction::eexit(), Instruction::eexit()};
    EXPECT_EQ(instruction_address(img, 2), 0x10008u);
    EXPECT_THROW(instruction_address(img, 3), std::out_of_range);
    EXPECT_EQ(instruction_index(img, 0x10004), 1u);
    EXPECT_EQ(instruction_index(img, 0x10006), std::nullopt);
    EXPECT_EQ(instruction_index(img, 0x1000c), std::nullopt);
    EXPECT_EQ(instruction_index(img, 0xfffc), std::nullopt);
}

TEST(IsaValidation, LayoutErrors) {
    auto l = oracle::test_layout(4);
    EXPECT_TRUE(validate_layout(l).empty());

    auto bad = l;
    bad.data_offset = 0x4004;
    ASSERT_FALSE(validate_layout(bad).empty());
    EXPECT_EQ(validate_layout(bad).front(), "misaligned: data_offset");

    bad = l;
    bad.size = 0;
    bool found = false;
    for (const auto& e : validate_layout(bad)) found = found || e == "empty enclave: size";
    EXPECT_TRUE(found);

    bad = l;
    bad.heap_offset = 0x8000;
    bad.heap_size = 0x100;
    found = false;
    for (const auto& e : validate_layout(bad)) found = found || e.rfind("region overlap", 0) == 0;
    EXPECT_TRUE(found);

    bad = l;
    bad.stack_offset = 0xff00;
    bad.stack_size = 0x1000;
    found = false;
    for (const auto& e : validate_layout(bad)) found = found || e.rfind("region outside enclave", 0) == 0;
    EXPECT_TRUE(found);

    bad = l;
    bad.base = 0xfffffffffffff000ULL;
    found = false;
    for (const auto& e : validate_layout(bad)) found = found || e == "overflow: base+size";
    EXPECT_TRUE(found);
}

TEST(IsaValidation, ImageErrors) {
    EnclaveImage img;
    img.layout = oracle::test_layout(2);
    img.code = {Instruction::jmp(0x10004), Instruction::eexit()};
    EXPECT_TRUE(validate_image(img).empty());

    auto bad = img;
    bad.code[0] = Instruction::jmp(0x10002);
    ASSERT_EQ(validate_image(bad).size(), 1u);
    EXPECT_EQ(validate_image(bad).front(), "invalid jump target at index 0");

    bad = img;
    bad.code.push_back(Instruction::eexit());
    ASSERT_FALSE(validate_image(bad).empty());
    EXPECT_EQ(validate_image(bad).front(), "code length mismatch: code_length");

    bad = img;
    bad.symbols["far"] = 0x30000;
    ASSERT_EQ(validate_image(bad).size(), 1u);
    EXPECT_EQ(validate_image(bad).front(), "symbol out of range: far");

    bad = img;
    bad.data.push_back({0x4000, std::vector<std::uint64_t>(0x21, 1)});
    ASSERT_EQ(validate_image(bad).size(), 1u);
    EXPECT_EQ(validate_image(bad).front().rfind("data entry out of range", 0), 0u);
}

TEST(IsaValidation, AnnotationErrors) {
    EnclaveImage img;
    img.layout = oracle::test_layout(3);
    img.code = {Instruction::eexit(), Instruction::eexit(), Instruction::eexit()};
    TransitionAnnotations a{0x10000, 0x10004, {{0x10004, 0x10008}}, {}, 0x10008};
    EXPECT_TRUE(validate_annotations(img, a).empty());

    auto bad = a;
    bad.exit_address = 0x10000;
    EXPECT_EQ(validate_annotations(img, bad), std::vector<std::string>{"annotation entry equals exit"});

    bad = a;
    bad.secure[0].end = 0x10004;
    EXPECT_EQ(validate_annotations(img, bad), std::vector<std::string>{"annotation pair not distinct: secure[0]"});

    bad = a;
    bad.entry_sanitisation_done = 0x10002;
    EXPECT_EQ(validate_annotations(img, bad),
              std::vector<std::string>{"annotation not an instruction address: entry_sanitisation_done"});
}

TEST(IsaInstruction, DirectTargets) {
    EXPECT_TRUE(Instruction::jmp(0).has_direct_target());
    EXPECT_TRUE(Instruction::jcc(Condition::Eq, 0).has_direct_target());
    EXPECT_TRUE(Instruction::call(0).has_direct_target());
    EXPECT_FALSE(Instruction::jmpr(Register::Rax).has_direct_target());
    EXPECT_FALSE(Instruction::movi(Register::Rax, 0).has_direct_target());
}
