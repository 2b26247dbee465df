#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "orderly/corpus.hpp"

using namespace orderly;

namespace {

const std::filesystem::path kCorpus = ORDERLY_CORPUS_DIR;

}  // namespace

TEST(Manifest, RoundTrip) {
    std::ifstream in(kCorpus / "vuln_symbolic_jump.json");
    std::stringstream ss;
    ss << in.rdbuf();
    std::string err;
    const auto m = parse_manifest(ss.str(), &err);
    ASSERT_TRUE(m) << err;
    EXPECT_EQ(m->sample, "vuln_symbolic_jump");
    ASSERT_EQ(m->ecalls.size(), 2u);
    EXPECT_EQ(m->ecalls[1].expected.begin()->first, ViolationKind::OutOfEnclaveJump);
    EXPECT_EQ(serialize_manifest(*m), ss.str());
}

TEST(Harness, CleanSampleUnaffectedByViolationCap) {
    AnalysisConfig c;
    c.max_violations = 1;
    const auto out = run_sample(kCorpus, "ok_minimal", c);
    EXPECT_TRUE(out.passed);
    for (const auto& m : out.mismatches) ADD_FAILURE() << m;
}

TEST(Harness, ReportsMismatches) {
    std::ifstream in(kCorpus / "vuln_no_flag_clear.json");
    std::stringstream ss;
    ss << in.rdbuf();
    auto m = *parse_manifest(ss.str());
    m.ecalls[0].expected.erase(m.ecalls[0].expected.begin());

    const auto out = run_sample(kCorpus, "vuln_no_flag_clear", {});
    ASSERT_TRUE(out.passed);
    const auto diff = compare_to_manifest(m, *out.analysis);
    ASSERT_EQ(diff.size(), 1u);
    EXPECT_EQ(diff[0], "ecall 0: unexpected EntrySanitisationViolation \"flag AC\"");

    m.ecalls[0].status = EcallStatus::Clean;
    EXPECT_EQ(compare_to_manifest(m, *out.analysis).size(), 2u);
}

TEST(Harness, CoverageOfViolationKinds) {
    std::set<ViolationKind> covered;
    for (const auto& name : list_samples(kCorpus)) {
        std::ifstream in(kCorpus / (name + ".json"));
        std::stringstream ss;
        ss << in.rdbuf();
        const auto m = parse_manifest(ss.str());
        ASSERT_TRUE(m) << name;
        EXPECT_EQ(m->sample, name);
        for (const auto& e : m->ecalls) {
            for (const auto& s : e.expected) covered.insert(s.first);
        }
    }
    EXPECT_EQ(covered.size(), kViolationKindCount);
}

TEST(Harness, OkSamplesPassAndPathsAreOrderly) {
    AnalysisConfig c;
    c.record_paths = true;
    for (const char* name : {"ok_minimal", "ok_with_ocall"}) {
        const auto out = run_sample(kCorpus, name, c);
        EXPECT_TRUE(out.passed) << name;
        for (const auto& e : out.analysis->ecalls) {
            EXPECT_EQ(e.paths.size(), e.paths_explored);
            for (const auto& p : e.paths) {
                std::string rendered;
                EXPECT_TRUE(oracle::valid_phase_sequence(p.marks, &rendered)) << name << " " << rendered;
            }
        }
    }
}
