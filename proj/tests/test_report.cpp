#include <gtest/gtest.h>
#include <sys/wait.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "orderly/assembler.hpp"
#include "orderly/heuristics.hpp"
#include "orderly/report.hpp"

using namespace orderly;
namespace fs = std::filesystem;

namespace {

const std::string kCorpus = ORDERLY_CORPUS_DIR;

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run(const std::string& args) {
    const std::string cmd = std::string(ORDERLY_CLI) + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

class TempDir {
public:
    TempDir() : path_(fs::temp_directory_path() / ("orderly_test_" + std::to_string(::getpid()))) {
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    std::string operator/(const std::string& name) const { return (path_ / name).string(); }

private:
    fs::path path_;
};

EnclaveReport sample_report(const std::string& name) {
    const auto img = *assemble(slurp(kCorpus + "/" + name + ".eml")).image;
    const auto ann = *derive_annotations(img).annotations;
    AnalysisConfig c;
    return make_report(img, c, analyze_enclave(img, ann, c));
}

}  // namespace

TEST(Report, RoundTrip) {
    const auto r = sample_report("vuln_symbolic_jump");
    const auto bytes = serialize_report(r);
    const auto back = parse_report(bytes);
    ASSERT_TRUE(back.report) << back.error;
    EXPECT_EQ(serialize_report(*back.report), bytes);
    EXPECT_EQ(back.report->totals.flagged, 2u);
}

TEST(Report, KeysAndDigest) {
    const auto r = sample_report("ok_minimal");
    const auto bytes = serialize_report(r);
    EXPECT_EQ(bytes.rfind(R"({"tool_version":"0.1.0","image_digest":"sha256:)", 0), 0u);
    EXPECT_NE(bytes.find(R"("totals":{"ecalls":1,"flagged":0,"timeout":0,"stopped":0,"clean":1})"), std::string::npos);
    EXPECT_NE(bytes.find(R"("wall_time_ms":0)"), std::string::npos);
    EXPECT_EQ(r.image_digest.size(), 7u + 64u);
}

TEST(Report, TotalsInvariant) {
    auto bytes = serialize_report(sample_report("ok_minimal"));
    bytes.replace(bytes.find("\"clean\":1}"), 10, "\"clean\":2}");
    const auto parsed = parse_report(bytes);
    EXPECT_FALSE(parsed.report);
    EXPECT_EQ(parsed.error.rfind("invariant violated", 0), 0u);
}

TEST(Report, TextRendering) {
    const auto flagged = render_text(sample_report("vuln_no_flag_clear"));
    EXPECT_NE(flagged.find("flagged"), std::string::npos);
    EXPECT_NE(flagged.find("EntrySanitisationViolation"), std::string::npos);
    EXPECT_NE(flagged.find("flag AC"), std::string::npos);
    const auto clean = render_text(sample_report("ok_minimal"));
    EXPECT_NE(clean.find("no violations"), std::string::npos);
}

TEST(Cli, AssembleExitCodes) {
    TempDir tmp;
    EXPECT_EQ(run("assemble " + kCorpus + "/ok_minimal.eml -o " + (tmp / "ok.img")), 0);
    EXPECT_TRUE(parse_image(slurp(tmp / "ok.img")).ok());

    std::ofstream(tmp / "bad.eml") << ".enclave base=0x10000 size=0x10000\n.code offset=0\n    jmp nowhere\n";
    EXPECT_EQ(run("assemble " + (tmp / "bad.eml") + " -o " + (tmp / "bad.img")), 2);
    EXPECT_EQ(run("assemble " + kCorpus + "/ok_minimal.eml -o /nonexistent/dir/x.img"), 3);
    EXPECT_EQ(run("assemble " + (tmp / "missing.eml") + " -o " + (tmp / "x.img")), 3);
}

TEST(Cli, AnalyzeExitCodes) {
    TempDir tmp;
    ASSERT_EQ(run("assemble " + kCorpus + "/ok_minimal.eml -o " + (tmp / "ok.img")), 0);
    ASSERT_EQ(run("assemble " + kCorpus + "/vuln_no_flag_clear.eml -o " + (tmp / "v.img")), 0);
    EXPECT_EQ(run("analyze " + (tmp / "ok.img") + " --auto --all -o " + (tmp / "ok.json")), 0);
    EXPECT_EQ(run("analyze " + (tmp / "v.img") + " --auto -o " + (tmp / "v.json")), 1);
    EXPECT_NE(slurp(tmp / "v.json").find("EntrySanitisationViolation"), std::string::npos);
    EXPECT_EQ(run("analyze " + (tmp / "ok.img") + " --auto --ecall 99"), 2);
    EXPECT_EQ(run("analyze " + (tmp / "ok.img") + " --auto --ecall 0"), 0);
    EXPECT_EQ(run("analyze " + (tmp / "missing.img") + " --auto"), 2);
    EXPECT_EQ(run("analyze " + (tmp / "ok.img") + " --max-branches 0"), 2);

    std::ofstream(tmp / "ann.json") << R"({"entry_address":"0x1"})";
    EXPECT_EQ(run("analyze " + (tmp / "ok.img") + " --annotations " + (tmp / "ann.json")), 2);
}

TEST(Cli, ReportExitCodes) {
    TempDir tmp;
    ASSERT_EQ(run("analyze " + kCorpus + "/vuln_secure_write_out.eml --auto -o " + (tmp / "r.json")), 1);
    EXPECT_EQ(run("report " + (tmp / "r.json") + " --format text"), 0);
    auto bytes = slurp(tmp / "r.json");
    bytes.replace(bytes.find("\"flagged\":1"), 11, "\"flagged\":0");
    std::ofstream(tmp / "bad.json") << bytes;
    EXPECT_EQ(run("report " + (tmp / "bad.json")), 2);
    std::ofstream(tmp / "junk.json") << "{";
    EXPECT_EQ(run("report " + (tmp / "junk.json")), 2);
}

TEST(Cli, AnalyzeIsByteIdenticalAcrossRuns) {
    TempDir tmp;
    ASSERT_EQ(run("analyze " + kCorpus + "/vuln_bad_range_check.eml --auto -o " + (tmp / "a.json")), 1);
    ASSERT_EQ(run("analyze " + kCorpus + "/vuln_bad_range_check.eml --auto -o " + (tmp / "b.json")), 1);
    EXPECT_EQ(slurp(tmp / "a.json"), slurp(tmp / "b.json"));
}
