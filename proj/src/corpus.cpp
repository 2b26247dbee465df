#include "orderly/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "orderly/assembler.hpp"
#include "orderly/heuristics.hpp"

namespace orderly {

namespace {

using ojson = nlohmann::ordered_json;

std::optional<std::string> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string describe(const ViolationSignature& s) {
    return std::string(violation_kind_name(s.first)) + " \"" + s.second + "\"";
}

}  // namespace

std::string serialize_manifest(const CorpusManifest& manifest) {
    ojson doc;
    doc["sample"] = manifest.sample;
    ojson ecalls = ojson::array();
    for (const auto& e : manifest.ecalls) {
        ojson o;
        o["index"] = e.index;
        o["status"] = std::string(status_name(e.status));
        ojson expected = ojson::array();
        for (const auto& [kind, detail] : e.expected) {
            ojson v;
            v["kind"] = std::string(violation_kind_name(kind));
            v["detail"] = detail;
            expected.push_back(std::move(v));
        }
        o["expected"] = std::move(expected);
        ecalls.push_back(std::move(o));
    }
    doc["ecalls"] = std::move(ecalls);
    doc["max_wall_time_ms"] = manifest.max_wall_time_ms;
    return doc.dump();
}

std::optional<CorpusManifest> parse_manifest(std::string_view bytes, std::string* error) {
    auto fail = [&](std::string msg) -> std::optional<CorpusManifest> {
        if (error) *error = std::move(msg);
        return std::nullopt;
    };
    try {
        const ojson doc = ojson::parse(bytes);
        CorpusManifest m;
        m.sample = doc.at("sample").get<std::string>();
        m.max_wall_time_ms = doc.at("max_wall_time_ms").get<std::uint64_t>();
        for (const auto& e : doc.at("ecalls")) {
            ExpectedEcall x;
            x.index = e.at("index").get<std::size_t>();
            auto status = parse_status(e.at("status").get<std::string>());
            if (!status) return fail("unknown status in manifest");
            x.status = *status;
            for (const auto& v : e.at("expected")) {
                auto kind = parse_violation_kind(v.at("kind").get<std::string>());
                if (!kind) return fail("unknown violation kind in manifest");
                x.expected.emplace(*kind, v.at("detail").get<std::string>());
            }
            m.ecalls.push_back(std::move(x));
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        return fail(std::string("malformed manifest: ") + e.what());
    }
}

std::set<ViolationSignature> signatures_of(const EcallReport& report) {
    std::set<ViolationSignature> out;
    for (const auto& v : report.violations) out.emplace(v.kind, v.detail);
    return out;
}

std::vector<std::string> compare_to_manifest(const CorpusManifest& manifest, const EnclaveAnalysis& analysis) {
    std::vector<std::string> diff;
    if (manifest.ecalls.size() != analysis.ecalls.size()) {
        diff.push_back("ecall count: expected " + std::to_string(manifest.ecalls.size()) + ", got " +
                       std::to_string(analysis.ecalls.size()));
    }
    for (const auto& want : manifest.ecalls) {
        const std::string where = "ecall " + std::to_string(want.index) + ": ";
        auto it = std::find_if(analysis.ecalls.begin(), analysis.ecalls.end(),
                               [&](const EcallReport& r) { return r.ecall_index == want.index; });
        if (it == analysis.ecalls.end()) {
            diff.push_back(where + "missing from analysis");
            continue;
        }
        if (it->status != want.status) {
            diff.push_back(where + "status expected " + std::string(status_name(want.status)) + ", got " +
                           std::string(status_name(it->status)));
        }
        const auto got = signatures_of(*it);
        for (const auto& s : want.expected) {
            if (!got.count(s)) diff.push_back(where + "missing " + describe(s));
        }
        for (const auto& s : got) {
            if (!want.expected.count(s)) diff.push_back(where + "unexpected " + describe(s));
        }
    }
    return diff;
}

SampleOutcome run_sample(const std::filesystem::path& dir, const std::string& name, const AnalysisConfig& config) {
    SampleOutcome out;
    out.name = name;
    auto source = read_file(dir / (name + ".eml"));
    auto manifest_bytes = read_file(dir / (name + ".json"));
    if (!source || !manifest_bytes) {
        out.mismatches.push_back("cannot read sample or manifest");
        return out;
    }
    std::string error;
    auto manifest = parse_manifest(*manifest_bytes, &error);
    if (!manifest) {
        out.mismatches.push_back(error);
        return out;
    }
    auto assembled = assemble(*source);
    if (!assembled.ok()) {
        for (const auto& d : assembled.diagnostics) out.mismatches.push_back(to_string(d));
        return out;
    }
    auto derived = derive_annotations(*assembled.image);
    if (!derived.ok()) {
        for (const auto& d : derived.diagnostics) out.mismatches.push_back(d.message);
        return out;
    }
    const auto start = std::chrono::steady_clock::now();
    out.analysis = analyze_enclave(*assembled.image, *derived.annotations, config);
    out.wall_time = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
    out.mismatches = compare_to_manifest(*manifest, *out.analysis);
    if (static_cast<std::uint64_t>(out.wall_time.count()) > manifest->max_wall_time_ms) {
        out.mismatches.push_back("wall time " + std::to_string(out.wall_time.count()) + " ms exceeds " +
                                 std::to_string(manifest->max_wall_time_ms) + " ms");
    }
    out.passed = out.mismatches.empty();
    return out;
}

bool CorpusSummary::passed() const {
    return coverage_gaps.empty() &&
           std::all_of(samples.begin(), samples.end(), [](const SampleOutcome& s) { return s.passed; });
}

std::vector<std::string> list_samples(const std::filesystem::path& dir) {
    std::vector<std::string> names;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        const auto& p = entry.path();
        if (p.extension() == ".eml" && std::filesystem::exists(std::filesystem::path(p).replace_extension(".json"))) {
            names.push_back(p.stem().string());
        }
    }
    std::sort(names.begin(), names.end());
    return names;
}

CorpusSummary run_corpus(const std::filesystem::path& dir, const AnalysisConfig& config) {
    CorpusSummary summary;
    std::set<ViolationKind> covered;
    for (const auto& name : list_samples(dir)) {
        if (auto bytes = read_file(dir / (name + ".json"))) {
            if (auto m = parse_manifest(*bytes)) {
                for (const auto& e : m->ecalls) {
                    for (const auto& s : e.expected) covered.insert(s.first);
                }
            }
        }
        summary.samples.push_back(run_sample(dir, name, config));
    }
    for (std::size_t k = 0; k < kViolationKindCount; ++k) {
        const auto kind = static_cast<ViolationKind>(k);
        if (!covered.count(kind)) summary.coverage_gaps.emplace_back(violation_kind_name(kind));
    }
    return summary;
}

}  // namespace orderly
