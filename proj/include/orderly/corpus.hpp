#pragma once

// Sample enclaves paired with expected-findings manifests, and the harness
// that checks analyzer output against them.

#include <chrono>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "orderly/orderliness.hpp"

namespace orderly {

using ViolationSignature = std::pair<ViolationKind, std::string>;  // (kind, detail)

struct ExpectedEcall {
    std::size_t index = 0;
    EcallStatus status = EcallStatus::Clean;
    std::set<ViolationSignature> expected;
};

struct CorpusManifest {
    std::string sample;
    std::vector<ExpectedEcall> ecalls;
    std::uint64_t max_wall_time_ms = 0;
};

std::string serialize_manifest(const CorpusManifest& manifest);
std::optional<CorpusManifest> parse_manifest(std::string_view bytes, std::string* error = nullptr);

std::set<ViolationSignature> signatures_of(const EcallReport& report);

/// Differences between a manifest and an analysis, one line each; empty on an exact match.
std::vector<std::string> compare_to_manifest(const CorpusManifest& manifest, const EnclaveAnalysis& analysis);

struct SampleOutcome {
    std::string name;
    bool passed = false;
    std::vector<std::string> mismatches;
    std::chrono::milliseconds wall_time{0};
    std::optional<EnclaveAnalysis> analysis;
};

/// Assembles `<dir>/<name>.eml`, derives annotations, analyses every ecall and
/// compares with `<dir>/<name>.json`.
SampleOutcome run_sample(const std::filesystem::path& dir, const std::string& name, const AnalysisConfig& config);

struct CorpusSummary {
    std::vector<SampleOutcome> samples;
    std::vector<std::string> coverage_gaps;  // violation kinds no manifest expects

    bool passed() const;
};

/// Every sample with a manifest in `dir`, in name order.
CorpusSummary run_corpus(const std::filesystem::path& dir, const AnalysisConfig& config);

std::vector<std::string> list_samples(const std::filesystem::path& dir);

}  // namespace orderly
