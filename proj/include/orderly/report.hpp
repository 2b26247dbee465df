#pragma once

// Machine-readable analysis report and its text rendering.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "orderly/isa.hpp"
#include "orderly/orderliness.hpp"

namespace orderly {

inline constexpr std::string_view kToolVersion = "0.1.0";

struct EnclaveReport {
    std::string tool_version{kToolVersion};
    std::string image_digest;
    AnalysisConfig config;
    std::vector<EcallReport> ecalls;
    StatusTotals totals;
};

/// "sha256:<hex>" over the canonical container bytes.
std::string image_digest(const EnclaveImage& image);

/// Wall times are zeroed unless `keep_timing` is set, so that repeated runs
/// produce identical documents.
EnclaveReport make_report(const EnclaveImage& image, const AnalysisConfig& config, const EnclaveAnalysis& analysis,
                          bool keep_timing = false);

std::string_view feasibility_name(Feasibility f);

/// Canonical JSON: fixed key order, lowercase hex addresses, no whitespace.
std::string serialize_report(const EnclaveReport& report);

struct ReportParseResult {
    std::optional<EnclaveReport> report;
    std::string error;
};

/// Rejects malformed documents and reports whose totals disagree with the
/// per-ecall statuses ("invariant violated: ...").
ReportParseResult parse_report(std::string_view bytes);

std::string render_text(const EnclaveReport& report);

}  // namespace orderly
