#include "orderly/report.hpp"

#include <openssl/sha.h>

#include <iomanip>
#include <json.hpp>
#include <sstream>

#include "orderly/assembler.hpp"
#include "orderly/text.hpp"

namespace orderly {

namespace {

using ojson = nlohmann::ordered_json;

struct ReportError {
    std::string message;
};

[[noreturn]] void malformed(const std::string& what) { throw ReportError{"malformed report: " + what}; }

const ojson& member(const ojson& obj, const char* key) {
    if (!obj.is_object() || !obj.contains(key)) malformed(std::string("missing key ") + key);
    return obj.at(key);
}

std::uint64_t hex_of(const ojson& j, const char* what) {
    if (!j.is_string()) malformed(what);
    auto v = parse_hex(j.get<std::string>());
    if (!v) malformed(what);
    return *v;
}

std::uint64_t count_of(const ojson& j, const char* what) {
    if (!j.is_number_unsigned()) malformed(what);
    return j.get<std::uint64_t>();
}

std::string string_of(const ojson& j, const char* what) {
    if (!j.is_string()) malformed(what);
    return j.get<std::string>();
}

ojson encode_optional_hex(const std::optional<std::uint64_t>& v) { return v ? ojson(to_hex(*v)) : ojson(nullptr); }

std::optional<std::uint64_t> decode_optional_hex(const ojson& j, const char* what) {
    if (j.is_null()) return std::nullopt;
    return hex_of(j, what);
}

ojson encode_violation(const Violation& v) {
    ojson o;
    o["kind"] = std::string(violation_kind_name(v.kind));
    o["rip"] = to_hex(v.rip);
    o["phase"] = std::string(phase_name(v.phase));
    o["detail"] = v.detail;
    o["feasibility"] = std::string(feasibility_name(v.feasibility));
    ojson trace = ojson::array();
    for (auto a : v.trace) trace.push_back(to_hex(a));
    o["trace"] = std::move(trace);
    return o;
}

Violation decode_violation(const ojson& j, std::size_t ecall_index) {
    Violation v{};
    auto kind = parse_violation_kind(string_of(member(j, "kind"), "kind"));
    if (!kind) malformed("violation kind");
    v.kind = *kind;
    v.rip = hex_of(member(j, "rip"), "rip");
    auto phase = parse_phase(string_of(member(j, "phase"), "phase"));
    if (!phase) malformed("phase");
    v.phase = *phase;
    v.detail = string_of(member(j, "detail"), "detail");
    const std::string f = string_of(member(j, "feasibility"), "feasibility");
    if (f == feasibility_name(Feasibility::Sat)) v.feasibility = Feasibility::Sat;
    else if (f == feasibility_name(Feasibility::Unknown)) v.feasibility = Feasibility::Unknown;
    else malformed("feasibility");
    const ojson& trace = member(j, "trace");
    if (!trace.is_array()) malformed("trace");
    for (const auto& a : trace) v.trace.push_back(hex_of(a, "trace"));
    v.ecall_index = ecall_index;
    return v;
}

}  // namespace

std::string image_digest(const EnclaveImage& image) {
    const std::string bytes = serialize_image(image);
    unsigned char md[SHA256_DIGEST_LENGTH];
    SHA256(reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size(), md);
    std::ostringstream out;
    out << "sha256:" << std::hex << std::setfill('0');
    for (unsigned char b : md) out << std::setw(2) << static_cast<int>(b);
    return out.str();
}

EnclaveReport make_report(const EnclaveImage& image, const AnalysisConfig& config, const EnclaveAnalysis& analysis,
                          bool keep_timing) {
    EnclaveReport r;
    r.image_digest = image_digest(image);
    r.config = config;
    r.ecalls = analysis.ecalls;
    r.totals = analysis.totals;
    if (!keep_timing) {
        for (auto& e : r.ecalls) e.wall_time = std::chrono::milliseconds{0};
    }
    return r;
}

std::string_view feasibility_name(Feasibility f) { return f == Feasibility::Sat ? "sat" : "unknown"; }

std::string serialize_report(const EnclaveReport& report) {
    ojson doc;
    doc["tool_version"] = report.tool_version;
    doc["image_digest"] = report.image_digest;
    ojson config;
    config["stack_size"] = encode_optional_hex(report.config.stack_size);
    config["heap_size"] = encode_optional_hex(report.config.heap_size);
    config["max_active_branches"] = report.config.max_active_branches;
    config["max_violations"] = report.config.max_violations;
    config["time_budget_seconds"] = report.config.time_budget_seconds;
    config["step_budget_per_path"] = report.config.step_budget_per_path;
    doc["config"] = std::move(config);
    ojson ecalls = ojson::array();
    for (const auto& e : report.ecalls) {
        ojson o;
        o["index"] = e.ecall_index;
        o["status"] = std::string(status_name(e.status));
        ojson violations = ojson::array();
        for (const auto& v : e.violations) violations.push_back(encode_violation(v));
        o["violations"] = std::move(violations);
        o["paths_explored"] = e.paths_explored;
        o["paths_truncated"] = e.paths_truncated;
        o["wall_time_ms"] = static_cast<std::uint64_t>(e.wall_time.count());
        ecalls.push_back(std::move(o));
    }
    doc["ecalls"] = std::move(ecalls);
    ojson totals;
    totals["ecalls"] = report.totals.ecalls;
    totals["flagged"] = report.totals.flagged;
    totals["timeout"] = report.totals.timeout;
    totals["stopped"] = report.totals.stopped;
    totals["clean"] = report.totals.clean;
    doc["totals"] = std::move(totals);
    return doc.dump();
}

ReportParseResult parse_report(std::string_view bytes) {
    ReportParseResult result;
    ojson doc;
    try {
        doc = ojson::parse(bytes);
    } catch (const nlohmann::json::exception&) {
        result.error = "malformed report: not JSON";
        return result;
    }
    try {
        EnclaveReport r;
        r.tool_version = string_of(member(doc, "tool_version"), "tool_version");
        r.image_digest = string_of(member(doc, "image_digest"), "image_digest");

        const ojson& config = member(doc, "config");
        r.config.stack_size = decode_optional_hex(member(config, "stack_size"), "stack_size");
        r.config.heap_size = decode_optional_hex(member(config, "heap_size"), "heap_size");
        r.config.max_active_branches = count_of(member(config, "max_active_branches"), "max_active_branches");
        r.config.max_violations = count_of(member(config, "max_violations"), "max_violations");
        const ojson& budget = member(config, "time_budget_seconds");
        if (!budget.is_number()) malformed("time_budget_seconds");
        r.config.time_budget_seconds = budget.get<double>();
        r.config.step_budget_per_path = count_of(member(config, "step_budget_per_path"), "step_budget_per_path");

        const ojson& ecalls = member(doc, "ecalls");
        if (!ecalls.is_array()) malformed("ecalls");
        StatusTotals recount;
        for (const auto& e : ecalls) {
            EcallReport er;
            er.ecall_index = count_of(member(e, "index"), "index");
            auto status = parse_status(string_of(member(e, "status"), "status"));
            if (!status) malformed("status");
            er.status = *status;
            const ojson& violations = member(e, "violations");
            if (!violations.is_array()) malformed("violations");
            for (const auto& v : violations) er.violations.push_back(decode_violation(v, er.ecall_index));
            er.paths_explored = count_of(member(e, "paths_explored"), "paths_explored");
            er.paths_truncated = count_of(member(e, "paths_truncated"), "paths_truncated");
            er.wall_time = std::chrono::milliseconds{count_of(member(e, "wall_time_ms"), "wall_time_ms")};
            recount.add(er.status);
            r.ecalls.push_back(std::move(er));
        }

        const ojson& totals = member(doc, "totals");
        r.totals.ecalls = count_of(member(totals, "ecalls"), "totals.ecalls");
        r.totals.flagged = count_of(member(totals, "flagged"), "totals.flagged");
        r.totals.timeout = count_of(member(totals, "timeout"), "totals.timeout");
        r.totals.stopped = count_of(member(totals, "stopped"), "totals.stopped");
        r.totals.clean = count_of(member(totals, "clean"), "totals.clean");

        const auto& t = r.totals;
        if (t.flagged + t.timeout + t.stopped + t.clean != t.ecalls) {
            result.error = "invariant violated: totals do not sum to the ecall count";
            return result;
        }
        if (!(t == recount)) {
            result.error = "invariant violated: totals disagree with per-ecall statuses";
            return result;
        }
        result.report = std::move(r);
    } catch (const ReportError& e) {
        result.error = e.message;
    } catch (const nlohmann::json::exception& e) {
        result.error = std::string("malformed report: ") + e.what();
    }
    return result;
}

std::string render_text(const EnclaveReport& report) {
    std::ostringstream out;
    out << "tool " << report.tool_version << "  image " << report.image_digest << "\n\n";
    out << std::left << std::setw(7) << "ecall" << std::setw(9) << "status" << std::right << std::setw(12)
        << "violations" << std::setw(8) << "paths" << std::setw(11) << "truncated" << std::setw(10) << "time_ms"
        << "\n";
    for (const auto& e : report.ecalls) {
        out << std::left << std::setw(7) << e.ecall_index << std::setw(9) << status_name(e.status) << std::right
            << std::setw(12) << e.violations.size() << std::setw(8) << e.paths_explored << std::setw(11)
            << e.paths_truncated << std::setw(10) << e.wall_time.count() << "\n";
    }
    const auto& t = report.totals;
    out << "\n#ecalls " << t.ecalls << "  #flagged " << t.flagged << "  #timeout " << t.timeout << "  #stopped "
        << t.stopped << "  #clean " << t.clean << "\n";

    for (const auto& e : report.ecalls) {
        out << "\necall " << e.ecall_index << ":";
        if (e.violations.empty()) {
            out << " no violations\n";
            continue;
        }
        out << "\n";
        for (const auto& v : e.violations) {
            out << "  " << violation_kind_name(v.kind) << " at " << to_hex(v.rip) << " (" << phase_name(v.phase)
                << ", " << feasibility_name(v.feasibility) << "): " << v.detail << "\n";
            if (!v.trace.empty()) {
                const std::size_t shown = std::min<std::size_t>(v.trace.size(), 8);
                out << "    trace";
                if (shown < v.trace.size()) out << " ...";
                for (std::size_t k = v.trace.size() - shown; k < v.trace.size(); ++k) out << " " << to_hex(v.trace[k]);
                out << "\n";
            }
        }
    }
    return out.str();
}

}  // namespace orderly
