// Command-line front end: assemble, analyze, report, corpus.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include "orderly/assembler.hpp"
#include "orderly/corpus.hpp"
#include "orderly/heuristics.hpp"
#include "orderly/orderliness.hpp"
#include "orderly/report.hpp"

namespace {

using namespace orderly;

constexpr int kExitOk = 0;
constexpr int kExitFindings = 1;
constexpr int kExitInput = 2;
constexpr int kExitIo = 3;

std::optional<std::string> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool write_file(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) return false;
    out << bytes;
    out.flush();
    return static_cast<bool>(out);
}

void print(const std::vector<Diagnostic>& diags, const std::string& path) {
    for (const auto& d : diags) std::cerr << path << ": " << to_string(d) << "\n";
}

int cmd_assemble(const std::string& source_path, const std::string& output_path) {
    auto source = read_file(source_path);
    if (!source) {
        std::cerr << "cannot read " << source_path << "\n";
        return kExitIo;
    }
    auto result = assemble(*source);
    print(result.diagnostics, source_path);
    if (!result.ok()) return kExitInput;
    if (!write_file(output_path, serialize_image(*result.image))) {
        std::cerr << "cannot write " << output_path << "\n";
        return kExitIo;
    }
    return kExitOk;
}

// Images are containers; `.eml` sources are assembled on the fly.
std::optional<EnclaveImage> load_image(const std::string& path) {
    auto bytes = read_file(path);
    if (!bytes) {
        std::cerr << "cannot read " << path << "\n";
        return std::nullopt;
    }
    if (path.size() > 4 && path.compare(path.size() - 4, 4, ".eml") == 0) {
        auto result = assemble(*bytes);
        print(result.diagnostics, path);
        return result.image;
    }
    auto result = parse_image(*bytes);
    print(result.diagnostics, path);
    return result.image;
}

struct AnalyzeOptions {
    std::string image_path;
    std::string annotations_path;
    bool auto_annotations = false;
    std::optional<std::size_t> ecall;
    bool all = false;
    std::optional<std::uint64_t> stack_size;
    std::optional<std::uint64_t> heap_size;
    std::size_t max_branches = 100;
    std::size_t max_violations = 20;
    double time_budget = 1200.0;
    std::string output_path;
    std::string format = "json";
    bool timing = false;
};

int cmd_analyze(const AnalyzeOptions& opt) {
    auto image = load_image(opt.image_path);
    if (!image) return kExitInput;

    std::optional<TransitionAnnotations> annotations;
    if (!opt.annotations_path.empty()) {
        auto bytes = read_file(opt.annotations_path);
        if (!bytes) {
            std::cerr << "cannot read " << opt.annotations_path << "\n";
            return kExitInput;
        }
        std::string error;
        annotations = parse_annotations(*bytes, &error);
        if (!annotations) {
            std::cerr << opt.annotations_path << ": " << error << "\n";
            return kExitInput;
        }
        auto errors = validate_annotations(*image, *annotations);
        for (const auto& e : errors) std::cerr << opt.annotations_path << ": " << e << "\n";
        if (!errors.empty()) return kExitInput;
    } else if (image->annotations && !opt.auto_annotations) {
        annotations = image->annotations;
    } else {
        auto derived = derive_annotations(*image);
        for (const auto& d : derived.diagnostics) {
            std::cerr << (d.severity == Severity::Error ? "error: " : "warning: ") << d.message << "\n";
        }
        if (!derived.ok()) return kExitInput;
        annotations = derived.annotations;
    }

    AnalysisConfig config;
    config.stack_size = opt.stack_size;
    config.heap_size = opt.heap_size;
    config.max_active_branches = opt.max_branches;
    config.max_violations = opt.max_violations;
    config.time_budget_seconds = opt.time_budget;

    EnclaveAnalysis analysis;
    try {
        validate_config(config);
        if (opt.ecall && !opt.all) {
            if (*opt.ecall >= annotations->secure.size()) {
                std::cerr << "invalid ecall index\n";
                return kExitInput;
            }
            analysis.ecalls.push_back(analyze_ecall(*image, *annotations, config, *opt.ecall));
            analysis.totals.add(analysis.ecalls.back().status);
        } else {
            analysis = analyze_enclave(*image, *annotations, config);
        }
    } catch (const AnalysisError& e) {
        std::cerr << e.what() << "\n";
        return kExitInput;
    }

    const auto report = make_report(*image, config, analysis, opt.timing);
    const std::string text = opt.format == "text" ? render_text(report) : serialize_report(report) + "\n";
    if (opt.output_path.empty()) {
        std::cout << text;
    } else if (!write_file(opt.output_path, text)) {
        std::cerr << "cannot write " << opt.output_path << "\n";
        return kExitInput;
    }
    return analysis.totals.clean == analysis.totals.ecalls ? kExitOk : kExitFindings;
}

int cmd_report(const std::string& path, const std::string& format) {
    auto bytes = read_file(path);
    if (!bytes) {
        std::cerr << "cannot read " << path << "\n";
        return kExitInput;
    }
    auto parsed = parse_report(*bytes);
    if (!parsed.report) {
        std::cerr << path << ": " << parsed.error << "\n";
        return kExitInput;
    }
    std::cout << (format == "json" ? serialize_report(*parsed.report) + "\n" : render_text(*parsed.report));
    return kExitOk;
}

int cmd_corpus(const std::string& dir, double time_budget) {
    AnalysisConfig config;
    config.time_budget_seconds = time_budget;
    CorpusSummary summary;
    try {
        summary = run_corpus(dir, config);
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return kExitInput;
    }
    for (const auto& s : summary.samples) {
        std::cout << (s.passed ? "PASS " : "FAIL ") << s.name << " (" << s.wall_time.count() << " ms)\n";
        for (const auto& m : s.mismatches) std::cout << "  " << m << "\n";
    }
    for (const auto& g : summary.coverage_gaps) std::cout << "no sample expects " << g << "\n";
    return summary.passed() ? kExitOk : kExitFindings;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Orderly-enclave validator for EML images"};
    app.require_subcommand(1);

    std::string asm_source, asm_output;
    auto* assemble_cmd = app.add_subcommand("assemble", "Assemble an .eml source into an image container");
    assemble_cmd->add_option("source", asm_source, "EML source file")->required();
    assemble_cmd->add_option("-o,--output", asm_output, "Image output path")->required();

    AnalyzeOptions an;
    auto* analyze_cmd = app.add_subcommand("analyze", "Check an image for orderliness violations");
    analyze_cmd->add_option("image", an.image_path, "Image container (or .eml source)")->required();
    auto* ann_opt = analyze_cmd->add_option("--annotations", an.annotations_path, "Transition annotations file");
    analyze_cmd->add_flag("--auto", an.auto_annotations, "Derive annotations from symbols")->excludes(ann_opt);
    auto* ecall_opt = analyze_cmd->add_option("--ecall", an.ecall, "Analyse one ecall");
    analyze_cmd->add_flag("--all", an.all, "Analyse every ecall (default)")->excludes(ecall_opt);
    analyze_cmd->add_option("--stack-size", an.stack_size, "Override the stack size");
    analyze_cmd->add_option("--heap-size", an.heap_size, "Override the heap size");
    analyze_cmd->add_option("--max-branches", an.max_branches, "Active state cap")->capture_default_str();
    analyze_cmd->add_option("--max-violations", an.max_violations, "Violation cap")->capture_default_str();
    analyze_cmd->add_option("--time-budget", an.time_budget, "Seconds per ecall")->capture_default_str();
    analyze_cmd->add_option("-o,--output", an.output_path, "Report output path (default stdout)");
    analyze_cmd->add_option("--format", an.format, "json or text")
        ->check(CLI::IsMember({"json", "text"}))
        ->capture_default_str();
    analyze_cmd->add_flag("--timing", an.timing, "Record wall times in the report");

    std::string report_path, report_format = "text";
    auto* report_cmd = app.add_subcommand("report", "Render a report document");
    report_cmd->add_option("report", report_path, "Report JSON")->required();
    report_cmd->add_option("--format", report_format, "text or json")
        ->check(CLI::IsMember({"json", "text"}))
        ->capture_default_str();

    std::string corpus_dir;
    double corpus_budget = 1200.0;
    auto* corpus_cmd = app.add_subcommand("corpus", "Check every sample in a corpus directory against its manifest");
    corpus_cmd->add_option("dir", corpus_dir, "Corpus directory")->required();
    corpus_cmd->add_option("--time-budget", corpus_budget, "Seconds per ecall")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInput;
    }

    if (*assemble_cmd) return cmd_assemble(asm_source, asm_output);
    if (*analyze_cmd) return cmd_analyze(an);
    if (*report_cmd) return cmd_report(report_path, report_format);
    if (*corpus_cmd) return cmd_corpus(corpus_dir, corpus_budget);
    return kExitInput;
}
