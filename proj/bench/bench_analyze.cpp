// Whole-enclave analysis, OpenMP driver against the serial reference.

#include <benchmark/benchmark.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "orderly/assembler.hpp"
#include "orderly/heuristics.hpp"
#include "orderly/orderliness.hpp"

using namespace orderly;

namespace {

struct Sample {
    EnclaveImage image;
    TransitionAnnotations annotations;
};

Sample load(const std::string& name) {
    std::ifstream in(std::filesystem::path(ORDERLY_CORPUS_DIR) / (name + ".eml"));
    std::ostringstream ss;
    ss << in.rdbuf();
    auto r = assemble(ss.str());
    if (!r.ok()) throw std::runtime_error(name + ": does not assemble");
    auto d = derive_annotations(*r.image);
    if (!d.ok()) throw std::runtime_error(name + ": no annotations");
    return {*r.image, *d.annotations};
}

const char* kSamples[] = {"ok_with_ocall", "vuln_symbolic_jump", "vuln_bad_range_check", "stress_violation_flood"};

template <EnclaveAnalysis (*Driver)(const EnclaveImage&, const TransitionAnnotations&, const AnalysisConfig&)>
void run(benchmark::State& state) {
    const Sample s = load(kSamples[state.range(0)]);
    const AnalysisConfig config;
    for (auto _ : state) {
        auto analysis = Driver(s.image, s.annotations, config);
        benchmark::DoNotOptimize(analysis);
    }
    state.SetLabel(kSamples[state.range(0)]);
}

}  // namespace

BENCHMARK(run<analyze_enclave>)->Name("analyze/openmp")->DenseRange(0, 3)->Unit(benchmark::kMillisecond);
BENCHMARK(run<analyze_enclave_serial>)->Name("analyze/serial")->DenseRange(0, 3)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
