#pragma once

// EML assembly front end and the JSON image container.
//
// Assembly grammar, one statement per line, `;` starts a comment:
//
//   .enclave base=<n> size=<n>
//   .code    offset=<n> [length=<n>]
//   .data    offset=<n> length=<n>
//   .heap    offset=<n> size=<n>
//   .stack   offset=<n> size=<n>
//   .word    <n>[, <n>...]            ; inside .data
//   label:   [instruction]
//   .annotations
//     entry=<label>  sanitised=<label>  exit=<label>
//     secure=(<label>,<label>)  ocall=(<label>,<label>)   ; repeatable

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "orderly/isa.hpp"

namespace orderly {

enum class Severity { Error, Warning };

struct Diagnostic {
    std::size_t line = 0;  // 1-based
    std::string message;
    Severity severity = Severity::Error;
};

std::string to_string(const Diagnostic& d);

struct AssemblyResult {
    std::optional<EnclaveImage> image;  // absent when any error was reported
    std::vector<Diagnostic> diagnostics;

    bool ok() const { return image.has_value(); }
};

AssemblyResult assemble(std::string_view source);

/// Canonical container: fixed key order, lowercase 0x hex, no whitespace.
std::string serialize_image(const EnclaveImage& image);

struct ImageParseResult {
    std::optional<EnclaveImage> image;
    std::vector<Diagnostic> diagnostics;

    bool ok() const { return image.has_value(); }
};

ImageParseResult parse_image(std::string_view bytes);

/// Standalone annotations document (the same object embedded in images).
std::string serialize_annotations(const TransitionAnnotations& annotations);
std::optional<TransitionAnnotations> parse_annotations(std::string_view bytes, std::string* error = nullptr);

}  // namespace orderly
