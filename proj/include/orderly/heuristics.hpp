#pragma once

// Transition annotations recovered from symbol naming conventions:
// enclave_entry, sanitised, eexit_point, and CALL sites of ecall_* / ocall_*.

#include <optional>
#include <string>
#include <vector>

#include "orderly/assembler.hpp"
#include "orderly/isa.hpp"

namespace orderly {

struct AnnotationDerivation {
    std::optional<TransitionAnnotations> annotations;  // absent when any diagnostic is an error
    std::vector<Diagnostic> diagnostics;                // line is always 0

    bool ok() const { return annotations.has_value(); }
};

/// Explicit annotations carried by the image win; the heuristic is skipped.
AnnotationDerivation derive_annotations(const EnclaveImage& image);

}  // namespace orderly
