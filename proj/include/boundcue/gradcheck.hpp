#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace boundcue {

struct GradcheckOptions {
    std::uint64_t seed = 0;
    int instances = 20;
    int min_size = 8;
    int max_size = 16;
    double step = 1e-6;
    double tolerance = 1e-4;
    /// Test hook: scale the analytic gradient of this term by 1.01.
    std::string corrupt_term;
};

struct GradcheckTerm {
    std::string name;
    int instances = 0;
    double worst_rel_error = 0.0;
    bool passed = true;
};

struct GradcheckReport {
    std::vector<GradcheckTerm> terms;
    bool passed = true;
    /// Stable text form; identical for identical options.
    std::string text() const;
};

/// Analytic gradients of every energy term against central differences on
/// random masked instances.
GradcheckReport run_gradcheck(const GradcheckOptions& opts = {});

/// Terms covered by the suite.
const std::vector<std::string>& gradcheck_terms();

}  // namespace boundcue
