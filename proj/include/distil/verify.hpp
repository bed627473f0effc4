#pragma once
// Built-in self-checks: gradient checks for every differentiable
// operation and loss, loss-value oracles against independent scalar
// references, sentence-splitter fuzzing, and F1 scorer oracles.

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "distil/distill.hpp"

namespace distil {

struct SuiteResult {
    std::string name;
    int checks = 0;
    int failures = 0;
};

struct VerifyReport {
    std::vector<SuiteResult> suites;

    bool ok() const {
        for (const auto& s : suites)
            if (s.failures > 0) return false;
        return true;
    }
};

// Fault-injection seam. The suites obtain the distillation loss through
// this hook (production kd_loss by default) while the numeric references
// are recomputed independently, so substituting a corrupted implementation
// must make the checks fail.
struct VerifyHooks {
    std::function<LossResult(Graph&, const Tensor&, const Tensor&, double)>
        kd_loss;
};

// Runs every suite, streaming one "name: N checks, M failures" line per
// suite to `out`, and returns the counts.
VerifyReport run_verification(std::ostream& out,
                              const VerifyHooks& hooks = {});

}  // namespace distil
