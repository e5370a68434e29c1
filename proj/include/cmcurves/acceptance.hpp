#pragma once

// The acceptance suite: one entry per verified claim of the library, each
// reporting a measured value against its bound. The CLI `verify` subcommand
// and the standalone acceptance binary both run through this.

#include <string>
#include <vector>

#include "cmcurves/elliptic.hpp"

namespace cmc {

struct SuiteConfig {
    cplx tau{0.0, 1.0};
    int n = 2;
    double dt = 1e-3;
    double t_end = 1.0;
    unsigned long long seed = 7321;
    double tol = 1e-10;
};

struct CriterionResult {
    int id = 0;
    std::string description;
    double measured = 0.0;
    double bound = 0.0;
    bool pass = false;
    std::string detail;  // short free-form diagnostics
};

// Runs criteria 1..12 (all numerical checks). A criterion that throws is
// recorded as a failure carrying the exception message; the suite never
// aborts half-way.
std::vector<CriterionResult> run_acceptance(const SuiteConfig& cfg);

// Report schema: {version, config:{...}, criteria:[{id, description,
// measured, bound, pass}], wallclock_seconds}. A negative wallclock omits
// the field (used for byte-comparing two runs).
std::string acceptance_report_json(const SuiteConfig& cfg,
                                   const std::vector<CriterionResult>& criteria,
                                   double wallclock_seconds);

// Criterion 13: two full runs with the same config must serialize to
// byte-identical reports (wallclock excluded). Appends its result to a
// copy of `first` and returns the extended list.
CriterionResult determinism_criterion(const SuiteConfig& cfg,
                                      const std::vector<CriterionResult>& first);

}  // namespace cmc
