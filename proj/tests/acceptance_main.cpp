// Standalone acceptance runner: one line per criterion, exit 0 iff all pass.

#include <cstdio>

#include "cmcurves/acceptance.hpp"

int main() {
    cmc::SuiteConfig cfg;
    std::vector<cmc::CriterionResult> results = cmc::run_acceptance(cfg);
    results.push_back(cmc::determinism_criterion(cfg, results));

    bool all = true;
    for (const cmc::CriterionResult& r : results) {
        all = all && r.pass;
        std::printf("criterion %2d: %s  %s (measured %.3e, bound %.3e)%s%s\n",
                    r.id, r.pass ? "PASS" : "FAIL", r.description.c_str(),
                    r.measured, r.bound, r.detail.empty() ? "" : " -- ",
                    r.detail.c_str());
    }
    std::printf("%s\n", all ? "acceptance: all criteria passed"
                            : "acceptance: FAILURES present");
    return all ? 0 : 1;
}
