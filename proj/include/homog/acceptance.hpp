#pragma once

// The cross-formulation acceptance suite: nine criteria covering route
// agreement for the effective permittivity, order-of-accuracy of the multiple
// scales integral forms, the naive-form misfit, the open-curve endpoint term,
// both effective-charge routes, limit consistency, the dilute-limit oracle,
// DNS validation of the homogenised model, and the type-invariant bundle.

#include <ostream>
#include <string>
#include <vector>

namespace homog {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool passed = false;
    std::string detail;  // measured values vs thresholds
    double seconds = 0.0;
};

struct AcceptanceReport {
    std::vector<CriterionResult> results;

    bool all_passed() const {
        for (const auto& r : results)
            if (!r.passed) return false;
        return true;
    }
    int failures() const {
        int n = 0;
        for (const auto& r : results) n += r.passed ? 0 : 1;
        return n;
    }
};

AcceptanceReport run_acceptance_suite(int threads = 1);

// One line per criterion: "PASS|FAIL  <id> <name>: <detail>".
void print_acceptance(std::ostream& os, const AcceptanceReport& report);

// CSV: criterion,name,pass,detail.
void write_acceptance_csv(std::ostream& os, const AcceptanceReport& report);

}  // namespace homog
