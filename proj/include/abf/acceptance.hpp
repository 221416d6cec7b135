#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace abf {

/** Fast keeps grids at 64x64 and ensembles at 1e5; full enlarges the drift audit. */
enum class Suite { Fast, Full };

Suite suite_from_name(const std::string& name);
std::string suite_name(Suite s);

struct CriterionResult {
    int id = 0;
    std::string name;
    bool passed = false;
    double seconds = 0.0;
    std::string detail; // space-separated key=value metrics
};

struct AcceptanceOptions {
    Suite suite = Suite::Fast;
    int threads = 4;
    std::uint64_t seed = 42;
    /**
     * Isolation test hook: tighten the named criterion's gating threshold by
     * tamper_factor so it must fail while every other criterion is untouched.
     * 0 disables the hook.
     */
    int tamper_criterion = 0;
    double tamper_factor = 1e6;
    /** Scratch directory for runs that must exercise the artifact pipeline. */
    std::string scratch_dir = "acceptance_scratch";
    /** Run only this criterion when nonzero. */
    int only_criterion = 0;
};

struct AcceptanceReport {
    std::vector<CriterionResult> results;
    bool all_passed = false;
    double total_seconds = 0.0;
    Suite suite = Suite::Fast;
};

/** Execute the acceptance criteria; failures are report entries, never throws. */
AcceptanceReport run_acceptance(const AcceptanceOptions& opts = {});

/** One machine-readable line per criterion plus a summary line. */
std::string format_report(const AcceptanceReport& report);

} // namespace abf
