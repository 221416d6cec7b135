#include "abflab.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>
#include <vector>

#include "abf/acceptance.hpp"
#include "abf/config.hpp"
#include "abf/errors.hpp"
#include "abf/experiment.hpp"

struct abf_experiment {
    abf::ExperimentConfig cfg;
    std::string last_error;
    std::string echo;
    std::vector<std::string> artifacts;
    int exit_code = 0;
};

namespace {

constexpr const char* kVersion = "abflab 1.0.0";

abf_status capture(abf_experiment* exp, abf_status code, const std::string& message) {
    if (exp) exp->last_error = message;
    return code;
}

template <typename Fn>
abf_status guarded(abf_experiment* exp, Fn&& fn) {
    try {
        fn();
        if (exp) exp->last_error.clear();
        return ABF_OK;
    } catch (const abf::ConfigError& e) {
        return capture(exp, ABF_ERR_CONFIG, e.what());
    } catch (const abf::NonConvergence& e) {
        return capture(exp, ABF_ERR_NONCONVERGENCE, e.what());
    } catch (const abf::SolverFailure& e) {
        return capture(exp, ABF_ERR_SOLVER, e.what());
    } catch (const abf::IoError& e) {
        return capture(exp, ABF_ERR_IO, e.what());
    } catch (const abf::ContractViolation& e) {
        return capture(exp, ABF_ERR_CONFIG, e.what());
    } catch (const std::exception& e) {
        return capture(exp, ABF_ERR_INTERNAL, e.what());
    } catch (...) {
        return capture(exp, ABF_ERR_INTERNAL, "unknown error");
    }
}

} // namespace

extern "C" {

const char* abf_version(void) { return kVersion; }

abf_experiment* abf_experiment_create(void) { return new (std::nothrow) abf_experiment(); }

void abf_experiment_destroy(abf_experiment* exp) { delete exp; }

abf_status abf_load_file(abf_experiment* exp, const char* path) {
    if (!exp || !path) return ABF_ERR_INVALID_ARGUMENT;
    return guarded(exp, [&] { exp->cfg = abf::parse_config_file(path); });
}

abf_status abf_load_string(abf_experiment* exp, const char* text) {
    if (!exp || !text) return ABF_ERR_INVALID_ARGUMENT;
    return guarded(exp, [&] { exp->cfg = abf::parse_config_string(text); });
}

abf_status abf_set(abf_experiment* exp, const char* dotted_key, const char* value) {
    if (!exp || !dotted_key || !value) return ABF_ERR_INVALID_ARGUMENT;
    return guarded(exp, [&] { abf::apply_override(exp->cfg, dotted_key, value); });
}

const char* abf_config_echo(abf_experiment* exp) {
    if (!exp) return "";
    const abf_status st = guarded(exp, [&] { exp->echo = abf::render_config(exp->cfg); });
    return st == ABF_OK ? exp->echo.c_str() : "";
}

abf_status abf_run(abf_experiment* exp, const char* out_dir) {
    if (!exp || !out_dir) return ABF_ERR_INVALID_ARGUMENT;
    abf::RunOutcome outcome;
    const abf_status wrap =
        guarded(exp, [&] { outcome = abf::run_experiment(exp->cfg, out_dir); });
    if (wrap != ABF_OK) {
        exp->exit_code = 3;
        return wrap;
    }
    exp->exit_code = outcome.exit_code;
    exp->artifacts = outcome.artifacts;
    switch (outcome.exit_code) {
        case 0:
            exp->last_error.clear();
            return ABF_OK;
        case 2:
            exp->last_error = outcome.message;
            return ABF_ERR_CONFIG;
        case 3:
            exp->last_error = outcome.message;
            return ABF_ERR_SOLVER;
        case 4:
            exp->last_error = outcome.message;
            return ABF_ERR_NONCONVERGENCE;
        case 5:
            exp->last_error = outcome.message;
            return ABF_ERR_IO;
        default:
            exp->last_error = outcome.message;
            return ABF_ERR_INTERNAL;
    }
}

int abf_exit_code(const abf_experiment* exp) { return exp ? exp->exit_code : -1; }

const char* abf_last_error(const abf_experiment* exp) {
    return exp ? exp->last_error.c_str() : "";
}

size_t abf_artifact_count(const abf_experiment* exp) { return exp ? exp->artifacts.size() : 0; }

const char* abf_artifact_path(const abf_experiment* exp, size_t index) {
    if (!exp || index >= exp->artifacts.size()) return nullptr;
    return exp->artifacts[index].c_str();
}

abf_status abf_run_acceptance(const char* suite, int threads, const char* scratch_dir,
                              int tamper_criterion, int* all_passed, char** report_out) {
    if (!suite || !report_out) return ABF_ERR_INVALID_ARGUMENT;
    try {
        abf::AcceptanceOptions opts;
        opts.suite = abf::suite_from_name(suite);
        if (threads > 0) opts.threads = threads;
        if (scratch_dir && scratch_dir[0] != '\0') opts.scratch_dir = scratch_dir;
        opts.tamper_criterion = tamper_criterion;
        const abf::AcceptanceReport report = abf::run_acceptance(opts);
        const std::string text = abf::format_report(report);
        char* buf = static_cast<char*>(std::malloc(text.size() + 1));
        if (!buf) return ABF_ERR_INTERNAL;
        std::memcpy(buf, text.c_str(), text.size() + 1);
        *report_out = buf;
        if (all_passed) *all_passed = report.all_passed ? 1 : 0;
        return ABF_OK;
    } catch (const abf::ConfigError&) {
        return ABF_ERR_CONFIG;
    } catch (const std::exception&) {
        return ABF_ERR_INTERNAL;
    }
}

void abf_free_string(char* s) { std::free(s); }

} // extern "C"
