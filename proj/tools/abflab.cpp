/// Command-line front end. Talks to the library exclusively through the C
/// interface in abflab.h; every engine maps to one subcommand.

#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "abflab.h"

namespace {

int status_to_exit(abf_status st) {
    switch (st) {
        case ABF_OK: return 0;
        case ABF_ERR_CONFIG: return 2;
        case ABF_ERR_INVALID_ARGUMENT: return 2;
        case ABF_ERR_SOLVER: return 3;
        case ABF_ERR_NONCONVERGENCE: return 4;
        case ABF_ERR_IO: return 5;
        case ABF_ERR_INTERNAL: return 3;
    }
    return 3;
}

struct EngineArgs {
    std::string config;
    std::string out = "out";
    std::string seed;
    std::string threads;
    std::vector<std::string> overrides;
};

void add_engine_options(CLI::App* cmd, EngineArgs& args) {
    cmd->add_option("--config", args.config, "Config file (defaults apply when omitted)");
    cmd->add_option("--out", args.out, "Output directory")->capture_default_str();
    cmd->add_option("--seed", args.seed, "Override experiment.seed");
    cmd->add_option("--threads", args.threads, "Override experiment.threads");
    cmd->add_option("--set", args.overrides, "Extra overrides, section.key=value")
        ->expected(-1);
}

int run_engine(const std::string& engine, const EngineArgs& args) {
    struct Deleter {
        void operator()(abf_experiment* e) const { abf_experiment_destroy(e); }
    };
    std::unique_ptr<abf_experiment, Deleter> exp(abf_experiment_create());
    if (!exp) {
        std::fprintf(stderr, "error: cannot allocate experiment\n");
        return 3;
    }
    abf_status st = ABF_OK;
    if (!args.config.empty()) {
        st = abf_load_file(exp.get(), args.config.c_str());
        if (st != ABF_OK) {
            std::fprintf(stderr, "error: %s\n", abf_last_error(exp.get()));
            return status_to_exit(st);
        }
    }
    auto set = [&](const char* key, const std::string& value) {
        if (st != ABF_OK) return;
        st = abf_set(exp.get(), key, value.c_str());
    };
    set("experiment.engine", engine);
    if (!args.seed.empty()) set("experiment.seed", args.seed);
    if (!args.threads.empty()) set("experiment.threads", args.threads);
    for (const std::string& kv : args.overrides) {
        if (st != ABF_OK) break;
        const std::size_t eq = kv.find('=');
        if (eq == std::string::npos || eq == 0) {
            std::fprintf(stderr, "error: --set expects section.key=value, got '%s'\n",
                         kv.c_str());
            return 2;
        }
        st = abf_set(exp.get(), kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str());
    }
    if (st != ABF_OK) {
        std::fprintf(stderr, "error: %s\n", abf_last_error(exp.get()));
        return status_to_exit(st);
    }

    st = abf_run(exp.get(), args.out.c_str());
    if (st != ABF_OK) {
        std::fprintf(stderr, "error: %s\n", abf_last_error(exp.get()));
        return abf_exit_code(exp.get()) != 0 ? abf_exit_code(exp.get()) : status_to_exit(st);
    }
    for (size_t i = 0; i < abf_artifact_count(exp.get()); ++i)
        std::printf("%s\n", abf_artifact_path(exp.get(), i));
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{std::string("abflab ") + " - adaptive-bias dynamics laboratory"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(abf_version()));

    struct Sub {
        const char* command;
        const char* engine;
        const char* help;
    };
    const std::vector<Sub> subs = {
        {"simulate-pde", "pde", "Grid solver for the biased density evolution"},
        {"simulate-particles", "particles", "Interacting-walker simulation with binned bias"},
        {"stationary", "stationary", "Self-consistent stationary state"},
        {"perturbation-sweep", "sweep", "Response of the recovered gradient to a perturbation"},
        {"diagnose", "diagnose", "Certified constants and inequality audits"},
    };
    std::vector<EngineArgs> engine_args(subs.size());
    for (std::size_t i = 0; i < subs.size(); ++i) {
        CLI::App* cmd = app.add_subcommand(subs[i].command, subs[i].help);
        add_engine_options(cmd, engine_args[i]);
    }

    std::string suite = "fast";
    std::string scratch = "acceptance_scratch";
    int acc_threads = 4;
    int tamper = 0;
    CLI::App* acc = app.add_subcommand("acceptance", "Run the acceptance criteria");
    acc->add_option("--suite", suite, "fast or full")->capture_default_str();
    acc->add_option("--threads", acc_threads, "Worker threads")->capture_default_str();
    acc->add_option("--scratch", scratch, "Scratch directory")->capture_default_str();
    acc->add_option("--tamper", tamper, "Isolation hook: force criterion N to fail");

    CLI11_PARSE(app, argc, argv);

    for (std::size_t i = 0; i < subs.size(); ++i)
        if (app.get_subcommand(subs[i].command)->parsed())
            return run_engine(subs[i].engine, engine_args[i]);

    if (acc->parsed()) {
        char* report = nullptr;
        int all_passed = 0;
        const abf_status st = abf_run_acceptance(suite.c_str(), acc_threads, scratch.c_str(),
                                                 tamper, &all_passed, &report);
        if (st != ABF_OK) {
            std::fprintf(stderr, "error: acceptance runner failed (status %d)\n",
                         static_cast<int>(st));
            return status_to_exit(st);
        }
        std::fputs(report, stdout);
        abf_free_string(report);
        return all_passed ? 0 : 1;
    }
    return 2;
}
