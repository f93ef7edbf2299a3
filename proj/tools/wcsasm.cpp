// SPDX-License-Identifier: Apache-2.0

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "wcs/agent.hpp"
#include "wcs/api_catalog.hpp"
#include "wcs/assembly.hpp"
#include "wcs/lang/check.hpp"
#include "wcs/lang/parser.hpp"
#include "wcs/log.hpp"
#include "wcs/orchestrator.hpp"
#include "wcs/plan.hpp"
#include "wcs/provider.hpp"
#include "wcs/sim/interp.hpp"
#include "wcs/tda.hpp"

namespace {

std::string read_file(const std::filesystem::path& path, const char* what) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(std::string("cannot open ") + what + ": " + path.string());
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void print_with_caret(const std::string& formatted, int col) {
    std::fprintf(stderr, "%s\n", formatted.c_str());
    if (col >= 1) {
        std::string caret(static_cast<std::size_t>(col - 1) + 4, ' ');
        caret += "^";
        std::fprintf(stderr, "%s\n", caret.c_str());
    }
}

struct CommonArgs {
    std::string design;
    std::string workcell;
    std::string provider_selector;
    std::string model = "gpt-4";
    std::string aliases;
    std::string api_catalog;
    bool verbose = false;
};

wcs::ProviderConfig provider_from(const CommonArgs& args) {
    wcs::ProviderConfig config = wcs::parse_provider_selector(args.provider_selector);
    config.model = args.model;
    return config;
}

int cmd_decompose(const CommonArgs& args, const std::string& task, const std::string& tda_examples,
                  const std::string& out_path) {
    const wcs::AssemblySpec assembly = wcs::load_assembly(read_file(args.design, "design"));
    if (!args.workcell.empty()) {
        const wcs::WorkcellSpec cell = wcs::load_workcell(read_file(args.workcell, "workcell"));
        wcs::validate_workcell(cell, assembly);
    }
    const wcs::AliasTable aliases =
        args.aliases.empty() ? wcs::AliasTable{} : wcs::AliasTable::from_file_or_identity(args.aliases);
    wcs::ProviderPtr provider = wcs::make_provider(provider_from(args));
    wcs::AgentClient client(provider, args.model, aliases);

    std::vector<std::string> part_names;
    for (const auto& part : assembly.parts) part_names.push_back(part.name);
    wcs::ChatHistory history = wcs::build_tda_context(assembly, part_names, wcs::all_behaviors(),
                                                      wcs::load_tda_examples(tda_examples));
    wcs::SubtaskPlan plan = wcs::decompose(history, task, client, assembly);
    for (const auto& warning : wcs::validate_plan(plan, assembly)) {
        std::fprintf(stderr, "warning: %s\n", warning.c_str());
    }
    std::ofstream out(out_path);
    out << wcs::plan_to_json(plan).dump(2) << "\n";
    std::fprintf(stderr, "wrote %s (%zu subtasks)\n", out_path.c_str(), plan.subtasks.size());
    return 0;
}

int cmd_run(const CommonArgs& args, wcs::RunConfig config) {
    config.design_path = args.design;
    config.workcell_path = args.workcell;
    config.provider = provider_from(args);
    config.alias_path = args.aliases;
    config.api_catalog_path = args.api_catalog;
    try {
        const wcs::RunReport report = wcs::run_pipeline(config);
        std::fprintf(stderr, "run complete: %zu scripts committed, %d provider calls\n",
                     report.committed_scripts.size(), report.total_provider_calls);
        return 0;
    } catch (const wcs::AbortedRun& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 2;
    }
}

int cmd_exec(const CommonArgs& args, const std::string& script_path, const std::string& state_path,
             const std::string& dump_state_path, std::uint64_t seed) {
    const wcs::AssemblySpec assembly = wcs::load_assembly(read_file(args.design, "design"));
    const wcs::WorkcellSpec cell = wcs::load_workcell(read_file(args.workcell, "workcell"));
    wcs::validate_workcell(cell, assembly);
    const wcs::ApiCatalog catalog = args.api_catalog.empty()
                                        ? wcs::ApiCatalog::builtin_default()
                                        : wcs::ApiCatalog::from_file(args.api_catalog);
    wcs::SimConfig sim_config;
    sim_config.seed = seed;
    wcs::Workcell workcell(assembly, cell, sim_config);
    if (!state_path.empty()) {
        workcell.load_state_json(nlohmann::json::parse(read_file(state_path, "state")));
    }

    const std::string source = read_file(script_path, "script");
    try {
        const wcs::lang::WcsScript script = wcs::lang::parse(source);
        const auto issues = wcs::lang::check(script, source, catalog);
        if (!issues.empty()) {
            for (const auto& issue : issues) print_with_caret(issue.what(), issue.span().col);
            return 1;
        }
        const wcs::RunResult result = wcs::run_script(script, source, workcell);
        if (!result.output.empty()) std::fputs(result.output.c_str(), stdout);
        std::fputs(workcell.summary().c_str(), stdout);
        if (!dump_state_path.empty()) {
            std::ofstream out(dump_state_path);
            out << workcell.state_json().dump(2) << "\n";
        }
        return 0;
    } catch (const wcs::lang::ScriptError& e) {
        print_with_caret(e.what(), e.span().col);
        return 1;
    } catch (const wcs::RuntimeScriptError& e) {
        print_with_caret(e.what(), e.span().col);
        return 1;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"LLM-driven assembly scripting for a simulated workcell"};
    app.require_subcommand(1);

    CommonArgs common;
    std::string task;
    std::string out_path = "plan.json";
    std::string tda_examples = "assets/tda_examples";
    std::string script_path;
    std::string state_path;
    std::string dump_state_path;
    std::uint64_t seed = 0;
    wcs::RunConfig run_config;

    auto add_common = [&](CLI::App* cmd, bool needs_provider) {
        cmd->add_option("--design", common.design, "assembly JSON file")->required();
        cmd->add_option("--workcell", common.workcell, "workcell JSON file");
        if (needs_provider) {
            cmd->add_option("--provider", common.provider_selector,
                            "http[:ENDPOINT] | replay:PATH | record:PATH")
                ->required();
            cmd->add_option("--model", common.model, "model name for live providers");
        }
        cmd->add_option("--aliases", common.aliases, "alias sidecar JSON (private term -> public alias)");
        cmd->add_option("--api-catalog", common.api_catalog, "API signature catalog JSON");
        cmd->add_flag("--verbose", common.verbose, "debug logging to stderr");
    };

    CLI::App* decompose = app.add_subcommand("decompose", "run task decomposition only");
    add_common(decompose, true);
    decompose->add_option("--task", task, "task description")->required();
    decompose->add_option("--out", out_path, "output plan path");
    decompose->add_option("--tda-examples", tda_examples, "directory of (task, plan) example files");

    CLI::App* run = app.add_subcommand("run", "run the full pipeline");
    add_common(run, true);
    run->add_option("--task", task, "task description")->required();
    run->add_option("--out", run_config.out_dir, "output directory")->required();
    run->add_option("--max-attempts", run_config.max_attempts, "script attempts per subtask");
    run->add_option("--parallel-sga", run_config.parallel_sga, "speculative draft window")
        ->check(CLI::PositiveNumber);
    run->add_option("--seed", run_config.seed, "simulation RNG seed");
    run->add_option("--detect-sigma", run_config.detect_sigma, "detection noise sigma (meters)");
    run->add_flag_callback("--no-effect-check",
                           [&] { run_config.effect_check = false; },
                           "skip semantic post-checks after successful runs");
    run->add_flag("--continue-on-failure", run_config.continue_on_failure,
                  "keep going past exhausted subtasks (diagnostics)");
    run->add_option("--examples", run_config.example_dir, "behavior example library root");
    run->add_option("--tda-examples", run_config.tda_example_dir, "TDA example directory");

    CLI::App* exec = app.add_subcommand("exec", "parse, check, and run one script");
    exec->add_option("script", script_path, "script file (.wcs)")->required();
    add_common(exec, false);
    exec->add_option("--state", state_path, "initial state JSON (from --dump-state)");
    exec->add_option("--dump-state", dump_state_path, "write resulting state JSON here");
    exec->add_option("--seed", seed, "simulation RNG seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;  // usage errors exit 1
    }

    if (common.verbose) wcs::log_level().store(wcs::LogLevel::Debug);
    if (!run->parsed() && common.workcell.empty() && !decompose->parsed()) {
        std::fprintf(stderr, "--workcell is required\n");
        return 1;
    }

    try {
        if (decompose->parsed()) return cmd_decompose(common, task, tda_examples, out_path);
        if (run->parsed()) {
            if (common.workcell.empty()) {
                std::fprintf(stderr, "--workcell is required\n");
                return 1;
            }
            run_config.task = task;
            return cmd_run(common, run_config);
        }
        if (exec->parsed()) {
            if (common.workcell.empty()) {
                std::fprintf(stderr, "--workcell is required\n");
                return 1;
            }
            return cmd_exec(common, script_path, state_path, dump_state_path, seed);
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}
