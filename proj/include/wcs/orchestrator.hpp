// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "wcs/agent.hpp"
#include "wcs/api_catalog.hpp"
#include "wcs/assembly.hpp"
#include "wcs/log.hpp"
#include "wcs/plan.hpp"
#include "wcs/sga.hpp"
#include "wcs/sim/host.hpp"
#include "wcs/tda.hpp"

namespace wcs {

class PlanExhausted : public std::runtime_error {
public:
    PlanExhausted() : std::runtime_error("no pending subtasks remain") {}
};

/// Lowest-ordinal pending subtask plus the terminal error of any prior
/// aborted attempt at it.
struct GetNextResult {
    Subtask* subtask;
    std::optional<std::string> error;
};

inline GetNextResult get_next(SubtaskPlan& plan) {
    Subtask* subtask = plan.next_pending();
    if (!subtask) throw PlanExhausted{};
    return {subtask, subtask->last_error};
}

struct RunConfig {
    std::filesystem::path design_path;
    std::filesystem::path workcell_path;
    std::string task;
    ProviderConfig provider;
    int max_attempts = 5;
    int parallel_sga = 1;
    bool effect_check = true;
    bool continue_on_failure = false;
    std::uint64_t seed = 0;
    double detect_sigma = 0.0;
    std::filesystem::path out_dir = "out";
    std::filesystem::path example_dir = "assets/examples";
    std::filesystem::path tda_example_dir = "assets/tda_examples";
    std::filesystem::path alias_path;        // empty: no redaction
    std::filesystem::path api_catalog_path;  // empty: built-in catalog
};

struct SubtaskReport {
    int ordinal = 0;
    std::string description;
    std::string behavior;
    int attempts = 0;
    std::string outcome;  // done | failed
    std::string error;
    std::string script_path;

    bool operator==(const SubtaskReport&) const = default;
};

struct RunReport {
    std::string task;
    std::string status;  // complete | aborted
    std::vector<std::string> plan_warnings;
    std::vector<SubtaskReport> subtasks;
    int total_provider_calls = 0;
    double wall_ms = 0.0;
    std::vector<std::string> committed_scripts;
    std::string abort_reason;

    /// Timing is reported in report.md only, keeping report.json
    /// byte-identical across reruns.
    nlohmann::json to_json() const {
        nlohmann::json root;
        root["task"] = task;
        root["status"] = status;
        root["plan_warnings"] = plan_warnings;
        root["subtasks"] = nlohmann::json::array();
        for (const auto& row : subtasks) {
            root["subtasks"].push_back({{"ordinal", row.ordinal},
                                        {"subtask", row.description},
                                        {"behavior", row.behavior},
                                        {"attempts", row.attempts},
                                        {"outcome", row.outcome},
                                        {"error", row.error},
                                        {"script", row.script_path}});
        }
        root["total_provider_calls"] = total_provider_calls;
        root["committed_scripts"] = committed_scripts;
        if (!abort_reason.empty()) root["abort_reason"] = abort_reason;
        return root;
    }

    std::string to_markdown() const {
        std::string out = "# Run report\n\n";
        out += "task: " + task + "\n\n";
        out += "status: **" + status + "**";
        if (!abort_reason.empty()) out += " (" + abort_reason + ")";
        out += "\n\nprovider calls: " + std::to_string(total_provider_calls);
        out += "\nwall time: " + format_double(wall_ms) + " ms\n";
        if (!plan_warnings.empty()) {
            out += "\nplan warnings:\n";
            for (const auto& w : plan_warnings) out += "- " + w + "\n";
        }
        out += "\n| # | subtask | behavior | attempts | outcome |\n";
        out += "|---|---------|----------|----------|---------|\n";
        for (const auto& row : subtasks) {
            out += "| " + std::to_string(row.ordinal) + " | " + row.description + " | " + row.behavior +
                   " | " + std::to_string(row.attempts) + " | " + row.outcome + " |\n";
        }
        return out;
    }

    bool equivalent_ignoring_timing(const RunReport& other) const {
        return task == other.task && status == other.status && plan_warnings == other.plan_warnings &&
               subtasks == other.subtasks && total_provider_calls == other.total_provider_calls &&
               committed_scripts == other.committed_scripts && abort_reason == other.abort_reason;
    }
};

/// The pipeline stopped early; carries the cause and the partial report.
class AbortedRun : public std::runtime_error {
public:
    AbortedRun(const std::string& cause, RunReport partial)
        : std::runtime_error("run aborted: " + cause), partial_(std::move(partial)) {}

    const RunReport& partial_report() const { return partial_; }

private:
    RunReport partial_;
};

/// Everything a script generation agent needs, bundled for the pipeline.
struct PipelineEnv {
    const AssemblySpec* assembly = nullptr;
    const WorkcellSpec* cell = nullptr;
    const ApiCatalog* catalog = nullptr;
    const ExampleLibrary* library = nullptr;
    std::string api_docs;
    AgentClient* client = nullptr;
    int max_attempts = 5;
    bool effect_check = true;
    std::filesystem::path out_dir;
    AttemptLog* attempt_log = nullptr;
    RunOptions run_options;
};

/// A speculative first draft, validated against a private copy of the
/// predicted pre-state. pre_version names the live state it expects.
struct Draft {
    int ordinal = 0;
    std::string source;
    std::vector<ScriptAttempt> attempts;
    std::uint64_t pre_version = 0;
    bool exhausted = false;
};

namespace pipeline_detail {

/// Parse, check, and run one script source. Returns the error feedback text
/// or nothing on success; check_stage reports which stage failed.
inline std::optional<std::string> evaluate_script(const std::string& source, const Subtask& subtask,
                                                  const ApiCatalog& catalog, const ScriptRunner& runner,
                                                  bool& check_stage) {
    check_stage = true;
    try {
        const lang::WcsScript script = lang::parse(source);
        const auto issues = lang::check(script, source, catalog);
        if (!issues.empty()) return std::string(issues.front().what());
        check_stage = false;
        return runner(script, source, subtask);
    } catch (const lang::ScriptError& e) {
        return std::string(e.what());
    }
}

}  // namespace pipeline_detail

/// Produces first drafts for up to k pending subtasks. The draft writers run
/// on their own threads but acquire the provider strictly in ordinal order,
/// so replay transcripts see the same request sequence as a sequential run.
/// Validation runs afterwards against a chained private state: each draft is
/// test-run on the state its predecessors are predicted to leave behind, and
/// repaired in-order until it passes or attempts run out.
inline std::vector<Draft> speculative_generate(const std::vector<Subtask*>& pending, int k,
                                               const Workcell& base, PipelineEnv& env) {
    const int n = std::min<int>(k, static_cast<int>(pending.size()));
    if (n <= 0) return {};

    std::vector<ChatHistory> histories;
    histories.reserve(n);
    for (int i = 0; i < n; ++i) {
        histories.push_back(build_sga_context(pending[i]->behavior, *env.assembly, *env.cell, env.api_docs,
                                              *env.library));
    }

    std::vector<std::string> first_sources(n);
    std::vector<std::exception_ptr> write_errors(n);
    {
        std::mutex mutex;
        std::condition_variable cv;
        int turn = 0;
        std::vector<std::thread> writers;
        writers.reserve(n);
        for (int i = 0; i < n; ++i) {
            writers.emplace_back([&, i] {
                std::unique_lock<std::mutex> lock(mutex);
                cv.wait(lock, [&] { return turn == i; });
                try {
                    first_sources[i] = sga_write(histories[i], *env.client, *pending[i],
                                                 pending[i]->last_error);
                } catch (...) {
                    write_errors[i] = std::current_exception();
                }
                ++turn;
                cv.notify_all();
            });
        }
        for (auto& t : writers) t.join();
    }

    std::vector<Draft> drafts;
    Workcell chained = base;
    ScriptRunner runner = run_on_workcell(chained, env.effect_check, env.run_options);
    for (int i = 0; i < n; ++i) {
        if (write_errors[i]) std::rethrow_exception(write_errors[i]);
        Draft draft;
        draft.ordinal = pending[i]->ordinal;
        draft.pre_version = chained.version();
        std::string source = first_sources[i];
        std::optional<std::string> error;
        for (int attempt_no = 1; attempt_no <= env.max_attempts; ++attempt_no) {
            ScriptAttempt attempt;
            attempt.attempt_no = attempt_no;
            attempt.source = source;
            attempt.saved_path = sga_save(source, *pending[i], env.out_dir).string();
            bool check_stage = true;
            error = pipeline_detail::evaluate_script(source, *pending[i], *env.catalog, runner, check_stage);
            if (!error) {
                attempt.outcome = AttemptOutcome::Succeeded;
                if (env.attempt_log) env.attempt_log->append(*pending[i], attempt);
                draft.attempts.push_back(std::move(attempt));
                draft.source = source;
                break;
            }
            attempt.outcome = check_stage ? AttemptOutcome::CheckFailed : AttemptOutcome::RuntimeFailed;
            attempt.error = *error;
            if (env.attempt_log) env.attempt_log->append(*pending[i], attempt);
            draft.attempts.push_back(std::move(attempt));
            if (attempt_no == env.max_attempts) {
                draft.exhausted = true;
                break;
            }
            source = sga_write(histories[i], *env.client, *pending[i], error);
        }
        const bool ok = !draft.exhausted;
        drafts.push_back(std::move(draft));
        if (!ok) break;  // later predictions assume this subtask succeeded
    }
    return drafts;
}

/// Commits a validated draft onto the live simulation. A draft whose
/// pre-state prediction no longer matches the live state (or that fails on
/// replay) is discarded and the subtask regenerated in order.
inline std::vector<ScriptAttempt> commit_draft(const Draft& draft, Subtask& subtask, SimHost& host,
                                               PipelineEnv& env, bool* discarded = nullptr) {
    if (discarded) *discarded = false;
    if (!draft.exhausted) {
        const std::uint64_t live_version = host.call([](Workcell& w) { return w.version(); });
        if (live_version == draft.pre_version) {
            const lang::WcsScript script = lang::parse(draft.source);
            auto failure = host.call([&](Workcell& w) {
                return run_on_workcell(w, env.effect_check, env.run_options)(script, draft.source, subtask);
            });
            if (!failure) return draft.attempts;
            subtask.last_error = failure;  // replay diverged; regenerate with feedback
        }
    }
    if (discarded) *discarded = true;
    log_info("draft for subtask " + std::to_string(subtask.ordinal) + " discarded; regenerating in order");
    ChatHistory history =
        build_sga_context(subtask.behavior, *env.assembly, *env.cell, env.api_docs, *env.library);
    ScriptRunner live_runner = [&](const lang::WcsScript& script, const std::string& source,
                                   const Subtask& st) -> std::optional<std::string> {
        return host.call([&](Workcell& w) {
            return run_on_workcell(w, env.effect_check, env.run_options)(script, source, st);
        });
    };
    TrySubtaskResult result = try_subtask(history, *env.client, subtask, *env.catalog, live_runner,
                                          env.max_attempts, env.out_dir, env.attempt_log);
    return result.attempts;
}

namespace pipeline_detail {

inline std::string read_file_or_throw(const std::filesystem::path& path, const char* what) {
    std::ifstream in(path);
    if (!in) throw IoError(std::string("cannot open ") + what + ": " + path.string());
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

}  // namespace pipeline_detail

/// Algorithm: start the simulation on its own thread, decompose the task,
/// then drive one SGA per subtask in plan order, committing each success to
/// the live state. Emits plan.json, attempts.jsonl, the committed scripts,
/// report.json, and report.md under out_dir.
inline RunReport run_pipeline(const RunConfig& config) {
    const auto t0 = std::chrono::steady_clock::now();

    const AssemblySpec assembly =
        load_assembly(pipeline_detail::read_file_or_throw(config.design_path, "design"));
    const WorkcellSpec cell =
        load_workcell(pipeline_detail::read_file_or_throw(config.workcell_path, "workcell"));
    validate_workcell(cell, assembly);
    const AliasTable aliases = config.alias_path.empty()
                                   ? AliasTable{}
                                   : AliasTable::from_file_or_identity(config.alias_path.string());
    const ApiCatalog catalog = config.api_catalog_path.empty()
                                   ? ApiCatalog::builtin_default()
                                   : ApiCatalog::from_file(config.api_catalog_path.string());
    const ExampleLibrary library = ExampleLibrary::load(config.example_dir);
    const std::vector<TdaExample> tda_examples = load_tda_examples(config.tda_example_dir);

    ProviderPtr provider = make_provider(config.provider);
    AgentClient client(provider, config.provider.model, aliases, config.provider.temperature);

    SimConfig sim_config;
    sim_config.seed = config.seed;
    sim_config.detect_sigma = config.detect_sigma;
    SimHost host(Workcell{assembly, cell, sim_config});
    host.start();
    bool stopped = false;
    auto stop_once = [&] {
        if (!stopped) {
            host.stop();
            stopped = true;
        }
    };

    std::filesystem::create_directories(config.out_dir);
    RunReport report;
    report.task = config.task;

    auto finalize = [&](const std::string& status, const std::string& abort_reason) {
        report.status = status;
        report.abort_reason = abort_reason;
        report.total_provider_calls = provider->call_count();
        report.wall_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        pipeline_detail::write_file(config.out_dir / "report.json", report.to_json().dump(2) + "\n");
        pipeline_detail::write_file(config.out_dir / "report.md", report.to_markdown());
    };

    try {
        std::vector<std::string> part_names;
        for (const auto& part : assembly.parts) part_names.push_back(part.name);
        ChatHistory tda_history = build_tda_context(assembly, part_names, all_behaviors(), tda_examples);
        SubtaskPlan plan = decompose(tda_history, config.task, client, assembly);
        report.plan_warnings = validate_plan(plan, assembly);
        for (const auto& warning : report.plan_warnings) log_warn(warning);
        pipeline_detail::write_file(config.out_dir / "plan.json", plan_to_json(plan).dump(2) + "\n");

        AttemptLog attempt_log(config.out_dir / "attempts.jsonl");
        std::error_code ec;
        std::filesystem::remove(config.out_dir / "attempts.jsonl", ec);

        PipelineEnv env;
        env.assembly = &assembly;
        env.cell = &cell;
        env.catalog = &catalog;
        env.library = &library;
        env.api_docs = catalog.render_reference();
        env.client = &client;
        env.max_attempts = config.max_attempts;
        env.effect_check = config.effect_check;
        env.out_dir = config.out_dir;
        env.attempt_log = &attempt_log;

        std::deque<Draft> window;
        while (!plan.all_done()) {
            Subtask* next = plan.next_pending();
            if (!next) break;  // remaining subtasks failed under continue_on_failure
            if (window.empty()) {
                std::vector<Subtask*> pending;
                for (auto& st : plan.subtasks) {
                    if (st.status == SubtaskStatus::Pending) pending.push_back(&st);
                }
                Workcell base = host.call([](Workcell& w) { return w; });
                auto drafts = speculative_generate(pending, config.parallel_sga, base, env);
                for (auto& d : drafts) window.push_back(std::move(d));
            }
            Draft draft = std::move(window.front());
            window.pop_front();
            auto [subtask, prior_error] = get_next(plan);
            (void)prior_error;

            SubtaskReport row;
            row.ordinal = subtask->ordinal;
            row.description = subtask->description;
            row.behavior = to_string(subtask->behavior);

            if (draft.exhausted) {
                subtask->status = SubtaskStatus::Failed;
                subtask->last_error = draft.attempts.back().error;
                row.attempts = static_cast<int>(draft.attempts.size());
                row.outcome = "failed";
                row.error = draft.attempts.back().error;
                report.subtasks.push_back(row);
                window.clear();  // later drafts assumed this subtask succeeded
                if (!config.continue_on_failure) {
                    finalize("aborted", "subtask " + std::to_string(subtask->ordinal) +
                                            " exhausted its attempts");
                    stop_once();
                    throw AbortedRun(report.abort_reason, report);
                }
                continue;
            }

            bool discarded = false;
            std::vector<ScriptAttempt> attempts;
            try {
                attempts = commit_draft(draft, *subtask, host, env, &discarded);
            } catch (const AttemptsExhausted& e) {
                subtask->status = SubtaskStatus::Failed;
                subtask->last_error = e.attempts().empty() ? e.what() : e.attempts().back().error;
                row.attempts = static_cast<int>(e.attempts().size());
                row.outcome = "failed";
                row.error = *subtask->last_error;
                report.subtasks.push_back(row);
                window.clear();
                if (!config.continue_on_failure) {
                    finalize("aborted", "subtask " + std::to_string(subtask->ordinal) +
                                            " exhausted its attempts");
                    stop_once();
                    throw AbortedRun(report.abort_reason, report);
                }
                continue;
            }
            if (discarded) window.clear();  // the chain behind a discarded draft is stale too

            subtask->status = SubtaskStatus::Done;
            row.attempts = static_cast<int>(attempts.size());
            row.outcome = "done";
            // paths are stored relative to out_dir so reports rerun byte-identically
            row.script_path = std::filesystem::path(attempts.back().saved_path).filename().string();
            report.subtasks.push_back(row);
            report.committed_scripts.push_back(row.script_path);
        }

        const bool all_done = plan.all_done();
        finalize(all_done ? "complete" : "aborted",
                 all_done ? "" : "some subtasks failed (continue-on-failure)");
        stop_once();
        if (!all_done) throw AbortedRun(report.abort_reason, report);
        return report;
    } catch (const AbortedRun&) {
        throw;
    } catch (const std::exception& e) {
        finalize("aborted", e.what());
        stop_once();
        throw AbortedRun(e.what(), report);
    }
}

}  // namespace wcs
