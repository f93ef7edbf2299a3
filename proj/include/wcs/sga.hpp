// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "wcs/agent.hpp"
#include "wcs/api_catalog.hpp"
#include "wcs/assembly.hpp"
#include "wcs/chat.hpp"
#include "wcs/lang/check.hpp"
#include "wcs/lang/extract.hpp"
#include "wcs/lang/parser.hpp"
#include "wcs/plan.hpp"
#include "wcs/sim/interp.hpp"

namespace wcs {

class MissingExample : public std::runtime_error {
public:
    explicit MissingExample(const std::string& what) : std::runtime_error(what) {}
};

class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

/// One filed scripting example: <nn>_<name>.wcs with a paired .md description.
struct BehaviorExample {
    std::string name;
    std::string description;
    std::string code;
};

class ExampleLibrary {
public:
    static ExampleLibrary load(const std::filesystem::path& root) {
        ExampleLibrary lib;
        for (Behavior b : all_behaviors()) {
            const std::filesystem::path dir = root / to_lower(to_string(b));
            if (!std::filesystem::is_directory(dir)) continue;
            std::vector<std::filesystem::path> files;
            for (const auto& entry : std::filesystem::directory_iterator(dir)) {
                if (entry.path().extension() == ".wcs") files.push_back(entry.path());
            }
            std::sort(files.begin(), files.end());
            for (const auto& file : files) {
                BehaviorExample example;
                example.name = file.stem().string();
                example.code = read_file(file);
                const std::filesystem::path description = file.parent_path() / (file.stem().string() + ".md");
                if (std::filesystem::exists(description)) {
                    example.description = read_file(description);
                }
                lib.examples_[b].push_back(std::move(example));
            }
        }
        return lib;
    }

    void add(Behavior behavior, BehaviorExample example) { examples_[behavior].push_back(std::move(example)); }

    const std::vector<BehaviorExample>& for_behavior(Behavior b) const {
        static const std::vector<BehaviorExample> empty;
        auto it = examples_.find(b);
        return it == examples_.end() ? empty : it->second;
    }

private:
    static std::string read_file(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw IoError("cannot read " + path.string());
        return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    }

    std::map<Behavior, std::vector<BehaviorExample>> examples_;
};

inline std::string default_sga_role() {
    return "You are a script generation agent for robotic assembly. You write short workcell scripts that "
           "implement one subtask at a time, following the example style exactly.";
}

inline std::string default_sga_rules() {
    return "Respond with a single fenced code block containing one complete script. The script must define "
           "def main(workcell), start with a doc-string naming the subtask, use only the documented API, and "
           "retract the robot after motions that approach other bodies. Comment each distinct stage.";
}

/// Builds the bootstrapped SGA history in the order R, L, A, W, D, E; every
/// example filed under the behavior is appended, in library order.
inline ChatHistory build_sga_context(Behavior behavior, const AssemblySpec& assembly, const WorkcellSpec& cell,
                                     const std::string& api_docs, const ExampleLibrary& library,
                                     const std::string& role = default_sga_role(),
                                     const std::string& rules = default_sga_rules()) {
    const auto& examples = library.for_behavior(behavior);
    if (examples.empty()) {
        throw MissingExample(std::string("no scripting example filed for behavior ") + to_string(behavior));
    }
    std::vector<ChatMessage> guidelines{{Role::System, role}, {Role::System, rules}};
    std::vector<ChatMessage> context{{Role::User, render_context(assembly)},
                                     {Role::User, render_context(cell)},
                                     {Role::User, api_docs}};
    for (const auto& example : examples) {
        std::string text = "Example (" + std::string(to_string(behavior)) + "):\n";
        if (!example.description.empty()) text += example.description + "\n";
        text += "```\n" + example.code;
        if (!example.code.empty() && example.code.back() != '\n') text += "\n";
        text += "```";
        context.push_back({Role::User, std::move(text)});
    }
    ChatHistory history;
    history.bootstrap(guidelines, context);
    return history;
}

/// One write: prompts with the subtask (and prior error, if any), passes the
/// response through code-block extraction, and returns the script source.
inline std::string sga_write(ChatHistory& history, AgentClient& client, const Subtask& subtask,
                             const std::optional<std::string>& error) {
    std::string prompt = "Subtask: " + subtask.description + "\nBehavior: " + to_string(subtask.behavior);
    if (!subtask.parts.empty()) {
        prompt += "\nParts:";
        for (const auto& part : subtask.parts) prompt += " " + part;
    }
    if (error) {
        prompt += "\nThe previous script failed with:\n" + *error + "\nWrite an improved script.";
    } else {
        prompt += "\nWrite the script.";
    }
    history.append_runtime(Role::User, prompt);
    const std::string response = client.exchange(history);
    return lang::extract_code_block(response);
}

inline std::string slugify(const std::string& text) {
    std::string out;
    for (char c : text) {
        if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9')) {
            out += c;
        } else if (c >= 'A' && c <= 'Z') {
            out += static_cast<char>(c - 'A' + 'a');
        } else {
            out += '_';
        }
    }
    return out;
}

/// Writes the source to out_dir/NNN_behavior_slug.wcs, overwriting any prior
/// attempt for the same subtask.
inline std::filesystem::path sga_save(const std::string& source, const Subtask& subtask,
                                      const std::filesystem::path& out_dir) {
    char ordinal[8];
    std::snprintf(ordinal, sizeof(ordinal), "%03d", subtask.ordinal);
    const std::string filename = std::string(ordinal) + "_" + to_lower(to_string(subtask.behavior)) + "_" +
                                 slugify(subtask.description) + ".wcs";
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    const std::filesystem::path path = out_dir / filename;
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << source;
    if (!out) throw IoError("cannot write " + path.string());
    return path;
}

enum class AttemptOutcome { CheckFailed, RuntimeFailed, Succeeded };

inline const char* to_string(AttemptOutcome o) {
    switch (o) {
        case AttemptOutcome::CheckFailed: return "check_failed";
        case AttemptOutcome::RuntimeFailed: return "runtime_failed";
        case AttemptOutcome::Succeeded: return "succeeded";
    }
    return "?";
}

struct ScriptAttempt {
    int attempt_no = 0;
    std::string source;
    AttemptOutcome outcome = AttemptOutcome::CheckFailed;
    std::string error;
    std::string saved_path;
};

class AttemptsExhausted : public std::runtime_error {
public:
    AttemptsExhausted(const Subtask& subtask, std::vector<ScriptAttempt> attempts)
        : std::runtime_error("subtask " + std::to_string(subtask.ordinal) + " (\"" + subtask.description +
                             "\") failed after " + std::to_string(attempts.size()) + " attempts: " +
                             (attempts.empty() ? std::string("no attempts") : attempts.back().error)),
          attempts_(std::move(attempts)) {}

    const std::vector<ScriptAttempt>& attempts() const { return attempts_; }

private:
    std::vector<ScriptAttempt> attempts_;
};

/// Verifies the behavior's effect after a successful run by reading the
/// operations the run recorded. Returns the failure text, or nothing.
inline std::optional<std::string> behavior_effect_error(const Workcell& after, std::size_t events_before,
                                                        const Subtask& subtask, double tolerance) {
    const auto& log = after.op_log();
    auto new_events = [&](OpType type) {
        std::vector<const OpEvent*> out;
        for (std::size_t i = events_before; i < log.size(); ++i) {
            if (log[i].type == type) out.push_back(&log[i]);
        }
        return out;
    };
    auto need_part = [&]() -> std::optional<std::string> {
        if (subtask.parts.empty()) {
            return std::string("effect check failed: subtask lists no parts for behavior ") +
                   to_string(subtask.behavior);
        }
        return std::nullopt;
    };
    switch (subtask.behavior) {
        case Behavior::Move: {
            if (new_events(OpType::Move).empty()) {
                return "effect check failed: the script performed no motion";
            }
            return std::nullopt;
        }
        case Behavior::Detect: {
            if (auto missing = need_part()) return missing;
            for (const OpEvent* e : new_events(OpType::Detect)) {
                if (e->part == subtask.parts[0]) return std::nullopt;
            }
            return "effect check failed: the script never detected \"" + subtask.parts[0] + "\"";
        }
        case Behavior::Pick: {
            if (auto missing = need_part()) return missing;
            auto it = after.parts().find(subtask.parts[0]);
            if (it == after.parts().end() || !it->second.held) {
                return "effect check failed: part \"" + subtask.parts[0] + "\" is not held after Pick";
            }
            return std::nullopt;
        }
        case Behavior::Place: {
            if (auto missing = need_part()) return missing;
            const OpEvent* placed = nullptr;
            for (const OpEvent* e : new_events(OpType::Place)) {
                if (e->part == subtask.parts[0]) placed = e;
            }
            if (!placed) {
                return "effect check failed: the script never placed \"" + subtask.parts[0] + "\"";
            }
            const auto& part = after.parts().at(subtask.parts[0]);
            if (part.held) return "effect check failed: part \"" + subtask.parts[0] + "\" is still held";
            if (translation_distance(part.pose, placed->target) > tolerance) {
                return "effect check failed: part \"" + subtask.parts[0] + "\" is not at the placed target";
            }
            return std::nullopt;
        }
        case Behavior::Insert: {
            if (auto missing = need_part()) return missing;
            const OpEvent* inserted = nullptr;
            for (const OpEvent* e : new_events(OpType::Insert)) {
                if (e->part == subtask.parts[0] &&
                    (subtask.parts.size() < 2 || e->target_part == subtask.parts[1])) {
                    inserted = e;
                }
            }
            if (!inserted) {
                return "effect check failed: the script never inserted \"" + subtask.parts[0] + "\"";
            }
            const auto& part = after.parts().at(subtask.parts[0]);
            if (part.held) return "effect check failed: part \"" + subtask.parts[0] + "\" is still held";
            if (translation_distance(part.pose, inserted->target) > tolerance) {
                return "effect check failed: part \"" + subtask.parts[0] + "\" is not at its insertion target";
            }
            return std::nullopt;
        }
    }
    return std::nullopt;
}

/// A script runner decides where a checked script executes (a live workcell
/// or a private copy) and reports success or formatted error feedback.
using ScriptRunner = std::function<std::optional<std::string>(const lang::WcsScript&, const std::string& source,
                                                              const Subtask&)>;

/// Runner against a directly owned workcell: runs the script, then the
/// behavior effect check; a failed effect rolls the state back.
inline ScriptRunner run_on_workcell(Workcell& cell, bool effect_check, RunOptions options = {}) {
    return [&cell, effect_check, options](const lang::WcsScript& script, const std::string& source,
                                          const Subtask& subtask) -> std::optional<std::string> {
        const Checkpoint entry = cell.checkpoint("attempt");
        const std::size_t events_before = cell.op_log().size();
        try {
            run_script(script, source, cell, options);
        } catch (const RuntimeScriptError& e) {
            return e.what();  // run_script already restored the state
        }
        if (effect_check) {
            if (auto failure = behavior_effect_error(cell, events_before, subtask,
                                                     cell.config().insert_tolerance)) {
                cell.restore(entry);
                return failure;
            }
        }
        return std::nullopt;
    };
}

/// Appends one JSON object per attempt to the attempts log.
class AttemptLog {
public:
    explicit AttemptLog(const std::filesystem::path& path) : path_(path) {}

    void append(const Subtask& subtask, const ScriptAttempt& attempt) {
        std::ofstream out(path_, std::ios::app);
        if (!out) return;  // logging must not fail the pipeline
        nlohmann::json row{{"ordinal", subtask.ordinal},
                           {"subtask", subtask.description},
                           {"behavior", to_string(subtask.behavior)},
                           {"attempt", attempt.attempt_no},
                           {"outcome", to_string(attempt.outcome)},
                           {"error", attempt.error},
                           {"path", attempt.saved_path}};
        out << row.dump() << "\n";
    }

private:
    std::filesystem::path path_;
};

struct TrySubtaskResult {
    ScriptAttempt success;
    std::vector<ScriptAttempt> attempts;  // includes the successful one
};

/// The SGA inner loop: write, save, parse, check, run; any error becomes the
/// next write's feedback. Returns the first succeeded attempt or throws
/// AttemptsExhausted carrying every attempt.
inline TrySubtaskResult try_subtask(ChatHistory& history, AgentClient& client, const Subtask& subtask,
                                    const ApiCatalog& catalog, const ScriptRunner& runner, int max_attempts,
                                    const std::filesystem::path& out_dir, AttemptLog* log = nullptr) {
    std::vector<ScriptAttempt> attempts;
    std::optional<std::string> error = subtask.last_error;
    for (int attempt_no = 1; attempt_no <= max_attempts; ++attempt_no) {
        ScriptAttempt attempt;
        attempt.attempt_no = attempt_no;
        attempt.source = sga_write(history, client, subtask, error);
        attempt.saved_path = sga_save(attempt.source, subtask, out_dir).string();

        std::optional<std::string> failure;
        bool check_stage = true;
        try {
            const lang::WcsScript script = lang::parse(attempt.source);
            const std::vector<lang::ScriptError> issues = lang::check(script, attempt.source, catalog);
            if (!issues.empty()) {
                failure = issues.front().what();
            } else {
                check_stage = false;
                failure = runner(script, attempt.source, subtask);
            }
        } catch (const lang::ScriptError& e) {
            failure = e.what();
        }

        if (!failure) {
            attempt.outcome = AttemptOutcome::Succeeded;
            if (log) log->append(subtask, attempt);
            attempts.push_back(attempt);
            return TrySubtaskResult{attempt, std::move(attempts)};
        }
        attempt.outcome = check_stage ? AttemptOutcome::CheckFailed : AttemptOutcome::RuntimeFailed;
        attempt.error = *failure;
        if (log) log->append(subtask, attempt);
        attempts.push_back(std::move(attempt));
        error = failure;
    }
    throw AttemptsExhausted(subtask, std::move(attempts));
}

}  // namespace wcs
