// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "wcs/agent.hpp"
#include "wcs/assembly.hpp"
#include "wcs/chat.hpp"
#include "wcs/lang/extract.hpp"
#include "wcs/plan.hpp"

namespace wcs {

/// A worked (task, plan) pair used for few-shot prompting.
struct TdaExample {
    std::string task;
    std::string plan_json;
};

inline std::vector<TdaExample> load_tda_examples(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.path().extension() == ".json") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<TdaExample> examples;
    for (const auto& file : files) {
        std::ifstream in(file);
        nlohmann::json root = nlohmann::json::parse(in);
        examples.push_back({root.at("task").get<std::string>(), root.at("plan").dump(2)});
    }
    return examples;
}

inline std::string default_tda_role() {
    return "You are a task decomposition agent for robotic assembly. Given a product design and a task "
           "query, you break the task into an ordered sequence of short subtasks and assign each one a "
           "behavior from the available catalog.";
}

inline std::string default_tda_rules() {
    return "Respond with a JSON array and nothing else. Each element must be an object with exactly these "
           "keys: \"subtask\" (a short imperative sentence), \"behavior\" (one of the listed behaviors), and "
           "\"parts\" (the part names involved, first the part being handled, then any target part). Keep "
           "subtasks small enough that one behavior covers each.";
}

/// Builds the bootstrapped TDA history: role and rules as system guidelines;
/// the assembly dictionary S, part list P, behavior list B, and examples E
/// as task context, in that order.
inline ChatHistory build_tda_context(const AssemblySpec& assembly, const std::vector<std::string>& part_names,
                                     const std::vector<Behavior>& behaviors,
                                     const std::vector<TdaExample>& examples,
                                     const std::string& role = default_tda_role(),
                                     const std::string& rules = default_tda_rules()) {
    if (examples.empty()) throw std::invalid_argument("task decomposition requires at least one example");
    std::vector<ChatMessage> guidelines{{Role::System, role}, {Role::System, rules}};

    std::string parts_text = "Parts:";
    for (const auto& name : part_names) parts_text += "\n- " + name;

    std::string behaviors_text = "Available behaviors:";
    for (Behavior b : behaviors) behaviors_text += std::string(" ") + to_string(b) + ",";
    if (!behaviors.empty()) behaviors_text.pop_back();

    std::string examples_text = "Examples:";
    for (const auto& example : examples) {
        examples_text += "\n\nTask: " + example.task + "\nPlan:\n" + example.plan_json;
    }

    std::vector<ChatMessage> context{{Role::User, render_context(assembly)},
                                     {Role::User, parts_text},
                                     {Role::User, behaviors_text},
                                     {Role::User, examples_text}};
    ChatHistory history;
    history.bootstrap(guidelines, context);
    return history;
}

/// Queries the provider with the task and parses the behavior-labeled plan.
/// A malformed response triggers a re-ask with the parse error appended as
/// feedback, at most max_reasks times.
inline SubtaskPlan decompose(ChatHistory& history, const std::string& task, AgentClient& client,
                             const AssemblySpec& assembly, int max_reasks = 2) {
    history.append_runtime(Role::User, task);
    for (int attempt = 0;; ++attempt) {
        const std::string response = client.exchange(history);
        std::string payload;
        try {
            payload = lang::extract_code_block(response);
        } catch (const lang::EmptyBlock&) {
            payload = "";
        }
        try {
            SubtaskPlan plan = parse_plan(payload);
            resolve_plan_parts(plan, assembly);
            plan.source_task = task;
            return plan;
        } catch (const UnknownBehavior&) {
            throw;  // the catalog is closed; feedback cannot fix a made-up behavior
        } catch (const PlanParseError& e) {
            if (attempt >= max_reasks) throw;
            history.append_runtime(Role::User, std::string("The plan could not be parsed: ") + e.what() +
                                                   "\nRespond again with only the JSON array.");
        }
    }
}

}  // namespace wcs
