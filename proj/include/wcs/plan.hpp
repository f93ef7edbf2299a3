// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "wcs/assembly.hpp"

namespace wcs {

/// The closed behavior catalog; plans may label subtasks with nothing else.
enum class Behavior { Detect, Pick, Move, Place, Insert };

inline const char* to_string(Behavior b) {
    switch (b) {
        case Behavior::Detect: return "Detect";
        case Behavior::Pick: return "Pick";
        case Behavior::Move: return "Move";
        case Behavior::Place: return "Place";
        case Behavior::Insert: return "Insert";
    }
    return "?";
}

inline std::vector<Behavior> all_behaviors() {
    return {Behavior::Detect, Behavior::Pick, Behavior::Move, Behavior::Place, Behavior::Insert};
}

/// Response not in the required plan format; the raw text is retained so a
/// retry prompt can include it.
class PlanParseError : public std::runtime_error {
public:
    PlanParseError(const std::string& location, const std::string& reason)
        : std::runtime_error(location + ": " + reason), location_(location) {}

    const std::string& location() const { return location_; }

private:
    std::string location_;
};

class UnknownBehavior : public PlanParseError {
public:
    UnknownBehavior(const std::string& location, const std::string& behavior)
        : PlanParseError(location, "unknown behavior \"" + behavior + "\""), behavior_(behavior) {}

    const std::string& behavior() const { return behavior_; }

private:
    std::string behavior_;
};

inline Behavior behavior_from_string(const std::string& text, const std::string& location = "behavior") {
    for (Behavior b : all_behaviors()) {
        if (text == to_string(b)) return b;
    }
    throw UnknownBehavior(location, text);
}

enum class SubtaskStatus { Pending, Done, Failed };

inline const char* to_string(SubtaskStatus s) {
    switch (s) {
        case SubtaskStatus::Pending: return "pending";
        case SubtaskStatus::Done: return "done";
        case SubtaskStatus::Failed: return "failed";
    }
    return "?";
}

struct Subtask {
    std::string description;
    Behavior behavior = Behavior::Move;
    std::vector<std::string> parts;
    SubtaskStatus status = SubtaskStatus::Pending;
    int ordinal = 0;  // contiguous from 1
    std::optional<std::string> last_error;
};

struct SubtaskPlan {
    std::vector<Subtask> subtasks;
    std::string source_task;

    bool all_done() const {
        for (const auto& s : subtasks) {
            if (s.status != SubtaskStatus::Done) return false;
        }
        return true;
    }

    Subtask* next_pending() {
        for (auto& s : subtasks) {
            if (s.status == SubtaskStatus::Pending) return &s;
        }
        return nullptr;
    }
};

/// Strict parse of the required TDA output: a JSON array of
/// {subtask, behavior, parts}. Ordinals are assigned by position.
inline SubtaskPlan parse_plan(const std::string& text) {
    nlohmann::json root = nlohmann::json::parse(text, nullptr, false);
    if (root.is_discarded()) throw PlanParseError("$", "not valid JSON");
    if (!root.is_array()) throw PlanParseError("$", "expected a JSON array of subtasks");
    SubtaskPlan plan;
    for (std::size_t i = 0; i < root.size(); ++i) {
        const std::string loc = "[" + std::to_string(i) + "]";
        const nlohmann::json& ej = root[i];
        if (!ej.is_object()) throw PlanParseError(loc, "expected an object");
        if (!ej.contains("subtask") || !ej["subtask"].is_string()) {
            throw PlanParseError(loc + ".subtask", "missing or not a string");
        }
        if (!ej.contains("behavior") || !ej["behavior"].is_string()) {
            throw PlanParseError(loc + ".behavior", "missing or not a string");
        }
        if (!ej.contains("parts") || !ej["parts"].is_array()) {
            throw PlanParseError(loc + ".parts", "missing or not an array");
        }
        Subtask st;
        st.description = ej["subtask"].get<std::string>();
        if (st.description.empty()) throw PlanParseError(loc + ".subtask", "must be nonempty");
        st.behavior = behavior_from_string(ej["behavior"].get<std::string>(), loc + ".behavior");
        for (std::size_t j = 0; j < ej["parts"].size(); ++j) {
            if (!ej["parts"][j].is_string()) {
                throw PlanParseError(loc + ".parts[" + std::to_string(j) + "]", "expected a string");
            }
            st.parts.push_back(ej["parts"][j].get<std::string>());
        }
        st.ordinal = static_cast<int>(i) + 1;
        plan.subtasks.push_back(std::move(st));
    }
    return plan;
}

/// Hard validation: every part named by the plan must resolve.
inline void resolve_plan_parts(const SubtaskPlan& plan, const AssemblySpec& assembly) {
    for (const auto& st : plan.subtasks) {
        for (const auto& part : st.parts) {
            if (!assembly.find(part)) {
                throw UnknownPart("subtask " + std::to_string(st.ordinal) + " (\"" + st.description +
                                  "\"): unknown part \"" + part + "\"");
            }
        }
    }
}

/// Warnings only; topological-order verification stays out of scope.
inline std::vector<std::string> validate_plan(const SubtaskPlan& plan, const AssemblySpec& assembly) {
    std::vector<std::string> warnings;
    for (std::size_t i = 0; i < plan.subtasks.size(); ++i) {
        const Subtask& st = plan.subtasks[i];
        if (st.behavior == Behavior::Pick && !st.parts.empty()) {
            const std::string& part = st.parts[0];
            bool consumed = false;
            for (std::size_t j = i + 1; j < plan.subtasks.size(); ++j) {
                const Subtask& later = plan.subtasks[j];
                if ((later.behavior == Behavior::Place || later.behavior == Behavior::Insert) &&
                    !later.parts.empty() && later.parts[0] == part) {
                    consumed = true;
                    break;
                }
            }
            if (!consumed) {
                warnings.push_back("subtask " + std::to_string(st.ordinal) + ": Pick \"" + part +
                                   "\" has no later Place or Insert");
            }
        }
        if (st.behavior == Behavior::Insert && st.parts.size() >= 2) {
            if (assembly.find(st.parts[0]) && assembly.find(st.parts[1]) &&
                !assembly.adjacent(st.parts[0], st.parts[1])) {
                warnings.push_back("subtask " + std::to_string(st.ordinal) + ": Insert pair \"" + st.parts[0] +
                                   "\" / \"" + st.parts[1] + "\" is not adjacent in the assembly");
            }
        }
    }
    const std::size_t n_parts = assembly.parts.size();
    const std::size_t n_subtasks = plan.subtasks.size();
    if (n_subtasks < 2 * n_parts || n_subtasks > 8 * n_parts) {
        warnings.push_back("plan has " + std::to_string(n_subtasks) + " subtasks for " +
                           std::to_string(n_parts) + " parts (expected between " + std::to_string(2 * n_parts) +
                           " and " + std::to_string(8 * n_parts) + ")");
    }
    return warnings;
}

inline nlohmann::json plan_to_json(const SubtaskPlan& plan) {
    nlohmann::json root = nlohmann::json::array();
    for (const auto& st : plan.subtasks) {
        root.push_back({{"subtask", st.description},
                        {"behavior", to_string(st.behavior)},
                        {"parts", st.parts},
                        {"ordinal", st.ordinal},
                        {"status", to_string(st.status)}});
    }
    return root;
}

}  // namespace wcs
