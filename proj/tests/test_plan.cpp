// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "support.hpp"
#include "wcs/agent.hpp"
#include "wcs/plan.hpp"
#include "wcs/tda.hpp"

using test_support::asset_path;
using test_support::read_text;
using wcs::Behavior;
using wcs::SubtaskPlan;

namespace {

wcs::AssemblySpec truck() { return wcs::load_assembly(read_text(asset_path("truck_gld.json"))); }

wcs::AgentClient replay_client(std::vector<wcs::TranscriptEntry> entries) {
    return wcs::AgentClient(std::make_shared<wcs::ReplayProvider>(std::move(entries)), "gpt-4");
}

std::vector<wcs::TdaExample> tda_examples() {
    return wcs::load_tda_examples(asset_path("tda_examples"));
}

}  // namespace

TEST_CASE("parse_plan accepts the documented format", "[plan]") {
    const SubtaskPlan plan =
        wcs::parse_plan(R"([{"subtask":"Pick the baseplate","behavior":"Pick","parts":["Base"]}])");
    REQUIRE(plan.subtasks.size() == 1);
    CHECK(plan.subtasks[0].description == "Pick the baseplate");
    CHECK(plan.subtasks[0].behavior == Behavior::Pick);
    CHECK(plan.subtasks[0].parts == std::vector<std::string>{"Base"});
    CHECK(plan.subtasks[0].ordinal == 1);
}

TEST_CASE("empty plan is valid", "[plan]") {
    const SubtaskPlan plan = wcs::parse_plan("[]");
    CHECK(plan.subtasks.empty());
    CHECK(plan.all_done());
}

TEST_CASE("a large plan for a ten-part assembly parses and validates", "[plan]") {
    // 10 parts in a chain, 45 subtasks
    nlohmann::json doc;
    doc["assembly_name"] = "chain";
    doc["origin_frame"] = nlohmann::json::array({1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1});
    doc["parts"] = nlohmann::json::array();
    for (int i = 0; i < 10; ++i) {
        nlohmann::json part;
        part["name"] = "P" + std::to_string(i);
        part["part_class"] = "link";
        part["design_pose"] = nlohmann::json::array({1, 0, 0, 0.1 * i, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1});
        nlohmann::json adjacent = nlohmann::json::array();
        if (i > 0) adjacent.push_back("P" + std::to_string(i - 1));
        if (i < 9) adjacent.push_back("P" + std::to_string(i + 1));
        part["adjacent"] = adjacent;
        doc["parts"].push_back(part);
    }
    const wcs::AssemblySpec assembly = wcs::load_assembly(doc.dump());

    nlohmann::json plan_json = nlohmann::json::array();
    for (int i = 1; i < 10; ++i) {
        const std::string part = "P" + std::to_string(i);
        const std::string prev = "P" + std::to_string(i - 1);
        plan_json.push_back({{"subtask", "Detect " + part}, {"behavior", "Detect"}, {"parts", {part}}});
        plan_json.push_back({{"subtask", "Pick " + part}, {"behavior", "Pick"}, {"parts", {part}}});
        plan_json.push_back({{"subtask", "Move " + part}, {"behavior", "Move"}, {"parts", {part}}});
        plan_json.push_back(
            {{"subtask", "Insert " + part + " on " + prev}, {"behavior", "Insert"}, {"parts", {part, prev}}});
        if (i <= 9) {
            plan_json.push_back(
                {{"subtask", "Detect " + prev}, {"behavior", "Detect"}, {"parts", {prev}}});
        }
    }
    REQUIRE(plan_json.size() == 45);
    const SubtaskPlan plan = wcs::parse_plan(plan_json.dump());
    CHECK(plan.subtasks.size() == 45);
    CHECK(plan.subtasks.back().ordinal == 45);
    CHECK_NOTHROW(wcs::resolve_plan_parts(plan, assembly));
    // 45 subtasks for 10 parts sits inside [20, 80]: no count warning
    for (const auto& warning : wcs::validate_plan(plan, assembly)) {
        CHECK(warning.find("plan has") == std::string::npos);
    }
}

TEST_CASE("unknown behavior is rejected and is a parse error subtype", "[plan]") {
    const std::string text = R"([{"subtask":"Weld it","behavior":"Weld","parts":[]}])";
    CHECK_THROWS_AS(wcs::parse_plan(text), wcs::UnknownBehavior);
    CHECK_THROWS_AS(wcs::parse_plan(text), wcs::PlanParseError);
    try {
        wcs::parse_plan(text);
    } catch (const wcs::UnknownBehavior& e) {
        CHECK(e.behavior() == "Weld");
        CHECK(std::string(e.what()).find("[0].behavior") != std::string::npos);
    }
}

TEST_CASE("parse errors carry the first offending location", "[plan]") {
    try {
        wcs::parse_plan(R"([{"subtask":"a","behavior":"Pick","parts":["x"]},{"subtask":"b"}])");
        FAIL("expected PlanParseError");
    } catch (const wcs::PlanParseError& e) {
        CHECK(e.location() == "[1].behavior");
    }
    CHECK_THROWS_AS(wcs::parse_plan(""), wcs::PlanParseError);
    CHECK_THROWS_AS(wcs::parse_plan("{\"not\":\"an array\"}"), wcs::PlanParseError);
    CHECK_THROWS_AS(wcs::parse_plan("[1, 2]"), wcs::PlanParseError);
}

TEST_CASE("plan parsing is total over arbitrary input", "[plan][fuzz]") {
    std::mt19937_64 rng(31337);
    std::uniform_int_distribution<int> len(0, 2000);
    std::uniform_int_distribution<int> byte(0, 255);
    const std::string tokens = R"([]{}":,subtask behavior parts Pick Insert0123456789)";
    std::uniform_int_distribution<std::size_t> tok(0, tokens.size() - 1);
    std::uniform_int_distribution<int> mode(0, 1);
    for (int iter = 0; iter < 500; ++iter) {
        std::string text;
        const int n = len(rng);
        for (int i = 0; i < n; ++i) {
            text += (mode(rng) == 0) ? static_cast<char>(byte(rng)) : tokens[tok(rng)];
        }
        try {
            (void)wcs::parse_plan(text);
        } catch (const wcs::PlanParseError&) {
            // the only admissible failure
        }
    }
    SUCCEED("no crash and no foreign exception");
}

TEST_CASE("unknown parts are caught by hard validation", "[plan]") {
    const SubtaskPlan plan =
        wcs::parse_plan(R"([{"subtask":"Pick the deck","behavior":"Pick","parts":["Deck"]}])");
    CHECK_THROWS_AS(wcs::resolve_plan_parts(plan, truck()), wcs::UnknownPart);
}

TEST_CASE("validate_plan emits the documented warnings", "[plan]") {
    const wcs::AssemblySpec assembly = truck();

    SECTION("pick without a later place or insert") {
        const SubtaskPlan plan =
            wcs::parse_plan(R"([{"subtask":"Pick the Kingpin","behavior":"Pick","parts":["Kingpin"]}])");
        const auto warnings = wcs::validate_plan(plan, assembly);
        REQUIRE_FALSE(warnings.empty());
        CHECK(warnings[0].find("no later Place or Insert") != std::string::npos);
    }

    SECTION("insert pair not adjacent") {
        const SubtaskPlan plan = wcs::parse_plan(
            R"([{"subtask":"Insert the Wheel on the Nut","behavior":"Insert","parts":["Wheel","Nut"]}])");
        bool found = false;
        for (const auto& warning : wcs::validate_plan(plan, assembly)) {
            if (warning.find("not adjacent") != std::string::npos) found = true;
        }
        CHECK(found);
    }

    SECTION("subtask count bounds") {
        const SubtaskPlan tiny = wcs::parse_plan("[]");
        bool found = false;
        for (const auto& warning : wcs::validate_plan(tiny, assembly)) {
            if (warning.find("plan has 0 subtasks") != std::string::npos) found = true;
        }
        CHECK(found);
    }
}

TEST_CASE("tda context carries the paper's entry order", "[plan]") {
    const wcs::AssemblySpec assembly = truck();
    std::vector<std::string> names;
    for (const auto& part : assembly.parts) names.push_back(part.name);
    const wcs::ChatHistory history =
        wcs::build_tda_context(assembly, names, wcs::all_behaviors(), tda_examples());

    // 2 guideline entries + 4 context entries (S, P, B, E)
    REQUIRE(history.size() == 6);
    CHECK(history.entries()[0].group == wcs::EntryGroup::SystemGuidelines);
    CHECK(history.entries()[1].group == wcs::EntryGroup::SystemGuidelines);
    for (std::size_t i = 2; i < 6; ++i) {
        CHECK(history.entries()[i].group == wcs::EntryGroup::TaskContext);
    }
    CHECK(history.entries()[2].content.find("assembly: Skateboard Truck") != std::string::npos);
    CHECK(history.entries()[3].content.find("- Kingpin") != std::string::npos);
    // behavior list rendered verbatim
    CHECK(history.entries()[4].content.find("Pick") != std::string::npos);
    CHECK(history.entries()[4].content.find("Insert") != std::string::npos);
    // examples sit last, in the recency position
    CHECK(history.entries()[5].content.find("Assemble the Axle") != std::string::npos);

    CHECK_THROWS_AS(wcs::build_tda_context(assembly, names, wcs::all_behaviors(), {}),
                    std::invalid_argument);
}

TEST_CASE("decompose parses the axle worked example", "[plan]") {
    const wcs::AssemblySpec assembly = truck();
    std::vector<std::string> names;
    for (const auto& part : assembly.parts) names.push_back(part.name);
    wcs::ChatHistory history = wcs::build_tda_context(assembly, names, wcs::all_behaviors(), tda_examples());

    const std::string response = R"(```json
[
  {"subtask": "Detect the Axle", "behavior": "Detect", "parts": ["Axle"]},
  {"subtask": "Pick up the Axle", "behavior": "Pick", "parts": ["Axle"]},
  {"subtask": "Move the Axle", "behavior": "Move", "parts": ["Axle"]},
  {"subtask": "Insert the Axle", "behavior": "Insert", "parts": ["Axle", "Hanger"]}
]
```)";
    auto client = replay_client({{{"Assemble Axle"}, response}});
    const SubtaskPlan plan = wcs::decompose(history, "Assemble Axle", client, assembly);
    REQUIRE(plan.subtasks.size() == 4);
    CHECK(plan.subtasks[0].behavior == Behavior::Detect);
    CHECK(plan.subtasks[1].behavior == Behavior::Pick);
    CHECK(plan.subtasks[2].behavior == Behavior::Move);
    CHECK(plan.subtasks[3].behavior == Behavior::Insert);
    CHECK(plan.source_task == "Assemble Axle");
    // the task went in as a runtime user entry, the response as assistant
    CHECK(history.entries()[6].content == "Assemble Axle");
    CHECK(history.entries()[7].role == wcs::Role::Assistant);
}

TEST_CASE("decompose re-asks on malformed output then succeeds", "[plan]") {
    const wcs::AssemblySpec assembly = truck();
    std::vector<std::string> names;
    for (const auto& part : assembly.parts) names.push_back(part.name);
    wcs::ChatHistory history = wcs::build_tda_context(assembly, names, wcs::all_behaviors(), tda_examples());

    auto client = replay_client(
        {{{"Assemble Axle"}, "I think the plan could be:\n1. pick\n2. place"},
         {{"could not be parsed"}, "```json\n[{\"subtask\":\"Pick up the Axle\",\"behavior\":\"Pick\",\"parts\":[\"Axle\"]}]\n```"}});
    const SubtaskPlan plan = wcs::decompose(history, "Assemble Axle", client, assembly);
    CHECK(plan.subtasks.size() == 1);
    CHECK(client.provider().call_count() == 2);
}

TEST_CASE("decompose gives up after its re-ask budget", "[plan]") {
    const wcs::AssemblySpec assembly = truck();
    std::vector<std::string> names;
    for (const auto& part : assembly.parts) names.push_back(part.name);
    wcs::ChatHistory history = wcs::build_tda_context(assembly, names, wcs::all_behaviors(), tda_examples());

    auto client = replay_client({{{}, "nope"}, {{}, "still nope"}, {{}, "never"}});
    CHECK_THROWS_AS(wcs::decompose(history, "Assemble Axle", client, assembly), wcs::PlanParseError);
    CHECK(client.provider().call_count() == 3);
}

TEST_CASE("decompose surfaces unknown behaviors immediately", "[plan]") {
    const wcs::AssemblySpec assembly = truck();
    std::vector<std::string> names;
    for (const auto& part : assembly.parts) names.push_back(part.name);
    wcs::ChatHistory history = wcs::build_tda_context(assembly, names, wcs::all_behaviors(), tda_examples());

    auto client = replay_client(
        {{{}, R"([{"subtask":"Weld the Axle","behavior":"Weld","parts":["Axle"]}])"}});
    CHECK_THROWS_AS(wcs::decompose(history, "Assemble Axle", client, assembly), wcs::UnknownBehavior);
    CHECK(client.provider().call_count() == 1);
}
