// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "support.hpp"
#include "wcs/sga.hpp"

using test_support::asset_path;
using test_support::read_text;
using wcs::Behavior;
using wcs::Subtask;

namespace {

wcs::AssemblySpec truck() { return wcs::load_assembly(read_text(asset_path("truck_gld.json"))); }
wcs::WorkcellSpec cell_spec() { return wcs::load_workcell(read_text(asset_path("workcell.json"))); }

wcs::AgentClient replay_client(std::vector<wcs::TranscriptEntry> entries, wcs::AliasTable aliases = {}) {
    return wcs::AgentClient(std::make_shared<wcs::ReplayProvider>(std::move(entries)), "gpt-4",
                            std::move(aliases));
}

const std::string api_docs = wcs::ApiCatalog::builtin_default().render_reference();

Subtask subtask_of(int ordinal, const std::string& description, Behavior behavior,
                   std::vector<std::string> parts) {
    Subtask st;
    st.ordinal = ordinal;
    st.description = description;
    st.behavior = behavior;
    st.parts = std::move(parts);
    return st;
}

std::filesystem::path fresh_out_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("sga context follows the R L A W D E order", "[sga]") {
    wcs::ExampleLibrary library;
    library.add(Behavior::Pick, {"01", "first", "def main(workcell):\n    return\n"});
    library.add(Behavior::Pick, {"02", "second", "def main(workcell):\n    return\n"});
    library.add(Behavior::Pick, {"03", "third", "def main(workcell):\n    return\n"});

    const wcs::ChatHistory history =
        wcs::build_sga_context(Behavior::Pick, truck(), cell_spec(), api_docs, library);
    // 2 guidelines + A, W, D + 3 examples
    REQUIRE(history.size() == 8);
    CHECK(history.entries()[0].group == wcs::EntryGroup::SystemGuidelines);
    CHECK(history.entries()[2].content.find("assembly: Skateboard Truck") != std::string::npos);
    CHECK(history.entries()[3].content.find("workcell:") != std::string::npos);
    CHECK(history.entries()[4].content.find("API reference") != std::string::npos);
    CHECK(history.entries()[5].content.find("first") != std::string::npos);
    CHECK(history.entries()[7].content.find("third") != std::string::npos);
}

TEST_CASE("missing behavior example is an error", "[sga]") {
    wcs::ExampleLibrary empty;
    CHECK_THROWS_AS(wcs::build_sga_context(Behavior::Insert, truck(), cell_spec(), api_docs, empty),
                    wcs::MissingExample);
}

TEST_CASE("example library loads filed examples in order", "[sga]") {
    const wcs::ExampleLibrary library = wcs::ExampleLibrary::load(asset_path("examples"));
    const auto& picks = library.for_behavior(Behavior::Pick);
    REQUIRE(picks.size() == 2);
    CHECK(picks[0].name == "01_pick_wheel");
    CHECK(picks[1].name == "02_pick_guarded");
    CHECK(picks[0].description.find("kitted part") != std::string::npos);
    CHECK(picks[0].code.find("def main(workcell):") != std::string::npos);
    CHECK_FALSE(library.for_behavior(Behavior::Detect).empty());
    CHECK_FALSE(library.for_behavior(Behavior::Insert).empty());
}

TEST_CASE("redaction hides serial names in the rendered context", "[sga]") {
    const wcs::AssemblySpec dld = wcs::load_assembly(read_text(asset_path("truck_dld.json")));
    const wcs::WorkcellSpec dld_cell = wcs::load_workcell(read_text(asset_path("workcell_dld.json")));
    wcs::ExampleLibrary library;
    library.add(Behavior::Pick, {"01", "", "def main(workcell):\n    return\n"});
    const wcs::ChatHistory history =
        wcs::build_sga_context(Behavior::Pick, dld, dld_cell, api_docs, library);

    const wcs::AliasTable aliases({{"Kingpin-Bolt-91257A662-Zinc-Plated-Hex-Head-Screw", "KINGPIN_BOLT_01"},
                                   {"Area-K4-Hanger", "HANGER_01"}});
    for (const auto& msg : history.render_messages(aliases)) {
        CHECK(msg.content.find("Kingpin-Bolt-91257A662") == std::string::npos);
        CHECK(msg.content.find("Area-K4-Hanger") == std::string::npos);
    }
}

TEST_CASE("sga_write builds the prompt and extracts the code block", "[sga]") {
    wcs::ExampleLibrary library;
    library.add(Behavior::Pick, {"01", "", "def main(workcell):\n    return\n"});
    wcs::ChatHistory history = wcs::build_sga_context(Behavior::Pick, truck(), cell_spec(), api_docs, library);

    SECTION("without error") {
        auto client = replay_client(
            {{{"Pick the baseplate", "Behavior: Pick"}, "```\ndef main(workcell):\n    return\n```"}});
        const std::string source = wcs::sga_write(
            history, client, subtask_of(1, "Pick the baseplate", Behavior::Pick, {"Base"}), std::nullopt);
        CHECK(source == "def main(workcell):\n    return");
    }

    SECTION("prior error appears verbatim in the prompt") {
        auto client = replay_client(
            {{{"MotionException: unreachable position at line 7"}, "```\ndef main(workcell):\n    return\n```"}});
        CHECK_NOTHROW(wcs::sga_write(history, client,
                                     subtask_of(1, "Pick the baseplate", Behavior::Pick, {"Base"}),
                                     "MotionException: unreachable position at line 7"));
    }

    SECTION("a response without a fence is used verbatim") {
        auto client = replay_client({{{}, "def main(workcell):\n    return\n"}});
        const std::string source = wcs::sga_write(
            history, client, subtask_of(1, "Pick the baseplate", Behavior::Pick, {"Base"}), std::nullopt);
        CHECK(source == "def main(workcell):\n    return\n");
    }
}

TEST_CASE("save follows the naming rule and overwrites", "[sga]") {
    const auto dir = fresh_out_dir("wcs_sga_save");
    const Subtask st = subtask_of(3, "Pick Kingpin Bolt", Behavior::Pick, {"Kingpin"});
    const auto path = wcs::sga_save("source one", st, dir);
    CHECK(path.filename() == "003_pick_pick_kingpin_bolt.wcs");
    CHECK(read_text(path) == "source one");

    const auto again = wcs::sga_save("source two", st, dir);
    CHECK(again == path);
    CHECK(read_text(path) == "source two");

    std::ofstream(dir / "blocker").close();
    CHECK_THROWS_AS(wcs::sga_save("x", st, dir / "blocker" / "sub"), wcs::IoError);
}

TEST_CASE("try_subtask repairs a check failure and keeps the history tail alternating", "[sga]") {
    wcs::ExampleLibrary library;
    library.add(Behavior::Detect, {"01", "", read_text(asset_path("examples/detect/01_detect_axle.wcs"))});
    wcs::ChatHistory history =
        wcs::build_sga_context(Behavior::Detect, truck(), cell_spec(), api_docs, library);
    const std::size_t bootstrap_len = history.size();

    const std::string bad = "```\ndef main(workcell):\n    workcell.scan_part(\"Axle\")\n```";
    const std::string good = "```\ndef main(workcell):\n    pose = workcell.detect(\"Axle\")\n    print(pose)\n```";
    auto client = replay_client({{{"Detect the Axle"}, bad}, {{"unknown API function"}, good}});

    wcs::Workcell cell(truck(), cell_spec(), {});
    const auto dir = fresh_out_dir("wcs_sga_try");
    wcs::AttemptLog log(dir / "attempts.jsonl");
    const auto result = wcs::try_subtask(history, client, subtask_of(1, "Detect the Axle", Behavior::Detect, {"Axle"}),
                                         wcs::ApiCatalog::builtin_default(),
                                         wcs::run_on_workcell(cell, true), 5, dir, &log);
    CHECK(result.success.attempt_no == 2);
    REQUIRE(result.attempts.size() == 2);
    CHECK(result.attempts[0].outcome == wcs::AttemptOutcome::CheckFailed);
    CHECK(result.attempts[1].outcome == wcs::AttemptOutcome::Succeeded);

    // runtime tail: prompt, S1, X1-prompt, S2
    const auto& entries = history.entries();
    REQUIRE(entries.size() == bootstrap_len + 4);
    CHECK(entries[bootstrap_len + 0].role == wcs::Role::User);
    CHECK(entries[bootstrap_len + 1].role == wcs::Role::Assistant);
    CHECK(entries[bootstrap_len + 2].role == wcs::Role::User);
    CHECK(entries[bootstrap_len + 2].content.find("unknown API function") != std::string::npos);
    CHECK(entries[bootstrap_len + 3].role == wcs::Role::Assistant);

    // the attempts log has one line per attempt
    std::ifstream in(dir / "attempts.jsonl");
    int lines = 0;
    std::string line;
    while (std::getline(in, line)) ++lines;
    CHECK(lines == 2);
}

TEST_CASE("try_subtask exhausts after max_attempts", "[sga]") {
    wcs::ExampleLibrary library;
    library.add(Behavior::Detect, {"01", "", "def main(workcell):\n    return\n"});
    wcs::ChatHistory history =
        wcs::build_sga_context(Behavior::Detect, truck(), cell_spec(), api_docs, library);

    auto client = replay_client({{{}, "```\ndef main(workcell):\n    workcell.scan_part(\"Axle\")\n```"}});
    wcs::Workcell cell(truck(), cell_spec(), {});
    const auto dir = fresh_out_dir("wcs_sga_exhaust");
    try {
        wcs::try_subtask(history, client, subtask_of(1, "Detect the Axle", Behavior::Detect, {"Axle"}),
                         wcs::ApiCatalog::builtin_default(), wcs::run_on_workcell(cell, true), 1, dir, nullptr);
        FAIL("expected AttemptsExhausted");
    } catch (const wcs::AttemptsExhausted& e) {
        REQUIRE(e.attempts().size() == 1);
        CHECK(e.attempts()[0].outcome == wcs::AttemptOutcome::CheckFailed);
    }
}

TEST_CASE("failed attempts roll the simulator back", "[sga]") {
    wcs::ExampleLibrary library;
    library.add(Behavior::Move, {"01", "", "def main(workcell):\n    return\n"});
    wcs::ChatHistory history = wcs::build_sga_context(Behavior::Move, truck(), cell_spec(), api_docs, library);

    // attempt 1 moves then raises; attempt 2 is clean
    const std::string bad =
        "```\ndef main(workcell):\n    robot = workcell.get_robot(\"robot_left\")\n"
        "    robot.move_cartesian(robot.tcp_pose.translated(0.0, 0.1, 0.0))\n"
        "    raise Exception(\"abort after moving\")\n```";
    const std::string good =
        "```\ndef main(workcell):\n    robot = workcell.get_robot(\"robot_left\")\n"
        "    robot.move_cartesian(robot.tcp_pose.translated(0.0, 0.1, 0.0))\n```";
    auto client = replay_client({{{}, bad}, {{"abort after moving"}, good}});

    wcs::Workcell cell(truck(), cell_spec(), {});
    const wcs::Workcell entry = cell;
    const auto dir = fresh_out_dir("wcs_sga_rollback");
    const auto result =
        wcs::try_subtask(history, client, subtask_of(1, "Nudge the robot", Behavior::Move, {}),
                         wcs::ApiCatalog::builtin_default(), wcs::run_on_workcell(cell, true), 5, dir, nullptr);
    CHECK(result.success.attempt_no == 2);
    // only the successful run advanced the state: exactly one committed move
    CHECK(cell.step_counter() == 1);
    CHECK(cell.robots().at("robot_left").tcp_pose.ty() == 0.1);
    CHECK(entry.step_counter() == 0);
}

TEST_CASE("the effect check catches hollow successes and can be disabled", "[sga]") {
    wcs::ExampleLibrary library;
    library.add(Behavior::Pick, {"01", "", "def main(workcell):\n    return\n"});

    // runs cleanly but picks nothing
    const std::string hollow = "```\ndef main(workcell):\n    pose = workcell.detect(\"Kingpin\")\n    print(pose)\n```";

    SECTION("enabled: hollow success becomes feedback") {
        wcs::ChatHistory history =
            wcs::build_sga_context(Behavior::Pick, truck(), cell_spec(), api_docs, library);
        auto client = replay_client({{{}, hollow}});
        wcs::Workcell cell(truck(), cell_spec(), {});
        const auto dir = fresh_out_dir("wcs_sga_effect");
        try {
            wcs::try_subtask(history, client, subtask_of(1, "Pick up the Kingpin", Behavior::Pick, {"Kingpin"}),
                             wcs::ApiCatalog::builtin_default(), wcs::run_on_workcell(cell, true), 1, dir,
                             nullptr);
            FAIL("expected AttemptsExhausted");
        } catch (const wcs::AttemptsExhausted& e) {
            REQUIRE(e.attempts().size() == 1);
            CHECK(e.attempts()[0].error.find("effect check failed") != std::string::npos);
            CHECK(e.attempts()[0].error.find("not held after Pick") != std::string::npos);
        }
        // the hollow run was rolled back entirely
        CHECK(cell.op_log().empty());
    }

    SECTION("disabled: the hollow script passes") {
        wcs::ChatHistory history =
            wcs::build_sga_context(Behavior::Pick, truck(), cell_spec(), api_docs, library);
        auto client = replay_client({{{}, hollow}});
        wcs::Workcell cell(truck(), cell_spec(), {});
        const auto dir = fresh_out_dir("wcs_sga_noeffect");
        const auto result = wcs::try_subtask(
            history, client, subtask_of(1, "Pick up the Kingpin", Behavior::Pick, {"Kingpin"}),
            wcs::ApiCatalog::builtin_default(), wcs::run_on_workcell(cell, false), 1, dir, nullptr);
        CHECK(result.success.attempt_no == 1);
    }
}

TEST_CASE("debugging-loop transcript converges on the third attempt", "[sga]") {
    // the behavior example is the intentionally flawed script the paper uses
    wcs::ExampleLibrary library;
    library.add(Behavior::Move,
                {"01_flawed_random_motion", "Move the robot by random offsets, 100 times.",
                 read_text(asset_path("scripts/flawed_random_motion.wcs"))});
    wcs::ChatHistory history = wcs::build_sga_context(Behavior::Move, truck(), cell_spec(), api_docs, library);

    auto client = wcs::AgentClient(
        wcs::ReplayProvider::from_file(asset_path("transcripts/debug_loop.json").string()), "gpt-4");
    wcs::SimConfig config;
    config.seed = 2024;
    wcs::Workcell cell(truck(), cell_spec(), config);
    const auto dir = fresh_out_dir("wcs_sga_debug");
    const auto result = wcs::try_subtask(
        history, client, subtask_of(1, "Move the robot to 100 random positions", Behavior::Move, {}),
        wcs::ApiCatalog::builtin_default(), wcs::run_on_workcell(cell, true), 5, dir, nullptr);

    CHECK(result.success.attempt_no == 3);
    REQUIRE(result.attempts.size() == 3);
    CHECK(result.attempts[0].error.find("Exception: early exception raised on purpose") != std::string::npos);
    CHECK(result.attempts[1].error.find("MotionException") != std::string::npos);
    CHECK(result.attempts[1].error.find("unreachable position") != std::string::npos);
    CHECK(cell.step_counter() > 0);
}
