// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>
#include <vector>

#include "support.hpp"
#include "wcs/chat.hpp"

using wcs::AliasTable;
using wcs::ChatHistory;
using wcs::ChatMessage;
using wcs::EntryGroup;
using wcs::Role;

namespace {

/// Independent check: single left-to-right pass, at each position trying
/// every term longest-first.
std::string brute_force_redact(const std::string& text, const std::map<std::string, std::string>& table) {
    std::vector<std::pair<std::string, std::string>> terms(table.begin(), table.end());
    std::sort(terms.begin(), terms.end(), [](const auto& a, const auto& b) {
        if (a.first.size() != b.first.size()) return a.first.size() > b.first.size();
        return a.first < b.first;
    });
    std::string out;
    std::size_t i = 0;
    while (i < text.size()) {
        bool matched = false;
        for (const auto& [term, alias] : terms) {
            if (text.compare(i, term.size(), term) == 0) {
                out += alias;
                i += term.size();
                matched = true;
                break;
            }
        }
        if (!matched) out += text[i++];
    }
    return out;
}

}  // namespace

TEST_CASE("bootstrap groups guidelines then context", "[chat]") {
    ChatHistory history;
    history.bootstrap({{Role::System, "role"}},
                      {{Role::User, "context a"}, {Role::User, "context b"}});
    REQUIRE(history.size() == 3);
    CHECK(history.entries()[0].group == EntryGroup::SystemGuidelines);
    CHECK(history.entries()[1].group == EntryGroup::TaskContext);
    CHECK(history.entries()[2].group == EntryGroup::TaskContext);
    CHECK(history.bootstrapped());
}

TEST_CASE("bootstrap with no context entries", "[chat]") {
    ChatHistory history;
    history.bootstrap({{Role::System, "a"}, {Role::System, "b"}}, {});
    CHECK(history.size() == 2);
}

TEST_CASE("second bootstrap fails", "[chat]") {
    ChatHistory history;
    history.bootstrap({{Role::System, "role"}}, {});
    CHECK_THROWS_AS(history.bootstrap({{Role::System, "again"}}, {}), wcs::AlreadyBootstrapped);
}

TEST_CASE("append_runtime requires bootstrap and keeps seq increasing", "[chat]") {
    ChatHistory fresh;
    CHECK_THROWS_AS(fresh.append_runtime(Role::User, "hi"), wcs::NotBootstrapped);

    ChatHistory history;
    history.bootstrap({{Role::System, "role"}}, {{Role::User, "ctx"}});
    history.append_runtime(Role::Assistant, "script text");
    history.append_runtime(Role::User, "error feedback");
    REQUIRE(history.size() == 4);
    CHECK(history.entries().back().group == EntryGroup::Runtime);
    CHECK(history.entries().back().role == Role::User);
    for (std::size_t i = 1; i < history.entries().size(); ++i) {
        CHECK(history.entries()[i].seq > history.entries()[i - 1].seq);
    }
}

TEST_CASE("render_messages preserves order and redacts", "[chat]") {
    ChatHistory history;
    history.bootstrap({{Role::System, "pick the Aera-K4-Hanger"}}, {{Role::User, "ctx"}});
    history.append_runtime(Role::Assistant, "moving the Aera-K4-Hanger now");

    const auto plain = history.render_messages(AliasTable{});
    REQUIRE(plain.size() == 3);
    CHECK(plain[0].content == "pick the Aera-K4-Hanger");

    const AliasTable table({{"Aera-K4-Hanger", "HANGER_P7"}});
    const auto redacted = history.render_messages(table);
    for (const auto& msg : redacted) {
        CHECK(msg.content.find("Aera-K4-Hanger") == std::string::npos);
    }
    CHECK(redacted[2].content == "moving the HANGER_P7 now");

    ChatHistory fresh;
    CHECK_THROWS_AS(fresh.render_messages(AliasTable{}), wcs::NotBootstrapped);
}

TEST_CASE("redact with an empty table is identity", "[chat]") {
    const std::string text = "pick the Aera-K4-Hanger";
    CHECK(wcs::redact(text, AliasTable{}) == text);
}

TEST_CASE("redact and restore round-trip", "[chat]") {
    const AliasTable table({{"Aera-K4-Hanger", "HANGER_P7"}});
    const std::string redacted = wcs::redact("pick the Aera-K4-Hanger", table);
    CHECK(redacted == "pick the HANGER_P7");
    CHECK(wcs::restore(redacted, table) == "pick the Aera-K4-Hanger");
}

TEST_CASE("longest match wins on overlapping terms", "[chat]") {
    const AliasTable table({{"Kingpin Bolt", "ALPHA"}, {"Kingpin", "BRAVO"}});
    CHECK(wcs::redact("Kingpin Bolt", table) == "ALPHA");
    CHECK(wcs::redact("Kingpin", table) == "BRAVO");
    CHECK(wcs::redact("the Kingpin Bolt and the Kingpin", table) == "the ALPHA and the BRAVO");
}

TEST_CASE("redaction matches the brute-force oracle on random concatenations", "[chat][property]") {
    const std::map<std::string, std::string> pairs{{"Kingpin Bolt", "ALPHA"},
                                                   {"Kingpin", "BRAVO"},
                                                   {"Bolt", "CHARLIE"},
                                                   {"Aera-K4-Hanger", "DELTA"}};
    const AliasTable table(pairs);
    const std::vector<std::string> pieces{"Kingpin Bolt", "Kingpin", "Bolt",  " ",    "pick",
                                          "Aera-K4-Hanger", "K4",     "olt B", "in B", "the "};
    std::mt19937_64 rng(1234);
    std::uniform_int_distribution<std::size_t> pick_piece(0, pieces.size() - 1);
    std::uniform_int_distribution<int> pick_len(1, 20);
    for (int iter = 0; iter < 1000; ++iter) {
        std::string text;
        const int n = pick_len(rng);
        for (int i = 0; i < n; ++i) text += pieces[pick_piece(rng)];
        CHECK(wcs::redact(text, table) == brute_force_redact(text, pairs));
    }
}

TEST_CASE("restore inverts redact on text with injected terms", "[chat][property]") {
    const AliasTable table({{"Kingpin Bolt", "ALPHA"}, {"Kingpin", "BRAVO"}, {"Hardcore-Bearing", "CHARLIE"}});
    const std::vector<std::string> words{"pick", "the", "and", "move", "to", "kit", "now"};
    const std::vector<std::string> terms{"Kingpin Bolt", "Kingpin", "Hardcore-Bearing"};
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<std::size_t> word(0, words.size() - 1);
    std::uniform_int_distribution<std::size_t> term(0, terms.size() - 1);
    std::uniform_int_distribution<int> len(1, 30);
    std::uniform_int_distribution<int> coin(0, 3);
    for (int iter = 0; iter < 500; ++iter) {
        std::string text;
        const int n = len(rng);
        for (int i = 0; i < n; ++i) {
            text += (coin(rng) == 0) ? terms[term(rng)] : words[word(rng)];
            text += " ";
        }
        CHECK(wcs::restore(wcs::redact(text, table), table) == text);
    }
}

TEST_CASE("alias table invariants are enforced", "[chat]") {
    CHECK_THROWS_AS(AliasTable({{"a", "x"}, {"b", "x"}}), std::invalid_argument);  // aliases not distinct
    CHECK_THROWS_AS(AliasTable({{"a", "b"}, {"b", "Y"}}), std::invalid_argument);  // alias equals a term
    CHECK_THROWS_AS(AliasTable({{"", "x"}}), std::invalid_argument);
}

TEST_CASE("alias sidecar loads, absent file means identity", "[chat]") {
    const AliasTable table =
        AliasTable::from_file_or_identity((test_support::asset_path("aliases_sample.json")).string());
    CHECK_FALSE(table.empty());
    CHECK(wcs::redact("Area-K4-Hanger", table) == "HANGER_P3");

    const AliasTable missing = AliasTable::from_file_or_identity("/nonexistent/aliases.json");
    CHECK(missing.empty());
}

TEST_CASE("history is append-only and group-partitioned under random ops", "[chat][property]") {
    std::mt19937_64 rng(4321);
    std::uniform_int_distribution<int> op(0, 3);
    for (int iter = 0; iter < 200; ++iter) {
        ChatHistory history;
        std::vector<std::string> model;  // expected contents in order
        bool bootstrapped = false;
        for (int step = 0; step < 30; ++step) {
            switch (op(rng)) {
                case 0: {
                    if (bootstrapped) {
                        CHECK_THROWS_AS(history.bootstrap({{Role::System, "g"}}, {}), wcs::AlreadyBootstrapped);
                    } else {
                        history.bootstrap({{Role::System, "g"}}, {{Role::User, "c"}});
                        model.push_back("g");
                        model.push_back("c");
                        bootstrapped = true;
                    }
                    break;
                }
                default: {
                    const std::string content = "m" + std::to_string(step);
                    if (bootstrapped) {
                        history.append_runtime(Role::User, content);
                        model.push_back(content);
                    } else {
                        CHECK_THROWS_AS(history.append_runtime(Role::User, content), wcs::NotBootstrapped);
                    }
                    break;
                }
            }
            // the model is always an exact match of the history
            REQUIRE(history.size() == model.size());
            for (std::size_t i = 0; i < model.size(); ++i) {
                CHECK(history.entries()[i].content == model[i]);
            }
            // group partition: no runtime entry before a non-runtime entry
            bool seen_runtime = false;
            for (const auto& entry : history.entries()) {
                if (entry.group == EntryGroup::Runtime) {
                    seen_runtime = true;
                } else {
                    CHECK_FALSE(seen_runtime);
                }
            }
        }
    }
}
