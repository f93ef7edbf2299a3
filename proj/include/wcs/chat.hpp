// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace wcs {

enum class Role { System, User, Assistant };

inline std::string to_string(Role r) {
    switch (r) {
        case Role::System: return "system";
        case Role::User: return "user";
        case Role::Assistant: return "assistant";
    }
    return "user";
}

/// The three history groups: guidelines and context are fixed at bootstrap,
/// the run-time tail grows throughout a session.
enum class EntryGroup { SystemGuidelines, TaskContext, Runtime };

struct ChatEntry {
    Role role = Role::User;
    EntryGroup group = EntryGroup::Runtime;
    std::string content;
    std::int64_t seq = 0;
};

struct ChatMessage {
    Role role = Role::User;
    std::string content;
};

class AlreadyBootstrapped : public std::runtime_error {
public:
    AlreadyBootstrapped() : std::runtime_error("history is already bootstrapped") {}
};

class NotBootstrapped : public std::runtime_error {
public:
    NotBootstrapped() : std::runtime_error("history is not bootstrapped") {}
};

/// Bijective private-term -> public-alias table. Redaction is plain substring
/// replacement, longest match first; CAD-derived names are not tokenizable.
class AliasTable {
public:
    AliasTable() = default;

    AliasTable(std::initializer_list<std::pair<const std::string, std::string>> init)
        : AliasTable(std::map<std::string, std::string>(init)) {}

    explicit AliasTable(std::map<std::string, std::string> pairs) : pairs_(std::move(pairs)) {
        std::set<std::string> aliases;
        for (const auto& [term, alias] : pairs_) {
            if (term.empty() || alias.empty()) {
                throw std::invalid_argument("alias table entries must be nonempty");
            }
            if (!aliases.insert(alias).second) {
                throw std::invalid_argument("alias \"" + alias + "\" is not distinct");
            }
        }
        for (const auto& [term, alias] : pairs_) {
            (void)term;
            if (pairs_.count(alias)) {
                throw std::invalid_argument("alias \"" + alias + "\" equals a private term");
            }
        }
    }

    static AliasTable from_json_text(const std::string& text) {
        nlohmann::json root = nlohmann::json::parse(text);
        if (!root.is_object()) throw std::invalid_argument("aliases: expected a flat JSON object");
        std::map<std::string, std::string> pairs;
        for (auto it = root.begin(); it != root.end(); ++it) {
            if (!it.value().is_string()) throw std::invalid_argument("aliases." + it.key() + ": expected a string");
            pairs[it.key()] = it.value().get<std::string>();
        }
        return AliasTable{std::move(pairs)};
    }

    /// Absent sidecar file means identity (no redaction).
    static AliasTable from_file_or_identity(const std::string& path) {
        std::ifstream in(path);
        if (!in) return AliasTable{};
        std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        return from_json_text(text);
    }

    bool empty() const { return pairs_.empty(); }
    const std::map<std::string, std::string>& pairs() const { return pairs_; }

    AliasTable inverted() const {
        std::map<std::string, std::string> inv;
        for (const auto& [term, alias] : pairs_) inv[alias] = term;
        return AliasTable{std::move(inv)};
    }

private:
    std::map<std::string, std::string> pairs_;
};

namespace detail {

/// Finds every occurrence of every term, then resolves overlaps by position
/// first and term length second. Equivalent to a greedy longest-match scan.
inline std::string replace_terms(const std::string& text, const std::map<std::string, std::string>& table) {
    if (table.empty() || text.empty()) return text;
    struct Match {
        std::size_t pos;
        std::size_t len;
        const std::string* replacement;
    };
    std::vector<Match> matches;
    for (const auto& [term, replacement] : table) {
        std::size_t pos = 0;
        while ((pos = text.find(term, pos)) != std::string::npos) {
            matches.push_back({pos, term.size(), &replacement});
            ++pos;
        }
    }
    std::sort(matches.begin(), matches.end(), [](const Match& a, const Match& b) {
        if (a.pos != b.pos) return a.pos < b.pos;
        return a.len > b.len;
    });
    std::string out;
    out.reserve(text.size());
    std::size_t cursor = 0;
    for (const auto& m : matches) {
        if (m.pos < cursor) continue;  // overlapped by an earlier, longer match
        out.append(text, cursor, m.pos - cursor);
        out.append(*m.replacement);
        cursor = m.pos + m.len;
    }
    out.append(text, cursor, text.size() - cursor);
    return out;
}

}  // namespace detail

/// Replaces every private term with its public alias, longest match first.
inline std::string redact(const std::string& text, const AliasTable& table) {
    return detail::replace_terms(text, table.pairs());
}

/// Exact inverse of redact on any text redact produced.
inline std::string restore(const std::string& text, const AliasTable& table) {
    return detail::replace_terms(text, table.inverted().pairs());
}

/// Append-only, grouped chat history owned by a single agent.
class ChatHistory {
public:
    ChatHistory() = default;

    bool bootstrapped() const { return bootstrapped_; }
    const std::vector<ChatEntry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }

    void bootstrap(const std::vector<ChatMessage>& guideline_entries,
                   const std::vector<ChatMessage>& context_entries) {
        if (bootstrapped_) throw AlreadyBootstrapped{};
        for (const auto& msg : guideline_entries) {
            push(msg.role, EntryGroup::SystemGuidelines, msg.content);
        }
        for (const auto& msg : context_entries) {
            push(msg.role, EntryGroup::TaskContext, msg.content);
        }
        bootstrapped_ = true;
    }

    void append_runtime(Role role, std::string content) {
        if (!bootstrapped_) throw NotBootstrapped{};
        push(role, EntryGroup::Runtime, std::move(content));
    }

    /// Every entry in seq order, contents redacted through the table.
    std::vector<ChatMessage> render_messages(const AliasTable& table) const {
        if (!bootstrapped_) throw NotBootstrapped{};
        std::vector<ChatMessage> out;
        out.reserve(entries_.size());
        for (const auto& entry : entries_) {
            out.push_back({entry.role, redact(entry.content, table)});
        }
        return out;
    }

private:
    void push(Role role, EntryGroup group, std::string content) {
        ChatEntry entry;
        entry.role = role;
        entry.group = group;
        entry.content = std::move(content);
        entry.seq = next_seq_++;
        entries_.push_back(std::move(entry));
    }

    std::vector<ChatEntry> entries_;
    std::int64_t next_seq_ = 1;
    bool bootstrapped_ = false;
};

}  // namespace wcs
