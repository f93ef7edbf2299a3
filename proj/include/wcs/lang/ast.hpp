// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace wcs::lang {

struct SourceSpan {
    int line = 1;  // 1-based
    int col = 1;   // 1-based
};

enum class ErrorStage { Lex, Parse, Check };

inline const char* stage_name(ErrorStage s) {
    switch (s) {
        case ErrorStage::Lex: return "LexError";
        case ErrorStage::Parse: return "ParseError";
        case ErrorStage::Check: return "CheckError";
    }
    return "Error";
}

/// Returns the 1-based line `line` of `source`, without its newline.
inline std::string line_at(const std::string& source, int line) {
    int current = 1;
    std::size_t start = 0;
    while (current < line) {
        std::size_t next = source.find('\n', start);
        if (next == std::string::npos) return "";
        start = next + 1;
        ++current;
    }
    std::size_t end = source.find('\n', start);
    if (end == std::string::npos) end = source.size();
    std::string text = source.substr(start, end - start);
    if (!text.empty() && text.back() == '\r') text.pop_back();
    return text;
}

/// Lex/parse/check failure. The formatted text is exactly what gets fed
/// back to the script generation agent.
class ScriptError : public std::runtime_error {
public:
    ScriptError(ErrorStage stage, std::string message, SourceSpan span, std::string excerpt)
        : std::runtime_error(format(stage, message, span, excerpt)),
          stage_(stage),
          message_(std::move(message)),
          span_(span),
          excerpt_(std::move(excerpt)) {}

    ErrorStage stage() const { return stage_; }
    const std::string& message() const { return message_; }
    SourceSpan span() const { return span_; }
    const std::string& excerpt() const { return excerpt_; }

    static std::string format(ErrorStage stage, const std::string& message, SourceSpan span,
                              const std::string& excerpt) {
        std::string out = std::string(stage_name(stage)) + ": " + message;
        out += "\n  at line " + std::to_string(span.line) + ", column " + std::to_string(span.col) + ":";
        out += "\n    " + excerpt;
        return out;
    }

private:
    ErrorStage stage_;
    std::string message_;
    SourceSpan span_;
    std::string excerpt_;
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct NameExpr {
    std::string name;
};

struct NumberExpr {
    double value = 0.0;
};

struct StringExpr {
    std::string value;
};

struct ListExpr {
    std::vector<ExprPtr> items;
};

struct AttrExpr {
    ExprPtr object;
    std::string attr;
};

struct CallExpr {
    ExprPtr callee;  // NameExpr for free calls, AttrExpr for API calls
    std::vector<ExprPtr> args;
};

struct UnaryExpr {
    char op = '-';
    ExprPtr operand;
};

struct BinaryExpr {
    std::string op;  // + - * / @ == != < <= > >=
    ExprPtr lhs;
    ExprPtr rhs;
};

struct Expr {
    SourceSpan span;
    std::variant<NameExpr, NumberExpr, StringExpr, ListExpr, AttrExpr, CallExpr, UnaryExpr, BinaryExpr> node;
};

struct Stmt;
using StmtPtr = std::shared_ptr<const Stmt>;
using Block = std::vector<StmtPtr>;

enum class AssignKind { Let, Assign };  // first binding vs rebinding of a name

struct AssignStmt {
    AssignKind kind = AssignKind::Let;
    std::string name;
    ExprPtr value;
};

struct ExprStmt {
    ExprPtr call;
};

struct PrintStmt {
    std::vector<ExprPtr> args;
};

struct IfStmt {
    ExprPtr condition;
    Block then_body;
    Block else_body;  // may be empty
};

struct ForRangeStmt {
    std::string var;
    std::vector<ExprPtr> range_args;  // 1..3 arguments
    Block body;
};

struct TryExceptStmt {
    Block try_body;
    std::string except_kind;  // "" or "Exception" catches everything
    std::string bind_name;    // "" when no `as` clause
    Block except_body;
};

struct RaiseStmt {
    std::string kind;  // conventionally "Exception"
    ExprPtr message;
};

struct ReturnStmt {
    ExprPtr value;  // may be null
};

struct CommentStmt {
    std::string text;  // verbatim text after '#'
};

struct Stmt {
    SourceSpan span;
    std::variant<AssignStmt, ExprStmt, PrintStmt, IfStmt, ForRangeStmt, TryExceptStmt, RaiseStmt, ReturnStmt,
                 CommentStmt>
        node;
};

struct Function {
    SourceSpan span;
    std::string name;
    std::vector<std::string> params;
    std::optional<std::string> docstring;
    std::vector<std::string> leading_comments;
    Block body;
};

struct WcsScript {
    std::vector<Function> functions;
    std::vector<std::string> trailing_comments;

    const Function* find_function(const std::string& name) const {
        for (const auto& f : functions) {
            if (f.name == name) return &f;
        }
        return nullptr;
    }
};

// --- structural equality, spans excluded -----------------------------------

bool structurally_equal(const Expr& a, const Expr& b);
bool structurally_equal(const Stmt& a, const Stmt& b);

inline bool structurally_equal(const Block& a, const Block& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!structurally_equal(*a[i], *b[i])) return false;
    }
    return true;
}

inline bool structurally_equal(const ExprPtr& a, const ExprPtr& b) {
    if (!a || !b) return !a && !b;
    return structurally_equal(*a, *b);
}

inline bool structurally_equal(const Expr& a, const Expr& b) {
    if (a.node.index() != b.node.index()) return false;
    return std::visit(
        [&b](const auto& lhs) -> bool {
            using T = std::decay_t<decltype(lhs)>;
            const auto& rhs = std::get<T>(b.node);
            if constexpr (std::is_same_v<T, NameExpr>) {
                return lhs.name == rhs.name;
            } else if constexpr (std::is_same_v<T, NumberExpr>) {
                return lhs.value == rhs.value;
            } else if constexpr (std::is_same_v<T, StringExpr>) {
                return lhs.value == rhs.value;
            } else if constexpr (std::is_same_v<T, ListExpr>) {
                if (lhs.items.size() != rhs.items.size()) return false;
                for (std::size_t i = 0; i < lhs.items.size(); ++i) {
                    if (!structurally_equal(lhs.items[i], rhs.items[i])) return false;
                }
                return true;
            } else if constexpr (std::is_same_v<T, AttrExpr>) {
                return lhs.attr == rhs.attr && structurally_equal(lhs.object, rhs.object);
            } else if constexpr (std::is_same_v<T, CallExpr>) {
                if (!structurally_equal(lhs.callee, rhs.callee)) return false;
                if (lhs.args.size() != rhs.args.size()) return false;
                for (std::size_t i = 0; i < lhs.args.size(); ++i) {
                    if (!structurally_equal(lhs.args[i], rhs.args[i])) return false;
                }
                return true;
            } else if constexpr (std::is_same_v<T, UnaryExpr>) {
                return lhs.op == rhs.op && structurally_equal(lhs.operand, rhs.operand);
            } else {
                static_assert(std::is_same_v<T, BinaryExpr>);
                return lhs.op == rhs.op && structurally_equal(lhs.lhs, rhs.lhs) &&
                       structurally_equal(lhs.rhs, rhs.rhs);
            }
        },
        a.node);
}

inline bool structurally_equal(const Stmt& a, const Stmt& b) {
    if (a.node.index() != b.node.index()) return false;
    return std::visit(
        [&b](const auto& lhs) -> bool {
            using T = std::decay_t<decltype(lhs)>;
            const auto& rhs = std::get<T>(b.node);
            if constexpr (std::is_same_v<T, AssignStmt>) {
                return lhs.kind == rhs.kind && lhs.name == rhs.name && structurally_equal(lhs.value, rhs.value);
            } else if constexpr (std::is_same_v<T, ExprStmt>) {
                return structurally_equal(lhs.call, rhs.call);
            } else if constexpr (std::is_same_v<T, PrintStmt>) {
                if (lhs.args.size() != rhs.args.size()) return false;
                for (std::size_t i = 0; i < lhs.args.size(); ++i) {
                    if (!structurally_equal(lhs.args[i], rhs.args[i])) return false;
                }
                return true;
            } else if constexpr (std::is_same_v<T, IfStmt>) {
                return structurally_equal(lhs.condition, rhs.condition) &&
                       structurally_equal(lhs.then_body, rhs.then_body) &&
                       structurally_equal(lhs.else_body, rhs.else_body);
            } else if constexpr (std::is_same_v<T, ForRangeStmt>) {
                if (lhs.var != rhs.var || lhs.range_args.size() != rhs.range_args.size()) return false;
                for (std::size_t i = 0; i < lhs.range_args.size(); ++i) {
                    if (!structurally_equal(lhs.range_args[i], rhs.range_args[i])) return false;
                }
                return structurally_equal(lhs.body, rhs.body);
            } else if constexpr (std::is_same_v<T, TryExceptStmt>) {
                return lhs.except_kind == rhs.except_kind && lhs.bind_name == rhs.bind_name &&
                       structurally_equal(lhs.try_body, rhs.try_body) &&
                       structurally_equal(lhs.except_body, rhs.except_body);
            } else if constexpr (std::is_same_v<T, RaiseStmt>) {
                return lhs.kind == rhs.kind && structurally_equal(lhs.message, rhs.message);
            } else if constexpr (std::is_same_v<T, ReturnStmt>) {
                return structurally_equal(lhs.value, rhs.value);
            } else {
                static_assert(std::is_same_v<T, CommentStmt>);
                return lhs.text == rhs.text;
            }
        },
        a.node);
}

inline bool structurally_equal(const Function& a, const Function& b) {
    return a.name == b.name && a.params == b.params && a.docstring == b.docstring &&
           a.leading_comments == b.leading_comments && structurally_equal(a.body, b.body);
}

inline bool structurally_equal(const WcsScript& a, const WcsScript& b) {
    if (a.functions.size() != b.functions.size()) return false;
    for (std::size_t i = 0; i < a.functions.size(); ++i) {
        if (!structurally_equal(a.functions[i], b.functions[i])) return false;
    }
    return a.trailing_comments == b.trailing_comments;
}

}  // namespace wcs::lang
