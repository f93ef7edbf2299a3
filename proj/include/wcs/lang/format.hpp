// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "wcs/lang/ast.hpp"
#include "wcs/text.hpp"

namespace wcs::lang {

/// Canonical 4-space-indent renderer; parse(format(s)) is structurally
/// equal to s and format is idempotent over canonical sources.
class Formatter {
public:
    std::string run(const WcsScript& script) {
        out_.clear();
        bool first = true;
        for (const auto& fn : script.functions) {
            if (!first) out_ += "\n";
            first = false;
            for (const auto& comment : fn.leading_comments) {
                out_ += "#" + comment + "\n";
            }
            out_ += "def " + fn.name + "(";
            for (std::size_t i = 0; i < fn.params.size(); ++i) {
                if (i) out_ += ", ";
                out_ += fn.params[i];
            }
            out_ += "):\n";
            if (fn.docstring) {
                out_ += indent(1) + format_docstring(*fn.docstring) + "\n";
            }
            emit_block(fn.body, 1);
        }
        for (const auto& comment : script.trailing_comments) {
            if (!first) out_ += "\n";
            first = false;
            out_ += "#" + comment + "\n";
        }
        return out_;
    }

    static std::string format_expr(const Expr& expr) { return render_expr(expr, 0); }

private:
    static std::string indent(int depth) { return std::string(static_cast<std::size_t>(depth) * 4, ' '); }

    void emit_block(const Block& block, int depth) {
        for (const auto& stmt : block) emit_stmt(*stmt, depth);
    }

    void emit_stmt(const Stmt& stmt, int depth) {
        const std::string pad = indent(depth);
        std::visit(
            [&](const auto& node) {
                using T = std::decay_t<decltype(node)>;
                if constexpr (std::is_same_v<T, AssignStmt>) {
                    out_ += pad + node.name + " = " + render_expr(*node.value, 0) + "\n";
                } else if constexpr (std::is_same_v<T, ExprStmt>) {
                    out_ += pad + render_expr(*node.call, 0) + "\n";
                } else if constexpr (std::is_same_v<T, PrintStmt>) {
                    out_ += pad + "print(";
                    for (std::size_t i = 0; i < node.args.size(); ++i) {
                        if (i) out_ += ", ";
                        out_ += render_expr(*node.args[i], 0);
                    }
                    out_ += ")\n";
                } else if constexpr (std::is_same_v<T, IfStmt>) {
                    out_ += pad + "if " + render_expr(*node.condition, 0) + ":\n";
                    emit_block(node.then_body, depth + 1);
                    if (!node.else_body.empty()) {
                        out_ += pad + "else:\n";
                        emit_block(node.else_body, depth + 1);
                    }
                } else if constexpr (std::is_same_v<T, ForRangeStmt>) {
                    out_ += pad + "for " + node.var + " in range(";
                    for (std::size_t i = 0; i < node.range_args.size(); ++i) {
                        if (i) out_ += ", ";
                        out_ += render_expr(*node.range_args[i], 0);
                    }
                    out_ += "):\n";
                    emit_block(node.body, depth + 1);
                } else if constexpr (std::is_same_v<T, TryExceptStmt>) {
                    out_ += pad + "try:\n";
                    emit_block(node.try_body, depth + 1);
                    out_ += pad + "except";
                    if (!node.except_kind.empty()) {
                        out_ += " " + node.except_kind;
                        if (!node.bind_name.empty()) out_ += " as " + node.bind_name;
                    }
                    out_ += ":\n";
                    emit_block(node.except_body, depth + 1);
                } else if constexpr (std::is_same_v<T, RaiseStmt>) {
                    out_ += pad + "raise " + node.kind + "(" + render_expr(*node.message, 0) + ")\n";
                } else if constexpr (std::is_same_v<T, ReturnStmt>) {
                    out_ += pad + "return";
                    if (node.value) out_ += " " + render_expr(*node.value, 0);
                    out_ += "\n";
                } else {
                    static_assert(std::is_same_v<T, CommentStmt>);
                    out_ += pad + "#" + node.text + "\n";
                }
            },
            stmt.node);
    }

    // Precedence levels: 1 comparison, 2 additive, 3 multiplicative, 4 unary,
    // 5 postfix/primary. Parenthesize children of lower precedence.
    static int precedence(const Expr& expr) {
        if (const auto* bin = std::get_if<BinaryExpr>(&expr.node)) {
            if (bin->op == "+" || bin->op == "-") return 2;
            if (bin->op == "*" || bin->op == "/" || bin->op == "@") return 3;
            return 1;
        }
        if (std::holds_alternative<UnaryExpr>(expr.node)) return 4;
        return 5;
    }

    static std::string render_expr(const Expr& expr, int parent_prec) {
        const int prec = precedence(expr);
        std::string text = std::visit(
            [&](const auto& node) -> std::string {
                using T = std::decay_t<decltype(node)>;
                if constexpr (std::is_same_v<T, NameExpr>) {
                    return node.name;
                } else if constexpr (std::is_same_v<T, NumberExpr>) {
                    return format_double(node.value);
                } else if constexpr (std::is_same_v<T, StringExpr>) {
                    return quote(node.value);
                } else if constexpr (std::is_same_v<T, ListExpr>) {
                    std::string out = "[";
                    for (std::size_t i = 0; i < node.items.size(); ++i) {
                        if (i) out += ", ";
                        out += render_expr(*node.items[i], 0);
                    }
                    return out + "]";
                } else if constexpr (std::is_same_v<T, AttrExpr>) {
                    return render_expr(*node.object, 5) + "." + node.attr;
                } else if constexpr (std::is_same_v<T, CallExpr>) {
                    std::string out = render_expr(*node.callee, 5) + "(";
                    for (std::size_t i = 0; i < node.args.size(); ++i) {
                        if (i) out += ", ";
                        out += render_expr(*node.args[i], 0);
                    }
                    return out + ")";
                } else if constexpr (std::is_same_v<T, UnaryExpr>) {
                    return "-" + render_expr(*node.operand, 4);
                } else {
                    static_assert(std::is_same_v<T, BinaryExpr>);
                    // left-associative: right child parenthesized at equal precedence
                    return render_expr(*node.lhs, prec) + " " + node.op + " " +
                           render_expr(*node.rhs, prec + 1);
                }
            },
            expr.node);
        if (prec < parent_prec) return "(" + text + ")";
        return text;
    }

    static std::string quote(const std::string& value) {
        std::string out = "\"";
        for (char c : value) {
            switch (c) {
                case '"': out += "\\\""; break;
                case '\\': out += "\\\\"; break;
                case '\n': out += "\\n"; break;
                case '\t': out += "\\t"; break;
                case '\r': out += "\\r"; break;
                default: out += c; break;
            }
        }
        return out + "\"";
    }

    /// Docstrings print triple-quoted when the text allows it, otherwise as
    /// a plain escaped string literal.
    static std::string format_docstring(const std::string& value) {
        const bool has_quote = value.find('"') != std::string::npos;
        bool has_control = false;
        for (char c : value) {
            if (static_cast<unsigned char>(c) < 0x20 && c != '\n') has_control = true;
        }
        if (!has_quote && !has_control) {
            return "\"\"\"" + value + "\"\"\"";
        }
        return quote(value);
    }

    std::string out_;
};

inline std::string format(const WcsScript& script) { return Formatter{}.run(script); }

}  // namespace wcs::lang
