// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "wcs/api_catalog.hpp"
#include "wcs/lang/ast.hpp"

namespace wcs::lang {

/// Static checks run before a script may execute: a single main(workcell),
/// all names bound before use, API calls matching the catalog, and no
/// unreachable statements after return.
class Checker {
public:
    Checker(const std::string& source, const ApiCatalog& catalog) : src_(source), catalog_(catalog) {}

    std::vector<ScriptError> run(const WcsScript& script) {
        errors_.clear();
        function_names_.clear();
        function_arity_.clear();
        for (const auto& fn : script.functions) {
            if (!function_names_.insert(fn.name).second) {
                report(fn.span, "duplicate function \"" + fn.name + "\"");
            }
            function_arity_[fn.name] = static_cast<int>(fn.params.size());
        }
        const Function* main_fn = script.find_function("main");
        if (!main_fn) {
            report({1, 1}, "script must define main(workcell)");
        } else if (main_fn->params.size() != 1 || main_fn->params[0] != "workcell") {
            report(main_fn->span, "main must take a single parameter named workcell");
        }
        for (const auto& fn : script.functions) {
            std::set<std::string> bound(fn.params.begin(), fn.params.end());
            check_block(fn.body, bound);
        }
        return errors_;
    }

private:
    void check_block(const Block& block, std::set<std::string>& bound) {
        bool returned = false;
        for (const auto& stmt : block) {
            const bool is_comment = std::holds_alternative<CommentStmt>(stmt->node);
            if (returned && !is_comment) {
                report(stmt->span, "unreachable statement after return");
                returned = false;  // report once per block
            }
            check_stmt(*stmt, bound);
            if (std::holds_alternative<ReturnStmt>(stmt->node)) returned = true;
        }
    }

    void check_stmt(const Stmt& stmt, std::set<std::string>& bound) {
        std::visit(
            [&](const auto& node) {
                using T = std::decay_t<decltype(node)>;
                if constexpr (std::is_same_v<T, AssignStmt>) {
                    check_expr(*node.value, bound);
                    bound.insert(node.name);
                } else if constexpr (std::is_same_v<T, ExprStmt>) {
                    check_expr(*node.call, bound);
                } else if constexpr (std::is_same_v<T, PrintStmt>) {
                    for (const auto& arg : node.args) check_expr(*arg, bound);
                } else if constexpr (std::is_same_v<T, IfStmt>) {
                    check_expr(*node.condition, bound);
                    check_block(node.then_body, bound);
                    if (!node.else_body.empty()) check_block(node.else_body, bound);
                } else if constexpr (std::is_same_v<T, ForRangeStmt>) {
                    for (const auto& arg : node.range_args) check_expr(*arg, bound);
                    bound.insert(node.var);
                    check_block(node.body, bound);
                } else if constexpr (std::is_same_v<T, TryExceptStmt>) {
                    check_block(node.try_body, bound);
                    if (!node.bind_name.empty()) bound.insert(node.bind_name);
                    check_block(node.except_body, bound);
                } else if constexpr (std::is_same_v<T, RaiseStmt>) {
                    check_expr(*node.message, bound);
                } else if constexpr (std::is_same_v<T, ReturnStmt>) {
                    if (node.value) check_expr(*node.value, bound);
                } else {
                    static_assert(std::is_same_v<T, CommentStmt>);
                }
            },
            stmt.node);
    }

    void check_expr(const Expr& expr, const std::set<std::string>& bound) {
        std::visit(
            [&](const auto& node) {
                using T = std::decay_t<decltype(node)>;
                if constexpr (std::is_same_v<T, NameExpr>) {
                    if (!bound.count(node.name)) {
                        report(expr.span, "name \"" + node.name + "\" is not bound");
                    }
                } else if constexpr (std::is_same_v<T, ListExpr>) {
                    for (const auto& item : node.items) check_expr(*item, bound);
                } else if constexpr (std::is_same_v<T, AttrExpr>) {
                    check_expr(*node.object, bound);
                } else if constexpr (std::is_same_v<T, CallExpr>) {
                    check_call(expr, node, bound);
                } else if constexpr (std::is_same_v<T, UnaryExpr>) {
                    check_expr(*node.operand, bound);
                } else if constexpr (std::is_same_v<T, BinaryExpr>) {
                    check_expr(*node.lhs, bound);
                    check_expr(*node.rhs, bound);
                }
                // NumberExpr, StringExpr: nothing to check
            },
            expr.node);
    }

    void check_call(const Expr& expr, const CallExpr& call, const std::set<std::string>& bound) {
        const int argc = static_cast<int>(call.args.size());
        for (const auto& arg : call.args) check_expr(*arg, bound);
        if (const auto* attr = std::get_if<AttrExpr>(&call.callee->node)) {
            check_expr(*attr->object, bound);
            const ApiMethod* method = catalog_.find_method(attr->attr);
            if (!method) {
                report(call.callee->span, "unknown API function \"" + attr->attr + "\"");
            } else if (method->arity != argc) {
                report(call.callee->span, "API function \"" + attr->attr + "\" expects " +
                                              std::to_string(method->arity) + " arguments, got " +
                                              std::to_string(argc));
            }
            return;
        }
        if (const auto* name = std::get_if<NameExpr>(&call.callee->node)) {
            if (const ApiBuiltin* builtin = catalog_.find_builtin(name->name)) {
                if (argc < builtin->min_args || (builtin->max_args >= 0 && argc > builtin->max_args)) {
                    report(call.callee->span, "builtin \"" + name->name + "\" does not take " +
                                                  std::to_string(argc) + " arguments");
                }
                return;
            }
            auto it = function_arity_.find(name->name);
            if (it == function_arity_.end()) {
                report(call.callee->span, "unknown function \"" + name->name + "\"");
            } else if (it->second != argc) {
                report(call.callee->span, "function \"" + name->name + "\" expects " +
                                              std::to_string(it->second) + " arguments, got " +
                                              std::to_string(argc));
            }
            return;
        }
        report(expr.span, "expression is not callable");
    }

    void report(SourceSpan span, const std::string& message) {
        errors_.emplace_back(ErrorStage::Check, message, span, line_at(src_, span.line));
    }

    const std::string& src_;
    const ApiCatalog& catalog_;
    std::vector<ScriptError> errors_;
    std::set<std::string> function_names_;
    std::map<std::string, int> function_arity_;
};

inline std::vector<ScriptError> check(const WcsScript& script, const std::string& source,
                                      const ApiCatalog& catalog) {
    return Checker(source, catalog).run(script);
}

}  // namespace wcs::lang
