// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "wcs/lang/ast.hpp"
#include "wcs/lang/lexer.hpp"

namespace wcs::lang {

/// Recursive-descent parser producing a fully spanned AST. Import lines are
/// accepted and ignored; full-line comments are preserved as nodes.
class Parser {
public:
    explicit Parser(const std::string& source) : src_(source), tokens_(lex(source)) {}

    WcsScript run() {
        WcsScript script;
        std::vector<std::string> pending_comments;
        while (!at(TokenKind::End)) {
            if (at(TokenKind::Newline)) {
                next();
                continue;
            }
            if (at(TokenKind::Comment)) {
                pending_comments.push_back(next().text);
                expect_newline();
                continue;
            }
            if (at_keyword("import") || at_keyword("from")) {
                skip_line();
                continue;
            }
            if (at_keyword("def")) {
                Function fn = parse_function();
                fn.leading_comments = std::move(pending_comments);
                pending_comments.clear();
                script.functions.push_back(std::move(fn));
                continue;
            }
            fail("expected a function definition");
        }
        script.trailing_comments = std::move(pending_comments);
        return script;
    }

private:
    Function parse_function() {
        Function fn;
        fn.span = peek().span;
        expect_keyword("def");
        fn.name = expect(TokenKind::Name, "function name").text;
        expect_op("(");
        bound_.clear();
        if (!at_op(")")) {
            while (true) {
                const std::string param = expect(TokenKind::Name, "parameter name").text;
                fn.params.push_back(param);
                bound_.insert(param);
                if (at_op(",")) {
                    next();
                    continue;
                }
                break;
            }
        }
        expect_op(")");
        expect_op(":");
        expect_newline();
        expect(TokenKind::Indent, "an indented function body");
        if (at(TokenKind::String) && tokens_[idx_ + 1].kind == TokenKind::Newline) {
            fn.docstring = next().text;
            expect_newline();
        }
        fn.body = parse_block_statements();
        expect(TokenKind::Dedent, "end of function body");
        return fn;
    }

    Block parse_block() {
        expect_newline();
        expect(TokenKind::Indent, "an indented block");
        Block body = parse_block_statements();
        expect(TokenKind::Dedent, "end of block");
        return body;
    }

    Block parse_block_statements() {
        if (++block_depth_ > 100) fail("blocks nested too deeply");
        Block body;
        while (!at(TokenKind::Dedent) && !at(TokenKind::End)) {
            if (at(TokenKind::Newline)) {
                next();
                continue;
            }
            body.push_back(parse_statement());
        }
        if (body.empty()) fail("expected at least one statement");
        --block_depth_;
        return body;
    }

    StmtPtr parse_statement() {
        const SourceSpan span = peek().span;
        if (at(TokenKind::Comment)) {
            CommentStmt node{next().text};
            expect_newline();
            return make_stmt(span, std::move(node));
        }
        if (at_keyword("if")) return parse_if(span);
        if (at_keyword("for")) return parse_for(span);
        if (at_keyword("try")) return parse_try(span);
        if (at_keyword("raise")) return parse_raise(span);
        if (at_keyword("return")) {
            next();
            ReturnStmt node;
            if (!at(TokenKind::Newline)) node.value = parse_expression();
            expect_newline();
            return make_stmt(span, std::move(node));
        }
        if (at(TokenKind::Name) && tokens_[idx_ + 1].kind == TokenKind::Op && tokens_[idx_ + 1].text == "=") {
            AssignStmt node;
            node.name = next().text;
            next();  // '='
            node.value = parse_expression();
            node.kind = bound_.count(node.name) ? AssignKind::Assign : AssignKind::Let;
            bound_.insert(node.name);
            expect_newline();
            return make_stmt(span, std::move(node));
        }
        if (at(TokenKind::Name) && peek().text == "print" && tokens_[idx_ + 1].kind == TokenKind::Op &&
            tokens_[idx_ + 1].text == "(") {
            next();
            PrintStmt node;
            node.args = parse_call_args();
            expect_newline();
            return make_stmt(span, std::move(node));
        }
        if (at(TokenKind::Name) || at_op("(")) {
            ExprPtr expr = parse_expression();
            if (!std::holds_alternative<CallExpr>(expr->node)) {
                fail_at(span, "expected a statement (a bare expression must be a call)");
            }
            expect_newline();
            return make_stmt(span, ExprStmt{std::move(expr)});
        }
        fail("expected a statement");
    }

    StmtPtr parse_if(SourceSpan span) {
        expect_keyword("if");
        IfStmt node;
        node.condition = parse_expression();
        expect_op(":");
        node.then_body = parse_block();
        if (at_keyword("else")) {
            next();
            expect_op(":");
            node.else_body = parse_block();
        }
        return make_stmt(span, std::move(node));
    }

    StmtPtr parse_for(SourceSpan span) {
        expect_keyword("for");
        ForRangeStmt node;
        node.var = expect(TokenKind::Name, "loop variable").text;
        expect_keyword("in");
        const Token range_tok = expect(TokenKind::Name, "range(...)");
        if (range_tok.text != "range") {
            fail_at(range_tok.span, "for loops must iterate over range(...)");
        }
        expect_op("(");
        if (at_op(")")) fail("range() requires at least one argument");
        while (true) {
            node.range_args.push_back(parse_expression());
            if (at_op(",")) {
                next();
                continue;
            }
            break;
        }
        expect_op(")");
        if (node.range_args.size() > 3) {
            fail_at(range_tok.span, "range() takes at most 3 arguments");
        }
        bound_.insert(node.var);
        expect_op(":");
        node.body = parse_block();
        return make_stmt(span, std::move(node));
    }

    StmtPtr parse_try(SourceSpan span) {
        expect_keyword("try");
        expect_op(":");
        TryExceptStmt node;
        node.try_body = parse_block();
        expect_keyword("except");
        if (at(TokenKind::Name)) {
            node.except_kind = next().text;
            if (at_keyword("as")) {
                next();
                node.bind_name = expect(TokenKind::Name, "exception variable").text;
                bound_.insert(node.bind_name);
            }
        }
        expect_op(":");
        node.except_body = parse_block();
        return make_stmt(span, std::move(node));
    }

    StmtPtr parse_raise(SourceSpan span) {
        expect_keyword("raise");
        RaiseStmt node;
        node.kind = expect(TokenKind::Name, "exception kind (e.g. Exception)").text;
        expect_op("(");
        node.message = parse_expression();
        expect_op(")");
        expect_newline();
        return make_stmt(span, std::move(node));
    }

    std::vector<ExprPtr> parse_call_args() {
        expect_op("(");
        std::vector<ExprPtr> args;
        if (!at_op(")")) {
            while (true) {
                args.push_back(parse_expression());
                if (at_op(",")) {
                    next();
                    continue;
                }
                break;
            }
        }
        expect_op(")");
        return args;
    }

    // comparison > additive > multiplicative(@) > unary > postfix > primary
    ExprPtr parse_expression() {
        if (++expr_depth_ > 200) fail("expression nested too deeply");
        ExprPtr lhs = parse_additive();
        if (at(TokenKind::Op)) {
            const std::string& op = peek().text;
            if (op == "==" || op == "!=" || op == "<" || op == "<=" || op == ">" || op == ">=") {
                const SourceSpan span = peek().span;
                next();
                ExprPtr rhs = parse_additive();
                lhs = make_expr(span, BinaryExpr{op, std::move(lhs), std::move(rhs)});
            }
        }
        --expr_depth_;
        return lhs;
    }

    ExprPtr parse_additive() {
        ExprPtr lhs = parse_multiplicative();
        while (at(TokenKind::Op) && (peek().text == "+" || peek().text == "-")) {
            const SourceSpan span = peek().span;
            const std::string op = next().text;
            ExprPtr rhs = parse_multiplicative();
            lhs = make_expr(span, BinaryExpr{op, std::move(lhs), std::move(rhs)});
        }
        return lhs;
    }

    ExprPtr parse_multiplicative() {
        ExprPtr lhs = parse_unary();
        while (at(TokenKind::Op) && (peek().text == "*" || peek().text == "/" || peek().text == "@")) {
            const SourceSpan span = peek().span;
            const std::string op = next().text;
            ExprPtr rhs = parse_unary();
            lhs = make_expr(span, BinaryExpr{op, std::move(lhs), std::move(rhs)});
        }
        return lhs;
    }

    ExprPtr parse_unary() {
        if (++expr_depth_ > 200) fail("expression nested too deeply");
        ExprPtr out;
        if (at_op("-")) {
            const SourceSpan span = peek().span;
            next();
            out = make_expr(span, UnaryExpr{'-', parse_unary()});
        } else {
            out = parse_postfix();
        }
        --expr_depth_;
        return out;
    }

    ExprPtr parse_postfix() {
        ExprPtr expr = parse_primary();
        while (at(TokenKind::Op) && (peek().text == "." || peek().text == "(")) {
            const SourceSpan span = peek().span;
            if (peek().text == ".") {
                next();
                const std::string attr = expect(TokenKind::Name, "attribute name").text;
                expr = make_expr(span, AttrExpr{std::move(expr), attr});
            } else {
                std::vector<ExprPtr> args = parse_call_args();
                expr = make_expr(span, CallExpr{std::move(expr), std::move(args)});
            }
        }
        return expr;
    }

    ExprPtr parse_primary() {
        if (++expr_depth_ > 200) fail("expression nested too deeply");
        const Token& tok = peek();
        ExprPtr out;
        if (tok.kind == TokenKind::Name) {
            out = make_expr(tok.span, NameExpr{next().text});
        } else if (tok.kind == TokenKind::Number) {
            out = make_expr(tok.span, NumberExpr{next().number});
        } else if (tok.kind == TokenKind::String) {
            out = make_expr(tok.span, StringExpr{next().text});
        } else if (tok.kind == TokenKind::Op && tok.text == "(") {
            next();
            out = parse_expression();
            expect_op(")");
        } else if (tok.kind == TokenKind::Op && tok.text == "[") {
            const SourceSpan span = tok.span;
            next();
            ListExpr list;
            if (!at_op("]")) {
                while (true) {
                    list.items.push_back(parse_expression());
                    if (at_op(",")) {
                        next();
                        continue;
                    }
                    break;
                }
            }
            expect_op("]");
            out = make_expr(span, std::move(list));
        } else {
            fail("expected an expression");
        }
        --expr_depth_;
        return out;
    }

    // --- token helpers ------------------------------------------------------

    const Token& peek() const { return tokens_[idx_]; }

    Token next() { return tokens_[idx_++]; }

    bool at(TokenKind kind) const { return peek().kind == kind; }

    bool at_keyword(const std::string& word) const {
        return peek().kind == TokenKind::Keyword && peek().text == word;
    }

    bool at_op(const std::string& op) const { return peek().kind == TokenKind::Op && peek().text == op; }

    Token expect(TokenKind kind, const std::string& what) {
        if (!at(kind)) fail("expected " + what);
        return next();
    }

    void expect_keyword(const std::string& word) {
        if (!at_keyword(word)) fail("expected '" + word + "'");
        next();
    }

    void expect_op(const std::string& op) {
        if (!at_op(op)) fail("expected '" + op + "'");
        next();
    }

    void expect_newline() {
        if (at(TokenKind::End)) return;
        if (!at(TokenKind::Newline)) fail("expected end of line");
        next();
    }

    void skip_line() {
        while (!at(TokenKind::Newline) && !at(TokenKind::End)) next();
        if (at(TokenKind::Newline)) next();
    }

    template <typename Node>
    StmtPtr make_stmt(SourceSpan span, Node&& node) {
        auto stmt = std::make_shared<Stmt>();
        stmt->span = span;
        stmt->node = std::forward<Node>(node);
        return stmt;
    }

    template <typename Node>
    ExprPtr make_expr(SourceSpan span, Node&& node) {
        auto expr = std::make_shared<Expr>();
        expr->span = span;
        expr->node = std::forward<Node>(node);
        return expr;
    }

    [[noreturn]] void fail(const std::string& message) { fail_at(peek().span, message); }

    [[noreturn]] void fail_at(SourceSpan span, const std::string& message) {
        throw ScriptError(ErrorStage::Parse, message, span, line_at(src_, span.line));
    }

    const std::string& src_;
    std::vector<Token> tokens_;
    std::size_t idx_ = 0;
    int expr_depth_ = 0;
    int block_depth_ = 0;
    std::set<std::string> bound_;
};

inline WcsScript parse(const std::string& source) { return Parser(source).run(); }

}  // namespace wcs::lang
