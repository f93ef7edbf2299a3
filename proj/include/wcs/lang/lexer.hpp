// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "wcs/lang/ast.hpp"

namespace wcs::lang {

enum class TokenKind { Name, Keyword, Number, String, Op, Newline, Indent, Dedent, Comment, End };

struct Token {
    TokenKind kind = TokenKind::End;
    std::string text;     // identifier, keyword, operator, comment body, or string value
    double number = 0.0;  // for Number
    SourceSpan span;
};

namespace detail {

inline bool is_ident_start(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
}
inline bool is_ident_char(char c) { return is_ident_start(c) || (c >= '0' && c <= '9'); }
inline bool is_digit(char c) { return c >= '0' && c <= '9'; }

inline bool is_keyword(const std::string& word) {
    static const char* kw[] = {"def", "return", "raise", "if",     "else", "for",
                               "in",  "try",    "except", "as",     "import", "from"};
    for (const char* k : kw) {
        if (word == k) return true;
    }
    return false;
}

}  // namespace detail

/// Indentation-aware lexer. Blank lines produce no tokens; full-line
/// comments become Comment tokens; trailing comments are dropped. Newlines
/// inside parentheses or brackets are ignored.
class Lexer {
public:
    explicit Lexer(const std::string& source) : src_(source) {}

    std::vector<Token> run() {
        std::vector<Token> tokens;
        indents_.push_back(0);
        bool at_line_start = true;
        while (pos_ < src_.size()) {
            if (at_line_start && paren_depth_ == 0) {
                if (!handle_line_start(tokens)) break;  // EOF reached while skipping blanks
                at_line_start = false;
                continue;
            }
            const char c = src_[pos_];
            if (c == ' ' || c == '\t' || c == '\r') {
                advance();
                continue;
            }
            if (c == '\n') {
                advance_line();
                if (paren_depth_ == 0) {
                    emit(tokens, TokenKind::Newline, "\\n");
                    at_line_start = true;
                }
                continue;
            }
            if (c == '#') {
                skip_to_eol();  // trailing comment
                continue;
            }
            lex_token(tokens);
        }
        if (!tokens.empty() && tokens.back().kind != TokenKind::Newline) {
            emit(tokens, TokenKind::Newline, "\\n");
        }
        while (indents_.back() > 0) {
            indents_.pop_back();
            emit(tokens, TokenKind::Dedent, "");
        }
        emit(tokens, TokenKind::End, "");
        return tokens;
    }

private:
    // Measures indentation, emits Indent/Dedent, and handles blank and
    // comment-only lines. Returns false at end of input.
    bool handle_line_start(std::vector<Token>& tokens) {
        while (true) {
            int col = 0;
            std::size_t scan = pos_;
            while (scan < src_.size()) {
                const char c = src_[scan];
                if (c == ' ') {
                    ++col;
                } else if (c == '\t') {
                    col = (col / 8 + 1) * 8;  // tab stops every 8 columns
                } else if (c == '\r') {
                    // ignore
                } else {
                    break;
                }
                ++scan;
            }
            if (scan >= src_.size()) {
                pos_ = scan;
                return false;
            }
            if (src_[scan] == '\n') {  // blank line
                pos_ = scan;
                advance_line();
                continue;
            }
            pos_ = scan;
            col_ = col + 1;
            apply_indent(tokens, col);
            if (src_[pos_] == '#') {
                lex_full_line_comment(tokens);
                emit(tokens, TokenKind::Newline, "\\n");
                if (pos_ < src_.size() && src_[pos_] == '\n') advance_line();
                continue;
            }
            return true;
        }
    }

    void apply_indent(std::vector<Token>& tokens, int col) {
        if (col > indents_.back()) {
            indents_.push_back(col);
            emit(tokens, TokenKind::Indent, "");
            return;
        }
        while (col < indents_.back()) {
            indents_.pop_back();
            emit(tokens, TokenKind::Dedent, "");
        }
        if (col != indents_.back()) {
            fail("unindent does not match any outer indentation level");
        }
    }

    void lex_full_line_comment(std::vector<Token>& tokens) {
        const SourceSpan span{line_, col_};
        advance();  // '#'
        std::string text;
        while (pos_ < src_.size() && src_[pos_] != '\n') {
            if (src_[pos_] != '\r') text += src_[pos_];
            advance();
        }
        Token t;
        t.kind = TokenKind::Comment;
        t.text = text;
        t.span = span;
        tokens.push_back(std::move(t));
    }

    void lex_token(std::vector<Token>& tokens) {
        const char c = src_[pos_];
        if (detail::is_ident_start(c)) {
            lex_name(tokens);
        } else if (detail::is_digit(c)) {
            lex_number(tokens);
        } else if (c == '"') {
            lex_string(tokens);
        } else {
            lex_operator(tokens);
        }
    }

    void lex_name(std::vector<Token>& tokens) {
        const SourceSpan span{line_, col_};
        std::string word;
        while (pos_ < src_.size() && detail::is_ident_char(src_[pos_])) {
            word += src_[pos_];
            advance();
        }
        Token t;
        t.kind = detail::is_keyword(word) ? TokenKind::Keyword : TokenKind::Name;
        t.text = std::move(word);
        t.span = span;
        tokens.push_back(std::move(t));
    }

    void lex_number(std::vector<Token>& tokens) {
        const SourceSpan span{line_, col_};
        std::string text;
        while (pos_ < src_.size() && detail::is_digit(src_[pos_])) {
            text += src_[pos_];
            advance();
        }
        if (pos_ + 1 < src_.size() && src_[pos_] == '.' && detail::is_digit(src_[pos_ + 1])) {
            text += '.';
            advance();
            while (pos_ < src_.size() && detail::is_digit(src_[pos_])) {
                text += src_[pos_];
                advance();
            }
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            std::size_t mark = pos_;
            std::string exp(1, src_[pos_]);
            advance();
            if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) {
                exp += src_[pos_];
                advance();
            }
            if (pos_ < src_.size() && detail::is_digit(src_[pos_])) {
                while (pos_ < src_.size() && detail::is_digit(src_[pos_])) {
                    exp += src_[pos_];
                    advance();
                }
                text += exp;
            } else {
                rewind_to(mark);  // bare 'e' belongs to a following identifier
            }
        }
        Token t;
        t.kind = TokenKind::Number;
        t.text = text;
        t.number = std::stod(text);
        t.span = span;
        tokens.push_back(std::move(t));
    }

    void lex_string(std::vector<Token>& tokens) {
        const SourceSpan span{line_, col_};
        if (src_.compare(pos_, 3, "\"\"\"") == 0) {
            lex_triple_string(tokens, span);
            return;
        }
        advance();  // opening quote
        std::string value;
        while (true) {
            if (pos_ >= src_.size() || src_[pos_] == '\n') {
                fail_at(span, "unterminated string literal");
            }
            const char c = src_[pos_];
            if (c == '"') {
                advance();
                break;
            }
            if (c == '\\') {
                advance();
                if (pos_ >= src_.size()) fail_at(span, "unterminated string literal");
                value += unescape(src_[pos_], span);
                advance();
                continue;
            }
            if (static_cast<unsigned char>(c) < 0x20) {
                fail("control character in string literal (use an escape)");
            }
            value += c;
            advance();
        }
        Token t;
        t.kind = TokenKind::String;
        t.text = std::move(value);
        t.span = span;
        tokens.push_back(std::move(t));
    }

    void lex_triple_string(std::vector<Token>& tokens, SourceSpan span) {
        pos_ += 3;
        col_ += 3;
        std::string value;
        while (true) {
            if (pos_ >= src_.size()) fail_at(span, "unterminated triple-quoted string");
            if (src_.compare(pos_, 3, "\"\"\"") == 0) {
                pos_ += 3;
                col_ += 3;
                break;
            }
            if (src_[pos_] == '\n') {
                value += '\n';
                advance_line();
            } else {
                value += src_[pos_];
                advance();
            }
        }
        Token t;
        t.kind = TokenKind::String;
        t.text = std::move(value);
        t.span = span;
        tokens.push_back(std::move(t));
    }

    void lex_operator(std::vector<Token>& tokens) {
        const SourceSpan span{line_, col_};
        const char c = src_[pos_];
        std::string op(1, c);
        const char next = (pos_ + 1 < src_.size()) ? src_[pos_ + 1] : '\0';
        if ((c == '=' && next == '=') || (c == '!' && next == '=') || (c == '<' && next == '=') ||
            (c == '>' && next == '=')) {
            op += next;
            advance();
        }
        advance();
        static const std::string single_ops = "+-*/@()[],.:=<>";
        if (op.size() == 1 && single_ops.find(op[0]) == std::string::npos) {
            fail_at(span, "unexpected character '" + printable(op[0]) + "'");
        }
        if (op == "(" || op == "[") ++paren_depth_;
        if (op == ")" || op == "]") {
            if (paren_depth_ > 0) --paren_depth_;
        }
        Token t;
        t.kind = TokenKind::Op;
        t.text = std::move(op);
        t.span = span;
        tokens.push_back(std::move(t));
    }

    static std::string printable(char c) {
        if (static_cast<unsigned char>(c) >= 0x20 && static_cast<unsigned char>(c) < 0x7f) {
            return std::string(1, c);
        }
        char buf[8];
        std::snprintf(buf, sizeof(buf), "\\x%02x", static_cast<unsigned char>(c));
        return buf;
    }

    char unescape(char c, SourceSpan span) {
        switch (c) {
            case 'n': return '\n';
            case 't': return '\t';
            case 'r': return '\r';
            case '"': return '"';
            case '\\': return '\\';
            default: fail_at(span, std::string("unknown escape sequence '\\") + printable(c) + "'");
        }
        return c;
    }

    void skip_to_eol() {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
    }

    void advance() {
        ++pos_;
        ++col_;
    }

    void advance_line() {
        ++pos_;
        ++line_;
        col_ = 1;
    }

    void rewind_to(std::size_t mark) {
        col_ -= static_cast<int>(pos_ - mark);
        pos_ = mark;
    }

    void emit(std::vector<Token>& tokens, TokenKind kind, std::string text) {
        Token t;
        t.kind = kind;
        t.text = std::move(text);
        t.span = {line_, col_};
        tokens.push_back(std::move(t));
    }

    [[noreturn]] void fail(const std::string& message) { fail_at({line_, col_}, message); }

    [[noreturn]] void fail_at(SourceSpan span, const std::string& message) {
        throw ScriptError(ErrorStage::Lex, message, span, line_at(src_, span.line));
    }

    const std::string& src_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
    int paren_depth_ = 0;
    std::vector<int> indents_;
};

inline std::vector<Token> lex(const std::string& source) { return Lexer(source).run(); }

}  // namespace wcs::lang
