// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "wcs/lang/ast.hpp"
#include "wcs/sim/workcell.hpp"
#include "wcs/text.hpp"

namespace wcs {

/// A script run that aborted: carries the underlying error kind, the span of
/// the faulting statement, and the source excerpt. what() is the exact text
/// fed back to the script generation agent.
class RuntimeScriptError : public std::runtime_error {
public:
    RuntimeScriptError(std::string kind, std::string message, lang::SourceSpan span, std::string excerpt)
        : std::runtime_error(format(kind, message, span, excerpt)),
          kind_(std::move(kind)),
          message_(std::move(message)),
          span_(span),
          excerpt_(std::move(excerpt)) {}

    const std::string& kind() const { return kind_; }
    const std::string& message() const { return message_; }
    lang::SourceSpan span() const { return span_; }
    const std::string& excerpt() const { return excerpt_; }

    static std::string format(const std::string& kind, const std::string& message, lang::SourceSpan span,
                              const std::string& excerpt) {
        std::string out = kind + ": " + message;
        out += "\n  at line " + std::to_string(span.line) + ", column " + std::to_string(span.col) + ":";
        out += "\n    " + excerpt;
        return out;
    }

private:
    std::string kind_;
    std::string message_;
    lang::SourceSpan span_;
    std::string excerpt_;
};

struct RunOptions {
    std::int64_t statement_budget = 1'000'000;
};

struct RunResult {
    std::string output;
    std::int64_t statements_executed = 0;
};

namespace interp_detail {

struct RobotRef {
    std::string name;
};
struct WorkcellRef {};

struct Value;
using ValueList = std::shared_ptr<std::vector<Value>>;

struct Value {
    std::variant<std::monostate, bool, double, std::string, Pose, RobotRef, WorkcellRef, ValueList> data;

    Value() = default;
    template <typename T>
    Value(T v) : data(std::move(v)) {}
};

inline const char* type_name(const Value& v) {
    switch (v.data.index()) {
        case 0: return "none";
        case 1: return "bool";
        case 2: return "number";
        case 3: return "string";
        case 4: return "pose";
        case 5: return "robot";
        case 6: return "workcell";
        default: return "list";
    }
}

inline std::string value_repr(const Value& v) {
    return std::visit(
        [](const auto& x) -> std::string {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, std::monostate>) {
                return "none";
            } else if constexpr (std::is_same_v<T, bool>) {
                return x ? "true" : "false";
            } else if constexpr (std::is_same_v<T, double>) {
                return format_double(x);
            } else if constexpr (std::is_same_v<T, std::string>) {
                return x;
            } else if constexpr (std::is_same_v<T, Pose>) {
                return format_pose(x);
            } else if constexpr (std::is_same_v<T, RobotRef>) {
                return "robot(" + x.name + ")";
            } else if constexpr (std::is_same_v<T, WorkcellRef>) {
                return "workcell";
            } else {
                std::string out = "[";
                for (std::size_t i = 0; i < x->size(); ++i) {
                    if (i) out += ", ";
                    out += value_repr((*x)[i]);
                }
                return out + "]";
            }
        },
        v.data);
}

}  // namespace interp_detail

/// Tree-walking interpreter for checked scripts. Any uncaught fault aborts
/// the run and restores the workcell to its entry checkpoint.
class Interpreter {
public:
    Interpreter(const lang::WcsScript& script, const std::string& source, Workcell& cell,
                RunOptions options = {})
        : script_(script), src_(source), cell_(cell), options_(options) {}

    RunResult run() {
        const Workcell entry = cell_;
        try {
            const lang::Function* main_fn = script_.find_function("main");
            if (!main_fn) throw Fault{"RuntimeError", "script has no main function", {1, 1}};
            Frame frame;
            frame.vars["workcell"] = Value{interp_detail::WorkcellRef{}};
            exec_block(main_fn->body, frame);
            return RunResult{std::move(output_), executed_};
        } catch (const Fault& fault) {
            cell_ = entry;
            throw RuntimeScriptError(fault.kind, fault.message, fault.span, lang::line_at(src_, fault.span.line));
        } catch (const BudgetExceeded&) {
            cell_ = entry;
            throw RuntimeScriptError("BudgetError",
                                     "statement budget of " + std::to_string(options_.statement_budget) +
                                         " exceeded (possible infinite loop)",
                                     last_span_, lang::line_at(src_, last_span_.line));
        }
    }

private:
    using Value = interp_detail::Value;
    using RobotRef = interp_detail::RobotRef;
    using WorkcellRef = interp_detail::WorkcellRef;
    using ValueList = interp_detail::ValueList;

    struct Fault {
        std::string kind;
        std::string message;
        lang::SourceSpan span;
    };
    struct BudgetExceeded {};

    struct Frame {
        std::map<std::string, Value> vars;
    };

    enum class Flow { Normal, Returned };

    Flow exec_block(const lang::Block& block, Frame& frame) {
        for (const auto& stmt : block) {
            if (exec_stmt(*stmt, frame) == Flow::Returned) return Flow::Returned;
        }
        return Flow::Normal;
    }

    Flow exec_stmt(const lang::Stmt& stmt, Frame& frame) {
        last_span_ = stmt.span;
        if (++executed_ > options_.statement_budget) throw BudgetExceeded{};
        return std::visit(
            [&](const auto& node) -> Flow {
                using T = std::decay_t<decltype(node)>;
                if constexpr (std::is_same_v<T, lang::AssignStmt>) {
                    frame.vars[node.name] = eval(*node.value, frame);
                    return Flow::Normal;
                } else if constexpr (std::is_same_v<T, lang::ExprStmt>) {
                    eval(*node.call, frame);
                    return Flow::Normal;
                } else if constexpr (std::is_same_v<T, lang::PrintStmt>) {
                    std::string line;
                    for (std::size_t i = 0; i < node.args.size(); ++i) {
                        if (i) line += " ";
                        line += interp_detail::value_repr(eval(*node.args[i], frame));
                    }
                    output_ += line + "\n";
                    return Flow::Normal;
                } else if constexpr (std::is_same_v<T, lang::IfStmt>) {
                    if (truth(eval(*node.condition, frame), stmt.span)) {
                        return exec_block(node.then_body, frame);
                    }
                    if (!node.else_body.empty()) return exec_block(node.else_body, frame);
                    return Flow::Normal;
                } else if constexpr (std::is_same_v<T, lang::ForRangeStmt>) {
                    return exec_for(node, stmt.span, frame);
                } else if constexpr (std::is_same_v<T, lang::TryExceptStmt>) {
                    try {
                        return exec_block(node.try_body, frame);
                    } catch (const Fault& fault) {
                        if (!handles(node.except_kind, fault.kind)) throw;
                        if (!node.bind_name.empty()) {
                            frame.vars[node.bind_name] = Value{fault.kind + ": " + fault.message};
                        }
                        return exec_block(node.except_body, frame);
                    }
                } else if constexpr (std::is_same_v<T, lang::RaiseStmt>) {
                    const Value msg = eval(*node.message, frame);
                    const auto* text = std::get_if<std::string>(&msg.data);
                    throw Fault{node.kind, text ? *text : interp_detail::value_repr(msg), stmt.span};
                } else if constexpr (std::is_same_v<T, lang::ReturnStmt>) {
                    return_value_ = node.value ? eval(*node.value, frame) : Value{};
                    return Flow::Returned;
                } else {
                    static_assert(std::is_same_v<T, lang::CommentStmt>);
                    return Flow::Normal;
                }
            },
            stmt.node);
    }

    Flow exec_for(const lang::ForRangeStmt& node, lang::SourceSpan span, Frame& frame) {
        std::vector<long long> bounds;
        for (const auto& arg : node.range_args) {
            const double v = number(eval(*arg, frame), span, "range argument");
            if (std::fabs(v - std::llround(v)) > 1e-9) {
                throw Fault{"TypeError", "range arguments must be integers", span};
            }
            bounds.push_back(std::llround(v));
        }
        long long start = 0, stop = 0, step = 1;
        if (bounds.size() == 1) {
            stop = bounds[0];
        } else if (bounds.size() == 2) {
            start = bounds[0];
            stop = bounds[1];
        } else {
            start = bounds[0];
            stop = bounds[1];
            step = bounds[2];
        }
        if (step == 0) throw Fault{"ValueError", "range step must not be zero", span};
        for (long long i = start; (step > 0) ? (i < stop) : (i > stop); i += step) {
            frame.vars[node.var] = Value{static_cast<double>(i)};
            if (exec_block(node.body, frame) == Flow::Returned) return Flow::Returned;
        }
        return Flow::Normal;
    }

    static bool handles(const std::string& except_kind, const std::string& fault_kind) {
        return except_kind.empty() || except_kind == "Exception" || except_kind == fault_kind;
    }

    Value eval(const lang::Expr& expr, Frame& frame) {
        return std::visit(
            [&](const auto& node) -> Value {
                using T = std::decay_t<decltype(node)>;
                if constexpr (std::is_same_v<T, lang::NameExpr>) {
                    auto it = frame.vars.find(node.name);
                    if (it == frame.vars.end()) {
                        throw Fault{"NameError", "name \"" + node.name + "\" is not bound", expr.span};
                    }
                    return it->second;
                } else if constexpr (std::is_same_v<T, lang::NumberExpr>) {
                    return Value{node.value};
                } else if constexpr (std::is_same_v<T, lang::StringExpr>) {
                    return Value{node.value};
                } else if constexpr (std::is_same_v<T, lang::ListExpr>) {
                    auto items = std::make_shared<std::vector<Value>>();
                    for (const auto& item : node.items) items->push_back(eval(*item, frame));
                    return Value{std::move(items)};
                } else if constexpr (std::is_same_v<T, lang::AttrExpr>) {
                    return eval_attr(eval(*node.object, frame), node.attr, expr.span);
                } else if constexpr (std::is_same_v<T, lang::CallExpr>) {
                    return eval_call(node, expr.span, frame);
                } else if constexpr (std::is_same_v<T, lang::UnaryExpr>) {
                    const Value operand = eval(*node.operand, frame);
                    return Value{-number(operand, expr.span, "unary minus operand")};
                } else {
                    static_assert(std::is_same_v<T, lang::BinaryExpr>);
                    return eval_binary(node, expr.span, frame);
                }
            },
            expr.node);
    }

    Value eval_attr(const Value& object, const std::string& attr, lang::SourceSpan span) {
        if (const auto* pose = std::get_if<Pose>(&object.data)) {
            if (attr == "x") return Value{pose->tx()};
            if (attr == "y") return Value{pose->ty()};
            if (attr == "z") return Value{pose->tz()};
        } else if (const auto* robot = std::get_if<RobotRef>(&object.data)) {
            if (attr == "tcp_pose") return sim([&](Workcell& w) { return Value{w.robot(robot->name).tcp_pose}; }, span);
            if (attr == "name") return Value{robot->name};
        }
        throw Fault{"AttributeError", std::string("value of type ") + interp_detail::type_name(object) +
                                          " has no attribute \"" + attr + "\"",
                    span};
    }

    Value eval_call(const lang::CallExpr& call, lang::SourceSpan span, Frame& frame) {
        if (const auto* attr = std::get_if<lang::AttrExpr>(&call.callee->node)) {
            const Value receiver = eval(*attr->object, frame);
            std::vector<Value> args;
            args.reserve(call.args.size());
            for (const auto& a : call.args) args.push_back(eval(*a, frame));
            return eval_method(receiver, attr->attr, args, call.callee->span);
        }
        if (const auto* name = std::get_if<lang::NameExpr>(&call.callee->node)) {
            std::vector<Value> args;
            args.reserve(call.args.size());
            for (const auto& a : call.args) args.push_back(eval(*a, frame));
            return eval_free_call(name->name, args, call.callee->span);
        }
        throw Fault{"TypeError", "expression is not callable", span};
    }

    Value eval_method(const Value& receiver, const std::string& name, const std::vector<Value>& args,
                      lang::SourceSpan span) {
        if (std::holds_alternative<WorkcellRef>(receiver.data)) {
            if (name == "get_robot") {
                const std::string robot = str_arg(args, 0, name, span);
                sim([&](Workcell& w) { w.robot(robot); return Value{}; }, span);  // validates
                return Value{RobotRef{robot}};
            }
            if (name == "detect") {
                const std::string part = str_arg(args, 0, name, span);
                return sim([&](Workcell& w) { return Value{w.detect(part)}; }, span);
            }
            if (name == "design_pose") {
                const std::string part = str_arg(args, 0, name, span);
                return sim([&](Workcell& w) { return Value{w.design_pose(part)}; }, span);
            }
            if (name == "station_pose") {
                const std::string station = str_arg(args, 0, name, span);
                return sim([&](Workcell& w) { return Value{w.station_pose(station)}; }, span);
            }
            if (name == "grasp_offset") {
                const std::string gripper = str_arg(args, 0, name, span);
                return sim([&](Workcell& w) { return Value{w.grasp_offset_of(gripper)}; }, span);
            }
        } else if (const auto* robot = std::get_if<RobotRef>(&receiver.data)) {
            if (name == "move_cartesian") {
                const Pose target = pose_arg(args, 0, name, span);
                return sim([&](Workcell& w) { w.move_cartesian(robot->name, target); return Value{}; }, span);
            }
            if (name == "attach_gripper") {
                const std::string gripper = str_arg(args, 0, name, span);
                return sim([&](Workcell& w) { w.attach_gripper(robot->name, gripper); return Value{}; }, span);
            }
            if (name == "pick") {
                const std::string part = str_arg(args, 0, name, span);
                return sim([&](Workcell& w) { w.pick(robot->name, part); return Value{}; }, span);
            }
            if (name == "place") {
                const std::string part = str_arg(args, 0, name, span);
                const Pose target = pose_arg(args, 1, name, span);
                return sim([&](Workcell& w) { w.place(robot->name, part, target); return Value{}; }, span);
            }
            if (name == "insert") {
                const std::string part = str_arg(args, 0, name, span);
                const std::string target = str_arg(args, 1, name, span);
                return sim([&](Workcell& w) { w.insert(robot->name, part, target); return Value{}; }, span);
            }
            if (name == "retract") {
                return sim([&](Workcell& w) { w.retract(robot->name); return Value{}; }, span);
            }
        } else if (const auto* pose = std::get_if<Pose>(&receiver.data)) {
            if (name == "inverse") return Value{invert(*pose)};
            if (name == "translated") {
                return Value{pose->translated(number(args.at(0), span, "dx"), number(args.at(1), span, "dy"),
                                              number(args.at(2), span, "dz"))};
            }
        }
        throw Fault{"TypeError", "API function \"" + name + "\" is not available on a value of type " +
                                     interp_detail::type_name(receiver),
                    span};
    }

    Value eval_free_call(const std::string& name, const std::vector<Value>& args, lang::SourceSpan span) {
        if (name == "len") {
            if (const auto* list = std::get_if<ValueList>(&args.at(0).data)) {
                return Value{static_cast<double>((*list)->size())};
            }
            if (const auto* text = std::get_if<std::string>(&args.at(0).data)) {
                return Value{static_cast<double>(text->size())};
            }
            throw Fault{"TypeError", "len() expects a list or string", span};
        }
        if (name == "print") {
            std::string line;
            for (std::size_t i = 0; i < args.size(); ++i) {
                if (i) line += " ";
                line += interp_detail::value_repr(args[i]);
            }
            output_ += line + "\n";
            return Value{};
        }
        if (name == "random_uniform") {
            const double lo = number(args.at(0), span, "random_uniform lo");
            const double hi = number(args.at(1), span, "random_uniform hi");
            return sim([&](Workcell& w) { return Value{w.random_uniform(lo, hi)}; }, span);
        }
        if (name == "translation") {
            return Value{Pose::translation(number(args.at(0), span, "x"), number(args.at(1), span, "y"),
                                           number(args.at(2), span, "z"))};
        }
        if (name == "range") {
            throw Fault{"ValueError", "range(...) is only valid in a for statement", span};
        }
        const lang::Function* fn = script_.find_function(name);
        if (!fn) throw Fault{"NameError", "unknown function \"" + name + "\"", span};
        if (fn->params.size() != args.size()) {
            throw Fault{"TypeError", "function \"" + name + "\" expects " + std::to_string(fn->params.size()) +
                                         " arguments, got " + std::to_string(args.size()),
                        span};
        }
        if (++call_depth_ > 32) {
            --call_depth_;
            throw Fault{"RecursionError", "user function call depth exceeded", span};
        }
        Frame frame;
        for (std::size_t i = 0; i < args.size(); ++i) frame.vars[fn->params[i]] = args[i];
        return_value_ = Value{};
        exec_block(fn->body, frame);
        --call_depth_;
        return std::exchange(return_value_, Value{});
    }

    Value eval_binary(const lang::BinaryExpr& node, lang::SourceSpan span, Frame& frame) {
        const Value lhs = eval(*node.lhs, frame);
        const Value rhs = eval(*node.rhs, frame);
        const std::string& op = node.op;
        if (const auto* a = std::get_if<double>(&lhs.data)) {
            if (const auto* b = std::get_if<double>(&rhs.data)) {
                if (op == "+") return Value{*a + *b};
                if (op == "-") return Value{*a - *b};
                if (op == "*") return Value{*a * *b};
                if (op == "/") {
                    if (*b == 0.0) throw Fault{"ZeroDivisionError", "division by zero", span};
                    return Value{*a / *b};
                }
                if (op == "==") return Value{*a == *b};
                if (op == "!=") return Value{*a != *b};
                if (op == "<") return Value{*a < *b};
                if (op == "<=") return Value{*a <= *b};
                if (op == ">") return Value{*a > *b};
                if (op == ">=") return Value{*a >= *b};
            }
        }
        if (const auto* a = std::get_if<std::string>(&lhs.data)) {
            if (const auto* b = std::get_if<std::string>(&rhs.data)) {
                if (op == "+") return Value{*a + *b};
                if (op == "==") return Value{*a == *b};
                if (op == "!=") return Value{*a != *b};
                if (op == "<") return Value{*a < *b};
                if (op == "<=") return Value{*a <= *b};
                if (op == ">") return Value{*a > *b};
                if (op == ">=") return Value{*a >= *b};
            }
        }
        if (const auto* a = std::get_if<bool>(&lhs.data)) {
            if (const auto* b = std::get_if<bool>(&rhs.data)) {
                if (op == "==") return Value{*a == *b};
                if (op == "!=") return Value{*a != *b};
            }
        }
        if (const auto* a = std::get_if<Pose>(&lhs.data)) {
            if (const auto* b = std::get_if<Pose>(&rhs.data)) {
                if (op == "@") return Value{compose(*a, *b)};
            }
        }
        if (const auto* a = std::get_if<ValueList>(&lhs.data)) {
            if (const auto* b = std::get_if<ValueList>(&rhs.data)) {
                if (op == "+") {
                    auto out = std::make_shared<std::vector<Value>>(**a);
                    out->insert(out->end(), (*b)->begin(), (*b)->end());
                    return Value{std::move(out)};
                }
            }
        }
        throw Fault{"TypeError", "unsupported operand types for '" + op + "': " +
                                     interp_detail::type_name(lhs) + " and " + interp_detail::type_name(rhs),
                    span};
    }

    bool truth(const Value& v, lang::SourceSpan span) {
        if (const auto* b = std::get_if<bool>(&v.data)) return *b;
        throw Fault{"TypeError", "condition must be a boolean comparison", span};
    }

    double number(const Value& v, lang::SourceSpan span, const std::string& what) {
        if (const auto* d = std::get_if<double>(&v.data)) return *d;
        throw Fault{"TypeError", what + " must be a number, got " + interp_detail::type_name(v), span};
    }

    std::string str_arg(const std::vector<Value>& args, std::size_t i, const std::string& fn,
                        lang::SourceSpan span) {
        if (i >= args.size()) throw Fault{"TypeError", fn + ": missing argument", span};
        if (const auto* s = std::get_if<std::string>(&args[i].data)) return *s;
        throw Fault{"TypeError", fn + ": argument " + std::to_string(i + 1) + " must be a string", span};
    }

    Pose pose_arg(const std::vector<Value>& args, std::size_t i, const std::string& fn, lang::SourceSpan span) {
        if (i >= args.size()) throw Fault{"TypeError", fn + ": missing argument", span};
        if (const auto* p = std::get_if<Pose>(&args[i].data)) return *p;
        throw Fault{"TypeError", fn + ": argument " + std::to_string(i + 1) + " must be a pose", span};
    }

    /// Runs a workcell operation, converting SimError into a script fault at
    /// the call site so try/except can handle it.
    template <typename F>
    Value sim(F&& fn, lang::SourceSpan span) {
        try {
            return fn(cell_);
        } catch (const SimError& e) {
            throw Fault{to_string(e.kind()), e.message(), span};
        }
    }

    const lang::WcsScript& script_;
    const std::string& src_;
    Workcell& cell_;
    RunOptions options_;
    std::string output_;
    std::int64_t executed_ = 0;
    int call_depth_ = 0;
    Value return_value_;
    lang::SourceSpan last_span_{1, 1};
};

/// Interprets main(workcell) against the live state. On any uncaught error
/// the state is restored to the entry checkpoint and a RuntimeScriptError
/// carrying the faulting span is thrown.
inline RunResult run_script(const lang::WcsScript& script, const std::string& source, Workcell& cell,
                            RunOptions options = {}) {
    return Interpreter(script, source, cell, options).run();
}

}  // namespace wcs
