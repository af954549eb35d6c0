#include "smallnoise/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <map>
#include <sstream>

namespace smallnoise::expr {

namespace {

struct FuncInfo {
    Op op;
    int arity;
};

const std::map<std::string, FuncInfo, std::less<>>& function_table() {
    static const std::map<std::string, FuncInfo, std::less<>> table = {
        {"sin", {Op::sin, 1}},   {"cos", {Op::cos, 1}},  {"exp", {Op::exp, 1}},
        {"tanh", {Op::tanh, 1}}, {"abs", {Op::abs, 1}},  {"sqrt", {Op::sqrt, 1}},
        {"sign", {Op::sign, 1}}, {"min", {Op::min, 2}},  {"max", {Op::max, 2}},
    };
    return table;
}

using NodePtr = std::shared_ptr<const Node>;

NodePtr make(Op op, NodePtr a = nullptr, NodePtr b = nullptr) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

class Parser {
  public:
    Parser(const std::string& src, int r) : src_(src), r_(r) {}

    NodePtr run() {
        skip_ws();
        if (pos_ >= src_.size()) throw ParseError("empty expression", column());
        NodePtr e = parse_sum();
        skip_ws();
        if (pos_ < src_.size())
            throw ParseError(std::string("unexpected character '") + src_[pos_] + "'", column());
        return e;
    }

  private:
    const std::string& src_;
    int r_;
    std::size_t pos_ = 0;

    std::size_t column() const { return pos_ + 1; }

    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }

    bool eat(char c) {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    char peek() {
        skip_ws();
        return pos_ < src_.size() ? src_[pos_] : '\0';
    }

    NodePtr parse_sum() {
        NodePtr e = parse_term();
        while (true) {
            if (eat('+')) e = make(Op::add, e, parse_term());
            else if (eat('-')) e = make(Op::sub, e, parse_term());
            else return e;
        }
    }

    NodePtr parse_term() {
        NodePtr e = parse_unary();
        while (true) {
            if (eat('*')) e = make(Op::mul, e, parse_unary());
            else if (eat('/')) e = make(Op::div, e, parse_unary());
            else return e;
        }
    }

    NodePtr parse_unary() {
        if (eat('-')) return make(Op::neg, parse_unary());
        return parse_power();
    }

    NodePtr parse_power() {
        NodePtr base = parse_atom();
        if (eat('^')) return make(Op::pow, base, parse_unary()); // right-assoc
        return base;
    }

    NodePtr parse_atom() {
        skip_ws();
        if (pos_ >= src_.size()) throw ParseError("unexpected end of input", column());
        const char c = src_[pos_];
        if (c == '(') {
            ++pos_;
            NodePtr e = parse_sum();
            if (!eat(')')) throw ParseError("expected ')'", column());
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c))) return parse_identifier();
        throw ParseError(std::string("unexpected character '") + c + "'", column());
    }

    NodePtr parse_number() {
        const std::size_t start = pos_;
        const char* begin = src_.c_str() + pos_;
        char* end = nullptr;
        const double v = std::strtod(begin, &end);
        if (end == begin) throw ParseError("invalid number", column());
        pos_ += static_cast<std::size_t>(end - begin);
        (void)start;
        auto n = std::make_shared<Node>();
        n->op = Op::constant;
        n->value = v;
        return n;
    }

    NodePtr parse_identifier() {
        const std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
            ++pos_;
        const std::string name = src_.substr(start, pos_ - start);
        if (name == "t") return make(Op::var_t);
        if (name.size() >= 2 && name[0] == 'x') {
            bool digits = true;
            for (std::size_t i = 1; i < name.size(); ++i)
                if (!std::isdigit(static_cast<unsigned char>(name[i]))) digits = false;
            if (digits) {
                const long idx = std::strtol(name.c_str() + 1, nullptr, 10);
                if (idx < 1 || idx > r_)
                    throw ParseError("unknown identifier " + name +
                                         " (state dimension is " + std::to_string(r_) + ")",
                                     start + 1);
                auto n = std::make_shared<Node>();
                n->op = Op::var_x;
                n->index = static_cast<int>(idx - 1);
                return n;
            }
        }
        auto it = function_table().find(name);
        if (it == function_table().end())
            throw ParseError("unknown identifier " + name, start + 1);
        if (!eat('('))
            throw ParseError("expected '(' after function " + name, column());
        NodePtr a = parse_sum();
        NodePtr b;
        if (it->second.arity == 2) {
            if (!eat(','))
                throw ParseError(name + " expects 2 arguments", column());
            b = parse_sum();
        } else if (peek() == ',') {
            throw ParseError(name + " expects 1 argument", column());
        }
        if (!eat(')')) throw ParseError("expected ')'", column());
        return make(it->second.op, a, b);
    }
};

double eval_node(const Node* n, double t, std::span<const double> x) noexcept {
    switch (n->op) {
        case Op::constant: return n->value;
        case Op::var_t: return t;
        case Op::var_x: return x[static_cast<std::size_t>(n->index)];
        case Op::add: return eval_node(n->a.get(), t, x) + eval_node(n->b.get(), t, x);
        case Op::sub: return eval_node(n->a.get(), t, x) - eval_node(n->b.get(), t, x);
        case Op::mul: return eval_node(n->a.get(), t, x) * eval_node(n->b.get(), t, x);
        case Op::div: return eval_node(n->a.get(), t, x) / eval_node(n->b.get(), t, x);
        case Op::pow: return std::pow(eval_node(n->a.get(), t, x), eval_node(n->b.get(), t, x));
        case Op::neg: return -eval_node(n->a.get(), t, x);
        case Op::sin: return std::sin(eval_node(n->a.get(), t, x));
        case Op::cos: return std::cos(eval_node(n->a.get(), t, x));
        case Op::exp: return std::exp(eval_node(n->a.get(), t, x));
        case Op::tanh: return std::tanh(eval_node(n->a.get(), t, x));
        case Op::abs: return std::abs(eval_node(n->a.get(), t, x));
        case Op::sqrt: return std::sqrt(eval_node(n->a.get(), t, x));
        case Op::sign: {
            const double v = eval_node(n->a.get(), t, x);
            return (v > 0.0) ? 1.0 : (v < 0.0) ? -1.0 : 0.0;
        }
        case Op::min: return std::fmin(eval_node(n->a.get(), t, x), eval_node(n->b.get(), t, x));
        case Op::max: return std::fmax(eval_node(n->a.get(), t, x), eval_node(n->b.get(), t, x));
    }
    return 0.0;
}

void print_node(const Node* n, std::ostringstream& out);

void print_child(const Node* n, std::ostringstream& out) {
    // Fully parenthesize compounds; reparse must give an identical tree.
    const bool atom = n->op == Op::constant || n->op == Op::var_t || n->op == Op::var_x;
    if (atom) {
        print_node(n, out);
    } else {
        out << '(';
        print_node(n, out);
        out << ')';
    }
}

void print_node(const Node* n, std::ostringstream& out) {
    switch (n->op) {
        case Op::constant: {
            std::ostringstream tmp;
            tmp.precision(17);
            tmp << n->value;
            std::string s = tmp.str();
            if (n->value < 0.0 || s.find("inf") != std::string::npos ||
                s.find("nan") != std::string::npos) {
                out << '(' << s << ')'; // keep negatives/specials reparseable
            } else {
                out << s;
            }
            return;
        }
        case Op::var_t: out << 't'; return;
        case Op::var_x: out << 'x' << (n->index + 1); return;
        case Op::add: print_child(n->a.get(), out); out << " + "; print_child(n->b.get(), out); return;
        case Op::sub: print_child(n->a.get(), out); out << " - "; print_child(n->b.get(), out); return;
        case Op::mul: print_child(n->a.get(), out); out << " * "; print_child(n->b.get(), out); return;
        case Op::div: print_child(n->a.get(), out); out << " / "; print_child(n->b.get(), out); return;
        case Op::pow: print_child(n->a.get(), out); out << " ^ "; print_child(n->b.get(), out); return;
        case Op::neg: out << "-"; print_child(n->a.get(), out); return;
        case Op::sin: out << "sin("; print_node(n->a.get(), out); out << ')'; return;
        case Op::cos: out << "cos("; print_node(n->a.get(), out); out << ')'; return;
        case Op::exp: out << "exp("; print_node(n->a.get(), out); out << ')'; return;
        case Op::tanh: out << "tanh("; print_node(n->a.get(), out); out << ')'; return;
        case Op::abs: out << "abs("; print_node(n->a.get(), out); out << ')'; return;
        case Op::sqrt: out << "sqrt("; print_node(n->a.get(), out); out << ')'; return;
        case Op::sign: out << "sign("; print_node(n->a.get(), out); out << ')'; return;
        case Op::min:
            out << "min("; print_node(n->a.get(), out); out << ", ";
            print_node(n->b.get(), out); out << ')'; return;
        case Op::max:
            out << "max("; print_node(n->a.get(), out); out << ", ";
            print_node(n->b.get(), out); out << ')'; return;
    }
}

std::string node_to_string(const Node* n) {
    std::ostringstream out;
    print_node(n, out);
    return out.str();
}

double eval_node_checked(const Node* n, double t, std::span<const double> x) {
    switch (n->op) {
        case Op::div: {
            const double denom = eval_node_checked(n->b.get(), t, x);
            if (denom == 0.0) throw EvalError("division by zero", node_to_string(n));
            return eval_node_checked(n->a.get(), t, x) / denom;
        }
        case Op::sqrt: {
            const double v = eval_node_checked(n->a.get(), t, x);
            if (v < 0.0) throw EvalError("sqrt of negative value", node_to_string(n));
            return std::sqrt(v);
        }
        case Op::add:
            return eval_node_checked(n->a.get(), t, x) + eval_node_checked(n->b.get(), t, x);
        case Op::sub:
            return eval_node_checked(n->a.get(), t, x) - eval_node_checked(n->b.get(), t, x);
        case Op::mul:
            return eval_node_checked(n->a.get(), t, x) * eval_node_checked(n->b.get(), t, x);
        case Op::pow:
            return std::pow(eval_node_checked(n->a.get(), t, x),
                            eval_node_checked(n->b.get(), t, x));
        case Op::neg: return -eval_node_checked(n->a.get(), t, x);
        case Op::sin: return std::sin(eval_node_checked(n->a.get(), t, x));
        case Op::cos: return std::cos(eval_node_checked(n->a.get(), t, x));
        case Op::exp: return std::exp(eval_node_checked(n->a.get(), t, x));
        case Op::tanh: return std::tanh(eval_node_checked(n->a.get(), t, x));
        case Op::abs: return std::abs(eval_node_checked(n->a.get(), t, x));
        case Op::sign: {
            const double v = eval_node_checked(n->a.get(), t, x);
            return (v > 0.0) ? 1.0 : (v < 0.0) ? -1.0 : 0.0;
        }
        case Op::min:
            return std::fmin(eval_node_checked(n->a.get(), t, x),
                             eval_node_checked(n->b.get(), t, x));
        case Op::max:
            return std::fmax(eval_node_checked(n->a.get(), t, x),
                             eval_node_checked(n->b.get(), t, x));
        default: return eval_node(n, t, x);
    }
}

} // namespace

double Expr::eval(double t, std::span<const double> x) const noexcept {
    return eval_node(root_.get(), t, x);
}

double Expr::eval_checked(double t, std::span<const double> x) const {
    return eval_node_checked(root_.get(), t, x);
}

std::string Expr::pretty() const {
    return root_ ? node_to_string(root_.get()) : std::string();
}

Expr parse(const std::string& source, int r) {
    if (r < 1) throw std::invalid_argument("parse: dimension r must be >= 1");
    Parser p(source, r);
    return Expr(p.run(), r);
}

VectorExpr parse_vector(const std::vector<std::string>& sources, int r, int cols) {
    VectorExpr v;
    v.r = r;
    v.cols = cols;
    v.rows.reserve(sources.size());
    for (const auto& s : sources) v.rows.push_back(parse(s, r));
    return v;
}

} // namespace smallnoise::expr
