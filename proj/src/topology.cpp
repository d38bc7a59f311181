#include "lcdrl/topology.hpp"

#include <cctype>
#include <stdexcept>

namespace lcdrl {

struct FailureExpression::Node {
    enum Kind { Var, And, Or, Not } kind;
    int var = -1;  // 0-based component index
    std::shared_ptr<const Node> left, right;
};

namespace {

struct Parser {
    const std::string& s;
    std::size_t pos = 0;
    int num_components;

    using NodePtr = std::shared_ptr<const FailureExpression::Node>;

    void skip_ws() {
        while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }

    bool consume_word(const char* w) {
        skip_ws();
        std::size_t n = 0;
        while (w[n]) ++n;
        if (s.compare(pos, n, w) == 0) {
            pos += n;
            return true;
        }
        return false;
    }

    NodePtr parse_or() {
        NodePtr left = parse_and();
        for (;;) {
            skip_ws();
            if (consume_word("||") || consume_word("|") || consume_word("OR") || consume_word("or")) {
                auto node = std::make_shared<FailureExpression::Node>();
                node->kind = FailureExpression::Node::Or;
                node->left = left;
                node->right = parse_and();
                left = node;
            } else {
                return left;
            }
        }
    }

    NodePtr parse_and() {
        NodePtr left = parse_unary();
        for (;;) {
            skip_ws();
            if (consume_word("&&") || consume_word("&") || consume_word("AND") || consume_word("and")) {
                auto node = std::make_shared<FailureExpression::Node>();
                node->kind = FailureExpression::Node::And;
                node->left = left;
                node->right = parse_unary();
                left = node;
            } else {
                return left;
            }
        }
    }

    NodePtr parse_unary() {
        skip_ws();
        if (consume_word("!") || consume_word("NOT") || consume_word("not")) {
            auto node = std::make_shared<FailureExpression::Node>();
            node->kind = FailureExpression::Node::Not;
            node->left = parse_unary();
            return node;
        }
        if (pos < s.size() && s[pos] == '(') {
            ++pos;
            NodePtr inner = parse_or();
            skip_ws();
            if (pos >= s.size() || s[pos] != ')') throw std::invalid_argument("failure expression: missing ')'");
            ++pos;
            return inner;
        }
        if (pos < s.size() && (s[pos] == 'c' || s[pos] == 'C')) {
            ++pos;
            std::size_t start = pos;
            while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
            if (pos == start) throw std::invalid_argument("failure expression: expected component number after 'c'");
            int idx = std::stoi(s.substr(start, pos - start));
            if (idx < 1 || idx > num_components)
                throw std::invalid_argument("failure expression: component index out of range: c" + std::to_string(idx));
            auto node = std::make_shared<FailureExpression::Node>();
            node->kind = FailureExpression::Node::Var;
            node->var = idx - 1;
            return node;
        }
        throw std::invalid_argument("failure expression: unexpected token at position " + std::to_string(pos));
    }
};

bool eval_node(const FailureExpression::Node& n, const std::vector<bool>& failed) {
    switch (n.kind) {
        case FailureExpression::Node::Var: return failed[static_cast<std::size_t>(n.var)];
        case FailureExpression::Node::And: return eval_node(*n.left, failed) && eval_node(*n.right, failed);
        case FailureExpression::Node::Or: return eval_node(*n.left, failed) || eval_node(*n.right, failed);
        case FailureExpression::Node::Not: return !eval_node(*n.left, failed);
    }
    return false;
}

}  // namespace

FailureExpression FailureExpression::parse(const std::string& text, int num_components) {
    Parser p{text, 0, num_components};
    FailureExpression expr;
    expr.root_ = p.parse_or();
    p.skip_ws();
    if (p.pos != text.size()) throw std::invalid_argument("failure expression: trailing input");
    expr.text_ = text;
    return expr;
}

bool FailureExpression::evaluate(const std::vector<bool>& failed) const {
    if (!root_) return false;
    return eval_node(*root_, failed);
}

}  // namespace lcdrl
