#pragma once

#include <memory>
#include <string>
#include <vector>

namespace lcdrl {

/// Boolean expression over component-failure indicators, e.g.
/// "(c1 | c2) & (c3 | c4) & c5". Supports &, |, !, parentheses and the word
/// forms AND/OR/NOT. Component references are 1-based.
class FailureExpression {
  public:
    FailureExpression() = default;

    static FailureExpression parse(const std::string& text, int num_components);

    bool evaluate(const std::vector<bool>& failed) const;
    bool empty() const { return root_ == nullptr; }
    const std::string& text() const { return text_; }

    struct Node;

  private:
    std::shared_ptr<const Node> root_;
    std::string text_;
};

}  // namespace lcdrl
