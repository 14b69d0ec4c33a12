#pragma once

// Concrete syntax:
//
//   formula := or
//   or      := and ('|' and)*
//   and     := until ('&' until)*
//   until   := unary ('U' interval unary)*          (left associative)
//   unary   := '!' unary | 'F' interval unary | 'G' interval unary | primary
//   primary := 'TRUE' | '(' formula ')' | atom
//   atom    := linexpr ('>=' | '<=') number
//   linexpr := [+|-] term (('+'|'-') term)*
//   term    := number '*' signal | signal
//   signal  := 'x' agent '[' dim ']'
//   interval:= '[' int ',' int ']'

#include <cctype>
#include <charconv>
#include <string>
#include <string_view>
#include <vector>

#include "stlprt/stl.hpp"

namespace stlprt {

namespace detail {

class StlParser {
 public:
  StlParser(std::string_view text, const Layout* layout) : text_(text), layout_(layout) {}

  Formula parse() {
    Formula f = parse_or();
    skip_ws();
    if (pos_ < text_.size()) fail("unexpected trailing input '" + std::string(1, text_[pos_]) + "'");
    return f;
  }

 private:
  std::string_view text_;
  const Layout* layout_;
  std::size_t pos_ = 0;

  [[noreturn]] void fail(const std::string& msg) const { fail_at(msg, pos_); }

  [[noreturn]] void fail_at(const std::string& msg, std::size_t at) const {
    int line = 1, col = 1;
    for (std::size_t i = 0; i < at && i < text_.size(); ++i) {
      if (text_[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ParseError(msg, line, col);
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  bool accept(std::string_view tok) {
    skip_ws();
    if (text_.substr(pos_, tok.size()) == tok) {
      pos_ += tok.size();
      return true;
    }
    return false;
  }

  void expect(std::string_view tok) {
    if (!accept(tok)) fail("expected '" + std::string(tok) + "'");
  }

  // Keyword must not run into an identifier character (e.g. "TRUEx").
  bool accept_keyword(std::string_view kw) {
    skip_ws();
    if (text_.substr(pos_, kw.size()) != kw) return false;
    std::size_t end = pos_ + kw.size();
    if (end < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[end])) || text_[end] == '_')) return false;
    pos_ = end;
    return true;
  }

  int parse_int() {
    skip_ws();
    std::size_t start = pos_;
    int value = 0;
    auto [ptr, ec] = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), value);
    if (ec != std::errc() || ptr == text_.data() + start) fail("expected integer");
    pos_ = static_cast<std::size_t>(ptr - text_.data());
    return value;
  }

  double parse_unsigned_number() {
    skip_ws();
    std::size_t start = pos_;
    if (start >= text_.size() || !(std::isdigit(static_cast<unsigned char>(text_[start])) || text_[start] == '.'))
      fail("expected number");
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), value);
    if (ec != std::errc()) fail("malformed number");
    pos_ = static_cast<std::size_t>(ptr - text_.data());
    return value;
  }

  double parse_signed_number() {
    bool neg = false;
    if (accept("-"))
      neg = true;
    else
      accept("+");
    double v = parse_unsigned_number();
    return neg ? -v : v;
  }

  std::pair<int, int> parse_interval() {
    std::size_t at = pos_;
    expect("[");
    bool neg_a = accept("-");
    int a = parse_int();
    expect(",");
    bool neg_b = accept("-");
    int b = parse_int();
    expect("]");
    if (neg_a || neg_b) fail_at("negative interval bound", at);
    if (b < a) fail_at("inverted interval [" + std::to_string(a) + "," + std::to_string(b) + "]", at);
    return {a, b};
  }

  Formula parse_or() {
    std::vector<Formula> cs{parse_and()};
    while (accept("|")) cs.push_back(parse_and());
    return cs.size() == 1 ? cs.front() : Formula::disjunction(std::move(cs));
  }

  Formula parse_and() {
    std::vector<Formula> cs{parse_until()};
    while (accept("&")) cs.push_back(parse_until());
    return cs.size() == 1 ? cs.front() : Formula::conjunction(std::move(cs));
  }

  Formula parse_until() {
    Formula left = parse_unary();
    while (accept_keyword_prefix('U')) {
      auto [a, b] = parse_interval();
      Formula right = parse_unary();
      left = Formula::until(std::move(left), std::move(right), a, b);
    }
    return left;
  }

  // 'U', 'F', 'G' are always followed by '['.
  bool accept_keyword_prefix(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      std::size_t j = pos_ + 1;
      while (j < text_.size() && std::isspace(static_cast<unsigned char>(text_[j]))) ++j;
      if (j < text_.size() && text_[j] == '[') {
        pos_ = pos_ + 1;
        return true;
      }
    }
    return false;
  }

  Formula parse_unary() {
    if (accept("!")) return Formula::negation(parse_unary());
    if (accept_keyword_prefix('F')) {
      auto [a, b] = parse_interval();
      return Formula::eventually(parse_unary(), a, b);
    }
    if (accept_keyword_prefix('G')) {
      auto [a, b] = parse_interval();
      return Formula::always(parse_unary(), a, b);
    }
    return parse_primary();
  }

  Formula parse_primary() {
    if (accept_keyword("TRUE")) return Formula::truth();
    if (accept("(")) {
      Formula f = parse_or();
      expect(")");
      return f;
    }
    return parse_atom();
  }

  SignalRef parse_signal() {
    skip_ws();
    std::size_t at = pos_;
    expect("x");
    SignalRef s;
    s.agent = parse_int();
    expect("[");
    s.dim = parse_int();
    expect("]");
    if (layout_ && !layout_->has(s))
      fail_at("unresolved signal x" + std::to_string(s.agent) + "[" + std::to_string(s.dim) + "]", at);
    return s;
  }

  std::pair<SignalRef, double> parse_term(double sign) {
    char c = peek();
    if (c == 'x') return {parse_signal(), sign};
    double coef = parse_unsigned_number();
    expect("*");
    return {parse_signal(), sign * coef};
  }

  Formula parse_atom() {
    char c = peek();
    if (!(c == 'x' || c == '+' || c == '-' || c == '.' || std::isdigit(static_cast<unsigned char>(c)))) {
      if (c == '\0') fail("unexpected end of input");
      fail("unexpected '" + std::string(1, c) + "'");
    }
    Predicate p;
    double sign = 1.0;
    if (accept("-"))
      sign = -1.0;
    else
      accept("+");
    auto add = [&](std::pair<SignalRef, double> t) { p.coeffs[t.first] += t.second; };
    add(parse_term(sign));
    for (;;) {
      if (accept("+"))
        add(parse_term(1.0));
      else if (accept("-"))
        add(parse_term(-1.0));
      else
        break;
    }
    bool ge;
    if (accept(">="))
      ge = true;
    else if (accept("<="))
      ge = false;
    else
      fail("expected '>=' or '<='");
    double rhs = parse_signed_number();
    // a'x >= c  ->  a'x - c >= 0;   a'x <= c  ->  -a'x + c >= 0
    if (ge) {
      p.offset = -rhs;
    } else {
      for (auto& [s, v] : p.coeffs) v = -v;
      p.offset = rhs;
    }
    return Formula::pred(std::move(p));
  }
};

}  // namespace detail

/// Parses STL text. With a layout, every x<agent>[<dim>] must resolve in it.
inline Formula parse_formula(std::string_view text, const Layout& layout) {
  return detail::StlParser(text, &layout).parse();
}

/// Parses without resolving signal references.
inline Formula parse_formula(std::string_view text) { return detail::StlParser(text, nullptr).parse(); }

}  // namespace stlprt
