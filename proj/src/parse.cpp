#include "arakheight/parse.hpp"

#include <cctype>

namespace arak {

namespace {

[[noreturn]] void fail(std::string_view text, std::size_t pos, const std::string& msg) {
  throw Error(ErrorCode::ParseError,
              msg + " at offset " + std::to_string(pos) + " in \"" + std::string(text) + "\"");
}

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_'; }

// Largest k such that "z<k>" occurs as an identifier.
int infer_num_vars(std::string_view text) {
  int best = 0;
  for (std::size_t i = 0; i < text.size();) {
    if (is_ident_start(text[i])) {
      std::size_t j = i;
      while (j < text.size() && is_ident_char(text[j])) ++j;
      std::string_view id = text.substr(i, j - i);
      if (id.size() >= 2 && id[0] == 'z') {
        bool digits = true;
        for (std::size_t k = 1; k < id.size(); ++k) digits = digits && std::isdigit(static_cast<unsigned char>(id[k]));
        if (digits) best = std::max(best, std::stoi(std::string(id.substr(1))));
      }
      i = j;
    } else {
      ++i;
    }
  }
  return best;
}

class Parser {
 public:
  Parser(std::string_view text, const VariableTable& vars) : text_(text), vars_(vars) {}

  MultiPoly poly() {
    MultiPoly p = expr();
    skip();
    if (pos_ != text_.size()) fail(text_, pos_, "unexpected trailing input");
    return p;
  }

  std::vector<MultiPoly> tuple() {
    skip();
    expect('(');
    std::vector<MultiPoly> out;
    out.push_back(expr());
    skip();
    while (peek() == ',') {
      ++pos_;
      out.push_back(expr());
      skip();
    }
    expect(')');
    skip();
    if (pos_ != text_.size()) fail(text_, pos_, "unexpected trailing input");
    return out;
  }

 private:
  void skip() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }
  void expect(char c) {
    skip();
    if (peek() != c) fail(text_, pos_, std::string("expected '") + c + "'");
    ++pos_;
  }

  MultiPoly expr() {
    skip();
    bool negate = false;
    if (peek() == '+' || peek() == '-') {
      negate = peek() == '-';
      ++pos_;
    }
    MultiPoly acc = term();
    if (negate) acc = -acc;
    for (;;) {
      skip();
      const char c = peek();
      if (c != '+' && c != '-') break;
      ++pos_;
      MultiPoly t = term();
      if (c == '+') acc += t; else acc -= t;
    }
    return acc;
  }

  MultiPoly term() {
    MultiPoly acc = factor();
    for (;;) {
      skip();
      if (peek() != '*') break;
      ++pos_;
      acc = acc * factor();
    }
    return acc;
  }

  MultiPoly factor() {
    MultiPoly base = atom();
    skip();
    if (peek() == '^') {
      ++pos_;
      skip();
      const std::size_t start = pos_;
      while (std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
      if (start == pos_) fail(text_, pos_, "expected a nonnegative integer exponent");
      check_not_float();
      const std::string digits(text_.substr(start, pos_ - start));
      if (digits.size() > 4) fail(text_, start, "exponent too large");
      base = base.pow(std::stoi(digits));
    }
    return base;
  }

  MultiPoly atom() {
    skip();
    const char c = peek();
    const int n = vars_.num_vars();
    if (c == '(') {
      ++pos_;
      MultiPoly inner = expr();
      expect(')');
      return inner;
    }
    if (c == '-') {
      ++pos_;
      return -atom();
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      const std::size_t start = pos_;
      while (std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
      check_not_float();
      return MultiPoly::constant(n, Integer(std::string(text_.substr(start, pos_ - start))));
    }
    if (c == '.') fail(text_, pos_, "floating literals are not allowed");
    if (is_ident_start(c)) {
      const std::size_t start = pos_;
      while (is_ident_char(peek())) ++pos_;
      const std::string_view id = text_.substr(start, pos_ - start);
      const int index = vars_.lookup(id);
      if (index < 0) fail(text_, start, "unknown variable '" + std::string(id) + "'");
      return MultiPoly::variable(n, index);
    }
    if (c == '\0') fail(text_, pos_, "unexpected end of input");
    fail(text_, pos_, std::string("unexpected character '") + c + "'");
  }

  void check_not_float() {
    const char c = peek();
    if (c == '.') fail(text_, pos_, "floating literals are not allowed");
    if ((c == 'e' || c == 'E') && pos_ + 1 < text_.size()) {
      const char d = text_[pos_ + 1];
      if (std::isdigit(static_cast<unsigned char>(d)) || d == '+' || d == '-') {
        fail(text_, pos_, "floating literals are not allowed");
      }
    }
  }

  std::string_view text_;
  const VariableTable& vars_;
  std::size_t pos_ = 0;
};

}  // namespace

VariableTable VariableTable::standard(int num_vars) {
  VariableTable t;
  t.infer_ = num_vars < 0;
  t.num_vars_ = std::max(num_vars, 0);
  for (int i = 1; i <= 9; ++i) t.names_.emplace("z" + std::to_string(i), i - 1);
  return t;
}

void VariableTable::add(const std::string& name, int index) {
  names_[name] = index;
  num_vars_ = std::max(num_vars_, index + 1);
}

int VariableTable::lookup(std::string_view name) const {
  auto it = names_.find(name);
  if (it == names_.end() || it->second >= num_vars_) return -1;
  return it->second;
}

MultiPoly parse_poly(std::string_view text, const VariableTable& vars) {
  if (vars.infer()) {
    VariableTable sized = vars;
    sized.set_num_vars(std::max(vars.num_vars(), infer_num_vars(text)));
    return Parser(text, sized).poly();
  }
  return Parser(text, vars).poly();
}

MultiPoly parse_poly(std::string_view text, int num_vars) {
  return parse_poly(text, VariableTable::standard(num_vars));
}

std::vector<MultiPoly> parse_tuple(std::string_view text, int num_vars) {
  VariableTable vars = VariableTable::standard(num_vars);
  if (num_vars < 0) vars.set_num_vars(infer_num_vars(text));
  return Parser(text, vars).tuple();
}

}  // namespace arak
