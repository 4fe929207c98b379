#include "arakheight/isogeny.hpp"

#include <cctype>

#include "arakheight/errors.hpp"

namespace arak {

namespace {

std::string rational_string(const Rational& q) { return q.get_str(); }

bool is_symbol_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

class TermParser {
 public:
  explicit TermParser(std::string s) : s_(std::move(s)) {}

  FormalClass run() {
    FormalClass out;
    if (s_.empty()) throw Error(ErrorCode::ParseError, "empty class");
    bool first = true;
    while (pos_ < s_.size()) {
      int sign = 1;
      if (peek() == '+' || peek() == '-') {
        sign = peek() == '-' ? -1 : 1;
        ++pos_;
      } else if (!first) {
        fail("expected + or -");
      }
      first = false;
      term(out, sign);
    }
    return out;
  }

 private:
  char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }
  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCode::ParseError, what + " at offset " + std::to_string(pos_) + " in '" + s_ + "'");
  }
  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }
  long integer() {
    const std::size_t start = pos_;
    while (std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
    if (start == pos_) fail("expected a number");
    if (pos_ - start > 9) fail("number too large");
    return std::stol(s_.substr(start, pos_ - start));
  }

  void term(FormalClass& out, int sign) {
    Rational coeff = sign;
    if (std::isdigit(static_cast<unsigned char>(peek()))) {
      const std::size_t start = pos_;
      while (std::isdigit(static_cast<unsigned char>(peek())) || peek() == '/') ++pos_;
      Rational q;
      if (q.set_str(s_.substr(start, pos_ - start), 10) != 0) fail("bad rational");
      q.canonicalize();
      coeff *= q;
      if (peek() != '*') {
        if (pos_ < s_.size() && peek() != '+' && peek() != '-') fail("expected '*'");
        if (q != 0) fail("a constant is not a class");
        return;
      }
      ++pos_;
    }
    PullbackAtom atom;
    while (peek() == '(' || peek() == '[') {
      const bool paren = peek() == '(';
      if (paren) ++pos_;
      expect('[');
      const long n = integer();
      expect(']');
      long k = 1;
      bool starred = false;
      if (peek() == '^') {
        ++pos_;
        if (peek() == '*') {
          ++pos_;
          starred = true;
        } else {
          k = integer();
        }
      }
      if (paren) expect(')');
      if (!starred) {
        if (peek() == '^') ++pos_;
        expect('*');
      }
      if (n < 1) fail("multiplier must be positive");
      if (k > 0 && n != 1) atom.pullbacks[static_cast<int>(n)] += static_cast<int>(k);
    }
    const std::size_t start = pos_;
    while (is_symbol_char(peek())) ++pos_;
    if (start == pos_ || std::isdigit(static_cast<unsigned char>(s_[start]))) fail("expected a symbol");
    atom.symbol = s_.substr(start, pos_ - start);
    out.add(atom, coeff);
  }

  std::string s_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string PullbackAtom::to_string() const {
  std::string out;
  for (const auto& [n, k] : pullbacks) {
    out += "([" + std::to_string(n) + "]^" + std::to_string(k) + ")*";
  }
  return out + symbol;
}

FormalClass FormalClass::atom(const std::string& symbol, int k, int n) {
  if (k < 0) throw Error(ErrorCode::InvalidArgument, "pullback exponent must be >= 0");
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "multiplier must be positive");
  PullbackAtom a{symbol, {}};
  if (k > 0 && n != 1) a.pullbacks[n] = k;
  FormalClass out;
  out.add(a, 1);
  return out;
}

FormalClass FormalClass::parse(const std::string& text) {
  std::string s;
  for (char c : text) {
    if (!std::isspace(static_cast<unsigned char>(c))) s += c;
  }
  return TermParser(s).run();
}

void FormalClass::add(const PullbackAtom& a, const Rational& value) {
  Rational q = value;
  q.canonicalize();
  if (q == 0) return;
  auto it = terms_.find(a);
  if (it == terms_.end()) {
    terms_.emplace(a, q);
    return;
  }
  it->second += q;
  if (it->second == 0) terms_.erase(it);
}

FormalClass& FormalClass::operator+=(const FormalClass& o) {
  for (const auto& [a, q] : o.terms_) add(a, q);
  return *this;
}

FormalClass& FormalClass::operator-=(const FormalClass& o) {
  for (const auto& [a, q] : o.terms_) add(a, -q);
  return *this;
}

FormalClass& FormalClass::operator*=(const Rational& q) {
  if (q == 0) {
    terms_.clear();
    return *this;
  }
  for (auto& [a, c] : terms_) {
    c *= q;
    c.canonicalize();
  }
  return *this;
}

std::string FormalClass::to_string() const {
  if (terms_.empty()) return "0";
  std::string out;
  for (const auto& [a, q] : terms_) {
    Rational c = q;
    if (out.empty()) {
      if (c < 0) {
        out += "-";
        c = -c;
      }
    } else {
      out += c < 0 ? " - " : " + ";
      if (c < 0) c = -c;
    }
    if (c != 1) out += rational_string(c) + "*";
    out += a.to_string();
  }
  return out;
}

RewriteRules RewriteRules::standard() {
  RewriteRules r;
  r.add(2, "H", 4);
  return r;
}

void RewriteRules::add(int n, const std::string& symbol, const Rational& factor) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "multiplier must be positive");
  Rational f = factor;
  f.canonicalize();
  rules_[{n, symbol}] = f;
}

const Rational& RewriteRules::factor(int n, const std::string& symbol) const {
  auto it = rules_.find({n, symbol});
  if (it == rules_.end()) {
    throw Error(ErrorCode::UnknownSymbol, "no rule for [" + std::to_string(n) + "]^*" + symbol);
  }
  return it->second;
}

void PairingTable::set(const std::string& a, const std::string& b, const Rational& value) {
  Rational v = value;
  v.canonicalize();
  values_[{a, b}] = v;
  values_[{b, a}] = v;
}

const Rational& PairingTable::get(const std::string& a, const std::string& b) const {
  auto it = values_.find({a, b});
  if (it == values_.end()) throw Error(ErrorCode::UnknownSymbol, "no pairing for (" + a + ", " + b + ")");
  return it->second;
}

FormalClass reduce(const FormalClass& cls, const RewriteRules& rules) {
  FormalClass out;
  for (const auto& [a, q] : cls.terms()) {
    Rational c = q;
    for (const auto& [n, k] : a.pullbacks) {
      const Rational& f = rules.factor(n, a.symbol);
      for (int i = 0; i < k; ++i) c *= f;
    }
    out.add(PullbackAtom{a.symbol, {}}, c);
  }
  return out;
}

Rational pair(const FormalClass& a, const FormalClass& b, const PairingTable& table, const RewriteRules& rules) {
  const FormalClass ra = reduce(a, rules);
  const FormalClass rb = reduce(b, rules);
  Rational s = 0;
  for (const auto& [x, p] : ra.terms()) {
    for (const auto& [y, q] : rb.terms()) s += p * q * table.get(x.symbol, y.symbol);
  }
  return s;
}

CounterexampleReport counterexample_heights(int n_max, const Rational& c) {
  if (n_max < 0) throw Error(ErrorCode::InvalidArgument, "n_max must be >= 0");
  if (c < 0) throw Error(ErrorCode::InvalidArgument, "deg(H.H) must be >= 0 for a nef H");
  CounterexampleReport out;
  out.c = c;
  out.c.canonicalize();
  PairingTable table;
  table.set("H", "H", out.c);
  const FormalClass h = FormalClass::atom("H");
  for (int n = 0; n <= n_max; ++n) {
    out.rows.push_back({n, pair(FormalClass::atom("H", n), h, table)});
  }
  out.fails_northcott = c == 0;
  if (out.fails_northcott) {
    out.verdict = "Northcott fails: x_n = [2]^n x_0 are infinitely many distinct points of height 0";
  } else {
    out.verdict = "heights 4^n * " + rational_string(out.c) + " grow without bound; no failure along this orbit";
  }
  return out;
}

}  // namespace arak
