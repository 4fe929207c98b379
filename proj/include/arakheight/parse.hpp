#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "arakheight/poly.hpp"

namespace arak {

/// Grammar accepted by the polynomial parser (whitespace is ignored):
///
///   tuple  := '(' expr { ',' expr } ')'
///   expr   := ['+' | '-'] term { ('+' | '-') term }
///   term   := factor { '*' factor }
///   factor := atom [ '^' integer ]
///   atom   := integer | variable | '(' expr ')' | '-' atom
///
/// Integers are decimal and unbounded. Variables are z1 ... z9 by default.
/// Floating literals ("1.5", "1e3") are rejected with ParseError.
class VariableTable {
 public:
  /// z1 ... z<num_vars>. A negative count means "infer from the text".
  static VariableTable standard(int num_vars);

  void add(const std::string& name, int index);
  int lookup(std::string_view name) const;
  int num_vars() const { return num_vars_; }
  void set_num_vars(int n) { num_vars_ = n; }
  bool infer() const { return infer_; }

 private:
  std::map<std::string, int, std::less<>> names_;
  int num_vars_ = 0;
  bool infer_ = false;
};

MultiPoly parse_poly(std::string_view text, const VariableTable& vars);
MultiPoly parse_poly(std::string_view text, int num_vars = -1);

/// Parses "(f0, f1, ...)". With num_vars < 0 the ring is the smallest one
/// containing every variable that appears.
std::vector<MultiPoly> parse_tuple(std::string_view text, int num_vars = -1);

}  // namespace arak
