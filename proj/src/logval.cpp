#include "arakheight/logval.hpp"

#include <cmath>
#include <sstream>

#include "arakheight/projpoint.hpp"

namespace arak {

namespace {

// log of a big integer without overflowing double.
double log_integer(const Integer& n) {
  long exp = 0;
  const double mantissa = mpz_get_d_2exp(&exp, n.get_mpz_t());
  return std::log(mantissa) + static_cast<double>(exp) * std::log(2.0);
}

}  // namespace

double to_double(const Rational& q) { return q.get_d(); }

LogLinear LogLinear::rational(const Rational& q) {
  LogLinear v;
  v.constant_ = q;
  v.constant_.canonicalize();
  return v;
}

LogLinear LogLinear::log_of(const Integer& n, const Rational& coeff) {
  if (n <= 0) throw Error(ErrorCode::InvalidArgument, "log of a nonpositive integer");
  LogLinear v;
  if (coeff == 0) return v;
  for (const auto& [p, k] : factor_integer(n)) v.add_log(p, coeff * k);
  return v;
}

LogLinear LogLinear::log_of(const Rational& x, const Rational& coeff) {
  if (x <= 0) throw Error(ErrorCode::InvalidArgument, "log of a nonpositive rational");
  LogLinear v = log_of(Integer(x.get_num()), coeff);
  v -= log_of(Integer(x.get_den()), coeff);
  return v;
}

void LogLinear::add_log(const Integer& base, const Rational& coeff) {
  if (base == 1 || coeff == 0) return;
  auto [it, inserted] = logs_.try_emplace(base, coeff);
  if (!inserted) {
    it->second += coeff;
    if (it->second == 0) logs_.erase(it);
  }
}

double LogLinear::evaluate() const {
  double v = to_double(constant_);
  for (const auto& [p, q] : logs_) v += to_double(q) * log_integer(p);
  return v;
}

LogLinear& LogLinear::operator+=(const LogLinear& other) {
  constant_ += other.constant_;
  for (const auto& [p, q] : other.logs_) add_log(p, q);
  return *this;
}

LogLinear& LogLinear::operator-=(const LogLinear& other) {
  constant_ -= other.constant_;
  for (const auto& [p, q] : other.logs_) add_log(p, -q);
  return *this;
}

LogLinear& LogLinear::operator*=(const Rational& q) {
  if (q == 0) {
    constant_ = 0;
    logs_.clear();
    return *this;
  }
  constant_ *= q;
  for (auto& [p, c] : logs_) c *= q;
  return *this;
}

std::string LogLinear::to_string() const {
  if (is_zero()) return "0";
  std::ostringstream os;
  bool first = true;
  auto emit = [&](const Rational& c, const std::string& tail) {
    Rational mag = abs(c);
    if (first) {
      if (c < 0) os << '-';
    } else {
      os << (c < 0 ? " - " : " + ");
    }
    first = false;
    if (tail.empty()) {
      os << mag.get_str();
    } else {
      if (mag != 1) os << mag.get_str() << '*';
      os << tail;
    }
  };
  if (constant_ != 0) emit(constant_, "");
  for (const auto& [p, q] : logs_) emit(q, "log(" + p.get_str() + ")");
  return os.str();
}

RigorousValue RigorousValue::exact(const LogLinear& v) {
  RigorousValue r;
  r.symbolic = v;
  r.numeric = v.evaluate();
  r.error_bound = 0.0;
  return r;
}

RigorousValue RigorousValue::approx(double value, double error) {
  RigorousValue r;
  r.numeric = value;
  r.error_bound = error;
  return r;
}

RigorousValue& RigorousValue::operator+=(const RigorousValue& other) {
  if (symbolic && other.symbolic) {
    *symbolic += *other.symbolic;
    numeric = symbolic->evaluate();
  } else {
    symbolic.reset();
    numeric += other.numeric;
  }
  error_bound += other.error_bound;
  return *this;
}

RigorousValue& RigorousValue::operator-=(const RigorousValue& other) {
  RigorousValue neg = other;
  neg *= Rational(-1);
  return *this += neg;
}

RigorousValue& RigorousValue::operator*=(const Rational& q) {
  if (symbolic) {
    *symbolic *= q;
    numeric = symbolic->evaluate();
  } else {
    numeric *= to_double(q);
  }
  error_bound *= std::fabs(to_double(q));
  return *this;
}

std::string RigorousValue::to_string() const {
  std::ostringstream os;
  os.precision(12);
  os << numeric << " +- " << error_bound;
  if (symbolic) os << " [" << symbolic->to_string() << "]";
  return os.str();
}

}  // namespace arak
