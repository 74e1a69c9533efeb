#include "tot/rational.hpp"

#include <cctype>
#include <cstdlib>
#include <limits>
#include <numeric>

namespace tot {
namespace {

using I128 = __int128;

bool fits64(I128 v) {
  return v >= std::numeric_limits<long long>::min() && v <= std::numeric_limits<long long>::max();
}

std::optional<Rational> normalize(I128 num, I128 den) {
  if (den == 0) return std::nullopt;
  if (den < 0) {
    num = -num;
    den = -den;
  }
  I128 a = num < 0 ? -num : num;
  I128 b = den;
  while (b != 0) {
    I128 t = a % b;
    a = b;
    b = t;
  }
  if (a > 1) {
    num /= a;
    den /= a;
  }
  if (!fits64(num) || !fits64(den)) return std::nullopt;
  return Rational{static_cast<long long>(num), static_cast<long long>(den)};
}

} // namespace

std::optional<Rational> make_rational(long long num, long long den) {
  return normalize(num, den);
}

std::optional<Rational> rat_add(const Rational& a, const Rational& b) {
  return normalize(I128(a.num) * b.den + I128(b.num) * a.den, I128(a.den) * b.den);
}

std::optional<Rational> rat_sub(const Rational& a, const Rational& b) {
  return normalize(I128(a.num) * b.den - I128(b.num) * a.den, I128(a.den) * b.den);
}

std::optional<Rational> rat_mul(const Rational& a, const Rational& b) {
  return normalize(I128(a.num) * b.num, I128(a.den) * b.den);
}

std::optional<Rational> rat_div(const Rational& a, const Rational& b) {
  if (b.num == 0) return std::nullopt;
  return normalize(I128(a.num) * b.den, I128(a.den) * b.num);
}

std::optional<Rational> rat_apply(char op, const Rational& a, const Rational& b) {
  switch (op) {
    case '+': return rat_add(a, b);
    case '-': return rat_sub(a, b);
    case '*': return rat_mul(a, b);
    case '/': return rat_div(a, b);
    default: return std::nullopt;
  }
}

bool rat_less(const Rational& a, const Rational& b) {
  return I128(a.num) * b.den < I128(b.num) * a.den;
}

std::string rat_to_string(const Rational& r) {
  if (r.den == 1) return std::to_string(r.num);
  return std::to_string(r.num) + "/" + std::to_string(r.den);
}

std::optional<Rational> parse_rational(std::string_view text) {
  size_t begin = 0, end = text.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
  if (begin == end) return std::nullopt;
  text = text.substr(begin, end - begin);

  bool negative = false;
  size_t i = 0;
  if (text[i] == '+' || text[i] == '-') {
    negative = text[i] == '-';
    ++i;
  }
  if (i == text.size() || !std::isdigit(static_cast<unsigned char>(text[i]))) return std::nullopt;

  long long intpart = 0;
  while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
    if (intpart > (std::numeric_limits<long long>::max() - 9) / 10) return std::nullopt;
    intpart = intpart * 10 + (text[i] - '0');
    ++i;
  }

  if (i == text.size()) {
    return make_rational(negative ? -intpart : intpart, 1);
  }

  if (text[i] == '/') {
    ++i;
    if (i == text.size()) return std::nullopt;
    long long den = 0;
    while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
      if (den > (std::numeric_limits<long long>::max() - 9) / 10) return std::nullopt;
      den = den * 10 + (text[i] - '0');
      ++i;
    }
    if (i != text.size() || den == 0) return std::nullopt;
    return make_rational(negative ? -intpart : intpart, den);
  }

  if (text[i] == '.') {
    ++i;
    long long frac = 0, scale = 1;
    size_t digits = 0;
    while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
      if (digits >= 12) return std::nullopt; // enough precision for any sane input
      frac = frac * 10 + (text[i] - '0');
      scale *= 10;
      ++digits;
      ++i;
    }
    if (i != text.size() || digits == 0) return std::nullopt;
    I128 num = I128(intpart) * scale + frac;
    if (negative) num = -num;
    if (!fits64(num)) return std::nullopt;
    return make_rational(static_cast<long long>(num), scale);
  }

  return std::nullopt;
}

} // namespace tot
