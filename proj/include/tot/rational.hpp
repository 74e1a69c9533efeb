#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace tot {

// Exact rational number, always normalized: den > 0, gcd(|num|, den) == 1.
// All arithmetic is checked; operations return nullopt on division by zero
// or int64 overflow instead of producing a wrong value.
struct Rational {
  long long num = 0;
  long long den = 1;

  bool is_integer() const { return den == 1; }
  friend bool operator==(const Rational&, const Rational&) = default;
};

// Normalizing constructor; nullopt iff den == 0.
std::optional<Rational> make_rational(long long num, long long den = 1);

std::optional<Rational> rat_add(const Rational& a, const Rational& b);
std::optional<Rational> rat_sub(const Rational& a, const Rational& b);
std::optional<Rational> rat_mul(const Rational& a, const Rational& b);
std::optional<Rational> rat_div(const Rational& a, const Rational& b);

// op is one of '+', '-', '*', '/'.
std::optional<Rational> rat_apply(char op, const Rational& a, const Rational& b);

// Ordering by value; exact (no floating point).
bool rat_less(const Rational& a, const Rational& b);

// "7", "-3", "8/3"; integers render without a denominator.
std::string rat_to_string(const Rational& r);

// Accepts "7", "-7", "8/3", "2.5". Whitespace around the token is ignored.
std::optional<Rational> parse_rational(std::string_view text);

} // namespace tot
