#pragma once

#include <cmath>
#include <string>
#include <type_traits>

#include <boost/math/constants/constants.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include "errors.hpp"

namespace edgecrit {

using Rational = boost::multiprecision::cpp_rational;

template <class T>
T pi() { return boost::math::constants::pi<T>(); }

template <class T>
T from_rational(const Rational& r)
{
    if constexpr (std::is_floating_point_v<T>) {
        return r.template convert_to<T>();
    } else {
        // string route keeps every digit for multiprecision types
        return T(numerator(r).str()) / T(denominator(r).str());
    }
}

template <class T>
double to_double(const T& x)
{
    if constexpr (std::is_arithmetic_v<T>) return static_cast<double>(x);
    else return x.template convert_to<double>();
}

// "3", "-4/15", "0.05", "1.5e-3" -> exact rational
inline Rational parse_rational(const std::string& text)
{
    std::string s;
    for (char ch : text)
        if (!std::isspace(static_cast<unsigned char>(ch))) s += ch;
    if (s.empty()) throw InvalidFamily("empty coefficient");
    auto slash = s.find('/');
    if (slash != std::string::npos) {
        Rational p = parse_rational(s.substr(0, slash));
        Rational q = parse_rational(s.substr(slash + 1));
        if (q == 0) throw InvalidFamily("zero denominator in '" + text + "'");
        return p / q;
    }
    bool neg = false;
    std::size_t i = 0;
    if (s[i] == '+' || s[i] == '-') { neg = s[i] == '-'; ++i; }
    boost::multiprecision::cpp_int digits = 0;
    long exp10 = 0;
    bool seen_digit = false, seen_dot = false;
    for (; i < s.size(); ++i) {
        char ch = s[i];
        if (std::isdigit(static_cast<unsigned char>(ch))) {
            digits = digits * 10 + (ch - '0');
            if (seen_dot) --exp10;
            seen_digit = true;
        } else if (ch == '.' && !seen_dot) {
            seen_dot = true;
        } else if (ch == 'e' || ch == 'E') {
            try {
                std::size_t used = 0;
                exp10 += std::stol(s.substr(i + 1), &used);
                if (used != s.size() - i - 1) throw std::invalid_argument("");
            } catch (const std::exception&) {
                throw InvalidFamily("bad exponent in '" + text + "'");
            }
            break;
        } else {
            throw InvalidFamily("bad number '" + text + "'");
        }
    }
    if (!seen_digit) throw InvalidFamily("bad number '" + text + "'");
    Rational r(digits);
    boost::multiprecision::cpp_int p10 = boost::multiprecision::pow(boost::multiprecision::cpp_int(10),
                                                                    static_cast<unsigned>(std::labs(exp10)));
    if (exp10 >= 0) r *= p10; else r /= p10;
    return neg ? -r : r;
}

}  // namespace edgecrit
