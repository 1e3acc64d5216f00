#pragma once

#include <algorithm>
#include <initializer_list>
#include <vector>

#include "scalar.hpp"

namespace edgecrit {

// Dense real polynomial, ascending coefficients, trailing zeros trimmed.
template <class T>
class Polynomial {
public:
    Polynomial() = default;
    Polynomial(std::initializer_list<T> c) : c_(c) { trim(); }
    explicit Polynomial(std::vector<T> c) : c_(std::move(c)) { trim(); }

    const std::vector<T>& coeffs() const { return c_; }
    bool is_zero() const { return c_.empty(); }
    int degree() const { return static_cast<int>(c_.size()) - 1; }  // -1 for zero
    T coeff(int k) const { return (k >= 0 && k < static_cast<int>(c_.size())) ? c_[k] : T(0); }
    T leading() const { return c_.empty() ? T(0) : c_.back(); }

    template <class X>
    X operator()(const X& x) const
    {
        X acc = X(0);
        for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * x + X(*it);
        return acc;
    }

    Polynomial derivative() const
    {
        std::vector<T> d;
        for (std::size_t k = 1; k < c_.size(); ++k) d.push_back(c_[k] * T(static_cast<long>(k)));
        return Polynomial(std::move(d));
    }

    Polynomial& operator+=(const Polynomial& o)
    {
        if (o.c_.size() > c_.size()) c_.resize(o.c_.size(), T(0));
        for (std::size_t k = 0; k < o.c_.size(); ++k) c_[k] += o.c_[k];
        trim();
        return *this;
    }
    Polynomial& operator*=(const T& a)
    {
        for (auto& x : c_) x *= a;
        trim();
        return *this;
    }
    friend Polynomial operator+(Polynomial p, const Polynomial& q) { return p += q; }
    friend Polynomial operator-(Polynomial p, Polynomial q) { return p += (q *= T(-1)); }
    friend Polynomial operator*(Polynomial p, const T& a) { return p *= a; }
    friend Polynomial operator*(const T& a, Polynomial p) { return p *= a; }
    friend Polynomial operator*(const Polynomial& p, const Polynomial& q)
    {
        if (p.is_zero() || q.is_zero()) return {};
        std::vector<T> r(p.c_.size() + q.c_.size() - 1, T(0));
        for (std::size_t i = 0; i < p.c_.size(); ++i)
            for (std::size_t j = 0; j < q.c_.size(); ++j) r[i + j] += p.c_[i] * q.c_[j];
        return Polynomial(std::move(r));
    }
    friend bool operator==(const Polynomial& p, const Polynomial& q) { return p.c_ == q.c_; }

    template <class U>
    Polynomial<U> cast() const
    {
        std::vector<U> r;
        r.reserve(c_.size());
        for (const auto& x : c_) {
            if constexpr (std::is_same_v<T, Rational>) r.push_back(from_rational<U>(x));
            else r.push_back(static_cast<U>(x));
        }
        return Polynomial<U>(std::move(r));
    }

private:
    void trim()
    {
        while (!c_.empty() && c_.back() == T(0)) c_.pop_back();
    }
    std::vector<T> c_;
};

using RPoly = Polynomial<Rational>;

}  // namespace edgecrit
