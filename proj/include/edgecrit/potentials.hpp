#pragma once

#include <string>

#include <json.hpp>

#include "polynomial.hpp"

namespace edgecrit {

// V_{s,t} = v0 + s v1 + t v2, coefficients kept exact.
struct DeformedFamily {
    RPoly v0, v1, v2;
    bool check_confinement = true;

    void validate() const
    {
        if (!check_confinement) return;
        int d = v0.degree();
        if (d < 4 || d % 2 != 0 || v0.leading() <= 0)
            throw InvalidFamily("v0 must have even degree >= 4 and positive leading coefficient");
        if (v1.degree() >= d || v2.degree() >= d)
            throw InvalidFamily("v1, v2 must have lower degree than v0");
    }

    template <class T>
    Polynomial<T> combined(const T& s, const T& t) const
    {
        return v0.template cast<T>() + s * v1.template cast<T>() + t * v2.template cast<T>();
    }
};

inline DeformedFamily build_example_family()
{
    DeformedFamily f;
    f.v0 = RPoly({Rational(0), Rational(8, 5), Rational(1, 5), Rational(-4, 15), Rational(1, 20)});
    f.v1 = RPoly({Rational(0), Rational(1)});
    f.v2 = RPoly({Rational(0), Rational(-6), Rational(0), Rational(1)});
    return f;
}

template <class T>
T eval_deformed(const DeformedFamily& f, const T& s, const T& t, const T& x)
{
    return f.v0.template cast<T>()(x) + s * f.v1.template cast<T>()(x) + t * f.v2.template cast<T>()(x);
}

template <class T>
T eval_deformed_derivative(const DeformedFamily& f, const T& s, const T& t, const T& x)
{
    return f.v0.derivative().template cast<T>()(x) + s * f.v1.derivative().template cast<T>()(x) +
           t * f.v2.derivative().template cast<T>()(x);
}

// JSON: {"v0": [..], "v1": [..], "v2": [..]}; entries are numbers or decimal / "p/q" strings
inline RPoly rpoly_from_json(const nlohmann::json& j)
{
    if (!j.is_array()) throw InvalidFamily("coefficient list must be an array");
    std::vector<Rational> c;
    for (const auto& e : j) {
        if (e.is_string()) c.push_back(parse_rational(e.get<std::string>()));
        else if (e.is_number_integer()) c.push_back(Rational(e.get<long long>()));
        else if (e.is_number()) c.push_back(parse_rational(e.dump()));  // shortest round-trip text
        else throw InvalidFamily("coefficient must be a number or string");
    }
    return RPoly(std::move(c));
}

inline nlohmann::json rpoly_to_json(const RPoly& p)
{
    nlohmann::json a = nlohmann::json::array();
    for (const auto& c : p.coeffs()) a.push_back(c.str());
    return a;
}

inline DeformedFamily family_from_json(const nlohmann::json& j)
{
    for (auto it = j.begin(); it != j.end(); ++it)
        if (it.key() != "v0" && it.key() != "v1" && it.key() != "v2" && it.key() != "check_confinement")
            throw InvalidFamily("unknown family key '" + it.key() + "'");
    DeformedFamily f;
    f.v0 = rpoly_from_json(j.at("v0"));
    f.v1 = j.contains("v1") ? rpoly_from_json(j["v1"]) : RPoly{};
    f.v2 = j.contains("v2") ? rpoly_from_json(j["v2"]) : RPoly{};
    if (j.contains("check_confinement")) f.check_confinement = j["check_confinement"].get<bool>();
    f.validate();
    return f;
}

inline nlohmann::json family_to_json(const DeformedFamily& f)
{
    return {{"v0", rpoly_to_json(f.v0)}, {"v1", rpoly_to_json(f.v1)}, {"v2", rpoly_to_json(f.v2)}};
}

}  // namespace edgecrit
