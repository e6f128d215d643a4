#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nonharmonic/calculus.hpp"
#include "nonharmonic/error.hpp"
#include "nonharmonic/model.hpp"
#include "nonharmonic/symbols.hpp"

namespace nonharmonic::cli {

using json = nlohmann::json;

inline const std::vector<std::string>& task_names() {
    static const std::vector<std::string> names = {"model-check", "transform-check", "symbol-order",
                                                   "compose",     "parametrix",      "funcalc",
                                                   "garding",     "l2norm",          "evolve"};
    return names;
}

struct ExperimentConfig {
    ModelSpec model;
    std::string task;
    json params = json::object();
    std::string output_dir = "out";
    std::uint64_t seed = 0;

    /// Canonical form used for the digest (keys sorted, overrides applied).
    json canonical() const {
        json m = {{"kind", std::string(to_string(model.kind))}, {"h", model.h}, {"N", model.N}, {"Q", model.Q}};
        if (model.order) m["order"] = *model.order;
        return {{"model", m}, {"task", task}, {"params", params}, {"output_dir", output_dir}, {"seed", seed}};
    }
};

namespace detail {

inline void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be an object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key())) throw ConfigError("unknown key '" + it.key() + "' in " + where);
}

inline const json& require(const json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key)) throw ConfigError("missing key '" + key + "' in " + where);
    return j.at(key);
}

template <class T>
T get(const json& j, const std::string& key, const std::string& where) {
    try {
        return require(j, key, where).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("bad value for '" + key + "' in " + where + ": " + e.what());
    }
}

template <class T>
T get_or(const json& j, const std::string& key, T fallback, const std::string& where) {
    if (!j.contains(key)) return fallback;
    return get<T>(j, key, where);
}

inline cplx get_complex(const json& v, const std::string& where) {
    if (v.is_number()) return {v.get<double>(), 0.0};
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
        return {v[0].get<double>(), v[1].get<double>()};
    throw ConfigError(where + ": expected a number or [re, im]");
}

}  // namespace detail

inline ModelSpec parse_model(const json& j) {
    detail::reject_unknown(j, {"kind", "h", "N", "Q", "order"}, "model");
    ModelSpec s;
    s.kind = parse_model_kind(detail::get<std::string>(j, "kind", "model"));
    s.h = detail::get_or<double>(j, "h", 1.0, "model");
    s.N = detail::get<int>(j, "N", "model");
    s.Q = detail::get<int>(j, "Q", "model");
    if (j.contains("order")) s.order = detail::get<double>(j, "order", "model");
    s.validate();
    return s;
}

inline ExperimentConfig parse_config(const json& j) {
    detail::reject_unknown(j, {"model", "task", "params", "output_dir", "seed"}, "config");
    ExperimentConfig c;
    c.model = parse_model(detail::require(j, "model", "config"));
    c.task = detail::get<std::string>(j, "task", "config");
    bool known = false;
    for (const auto& t : task_names()) known = known || t == c.task;
    if (!known) throw ConfigError("unknown task '" + c.task + "'");
    if (j.contains("params")) {
        c.params = j.at("params");
        if (!c.params.is_object()) throw ConfigError("params must be an object");
    }
    c.output_dir = detail::get_or<std::string>(j, "output_dir", "out", "config");
    c.seed = detail::get_or<std::uint64_t>(j, "seed", 0, "config");
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
    }
    return parse_config(j);
}

// ---------------------------------------------------------------- symbol registry

/// Builds a symbol evaluator from its registry entry. model_m is the order of
/// the model operator (lambda has order model_m).
inline SymbolFunction make_symbol(const json& j, double model_m) {
    const std::string where = "symbol";
    if (!j.is_object()) throw ConfigError("symbol must be an object");
    const std::string type = detail::get<std::string>(j, "type", where);
    if (type == "constant") {
        detail::reject_unknown(j, {"type", "value"}, where);
        const cplx c = detail::get_complex(detail::require(j, "value", where), "constant.value");
        return {"constant", [c](const SymbolArgs&) { return c; }, 0.0};
    }
    if (type == "bracket_power") {
        detail::reject_unknown(j, {"type", "s", "sign"}, where);
        const double s = detail::get<double>(j, "s", where);
        const double sign = detail::get_or<double>(j, "sign", 1.0, where);
        return {"bracket_power(" + std::to_string(s) + ")",
                [s, sign](const SymbolArgs& a) { return cplx(sign * std::pow(a.bracket, s), 0.0); }, s};
    }
    if (type == "lambda_power") {
        detail::reject_unknown(j, {"type", "p"}, where);
        const int p = detail::get<int>(j, "p", where);
        if (p < 0) throw ConfigError("lambda_power needs p >= 0");
        return {"lambda_power(" + std::to_string(p) + ")", [p](const SymbolArgs& a) { return std::pow(a.lambda, p); },
                p * model_m};
    }
    if (type == "exp_x") {
        detail::reject_unknown(j, {"type", "k"}, where);
        const int k = detail::get_or<int>(j, "k", 1, where);
        return {"exp_x(" + std::to_string(k) + ")",
                [k](const SymbolArgs& a) {
                    double t = k * a.x;
                    return std::polar(1.0, kTwoPi * (t - std::floor(t)));
                },
                0.0};
    }
    if (type == "indicator") {
        detail::reject_unknown(j, {"type", "xi"}, where);
        const int xi0 = detail::get<int>(j, "xi", where);
        return {"indicator(" + std::to_string(xi0) + ")",
                [xi0](const SymbolArgs& a) { return cplx(a.xi == xi0 ? 1.0 : 0.0, 0.0); }, 0.0};
    }
    if (type == "modulated") {
        detail::reject_unknown(j, {"type", "base", "amplitude", "mode", "k"}, where);
        SymbolFunction base = make_symbol(detail::require(j, "base", where), model_m);
        const double amp = detail::get_or<double>(j, "amplitude", 0.5, where);
        const std::string mode = detail::get_or<std::string>(j, "mode", "sin", where);
        const int k = detail::get_or<int>(j, "k", 1, where);
        if (mode != "sin" && mode != "cos") throw ConfigError("modulated.mode must be sin or cos");
        const bool use_sin = mode == "sin";
        auto f = base.eval;
        return {"(1+" + std::to_string(amp) + mode + ")" + base.name,
                [f, amp, use_sin, k](const SymbolArgs& a) {
                    double ph = kTwoPi * k * a.x;
                    return (1.0 + amp * (use_sin ? std::sin(ph) : std::cos(ph))) * f(a);
                },
                base.order, base.rho, base.delta};
    }
    if (type == "scaled") {
        detail::reject_unknown(j, {"type", "base", "factor"}, where);
        SymbolFunction base = make_symbol(detail::require(j, "base", where), model_m);
        const cplx c = detail::get_complex(detail::require(j, "factor", where), "scaled.factor");
        auto f = base.eval;
        return {"scaled(" + base.name + ")", [f, c](const SymbolArgs& a) { return c * f(a); }, base.order, base.rho,
                base.delta};
    }
    if (type == "sum" || type == "product") {
        detail::reject_unknown(j, {"type", "terms"}, where);
        const json& terms = detail::require(j, "terms", where);
        if (!terms.is_array() || terms.empty()) throw ConfigError(type + ".terms must be a nonempty array");
        std::vector<SymbolFunction> parts;
        for (const auto& t : terms) parts.push_back(make_symbol(t, model_m));
        double order = type == "sum" ? parts.front().order : 0.0;
        std::string name = type + "(";
        for (const auto& p : parts) {
            order = type == "sum" ? std::max(order, p.order) : order + p.order;
            name += p.name + ",";
        }
        name.back() = ')';
        const bool is_sum = type == "sum";
        return {name,
                [parts, is_sum](const SymbolArgs& a) {
                    cplx acc = is_sum ? cplx(0.0, 0.0) : cplx(1.0, 0.0);
                    for (const auto& p : parts) acc = is_sum ? acc + p.eval(a) : acc * p.eval(a);
                    return acc;
                },
                order};
    }
    throw ConfigError("unknown symbol type '" + type + "'");
}

inline ScalarFunction make_function(const json& j) {
    detail::reject_unknown(j, {"name", "s"}, "function");
    const std::string name = detail::get<std::string>(j, "name", "function");
    return make_scalar_function(name, detail::get_or<double>(j, "s", 0.0, "function"));
}

}  // namespace nonharmonic::cli
