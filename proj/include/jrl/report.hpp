#pragma once

#include <cstdlib>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "errors.hpp"
#include "reduction.hpp"

namespace jrl {

using json = nlohmann::ordered_json;

inline constexpr int schema_version = 1;

inline json to_json(cplx c) { return json::array({c.real(), c.imag()}); }

inline cplx complex_from_json(const json& j)
{
    if (j.is_number())
        return {j.get<double>(), 0.0};
    if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
        return {j[0].get<double>(), j[1].get<double>()};
    if (j.is_string())
        throw ConfigError("complex numbers in documents are [re, im] pairs, got \"" + j.get<std::string>() + "\"");
    throw ConfigError("expected a complex number [re, im]");
}

namespace detail {

inline double read_double(const std::string& t, const std::string& text)
{
    if (t == "" || t == "+")
        return 1.0;
    if (t == "-")
        return -1.0;
    std::size_t used = 0;
    double v = 0;
    try {
        v = std::stod(t, &used);
    } catch (...) {
        used = 0;
    }
    if (used != t.size())
        throw ConfigError("cannot read complex number '" + text + "'");
    return v;
}

} // namespace detail

// "0.5i", "1", "-0.2-0.3i", "0.1+i", "2e-3+0.5i"
inline cplx parse_complex(const std::string& text)
{
    std::string t;
    for (char ch : text)
        if (!std::isspace((unsigned char)ch))
            t += ch;
    if (t.empty())
        throw ConfigError("empty complex number");
    if (t.back() != 'i' && t.back() != 'j')
        return {detail::read_double(t, text), 0.0};
    t.pop_back();
    std::size_t split = std::string::npos;
    for (std::size_t k = t.size(); k-- > 1;)
        if ((t[k] == '+' || t[k] == '-') && t[k - 1] != 'e' && t[k - 1] != 'E') {
            split = k;
            break;
        }
    if (split == std::string::npos)
        return {0.0, detail::read_double(t, text)};
    std::string re = t.substr(0, split);
    if (re.empty() || re == "+" || re == "-")
        throw ConfigError("cannot read complex number '" + text + "'");
    return {detail::read_double(re, text), detail::read_double(t.substr(split), text)};
}

namespace detail {

inline void reject_unknown(const json& j, std::initializer_list<const char*> keys, const std::string& where)
{
    if (!j.is_object())
        throw ConfigError(where + " must be an object");
    std::set<std::string> ok(keys.begin(), keys.end());
    for (auto& [k, v] : j.items())
        if (!ok.count(k))
            throw ConfigError("unknown field '" + k + "' in " + where);
}

inline std::string kind_name(AlgebraKind k)
{
    switch (k) {
    case AlgebraKind::heisenberg: return "heisenberg";
    case AlgebraKind::real_fermion: return "real_fermion";
    default: return "complex_fermion";
    }
}

} // namespace detail

inline json to_json(const AlgebraSpec& s)
{
    json j;
    j["kind"] = detail::kind_name(s.kind);
    if (s.kind == AlgebraKind::heisenberg) {
        j["rank"] = s.rank;
        j["beta"] = s.beta;
    }
    if (s.kind == AlgebraKind::complex_fermion)
        j["s2"] = s.s2;
    return j;
}

inline AlgebraSpec algebra_from_json(const json& j)
{
    detail::reject_unknown(j, {"kind", "rank", "beta", "s2"}, "algebra");
    std::string k = j.at("kind").get<std::string>();
    if (k == "heisenberg")
        return AlgebraSpec::heisenberg(j.value("rank", 1), j.value("beta", std::vector<double>{}));
    if (j.contains("rank") || j.contains("beta"))
        throw ConfigError("rank and beta belong to the heisenberg algebra");
    if (k == "real_fermion") {
        if (j.contains("s2"))
            throw ConfigError("s2 belongs to the complex fermion");
        return AlgebraSpec::real_fermion();
    }
    if (k == "complex_fermion")
        return AlgebraSpec::complex_fermion(j.value("s2", 0));
    throw ConfigError("unknown algebra kind '" + k + "'");
}

inline json to_json(const AlgebraSpec& s, const AlgebraElement& v)
{
    json terms = json::array();
    for (auto& [b, c] : v)
        terms.push_back({{"state", to_string(s, b)}, {"coefficient", to_json(c)}});
    return terms;
}

inline AlgebraElement element_from_json(const AlgebraSpec& s, const json& j)
{
    AlgebraElement out;
    for (auto& t : j) {
        detail::reject_unknown(t, {"state", "coefficient"}, "term");
        cplx c = t.contains("coefficient") ? complex_from_json(t["coefficient"]) : cplx(1.0);
        add_to(out, parse_state(s, t.at("state").get<std::string>()), c);
    }
    return out;
}

inline json to_json(const JacobiParams& p)
{
    json j;
    j["z"] = to_json(p.z);
    j["tau"] = to_json(p.tau.tau);
    j["gamma"] = to_json(p.gamma);
    j["shift"] = to_json(p.eta);
    j["sigma"] = p.sigma;
    if (p.supertrace)
        j["supertrace"] = *p.supertrace;
    return j;
}

inline JacobiParams params_from_json(const json& j)
{
    detail::reject_unknown(j, {"z", "tau", "gamma", "shift", "sigma", "supertrace"}, "params");
    JacobiParams p;
    if (j.contains("z"))
        p.z = complex_from_json(j["z"]);
    p.tau = ModularPoint(complex_from_json(j.at("tau")));
    if (j.contains("gamma"))
        p.gamma = complex_from_json(j["gamma"]);
    if (j.contains("shift"))
        p.eta = complex_from_json(j["shift"]);
    p.sigma = j.value("sigma", false);
    if (j.contains("supertrace") && !j["supertrace"].is_null())
        p.supertrace = j["supertrace"].get<bool>();
    return p;
}

inline json to_json(const Truncation& t) { return {{"n_q", t.n_q}, {"n_mode", t.n_mode}, {"tol", t.tol}}; }

inline Truncation truncation_from_json(const json& j, Truncation base = {})
{
    detail::reject_unknown(j, {"n_q", "n_mode", "tol"}, "truncation");
    base.n_q = j.value("n_q", base.n_q);
    base.n_mode = j.value("n_mode", base.n_mode);
    base.tol = j.value("tol", base.tol);
    base.validate();
    return base;
}

// Defaults from JRL_DEFAULT_NQ / JRL_DEFAULT_TOL; explicit values win.
inline Truncation environment_truncation()
{
    Truncation t;
    if (const char* e = std::getenv("JRL_DEFAULT_NQ")) {
        try {
            t.n_q = std::stoi(e);
        } catch (...) {
            throw ConfigError("JRL_DEFAULT_NQ is not an integer");
        }
    }
    if (const char* e = std::getenv("JRL_DEFAULT_TOL")) {
        try {
            t.tol = std::stod(e);
        } catch (...) {
            throw ConfigError("JRL_DEFAULT_TOL is not a number");
        }
    }
    t.validate();
    return t;
}

inline json request_to_json(const NPointRequest& r)
{
    if (!r.inner.empty())
        throw ConfigError("inner operators are internal and have no request form");
    const ModuleSpace& W = *r.module;
    json j;
    j["schema"] = schema_version;
    j["algebra"] = to_json(W.spec());
    j["sector"] = W.alpha();
    j["level_cap"] = W.cap2() / 2.0;
    json ins = json::array();
    for (auto& x : r.insertions)
        ins.push_back({{"terms", to_json(W.spec(), x.v)}, {"w", to_json(x.w)}});
    j["insertions"] = ins;
    j["params"] = to_json(r.params);
    j["truncation"] = to_json(r.truncation);
    return j;
}

inline NPointRequest request_from_json(const json& j, Truncation defaults = {})
{
    detail::reject_unknown(j, {"schema", "algebra", "sector", "level_cap", "insertions", "params", "truncation"},
                           "request");
    if (j.value("schema", 0) != schema_version)
        throw ConfigError("request schema must be " + std::to_string(schema_version));
    AlgebraSpec s = algebra_from_json(j.at("algebra"));
    NPointRequest r;
    r.module = enumerate_basis(s, j.value("sector", std::vector<double>{}), j.at("level_cap").get<double>());
    for (auto& x : j.value("insertions", json::array())) {
        detail::reject_unknown(x, {"state", "coefficient", "terms", "w"}, "insertion");
        AlgebraElement v;
        if (x.contains("terms")) {
            if (x.contains("state") || x.contains("coefficient"))
                throw ConfigError("an insertion gives either terms or state");
            v = element_from_json(s, x["terms"]);
        } else {
            cplx c = x.contains("coefficient") ? complex_from_json(x["coefficient"]) : cplx(1.0);
            v = scaled(parse_state(s, x.at("state").get<std::string>()), c);
        }
        r.insertions.push_back({v, complex_from_json(x.at("w"))});
    }
    r.params = params_from_json(j.at("params"));
    r.truncation = j.contains("truncation") ? truncation_from_json(j["truncation"], defaults) : defaults;
    check_nested(r.insertions, r.params.tau);
    return r;
}

inline json to_json(const Coefficient& c)
{
    json j;
    j["fn"] = c.fn;
    if (c.fn == "unit") {
        j["value"] = to_json(c.value);
        return j;
    }
    if (c.fn != "zero_mode")
        j["index"] = c.index;
    if (c.fn == "P_lambda" || c.fn == "E_lambda" || c.fn == "zero_mode")
        j["lambda"] = c.lambda;
    if (c.fn[0] == 'P' || c.fn == "zero_mode")
        j["w"] = to_json(c.w);
    if (c.fn == "P_tilde" || c.fn == "E_tilde")
        j["u"] = to_json(c.u);
    if (c.fn == "P_deformed") {
        j["theta"] = to_json(c.theta);
        j["phi_exponent"] = c.frac;
    }
    if (c.fn == "zero_mode")
        j["eigenvalue"] = to_json(c.scalar);
    j["value"] = to_json(c.value);
    return j;
}

inline json insertions_to_json(const AlgebraSpec& s, const std::vector<Insertion>& ins)
{
    json a = json::array();
    for (auto& x : ins)
        a.push_back({{"terms", to_json(s, x.v)}, {"w", to_json(x.w)}});
    return a;
}

inline json to_json(const LedgerNode& n)
{
    json j;
    j["insertions"] = insertions_to_json(n.req.module->spec(), n.req.insertions);
    j["value"] = to_json(n.value);
    if (n.leaf) {
        j["leaf"] = "partition_function";
        return j;
    }
    json terms = json::array();
    for (auto& t : n.terms) {
        json tj;
        tj["k"] = t.k;
        tj["m"] = t.m;
        if (t.l)
            tj["l"] = t.l;
        tj["factor"] = to_json(t.factor);
        tj["coefficient"] = to_json(t.coef);
        tj["child"] = to_json(*t.child);
        terms.push_back(std::move(tj));
    }
    j["terms"] = std::move(terms);
    return j;
}

// ---------------------------------------------------------------- reports

struct CheckResult {
    std::string name;
    json parameters = json::object();
    json value;              // null when there is nothing beyond the residual
    double residual = 0;
    double tolerance = 0;
    bool lower_bound = false; // pass iff residual > tolerance
    bool pass = false;
    std::string error;        // set when the check raised

    void decide() { pass = error.empty() && (lower_bound ? residual > tolerance : residual <= tolerance); }
};

inline json to_json(const CheckResult& c)
{
    json j;
    j["name"] = c.name;
    j["parameters"] = c.parameters;
    if (!c.value.is_null())
        j["value"] = c.value;
    if (std::isfinite(c.residual))
        j["residual"] = c.residual;
    else
        j["residual"] = "inf";
    j["tolerance"] = c.tolerance;
    j["bound"] = c.lower_bound ? "above" : "below";
    j["pass"] = c.pass;
    if (!c.error.empty())
        j["error"] = c.error;
    return j;
}

struct Report {
    std::string command;
    json header = json::object();
    std::vector<CheckResult> checks;
    json payload; // command-specific data
    std::optional<double> runtime;

    int passed() const
    {
        int n = 0;
        for (auto& c : checks)
            n += c.pass;
        return n;
    }
    int failed() const { return int(checks.size()) - passed(); }

    json to_json() const
    {
        json j;
        j["schema"] = schema_version;
        j["command"] = command;
        for (auto& [k, v] : header.items())
            j[k] = v;
        if (!payload.is_null())
            j["result"] = payload;
        json cs = json::array();
        for (auto& c : checks)
            cs.push_back(jrl::to_json(c));
        j["checks"] = cs;
        json s;
        s["passed"] = passed();
        s["failed"] = failed();
        if (runtime)
            s["runtime_seconds"] = *runtime;
        j["summary"] = s;
        return j;
    }
};

} // namespace jrl
