#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "specfun.hpp"
#include "voa.hpp"

namespace jrl {

inline constexpr double tol_lattice = 1e-9;

enum class Variant { main, simplest, shifted, super };

inline std::string to_string(Variant v)
{
    switch (v) {
    case Variant::main: return "main";
    case Variant::simplest: return "simplest";
    case Variant::shifted: return "shifted";
    default: return "super";
    }
}

inline Variant parse_variant(const std::string& s)
{
    if (s == "main")
        return Variant::main;
    if (s == "simplest")
        return Variant::simplest;
    if (s == "shifted")
        return Variant::shifted;
    if (s == "super")
        return Variant::super;
    throw ConfigError("unknown variant '" + s + "'");
}

// ---------------------------------------------------------------- branches

struct Branch {
    enum class Kind { lattice, generic, deformed } kind = Kind::generic;
    long lambda = 0, mu = 0;
    cplx U;           // effective twist theta' = e(-U)
    double frac = 0;  // phi = e(frac)
};

struct InsertionData {
    int level2;
    int charge;
    int parity;
};

inline std::optional<InsertionData> homogeneous(const AlgebraSpec& s, const AlgebraElement& v)
{
    if (v.empty())
        return std::nullopt;
    auto it = v.begin();
    InsertionData d{state_level2(s, it->first), state_charge(s, it->first), state_parity(s, it->first)};
    for (; it != v.end(); ++it)
        if (state_level2(s, it->first) != d.level2 || state_charge(s, it->first) != d.charge ||
            state_parity(s, it->first) != d.parity)
            return std::nullopt;
    return d;
}

inline int parity_of(const AlgebraSpec& s, const AlgebraElement& v)
{
    if (v.empty())
        return 0;
    int p = state_parity(s, v.begin()->first);
    for (auto& [b, c] : v)
        if (state_parity(s, b) != p)
            throw UnsupportedInsertion("insertion mixes parities");
    return p;
}

// For v with J(0) v = alpha v and parity p: the trace moves v around the
// torus with theta' = e^{-2 pi i alpha (z + gamma)} (times -1 for an odd v
// under an ordinary trace) and phi = e^{2 pi i wt_h(v)}.
inline Branch resolve_branch(const AlgebraSpec& s, const JacobiParams& p, int charge, int parity, int level2)
{
    Branch b;
    bool flip = parity && (p.use_supertrace(s) == p.sigma);
    b.U = double(charge) * (p.z + p.gamma) + (flip ? 0.5 : 0.0);
    cplx wt_h = level2 / 2.0 + p.eta * double(charge);
    if (std::abs(wt_h.imag()) > 1e-12)
        throw ConfigError("frame weight must be real");
    double f = wt_h.real() - std::floor(wt_h.real());
    if (f > 1e-12 && f < 1 - 1e-12) {
        b.kind = Branch::Kind::deformed;
        b.frac = f;
        return b;
    }
    const cplx tau = p.tau.tau;
    double lam = b.U.imag() / tau.imag();
    double mu = b.U.real() - lam * tau.real();
    double d = std::max(std::abs(lam - std::round(lam)), std::abs(mu - std::round(mu)));
    if (d <= tol_lattice) {
        b.kind = Branch::Kind::lattice;
        b.lambda = std::lround(lam);
        b.mu = std::lround(mu);
    } else if (d < 1e-6) {
        throw BranchUnresolved("alpha (z + gamma) lies within 1e-6 of the lattice without resolving to it");
    }
    return b;
}

// ---------------------------------------------------------------- coefficients

struct Coefficient {
    std::string fn = "unit"; // P, P_lambda, P_tilde, P_deformed, E_lambda, E_tilde, zero_mode, unit
    int index = 0;
    long lambda = 0;
    cplx w{0.0, 0.0};
    cplx u{0.0, 0.0};
    cplx theta{1.0, 0.0};
    double frac = 0;
    cplx scalar{1.0, 0.0};
    ModularPoint tau;
    Truncation tr;
    cplx value{1.0, 0.0};

    cplx evaluate() const
    {
        if (fn == "unit")
            return scalar;
        if (fn == "P")
            return p_strip(index, w, tau, tr);
        if (fn == "P_lambda")
            return p_lambda_strip(index, (int)lambda, w, tau, tr);
        if (fn == "P_tilde")
            return p_tilde_strip(index, w, u, tau, tr);
        if (fn == "P_deformed")
            return detail::sign_pow(index) / detail::factorial(index - 1) *
                   detail::p_deformed_frac_sum(index - 1, frac, 1.0 / theta, w, tau, tr);
        if (fn == "E_lambda")
            return p1_lambda_coeff(index, double(lambda), tau, tr);
        if (fn == "E_tilde")
            return eisenstein_tilde(index, u, tau, tr);
        if (fn == "zero_mode")
            return scalar * e2pi(-double(lambda) * w);
        throw ConfigError("unknown coefficient '" + fn + "'");
    }
};

inline Coefficient finalize(Coefficient c)
{
    c.value = c.evaluate();
    return c;
}

inline Coefficient p_coefficient(const Branch& b, bool plain, int index, cplx w, const JacobiParams& p,
                                 const Truncation& tr)
{
    Coefficient c;
    c.index = index;
    c.w = w;
    c.tau = p.tau;
    c.tr = tr;
    if (plain) {
        c.fn = "P";
    } else if (b.kind == Branch::Kind::lattice) {
        c.fn = "P_lambda";
        c.lambda = b.lambda;
    } else if (b.kind == Branch::Kind::generic) {
        c.fn = "P_tilde";
        c.u = b.U;
    } else {
        c.fn = "P_deformed";
        c.theta = e2pi(-b.U);
        c.frac = b.frac;
    }
    return finalize(c);
}

inline Coefficient e_coefficient(const Branch& b, int index, const JacobiParams& p, const Truncation& tr)
{
    Coefficient c;
    c.index = index;
    c.tau = p.tau;
    c.tr = tr;
    if (b.kind == Branch::Kind::lattice) {
        c.fn = "E_lambda";
        c.lambda = b.lambda;
    } else {
        c.fn = "E_tilde";
        c.u = b.U;
    }
    return finalize(c);
}

inline Coefficient zero_mode_coefficient(long lambda, cplx w, const JacobiParams& p, const Truncation& tr)
{
    Coefficient c;
    c.fn = "zero_mode";
    c.lambda = lambda;
    c.w = w;
    c.tau = p.tau;
    c.tr = tr;
    return finalize(c);
}

inline Coefficient unit_coefficient()
{
    Coefficient c;
    return finalize(c);
}

// ---------------------------------------------------------------- expansions

// One term of a reduction: factor * coefficient * F(ins; inner operators).
struct Expansion {
    Coefficient coef;
    cplx factor{1.0, 0.0};
    std::vector<Insertion> ins;
    std::vector<InnerOperator> inner;
    int k = 0, m = 0, l = 0;
};

inline int parity_sum(const AlgebraSpec& s, const std::vector<Insertion>& ins, std::size_t from, std::size_t to)
{
    int t = 0;
    for (std::size_t i = from; i < to; ++i)
        t += parity_of(s, ins[i].v);
    return t;
}

inline int max_square_index(const AlgebraSpec& s, int level2_v, const AlgebraElement& y)
{
    return (level2_v + max_level2(s, y)) / 2 + 1;
}

inline void check_admissible(const AlgebraSpec& s, const AlgebraElement& v, const std::vector<Insertion>& ins,
                             std::size_t n, cplx eta)
{
    int l2 = max_level2(s, v);
    for (std::size_t k = 0; k < n; ++k)
        for (int l = 1; l <= max_square_index(s, l2, ins[k].v); ++l)
            if (!square_mode(s, v, l, ins[k].v, eta).empty())
                throw AdmissibilityViolation("v[" + std::to_string(l) + "] v_" + std::to_string(k + 1) + " != 0");
}

// Reduction of the last insertion v of an (n+1)-point function.  Terms are
// ordered zero mode first, then by (k, m).
inline std::vector<Expansion> expand_last(const AlgebraSpec& s, const JacobiParams& p, const std::vector<Insertion>& ins,
                                          const Truncation& tr, Variant variant = Variant::simplest)
{
    if (ins.empty())
        throw ConfigError("nothing to reduce");
    const std::size_t n = ins.size() - 1;
    const AlgebraElement& v = ins.back().v;
    if (v.empty())
        return {};
    auto h = homogeneous(s, v);
    if (!h)
        throw UnsupportedInsertion("reduced insertion must be homogeneous");
    Branch b = resolve_branch(s, p, h->charge, h->parity, h->level2);
    bool plain = variant == Variant::shifted;
    if (plain && !(b.kind == Branch::Kind::lattice && b.lambda == 0))
        throw ConfigError("shifted variant needs the twist to be trivial in the shifted frame");
    if (variant == Variant::main)
        check_admissible(s, v, ins, n, p.eta);

    std::vector<Expansion> out;
    const cplx w1 = ins.back().w;
    std::vector<Insertion> rest(ins.begin(), ins.end() - 1);
    if (b.kind == Branch::Kind::lattice) {
        Expansion e;
        e.coef = zero_mode_coefficient(b.lambda, w1, p, tr);
        e.ins = rest;
        e.inner.push_back({v, double(b.lambda)});
        out.push_back(std::move(e));
    }
    for (std::size_t k = 0; k < n; ++k) {
        double sign = (h->parity * parity_sum(s, ins, k, n)) % 2 ? -1.0 : 1.0;
        int mmax = max_square_index(s, h->level2, ins[k].v);
        for (int m = 0; m <= mmax; ++m) {
            AlgebraElement y = square_mode(s, v, m, ins[k].v, p.eta);
            if (y.empty())
                continue;
            Expansion e;
            e.coef = p_coefficient(b, plain, m + 1, w1 - ins[k].w, p, tr);
            e.factor = sign;
            e.ins = rest;
            e.ins[k].v = std::move(y);
            e.k = int(k) + 1;
            e.m = m;
            out.push_back(std::move(e));
        }
    }
    return out;
}

// F(..., v[-l] y) at the last position, for a homogeneous generator v and
// y the current last insertion.
inline std::vector<Expansion> expand_negative(const AlgebraSpec& s, const JacobiParams& p,
                                              const std::vector<Insertion>& ins, const BasisState& v, int l,
                                              const Truncation& tr)
{
    if (ins.empty() || l < 1)
        throw ConfigError("negative-mode reduction needs an insertion and l >= 1");
    const std::size_t n = ins.size();
    AlgebraElement ve{{v, 1.0}};
    auto wc = weight_charge(s, v);
    int lv2 = state_level2(s, v);
    Branch b = resolve_branch(s, p, wc.charge, wc.parity, lv2);
    if (b.kind == Branch::Kind::deformed)
        throw UnsupportedInsertion("descendant insertions need an integral frame weight");
    const AlgebraElement& y = ins.back().v;
    int py = parity_of(s, y);
    const cplx wn = ins.back().w;
    std::vector<Expansion> out;
    if (b.kind == Branch::Kind::lattice) {
        double f = (wc.parity * py) % 2 ? -1.0 : 1.0;
        f *= std::pow(-double(b.lambda), l - 1) / detail::factorial(l - 1);
        if (f != 0.0) {
            Expansion e;
            e.coef = zero_mode_coefficient(b.lambda, wn, p, tr);
            e.factor = f;
            e.ins = ins;
            e.inner.push_back({ve, double(b.lambda)});
            e.l = l;
            out.push_back(std::move(e));
        }
    }
    int mmax = max_square_index(s, lv2, y);
    for (int m = 0; m <= mmax; ++m) {
        AlgebraElement ny = square_mode(s, ve, m, y, p.eta);
        if (ny.empty())
            continue;
        Expansion e;
        e.coef = e_coefficient(b, m + l, p, tr);
        e.factor = ((m + 1) % 2 ? -1.0 : 1.0) * detail::binom(m + l - 1, m);
        e.ins = ins;
        e.ins.back().v = std::move(ny);
        e.k = int(n);
        e.m = m;
        e.l = l;
        out.push_back(std::move(e));
    }
    for (std::size_t k = 0; k + 1 < n; ++k) {
        double sign = (wc.parity * parity_sum(s, ins, k, n - 1)) % 2 ? -1.0 : 1.0;
        sign *= (l + 1) % 2 ? -1.0 : 1.0;
        int mk = max_square_index(s, lv2, ins[k].v);
        for (int m = 0; m <= mk; ++m) {
            AlgebraElement nk = square_mode(s, ve, m, ins[k].v, p.eta);
            if (nk.empty())
                continue;
            Expansion e;
            e.coef = p_coefficient(b, false, m + l, wn - ins[k].w, p, tr);
            e.factor = sign * detail::binom(m + l - 1, m);
            e.ins = ins;
            e.ins[k].v = std::move(nk);
            e.k = int(k) + 1;
            e.m = m;
            e.l = l;
            out.push_back(std::move(e));
        }
    }
    return out;
}

inline std::vector<Expansion> reduce_step(const NPointRequest& r, Variant variant = Variant::simplest)
{
    return expand_last(r.module->spec(), r.params, r.insertions, r.truncation, variant);
}

inline std::vector<Expansion> reduce_negative_mode(const NPointRequest& r, const BasisState& v, int l)
{
    return expand_negative(r.module->spec(), r.params, r.insertions, v, l, r.truncation);
}

// Evaluate a list of expansions with the trace oracle.
inline cplx evaluate_with_oracle(const NPointRequest& base, const std::vector<Expansion>& terms)
{
    CompensatedSum<cplx> s;
    for (auto& e : terms) {
        NPointRequest c = base;
        c.insertions = e.ins;
        c.inner = base.inner;
        c.inner.insert(c.inner.begin(), e.inner.begin(), e.inner.end());
        s.add(e.factor * e.coef.value * npoint_oracle(c));
    }
    return s.value();
}

// ---------------------------------------------------------------- ledger

struct LedgerNode;

struct LedgerTerm {
    Coefficient coef;
    cplx factor{1.0, 0.0};
    std::shared_ptr<const LedgerNode> child;
    int k = 0, m = 0, l = 0;
};

struct LedgerNode {
    NPointRequest req;
    cplx value{0.0, 0.0};
    bool leaf = false;
    std::vector<LedgerTerm> terms;
};

struct ReduceOptions {
    Variant variant = Variant::simplest;
    bool strict = false; // raise DegenerateInsertion when a stage vanishes
};

struct ReductionResult {
    cplx value;
    std::shared_ptr<const LedgerNode> ledger;
};

namespace detail {

// A zero mode that acts as a scalar on the truncated module.
inline std::optional<cplx> central_scalar(const ModuleSpace& W, const InnerOperator& o, cplx eta)
{
    SpMat Z = zero_mode(W, o.v, o.shift, eta);
    if (Z.nonZeros() == 0)
        return cplx(0.0);
    cplx s = Z.coeff(0, 0);
    double scale = std::max(1.0, std::abs(s));
    for (int k = 0; k < Z.outerSize(); ++k)
        for (SpMat::InnerIterator it(Z, k); it; ++it)
            if (it.row() != it.col() && std::abs(it.value()) > 1e-12 * scale)
                return std::nullopt;
    for (int i = 0; i < W.size(); ++i)
        if (std::abs(Z.coeff(i, i) - s) > 1e-12 * scale)
            return std::nullopt;
    return s;
}

inline std::shared_ptr<const LedgerNode> reduce_node(const NPointRequest& r, const ReduceOptions& opt, int stage);

inline void add_expansions(LedgerNode& node, const NPointRequest& r, std::vector<Expansion> exps, cplx scale,
                           const ReduceOptions& opt, int stage)
{
    for (auto& e : exps) {
        LedgerTerm t;
        t.coef = e.coef;
        t.factor = scale * e.factor;
        t.k = e.k;
        t.m = e.m;
        t.l = e.l;
        for (auto& o : e.inner) {
            auto c = central_scalar(*r.module, o, r.params.eta);
            if (!c)
                throw UnsupportedInsertion("zero mode of " + to_string(r.module->spec(), o.v.begin()->first) +
                                           " is not central on the module");
            t.coef.scalar *= *c;
            t.coef.value = t.coef.evaluate();
        }
        NPointRequest c = r;
        c.insertions = std::move(e.ins);
        c.inner.clear();
        t.child = reduce_node(c, opt, stage + 1);
        node.terms.push_back(std::move(t));
    }
}

inline std::shared_ptr<const LedgerNode> reduce_node(const NPointRequest& r, const ReduceOptions& opt, int stage)
{
    if (!r.inner.empty())
        throw UnsupportedInsertion("requests with inner operators are evaluated by the oracle only");
    auto node = std::make_shared<LedgerNode>();
    node->req = r;
    const AlgebraSpec& s = r.module->spec();
    if (r.insertions.empty()) {
        node->leaf = true;
        node->value = npoint_oracle(r);
        return node;
    }
    check_nested(r.insertions, r.params.tau);
    const Insertion last = r.insertions.back();
    std::vector<Insertion> rest(r.insertions.begin(), r.insertions.end() - 1);
    for (auto& [b, c] : pruned(last.v)) {
        if (b.empty()) {
            NPointRequest ch = r;
            ch.insertions = rest;
            LedgerTerm t;
            t.coef = unit_coefficient();
            t.factor = c;
            t.child = reduce_node(ch, opt, stage + 1);
            node->terms.push_back(std::move(t));
            continue;
        }
        std::vector<Insertion> ins = r.insertions;
        if (b.size() == 1 && b[0].n == 1) {
            ins.back().v = AlgebraElement{{b, 1.0}};
            add_expansions(*node, r, expand_last(s, r.params, ins, r.truncation, opt.variant), c, opt, stage);
            continue;
        }
        // x(-p) w = x[-p] w - sum_{j > -p} c_{-p,j} x(j) w
        BasisState xs{Mode{b[0].sp, 1}};
        BasisState w(b.begin() + 1, b.end());
        int p = b[0].n;
        AlgebraElement we{{w, 1.0}};
        cplx wt_h = state_level2(s, xs) / 2.0 + r.params.eta * double(state_charge(s, xs));
        int jmax = (state_level2(s, xs) + state_level2(s, w)) / 2 + 1;
        auto coeffs = square_coefficients(wt_h, -p, jmax + p);
        AlgebraElement rem;
        for (int j = -p + 1; j <= jmax; ++j)
            add_to(rem, round_mode(s, {}, xs, j, we), -coeffs[j + p]);
        rem = pruned(rem);
        if (!rem.empty()) {
            NPointRequest ch = r;
            ch.insertions.back().v = rem;
            LedgerTerm t;
            t.coef = unit_coefficient();
            t.factor = c;
            t.child = reduce_node(ch, opt, stage + 1);
            node->terms.push_back(std::move(t));
        }
        ins.back().v = we;
        add_expansions(*node, r, expand_negative(s, r.params, ins, xs, p, r.truncation), c, opt, stage);
    }
    CompensatedSum<cplx> sum;
    for (auto& t : node->terms)
        sum.add(t.factor * t.coef.value * t.child->value);
    node->value = sum.value();
    if (opt.strict && node->value == 0.0)
        throw DegenerateInsertion("stage " + std::to_string(stage) + " annihilates the function");
    return node;
}

} // namespace detail

inline ReductionResult reduce_full(const NPointRequest& r, const ReduceOptions& opt = {})
{
    if (!r.module)
        throw ConfigError("request has no module");
    r.truncation.validate();
    auto root = detail::reduce_node(r, opt, 0);
    return {root->value, root};
}

// Bottom-up value of a ledger with every coefficient recomputed (and scaled).
inline cplx ledger_value(const LedgerNode& n, double coefficient_scale = 1.0)
{
    if (n.leaf)
        return npoint_oracle(n.req);
    CompensatedSum<cplx> s;
    for (auto& t : n.terms)
        s.add(t.factor * coefficient_scale * t.coef.evaluate() * ledger_value(*t.child, coefficient_scale));
    return s.value();
}

namespace detail {

inline double kz_node(const LedgerNode& n, double coefficient_scale, const ReduceOptions& opt, cplx& value_out)
{
    if (n.leaf) {
        value_out = n.value;
        return 0.0;
    }
    double worst = 0;
    CompensatedSum<cplx> ledger, fresh;
    double mag = 0;
    for (auto& t : n.terms) {
        cplx cv;
        worst = std::max(worst, kz_node(*t.child, coefficient_scale, opt, cv));
        ledger.add(t.factor * coefficient_scale * t.coef.value * cv);
        cplx f = t.factor * t.coef.evaluate() * reduce_full(t.child->req, opt).value;
        fresh.add(f);
        mag += std::abs(f);
    }
    value_out = ledger.value();
    if (mag == 0.0)
        return worst;
    return std::max(worst, std::abs(value_out - fresh.value()) / mag);
}

} // namespace detail

// Every reduction-generated function must equal the reduction expression
// built from freshly evaluated coefficients and freshly reduced children.
inline double kz_residual(const LedgerNode& root, const ReduceOptions& opt = {}, double coefficient_scale = 1.0)
{
    cplx v;
    return detail::kz_node(root, coefficient_scale, opt, v);
}

inline double kz_residual(const NPointRequest& r, const ReduceOptions& opt = {})
{
    return kz_residual(*reduce_full(r, opt).ledger, opt);
}

// ---------------------------------------------------------------- coboundaries

// An n-point function that also accepts operators placed innermost in the
// trace (the T_0 insertions of zero modes).
using Evaluable = std::function<cplx(const std::vector<Insertion>&, const std::vector<InnerOperator>&)>;

inline Evaluable oracle_family(std::shared_ptr<const ModuleSpace> W, JacobiParams p, Truncation tr)
{
    return [W, p, tr](const std::vector<Insertion>& ins, const std::vector<InnerOperator>& inner) {
        NPointRequest r{W, ins, p, tr, inner};
        return npoint_oracle(r);
    };
}

struct CoboundaryVariant {
    Variant kind = Variant::simplest;
    long lambda = 0, mu = 0; // shifted
    cplx alpha{1.0, 0.0};    // shifted
    std::optional<TwistPair> twist;

    JacobiParams frame(JacobiParams p) const
    {
        if (kind == Variant::shifted) {
            if (alpha == 0.0)
                throw ConfigError("shifted variant needs alpha != 0");
            p.z = 0.0;
            p.gamma = double(mu) / alpha;
            p.eta = double(lambda) / alpha;
        }
        return p;
    }
};

// delta^n(x_{n+1}) target, as a function of n+1 insertions
inline Evaluable coboundary_apply(int n, const CoboundaryVariant& var, const AlgebraSpec& s, JacobiParams base,
                                  Truncation tr, Evaluable target)
{
    JacobiParams p = var.frame(base);
    return [=](const std::vector<Insertion>& ins, const std::vector<InnerOperator>& inner) -> cplx {
        if ((int)ins.size() != n + 1)
            throw ConfigError("coboundary of degree " + std::to_string(n) + " takes " + std::to_string(n + 1) +
                              " insertions");
        if (ins.back().v.empty())
            return 0.0;
        if (var.kind == Variant::super && var.twist) {
            auto h = homogeneous(s, ins.back().v);
            if (h) {
                Branch b = resolve_branch(s, p, h->charge, h->parity, h->level2);
                cplx th = e2pi(-b.U);
                if (std::abs(th - var.twist->theta) > 1e-9 || std::abs(e2pi(b.frac) - var.twist->phi) > 1e-9)
                    throw AdmissibilityViolation("insertion is not an eigenvector with the stated twist");
            }
        }
        CompensatedSum<cplx> sum;
        for (auto& e : expand_last(s, p, ins, tr, var.kind)) {
            std::vector<InnerOperator> in = e.inner;
            in.insert(in.end(), inner.begin(), inner.end());
            sum.add(e.factor * e.coef.value * target(e.ins, in));
        }
        return sum.value();
    };
}

// Nested sample points 0 < Im w_1 < ... < Im w_n < Im tau from a fixed seed.
inline std::vector<std::vector<cplx>> sample_grid(int count, int n, const ModularPoint& tau, std::uint64_t seed = 0x4A43)
{
    if (count < 1 || n < 1 || n > 16)
        throw GridDegenerate("grid needs at least one point and 1..16 insertions");
    std::mt19937_64 rng(seed);
    auto uni = [&] { return double(rng() >> 11) * 0x1.0p-53; };
    std::vector<std::vector<cplx>> g;
    double T = tau.tau.imag();
    for (int c = 0; c < count; ++c) {
        // n ordered heights in (0.1 T, 0.9 T) with gaps of at least 0.4 T / (n + 1)
        std::vector<double> h(n);
        double slack = 0.4 * T;
        double gap = slack / (n + 1);
        std::vector<double> u(n);
        for (auto& x : u)
            x = uni();
        std::sort(u.begin(), u.end());
        std::vector<cplx> pt;
        for (int i = 0; i < n; ++i) {
            double im = 0.1 * T + gap * (i + 1) + u[i] * (0.8 * T - slack);
            double re = uni() - 0.5;
            pt.emplace_back(re, im);
        }
        g.push_back(pt);
    }
    return g;
}

// max over samples of |delta^{n+1}(x_{n+2}) delta^n(x_{n+1}) target| / |target|
inline double chain_condition_residual(int n, const AlgebraElement& v_next, const AlgebraElement& v_next2,
                                       const CoboundaryVariant& var, const AlgebraSpec& s, const JacobiParams& p,
                                       const Truncation& tr, const Evaluable& target,
                                       const std::vector<AlgebraElement>& base,
                                       const std::vector<std::vector<cplx>>& samples)
{
    if ((int)base.size() != n)
        throw ConfigError("target insertions must number n");
    if (samples.empty())
        throw GridDegenerate("empty sample grid");
    Evaluable d1 = coboundary_apply(n, var, s, p, tr, target);
    Evaluable d2 = coboundary_apply(n + 1, var, s, p, tr, d1);
    double worst = 0;
    for (auto& pt : samples) {
        if ((int)pt.size() != n + 2)
            throw GridDegenerate("sample points must carry n + 2 arguments");
        std::vector<Insertion> ins;
        for (int i = 0; i < n; ++i)
            ins.push_back({base[i], pt[i]});
        cplx t = target(ins, {});
        ins.push_back({v_next, pt[n]});
        ins.push_back({v_next2, pt[n + 1]});
        cplx r = d2(ins, {});
        if (r == 0.0)
            continue;
        if (t == 0.0)
            return std::numeric_limits<double>::infinity();
        worst = std::max(worst, std::abs(r) / std::abs(t));
    }
    return worst;
}

// ---------------------------------------------------------------- identities

namespace detail {

inline double scale_of(const NPointRequest& r, double terms)
{
    NPointRequest z = r;
    z.insertions.clear();
    z.inner.clear();
    return std::max(terms, std::abs(npoint_oracle(z)));
}

// sum_k eps_k sum_m weight(k, m) F(v[m] at k), with v moved from the front
inline cplx front_sum(const NPointRequest& r, const AlgebraElement& v, const std::function<cplx(int, int)>& weight,
                      double& mag)
{
    const AlgebraSpec& s = r.module->spec();
    int pv = parity_of(s, v);
    int l2 = max_level2(s, v);
    CompensatedSum<cplx> sum;
    mag = 0;
    for (std::size_t k = 0; k < r.insertions.size(); ++k) {
        double eps = (pv * parity_sum(s, r.insertions, 0, k)) % 2 ? -1.0 : 1.0;
        for (int m = 0; m <= max_square_index(s, l2, r.insertions[k].v); ++m) {
            cplx wgt = weight(int(k), m);
            if (wgt == 0.0)
                continue;
            AlgebraElement y = square_mode(s, v, m, r.insertions[k].v, r.params.eta);
            if (y.empty())
                continue;
            NPointRequest c = r;
            c.insertions[k].v = y;
            cplx t = eps * wgt * npoint_oracle(c);
            sum.add(t);
            mag += std::abs(t);
        }
    }
    return sum.value();
}

} // namespace detail

inline double identity_v0_sum(const NPointRequest& r, const AlgebraElement& v)
{
    const AlgebraSpec& s = r.module->spec();
    auto h = homogeneous(s, v);
    if (!h)
        throw UnsupportedInsertion("v must be homogeneous");
    cplx wt_h = h->level2 / 2.0 + r.params.eta * double(h->charge);
    if (std::abs(wt_h - std::round(wt_h.real())) > 1e-12)
        throw NonIntegerWeight("v[0]-sum identity needs integer weight");
    double mag;
    cplx sum = detail::front_sum(r, v, [](int, int m) { return m == 0 ? cplx(1.0) : cplx(0.0); }, mag);
    return std::abs(sum) / detail::scale_of(r, mag);
}

// (1 - theta' q^beta) Tr(o_beta(v) Y...) against
// sum_k sum_m e^{z_k beta} beta^m/m! F(v[m] at k)
inline double identity_rec1(const NPointRequest& r, const AlgebraElement& v, int beta)
{
    const AlgebraSpec& s = r.module->spec();
    auto h = homogeneous(s, v);
    if (!h)
        throw UnsupportedInsertion("v must be homogeneous");
    Branch b = resolve_branch(s, r.params, h->charge, h->parity, h->level2);
    if (b.kind == Branch::Kind::deformed)
        throw NonIntegerWeight("zero modes need an integral frame weight");
    const ModuleSpace& W = *r.module;
    std::vector<SpMat> ops{zero_mode(W, v, beta, r.params.eta)};
    for (auto& x : r.insertions)
        ops.push_back(insertion_matrix(W, x.v, x.w, r.params.eta));
    check_nested(r.insertions, r.params.tau);
    cplx tr0 = graded_trace(W, ops, r.params);
    cplx lhs = (1.0 - e2pi(-b.U) * e2pi(double(beta) * r.params.tau.tau)) * tr0;
    double mag;
    cplx rhs = detail::front_sum(
        r, v,
        [&](int k, int m) {
            return std::exp(two_pi_i * r.insertions[k].w * double(beta)) * std::pow(double(beta), m) /
                   detail::factorial(m);
        },
        mag);
    return std::abs(lhs - rhs) / detail::scale_of(r, std::max(mag, std::abs(lhs)));
}

inline double identity_zero_res(const NPointRequest& r, const AlgebraElement& v)
{
    const AlgebraSpec& s = r.module->spec();
    auto h = homogeneous(s, v);
    if (!h)
        throw UnsupportedInsertion("v must be homogeneous");
    Branch b = resolve_branch(s, r.params, h->charge, h->parity, h->level2);
    if (b.kind != Branch::Kind::lattice)
        throw NotOnLattice("alpha z is not on the lattice");
    double lam = double(b.lambda);
    double mag;
    cplx sum = detail::front_sum(
        r, v,
        [&](int k, int m) {
            return std::exp(two_pi_i * r.insertions[k].w * lam) * std::pow(lam, m) / detail::factorial(m);
        },
        mag);
    return std::abs(sum) / detail::scale_of(r, mag);
}

// ---------------------------------------------------------------- cohomology

struct CohomologyEstimate {
    int kernel;
    int image;
    std::vector<double> singular_values;
};

// Numerical ranks of delta^n on a candidate basis sampled over a grid.
// These are estimates of finite sections, not cohomology computations.
inline CohomologyEstimate cohomology_probe(int n, const CoboundaryVariant& var, const AlgebraSpec& s,
                                           const JacobiParams& p, const Truncation& tr,
                                           const std::vector<Evaluable>& basis,
                                           const std::vector<AlgebraElement>& vs,
                                           const std::vector<std::vector<cplx>>& grid)
{
    if (grid.empty())
        throw GridDegenerate("empty sample grid");
    if ((int)vs.size() != n + 1)
        throw ConfigError("cohomology probe needs n + 1 insertion states");
    int B = (int)basis.size();
    if (B == 0)
        return {0, 0, {}};
    Eigen::MatrixXcd A(grid.size(), B);
    for (int i = 0; i < B; ++i) {
        Evaluable d = coboundary_apply(n, var, s, p, tr, basis[i]);
        for (std::size_t g = 0; g < grid.size(); ++g) {
            if ((int)grid[g].size() != n + 1)
                throw GridDegenerate("grid points must carry n + 1 arguments");
            std::vector<Insertion> ins;
            for (int k = 0; k <= n; ++k)
                ins.push_back({vs[k], grid[g][k]});
            A(g, i) = d(ins, {});
        }
    }
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(A);
    auto sv = svd.singularValues();
    CohomologyEstimate est{B, 0, {}};
    double top = sv.size() ? sv(0) : 0.0;
    for (int i = 0; i < sv.size(); ++i) {
        est.singular_values.push_back(sv(i));
        if (top > 0 && sv(i) > 1e-8 * top)
            ++est.image;
    }
    est.kernel = B - est.image;
    return est;
}

} // namespace jrl
