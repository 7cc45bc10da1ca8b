#pragma once

#include <algorithm>
#include <atomic>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "reduction.hpp"
#include "report.hpp"
#include "specfun.hpp"
#include "voa.hpp"

namespace jrl {

struct CheckItem {
    std::string suite;
    std::string name;
    std::function<CheckResult()> run;
};

namespace checks {

inline const ModularPoint half_i{cplx(0, 0.5)};

inline Truncation nq(int n)
{
    Truncation t;
    t.n_q = n;
    return t;
}

inline double rel(cplx a, cplx b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

inline double rel_strict(cplx a, cplx b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

// D_w = (1/2 pi i) d/dw, five-point stencil
template <class F>
cplx Dw(F f, cplx w, double h = 1e-3)
{
    cplx d = (-f(w + 2.0 * h) + 8.0 * f(w + h) - 8.0 * f(w - h) + f(w - 2.0 * h)) / (12.0 * h);
    return d / two_pi_i;
}

inline CheckResult result(std::string name, double residual, double tol, json params = json::object())
{
    CheckResult c;
    c.name = std::move(name);
    c.residual = residual;
    c.tolerance = tol;
    c.parameters = std::move(params);
    return c;
}

// ------------------------------------------------------------ special functions

inline CheckResult odd_eisenstein()
{
    double r = 0;
    for (int k = 1; k <= 11; k += 2)
        r = std::max(r, std::abs(eisenstein(k, half_i)));
    return result("eisenstein_odd_vanish", r, 0.0, {{"k", "1..11 odd"}, {"tau", to_json(half_i.tau)}});
}

inline CheckResult eisenstein_zero()
{
    return result("eisenstein_e0", std::abs(eisenstein(0, half_i) + 1.0), 0.0, {{"tau", to_json(half_i.tau)}});
}

inline CheckResult p1_lambda_shift()
{
    double r = 0;
    for (cplx w : {cplx(0.3, 0.2), cplx(-0.17, 0.41), cplx(0.05, 0.02)}) {
        cplx base = weier_p(1, w, half_i) + 0.5;
        for (int l = -2; l <= 3; ++l)
            r = std::max(r, rel(weier_p_twisted(1, l, w, half_i), e2pi(-double(l) * w) * base));
    }
    return result("p1_lambda_index_shift", r, 1e-12, {{"lambda", "-2..3"}, {"tau", to_json(half_i.tau)}});
}

// independent high-precision values of sum_j lambda^j/j! E_{k-j}(0.5i)
inline CheckResult twisted_eisenstein_expansion()
{
    static const double ref_m1[] = {-1.0, 1.0, -0.48500445188118572837, 0.15167111854785239504,
                                    -0.011928070642043138426, -0.016406746651685437698, 0.012469018455127560808,
                                    -0.0057460357199044780881, 0.0021910620470332338861};
    static const double ref_2[] = {-1.0, -2.0, -1.9850044518811857284, -1.3033422370957047901,
                                   -0.61443474846382173098, -0.20219095857781485297, -0.032297531022788930784,
                                   0.01248178043472891651, 0.014248304258471454265};
    double r = 0;
    for (int k = 0; k <= 8; ++k) {
        r = std::max(r, std::abs(eisenstein_twisted(k, -1.0, half_i) - ref_m1[k]));
        r = std::max(r, std::abs(eisenstein_twisted(k, 2.0, half_i) - ref_2[k]));
    }
    return result("twisted_eisenstein_expansion", r, 1e-12, {{"k", "0..8"}, {"lambda", {-1, 2}}});
}

inline CheckResult derivative_chains()
{
    cplx w(0.23, 0.21), z(0.31, 0.07);
    TwistPair tw{e2pi(0.3), e2pi(0.25)};
    double r = 0;
    for (int m = 1; m <= 4; ++m) {
        cplx d = Dw([&](cplx x) { return weier_p(m, x, half_i); }, w);
        r = std::max(r, rel(weier_p(m + 1, w, half_i), -d / double(m)));
        for (int l : {-1, 2}) {
            cplx dl = Dw([&](cplx x) { return weier_p_twisted(m, l, x, half_i); }, w);
            r = std::max(r, rel(weier_p_twisted(m + 1, l, w, half_i), -dl / double(m)));
        }
        cplx dt = Dw([&](cplx x) { return weier_p_tilde(m, x, z, half_i); }, w);
        r = std::max(r, rel(weier_p_tilde(m + 1, w, z, half_i), -dt / double(m)));
        cplx dd = Dw([&](cplx x) { return weier_p_deformed(m, tw, x, half_i); }, w);
        r = std::max(r, rel(weier_p_deformed(m + 1, tw, w, half_i), -dd / double(m)));
    }
    return result("derivative_chains", r, 1e-6, {{"m", "1..4"}, {"stencil", 5}, {"tau", to_json(half_i.tau)}});
}

// Laurent data of P_{1,lambda} against the coefficient of its own expansion
inline CheckResult laurent_twisted()
{
    double r = 0;
    for (int l : {0, 1, 2}) {
        auto fit = laurent_coeffs_p1(LaurentKind::plain_twisted, double(l), half_i, 8);
        r = std::max(r, std::abs(fit.residue - 1.0 / two_pi_i));
        for (int k = 1; k <= 6; ++k)
            r = std::max(r, std::abs(fit.coeffs[k - 1] + p1_lambda_coeff(k, l, half_i)));
    }
    return result("laurent_p1_lambda", r, 1e-8, {{"k", "1..6"}, {"lambda", {0, 1, 2}}});
}

// The same fit read against E_{k,lambda} as a finite Eisenstein sum.
inline CheckResult laurent_twisted_literal()
{
    double r = 0;
    for (int l : {0, 1, 2}) {
        auto fit = laurent_coeffs_p1(LaurentKind::plain_twisted, double(l), half_i, 8);
        for (int k = 1; k <= 6; ++k)
            r = std::max(r, std::abs(fit.coeffs[k - 1] + eisenstein_twisted(k, l, half_i)));
    }
    return result("laurent_p1_lambda_vs_E_k_lambda", r, 1e-8, {{"k", "1..6"}, {"lambda", {0, 1, 2}}});
}

inline CheckResult laurent_tilde()
{
    cplx z(0.31, 0.07);
    auto fit = laurent_coeffs_p1(LaurentKind::tilde, z, half_i, 8);
    double r = std::abs(fit.residue - 1.0 / two_pi_i);
    for (int k = 1; k <= 6; ++k)
        r = std::max(r, std::abs(fit.coeffs[k - 1] + eisenstein_tilde(k, z, half_i)));
    return result("laurent_p1_tilde", r, 1e-8, {{"k", "1..6"}, {"z", to_json(z)}});
}

inline CheckResult anomaly(int k)
{
    Truncation tr = nq(60);
    cplx tau(0, 1);
    ModularPoint t(tau), s(-1.0 / tau);
    cplx lhs = eisenstein(k, s, tr) - std::pow(tau, k) * eisenstein(k, t, tr);
    if (k == 2)
        lhs += tau / two_pi_i;
    return result("modular_anomaly_E" + std::to_string(k), std::abs(lhs), 1e-10, {{"tau", to_json(tau)}, {"n_q", 60}});
}

// independent high-precision direct mode sums
inline CheckResult weierstrass_references()
{
    ModularPoint t(cplx(0, 0.4));
    cplx w(0.30, 0.05);
    double r = std::abs(weier_p(1, w, t) - cplx(-0.14111305399644233442, -0.51584941379034599895));
    r = std::max(r, std::abs(weier_p_tilde(1, w, cplx(0.21, 0.13), t) -
                             cplx(-0.74241442106890449363, -0.69787529798267147144)));
    TwistPair tw{e2pi(0.3), e2pi(0.25)};
    r = std::max(r, std::abs(weier_p_deformed(2, tw, w, t) - cplx(-0.12178930525442672716, 0.020710934900477226099)));
    return result("weierstrass_reference_values", r, 1e-12, {{"tau", to_json(t.tau)}, {"w", to_json(w)}});
}

inline CheckResult periodicity()
{
    cplx w(0.3, 0.05);
    ModularPoint t(cplx(0, 0.4));
    double r = std::abs(weier_p(1, w + 1.0, t) - weier_p(1, w, t));
    r = std::max(r, std::abs(eisenstein(4, ModularPoint(t.tau + 1.0)) - eisenstein(4, t)));
    return result("periodicity", r, 1e-13, {{"tau", to_json(t.tau)}});
}

// ------------------------------------------------------------ algebra

inline double partitions(int n)
{
    std::vector<double> p(n + 1, 0.0);
    p[0] = 1;
    for (int k = 1; k <= n; ++k)
        for (int m = k; m <= n; ++m)
            p[m] += p[m - k];
    return p[n];
}

inline CheckResult heisenberg_character()
{
    auto W = enumerate_basis(AlgebraSpec::heisenberg(1), {0.3}, 10);
    JacobiParams p;
    p.tau = half_i;
    p.z = cplx(0.1, 0.02);
    cplx q = half_i.nome(), want = 0;
    for (int n = 0; n <= 10; ++n)
        want += partitions(n) * std::pow(q, n);
    want *= e2pi(half_i.tau * (0.045 - 1.0 / 24)) * e2pi(p.z * 0.3);
    return result("heisenberg_character", rel_strict(graded_trace(*W, {}, p), want), 1e-14,
                  {{"sector", {0.3}}, {"level_cap", 10}});
}

inline CheckResult real_fermion_character()
{
    auto W = enumerate_basis(AlgebraSpec::real_fermion(), {}, 6);
    JacobiParams p;
    p.tau = half_i;
    QLaurentSeries prod(0, {1.0}, 12);
    for (int n = 1; 2 * n - 1 <= 12; ++n)
        prod *= QLaurentSeries::monomial(1.0, 0, 12) + QLaurentSeries::monomial(-1.0, 2 * n - 1, 12);
    cplx want = prod.evaluate(e2pi(half_i.tau / 2.0)) * e2pi(-half_i.tau / 48.0);
    return result("real_fermion_supercharacter", rel_strict(graded_trace(*W, {}, p), want), 1e-14,
                  {{"level_cap", 6}});
}

// [x(m), y(n)] on states whose images stay below the cap
inline CheckResult mode_algebra(const AlgebraSpec& s, std::vector<double> sector, const std::string& name)
{
    auto W = enumerate_basis(s, sector, 6);
    double r = 0;
    int S = s.species();
    for (int i = 0; i < S; ++i)
        for (int j = 0; j < S; ++j)
            for (int m = -3; m <= 3; ++m)
                for (int n = -3; n <= 3; ++n) {
                    const SpMat& A = W->mode_matrix(i, m);
                    const SpMat& B = W->mode_matrix(j, n);
                    double sg = s.is_super() ? 1.0 : -1.0;
                    SpMat C = A * B + sg * (B * A);
                    double want = 0;
                    if (s.kind == AlgebraKind::heisenberg)
                        want = (i == j && m + n == 0) ? m : 0.0;
                    else if (s.partner(i) == j && m + n == -1)
                        want = 1.0;
                    for (int b = 0; b < W->size(); ++b) {
                        if (W->level2(b) + 2 * (std::abs(m) + std::abs(n) + 2) > W->cap2())
                            continue;
                        for (int a = 0; a < W->size(); ++a)
                            r = std::max(r, std::abs(C.coeff(a, b) - (a == b ? want : 0.0)));
                    }
                }
    return result(name, r, 0.0, {{"modes", "-3..3"}, {"level_cap", 6}});
}

inline CheckResult square_bracket_vacuum()
{
    auto s = AlgebraSpec::heisenberg(1);
    AlgebraElement got = square_mode(s, parse_state(s, "a"), -2, vacuum());
    AlgebraElement want = parse_state(s, "a(-2)");
    add_to(want, parse_state(s, "a(-1)"), 1.0);
    add_to(got, want, -1.0);
    return result("square_bracket_vacuum", norm(got), 1e-15, {{"state", "a[-2]1"}});
}

// <1| Y(J, x1) Y(J, x2) |1> = sum_n n (x2/x1)^n, here through level 12
inline CheckResult locality()
{
    auto s = AlgebraSpec::heisenberg(1);
    auto W = enumerate_basis(s, {0.0}, 12);
    cplx x1(0.9, 0.1), x2(0.2, -0.3);
    cplx got = 0, want = 0;
    for (int n = 1; n <= 12; ++n) {
        SpMat P = W->mode_matrix(0, n) * W->mode_matrix(0, -n);
        got += P.coeff(0, 0) * std::pow(x2 / x1, n);
        want += double(n) * std::pow(x2 / x1, n);
    }
    return result("heisenberg_locality", rel_strict(got, want), 1e-14, {{"x1", to_json(x1)}, {"x2", to_json(x2)}});
}

// ------------------------------------------------------------ reductions

struct Config {
    AlgebraSpec s;
    std::shared_ptr<const ModuleSpace> W;
    JacobiParams p;
    AlgebraElement st(const std::string& t) const { return parse_state(s, t); }
};

inline Config heisenberg(double alpha = 0.3, double L = 12)
{
    Config c{AlgebraSpec::heisenberg(1), nullptr, {}};
    c.W = enumerate_basis(c.s, {alpha}, L);
    c.p.tau = half_i;
    c.p.z = cplx(0.1, 0.02);
    return c;
}

inline Config complex_fermion(int s2, cplx z, double L = 12)
{
    Config c{AlgebraSpec::complex_fermion(s2), nullptr, {}};
    c.W = enumerate_basis(c.s, {}, L);
    c.p.tau = half_i;
    c.p.z = z;
    return c;
}

inline Config real_fermion(double L = 12)
{
    Config c{AlgebraSpec::real_fermion(), nullptr, {}};
    c.W = enumerate_basis(c.s, {}, L);
    c.p.tau = half_i;
    return c;
}

inline const cplx w1(0.13, 0.06), w2(-0.21, 0.23), w3(0.37, 0.40);
inline const cplx u1(0.13, 0.1), u2(-0.21, 0.35);
inline const cplx generic_z(0.21, 0.13);

inline NPointRequest request(const Config& c, std::vector<Insertion> ins)
{
    return NPointRequest{c.W, std::move(ins), c.p, nq(12), {}};
}

inline CheckResult oracle_equivalence(const std::string& name, const NPointRequest& r,
                                      const std::function<bool(const LedgerNode&)>& shape = {})
{
    auto res = reduce_full(r);
    cplx o = npoint_oracle(r);
    CheckResult c = result(name, rel_strict(res.value, o), 1e-4, request_to_json(r));
    c.value = {{"reduced", to_json(res.value)}, {"oracle", to_json(o)}};
    if (shape && !shape(*res.ledger))
        c.error = "ledger does not have the expected coefficient family";
    return c;
}

inline bool first_coefficient(const LedgerNode& n, const std::string& fn)
{
    return !n.terms.empty() && n.terms.front().coef.fn == fn;
}

inline CheckResult oracle_heisenberg_one_point()
{
    auto c = heisenberg();
    return oracle_equivalence("oracle_heisenberg_J", request(c, {{c.st("J"), w1}}));
}

inline CheckResult oracle_heisenberg_two_point()
{
    auto c = heisenberg();
    return oracle_equivalence("oracle_heisenberg_JJ", request(c, {{c.st("J"), w1}, {c.st("J"), w2}}));
}

inline CheckResult oracle_heisenberg_descendant()
{
    auto c = heisenberg();
    return oracle_equivalence("oracle_heisenberg_descendant",
                              request(c, {{c.st("J"), u1}, {c.st("a(-3)a(-1)"), u2}}));
}

inline CheckResult oracle_complex_fermion()
{
    auto c = complex_fermion(1, generic_z);
    return oracle_equivalence("oracle_complex_fermion_bc", request(c, {{c.st("c"), w1}, {c.st("b"), w2}}),
                              [](const LedgerNode& n) { return first_coefficient(n, "P_tilde"); });
}

inline CheckResult oracle_complex_fermion_current()
{
    auto c = complex_fermion(1, generic_z);
    return oracle_equivalence("oracle_complex_fermion_bJc",
                              request(c, {{c.st("b"), w1}, {c.st("J"), w2}, {c.st("c"), w3}}));
}

inline CheckResult oracle_real_fermion()
{
    auto c = real_fermion();
    return oracle_equivalence("oracle_real_fermion_bb", request(c, {{c.st("b"), w1}, {c.st("b"), w2}}),
                              [](const LedgerNode& n) {
                                  for (auto& t : n.terms)
                                      if (t.coef.fn != "P_deformed")
                                          return false;
                                  return !n.terms.empty();
                              });
}

inline CheckResult zero_mode_sum()
{
    auto c = complex_fermion(0, generic_z);
    auto r = request(c, {{c.st("b"), w1}, {c.st("c"), w2}});
    return result("identity_v0_sum_complex_fermion", identity_v0_sum(r, c.st("J")), 1e-10, {{"v", "J"}});
}

inline CheckResult zero_mode_sum_rank_two()
{
    auto s = AlgebraSpec::heisenberg(2);
    Config c{s, enumerate_basis(s, {0.2, -0.4}, 12), {}};
    c.p.tau = half_i;
    auto r = request(c, {{c.st("a2"), u1}, {c.st("a1(-1)a2(-1)"), u2}});
    return result("identity_v0_sum_rank_two", identity_v0_sum(r, c.st("a1")), 1e-10, {{"v", "a1"}});
}

inline CheckResult rec1(int which, int beta)
{
    if (which == 0) {
        auto c = heisenberg();
        auto r = request(c, {{c.st("J"), u1}});
        return result("identity_rec1_heisenberg_beta" + std::to_string(beta), identity_rec1(r, c.st("J"), beta), 1e-6,
                      {{"v", "J"}, {"beta", beta}});
    }
    auto c = complex_fermion(1, generic_z);
    auto r = request(c, {{c.st("c"), u1}, {c.st("J"), u2}});
    return result("identity_rec1_complex_fermion_beta" + std::to_string(beta), identity_rec1(r, c.st("b"), beta), 1e-6,
                  {{"v", "b"}, {"beta", beta}});
}

inline CheckResult zero_res(cplx z, double L = 16)
{
    auto c = complex_fermion(1, z, L);
    auto r = request(c, {{c.st("c"), u1}, {c.st("J"), u2}});
    return result("identity_zero_res_z_" + std::string(z.real() == 0 ? "tau" : "tau_plus_1") +
                      (L == 16 ? "" : "_cap" + std::to_string(int(L))),
                  identity_zero_res(r, c.st("b")), 1e-8, {{"v", "b"}, {"z", to_json(z)}, {"level_cap", L}});
}

inline CheckResult chain(int n)
{
    auto s = AlgebraSpec::heisenberg(2);
    auto W = enumerate_basis(s, {0.0, 0.4}, 12);
    JacobiParams p;
    p.tau = half_i;
    auto a1 = parse_state(s, "a1"), a2 = parse_state(s, "a2");
    std::vector<AlgebraElement> base(n, a2);
    auto grid = sample_grid(8, n + 2, half_i);
    double r = chain_condition_residual(n, a1, a2, {Variant::simplest}, s, p, nq(12), oracle_family(W, p, nq(12)),
                                        base, grid);
    return result("chain_condition_n" + std::to_string(n), r, 1e-8,
                  {{"algebra", "heisenberg rank 2"}, {"sector", {0.0, 0.4}}, {"grid", 8}, {"seed", 0x4A43}});
}

inline NPointRequest kz_request()
{
    static const Config c = heisenberg();
    return request(c, {{c.st("J"), u1}, {c.st("a(-1)a(-1)"), u2}});
}

inline CheckResult kz(bool perturbed)
{
    auto r = kz_request();
    auto res = reduce_full(r);
    if (!perturbed)
        return result("kz_residual", kz_residual(*res.ledger), 1e-8, request_to_json(r));
    CheckResult c = result("kz_residual_perturbed", kz_residual(*res.ledger, {}, 1.01), 1e-3, {{"scale", 1.01}});
    c.lower_bound = true;
    return c;
}

inline CheckResult kz_fermion()
{
    auto c = complex_fermion(1, generic_z);
    auto r = request(c, {{c.st("b"), w1}, {c.st("J"), w2}, {c.st("c"), w3}});
    return result("kz_residual_complex_fermion", kz_residual(r), 1e-8);
}

inline CheckResult cohomology_degree_zero()
{
    auto grid = sample_grid(6, 1, half_i);
    auto cj = complex_fermion(1, 0.0);
    auto F = oracle_family(cj.W, cj.p, nq(12));
    auto ej = cohomology_probe(0, {Variant::simplest}, cj.s, cj.p, nq(12), {F}, {cj.st("J")}, grid);
    auto cb = complex_fermion(1, generic_z);
    auto G = oracle_family(cb.W, cb.p, nq(12));
    auto eb = cohomology_probe(0, {Variant::simplest}, cb.s, cb.p, nq(12), {G}, {cb.st("b")}, grid);
    double r = std::abs(ej.kernel - 0) + std::abs(eb.kernel - 1);
    CheckResult c = result("cohomology_degree_zero", r, 0.0, {{"estimate", "numerical rank, not rigorous"}});
    c.value = {{"kernel_J", ej.kernel}, {"kernel_b", eb.kernel}};
    return c;
}

} // namespace checks

inline std::vector<CheckItem> suite_items(const std::string& suite)
{
    using namespace checks;
    std::vector<CheckItem> v;
    auto add = [&](const std::string& s, std::string name, std::function<CheckResult()> f) {
        if (suite == s || suite == "all")
            v.push_back({s, std::move(name), std::move(f)});
    };
    add("specfun", "eisenstein_odd_vanish", odd_eisenstein);
    add("specfun", "eisenstein_e0", eisenstein_zero);
    add("specfun", "p1_lambda_index_shift", p1_lambda_shift);
    add("specfun", "twisted_eisenstein_expansion", twisted_eisenstein_expansion);
    add("specfun", "derivative_chains", derivative_chains);
    add("specfun", "laurent_p1_lambda", laurent_twisted);
    add("specfun", "laurent_p1_tilde", laurent_tilde);
    add("specfun", "modular_anomaly_E2", [] { return anomaly(2); });
    add("specfun", "modular_anomaly_E4", [] { return anomaly(4); });
    add("specfun", "weierstrass_reference_values", weierstrass_references);
    add("specfun", "periodicity", periodicity);
    add("voa", "heisenberg_character", heisenberg_character);
    add("voa", "real_fermion_supercharacter", real_fermion_character);
    add("voa", "heisenberg_commutators",
        [] { return mode_algebra(AlgebraSpec::heisenberg(2), {0.3, -0.4}, "heisenberg_commutators"); });
    add("voa", "fermion_anticommutators",
        [] { return mode_algebra(AlgebraSpec::complex_fermion(0), {}, "fermion_anticommutators"); });
    add("voa", "square_bracket_vacuum", square_bracket_vacuum);
    add("voa", "heisenberg_locality", locality);
    add("reduction", "oracle_heisenberg_J", oracle_heisenberg_one_point);
    add("reduction", "oracle_heisenberg_JJ", oracle_heisenberg_two_point);
    add("reduction", "oracle_heisenberg_descendant", oracle_heisenberg_descendant);
    add("reduction", "oracle_complex_fermion_bc", oracle_complex_fermion);
    add("reduction", "oracle_complex_fermion_bJc", oracle_complex_fermion_current);
    add("reduction", "oracle_real_fermion_bb", oracle_real_fermion);
    add("reduction", "identity_v0_sum_complex_fermion", zero_mode_sum);
    add("reduction", "identity_v0_sum_rank_two", zero_mode_sum_rank_two);
    add("reduction", "identity_rec1_heisenberg_beta1", [] { return rec1(0, 1); });
    add("reduction", "identity_rec1_heisenberg_beta2", [] { return rec1(0, 2); });
    add("reduction", "identity_rec1_complex_fermion_beta1", [] { return rec1(1, 1); });
    add("reduction", "identity_rec1_complex_fermion_beta2", [] { return rec1(1, 2); });
    add("reduction", "identity_zero_res_z_tau", [] { return zero_res(cplx(0, 0.5)); });
    add("reduction", "identity_zero_res_z_tau_plus_1", [] { return zero_res(cplx(1, 0.5)); });
    for (int n = 0; n <= 2; ++n)
        add("reduction", "chain_condition_n" + std::to_string(n), [n] { return chain(n); });
    add("reduction", "kz_residual", [] { return kz(false); });
    add("reduction", "kz_residual_perturbed", [] { return kz(true); });
    add("reduction", "kz_residual_complex_fermion", kz_fermion);
    add("reduction", "cohomology_degree_zero", cohomology_degree_zero);
    if (v.empty())
        throw ConfigError("unknown suite '" + suite + "'");
    return v;
}

// Runs items on `threads` workers; results keep declaration order.
inline std::vector<CheckResult> run_items(const std::vector<CheckItem>& items, unsigned threads,
                                          std::optional<double> tol_override = std::nullopt)
{
    std::vector<CheckResult> out(items.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < items.size();) {
            CheckResult c;
            try {
                c = items[i].run();
            } catch (const std::exception& e) {
                c.residual = std::numeric_limits<double>::infinity();
                c.error = e.what();
            }
            c.name = items[i].name;
            c.parameters["suite"] = items[i].suite;
            if (tol_override && !c.lower_bound)
                c.tolerance = *tol_override;
            c.decide();
            out[i] = std::move(c);
        }
    };
    threads = std::max(1u, std::min<unsigned>(threads, (unsigned)items.size()));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < threads; ++t)
        pool.emplace_back(work);
    work();
    for (auto& t : pool)
        t.join();
    return out;
}

} // namespace jrl
