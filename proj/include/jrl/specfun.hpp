#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <functional>
#include <limits>
#include <mutex>
#include <numbers>
#include <shared_mutex>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/multiprecision/cpp_int.hpp>

#include "errors.hpp"
#include "series.hpp"

namespace jrl {

using cplx = std::complex<double>;
using rational = boost::multiprecision::cpp_rational;

inline constexpr double pi = std::numbers::pi;
inline const cplx two_pi_i{0.0, 2.0 * std::numbers::pi};

struct Truncation {
    int n_q = 40;
    int n_mode = 64;
    double tol = 1e-10;

    void validate() const
    {
        if (n_q < 1 || n_mode < 1 || !(tol > 0))
            throw ConfigError("truncation needs n_q >= 1, n_mode >= 1, tol > 0");
    }
};

// e(x) = exp(2 pi i x); the real part is reduced first so that x and x+1
// produce bit-identical nomes whenever the reduction is exact.
inline cplx e2pi(cplx x)
{
    double re = x.real() - std::round(x.real());
    return std::polar(std::exp(-2.0 * pi * x.imag()), 2.0 * pi * re);
}

struct ModularPoint {
    cplx tau;
    ModularPoint() : tau(0.0, 1.0) {}
    ModularPoint(cplx t) : tau(t)
    {
        if (!(t.imag() > 0))
            throw DomainViolation("tau must lie in the upper half-plane");
    }
    cplx nome() const { return e2pi(tau); }
};

struct SL2Element {
    long a = 1, b = 0, c = 0, d = 1;
    SL2Element() = default;
    SL2Element(long a_, long b_, long c_, long d_) : a(a_), b(b_), c(c_), d(d_)
    {
        if (a * d - b * c != 1)
            throw DomainViolation("SL2 element needs ad - bc = 1");
    }
    cplx act(cplx tau) const { return (double(a) * tau + double(b)) / (double(c) * tau + double(d)); }
};

struct TwistPair {
    cplx theta{1.0, 0.0};
    cplx phi{1.0, 0.0};

    // lambda in [0,1) with phi = e(lambda)
    double lambda() const
    {
        double l = std::arg(phi) / (2.0 * pi);
        if (l < 0)
            l += 1.0;
        if (l > 1.0 - 1e-12 || l < 1e-12)
            l = 0.0;
        return l;
    }
    void validate() const
    {
        if (std::abs(std::abs(theta) - 1.0) > 1e-12 || std::abs(std::abs(phi) - 1.0) > 1e-12)
            throw DomainViolation("twist parameters must have modulus one");
    }
    bool trivial() const { return std::abs(theta - 1.0) < 1e-12 && std::abs(phi - 1.0) < 1e-12; }
};

inline double truncation_error_estimate(const ModularPoint& t, const Truncation& tr)
{
    double aq = std::abs(t.nome());
    return std::pow(aq, tr.n_q + 1) / (1.0 - aq);
}

// ---------------------------------------------------------------- Bernoulli

namespace detail {

class BernoulliCache {
public:
    rational get(int k)
    {
        {
            std::shared_lock lock(mu_);
            if (k < (int)values_.size())
                return values_[k];
        }
        std::unique_lock lock(mu_);
        if (k >= (int)values_.size())
            extend(std::max(k, 2 * (int)values_.size()));
        return values_[k];
    }

private:
    // z/(e^z - 1) as the inverse of (e^z - 1)/z; B_k = k! [z^k].
    void extend(int K)
    {
        std::vector<rational> e(K + 1);
        rational f = 1;
        for (int j = 0; j <= K; ++j) {
            f /= (j + 1);
            e[j] = f;
        }
        LaurentSeries<rational> E(0, e, K);
        auto inv = E.inverse();
        values_.assign(K + 1, rational(0));
        rational fact = 1;
        for (int k = 0; k <= K; ++k) {
            if (k > 0)
                fact *= k;
            values_[k] = inv.coeff(k) * fact;
        }
    }

    std::shared_mutex mu_;
    std::vector<rational> values_;
};

inline BernoulliCache& bernoulli_cache()
{
    static BernoulliCache c;
    return c;
}

inline double factorial(int n)
{
    double f = 1;
    for (int i = 2; i <= n; ++i)
        f *= i;
    return f;
}

inline double binom(int n, int k)
{
    if (k < 0 || k > n)
        return 0.0;
    double r = 1;
    for (int i = 1; i <= k; ++i)
        r = r * (n - k + i) / i;
    return r;
}

// Numerators of Li_{-m}(x) = N_m(x) / (1-x)^{m+1}.
inline const std::vector<std::vector<double>>& polylog_numerators()
{
    static const std::vector<std::vector<double>> table = [] {
        std::vector<std::vector<double>> t;
        t.push_back({0.0, 1.0});
        for (int m = 1; m <= 48; ++m) {
            const auto& p = t.back();
            // x * (N'(1-x) + m N)
            std::vector<double> dp(p.size() > 1 ? p.size() - 1 : 1, 0.0);
            for (std::size_t i = 1; i < p.size(); ++i)
                dp[i - 1] = double(i) * p[i];
            std::vector<double> q(p.size() + 1, 0.0);
            for (std::size_t i = 0; i < dp.size(); ++i) {
                q[i] += dp[i];
                q[i + 1] -= dp[i];
            }
            for (std::size_t i = 0; i < p.size(); ++i)
                q[i] += m * p[i];
            std::vector<double> r(q.size() + 1, 0.0);
            for (std::size_t i = 0; i < q.size(); ++i)
                r[i + 1] = q[i];
            while (r.size() > 1 && r.back() == 0.0)
                r.pop_back();
            t.push_back(r);
        }
        return t;
    }();
    return table;
}

// sum_{n>=1} n^m x^n continued analytically to x != 1
inline cplx polylog_neg(int m, cplx x)
{
    if (m > 48)
        throw ConfigError("polylog order too large");
    if (std::abs(x) > 1.0) {
        cplx y = 1.0 / x;
        if (m == 0)
            return -1.0 - polylog_neg(0, y);
        return (m % 2 == 1 ? 1.0 : -1.0) * polylog_neg(m, y);
    }
    const auto& N = polylog_numerators()[m];
    cplx num = 0;
    for (std::size_t i = N.size(); i-- > 0;)
        num = num * x + N[i];
    return num / std::pow(1.0 - x, m + 1);
}

// sum_{j>=0} (j+a)^m x^j
inline cplx shifted_geometric(int m, double a, cplx x)
{
    cplx s = 0;
    for (int i = 0; i <= m; ++i) {
        cplx Si = (i == 0) ? 1.0 / (1.0 - x) : polylog_neg(i, x);
        s += binom(m, i) * std::pow(a, m - i) * Si;
    }
    return s;
}

// Number of Lambert-tail terms: at least n_mode, extended until the
// geometric ratio has decayed below 1e-17.
inline int tail_terms(double ratio, const Truncation& tr)
{
    int n = tr.n_mode;
    if (ratio <= 0)
        return n;
    if (ratio >= 1)
        throw DomainViolation("argument outside the convergence strip");
    int need = (int)std::ceil(std::log(1e-17) / std::log(ratio)) + 1;
    return std::min(std::max(n, need), 200000);
}

} // namespace detail

inline rational bernoulli(int k)
{
    if (k < 0)
        throw DomainViolation("bernoulli index must be >= 0");
    return detail::bernoulli_cache().get(k);
}

inline double bernoulli_value(int k) { return bernoulli(k).convert_to<double>(); }

// ---------------------------------------------------------------- Eisenstein

inline cplx eisenstein(int k, const ModularPoint& t, const Truncation& tr = {})
{
    if (k < 0)
        throw DomainViolation("eisenstein index must be >= 0");
    if (k == 0)
        return -1.0;
    if (k % 2 == 1)
        return 0.0;
    // -B_k/k! + 2/(k-1)! sum_N sigma_{k-1}(N) q^N, truncated at q^{n_q}
    std::vector<cplx> c(tr.n_q + 1, 0.0);
    c[0] = -bernoulli_value(k) / detail::factorial(k);
    double pref = 2.0 / detail::factorial(k - 1);
    for (int n = 1; n <= tr.n_q; ++n) {
        double nk = std::pow(double(n), k - 1);
        for (int N = n; N <= tr.n_q; N += n)
            c[N] += pref * nk;
    }
    QLaurentSeries s(0, c, tr.n_q);
    return s.evaluate(t.nome());
}

// E_{k,lambda} exactly as the finite sum sum_j lambda^j/j! E_{k-j}.
inline cplx eisenstein_twisted(int k, double lambda, const ModularPoint& t, const Truncation& tr = {})
{
    CompensatedSum<cplx> s;
    for (int j = 0; j <= k; ++j)
        s.add(std::pow(lambda, j) / detail::factorial(j) * eisenstein(k - j, t, tr));
    return s.value();
}

// Laurent data of P_{1,lambda}(w) = 1/u - sum_k C_k u^{k-1}, u = 2 pi i w.
// Since P_{1,lambda} = q_w^{-lambda}(P_1 + 1/2), C_k mixes (-lambda)^j/j!
// with E_{k-j}, where the k=1 entry of the unshifted series is -1/2.
inline cplx p1_lambda_coeff(int k, double lambda, const ModularPoint& t, const Truncation& tr = {})
{
    CompensatedSum<cplx> s;
    for (int j = 0; j <= k; ++j) {
        cplx e = (k - j == 1) ? cplx(-0.5) : eisenstein(k - j, t, tr);
        s.add(std::pow(-lambda, j) / detail::factorial(j) * e);
    }
    return s.value();
}

inline cplx eisenstein_tilde(int k, cplx z, const ModularPoint& t, const Truncation& tr = {})
{
    if (k < 0)
        throw DomainViolation("eisenstein_tilde index must be >= 0");
    if (k == 0)
        return -1.0;
    cplx qz = e2pi(z);
    cplx q = t.nome();
    CompensatedSum<cplx> s;
    if (k == 1) {
        if (std::abs(qz - 1.0) < 1e-14)
            throw PoleAtTrivialZ("Etilde_1 has a pole at q_z = 1");
        s.add(-qz / (qz - 1.0));
    }
    s.add(-bernoulli_value(k) / detail::factorial(k));
    double pref = 1.0 / detail::factorial(k - 1);
    cplx qzi = 1.0 / qz;
    double sg = (k % 2 == 0) ? 1.0 : -1.0;
    cplx qN = 1.0;
    for (int N = 1; N <= tr.n_q; ++N) {
        qN *= q;
        for (int n = 1; n <= N; ++n) {
            if (N % n)
                continue;
            int m = N / n;
            double nk = std::pow(double(n), k - 1);
            s.add(pref * nk * (std::pow(qz, m) + sg * std::pow(qzi, m)) * qN);
        }
    }
    return s.value();
}

// ---------------------------------------------------------------- P families

namespace detail {

inline void check_annulus(cplx w, const ModularPoint& t)
{
    if (!(w.imag() > 0) || !(w.imag() < t.tau.imag()))
        throw DomainViolation("need |q| < |q_w| < 1");
}

inline void check_strip(cplx w, const ModularPoint& t)
{
    if (!(std::abs(w.imag()) < t.tau.imag()))
        throw DomainViolation("need |q| < |q_w| < |q|^{-1}");
}

// sum_{n != -lambda} n^m q_w^n / (1 - q^{n+lambda}), valid on the strip.
inline cplx p_lambda_sum(int m, int lambda, cplx w, const ModularPoint& t, const Truncation& tr)
{
    check_strip(w, t);
    cplx q = t.nome();
    cplx x = e2pi(w);
    double ratio = std::max(std::abs(x * q), std::abs(q / x));
    int N = tail_terms(ratio, tr);
    CompensatedSum<cplx> s;
    for (int i = 0; i <= m; ++i) {
        cplx Li = polylog_neg(i, x);
        s.add(binom(m, i) * std::pow(double(-lambda), m - i) * Li);
    }
    cplx xn = 1.0, xin = 1.0, qn = 1.0;
    cplx xi = 1.0 / x;
    for (int n = 1; n <= N; ++n) {
        xn *= x;
        xin *= xi;
        qn *= q;
        cplx lam = qn / (1.0 - qn);
        s.add(std::pow(double(n - lambda), m) * xn * lam);
        s.add(-std::pow(double(-n - lambda), m) * xin * lam);
    }
    return e2pi(-double(lambda) * w) * s.value();
}

// sum_n n^m q_w^n / (1 - q_z q^n), valid on the strip.
inline cplx p_tilde_sum(int m, cplx w, cplx z, const ModularPoint& t, const Truncation& tr)
{
    check_strip(w, t);
    cplx q = t.nome();
    cplx x = e2pi(w);
    cplx qz = e2pi(z);
    if (std::abs(1.0 - qz) < tr.tol)
        throw PoleHit("1 - q_z vanishes");
    double ratio = std::max(std::abs(x * q), std::abs(q / x));
    int N = tail_terms(ratio, tr);
    CompensatedSum<cplx> s;
    s.add(polylog_neg(m, x));
    if (m == 0)
        s.add(1.0 / (1.0 - qz));
    cplx xn = 1.0, xin = 1.0, qn = 1.0, xi = 1.0 / x, qzi = 1.0 / qz;
    for (int n = 1; n <= N; ++n) {
        xn *= x;
        xin *= xi;
        qn *= q;
        cplx d1 = 1.0 - qz * qn, d2 = 1.0 - qzi * qn;
        if (std::abs(d1) < tr.tol || std::abs(d2) < tr.tol)
            throw PoleHit("1 - q_z q^n vanishes");
        double nm = std::pow(double(n), m);
        s.add(nm * xn * qz * qn / d1);
        s.add(-((m % 2) ? -nm : nm) * xin * qzi * qn / d2);
    }
    return s.value();
}

// sum'_{n in Z+a} n^m q_w^n / (1 - t q^n) for a in (0,1), valid on the strip.
inline cplx p_deformed_frac_sum(int m, double a, cplx t_inv_theta, cplx w, const ModularPoint& tp,
                                const Truncation& tr)
{
    check_strip(w, tp);
    cplx x = e2pi(w);
    cplx q = tp.nome();
    cplx tt = t_inv_theta;
    double ratio = std::max(std::abs(x * q), std::abs(q / x));
    int N = tail_terms(ratio, tr);
    CompensatedSum<cplx> s;
    s.add(e2pi(a * w) * shifted_geometric(m, a, x));
    for (int j = 0; j <= N; ++j) {
        double n = j + a;
        cplx qn = e2pi(n * tp.tau);
        cplx d = 1.0 - tt * qn;
        if (std::abs(d) < tr.tol)
            throw PoleHit("1 - theta^{-1} q^n vanishes");
        s.add(std::pow(n, m) * e2pi(n * w) * tt * qn / d);
    }
    for (int j = 1; j <= N + 1; ++j) {
        double k = j - a; // n = -k
        cplx qk = e2pi(k * tp.tau);
        cplx d = 1.0 - qk / tt;
        if (std::abs(d) < tr.tol)
            throw PoleHit("1 - theta q^k vanishes");
        s.add(-std::pow(-k, m) * e2pi(-k * w) * (qk / tt) / d);
    }
    return s.value();
}

inline double sign_pow(int m) { return (m % 2) ? -1.0 : 1.0; }

} // namespace detail

// Strip evaluators: same functions continued to |q| < |q_w| < |q|^{-1}.
// The reduction engine needs them for cross terms w_k - w_j with Im < 0.
inline cplx p_lambda_strip(int m1, int lambda, cplx w, const ModularPoint& t, const Truncation& tr = {})
{
    int m = m1 - 1;
    return detail::sign_pow(m + 1) / detail::factorial(m) * detail::p_lambda_sum(m, lambda, w, t, tr);
}

inline cplx p_strip(int m1, cplx w, const ModularPoint& t, const Truncation& tr = {})
{
    cplx v = p_lambda_strip(m1, 0, w, t, tr);
    return m1 == 1 ? v - 0.5 : v;
}

inline cplx p_tilde_strip(int m1, cplx w, cplx z, const ModularPoint& t, const Truncation& tr = {})
{
    int m = m1 - 1;
    return detail::sign_pow(m + 1) / detail::factorial(m) * detail::p_tilde_sum(m, w, z, t, tr);
}

inline cplx p_deformed_strip(int k, const TwistPair& tw, cplx w, const ModularPoint& t, const Truncation& tr = {})
{
    tw.validate();
    int m = k - 1;
    double a = tw.lambda();
    if (a == 0.0) {
        if (std::abs(tw.theta - 1.0) < 1e-12)
            return p_lambda_strip(k, 0, w, t, tr);
        // theta^{-1} = q_u with u = -arg(theta)/2pi
        cplx u = -std::log(tw.theta) / two_pi_i;
        return p_tilde_strip(k, w, u, t, tr);
    }
    return detail::sign_pow(k) / detail::factorial(m) * detail::p_deformed_frac_sum(m, a, 1.0 / tw.theta, w, t, tr);
}

inline cplx weier_p(int m, cplx w, const ModularPoint& t, const Truncation& tr = {})
{
    if (m < 1)
        throw DomainViolation("weier_p needs m >= 1");
    detail::check_annulus(w, t);
    return p_strip(m, w, t, tr);
}

inline cplx weier_p_twisted(int m, int lambda, cplx w, const ModularPoint& t, const Truncation& tr = {})
{
    if (m < 1)
        throw DomainViolation("weier_p_twisted needs m >= 1");
    detail::check_annulus(w, t);
    return p_lambda_strip(m, lambda, w, t, tr);
}

inline cplx weier_p_tilde(int m, cplx w, cplx z, const ModularPoint& t, const Truncation& tr = {})
{
    if (m < 1)
        throw DomainViolation("weier_p_tilde needs m >= 1");
    detail::check_annulus(w, t);
    return p_tilde_strip(m, w, z, t, tr);
}

inline cplx weier_p_deformed(int k, const TwistPair& tw, cplx w, const ModularPoint& t, const Truncation& tr = {})
{
    if (k < 1)
        throw DomainViolation("weier_p_deformed needs k >= 1");
    detail::check_annulus(w, t);
    return p_deformed_strip(k, tw, w, t, tr);
}

// ---------------------------------------------------------------- Laurent fit

enum class LaurentKind { plain_twisted, tilde };

struct LaurentFit {
    cplx residue;              // coefficient of 1/w
    std::vector<cplx> coeffs;  // coefficient of (2 pi i w)^{k-1}, k = 1..K
    double condition = 1.0;
};

inline constexpr int max_fit_order = 16;

// Least squares over a circle of radius 0.05 * Im(tau) around w = 0.
// Columns are scaled by rho^power so the design matrix is unitary up to
// a factor and the condition number stays near one.
inline LaurentFit laurent_coeffs_p1(LaurentKind kind, cplx param, const ModularPoint& t, int K,
                                    const Truncation& tr = {}, double radius_factor = 0.05)
{
    if (K < 1 || K > max_fit_order)
        throw FitIllConditioned("fit order outside [1, " + std::to_string(max_fit_order) + "]");
    double rw = radius_factor * t.tau.imag();
    if (!(rw > 0) || rw >= t.tau.imag())
        throw FitIllConditioned("degenerate sample circle");
    double rho = 2.0 * pi * rw;
    int N = std::max(4 * K, 8);
    int cols = K + 1;
    Eigen::MatrixXcd A(N, cols);
    Eigen::VectorXcd b(N);
    for (int j = 0; j < N; ++j) {
        double ang = 2.0 * pi * (j + 0.5) / N;
        cplx u = std::polar(rho, ang);
        cplx w = u / two_pi_i;
        for (int c = 0; c < cols; ++c)
            A(j, c) = std::polar(1.0, (c - 1) * ang);
        b(j) = (kind == LaurentKind::plain_twisted) ? p_lambda_strip(1, (int)std::lround(param.real()), w, t, tr)
                                                    : p_tilde_strip(1, w, param, t, tr);
    }
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    auto sv = svd.singularValues();
    double cond = sv(0) / sv(sv.size() - 1);
    if (!std::isfinite(cond) || cond > 1e10)
        throw FitIllConditioned("sample design matrix is ill-conditioned");
    Eigen::VectorXcd x = svd.solve(b);
    LaurentFit out;
    out.condition = cond;
    out.residue = x(0) * rho / two_pi_i;
    for (int k = 1; k <= K; ++k)
        out.coeffs.push_back(x(k) / std::pow(rho, k - 1));
    return out;
}

// ---------------------------------------------------------------- slash action

using JacobiFunction = std::function<cplx(cplx z, cplx tau)>;

inline cplx jacobi_slash(const JacobiFunction& f, int k, int m, const SL2Element& g, long lambda, long mu, cplx z,
                         cplx tau)
{
    cplx ctd = double(g.c) * tau + double(g.d);
    if (std::abs(ctd) == 0.0)
        throw DomainViolation("c tau + d vanishes");
    cplx zz = z + double(lambda) * tau + double(mu);
    cplx expo = -double(g.c) * double(m) * zz * zz / ctd + double(m) * (double(lambda * lambda) * tau + 2.0 * double(lambda) * z);
    return std::pow(ctd, -k) * std::exp(two_pi_i * expo) * f(zz / ctd, g.act(tau));
}

} // namespace jrl
