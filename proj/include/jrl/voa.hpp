#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Sparse>

#include "errors.hpp"
#include "series.hpp"
#include "specfun.hpp"

namespace jrl {

enum class AlgebraKind { heisenberg, real_fermion, complex_fermion };

// Species index: heisenberg flavors 0..rank-1; real fermion b = 0;
// complex fermion b = 0, c = 1.  Mode labels are integers throughout.
struct AlgebraSpec {
    AlgebraKind kind = AlgebraKind::heisenberg;
    int rank = 1;
    std::vector<double> beta{1.0}; // J = sum beta_i a^i(-1)1
    int s2 = 0;                    // complex fermion grading shift, twice s

    static AlgebraSpec heisenberg(int r = 1, std::vector<double> b = {})
    {
        if (r < 1 || r > 2)
            throw ConfigError("heisenberg rank must be 1 or 2");
        AlgebraSpec s;
        s.kind = AlgebraKind::heisenberg;
        s.rank = r;
        if (b.empty()) {
            b.assign(r, 0.0);
            b[0] = 1.0;
        }
        if ((int)b.size() != r)
            throw ConfigError("current coefficients must match the rank");
        s.beta = std::move(b);
        return s;
    }
    static AlgebraSpec real_fermion()
    {
        AlgebraSpec s;
        s.kind = AlgebraKind::real_fermion;
        s.rank = 1;
        s.beta.clear();
        return s;
    }
    static AlgebraSpec complex_fermion(int shift2 = 0)
    {
        if (shift2 < -1 || shift2 > 1)
            throw ConfigError("complex fermion grading shift must be -1/2, 0 or 1/2");
        AlgebraSpec s;
        s.kind = AlgebraKind::complex_fermion;
        s.rank = 1;
        s.beta.clear();
        s.s2 = shift2;
        return s;
    }

    int species() const { return kind == AlgebraKind::heisenberg ? rank : kind == AlgebraKind::real_fermion ? 1 : 2; }
    bool is_super() const { return kind != AlgebraKind::heisenberg; }
    bool odd(int) const { return is_super(); }
    bool has_current() const { return kind != AlgebraKind::real_fermion; }

    // level of x(-n) in units of 1/2
    int level2(int sp, int n) const
    {
        switch (kind) {
        case AlgebraKind::heisenberg: return 2 * n;
        case AlgebraKind::real_fermion: return 2 * n - 1;
        default: return sp == 0 ? 2 * n - 1 + s2 : 2 * n - 1 - s2;
        }
    }
    int charge(int sp) const { return kind == AlgebraKind::complex_fermion ? (sp == 0 ? 1 : -1) : 0; }
    // the species whose creation mode x(j) with j >= 0 removes
    int partner(int sp) const { return kind == AlgebraKind::complex_fermion ? 1 - sp : sp; }

    double central_charge() const
    {
        switch (kind) {
        case AlgebraKind::heisenberg: return rank;
        case AlgebraKind::real_fermion: return 0.5;
        default: return 1.0 - 3.0 * s2 * s2;
        }
    }

    std::string species_name(int sp) const
    {
        switch (kind) {
        case AlgebraKind::heisenberg: return rank == 1 ? "a" : "a" + std::to_string(sp + 1);
        case AlgebraKind::real_fermion: return "b";
        default: return sp == 0 ? "b" : "c";
        }
    }
    int species_index(const std::string& name) const
    {
        for (int sp = 0; sp < species(); ++sp)
            if (species_name(sp) == name)
                return sp;
        if (kind == AlgebraKind::heisenberg && rank == 1 && name == "a1")
            return 0;
        throw ConfigError("unknown species '" + name + "'");
    }
};

struct Mode {
    int sp;
    int n; // x(-n), n >= 1
    auto operator<=>(const Mode&) const = default;
};

using BasisState = std::vector<Mode>;
using AlgebraElement = std::map<BasisState, cplx>;

struct WeightCharge {
    double weight;
    int charge;
    int parity;
};

inline int state_level2(const AlgebraSpec& s, const BasisState& b)
{
    int l = 0;
    for (auto& m : b)
        l += s.level2(m.sp, m.n);
    return l;
}

inline int state_charge(const AlgebraSpec& s, const BasisState& b)
{
    int c = 0;
    for (auto& m : b)
        c += s.charge(m.sp);
    return c;
}

inline int state_parity(const AlgebraSpec& s, const BasisState& b) { return s.is_super() ? int(b.size() % 2) : 0; }

// weight, charge and parity of a state of V (the vacuum module)
inline WeightCharge weight_charge(const AlgebraSpec& s, const BasisState& b)
{
    return {state_level2(s, b) / 2.0, state_charge(s, b), state_parity(s, b)};
}

inline AlgebraElement vacuum() { return {{BasisState{}, 1.0}}; }

inline void add_to(AlgebraElement& a, const BasisState& b, cplx c)
{
    if (c == 0.0)
        return;
    auto [it, fresh] = a.emplace(b, c);
    if (!fresh) {
        it->second += c;
        if (it->second == 0.0)
            a.erase(it);
    }
}

inline void add_to(AlgebraElement& a, const AlgebraElement& b, cplx c = 1.0)
{
    for (auto& [k, v] : b)
        add_to(a, k, c * v);
}

inline AlgebraElement scaled(const AlgebraElement& a, cplx c)
{
    AlgebraElement r;
    add_to(r, a, c);
    return r;
}

inline double norm(const AlgebraElement& a)
{
    double s = 0;
    for (auto& [k, v] : a)
        s += std::norm(v);
    return std::sqrt(s);
}

inline AlgebraElement pruned(const AlgebraElement& a, double eps = 1e-13)
{
    AlgebraElement r;
    for (auto& [k, v] : a)
        if (std::abs(v) > eps)
            r.emplace(k, v);
    return r;
}

inline int max_level2(const AlgebraSpec& s, const AlgebraElement& a)
{
    int m = 0;
    for (auto& [k, v] : a)
        m = std::max(m, state_level2(s, k));
    return m;
}

// Single mode x(j) on a basis state of the sector with Heisenberg zero
// modes alpha (empty for the vacuum module).
inline AlgebraElement apply_mode(const AlgebraSpec& s, const std::vector<double>& alpha, int sp, int j,
                                 const BasisState& b)
{
    AlgebraElement out;
    auto odd_before = [&](std::size_t pos) {
        if (!s.is_super())
            return 0;
        return int(pos % 2);
    };
    bool boson = !s.is_super();
    if (j < 0) {
        Mode m{sp, -j};
        auto it = std::upper_bound(b.begin(), b.end(), m);
        if (!boson && it != b.begin() && *(it - 1) == m)
            return out;
        std::size_t pos = it - b.begin();
        BasisState r = b;
        r.insert(r.begin() + pos, m);
        out.emplace(std::move(r), odd_before(pos) ? -1.0 : 1.0);
        return out;
    }
    if (boson) {
        if (j == 0) {
            double a = sp < (int)alpha.size() ? alpha[sp] : 0.0;
            if (a != 0.0)
                out.emplace(b, a);
            return out;
        }
        Mode m{sp, j};
        auto range = std::equal_range(b.begin(), b.end(), m);
        int k = int(range.second - range.first);
        if (k == 0)
            return out;
        BasisState r = b;
        r.erase(r.begin() + (range.first - b.begin()));
        out.emplace(std::move(r), double(k) * j);
        return out;
    }
    Mode m{s.partner(sp), j + 1};
    auto it = std::lower_bound(b.begin(), b.end(), m);
    if (it == b.end() || !(*it == m))
        return out;
    std::size_t pos = it - b.begin();
    BasisState r = b;
    r.erase(r.begin() + pos);
    out.emplace(std::move(r), odd_before(pos) ? -1.0 : 1.0);
    return out;
}

inline AlgebraElement apply_mode(const AlgebraSpec& s, const std::vector<double>& alpha, int sp, int j,
                                 const AlgebraElement& e)
{
    AlgebraElement out;
    for (auto& [b, c] : e)
        add_to(out, apply_mode(s, alpha, sp, j, b), c);
    return out;
}

// binomial coefficient with arbitrary integer top
inline double gbinom(long a, int k)
{
    if (k < 0)
        return 0.0;
    double r = 1;
    for (int i = 0; i < k; ++i)
        r = r * double(a - i) / double(i + 1);
    return r;
}

// v(j) y for a basis state v of V, exact on the full Fock space, via the
// normal ordered product Y(x(-p)w, x) = :d^{(p-1)}x(x) Y(w, x):.
inline AlgebraElement round_mode(const AlgebraSpec& s, const std::vector<double>& alpha, const BasisState& v, int j,
                                 const AlgebraElement& y)
{
    if (y.empty())
        return {};
    if (v.empty())
        return j == -1 ? y : AlgebraElement{};
    const Mode x = v.front();
    BasisState w(v.begin() + 1, v.end());
    int p = x.n;
    int wt2_w = state_level2(s, w);
    int lev2_y = max_level2(s, y);
    // w(k) y vanishes for k >= kmax since no state lies below the sector bottom
    int kmax = (wt2_w + lev2_y) / 2;
    double eps = (s.is_super() && state_parity(s, w)) ? -1.0 : 1.0;
    AlgebraElement out;
    // creation part: x(n), n <= -1, with k = j - n - p <= kmax
    for (int n = -1; j - n - p <= kmax; --n) {
        double c = gbinom(-n - 1, p - 1);
        if (c == 0.0)
            continue;
        auto inner = round_mode(s, alpha, w, j - n - p, y);
        if (!inner.empty())
            add_to(out, apply_mode(s, alpha, x.sp, n, inner), c);
    }
    int nmax = lev2_y / 2 + 2;
    for (int n = 0; n <= nmax; ++n) {
        double c = gbinom(-n - 1, p - 1);
        auto inner = apply_mode(s, alpha, x.sp, n, y);
        if (inner.empty())
            continue;
        add_to(out, round_mode(s, alpha, w, j - n - p, inner), eps * c);
    }
    return out;
}

inline AlgebraElement round_mode(const AlgebraSpec& s, const std::vector<double>& alpha, const AlgebraElement& v,
                                 int j, const AlgebraElement& y)
{
    AlgebraElement out;
    for (auto& [b, c] : v)
        add_to(out, round_mode(s, alpha, b, j, y), c);
    return out;
}

// ---------------------------------------------------------------- square modes

// c_{m,j} = [z^{j-m}] e^{wt z} E(z)^{-j-1}, E(z) = (e^z - 1)/z, for j = m..m+K
inline std::vector<cplx> square_coefficients(cplx wt, int m, int K)
{
    std::vector<cplx> out;
    if (K < 0)
        return out;
    std::vector<cplx> ec(K + 1), ew(K + 1);
    double f = 1;
    cplx pw = 1.0;
    for (int i = 0; i <= K; ++i) {
        if (i)
            f /= i;
        ec[i] = f / double(i + 1);
        ew[i] = pw * f;
        pw *= wt;
    }
    QLaurentSeries E(0, ec, K), W(0, ew, K);
    for (int j = m; j <= m + K; ++j) {
        auto s = W * E.pow(-j - 1);
        out.push_back(s.coeff(j - m));
    }
    return out;
}

// v[m] y with the frame weight wt_h of v (wt_h = wt for the plain grading)
inline AlgebraElement square_mode(const AlgebraSpec& s, const BasisState& v, int m, const AlgebraElement& y, cplx wt_h)
{
    if (y.empty())
        return {};
    int jmax = (state_level2(s, v) + max_level2(s, y)) / 2;
    if (jmax < m)
        return {};
    auto c = square_coefficients(wt_h, m, jmax - m);
    AlgebraElement out;
    for (int j = m; j <= jmax; ++j) {
        if (c[j - m] == 0.0)
            continue;
        add_to(out, round_mode(s, {}, v, j, y), c[j - m]);
    }
    return pruned(out);
}

inline AlgebraElement square_mode(const AlgebraSpec& s, const AlgebraElement& v, int m, const AlgebraElement& y,
                                  cplx eta = 0.0)
{
    AlgebraElement out;
    for (auto& [b, c] : v) {
        cplx wt_h = state_level2(s, b) / 2.0 + eta * double(state_charge(s, b));
        add_to(out, square_mode(s, b, m, y, wt_h), c);
    }
    return pruned(out);
}

// v[n]_h for the grading L_h(0) = L(0) + (lambda/alpha) J(0)
inline AlgebraElement shifted_square_mode(const AlgebraSpec& s, const AlgebraElement& v, int n, const AlgebraElement& y,
                                          double lambda, cplx alpha)
{
    if (lambda == 0.0)
        return square_mode(s, v, n, y);
    if (alpha == 0.0)
        throw ConfigError("shifted grading needs alpha != 0");
    return square_mode(s, v, n, y, lambda / alpha);
}

// ---------------------------------------------------------------- state parsing

inline std::string to_string(const AlgebraSpec& s, const BasisState& b)
{
    if (b.empty())
        return "1";
    std::string out;
    for (auto& m : b)
        out += s.species_name(m.sp) + "(" + std::to_string(-m.n) + ")";
    return out;
}

// "J", "b", "c", "a", "a1", "a2", "1"/"vac", or explicit products such
// as "a1(-1)a2(-2)" and "b(-2)c(-1)" read as operators on the vacuum.
inline AlgebraElement parse_state(const AlgebraSpec& s, const std::string& text)
{
    std::string t;
    for (char ch : text)
        if (!std::isspace((unsigned char)ch))
            t += ch;
    if (t == "1" || t == "vac")
        return vacuum();
    if (t == "J") {
        if (s.kind == AlgebraKind::heisenberg) {
            AlgebraElement r;
            for (int i = 0; i < s.rank; ++i)
                if (s.beta[i] != 0.0)
                    add_to(r, BasisState{Mode{i, 1}}, s.beta[i]);
            return r;
        }
        if (s.kind == AlgebraKind::complex_fermion)
            return parse_state(s, "b(-1)c(-1)");
        throw ConfigError("real fermion has no current J");
    }
    if (t.find('(') == std::string::npos)
        return {{BasisState{Mode{s.species_index(t), 1}}, 1.0}};
    std::vector<std::pair<int, int>> ops;
    std::size_t i = 0;
    while (i < t.size()) {
        auto open = t.find('(', i);
        auto close = t.find(')', open);
        if (open == std::string::npos || close == std::string::npos)
            throw ConfigError("malformed state '" + text + "'");
        std::string name = t.substr(i, open - i);
        int j = std::stoi(t.substr(open + 1, close - open - 1));
        if (j >= 0)
            throw ConfigError("state descriptors use creation modes only");
        ops.emplace_back(s.species_index(name), j);
        i = close + 1;
    }
    AlgebraElement e = vacuum();
    for (auto it = ops.rbegin(); it != ops.rend(); ++it)
        e = apply_mode(s, {}, it->first, it->second, e);
    return e;
}

// ---------------------------------------------------------------- modules

using SpMat = Eigen::SparseMatrix<cplx>;

class ModuleSpace {
public:
    static constexpr int max_cap2 = 32;
    static constexpr std::size_t default_budget = 400000;

    ModuleSpace(AlgebraSpec spec, std::vector<double> alpha, int cap2, std::size_t budget = default_budget)
        : spec_(std::move(spec)), alpha_(std::move(alpha)), cap2_(cap2)
    {
        if (cap2 < 0)
            throw ConfigError("level cap must be >= 0");
        if (cap2 > max_cap2)
            throw CapTooLarge("level cap above " + std::to_string(max_cap2 / 2));
        if (spec_.kind == AlgebraKind::heisenberg) {
            if (alpha_.empty())
                alpha_.assign(spec_.rank, 0.0);
            if ((int)alpha_.size() != spec_.rank)
                throw ConfigError("sector must list one charge per flavor");
        } else if (!alpha_.empty()) {
            throw ConfigError("fermion modules have only the NS vacuum sector");
        }
        std::vector<Mode> slots;
        for (int sp = 0; sp < spec_.species(); ++sp)
            for (int n = 1; spec_.level2(sp, n) <= cap2_; ++n)
                slots.push_back({sp, n});
        BasisState cur;
        enumerate(slots, 0, 0, cur, budget);
        std::stable_sort(states_.begin(), states_.end(), [&](const BasisState& a, const BasisState& b) {
            int la = state_level2(spec_, a), lb = state_level2(spec_, b);
            if (la != lb)
                return la < lb;
            int ca = state_charge(spec_, a), cb = state_charge(spec_, b);
            if (ca != cb)
                return ca < cb;
            return a < b;
        });
        for (std::size_t i = 0; i < states_.size(); ++i) {
            index_.emplace(states_[i], (int)i);
            level2_.push_back(state_level2(spec_, states_[i]));
            charge_.push_back(state_charge(spec_, states_[i]));
            parity_.push_back(state_parity(spec_, states_[i]));
        }
        hw_ = 0;
        j0_ = 0;
        for (std::size_t i = 0; i < alpha_.size(); ++i) {
            hw_ += alpha_[i] * alpha_[i] / 2;
            j0_ += spec_.beta[i] * alpha_[i];
        }
    }

    const AlgebraSpec& spec() const { return spec_; }
    const std::vector<double>& alpha() const { return alpha_; }
    int cap2() const { return cap2_; }
    int size() const { return (int)states_.size(); }
    const BasisState& state(int i) const { return states_[i]; }
    int index(const BasisState& b) const
    {
        auto it = index_.find(b);
        return it == index_.end() ? -1 : it->second;
    }
    int level2(int i) const { return level2_[i]; }
    int parity(int i) const { return parity_[i]; }
    int charge(int i) const { return charge_[i]; }
    double weight(int i) const { return hw_ + level2_[i] / 2.0; }
    double highest_weight() const { return hw_; }
    // J(0) eigenvalue
    double current_eigenvalue(int i) const { return j0_ + charge_[i]; }

    std::vector<int> level_dimensions() const
    {
        std::vector<int> d(cap2_ + 1, 0);
        for (int l : level2_)
            ++d[l];
        return d;
    }

    SpMat identity() const
    {
        SpMat I(size(), size());
        I.setIdentity();
        return I;
    }

    // x(j) restricted to the truncated module
    const SpMat& mode_matrix(int sp, int j) const
    {
        std::lock_guard lock(mu_);
        auto key = std::make_pair(sp, j);
        auto it = modes_.find(key);
        if (it != modes_.end())
            return it->second;
        std::vector<Eigen::Triplet<cplx>> trip;
        for (int b = 0; b < size(); ++b) {
            for (auto& [st, c] : apply_mode(spec_, alpha_, sp, j, states_[b])) {
                int a = index(st);
                if (a >= 0)
                    trip.emplace_back(a, b, c);
            }
        }
        SpMat M(size(), size());
        M.setFromTriplets(trip.begin(), trip.end());
        return modes_.emplace(key, std::move(M)).first->second;
    }

    // sum over all j of v(j); homogeneous pieces of it are single modes
    SpMat vertex_matrix(const BasisState& v) const
    {
        {
            std::lock_guard lock(mu_);
            auto it = vertex_.find(v);
            if (it != vertex_.end())
                return it->second;
        }
        SpMat M;
        if (v.empty()) {
            M = identity();
        } else {
            Mode x = v.front();
            BasisState w(v.begin() + 1, v.end());
            SpMat Mw = vertex_matrix(w);
            double eps = (spec_.is_super() && state_parity(spec_, w)) ? -1.0 : 1.0;
            M = SpMat(size(), size());
            int p = x.n;
            int span = cap2_ / 2 + 2;
            for (int n = -1; n >= -span; --n) {
                double c = gbinom(-n - 1, p - 1);
                if (c != 0.0)
                    M += c * (mode_matrix(x.sp, n) * Mw);
            }
            for (int n = 0; n <= span; ++n) {
                double c = gbinom(-n - 1, p - 1);
                const SpMat& X = mode_matrix(x.sp, n);
                if (X.nonZeros())
                    M += (eps * c) * (Mw * X);
            }
            M.prune(cplx(0.0));
        }
        std::lock_guard lock(mu_);
        return vertex_.emplace(v, std::move(M)).first->second;
    }

    SpMat vertex_matrix(const AlgebraElement& v) const
    {
        SpMat M(size(), size());
        for (auto& [b, c] : v)
            M += c * vertex_matrix(b);
        return M;
    }

private:
    void enumerate(const std::vector<Mode>& slots, std::size_t from, int lev2, BasisState& cur, std::size_t budget)
    {
        states_.push_back(cur);
        if (states_.size() > budget)
            throw CapTooLarge("basis exceeds the memory budget");
        for (std::size_t i = from; i < slots.size(); ++i) {
            int l = spec_.level2(slots[i].sp, slots[i].n);
            if (lev2 + l > cap2_)
                continue;
            cur.push_back(slots[i]);
            // bosons may repeat a slot, fermions may not
            enumerate(slots, spec_.is_super() ? i + 1 : i, lev2 + l, cur, budget);
            cur.pop_back();
        }
    }

    AlgebraSpec spec_;
    std::vector<double> alpha_;
    int cap2_;
    std::vector<BasisState> states_;
    std::map<BasisState, int> index_;
    std::vector<int> level2_, charge_, parity_;
    double hw_ = 0, j0_ = 0;
    mutable std::mutex mu_;
    mutable std::map<std::pair<int, int>, SpMat> modes_;
    mutable std::map<BasisState, SpMat> vertex_;
};

inline std::shared_ptr<const ModuleSpace> enumerate_basis(const AlgebraSpec& spec, std::vector<double> sector, double L)
{
    if (L < 0)
        throw ConfigError("level cap must be >= 0");
    return std::make_shared<const ModuleSpace>(spec, std::move(sector), (int)std::floor(2 * L + 1e-9));
}

// ---------------------------------------------------------------- traces

// Trace data: grading L_h = L(0) + eta J(0), automorphism
// e^{2 pi i (z + gamma) J(0)} (and sigma), weight q^{L_h - c/24}.
struct JacobiParams {
    cplx z{0.0, 0.0};
    ModularPoint tau;
    cplx gamma{0.0, 0.0};
    cplx eta{0.0, 0.0};
    bool sigma = false;
    std::optional<bool> supertrace; // default: on for superalgebras

    cplx zeta() const { return e2pi(z); }
    bool use_supertrace(const AlgebraSpec& s) const { return supertrace.value_or(s.is_super()); }
};

inline cplx frame_grade(const ModuleSpace& W, int i, cplx eta) { return W.weight(i) + eta * W.current_eigenvalue(i); }

inline std::vector<cplx> trace_weights(const ModuleSpace& W, const JacobiParams& p)
{
    bool st = p.use_supertrace(W.spec());
    double c24 = W.spec().central_charge() / 24.0;
    std::vector<cplx> d(W.size());
    for (int i = 0; i < W.size(); ++i) {
        double sg = 1.0;
        if (W.parity(i) && (st != p.sigma))
            sg = -1.0;
        cplx J = W.current_eigenvalue(i);
        d[i] = sg * e2pi((p.z + p.gamma) * J) * e2pi(p.tau.tau * (frame_grade(W, i, p.eta) - c24));
    }
    return d;
}

// Y(x^{L_h} v, x) with x = e^{2 pi i w}: the vertex matrix conjugated by x^{L_h}
inline SpMat insertion_matrix(const ModuleSpace& W, const AlgebraElement& v, cplx w, cplx eta)
{
    SpMat M = W.vertex_matrix(v);
    cplx z = two_pi_i * w;
    for (int k = 0; k < M.outerSize(); ++k)
        for (SpMat::InnerIterator it(M, k); it; ++it) {
            cplx d = frame_grade(W, (int)it.row(), eta) - frame_grade(W, (int)it.col(), eta);
            it.valueRef() *= std::exp(z * d);
        }
    return M;
}

// The grade-shift -shift component of v's vertex matrix in the frame eta:
// shift = lambda gives o_lambda(v) = v(wt_h - 1 + lambda).
inline SpMat zero_mode(const ModuleSpace& W, const AlgebraElement& v, double shift, cplx eta = 0.0)
{
    SpMat M = W.vertex_matrix(v);
    std::vector<Eigen::Triplet<cplx>> trip;
    for (int k = 0; k < M.outerSize(); ++k)
        for (SpMat::InnerIterator it(M, k); it; ++it) {
            cplx d = frame_grade(W, (int)it.row(), eta) - frame_grade(W, (int)it.col(), eta);
            if (std::abs(d + shift) < 1e-9)
                trip.emplace_back((int)it.row(), (int)it.col(), it.value());
        }
    SpMat Z(W.size(), W.size());
    Z.setFromTriplets(trip.begin(), trip.end());
    return Z;
}

inline cplx graded_trace(const ModuleSpace& W, const std::vector<SpMat>& ops, const JacobiParams& p)
{
    auto d = trace_weights(W, p);
    CompensatedSum<cplx> s;
    if (ops.empty()) {
        for (int i = 0; i < W.size(); ++i)
            s.add(d[i]);
        return s.value();
    }
    SpMat A = ops.front();
    for (std::size_t k = 1; k + 1 < ops.size(); ++k)
        A = (A * ops[k]).pruned();
    if (ops.size() == 1) {
        for (int i = 0; i < W.size(); ++i)
            s.add(A.coeff(i, i) * d[i]);
        return s.value();
    }
    // diagonal of A * B without forming the product
    const SpMat& B = ops.back();
    Eigen::SparseMatrix<cplx, Eigen::RowMajor> Ar(A);
    for (int i = 0; i < W.size(); ++i) {
        cplx acc = 0;
        for (Eigen::SparseMatrix<cplx, Eigen::RowMajor>::InnerIterator it(Ar, i); it; ++it)
            acc += it.value() * B.coeff((int)it.col(), i);
        s.add(acc * d[i]);
    }
    return s.value();
}

struct Insertion {
    AlgebraElement v;
    cplx w;
};

// An operator placed after every vertex operator in the trace: the
// grade-shift -shift component of v (a zero mode when shift is integral).
struct InnerOperator {
    AlgebraElement v;
    double shift = 0;
};

struct NPointRequest {
    std::shared_ptr<const ModuleSpace> module;
    std::vector<Insertion> insertions;
    JacobiParams params;
    Truncation truncation;
    std::vector<InnerOperator> inner;
};

inline void check_nested(const std::vector<Insertion>& ins, const ModularPoint& tau)
{
    double prev = 0;
    for (auto& x : ins) {
        if (!(x.w.imag() > prev))
            throw DomainViolation("insertions must satisfy 0 < Im w_1 < ... < Im w_n < Im tau");
        prev = x.w.imag();
    }
    if (!ins.empty() && !(prev < tau.tau.imag()))
        throw DomainViolation("insertions must satisfy 0 < Im w_1 < ... < Im w_n < Im tau");
}

// Direct truncated trace of Y(x_1^{L_h} v_1, x_1) ... Y(x_n^{L_h} v_n, x_n)
// followed by the inner operators, against the trace weights.
inline cplx npoint_oracle(const NPointRequest& r)
{
    if (!r.module)
        throw ConfigError("request has no module");
    check_nested(r.insertions, r.params.tau);
    const ModuleSpace& W = *r.module;
    std::vector<SpMat> ops;
    for (auto& x : r.insertions) {
        if (x.v.empty())
            return 0.0;
        ops.push_back(insertion_matrix(W, x.v, x.w, r.params.eta));
    }
    for (auto& o : r.inner) {
        if (o.v.empty())
            return 0.0;
        ops.push_back(zero_mode(W, o.v, o.shift, r.params.eta));
    }
    return graded_trace(W, ops, r.params);
}

} // namespace jrl
