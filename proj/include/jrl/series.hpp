#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <type_traits>
#include <vector>

namespace jrl {

template <class T>
struct is_complex : std::false_type {};
template <class T>
struct is_complex<std::complex<T>> : std::true_type {};

// Neumaier summation; the order of add() calls is the only thing that
// determines the result, which keeps parallel callers reproducible.
template <class T>
class CompensatedSum {
public:
    void add(T x)
    {
        if constexpr (is_complex<T>::value) {
            re_.add(x.real());
            im_.add(x.imag());
        } else if constexpr (std::is_floating_point_v<T>) {
            T t = s_ + x;
            if (std::abs(s_) >= std::abs(x))
                c_ += (s_ - t) + x;
            else
                c_ += (x - t) + s_;
            s_ = t;
        } else {
            s_ += x;
        }
    }
    T value() const
    {
        if constexpr (is_complex<T>::value)
            return T(re_.value(), im_.value());
        else if constexpr (std::is_floating_point_v<T>)
            return s_ + c_;
        else
            return s_;
    }

private:
    struct Empty {};
    using Part = std::conditional_t<is_complex<T>::value, CompensatedSum<double>, Empty>;
    [[no_unique_address]] Part re_{}, im_{};
    T s_{}, c_{};
};

// Truncated Laurent series sum_{k=val}^{prec} c_k x^k.  Terms above prec
// are unknown and never produced; every operation keeps that contract.
template <class T>
class LaurentSeries {
public:
    LaurentSeries() = default;
    explicit LaurentSeries(int prec) : val_(prec + 1), prec_(prec) {}
    LaurentSeries(int val, std::vector<T> coeffs, int prec) : val_(val), prec_(prec), c_(std::move(coeffs))
    {
        clip();
    }

    static LaurentSeries monomial(T c, int k, int prec)
    {
        if (k > prec)
            return LaurentSeries(prec);
        return LaurentSeries(k, {c}, prec);
    }

    int valuation() const { return c_.empty() ? prec_ + 1 : val_; }
    int precision() const { return prec_; }
    std::size_t size() const { return c_.size(); }
    bool is_zero() const { return c_.empty(); }

    T coeff(int k) const
    {
        if (k < val_ || k - val_ >= static_cast<int>(c_.size()))
            return T{};
        return c_[k - val_];
    }
    void set_coeff(int k, T v)
    {
        if (k > prec_)
            return;
        if (c_.empty()) {
            val_ = k;
            c_.push_back(v);
            return;
        }
        if (k < val_) {
            c_.insert(c_.begin(), val_ - k, T{});
            val_ = k;
        }
        if (k - val_ >= static_cast<int>(c_.size()))
            c_.resize(k - val_ + 1, T{});
        c_[k - val_] = v;
    }

    LaurentSeries truncated(int prec) const
    {
        LaurentSeries r = *this;
        r.prec_ = std::min(prec, prec_);
        r.clip();
        return r;
    }

    LaurentSeries& operator+=(const LaurentSeries& o)
    {
        int p = std::min(prec_, o.prec_);
        LaurentSeries r(p);
        int lo = std::min(valuation(), o.valuation());
        int hi = std::min(p, std::max(val_ + (int)c_.size(), o.val_ + (int)o.c_.size()) - 1);
        for (int k = lo; k <= hi; ++k)
            r.set_coeff(k, coeff(k) + o.coeff(k));
        r.normalize();
        *this = std::move(r);
        return *this;
    }
    LaurentSeries& operator-=(const LaurentSeries& o) { return *this += (-o); }
    LaurentSeries operator-() const
    {
        LaurentSeries r = *this;
        for (auto& x : r.c_)
            x = -x;
        return r;
    }
    LaurentSeries& operator*=(const T& s)
    {
        for (auto& x : c_)
            x *= s;
        normalize();
        return *this;
    }

    friend LaurentSeries operator+(LaurentSeries a, const LaurentSeries& b) { return a += b; }
    friend LaurentSeries operator-(LaurentSeries a, const LaurentSeries& b) { return a -= b; }
    friend LaurentSeries operator*(LaurentSeries a, const T& s) { return a *= s; }
    friend LaurentSeries operator*(const T& s, LaurentSeries a) { return a *= s; }

    // Relative precision is what survives a product: a known to x^pa with
    // valuation va times b gives x^{min(pa+vb, pb+va)}.
    friend LaurentSeries operator*(const LaurentSeries& a, const LaurentSeries& b)
    {
        int va = a.valuation(), vb = b.valuation();
        int p = std::min(a.prec_ + vb, b.prec_ + va);
        if (a.is_zero() || b.is_zero())
            return LaurentSeries(p);
        int lo = va + vb;
        std::vector<T> out;
        if (p >= lo)
            out.assign(p - lo + 1, T{});
        for (std::size_t i = 0; i < a.c_.size(); ++i) {
            for (std::size_t j = 0; j < b.c_.size(); ++j) {
                int k = lo + (int)(i + j);
                if (k > p)
                    break;
                out[k - lo] += a.c_[i] * b.c_[j];
            }
        }
        return LaurentSeries(lo, std::move(out), p);
    }
    LaurentSeries& operator*=(const LaurentSeries& o) { return *this = *this * o; }

    // Inverse of a unit: the leading coefficient must be invertible.
    LaurentSeries inverse() const
    {
        if (is_zero())
            throw std::domain_error("inverse of a zero series");
        int v = val_;
        int rel = prec_ - v; // relative precision
        std::vector<T> b(rel + 1, T{});
        T a0 = c_[0];
        if (a0 == T{})
            throw std::domain_error("series leading coefficient vanishes");
        b[0] = T(1) / a0;
        for (int n = 1; n <= rel; ++n) {
            T s{};
            for (int k = 1; k <= n; ++k)
                s += coeff(v + k) * b[n - k];
            b[n] = -s / a0;
        }
        return LaurentSeries(-v, std::move(b), -v + rel);
    }

    LaurentSeries pow(int n) const
    {
        if (n < 0)
            return inverse().pow(-n);
        LaurentSeries r = monomial(T(1), 0, 1 << 28);
        LaurentSeries base = *this;
        while (n > 0) {
            if (n & 1)
                r = r * base;
            n >>= 1;
            if (n)
                base = base * base;
        }
        return r;
    }

    // x -> x^k for k >= 1.
    LaurentSeries dilate(int k) const
    {
        LaurentSeries r(prec_ * k + (k - 1));
        for (std::size_t i = 0; i < c_.size(); ++i)
            if (c_[i] != T{})
                r.set_coeff((val_ + (int)i) * k, c_[i]);
        if (r.c_.empty())
            r.val_ = r.prec_ + 1;
        return r;
    }

    // f(s(x)) for s with positive valuation; negative powers of f use s^{-1}.
    LaurentSeries substitute(const LaurentSeries& s) const
    {
        int vs = s.valuation();
        if (vs < 1 || s.is_zero())
            throw std::domain_error("substitution needs positive valuation");
        int kmin = std::min(valuation(), 0);
        int p = std::min((prec_ + 1) * vs - 1, kmin * vs + s.prec_ - vs);
        LaurentSeries acc(p);
        for (std::size_t i = 0; i < c_.size(); ++i)
            if (c_[i] != T{})
                acc += s.pow(val_ + (int)i).truncated(p) * c_[i];
        return acc.truncated(p);
    }

    // Evaluation in ascending exponent order with compensated summation.
    template <class X>
    auto evaluate(const X& x) const
    {
        using R = decltype(T{} * X{});
        CompensatedSum<R> sum;
        if (c_.empty())
            return sum.value();
        X p = val_ >= 0 ? ipow(x, val_) : X(1) / ipow(x, -val_);
        for (std::size_t i = 0; i < c_.size(); ++i) {
            sum.add(c_[i] * p);
            p *= x;
        }
        return sum.value();
    }

    const std::vector<T>& coefficients() const { return c_; }

private:
    template <class X>
    static X ipow(X x, int n)
    {
        X r(1);
        while (n > 0) {
            if (n & 1)
                r *= x;
            x *= x;
            n >>= 1;
        }
        return r;
    }
    void clip()
    {
        if (val_ + (int)c_.size() - 1 > prec_) {
            int keep = prec_ - val_ + 1;
            c_.resize(std::max(keep, 0));
        }
        normalize();
    }
    void normalize()
    {
        std::size_t lead = 0;
        while (lead < c_.size() && c_[lead] == T{})
            ++lead;
        if (lead == c_.size()) {
            c_.clear();
            val_ = prec_ + 1;
            return;
        }
        if (lead) {
            c_.erase(c_.begin(), c_.begin() + lead);
            val_ += (int)lead;
        }
        while (!c_.empty() && c_.back() == T{})
            c_.pop_back();
    }

    int val_ = 1;
    int prec_ = 0;
    std::vector<T> c_;
};

using QLaurentSeries = LaurentSeries<std::complex<double>>;

} // namespace jrl
