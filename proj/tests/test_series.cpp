#include <gtest/gtest.h>

#include <jrl/series.hpp>
#include <jrl/specfun.hpp>

using jrl::LaurentSeries;
using jrl::QLaurentSeries;
using jrl::rational;
using cplx = std::complex<double>;

TEST(Series, AddKeepsSmallerPrecision)
{
    QLaurentSeries a(0, {1.0, 2.0, 3.0}, 5);
    QLaurentSeries b(-1, {1.0, 1.0}, 3);
    auto c = a + b;
    EXPECT_EQ(c.precision(), 3);
    EXPECT_EQ(c.valuation(), -1);
    EXPECT_EQ(c.coeff(0), cplx(2.0));
    EXPECT_EQ(c.coeff(2), cplx(3.0));
}

TEST(Series, ProductPrecisionIsRelative)
{
    // (x + O(x^4)) * (x^-2 + O(x^2)) is known through x^1
    LaurentSeries<rational> a(1, {1}, 3);
    LaurentSeries<rational> b(-2, {1}, 1);
    auto c = a * b;
    EXPECT_EQ(c.precision(), 1);
    EXPECT_EQ(c.coeff(-1), rational(1));
}

TEST(Series, InverseOfGeometric)
{
    LaurentSeries<rational> a(0, {1, -1}, 10);
    auto inv = a.inverse();
    for (int k = 0; k <= 10; ++k)
        EXPECT_EQ(inv.coeff(k), rational(1));
    auto one = a * inv;
    EXPECT_EQ(one.coeff(0), rational(1));
    for (int k = 1; k <= 10; ++k)
        EXPECT_EQ(one.coeff(k), rational(0));
}

TEST(Series, InverseOfPoleShiftsValuation)
{
    LaurentSeries<rational> a(-2, {2, 1}, 4);
    auto inv = a.inverse();
    EXPECT_EQ(inv.valuation(), 2);
    auto p = a * inv;
    EXPECT_EQ(p.coeff(0), rational(1));
    for (int k = 1; k <= p.precision(); ++k)
        EXPECT_EQ(p.coeff(k), rational(0));
}

TEST(Series, SubstituteExpOfLog)
{
    // exp(log(1+x)) = 1 + x as a check on composition
    int P = 12;
    std::vector<rational> ex(P + 1), lg(P);
    rational f = 1;
    for (int k = 0; k <= P; ++k) {
        if (k)
            f /= k;
        ex[k] = f;
    }
    for (int k = 1; k <= P; ++k)
        lg[k - 1] = rational(k % 2 ? 1 : -1, k);
    LaurentSeries<rational> E(0, ex, P), L(1, lg, P);
    auto r = E.substitute(L);
    EXPECT_EQ(r.coeff(0), rational(1));
    EXPECT_EQ(r.coeff(1), rational(1));
    for (int k = 2; k <= r.precision(); ++k)
        EXPECT_EQ(r.coeff(k), rational(0)) << k;
}

TEST(Series, PowAndDilate)
{
    LaurentSeries<rational> a(0, {1, 1}, 6);
    auto c = a.pow(3);
    EXPECT_EQ(c.coeff(2), rational(3));
    EXPECT_EQ(c.coeff(3), rational(1));
    EXPECT_EQ(c.coeff(4), rational(0));
    auto d = a.dilate(2);
    EXPECT_EQ(d.coeff(2), rational(1));
    EXPECT_EQ(d.coeff(1), rational(0));
    auto ai = a.pow(-1);
    EXPECT_EQ(ai.coeff(5), rational(-1));
}

TEST(Series, EvaluateMatchesClosedForm)
{
    std::vector<cplx> c(30, 1.0);
    QLaurentSeries g(0, c, 29);
    cplx x(0.1, 0.2);
    cplx want = (1.0 - std::pow(x, 30)) / (1.0 - x);
    EXPECT_LT(std::abs(g.evaluate(x) - want), 1e-15);
}

TEST(Series, ZeroSeriesBehaves)
{
    QLaurentSeries z(5);
    EXPECT_TRUE(z.is_zero());
    auto s = z + QLaurentSeries(0, {1.0}, 3);
    EXPECT_EQ(s.precision(), 3);
    EXPECT_EQ(s.coeff(0), cplx(1.0));
    EXPECT_TRUE((z * QLaurentSeries(0, {1.0}, 3)).is_zero());
}
