#include <gtest/gtest.h>

#include <jrl/voa.hpp>

using namespace jrl;

namespace {

const ModularPoint T05{cplx(0, 0.5)};

cplx coeff(const AlgebraElement& e, const BasisState& b)
{
    auto it = e.find(b);
    return it == e.end() ? cplx(0) : it->second;
}

double dist(const AlgebraElement& a, const AlgebraElement& b)
{
    AlgebraElement d = a;
    add_to(d, b, -1.0);
    return norm(d);
}

double partitions(int n)
{
    std::vector<double> p(n + 1, 0.0);
    p[0] = 1;
    for (int k = 1; k <= n; ++k)
        for (int m = k; m <= n; ++m)
            p[m] += p[m - k];
    return p[n];
}

} // namespace

TEST(Basis, HeisenbergPartitionCounts)
{
    auto W = enumerate_basis(AlgebraSpec::heisenberg(1), {0.0}, 4);
    auto d = W->level_dimensions();
    std::vector<int> want{1, 1, 2, 3, 5};
    for (int l = 0; l <= 4; ++l) {
        EXPECT_EQ(d[2 * l], want[l]);
        if (l < 4)
            EXPECT_EQ(d[2 * l + 1], 0);
    }
}

TEST(Basis, RealFermionDistinctParts)
{
    auto W = enumerate_basis(AlgebraSpec::real_fermion(), {}, 2);
    auto d = W->level_dimensions();
    // levels 0, 1/2, 1, 3/2, 2
    EXPECT_EQ(d[0], 1);
    EXPECT_EQ(d[1], 1);
    EXPECT_EQ(d[2], 0);
    EXPECT_EQ(d[3], 1);
    EXPECT_EQ(d[4], 1);
}

TEST(Basis, CapZeroIsVacuum)
{
    EXPECT_EQ(enumerate_basis(AlgebraSpec::heisenberg(2), {}, 0)->size(), 1);
    EXPECT_EQ(enumerate_basis(AlgebraSpec::complex_fermion(), {}, 0)->size(), 1);
    EXPECT_THROW(enumerate_basis(AlgebraSpec::heisenberg(1), {}, 40), CapTooLarge);
}

TEST(Basis, RankTwoCountsAreConvolvedPartitions)
{
    auto W = enumerate_basis(AlgebraSpec::heisenberg(2), {0.0, 0.0}, 6);
    auto d = W->level_dimensions();
    for (int l = 0; l <= 6; ++l) {
        double want = 0;
        for (int k = 0; k <= l; ++k)
            want += partitions(k) * partitions(l - k);
        EXPECT_EQ(d[2 * l], want);
    }
}

TEST(Modes, Examples)
{
    auto H = AlgebraSpec::heisenberg(1);
    auto a1 = parse_state(H, "a");
    auto r = apply_mode(H, {}, 0, 1, a1);
    EXPECT_EQ(r.size(), 1u);
    EXPECT_EQ(coeff(r, {}), cplx(1.0));
    auto sec = apply_mode(H, {0.7}, 0, 0, parse_state(H, "a(-2)a(-1)"));
    EXPECT_EQ(coeff(sec, {{0, 1}, {0, 2}}), cplx(0.7));
    auto R = AlgebraSpec::real_fermion();
    auto b = apply_mode(R, {}, 0, 0, parse_state(R, "b"));
    EXPECT_EQ(coeff(b, {}), cplx(1.0));
}

TEST(Modes, WeightCharge)
{
    auto H = AlgebraSpec::heisenberg(1);
    auto wc = weight_charge(H, parse_state(H, "a(-1)a(-2)").begin()->first);
    EXPECT_EQ(wc.weight, 3.0);
    EXPECT_EQ(wc.charge, 0);
    EXPECT_EQ(wc.parity, 0);
    auto C = AlgebraSpec::complex_fermion();
    auto st = parse_state(C, "b(-1)b(-2)c(-1)").begin()->first;
    EXPECT_EQ(weight_charge(C, st).charge, 1);
    EXPECT_EQ(weight_charge(C, st).parity, 1);
    EXPECT_EQ(weight_charge(C, st).weight, 0.5 + 1.5 + 0.5);
    auto v = weight_charge(C, BasisState{});
    EXPECT_EQ(v.weight, 0.0);
    EXPECT_EQ(v.charge, 0);
    EXPECT_EQ(v.parity, 0);
}

TEST(Modes, CurrentZeroModeCountsCharge)
{
    auto C = AlgebraSpec::complex_fermion();
    auto J = parse_state(C, "J");
    for (auto s : {"b", "c", "b(-2)b(-1)c(-1)", "c(-3)"}) {
        auto st = parse_state(C, s);
        auto j0 = round_mode(C, {}, J, 0, st);
        int q = weight_charge(C, st.begin()->first).charge;
        EXPECT_LT(dist(j0, scaled(st, double(q))), 1e-14) << s;
    }
}

TEST(Modes, CommutatorsExactOnTruncatedModule)
{
    auto W = enumerate_basis(AlgebraSpec::heisenberg(2), {0.3, -0.4}, 6);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int m = -4; m <= 4; ++m)
                for (int n = -4; n <= 4; ++n) {
                    const SpMat& A = W->mode_matrix(i, m);
                    const SpMat& B = W->mode_matrix(j, n);
                    SpMat C = A * B - B * A;
                    double want = (i == j && m + n == 0) ? m : 0.0;
                    // compare on states whose images stay below the cap
                    for (int b = 0; b < W->size(); ++b) {
                        if (W->level2(b) + 2 * (std::abs(m) + std::abs(n)) > W->cap2())
                            continue;
                        for (int a = 0; a < W->size(); ++a)
                            EXPECT_EQ(C.coeff(a, b), cplx(a == b ? want : 0.0));
                    }
                }
}

TEST(Modes, AnticommutatorsExactOnTruncatedModule)
{
    auto W = enumerate_basis(AlgebraSpec::complex_fermion(), {}, 5);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int m = -4; m <= 3; ++m)
                for (int n = -4; n <= 3; ++n) {
                    SpMat C = W->mode_matrix(i, m) * W->mode_matrix(j, n) + W->mode_matrix(j, n) * W->mode_matrix(i, m);
                    double want = (i != j && m + n == -1) ? 1.0 : 0.0;
                    for (int b = 0; b < W->size(); ++b) {
                        if (W->level2(b) + 2 * (std::abs(m) + std::abs(n) + 2) > W->cap2())
                            continue;
                        for (int a = 0; a < W->size(); ++a)
                            EXPECT_EQ(C.coeff(a, b), cplx(a == b ? want : 0.0));
                    }
                }
}

TEST(Modes, WeightBookkeeping)
{
    auto C = AlgebraSpec::complex_fermion(1);
    auto W = enumerate_basis(C, {}, 4);
    for (int sp = 0; sp < 2; ++sp)
        for (int j = -3; j <= 3; ++j) {
            const SpMat& M = W->mode_matrix(sp, j);
            // wt(x) - j - 1 in the shifted grading
            double wt = C.level2(sp, 1) / 2.0;
            for (int k = 0; k < M.outerSize(); ++k)
                for (SpMat::InnerIterator it(M, k); it; ++it)
                    EXPECT_EQ(W->weight((int)it.row()) - W->weight((int)it.col()), wt - j - 1);
        }
}

TEST(Modes, CasimirMatchesLevel)
{
    // L(0) = alpha^2/2 + sum_{n>0} a(-n) a(n)
    auto W = enumerate_basis(AlgebraSpec::heisenberg(1), {0.6}, 8);
    SpMat L = 0.18 * W->identity();
    for (int n = 1; n <= 9; ++n)
        L += W->mode_matrix(0, -n) * W->mode_matrix(0, n);
    for (int a = 0; a < W->size(); ++a)
        for (int b = 0; b < W->size(); ++b)
            EXPECT_NEAR(std::abs(L.coeff(a, b) - (a == b ? W->weight(a) : 0.0)), 0.0, 1e-14);
}

TEST(ZeroMode, Examples)
{
    auto H = AlgebraSpec::heisenberg(1);
    auto W = enumerate_basis(H, {0.7}, 6);
    auto J = parse_state(H, "J");
    SpMat o = zero_mode(*W, J, 0);
    SpMat want = 0.7 * W->identity();
    EXPECT_LT((SpMat(o - want)).norm(), 1e-14);
    for (int l : {1, 2, -1}) {
        SpMat ol = zero_mode(*W, J, l);
        EXPECT_LT((SpMat(ol - W->mode_matrix(0, l))).norm(), 1e-14);
    }
    auto R = AlgebraSpec::real_fermion();
    auto WR = enumerate_basis(R, {}, 4);
    EXPECT_EQ(zero_mode(*WR, parse_state(R, "b"), 0).nonZeros(), 0);
    EXPECT_EQ(zero_mode(*WR, parse_state(R, "b"), 1).nonZeros(), 0);
}

TEST(SquareMode, WeightOneZeroModeIsRoundZero)
{
    auto H = AlgebraSpec::heisenberg(2);
    auto v = parse_state(H, "a1");
    auto y = parse_state(H, "a1(-2)a2(-1)");
    EXPECT_LT(dist(square_mode(H, v, 0, y), round_mode(H, {}, v, 0, y)), 1e-14);
}

TEST(SquareMode, BinomialSumIdentity)
{
    // sum_i C(k + wt - 1, i) v(i) = sum_m k^m/m! v[m]
    auto C = AlgebraSpec::complex_fermion(1);
    auto v = parse_state(C, "J");
    for (auto ys : {"b(-2)c(-1)", "b(-1)", "c(-3)c(-1)"}) {
        auto y = parse_state(C, ys);
        for (int k : {1, 2}) {
            AlgebraElement lhs, rhs;
            for (int i = 0; i <= 8; ++i)
                add_to(lhs, round_mode(C, {}, v, i, y), gbinom(k, i));
            double f = 1;
            for (int m = 0; m <= 8; ++m) {
                if (m)
                    f *= double(k) / m;
                add_to(rhs, square_mode(C, v, m, y), f);
            }
            EXPECT_LT(dist(lhs, rhs), 1e-10) << ys << " " << k;
        }
    }
}

TEST(SquareMode, VacuumActsAsIdentity)
{
    auto H = AlgebraSpec::heisenberg(1);
    auto y = parse_state(H, "a(-2)a(-1)");
    EXPECT_LT(dist(square_mode(H, vacuum(), -1, y), y), 1e-14);
    for (int m : {-3, -2, 0, 1, 2})
        EXPECT_TRUE(square_mode(H, vacuum(), m, y).empty()) << m;
}

TEST(SquareMode, LeadingRoundMode)
{
    // v[-p] w = v(-p) w + higher round modes
    auto H = AlgebraSpec::heisenberg(1);
    auto v = parse_state(H, "a");
    auto sq = square_mode(H, v, -2, vacuum());
    EXPECT_EQ(coeff(sq, {{0, 2}}), cplx(1.0));
    // z-coefficient of e^z e^{(e^z-1)L(-1)} a is a + L(-1)a
    EXPECT_NEAR(std::abs(coeff(sq, {{0, 1}}) - 1.0), 0.0, 1e-14);
}

TEST(SquareMode, ShiftedSeries)
{
    auto C = AlgebraSpec::complex_fermion(1);
    auto v = parse_state(C, "b");
    auto y = parse_state(C, "c(-2)b(-1)c(-1)");
    EXPECT_LT(dist(shifted_square_mode(C, v, 0, y, 0.0, 1.0), square_mode(C, v, 0, y)), 1e-15);
    for (double lam : {1.0, 2.0}) {
        for (int n : {-1, 0, 1}) {
            AlgebraElement rhs;
            double f = 1;
            for (int m = 0; m <= 10; ++m) {
                if (m)
                    f *= lam / m;
                add_to(rhs, square_mode(C, v, n + m, y), f);
            }
            EXPECT_LT(dist(shifted_square_mode(C, v, n, y, lam, 1.0), rhs), 1e-10) << lam << " " << n;
        }
    }
}

TEST(Trace, HeisenbergPartitionFunction)
{
    auto W = enumerate_basis(AlgebraSpec::heisenberg(1), {0.0}, 10);
    JacobiParams p;
    p.tau = T05;
    cplx q = T05.nome();
    cplx want = 0;
    for (int n = 0; n <= 10; ++n)
        want += partitions(n) * std::pow(q, n);
    want *= e2pi(-T05.tau / 24.0);
    EXPECT_LT(std::abs(graded_trace(*W, {}, p) - want), 1e-15);
}

TEST(Trace, SectorFactor)
{
    auto H = AlgebraSpec::heisenberg(1);
    auto W0 = enumerate_basis(H, {0.0}, 8);
    auto Wa = enumerate_basis(H, {0.7}, 8);
    JacobiParams p;
    p.tau = T05;
    p.z = cplx(0.13, 0.02);
    cplx ratio = graded_trace(*Wa, {}, p) / graded_trace(*W0, {}, p);
    cplx want = e2pi(p.z * 0.7) * e2pi(T05.tau * (0.49 / 2));
    EXPECT_LT(std::abs(ratio - want), 1e-14);
}

TEST(Trace, RealFermionSupertrace)
{
    auto W = enumerate_basis(AlgebraSpec::real_fermion(), {}, 6);
    JacobiParams p;
    p.tau = T05;
    // q^{-1/48} prod (1 - q^{n-1/2}) truncated at level 6
    QLaurentSeries prod(0, {1.0}, 12);
    for (int n = 1; 2 * n - 1 <= 12; ++n) {
        QLaurentSeries f = QLaurentSeries::monomial(1.0, 0, 12) + QLaurentSeries::monomial(-1.0, 2 * n - 1, 12);
        prod *= f;
    }
    cplx want = prod.evaluate(e2pi(T05.tau / 2.0)) * e2pi(-T05.tau / 48.0);
    EXPECT_LT(std::abs(graded_trace(*W, {}, p) - want), 1e-15);
}

TEST(Trace, CommutatorHasNoTrace)
{
    auto W = enumerate_basis(AlgebraSpec::complex_fermion(), {}, 6);
    JacobiParams p;
    p.tau = T05;
    p.z = cplx(0.2, 0.05);
    SpMat A = W->mode_matrix(0, -2) * W->mode_matrix(1, 1);
    SpMat B = W->mode_matrix(1, -1) * W->mode_matrix(0, 0) + W->mode_matrix(0, -3) * W->mode_matrix(1, 2);
    cplx ab = graded_trace(*W, {A, B}, p), ba = graded_trace(*W, {B, A}, p);
    EXPECT_LT(std::abs(ab - ba), 1e-15);
    EXPECT_GT(std::abs(ab), 1e-6);
}

TEST(Trace, LocalityProbe)
{
    // <1|Y(x1^L0 u, x1) Y(x2^L0 v, x2)|1> against the closed forms
    cplx w1(0.1, 0.05), w2(0.3, 0.45);
    cplx x1 = e2pi(w1), x2 = e2pi(w2);
    auto H = AlgebraSpec::heisenberg(1);
    auto V = enumerate_basis(H, {}, 16);
    auto J = parse_state(H, "J");
    SpMat P = insertion_matrix(*V, J, w1, 0.0) * insertion_matrix(*V, J, w2, 0.0);
    EXPECT_LT(std::abs(P.coeff(0, 0) - x1 * x2 / ((x1 - x2) * (x1 - x2))), 1e-10);
    auto C = AlgebraSpec::complex_fermion();
    auto F = enumerate_basis(C, {}, 16);
    SpMat Q = insertion_matrix(*F, parse_state(C, "b"), w1, 0.0) * insertion_matrix(*F, parse_state(C, "c"), w2, 0.0);
    EXPECT_LT(std::abs(Q.coeff(0, 0) - std::sqrt(x1 * x2) / (x1 - x2)), 1e-10);
}

TEST(Oracle, ZeroPointIsPartitionFunction)
{
    NPointRequest r;
    r.module = enumerate_basis(AlgebraSpec::heisenberg(1), {0.4}, 8);
    r.params.tau = T05;
    EXPECT_EQ(npoint_oracle(r), graded_trace(*r.module, {}, r.params));
}

TEST(Oracle, OnePointOfCurrent)
{
    auto H = AlgebraSpec::heisenberg(1);
    NPointRequest r;
    r.module = enumerate_basis(H, {0.7}, 10);
    r.params.tau = T05;
    r.params.z = cplx(0.1, 0.03);
    cplx Z = npoint_oracle(r);
    r.insertions = {{parse_state(H, "J"), cplx(0.2, 0.1)}};
    cplx one = npoint_oracle(r);
    EXPECT_LT(std::abs(one - 0.7 * Z), 1e-13);
    r.insertions = {{parse_state(H, "a(-2)a(-1)"), cplx(0.2, 0.1)}};
    cplx f1 = npoint_oracle(r);
    r.insertions[0].w = cplx(-0.37, 0.31);
    EXPECT_LT(std::abs(npoint_oracle(r) - f1), 1e-12 * std::abs(f1));
    r.insertions = {{parse_state(H, "J"), cplx(0.2, 0.3)}, {parse_state(H, "J"), cplx(0.2, 0.1)}};
    EXPECT_THROW(npoint_oracle(r), DomainViolation);
}
