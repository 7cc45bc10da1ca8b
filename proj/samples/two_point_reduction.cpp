// Reduces a Heisenberg two-point function and a complex-fermion
// three-point function, printing the ledger summary next to the truncated
// trace.
#include <cstdio>

#include <jrl/jrl.hpp>

namespace {

void show(const char* label, const jrl::NPointRequest& r)
{
    auto red = jrl::reduce_full(r);
    jrl::cplx direct = jrl::npoint_oracle(r);
    std::printf("%s\n  reduced  %.12f%+.12fi\n  trace    %.12f%+.12fi\n  KZ residual %.2e\n", label,
                red.value.real(), red.value.imag(), direct.real(), direct.imag(), jrl::kz_residual(*red.ledger));
    for (auto& t : red.ledger->terms)
        std::printf("  term k=%d m=%d %-10s index %d value %.6f%+.6fi\n", t.k, t.m, t.coef.fn.c_str(), t.coef.index,
                    t.coef.value.real(), t.coef.value.imag());
}

} // namespace

int main()
{
    using namespace jrl;
    Truncation tr;
    tr.n_q = 12;
    JacobiParams p;
    p.tau = ModularPoint(cplx(0, 0.5));
    p.z = cplx(0.1, 0.02);

    auto h = AlgebraSpec::heisenberg(1);
    auto W = enumerate_basis(h, {0.3}, 12);
    auto J = parse_state(h, "J");
    show("<J J> in sector 0.3", NPointRequest{W, {{J, cplx(0.13, 0.06)}, {J, cplx(-0.21, 0.23)}}, p, tr, {}});

    auto f = AlgebraSpec::complex_fermion(1);
    auto F = enumerate_basis(f, {}, 12);
    p.z = cplx(0.21, 0.13);
    show("<b J c>, generic z", NPointRequest{F,
                                              {{parse_state(f, "b"), cplx(0.13, 0.06)},
                                               {parse_state(f, "J"), cplx(-0.21, 0.23)},
                                               {parse_state(f, "c"), cplx(0.37, 0.40)}},
                                              p, tr, {}});
}
