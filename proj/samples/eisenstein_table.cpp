// Prints E_k(tau), the twisted E_{k,lambda}(tau) and the Laurent data of
// P_{1,lambda} for a few indices.
#include <cstdio>

#include <jrl/specfun.hpp>

int main()
{
    using namespace jrl;
    ModularPoint tau(cplx(0.1, 0.8));
    std::printf("tau = %.3f%+.3fi\n", tau.tau.real(), tau.tau.imag());
    std::printf("%3s %26s %26s %26s\n", "k", "E_k", "E_{k,1}", "Laurent C_k (lambda=1)");
    for (int k = 0; k <= 8; ++k) {
        cplx e = eisenstein(k, tau), et = eisenstein_twisted(k, 1.0, tau), c = p1_lambda_coeff(k, 1.0, tau);
        std::printf("%3d %12.9f%+12.9fi %12.9f%+12.9fi %12.9f%+12.9fi\n", k, e.real(), e.imag(), et.real(), et.imag(),
                    c.real(), c.imag());
    }
    cplx w(0.25, 0.3);
    for (int m = 1; m <= 4; ++m) {
        cplx p = weier_p(m, w, tau);
        std::printf("P_%d(%.2f%+.2fi) = %.12f%+.12fi\n", m, w.real(), w.imag(), p.real(), p.imag());
    }
}
