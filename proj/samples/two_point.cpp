// Two disks in D, the contraction C_{g1,g2} and its kernel evaluation.
#include <iostream>

#include <cflat/cflat.hpp>

using namespace cflat;

int main() {
  const int d = 3;
  const Truncation t = Truncation::make(d, 12);
  const CoreTable table(t);
  Vec a(3), b(3);
  a << 0.45, 0.1, 0.0;
  b << -0.4, 0.0, 0.2;
  const MobiusMatrix g1 = translation(a) * dilation(d, 0.3);
  const MobiusMatrix g2 = translation(b) * dilation(d, 0.25) * rotation(Mat::Identity(3, 3));
  const ContractionMatrix C = contraction_general(g1, g2, table);
  std::cout << "sigma1 = " << C.sigma1 << ", sigma2 = " << C.sigma2 << "\n";
  std::cout << "HS norm = " << hs_norm(C) << " (closed form " << hs_norm_closed(C.sigma1, C.sigma2, d, t.n_max())
            << ")\n";

  Vec p(3), q(3);
  p << 0.2, -0.1, 0.3;
  q << -0.3, 0.2, 0.1;
  const double trunc = pairing(C, e_vector(p, t), e_vector(q, t));
  const double exact = contraction_kernel_value(g1, g2, p, q);
  std::cout << "C(E_p, E_q) = " << trunc << ", kernel value = " << exact << ", |diff| = " << std::abs(trunc - exact)
            << " <= tail " << pairing_tail(C.sigma1, C.sigma2, d, t.n_max(), p.norm(), q.norm()) << "\n";
}
