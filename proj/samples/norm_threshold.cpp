// Hilbert-Schmidt norms below and at the touching threshold.
#include <iostream>

#include <cflat/cflat.hpp>

using namespace cflat;

int main() {
  std::cout << "d,sigma,N,hs_norm,lower_bound\n";
  for (const auto& r : boundedness_sweep({0.5, 0.9, 0.99, 1.0}, {20, 40, 60, 80}, 4))
    std::cout << r.d << "," << r.sigma << "," << r.N << "," << r.hs_norm << "," << r.lower_bound << "\n";
}
