// Four-point sphere state and its conformal invariance.
#include <iostream>

#include <cflat/cflat.hpp>

using namespace cflat;

int main() {
  const int d = 3;
  const FockTruncation ft = FockTruncation::make(d, 10, 4);
  const Truncation& t = ft.truncation();
  std::vector<MobiusMatrix> gs{translation(0.5 * Vec::Unit(d, 0)) * dilation(d, 0.3),
                               translation(-0.5 * Vec::Unit(d, 0)) * dilation(d, 0.3),
                               translation(0.55 * Vec::Unit(d, 1)) * dilation(d, 0.25),
                               translation(-0.55 * Vec::Unit(d, 1)) * dilation(d, 0.2)};
  std::vector<FockVector> in;
  for (int i = 0; i < 4; ++i) in.push_back(FockVector::particle(Vec::Unit(t.size(), t.offset(1) + i % 3)));

  const double direct = vacuum_expectation(ft, gs, in);
  const SphereResult s = sphere_state(ft, gs, in);
  std::cout << "vacuum expectation = " << direct << ", sphere state = " << s.value << "\n";

  Rng rng(3);
  for (int k = 0; k < 5; ++k) {
    const MobiusMatrix g = random_word(d, rng);
    std::vector<MobiusMatrix> moved;
    for (const auto& h : gs) moved.push_back(g * h);
    std::cout << "after transport " << k << ": " << sphere_state(ft, moved, in).value << "\n";
  }
}
