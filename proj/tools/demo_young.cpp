// Integrates sin(3t) against one fBm path both ways and checks the fractional bound.
#include <cmath>
#include <iostream>

#include "flowlab/fbm.hpp"
#include "flowlab/young.hpp"

int main() {
  using namespace flowlab;
  fbm::FbmSpec spec;
  spec.hurst = 0.75;
  spec.grid_size = 2048;
  spec.seed = 42;
  const GridPath g = fbm::sample_circulant(spec).path;
  const GridPath f = GridPath::scalar(1.0, 2048, [](double t) { return std::sin(3.0 * t); });

  const double rs = young::rs_integral(f, g)[0];
  const double zahle = young::zahle_integral(f, g)[0];
  std::cout << "Riemann-Stieltjes " << rs << "\nZähle             " << zahle << '\n';

  const auto bound = young::young_bound_check(f, g, FracOrder(0.3));
  std::cout << "|int f dg| = " << bound.lhs << " <= " << bound.rhs << " = Lambda * ||f||\n";
}
