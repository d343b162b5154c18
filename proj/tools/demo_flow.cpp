// Forward and backward flows of dX = 0.5 X dB for one fBm path: composition and inverse.
#include <iostream>

#include "flowlab/fbm.hpp"
#include "flowlab/sde.hpp"

int main() {
  using namespace flowlab;
  fbm::FbmSpec spec;
  spec.grid_size = 4096;
  spec.seed = 7;
  const GridPath driver = fbm::sample_circulant(spec).path;
  const auto field = sde::geometric_field(0.5);

  sde::FlowMap map(driver, field, sde::SolverConfig(0.3, 1024, spec.hurst, field));
  const sde::Vector x = sde::Vector::Constant(1, 1.0);

  const auto [composed, direct] = sde::flow_compose(map, 0.0, 0.5, 1.0, x);
  std::cout << "X_{1/2,1}(X_{0,1/2}(1)) = " << composed[0] << ", X_{0,1}(1) = " << direct[0] << '\n';

  const sde::Vector back = map.forward(0.0, 1.0, map.backward(0.0, 1.0, x));
  std::cout << "X_{0,1}(Y_{0,1}(1)) - 1 = " << back[0] - 1.0 << '\n';
  std::cout << "closed form X_{0,1}(1) = " << std::exp(0.5 * driver(driver.steps())) << '\n';
}
