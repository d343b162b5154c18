#include <gtest/gtest.h>

#include <cmath>

#include "flowlab/fbm.hpp"
#include "flowlab/stats.hpp"
#include "flowlab/young.hpp"

using namespace flowlab;
using namespace flowlab::young;

namespace {

GridPath fn(std::size_t n, double (*f)(double)) { return GridPath::scalar(1.0, n, f); }

GridPath fbm_path(std::uint64_t seed, std::size_t n, std::size_t m = 1) {
  return fbm::sample_circulant({0.75, m, 1.0, n, seed}).path;
}

}  // namespace

TEST(RiemannStieltjes, Telescoping) {
  const auto g = fbm_path(1, 300, 3);
  const auto one = fn(300, [](double) { return 1.0; });
  const auto r = rs_integral(one, g);
  ASSERT_EQ(r.size(), 3u);
  for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(r[j], g(300, j) - g(0, j), 1e-13);
}

TEST(RiemannStieltjes, IdentityAgainstIdentity) {
  for (std::size_t n : {100u, 1000u}) {
    const auto t = fn(n, [](double x) { return x; });
    EXPECT_NEAR(rs_integral(t, t)[0], 0.5, 1.0 / n);
  }
}

TEST(RiemannStieltjes, ChainRuleUnderRefinement) {
  // int g dg -> g(T)^2 / 2 on a common fBm path.
  const auto g = fbm_path(5, 1 << 14);
  double prev = 1e9;
  for (std::size_t stride : {64u, 16u, 4u, 1u}) {
    const auto c = g.subsample(stride);
    const double err = std::abs(rs_integral(c, c)[0] - 0.5 * g(g.steps()) * g(g.steps()));
    EXPECT_LT(err, prev);
    prev = err;
  }
  // Left-point sums miss half the quadratic variation, of order n^{1/2 - 2H}.
  EXPECT_LT(prev, 1e-2);
}

TEST(RiemannStieltjes, MatrixIntegrand) {
  // f is 2x2 row-major, g is 2-d: out_i = sum_j int f^{ij} dg^j.
  const auto g = fbm_path(7, 64, 2);
  std::vector<double> fv(65 * 4);
  for (std::size_t k = 0; k <= 64; ++k) {
    fv[4 * k + 0] = 1.0;
    fv[4 * k + 1] = 0.0;
    fv[4 * k + 2] = 2.0;
    fv[4 * k + 3] = -1.0;
  }
  const GridPath f(0.0, g.step(), 4, std::move(fv));
  const auto r = rs_integral(f, g);
  const double d0 = g(64, 0) - g(0, 0);
  const double d1 = g(64, 1) - g(0, 1);
  EXPECT_NEAR(r[0], d0, 1e-13);
  EXPECT_NEAR(r[1], 2.0 * d0 - d1, 1e-13);
  EXPECT_THROW(rs_integral(fbm_path(1, 64, 3), g), InvalidInput);
  EXPECT_THROW(rs_integral(fbm_path(1, 32), fbm_path(2, 64)), InvalidInput);
}

TEST(RiemannStieltjes, Bilinear) {
  const auto f = fbm_path(10, 200);
  const auto h = fbm_path(11, 200);
  const auto g = fbm_path(12, 200);
  const auto k = fbm_path(13, 200);
  EXPECT_NEAR(rs_integral(2.0 * f - h, g)[0], 2.0 * rs_integral(f, g)[0] - rs_integral(h, g)[0], 1e-12);
  EXPECT_NEAR(rs_integral(f, g + 3.0 * k)[0], rs_integral(f, g)[0] + 3.0 * rs_integral(f, k)[0], 1e-12);
}

TEST(IndefiniteIntegral, PrefixSums) {
  const auto g = fbm_path(3, 128);
  const auto one = fn(128, [](double) { return 1.0; });
  const auto run = indefinite_integral(one, g);
  EXPECT_EQ(run(0), 0.0);
  for (std::size_t k = 0; k <= 128; ++k) EXPECT_NEAR(run(k), g(k) - g(0), 1e-13);
  const auto f = fbm_path(4, 128);
  const auto full = indefinite_integral(f, g);
  EXPECT_NEAR(full(128), rs_integral(f, g)[0], 1e-13);
  const double tail = rs_integral(f.slice(48, 128), g.slice(48, 128))[0];
  EXPECT_NEAR(full(128), full(48) + tail, 1e-13);
}

TEST(Zahle, SmoothExamples) {
  const std::size_t n = 4096;
  const auto one = fn(n, [](double) { return 1.0; });
  const auto t = fn(n, [](double x) { return x; });
  EXPECT_NEAR(zahle_integral(one, t, FracOrder(0.3))[0], 1.0, 1e-3);
  EXPECT_NEAR(zahle_integral(t, t, FracOrder(0.3))[0], 0.5, 1e-3);
  EXPECT_NEAR(zahle_integral(t, t, FracOrder(0.3), 1)[0], 0.5, 1e-3);
  const auto s = fn(n, [](double x) { return std::sin(3 * x); });
  const auto e = fn(n, [](double x) { return std::exp(x) - 1.0; });
  const double rs = rs_integral(s, e)[0];
  EXPECT_NEAR(zahle_integral(s, e, FracOrder(0.4))[0], rs, 1e-3 * (1 + std::abs(rs)));
}

TEST(Zahle, AgreesWithSumsOnFbm) {
  const std::size_t n = 1024;
  const auto f = fn(n, [](double x) { return std::sin(x); });
  const auto g = fbm_path(21, n);
  const double rs = rs_integral(f, g)[0];
  EXPECT_NEAR(zahle_integral(f, g, FracOrder(0.3))[0], rs, 2e-2 * (1 + std::abs(rs)));
  EXPECT_FALSE(regularity_warning(f, g).has_value());
  const double a = default_alpha(f, g);
  EXPECT_GT(a, 0.2);
  EXPECT_LT(a, 0.99);
}

TEST(Zahle, GapShrinksUnderRefinement) {
  std::vector<double> med;
  for (std::size_t n : {128u, 256u, 512u}) {
    std::vector<double> gaps;
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
      const auto g = fbm_path(100 + seed, 2048).subsample(2048 / n);
      const auto f = GridPath::scalar(1.0, n, [](double x) { return std::cos(2 * x); });
      gaps.push_back(std::abs(zahle_integral(f, g, FracOrder(0.35))[0] - rs_integral(f, g)[0]));
    }
    med.push_back(stats::median(gaps));
  }
  EXPECT_GT(med[0] / med[1], 1.5);
  EXPECT_GT(med[1] / med[2], 1.5);
}

TEST(Zahle, RegularityWarning) {
  const auto rough = fbm::sample_circulant({0.3, 1, 1.0, 1024, 3}).path;
  EXPECT_NEAR(estimate_holder_order(rough), 0.3, 0.1);
  EXPECT_TRUE(regularity_warning(rough, rough).has_value());
  EXPECT_EQ(estimate_holder_order(fn(64, [](double) { return 2.0; })), 1.0);
}

TEST(YoungBound, Examples) {
  const std::size_t n = 1024;
  const auto zero = fn(n, [](double) { return 0.0; });
  const auto t = fn(n, [](double x) { return x; });
  const auto r0 = young_bound_check(zero, t, FracOrder(0.25));
  EXPECT_EQ(r0.lhs, 0.0);
  EXPECT_EQ(r0.rhs, 0.0);
  const auto r1 = young_bound_check(fn(n, [](double) { return 1.0; }), t, FracOrder(0.25));
  EXPECT_NEAR(r1.lhs, 1.0, 1e-12);
  EXPECT_NEAR(r1.f_norm, 4.0 / 3.0, 1e-9);
  EXPECT_GE(r1.slack, 0.0);
}

TEST(YoungBound, HoldsOnFbmPairs) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto g = fbm_path(500 + seed, 256);
    const auto f = GridPath::scalar(1.0, 256, [seed](double x) { return std::sin((seed + 1) * x); });
    const auto r = young_bound_check(f, g, FracOrder(0.3));
    EXPECT_GE(r.slack, -1e-8 * std::max(1.0, r.rhs)) << seed;
  }
}
