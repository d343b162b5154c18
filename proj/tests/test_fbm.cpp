#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <vector>

#include <Eigen/Eigenvalues>

#include "flowlab/fbm.hpp"
#include "flowlab/fraccalc.hpp"
#include "flowlab/stats.hpp"

using namespace flowlab;
using namespace flowlab::fbm;

TEST(Covariance, Examples) {
  for (double h : {0.2, 0.5, 0.75, 0.9}) EXPECT_DOUBLE_EQ(covariance(h, 1.0, 1.0), 1.0);
  EXPECT_NEAR(covariance(0.5, 1.0, 2.0), 1.0, 1e-15);
  EXPECT_NEAR(covariance(0.75, 1.0, 2.0), 1.4142135623730950488, 1e-14);
  EXPECT_NEAR(covariance(0.75, 0.5, 1.0), 0.5, 1e-15);
  EXPECT_THROW(covariance(0.5, -0.1, 1.0), DomainError);
  EXPECT_THROW(covariance(1.0, 0.1, 1.0), DomainError);
}

TEST(Covariance, SymmetricAndDiagonal) {
  for (double h : {0.3, 0.6, 0.85})
    for (double t : {0.1, 0.7, 2.5})
      for (double s : {0.0, 0.4, 3.0}) {
        EXPECT_DOUBLE_EQ(covariance(h, t, s), covariance(h, s, t));
        EXPECT_NEAR(covariance(h, t, t), std::pow(t, 2 * h), 1e-14);
      }
}

TEST(Covariance, PositiveSemidefiniteOnGrid) {
  for (double h : {0.1, 0.5, 0.75, 0.95}) {
    const int n = 200;
    Eigen::MatrixXd c(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) c(i, j) = covariance(h, (i + 1) / double(n), (j + 1) / double(n));
    const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(c).eigenvalues();
    EXPECT_GE(ev.minCoeff(), -n * 2.2e-16 * ev.maxCoeff()) << "H=" << h;
  }
}

TEST(Covariance, FgnAutocovariance) {
  EXPECT_DOUBLE_EQ(fgn_autocovariance(0.75, 0.0), 1.0);
  EXPECT_NEAR(fgn_autocovariance(0.5, 3.0), 0.0, 1e-15);
  // Increments of R_H on the unit grid.
  const double h = 0.7;
  const double k = 4.0;
  const double direct = covariance(h, k + 1, 1) - covariance(h, k, 1) - covariance(h, k + 1, 0) + covariance(h, k, 0);
  EXPECT_NEAR(fgn_autocovariance(h, k), direct, 1e-13);
}

TEST(Samplers, ShapeStartAndDeterminism) {
  const FbmSpec spec{0.75, 3, 1.0, 2, 42};
  for (const auto& p : {sample_cholesky(spec), sample_circulant(spec)}) {
    EXPECT_EQ(p.path.points(), 3u);
    EXPECT_EQ(p.path.dim(), 3u);
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(p.path(0, j), 0.0);
  }
  const FbmSpec big{0.6, 2, 2.0, 512, 7};
  const auto a = sample_circulant(big);
  const auto b = sample_circulant(big);
  for (std::size_t i = 0; i < a.path.data().size(); ++i) ASSERT_EQ(a.path.data()[i], b.path.data()[i]);
  EXPECT_DOUBLE_EQ(a.path.length(), 2.0);
}

TEST(Samplers, ComponentsUseIndependentSubstreams) {
  FbmSpec one{0.7, 1, 1.0, 64, 99};
  FbmSpec two = one;
  two.components = 2;
  const auto a = sample_cholesky(one);
  const auto b = sample_cholesky(two);
  for (std::size_t k = 0; k <= 64; ++k) EXPECT_EQ(a.path(k, 0), b.path(k, 0));
  double diff = 0.0;
  for (std::size_t k = 0; k <= 64; ++k) diff += std::abs(b.path(k, 0) - b.path(k, 1));
  EXPECT_GT(diff, 0.0);
}

TEST(Samplers, CholeskyGuard) {
  EXPECT_THROW(CholeskySampler(0.7, 1.0, 64, 32), InvalidInput);
  EXPECT_NO_THROW(CholeskySampler(0.7, 1.0, 64, 64));
}

TEST(Samplers, CovarianceMonteCarlo) {
  // Cov(B_{1/2}, B_1) = 1/2 and Var(B_1) = 1 at H = 0.75, both samplers, 3 sigma bands.
  const std::size_t count = 4000;
  const CholeskySampler chol(0.75, 1.0, 2);
  const CirculantSampler circ(0.75, 1.0, 2);
  for (int which = 0; which < 2; ++which) {
    std::vector<double> cross(count);
    std::vector<double> var(count);
    for (std::size_t i = 0; i < count; ++i) {
      const FbmSpec spec{0.75, 1, 1.0, 2, 1000 + i};
      const auto p = which == 0 ? chol.sample(spec) : circ.sample(spec);
      cross[i] = p.path(1) * p.path(2);
      var[i] = p.path(2) * p.path(2);
    }
    EXPECT_NEAR(stats::mean(cross), 0.5, 3 * stats::standard_error(cross)) << which;
    EXPECT_NEAR(stats::mean(var), 1.0, 3 * stats::standard_error(var)) << which;
  }
}

TEST(Samplers, BrownianIncrementsUncorrelated) {
  const std::size_t count = 4000;
  const CirculantSampler circ(0.5, 1.0, 4);
  std::vector<double> a(count);
  std::vector<double> b(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto p = circ.sample({0.5, 1, 1.0, 4, i});
    a[i] = p.path(1) - p.path(0);
    b[i] = p.path(4) - p.path(2);
  }
  EXPECT_LT(std::abs(stats::correlation(a, b)), 3.0 / std::sqrt(double(count)));
}

TEST(Samplers, StationaryIncrementsAndScaling) {
  // Var(B_{t+h} - B_t) = h^{2H} for every t; horizon 4 checks self-similarity.
  const std::size_t count = 3000;
  const double hurst = 0.8;
  const CirculantSampler circ(hurst, 4.0, 16);
  std::vector<double> early(count);
  std::vector<double> late(count);
  std::vector<double> endpoint(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto p = circ.sample({hurst, 1, 4.0, 16, 50000 + i});
    early[i] = std::pow(p.path(1) - p.path(0), 2);
    late[i] = std::pow(p.path(13) - p.path(12), 2);
    endpoint[i] = std::pow(std::pow(4.0, -hurst) * p.path(16), 2);
  }
  const double target = std::pow(0.25, 2 * hurst);
  EXPECT_NEAR(stats::mean(early), target, 3 * stats::standard_error(early));
  EXPECT_NEAR(stats::mean(late), target, 3 * stats::standard_error(late));
  EXPECT_NEAR(stats::mean(endpoint), 1.0, 3 * stats::standard_error(endpoint));
}

TEST(Samplers, CirculantScalesSubquadratically) {
  auto time_of = [](std::size_t n) {
    const CirculantSampler s(0.75, 1.0, n);
    const auto t0 = std::chrono::steady_clock::now();
    for (std::uint64_t seed = 0; seed < 20; ++seed) s.sample({0.75, 1, 1.0, n, seed});
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  time_of(1 << 12);
  time_of(1 << 13);
  double best = 1e9;
  for (int rep = 0; rep < 3; ++rep) best = std::min(best, time_of(1 << 13) / time_of(1 << 12));
  EXPECT_LT(best, 3.0);
}

TEST(Polygonal, KnotsAndAffine) {
  const auto p = sample_circulant({0.75, 2, 1.0, 1024, 5});
  const auto q = polygonal(p, 16);
  for (std::size_t c = 0; c <= 16; ++c)
    for (std::size_t j = 0; j < 2; ++j) EXPECT_EQ(q(c * 64, j), p.path(c * 64, j));
  const auto same = polygonal(p, 1024);
  for (std::size_t i = 0; i < same.data().size(); ++i) EXPECT_EQ(same.data()[i], p.path.data()[i]);
  const auto line = GridPath::scalar(1.0, 120, [](double t) { return 2.0 - 3.0 * t; });
  const auto pl = polygonal(line, 12);
  for (std::size_t k = 0; k <= 120; ++k) EXPECT_NEAR(pl(k), line(k), 1e-14);
  EXPECT_THROW(polygonal(p, 3), InvalidInput);
}

TEST(Polygonal, CellSlopeIsIncrementTimesN) {
  const auto p = sample_circulant({0.7, 1, 1.0, 256, 8});
  const std::size_t n = 8;
  const auto q = polygonal(p, n);
  for (std::size_t c = 0; c < n; ++c) {
    const auto cell = q.slice(c * 32, (c + 1) * 32);
    const double inc = std::abs(p.path((c + 1) * 32) - p.path(c * 32));
    EXPECT_NEAR(holder_seminorm(cell, HolderOrder(1.0)), inc * n, 1e-9 * (1 + inc * n));
  }
}

TEST(HolderError, ZeroForIdenticalAndGridChecked) {
  const auto p = sample_circulant({0.75, 1, 1.0, 256, 1});
  EXPECT_EQ(holder_error(p.path, p.path, HolderOrder(0.55)), 0.0);
  const auto other = sample_circulant({0.75, 1, 1.0, 128, 1});
  EXPECT_THROW(holder_error(p.path, other.path, HolderOrder(0.55)), InvalidInput);
}

TEST(HolderError, MedianNonincreasingAlongLadder) {
  const CirculantSampler s(0.75, 1.0, 2048);
  std::vector<double> med;
  for (std::size_t coarse : {16u, 64u, 256u}) {
    std::vector<double> errs;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto p = s.sample({0.75, 1, 1.0, 2048, seed});
      errs.push_back(holder_error(p.path, polygonal(p, coarse), HolderOrder(0.55)));
    }
    med.push_back(stats::median(errs));
  }
  EXPECT_TRUE(stats::strictly_decreasing(med));
}

TEST(Modulus, ConstantPathAndDomain) {
  EXPECT_EQ(modulus_constant(GridPath::scalar(1.0, 64, [](double) { return 1.5; }), 0.75), 0.0);
  EXPECT_THROW(modulus_constant(GridPath::scalar(2.0, 64, [](double t) { return t; }), 0.75), DomainError);
}

TEST(Modulus, StableUnderRefinement) {
  // Common random numbers: the 2^10 path is the 2^12 path restricted to every 4th point.
  // Horizon 1/2 keeps log(1/|t-s|) away from 0; at horizon 1 the near full-span pairs dominate.
  const CirculantSampler s(0.75, 0.5, 4096);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto p = s.sample({0.75, 1, 0.5, 4096, seed});
    const double fine = modulus_constant(p);
    const double coarse = modulus_constant(p.path.subsample(4), 0.75);
    EXPECT_GT(coarse, 0.0);
    EXPECT_LE(fine / coarse, 2.0);
    EXPECT_GE(fine / coarse, 0.5);
  }
}

TEST(Polygonal, LambdaOfDifferenceShrinks) {
  const CirculantSampler s(0.75, 1.0, 1024);
  const FracOrder a(0.35);
  std::vector<double> med;
  for (std::size_t coarse : {16u, 64u, 256u}) {
    std::vector<double> gaps;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto p = s.sample({0.75, 1, 1.0, 1024, seed});
      gaps.push_back(fraccalc::lambda_alpha(polygonal(p, coarse) - p.path, a).value);
    }
    med.push_back(stats::median(gaps));
  }
  EXPECT_TRUE(stats::strictly_decreasing(med));
}
