#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <tuple>
#include <vector>

#include "flowlab/error.hpp"
#include "flowlab/norms.hpp"
#include "flowlab/path.hpp"
#include "flowlab/random.hpp"

namespace flowlab::fbm {

/// Parameters that fully determine a sampled fBm path.
struct FbmSpec {
  double hurst = 0.75;
  std::size_t components = 1;
  double horizon = 1.0;
  std::size_t grid_size = 1024;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(hurst > 0.0 && hurst < 1.0)) throw DomainError("Hurst parameter must lie in (0, 1)");
    if (components == 0) throw InvalidInput("fBm needs at least one component");
    if (!(horizon > 0.0)) throw DomainError("horizon must be positive");
    if (grid_size < 2) throw InvalidInput("fBm grid needs n >= 2");
  }
};

/// A sampled path together with the spec that produced it; path(0) = 0.
struct FbmPath {
  FbmSpec spec;
  GridPath path;
};

/// R_H(t, s) = (t^{2H} + s^{2H} - |t - s|^{2H}) / 2.
inline double covariance(double hurst, double t, double s) {
  if (t < 0.0 || s < 0.0) throw DomainError("covariance needs nonnegative times");
  if (!(hurst > 0.0 && hurst < 1.0)) throw DomainError("Hurst parameter must lie in (0, 1)");
  const double e = 2.0 * hurst;
  return 0.5 * (std::pow(t, e) + std::pow(s, e) - std::pow(std::abs(t - s), e));
}

/// Autocovariance of unit-step fractional Gaussian noise at lag k.
inline double fgn_autocovariance(double hurst, double k) {
  const double e = 2.0 * hurst;
  const double a = std::abs(k);
  return 0.5 * (std::pow(a + 1.0, e) - 2.0 * std::pow(a, e) + std::pow(std::abs(a - 1.0), e));
}

namespace detail {

inline GridPath assemble(const FbmSpec& spec, const std::vector<std::vector<double>>& columns) {
  const std::size_t n = spec.grid_size;
  const std::size_t m = spec.components;
  std::vector<double> values((n + 1) * m, 0.0);
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t k = 1; k <= n; ++k) values[k * m + j] = columns[j][k - 1];
  return GridPath(0.0, spec.horizon / static_cast<double>(n), m, std::move(values));
}

}  // namespace detail

/// Exact sampler from the Cholesky factor of the covariance of (B_{t_1}, ..., B_{t_n}).
/// The factor is computed once and reused for every seed.
class CholeskySampler {
 public:
  static constexpr std::size_t kDefaultMaxGrid = std::size_t{1} << 13;

  CholeskySampler(double hurst, double horizon, std::size_t grid_size,
                  std::size_t max_grid = kDefaultMaxGrid)
      : hurst_(hurst), horizon_(horizon), n_(grid_size) {
    FbmSpec{hurst, 1, horizon, grid_size, 0}.validate();
    if (grid_size > max_grid)
      throw InvalidInput("Cholesky sampler limited to n <= " + std::to_string(max_grid) +
                         "; use the circulant sampler");
    Eigen::MatrixXd cov(n_, n_);
    const double h = horizon_ / static_cast<double>(n_);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j <= i; ++j)
        cov(i, j) = cov(j, i) = covariance(hurst_, (i + 1) * h, (j + 1) * h);
    const double jitter = 1e-12 * cov.trace() / static_cast<double>(n_);
    cov.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) {
      const std::size_t minor = failing_minor(cov);
      throw FactorizationError("fBm covariance is not positive definite at leading minor " +
                                   std::to_string(minor),
                               minor);
    }
    factor_ = llt.matrixL();
  }

  FbmPath sample(const FbmSpec& spec) const {
    spec.validate();
    if (spec.grid_size != n_ || spec.hurst != hurst_ || spec.horizon != horizon_)
      throw InvalidInput("spec does not match the factorized covariance");
    std::vector<std::vector<double>> columns(spec.components);
    Eigen::VectorXd z(n_);
    for (std::size_t j = 0; j < spec.components; ++j) {
      GaussianStream gauss(substream_seed(spec.seed, j));
      for (std::size_t k = 0; k < n_; ++k) z[k] = gauss();
      const Eigen::VectorXd b = factor_.triangularView<Eigen::Lower>() * z;
      columns[j].assign(b.data(), b.data() + n_);
    }
    return {spec, detail::assemble(spec, columns)};
  }

 private:
  // Smallest k whose leading k x k minor fails to factorize, by bisection.
  static std::size_t failing_minor(const Eigen::MatrixXd& cov) {
    std::size_t good = 0;
    std::size_t bad = static_cast<std::size_t>(cov.rows());
    while (bad - good > 1) {
      const std::size_t mid = (good + bad) / 2;
      Eigen::LLT<Eigen::MatrixXd> llt(cov.topLeftCorner(mid, mid));
      (llt.info() == Eigen::Success ? good : bad) = mid;
    }
    return bad;
  }

  double hurst_;
  double horizon_;
  std::size_t n_;
  Eigen::MatrixXd factor_;
};

inline FbmPath sample_cholesky(const FbmSpec& spec,
                               std::size_t max_grid = CholeskySampler::kDefaultMaxGrid) {
  spec.validate();
  return CholeskySampler(spec.hurst, spec.horizon, spec.grid_size, max_grid).sample(spec);
}

/// Circulant-embedding (Davies-Harte) sampler of fractional Gaussian noise, integrated to fBm.
class CirculantSampler {
 public:
  CirculantSampler(double hurst, double horizon, std::size_t grid_size)
      : hurst_(hurst), horizon_(horizon), n_(grid_size) {
    FbmSpec{hurst, 1, horizon, grid_size, 0}.validate();
    sqrt_eigen_ = cached_eigenvalues(hurst, grid_size);
  }

  std::size_t embedding_size() const noexcept { return sqrt_eigen_->size(); }

  FbmPath sample(const FbmSpec& spec) const {
    spec.validate();
    if (spec.grid_size != n_ || spec.hurst != hurst_ || spec.horizon != horizon_)
      throw InvalidInput("spec does not match the circulant embedding");
    const std::size_t size = sqrt_eigen_->size();
    const double scale = std::pow(horizon_ / static_cast<double>(n_), hurst_);
    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> noise(size);
    std::vector<std::complex<double>> out(size);
    std::vector<std::vector<double>> columns(spec.components);
    for (std::size_t j = 0; j < spec.components; ++j) {
      GaussianStream gauss(substream_seed(spec.seed, j));
      for (std::size_t k = 0; k < size; ++k) {
        const double re = gauss();
        const double im = gauss();
        noise[k] = (*sqrt_eigen_)[k] * std::complex<double>(re, im);
      }
      fft.fwd(out, noise);
      auto& col = columns[j];
      col.resize(n_);
      double acc = 0.0;
      for (std::size_t k = 0; k < n_; ++k) {
        acc += scale * out[k].real();
        col[k] = acc;
      }
    }
    return {spec, detail::assemble(spec, columns)};
  }

 private:
  using Table = std::vector<double>;

  // sqrt(lambda_k / M) for the smallest admissible embedding, cached per (H, n).
  // Unit-step noise is rescaled at sampling time, so the horizon is not part of the key.
  static std::shared_ptr<const Table> cached_eigenvalues(double hurst, std::size_t n) {
    static std::shared_mutex mutex;
    static std::map<std::pair<double, std::size_t>, std::shared_ptr<const Table>> cache;
    const auto key = std::make_pair(hurst, n);
    {
      std::shared_lock lock(mutex);
      if (auto it = cache.find(key); it != cache.end()) return it->second;
    }
    auto table = std::make_shared<const Table>(embed(hurst, n));
    std::unique_lock lock(mutex);
    return cache.emplace(key, std::move(table)).first->second;
  }

  static Table embed(double hurst, std::size_t n) {
    std::size_t half = n;
    for (int attempt = 0; attempt <= 3; ++attempt, half *= 2) {
      const std::size_t size = 2 * half;
      std::vector<std::complex<double>> row(size);
      for (std::size_t k = 0; k <= half; ++k) row[k] = fgn_autocovariance(hurst, static_cast<double>(k));
      for (std::size_t k = half + 1; k < size; ++k) row[k] = row[size - k];
      std::vector<std::complex<double>> eig(size);
      Eigen::FFT<double> fft;
      fft.fwd(eig, row);
      double max_eig = 0.0;
      for (const auto& e : eig) max_eig = std::max(max_eig, e.real());
      const double tol = 1e-10 * max_eig;
      bool ok = true;
      Table table(size);
      for (std::size_t k = 0; k < size; ++k) {
        double lam = eig[k].real();
        if (lam < -tol) {
          ok = false;
          break;
        }
        table[k] = std::sqrt(std::max(lam, 0.0) / static_cast<double>(size));
      }
      if (ok) return table;
    }
    throw EmbeddingError("circulant embedding has negative eigenvalues after 3 doublings; "
                         "double the embedding size or use the Cholesky sampler");
  }

  double hurst_;
  double horizon_;
  std::size_t n_;
  std::shared_ptr<const Table> sqrt_eigen_;
};

inline FbmPath sample_circulant(const FbmSpec& spec) {
  spec.validate();
  return CirculantSampler(spec.hurst, spec.horizon, spec.grid_size).sample(spec);
}

/// Piecewise-linear interpolation of `fine` at coarse_n uniform knots, evaluated on the fine grid.
inline GridPath polygonal(const GridPath& fine, std::size_t coarse_n) {
  const std::size_t n = fine.steps();
  if (coarse_n == 0 || n % coarse_n != 0)
    throw InvalidInput("coarse grid size " + std::to_string(coarse_n) +
                       " does not divide the fine grid size " + std::to_string(n));
  const std::size_t stride = n / coarse_n;
  const std::size_t d = fine.dim();
  std::vector<double> values(fine.data().begin(), fine.data().end());
  for (std::size_t c = 0; c < coarse_n; ++c) {
    const std::size_t k0 = c * stride;
    const std::size_t k1 = k0 + stride;
    for (std::size_t i = 1; i < stride; ++i) {
      const double w = static_cast<double>(i) / static_cast<double>(stride);
      for (std::size_t j = 0; j < d; ++j)
        values[(k0 + i) * d + j] = fine(k0, j) + w * (fine(k1, j) - fine(k0, j));
    }
  }
  return GridPath(fine.start(), fine.step(), d, std::move(values));
}

inline GridPath polygonal(const FbmPath& path, std::size_t coarse_n) {
  return polygonal(path.path, coarse_n);
}

/// ||fine - approx||_{C^theta}: sup norm plus Hölder-theta seminorm of the difference.
inline double holder_error(const GridPath& fine, const GridPath& approx, HolderOrder theta) {
  require_same_grid(fine, approx);
  if (fine.dim() != approx.dim()) throw InvalidInput("paths have different dimensions");
  const GridPath diff = fine - approx;
  return sup_norm(diff) + holder_seminorm(diff, theta);
}

/// Smallest G with |B_t - B_s| <= G |t-s|^H sqrt(log(1/|t-s|)) over grid pairs with |t-s| < 1.
///
/// Horizons above 1 must be rescaled by the caller. With horizon exactly 1 the single
/// full-span pair, where log(1/|t-s|) = 0, is left out.
inline double modulus_constant(const GridPath& path, double hurst) {
  if (path.length() > 1.0 + 1e-12)
    throw DomainError("modulus constant needs |t - s| < 1; rescale time to a horizon <= 1");
  const std::size_t n = path.steps();
  double best = 0.0;
  for (std::size_t lag = 1; lag <= n; ++lag) {
    const double dt = static_cast<double>(lag) * path.step();
    const double log_term = std::log(1.0 / dt);
    if (!(log_term > 1e-12)) continue;
    const double inc = std::sqrt(flowlab::detail::max_sq_increment(path, lag));
    best = std::max(best, inc / (std::pow(dt, hurst) * std::sqrt(log_term)));
  }
  return best;
}

inline double modulus_constant(const FbmPath& path) {
  return modulus_constant(path.path, path.spec.hurst);
}

}  // namespace flowlab::fbm
