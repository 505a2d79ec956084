#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "kinlab/grid.hpp"
#include "kinlab/model.hpp"

namespace kinlab {

/// Brownian increments of the truncated cylindrical Wiener process
/// W = sum_{k<=K} beta_k e_k. Increment (k, j) is a pure function of
/// (seed, k, j), so tables regenerate bit-exactly.
class NoisePath {
 public:
  NoisePath() = default;
  NoisePath(std::uint64_t seed, std::size_t steps, double dt, std::size_t modes, std::vector<double> increments);

  std::uint64_t seed() const { return seed_; }
  std::size_t steps() const { return steps_; }
  double dt() const { return dt_; }
  std::size_t modes() const { return modes_; }
  /// Increment of beta_k over step j; k is 1-based.
  double increment(std::size_t k, std::size_t j) const { return inc_[(k - 1) * steps_ + j]; }
  const std::vector<double>& table() const { return inc_; }

  bool operator==(const NoisePath& o) const = default;

 private:
  std::uint64_t seed_ = 0;
  std::size_t steps_ = 0;
  double dt_ = 0.0;
  std::size_t modes_ = 0;
  std::vector<double> inc_;
};

/// Single increment without materializing a table.
double brownian_increment(std::uint64_t seed, std::size_t k, std::size_t step, double dt);

NoisePath sample_path(std::uint64_t seed, std::size_t steps, double dt, std::size_t modes);

/// x -> sum_{k<=K} g_k(x, u(x)) * dbeta_k[step].
ScalarField apply_noise(const ScalarField& u, const ProblemSpec& spec, const NoisePath& path, std::size_t step);

/// ||W(t_step)||^2_{U0} = sum_k beta_k(t_step)^2 / k^2.
double u0_norm(const NoisePath& path, std::size_t step);

/// Binary dump: magic "KLNOISE1", seed u64, steps u64, dt f64, modes u64,
/// then modes*steps float64 increments (mode-major), all little-endian.
void save_path(const std::string& file, const NoisePath& path);
NoisePath load_path(const std::string& file);

}  // namespace kinlab
