#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "magspec/field.hpp"
#include "magspec/grid.hpp"
#include "magspec/hamiltonian.hpp"

namespace testing {

// Hand-rolled generators; every property test draws from a fixed seed.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

  magspec::Point point(double half_box) { return {uniform(-half_box, half_box), uniform(-half_box, half_box)}; }

  Eigen::VectorXd gauge(int n) {
    Eigen::VectorXd g(n);
    for (int i = 0; i < n; ++i) g(i) = uniform(-M_PI, M_PI);
    return g;
  }

  // Smooth positive periodic field: a few random Fourier modes on top of 1.
  magspec::FieldProfile periodic_field(int m, double period, double strength) {
    std::vector<double> samples(m * m, 1.0);
    for (int mode = 0; mode < 3; ++mode) {
      const int k1 = integer(0, 2), k2 = integer(0, 2);
      const double a = uniform(-strength, strength) / 3.0, phase = uniform(0, 2 * M_PI);
      for (int j2 = 0; j2 < m; ++j2)
        for (int j1 = 0; j1 < m; ++j1)
          samples[j2 * m + j1] += a * std::cos(2 * M_PI * (k1 * j1 + k2 * j2) / m + phase);
    }
    return magspec::FieldProfile::periodic(samples, m, m, period, period);
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

inline magspec::FieldProfile cosine_profile(double a) {
  // 1 + a cos(x1) sampled exactly by 8 points per period 2π.
  std::vector<double> s(8 * 8);
  for (int j2 = 0; j2 < 8; ++j2)
    for (int j1 = 0; j1 < 8; ++j1) s[j2 * 8 + j1] = 1.0 + a * std::cos(2 * M_PI * j1 / 8);
  return magspec::FieldProfile::periodic(s, 8, 8, 2 * M_PI, 2 * M_PI);
}

inline magspec::FieldProfile cos_cos_profile(double a) {
  std::vector<double> s(8 * 8);
  for (int j2 = 0; j2 < 8; ++j2)
    for (int j1 = 0; j1 < 8; ++j1)
      s[j2 * 8 + j1] = 1.0 + a * std::cos(2 * M_PI * j1 / 8) * std::cos(2 * M_PI * j2 / 8);
  return magspec::FieldProfile::periodic(s, 8, 8, 2 * M_PI, 2 * M_PI);
}

inline double max_abs(const magspec::DenseMatrix& m) { return m.cwiseAbs().maxCoeff(); }

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("magspec_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace testing
