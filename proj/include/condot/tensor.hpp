#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "condot/errors.hpp"

namespace condot {

// Sample batches are stored one sample per row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

struct GaussianMoments {
  Vector mean;
  Matrix cov;

  Eigen::Index dim() const { return mean.size(); }
};

/// xoshiro256** seeded through splitmix64. This is the only generator used
/// anywhere in the library; its output stream is part of the file-format
/// stability guarantee (see kRngName).
class Rng {
 public:
  static constexpr const char* kRngName = "xoshiro256starstar-v1";

  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal via Box-Muller; the spare value is cached.
  double normal();
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  std::array<std::uint64_t, 4> state() const { return s_; }
  void set_state(const std::array<std::uint64_t, 4>& s) {
    s_ = s;
    has_spare_ = false;
  }
  // Spare normal is part of the observable state.
  bool has_spare() const { return has_spare_; }
  double spare() const { return spare_; }
  void set_spare(bool has, double value) {
    has_spare_ = has;
    spare_ = value;
  }

 private:
  std::array<std::uint64_t, 4> s_{};
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Lower clamp applied to eigenvalues before square roots and solves:
/// 1e-10 * trace(M) / d.
double eig_floor(const Matrix& m);

/// Symmetric PSD square root through an eigendecomposition. Eigenvalues
/// below eig_floor are lifted to the floor; eigenvalues below
/// -1e-8 * ||M|| raise NotSPD.
Matrix spd_sqrt(const Matrix& m);
/// Inverse square root with the same clamping rules.
Matrix spd_inv_sqrt(const Matrix& m);
Vector spd_solve(const Matrix& m, const Vector& b);
Matrix spd_inverse(const Matrix& m);

Matrix sample_gaussian(const GaussianMoments& moments, Eigen::Index n, std::uint64_t seed);
Matrix sample_gaussian(const GaussianMoments& moments, Eigen::Index n, Rng& rng);

/// Column means and the unbiased (n - 1) covariance.
GaussianMoments empirical_moments(const Matrix& x);

Matrix symmetrize(const Matrix& m);

// CSV: optional header row, '.' decimal separator, 17 significant digits.
Matrix read_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, const Matrix& m,
               const std::vector<std::string>& header = {});
Matrix parse_csv(const std::string& text, const std::string& source_name = "<string>");
std::string format_csv(const Matrix& m, const std::vector<std::string>& header = {});

/// Shortest-roundtrip-safe decimal form (17 significant digits, no locale).
std::string format_double(double v);
bool parse_double(std::string_view text, double& out);

}  // namespace condot
