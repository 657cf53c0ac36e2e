#include "condot/tensor.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace condot {

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::NotSPD: return "NotSPD";
    case Errc::TooFewSamples: return "TooFewSamples";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::UnsupportedPrimitive: return "UnsupportedPrimitive";
    case Errc::NestingTooDeep: return "NestingTooDeep";
    case Errc::MissingMoments: return "MissingMoments";
    case Errc::AnchorDimMismatch: return "AnchorDimMismatch";
    case Errc::UnknownLabel: return "UnknownLabel";
    case Errc::TooFewLabels: return "TooFewLabels";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::EmptySet: return "EmptySet";
    case Errc::NotConverged: return "NotConverged";
    case Errc::TooLarge: return "TooLarge";
    case Errc::ConfigError: return "ConfigError";
    case Errc::NonFiniteLoss: return "NonFiniteLoss";
    case Errc::TooManyCombos: return "TooManyCombos";
    case Errc::NotActionTask: return "NotActionTask";
    case Errc::RankDeficient: return "RankDeficient";
    case Errc::ManifestError: return "ManifestError";
    case Errc::IoError: return "IoError";
    case Errc::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

struct ClampedEig {
  Vector values;
  Matrix vectors;
};

ClampedEig clamped_eigen(const Matrix& m) {
  if (m.rows() != m.cols()) {
    throw Error(Errc::ShapeMismatch, "expected a square matrix, got " + std::to_string(m.rows()) +
                                         "x" + std::to_string(m.cols()));
  }
  const Matrix sym = symmetrize(m);
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  if (es.info() != Eigen::Success) throw Error(Errc::NotSPD, "eigendecomposition failed");
  Vector values = es.eigenvalues();
  const double norm = sym.norm();
  const double min_ev = values.size() ? values.minCoeff() : 0.0;
  if (min_ev < -1e-8 * norm) {
    throw Error(Errc::NotSPD, "eigenvalue " + format_double(min_ev) + " is negative");
  }
  const double floor = eig_floor(sym);
  for (Eigen::Index i = 0; i < values.size(); ++i) values[i] = std::max(values[i], floor);
  return {values, es.eigenvectors()};
}

}  // namespace

Rng::Rng(std::uint64_t seed) {
  std::uint64_t x = seed;
  for (auto& s : s_) s = splitmix64(x);
}

std::uint64_t Rng::next_u64() {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * M_PI * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) return 0;
  // Rejection sampling keeps the draw unbiased.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x = next_u64();
  while (x >= limit) x = next_u64();
  return x % n;
}

Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

double eig_floor(const Matrix& m) {
  if (m.rows() == 0) return 0.0;
  return 1e-10 * std::max(m.trace(), 0.0) / static_cast<double>(m.rows());
}

Matrix spd_sqrt(const Matrix& m) {
  const auto e = clamped_eigen(m);
  return symmetrize(e.vectors * e.values.cwiseSqrt().asDiagonal() * e.vectors.transpose());
}

Matrix spd_inv_sqrt(const Matrix& m) {
  const auto e = clamped_eigen(m);
  if (e.values.size() && e.values.minCoeff() <= 0.0) {
    throw Error(Errc::NotSPD, "matrix is singular");
  }
  return symmetrize(e.vectors * e.values.cwiseSqrt().cwiseInverse().asDiagonal() *
                    e.vectors.transpose());
}

Matrix spd_inverse(const Matrix& m) {
  const auto e = clamped_eigen(m);
  if (e.values.size() && e.values.minCoeff() <= 0.0) {
    throw Error(Errc::NotSPD, "matrix is singular");
  }
  return symmetrize(e.vectors * e.values.cwiseInverse().asDiagonal() * e.vectors.transpose());
}

Vector spd_solve(const Matrix& m, const Vector& b) {
  if (m.rows() != b.size()) throw Error(Errc::ShapeMismatch, "spd_solve: size mismatch");
  const auto e = clamped_eigen(m);
  if (e.values.size() && e.values.minCoeff() <= 0.0) {
    throw Error(Errc::NotSPD, "matrix is singular");
  }
  Vector x = e.vectors * (e.vectors.transpose() * b).cwiseQuotient(e.values);
  // One step of iterative refinement against the unclamped matrix.
  const Vector r = b - m * x;
  x += e.vectors * (e.vectors.transpose() * r).cwiseQuotient(e.values);
  return x;
}

Matrix sample_gaussian(const GaussianMoments& moments, Eigen::Index n, std::uint64_t seed) {
  Rng rng(seed);
  return sample_gaussian(moments, n, rng);
}

Matrix sample_gaussian(const GaussianMoments& moments, Eigen::Index n, Rng& rng) {
  const Eigen::Index d = moments.dim();
  if (moments.cov.rows() != d || moments.cov.cols() != d) {
    throw Error(Errc::ShapeMismatch, "covariance does not match mean");
  }
  // Factor through the clamped eigendecomposition so that PSD (rank
  // deficient) covariances are accepted; a zero covariance gives a zero factor.
  Matrix factor = Matrix::Zero(d, d);
  if (d > 0 && moments.cov.cwiseAbs().maxCoeff() > 0.0) {
    Eigen::LLT<Matrix> llt(symmetrize(moments.cov));
    if (llt.info() == Eigen::Success) {
      factor = llt.matrixL();
    } else {
      factor = spd_sqrt(moments.cov);
    }
  }
  Matrix z(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) z(i, j) = rng.normal();
  Matrix out = z * factor.transpose();
  out.rowwise() += moments.mean.transpose();
  return out;
}

GaussianMoments empirical_moments(const Matrix& x) {
  if (x.rows() < 2) {
    throw Error(Errc::TooFewSamples, "need at least 2 rows, got " + std::to_string(x.rows()));
  }
  const double n = static_cast<double>(x.rows());
  GaussianMoments out;
  out.mean = x.colwise().sum().transpose() / n;
  const Matrix centered = x.rowwise() - out.mean.transpose();
  out.cov = symmetrize(centered.transpose() * centered / (n - 1.0));
  return out;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

bool parse_double(std::string_view text, double& out) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r'))
    text.remove_suffix(1);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  if (text.empty()) return false;
  auto res = std::from_chars(text.data(), text.data() + text.size(), out);
  return res.ec == std::errc() && res.ptr == text.data() + text.size();
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

}  // namespace

Matrix parse_csv(const std::string& text, const std::string& source_name) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    std::vector<double> row;
    row.reserve(fields.size());
    bool numeric = true;
    for (auto f : fields) {
      double v = 0.0;
      if (!parse_double(f, v)) {
        numeric = false;
        break;
      }
      row.push_back(v);
    }
    if (!numeric) {
      if (rows.empty() && line_no == 1) continue;  // header
      throw Error(Errc::IoError,
                  source_name + ":" + std::to_string(line_no) + ": non-numeric field");
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw Error(Errc::IoError, source_name + ":" + std::to_string(line_no) +
                                     ": expected " + std::to_string(rows.front().size()) +
                                     " columns, got " + std::to_string(row.size()));
    }
    for (double v : row) {
      if (!std::isfinite(v)) {
        throw Error(Errc::IoError,
                    source_name + ":" + std::to_string(line_no) + ": non-finite value");
      }
    }
    rows.push_back(std::move(row));
  }
  Matrix m(static_cast<Eigen::Index>(rows.size()),
           rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return m;
}

std::string format_csv(const Matrix& m, const std::vector<std::string>& header) {
  std::string out;
  if (!header.empty()) {
    for (std::size_t j = 0; j < header.size(); ++j) {
      if (j) out += ',';
      out += header[j];
    }
    out += '\n';
  }
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out += ',';
      out += format_double(m(i, j));
    }
    out += '\n';
  }
  return out;
}

Matrix read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str(), path.string());
}

void write_csv(const std::filesystem::path& path, const Matrix& m,
               const std::vector<std::string>& header) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  out << format_csv(m, header);
  if (!out) throw Error(Errc::IoError, "write failed for " + path.string());
}

}  // namespace condot
