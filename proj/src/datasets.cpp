#include "condot/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

namespace condot {

using json = nlohmann::json;
namespace fs = std::filesystem;

Matrix AffineOracle::apply(const Matrix& X) const {
  return (X * linear.transpose()).rowwise() + offset.transpose();
}

AffineOracle AffineOracle::identity(Eigen::Index d) { return {Matrix::Identity(d, d), Vector::Zero(d)}; }

AffineOracle compose_additive(const std::vector<AffineOracle>& maps) {
  if (maps.empty()) throw Error(Errc::EmptySet, "no maps to compose");
  const Eigen::Index d = maps.front().offset.size();
  AffineOracle out = AffineOracle::identity(d);
  for (const auto& m : maps) {
    out.linear += m.linear - Matrix::Identity(d, d);
    out.offset += m.offset;
  }
  return out;
}

AffineOracle OracleSet::for_context(const Context& c) const {
  if (c.kind != kind) throw Error(Errc::ShapeMismatch, "oracle asked for a context of another kind");
  auto find = [&](const std::string& l) -> const AffineOracle& {
    const auto it = by_label.find(l);
    if (it == by_label.end()) throw Error(Errc::UnknownLabel, "no ground-truth map for '" + l + "'");
    return it->second;
  };
  switch (kind) {
    case ContextKind::Scalar: {
      const Eigen::Index d = base.offset.size();
      return {(1.0 - c.t) * Matrix::Identity(d, d) + c.t * base.linear, c.t * base.offset};
    }
    case ContextKind::Categorical: return find(c.label);
    case ContextKind::ActionSet: {
      std::vector<AffineOracle> parts;
      for (const auto& l : c.labels) parts.push_back(find(l));
      return compose_additive(parts);
    }
  }
  return base;
}

const LabeledPair& Dataset::pair(const std::string& id) const {
  for (const auto& p : pairs)
    if (p.id == id) return p;
  throw Error(Errc::UnknownLabel, "no pair with id '" + id + "'");
}

// ---------------------------------------------------------------------------
// Simulation

namespace {

std::string pair_id(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "p%03zu", i);
  return buf;
}

Matrix random_rotation(Eigen::Index d, Rng& rng) {
  Matrix g(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) g(i, j) = rng.normal();
  Eigen::HouseholderQR<Matrix> qr(g);
  return qr.householderQ();
}

// Symmetric linear part with eigenvalues in [lo, hi].
Matrix random_spd_map(Eigen::Index d, double lo, double hi, Rng& rng) {
  const Matrix q = random_rotation(d, rng);
  Vector ev(d);
  for (auto& v : ev) v = rng.uniform(lo, hi);
  return symmetrize(q * ev.asDiagonal() * q.transpose());
}

Vector random_normal(Eigen::Index d, double scale, Rng& rng) {
  Vector v(d);
  for (auto& x : v) x = scale * rng.normal();
  return v;
}

struct Mixture {
  std::vector<GaussianMoments> parts;

  Matrix sample(Eigen::Index n, Rng& rng) const {
    const Eigen::Index d = parts.front().mean.size();
    std::vector<Matrix> factors;
    for (const auto& p : parts) {
      Eigen::LLT<Matrix> llt(p.cov);
      factors.push_back(llt.matrixL());
    }
    Matrix X(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(rng.below(parts.size()));
      X.row(i) = (parts[k].mean + factors[k] * random_normal(d, 1.0, rng)).transpose();
    }
    return X;
  }
};

Mixture random_mixture(Eigen::Index d, int components, Rng& rng) {
  Mixture m;
  for (int k = 0; k < components; ++k) {
    m.parts.push_back({random_normal(d, 1.5, rng), 0.25 * random_spd_map(d, 0.5, 1.5, rng)});
  }
  return m;
}

json moments_json(const GaussianMoments& g) {
  json cov = json::array();
  for (Eigen::Index i = 0; i < g.cov.rows(); ++i) {
    std::vector<double> r(g.cov.row(i).begin(), g.cov.row(i).end());
    cov.push_back(r);
  }
  return json{{"mean", std::vector<double>(g.mean.begin(), g.mean.end())}, {"cov", cov}};
}

}  // namespace

Dataset simulate_scalar_task(const ScalarTaskOptions& o) {
  if (o.dim < 1 || o.n_per_pair < 2) throw Error(Errc::ConfigError, "scalar task needs dim >= 1 and n >= 2");
  if (o.t_values.empty()) throw Error(Errc::ConfigError, "scalar task needs at least one t value");
  for (double t : o.t_values) {
    if (!(t >= 0.0 && t <= 1.0)) throw Error(Errc::ConfigError, "t values must lie in [0, 1]");
  }
  Rng rng(o.seed);
  GaussianPair moments;
  if (o.moments) {
    moments = *o.moments;
    if (moments.src.mean.size() != o.dim || moments.dst.mean.size() != o.dim) {
      throw Error(Errc::ConfigError, "scalar task moments do not match dim");
    }
  } else {
    moments.src = {random_normal(o.dim, 1.0, rng), random_spd_map(o.dim, 0.5, 1.5, rng)};
    moments.dst = {random_normal(o.dim, 2.0, rng), random_spd_map(o.dim, 0.5, 3.0, rng)};
  }
  const auto map = gaussian_monge_map(moments.src, moments.dst);

  Dataset ds;
  ds.name = "scalar";
  ds.feature_dim = o.dim;
  ds.context_kind = ContextKind::Scalar;
  OracleSet oracle;
  oracle.kind = ContextKind::Scalar;
  oracle.base = {map.curvature(), map.b};
  for (std::size_t i = 0; i < o.t_values.size(); ++i) {
    const Context c = Context::scalar(o.t_values[i]);
    Rng pair_rng(rng.next_u64());
    LabeledPair p{pair_id(i), c, sample_gaussian(moments.src, o.n_per_pair, pair_rng), Matrix()};
    p.target = oracle.for_context(c).apply(sample_gaussian(moments.src, o.n_per_pair, pair_rng));
    ds.pairs.push_back(std::move(p));
  }
  ds.oracle = oracle;
  ds.generator = {{"task", "scalar"},     {"dim", o.dim},   {"n_per_pair", o.n_per_pair},
                  {"t_values", o.t_values}, {"seed", o.seed}, {"source", moments_json(moments.src)},
                  {"target", moments_json(moments.dst)}};
  return ds;
}

Dataset simulate_covariate_task(const CovariateTaskOptions& o) {
  if (o.n_classes < 2) throw Error(Errc::ConfigError, "covariate task needs at least 2 classes");
  if (o.dim < 1 || o.n_per_pair < 2) throw Error(Errc::ConfigError, "covariate task needs dim >= 1 and n >= 2");
  Rng rng(o.seed);
  Dataset ds;
  ds.name = "covariate";
  ds.feature_dim = o.dim;
  ds.context_kind = ContextKind::Categorical;
  OracleSet oracle;
  oracle.kind = ContextKind::Categorical;
  AffineOracle shared{random_spd_map(o.dim, 0.5, 2.0, rng), random_normal(o.dim, 2.0, rng)};
  for (int j = 0; j < o.n_classes; ++j) {
    const std::string label = "class" + std::to_string(j);
    const AffineOracle g = o.identical_maps
                               ? shared
                               : AffineOracle{random_spd_map(o.dim, 0.5, 2.0, rng), random_normal(o.dim, 2.0, rng)};
    oracle.by_label[label] = g;
    const Mixture source = random_mixture(o.dim, 2, rng);
    Rng pair_rng(rng.next_u64());
    LabeledPair p{pair_id(static_cast<std::size_t>(j)), Context::categorical(label),
                  source.sample(o.n_per_pair, pair_rng), Matrix()};
    p.target = g.apply(source.sample(o.n_per_pair, pair_rng));
    ds.pairs.push_back(std::move(p));
  }
  ds.oracle = oracle;
  ds.generator = {{"task", "covariate"},  {"dim", o.dim},   {"n_per_pair", o.n_per_pair},
                  {"n_classes", o.n_classes}, {"seed", o.seed}, {"identical_maps", o.identical_maps}};
  return ds;
}

Dataset simulate_action_task(const ActionTaskOptions& o) {
  if (o.n_actions < 2) throw Error(Errc::ConfigError, "action task needs at least 2 actions");
  if (o.dim < 1 || o.n_per_pair < 2) throw Error(Errc::ConfigError, "action task needs dim >= 1 and n >= 2");
  const int max_combos = o.n_actions * (o.n_actions - 1) / 2;
  if (o.n_combos < 0 || o.n_combos > max_combos) {
    throw Error(Errc::TooManyCombos, std::to_string(o.n_combos) + " combinations requested, only " +
                                         std::to_string(max_combos) + " pairs of actions exist");
  }
  Rng rng(o.seed);
  Dataset ds;
  ds.name = "action";
  ds.feature_dim = o.dim;
  ds.context_kind = ContextKind::ActionSet;
  OracleSet oracle;
  oracle.kind = ContextKind::ActionSet;
  const Mixture control = random_mixture(o.dim, 2, rng);
  std::vector<std::string> names;
  for (int k = 0; k < o.n_actions; ++k) {
    names.push_back("a" + std::to_string(k));
    // Eigenvalues >= 0.6 keep every pairwise sum L_k + L_l - I positive definite.
    oracle.by_label[names.back()] = {random_spd_map(o.dim, 0.6, 1.6, rng), random_normal(o.dim, 1.5, rng)};
  }
  std::vector<std::pair<int, int>> all;
  for (int k = 0; k < o.n_actions; ++k)
    for (int l = k + 1; l < o.n_actions; ++l) all.emplace_back(k, l);
  for (std::size_t i = all.size(); i > 1; --i) std::swap(all[i - 1], all[static_cast<std::size_t>(rng.below(i))]);
  all.resize(static_cast<std::size_t>(o.n_combos));
  std::sort(all.begin(), all.end());

  std::vector<Context> contexts;
  for (const auto& n : names) contexts.push_back(Context::action_set({n}));
  for (const auto& [k, l] : all) {
    contexts.push_back(Context::action_set({names[static_cast<std::size_t>(k)], names[static_cast<std::size_t>(l)]}));
  }
  for (std::size_t i = 0; i < contexts.size(); ++i) {
    Rng pair_rng(rng.next_u64());
    LabeledPair p{pair_id(i), contexts[i], control.sample(o.n_per_pair, pair_rng), Matrix()};
    p.target = oracle.for_context(contexts[i]).apply(control.sample(o.n_per_pair, pair_rng));
    ds.pairs.push_back(std::move(p));
  }
  ds.oracle = oracle;
  ds.generator = {{"task", "action"},       {"dim", o.dim},          {"n_per_pair", o.n_per_pair},
                  {"n_actions", o.n_actions}, {"n_combos", o.n_combos}, {"seed", o.seed},
                  {"composition", "additive-displacement"}};
  return ds;
}

// ---------------------------------------------------------------------------
// Splits

const std::vector<int>& default_ladder() {
  static const std::vector<int> ladder{55, 42, 29, 16, 4};
  return ladder;
}

SplitPlan make_splits(const Dataset& dataset, int level, std::uint64_t seed, const std::vector<int>& ladder) {
  if (dataset.context_kind != ContextKind::ActionSet) {
    throw Error(Errc::NotActionTask, "splits need an action task with combinations");
  }
  if (level < 1 || level > static_cast<int>(ladder.size())) {
    throw Error(Errc::ConfigError, "split level must be in 1.." + std::to_string(ladder.size()));
  }
  SplitPlan plan;
  plan.level = level;
  std::vector<std::string> combos;
  for (const auto& p : dataset.pairs) {
    if (p.context.labels.size() == 1) {
      plan.train.push_back(p.id);
    } else {
      combos.push_back(p.id);
    }
  }
  if (combos.empty()) throw Error(Errc::NotActionTask, "dataset has no combinations");
  Rng rng(seed);
  for (std::size_t i = combos.size(); i > 1; --i) std::swap(combos[i - 1], combos[static_cast<std::size_t>(rng.below(i))]);
  const double frac = static_cast<double>(ladder[static_cast<std::size_t>(level - 1)]) / kLadderPool;
  const auto n_train = std::min(combos.size(), static_cast<std::size_t>(std::lround(frac * static_cast<double>(combos.size()))));
  for (std::size_t i = 0; i < combos.size(); ++i) (i < n_train ? plan.train : plan.test).push_back(combos[i]);
  std::sort(plan.train.begin(), plan.train.end());
  std::sort(plan.test.begin(), plan.test.end());
  return plan;
}

json to_json(const SplitPlan& s) { return json{{"level", s.level}, {"train", s.train}, {"test", s.test}}; }

SplitPlan split_from_json(const json& j) {
  SplitPlan s;
  try {
    s.level = j.value("level", 0);
    s.train = j.at("train").get<std::vector<std::string>>();
    s.test = j.at("test").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw Error(Errc::ConfigError, std::string("malformed split: ") + e.what());
  }
  return s;
}

// ---------------------------------------------------------------------------
// PCA

Matrix Pca::project(const Matrix& X) const { return (X.rowwise() - mean) * basis; }

Matrix Pca::inverse_project(const Matrix& Z) const {
  return (Z * basis.transpose()).rowwise() + mean;
}

Pca pca_fit(const Matrix& X, Eigen::Index k, bool strict) {
  if (X.rows() < 2) throw Error(Errc::TooFewSamples, "PCA needs at least 2 samples");
  if (k < 1) throw Error(Errc::InvalidArgument, "PCA needs k >= 1");
  Pca p;
  p.mean = X.colwise().mean();
  const Matrix C = X.rowwise() - p.mean;
  Eigen::BDCSVD<Matrix> svd(C, Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  const double tol = s.size() > 0 ? s[0] * 1e-10 : 0.0;
  Eigen::Index rank = 0;
  while (rank < s.size() && s[rank] > tol) ++rank;
  const Eigen::Index limit = std::min<Eigen::Index>({X.rows() - 1, X.cols(), rank});
  if (k > limit) {
    const std::string msg = "requested " + std::to_string(k) + " components but the data support " +
                            std::to_string(limit);
    if (strict || limit < 1) throw Error(Errc::RankDeficient, msg);
    p.warning = msg + "; k reduced";
    k = limit;
  }
  p.basis = svd.matrixV().leftCols(k);
  // Deterministic sign: the largest-magnitude entry of each direction is positive.
  for (Eigen::Index j = 0; j < k; ++j) {
    Eigen::Index arg = 0;
    p.basis.col(j).cwiseAbs().maxCoeff(&arg);
    if (p.basis(arg, j) < 0) p.basis.col(j) *= -1.0;
  }
  p.explained_variance = s.head(k).array().square() / static_cast<double>(X.rows() - 1);
  return p;
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> r(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j) r[static_cast<std::size_t>(j)] = m(i, j);
    rows.push_back(r);
  }
  return rows;
}

Matrix matrix_from(const json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = rows > 0 ? static_cast<Eigen::Index>(j.at(0).size()) : 0;
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto r = j.at(static_cast<std::size_t>(i)).get<std::vector<double>>();
    if (static_cast<Eigen::Index>(r.size()) != cols) throw Error(Errc::ManifestError, "ragged matrix");
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = r[static_cast<std::size_t>(c)];
  }
  return m;
}

std::vector<std::string> csv_header(Eigen::Index d) {
  std::vector<std::string> h;
  for (Eigen::Index j = 0; j < d; ++j) h.push_back("x" + std::to_string(j));
  return h;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(Errc::IoError, "write failed for " + path.string());
}

[[noreturn]] void manifest_error(const std::string& field, const std::string& what) {
  throw Error(Errc::ManifestError, field + ": " + what);
}

}  // namespace

json to_json(const AffineOracle& o) {
  return json{{"linear", matrix_json(o.linear)}, {"offset", std::vector<double>(o.offset.begin(), o.offset.end())}};
}

AffineOracle affine_oracle_from_json(const json& j) {
  AffineOracle o;
  o.linear = matrix_from(j.at("linear"));
  const auto off = j.at("offset").get<std::vector<double>>();
  o.offset = Eigen::Map<const Vector>(off.data(), static_cast<Eigen::Index>(off.size()));
  if (o.linear.rows() != o.offset.size() || o.linear.cols() != o.offset.size()) {
    throw Error(Errc::ManifestError, "oracle map has inconsistent shapes");
  }
  return o;
}

json to_json(const OracleSet& o) {
  json labels = json::object();
  for (const auto& [k, v] : o.by_label) labels[k] = to_json(v);
  json j{{"kind", to_string(o.kind)}, {"by_label", labels}};
  if (o.kind == ContextKind::Scalar) j["base"] = to_json(o.base);
  return j;
}

OracleSet oracle_set_from_json(const json& j) {
  OracleSet o;
  o.kind = context_kind_from_string(j.at("kind").get<std::string>());
  if (j.contains("base")) o.base = affine_oracle_from_json(j.at("base"));
  for (const auto& [k, v] : j.at("by_label").items()) o.by_label[k] = affine_oracle_from_json(v);
  return o;
}

fs::path save_dataset(const Dataset& ds, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(Errc::IoError, "cannot create " + dir.string() + ": " + ec.message());
  const auto header = csv_header(ds.feature_dim);
  json pairs = json::array();
  for (const auto& p : ds.pairs) {
    const std::string src = p.id + "_source.csv";
    const std::string tgt = p.id + "_target.csv";
    write_csv(dir / src, p.source, header);
    write_csv(dir / tgt, p.target, header);
    pairs.push_back({{"id", p.id}, {"context", to_json(p.context)}, {"source", src}, {"target", tgt}});
  }
  json manifest{{"format", kManifestFormat},
                {"version", kManifestVersion},
                {"name", ds.name},
                {"feature_dim", ds.feature_dim},
                {"context_kind", to_string(ds.context_kind)},
                {"rng", Rng::kRngName},
                {"pairs", pairs}};
  if (!ds.generator.is_null()) manifest["generator"] = ds.generator;
  if (ds.oracle) {
    write_text(dir / "oracles.json", to_json(*ds.oracle).dump(2) + "\n");
    manifest["oracles"] = "oracles.json";
  }
  const fs::path path = dir / "manifest.json";
  write_text(path, manifest.dump(2) + "\n");
  return path;
}

Dataset load_dataset(const fs::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) manifest_error(manifest_path.string(), "cannot open manifest");
  json m;
  try {
    m = json::parse(in);
  } catch (const json::exception& e) {
    manifest_error(manifest_path.string(), std::string("invalid JSON: ") + e.what());
  }
  const fs::path dir = manifest_path.parent_path();
  if (m.value("format", std::string()) != kManifestFormat) manifest_error("format", "expected '" + std::string(kManifestFormat) + "'");
  if (m.value("version", 0) != kManifestVersion) manifest_error("version", "unsupported version");

  Dataset ds;
  ds.name = m.value("name", std::string("dataset"));
  if (!m.contains("feature_dim") || !m["feature_dim"].is_number_integer() || m["feature_dim"].get<long long>() < 1) {
    manifest_error("feature_dim", "must be a positive integer");
  }
  ds.feature_dim = m["feature_dim"].get<Eigen::Index>();
  try {
    ds.context_kind = context_kind_from_string(m.value("context_kind", std::string()));
  } catch (const Error& e) {
    manifest_error("context_kind", e.what());
  }
  if (!m.contains("pairs") || !m["pairs"].is_array() || m["pairs"].empty()) {
    manifest_error("pairs", "must be a nonempty array");
  }
  std::set<std::string> seen;
  for (std::size_t i = 0; i < m["pairs"].size(); ++i) {
    const json& pj = m["pairs"][i];
    const std::string field = "pairs[" + std::to_string(i) + "]";
    LabeledPair p;
    if (!pj.contains("id") || !pj["id"].is_string()) manifest_error(field + ".id", "missing");
    p.id = pj["id"].get<std::string>();
    if (!seen.insert(p.id).second) manifest_error(field + ".id", "duplicate id '" + p.id + "'");
    try {
      p.context = context_from_json(pj.value("context", json()));
    } catch (const Error& e) {
      manifest_error(field + ".context", e.what());
    }
    if (p.context.kind != ds.context_kind) manifest_error(field + ".context", "kind differs from context_kind");
    for (const char* which : {"source", "target"}) {
      if (!pj.contains(which) || !pj[which].is_string()) manifest_error(field + "." + which, "missing path");
      const fs::path path = dir / pj[which].get<std::string>();
      if (!fs::exists(path)) manifest_error(field + "." + which, "file '" + path.string() + "' not found");
      Matrix x;
      try {
        x = read_csv(path);
      } catch (const Error& e) {
        manifest_error(field + "." + which, e.what());
      }
      if (x.cols() != ds.feature_dim) {
        manifest_error(field + "." + which, "pair '" + p.id + "' has " + std::to_string(x.cols()) +
                                                 " columns, feature_dim is " + std::to_string(ds.feature_dim));
      }
      if (x.rows() < 1) manifest_error(field + "." + which, "pair '" + p.id + "' has no samples");
      (std::string(which) == "source" ? p.source : p.target) = std::move(x);
    }
    ds.pairs.push_back(std::move(p));
  }
  if (m.contains("generator")) ds.generator = m["generator"];
  if (m.contains("oracles")) {
    const fs::path path = dir / m["oracles"].get<std::string>();
    std::ifstream oin(path);
    if (!oin) manifest_error("oracles", "file '" + path.string() + "' not found");
    try {
      ds.oracle = oracle_set_from_json(json::parse(oin));
    } catch (const std::exception& e) {
      manifest_error("oracles", e.what());
    }
  }
  return ds;
}

}  // namespace condot
