#include "condot/context.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "condot/networks.hpp"
#include "condot/ot_metrics.hpp"

namespace condot {

using ad::Var;
using json = nlohmann::json;

std::string to_string(ContextKind k) {
  switch (k) {
    case ContextKind::Scalar: return "scalar";
    case ContextKind::Categorical: return "categorical";
    case ContextKind::ActionSet: return "action_set";
  }
  return "?";
}

ContextKind context_kind_from_string(const std::string& s) {
  if (s == "scalar") return ContextKind::Scalar;
  if (s == "categorical") return ContextKind::Categorical;
  if (s == "action_set") return ContextKind::ActionSet;
  throw Error(Errc::ConfigError, "unknown context kind '" + s + "'");
}

Context Context::scalar(double t) {
  Context c;
  c.kind = ContextKind::Scalar;
  c.t = t;
  return c;
}

Context Context::categorical(std::string label) {
  Context c;
  c.kind = ContextKind::Categorical;
  c.label = std::move(label);
  return c;
}

Context Context::action_set(std::vector<std::string> labels) {
  if (labels.empty()) throw Error(Errc::EmptySet, "an action set needs at least one action");
  Context c;
  c.kind = ContextKind::ActionSet;
  std::sort(labels.begin(), labels.end());
  c.labels = std::move(labels);
  return c;
}

std::string Context::key() const {
  switch (kind) {
    case ContextKind::Scalar: {
      std::ostringstream os;
      os.precision(17);
      os << "t=" << t;
      return os.str();
    }
    case ContextKind::Categorical: return label;
    case ContextKind::ActionSet: {
      std::string k;
      for (const auto& l : labels) k += (k.empty() ? "" : "+") + l;
      return k;
    }
  }
  return "";
}

bool Context::operator==(const Context& o) const {
  return kind == o.kind && t == o.t && label == o.label && labels == o.labels;
}

json to_json(const Context& c) {
  switch (c.kind) {
    case ContextKind::Scalar: return json{{"kind", "scalar"}, {"t", c.t}};
    case ContextKind::Categorical: return json{{"kind", "categorical"}, {"label", c.label}};
    case ContextKind::ActionSet: return json{{"kind", "action_set"}, {"labels", c.labels}};
  }
  return {};
}

Context context_from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind")) {
    throw Error(Errc::ConfigError, "context must be an object with a 'kind'");
  }
  const auto kind = context_kind_from_string(j.at("kind").get<std::string>());
  try {
    switch (kind) {
      case ContextKind::Scalar: return Context::scalar(j.at("t").get<double>());
      case ContextKind::Categorical: return Context::categorical(j.at("label").get<std::string>());
      case ContextKind::ActionSet:
        return Context::action_set(j.at("labels").get<std::vector<std::string>>());
    }
  } catch (const json::exception& e) {
    throw Error(Errc::ConfigError, std::string("malformed context: ") + e.what());
  }
  return {};
}

Vector embed_onehot(const std::string& label, const std::vector<std::string>& vocab) {
  const auto it = std::find(vocab.begin(), vocab.end(), label);
  if (it == vocab.end()) throw Error(Errc::UnknownLabel, "label '" + label + "' is not in the vocabulary");
  Vector v = Vector::Zero(static_cast<Eigen::Index>(vocab.size()));
  v[it - vocab.begin()] = 1.0;
  return v;
}

Vector combine_multihot(const std::vector<Vector>& parts) {
  if (parts.empty()) throw Error(Errc::EmptySet, "nothing to combine");
  const Eigen::Index d = parts.front().size();
  for (const auto& p : parts) {
    if (p.size() != d) {
      throw Error(Errc::LengthMismatch, "multi-hot parts have lengths " + std::to_string(d) + " and " +
                                            std::to_string(p.size()));
    }
  }
  // Summing in a canonical order makes the result bit-identical for every permutation.
  std::vector<const Vector*> sorted;
  for (const auto& p : parts) sorted.push_back(&p);
  std::stable_sort(sorted.begin(), sorted.end(), [&](const Vector* a, const Vector* b) {
    return std::lexicographical_compare(a->data(), a->data() + d, b->data(), b->data() + d);
  });
  Vector out = *sorted.front();
  for (std::size_t k = 1; k < sorted.size(); ++k) out += *sorted[k];
  return out;
}

// ---------------------------------------------------------------------------
// SMACOF

namespace {

Matrix pairwise_dist(const Matrix& X) {
  const Eigen::Index n = X.rows();
  Matrix d = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) d(i, j) = d(j, i) = (X.row(i) - X.row(j)).norm();
  return d;
}

void check_distance_matrix(const Matrix& D) {
  if (D.rows() != D.cols()) throw Error(Errc::ShapeMismatch, "distance matrix must be square");
  if (D.rows() < 2) throw Error(Errc::TooFewLabels, "MDS needs at least two points");
  if (!D.allFinite() || D.minCoeff() < 0.0) {
    throw Error(Errc::InvalidArgument, "distances must be finite and nonnegative");
  }
}

}  // namespace

double raw_stress(const Matrix& D, const Matrix& X) {
  const Matrix d = pairwise_dist(X);
  double s = 0.0;
  for (Eigen::Index i = 0; i < D.rows(); ++i)
    for (Eigen::Index j = i + 1; j < D.rows(); ++j) s += (D(i, j) - d(i, j)) * (D(i, j) - d(i, j));
  return s;
}

Matrix classical_mds(const Matrix& D, Eigen::Index dim) {
  check_distance_matrix(D);
  const Eigen::Index n = D.rows();
  const Matrix J = Matrix::Identity(n, n) - Matrix::Constant(n, n, 1.0 / static_cast<double>(n));
  const Matrix B = symmetrize(-0.5 * J * D.cwiseProduct(D) * J);
  Eigen::SelfAdjointEigenSolver<Matrix> es(B);
  Matrix X = Matrix::Zero(n, dim);
  // Eigenvalues come in ascending order.
  for (Eigen::Index k = 0; k < std::min(dim, n); ++k) {
    const double lambda = es.eigenvalues()[n - 1 - k];
    if (lambda <= 0.0) break;
    X.col(k) = es.eigenvectors().col(n - 1 - k) * std::sqrt(lambda);
  }
  return X;
}

SmacofResult smacof_from(const Matrix& D, Matrix X, const SmacofOptions& options) {
  check_distance_matrix(D);
  const Eigen::Index n = D.rows();
  const Matrix delta = 0.5 * (D + D.transpose());
  SmacofResult r;
  double stress = raw_stress(delta, X);
  const double scale = std::max(delta.squaredNorm(), std::numeric_limits<double>::min());
  for (int it = 0; it < options.max_iters; ++it) {
    if (stress <= 1e-28 * scale) break;
    // Guttman transform X <- B(X) X / n.
    const Matrix d = pairwise_dist(X);
    Matrix B = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        if (i != j && d(i, j) > 0.0) B(i, j) = -delta(i, j) / d(i, j);
      }
      B(i, i) = -B.row(i).sum();
    }
    Matrix next = B * X / static_cast<double>(n);
    const double next_stress = raw_stress(delta, next);
    // Majorisation never increases the stress; a larger value can only be rounding.
    if (next_stress > stress) break;
    const double decrease = stress - next_stress;
    X = std::move(next);
    stress = next_stress;
    r.history.push_back(stress);
    if (decrease <= options.rel_tol * stress) break;
  }
  r.X = std::move(X);
  r.stress = stress;
  return r;
}

SmacofResult smacof(const Matrix& D, Eigen::Index dim, std::uint64_t seed, const SmacofOptions& options) {
  check_distance_matrix(D);
  if (dim < 1) throw Error(Errc::InvalidArgument, "embedding dimension must be positive");
  const Matrix delta = 0.5 * (D + D.transpose());
  Rng rng(seed);
  SmacofResult best;
  best.stress = std::numeric_limits<double>::infinity();
  const double spread = delta.maxCoeff() > 0.0 ? delta.maxCoeff() : 1.0;
  for (int k = 0; k < std::max(options.restarts, 1); ++k) {
    Matrix X0;
    if (k == 0) {
      X0 = classical_mds(delta, dim);
    } else {
      X0.resize(delta.rows(), dim);
      for (Eigen::Index i = 0; i < X0.rows(); ++i)
        for (Eigen::Index j = 0; j < dim; ++j) X0(i, j) = spread * rng.normal();
    }
    SmacofResult r = smacof_from(delta, std::move(X0), options);
    r.restart = k;
    if (r.stress < best.stress) best = std::move(r);
  }
  return best;
}

Vector MoaEmbedding::lookup(const std::string& label) const {
  const auto it = std::find(labels.begin(), labels.end(), label);
  if (it == labels.end()) throw Error(Errc::UnknownLabel, "no MoA vector for '" + label + "'");
  return vectors.row(it - labels.begin()).transpose();
}

MoaEmbedding build_moa_embedding(const std::vector<std::pair<std::string, Matrix>>& targets,
                                 Eigen::Index dim, std::uint64_t seed, double epsilon,
                                 const SmacofOptions& options) {
  if (targets.size() < 2) throw Error(Errc::TooFewLabels, "MoA embedding needs at least two labels");
  for (const auto& [label, x] : targets) {
    if (x.rows() < 2) throw Error(Errc::TooFewSamples, "population '" + label + "' has fewer than 2 samples");
  }
  const auto n = static_cast<Eigen::Index>(targets.size());
  SinkhornOptions so;
  so.eps = epsilon;
  std::vector<double> self(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) self[i] = sinkhorn(targets[i].second, targets[i].second, so).cost;
  Matrix D = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      const auto& a = targets[static_cast<std::size_t>(i)].second;
      const auto& b = targets[static_cast<std::size_t>(j)].second;
      const double div = sinkhorn(a, b, so).cost - 0.5 * self[static_cast<std::size_t>(i)] -
                         0.5 * self[static_cast<std::size_t>(j)];
      D(i, j) = std::sqrt(std::max(div, 0.0));
    }
  D = 0.5 * (D + D.transpose());

  MoaEmbedding e;
  for (const auto& t : targets) e.labels.push_back(t.first);
  const auto r = smacof(D, dim, seed, options);
  e.vectors = r.X;
  e.stress = r.stress;
  e.epsilon = epsilon;
  e.distance = D;
  return e;
}

namespace {

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> r(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j) r[static_cast<std::size_t>(j)] = m(i, j);
    rows.push_back(r);
  }
  return rows;
}

Matrix matrix_from_json(const json& j, Eigen::Index cols_if_empty = 0) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = rows > 0 ? static_cast<Eigen::Index>(j.at(0).size()) : cols_if_empty;
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& r = j.at(static_cast<std::size_t>(i));
    if (static_cast<Eigen::Index>(r.size()) != cols) throw Error(Errc::ConfigError, "ragged matrix in JSON");
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = r.at(static_cast<std::size_t>(c)).get<double>();
  }
  return m;
}

}  // namespace

json to_json(const MoaEmbedding& e) {
  return json{{"labels", e.labels},
              {"vectors", matrix_to_json(e.vectors)},
              {"stress", e.stress},
              {"epsilon", e.epsilon},
              {"distance", matrix_to_json(e.distance)}};
}

MoaEmbedding moa_from_json(const json& j) {
  MoaEmbedding e;
  try {
    e.labels = j.at("labels").get<std::vector<std::string>>();
    e.vectors = matrix_from_json(j.at("vectors"));
    e.stress = j.value("stress", 0.0);
    e.epsilon = j.value("epsilon", 0.1);
    if (j.contains("distance")) e.distance = matrix_from_json(j.at("distance"));
  } catch (const json::exception& ex) {
    throw Error(Errc::ConfigError, std::string("malformed MoA embedding: ") + ex.what());
  }
  if (static_cast<std::size_t>(e.vectors.rows()) != e.labels.size()) {
    throw Error(Errc::ConfigError, "MoA embedding has " + std::to_string(e.labels.size()) + " labels but " +
                                       std::to_string(e.vectors.rows()) + " vectors");
  }
  return e;
}

// ---------------------------------------------------------------------------
// Deep set

namespace {
constexpr double kDeepSetNoise = 0.01;
constexpr double kDeepSetGain = 4.0;
constexpr double kDeepSetOffset = -2.0;
}  // namespace

ad::ParamVector make_deepset_params(const DeepSetSpec& spec) {
  if (spec.input_dim < 1 || spec.hidden < 1) throw Error(Errc::ConfigError, "deep set dimensions must be positive");
  ad::ParamVector p;
  const Eigen::Index h = spec.hidden;
  p.add("enc0.W", spec.input_dim, h);
  p.add("enc0.b", 1, h);
  p.add("enc1.W", h, h);
  p.add("enc1.b", 1, h);
  p.add("dec0.W", h, h);
  p.add("dec0.b", 1, h);
  p.add("dec1.W", h, spec.input_dim);
  p.add("dec1.b", 1, spec.input_dim);
  return p;
}

ad::ParamVector init_deepset(const DeepSetSpec& spec, std::uint64_t seed) {
  auto p = make_deepset_params(spec);
  Rng rng(seed);
  for (const auto& e : p.entries()) {
    auto w = p.view(e.name);
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = rng.uniform(-kDeepSetNoise, kDeepSetNoise);
  }
  // Start as a squashed multi-hot sum: hidden unit i carries +x_i and unit
  // d + i carries -x_i through the encoder, pooling and decoder, and the
  // output recombines them. Sets that share elements then start out close.
  const Eigen::Index d = spec.input_dim, h = spec.hidden;
  auto enc0 = p.view("enc0.W");
  auto dec1 = p.view("dec1.W");
  for (Eigen::Index i = 0; i < d; ++i) {
    if (i < h) {
      enc0(i, i) += kDeepSetGain;
      dec1(i, i) += 1.0;
    }
    if (d + i < h) {
      enc0(i, d + i) -= kDeepSetGain;
      dec1(d + i, i) -= 1.0;
    }
  }
  p.view("enc1.W") += Matrix::Identity(h, h);
  p.view("dec0.W") += Matrix::Identity(h, h);
  p.view("dec1.b").array() += kDeepSetOffset;
  return p;
}

DeepSetSpec deepset_spec_of(const ad::ParamVector& params) {
  const auto& e = params.entry("enc0.W");
  return {e.rows, e.cols};
}

Var combine_deepset(const ad::ParamVars& Phi, const std::vector<Var>& parts) {
  if (parts.empty()) throw Error(Errc::EmptySet, "deep set over an empty collection");
  const Eigen::Index d = parts.front().cols();
  for (const auto& v : parts) {
    if (v.rows() != 1 || v.cols() != d) throw Error(Errc::LengthMismatch, "deep-set parts differ in length");
  }
  std::vector<std::size_t> order(parts.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const Matrix& x = parts[a].value();
    const Matrix& y = parts[b].value();
    return std::lexicographical_compare(x.data(), x.data() + d, y.data(), y.data() + d);
  });
  std::vector<Var> sorted;
  sorted.reserve(parts.size());
  for (auto i : order) sorted.push_back(parts[i]);
  const Var E = sorted.size() == 1 ? sorted.front() : ad::concat_rows(sorted);
  const Var h0 = ad::softplus(ad::add_row(ad::matmul(E, Phi["enc0.W"]), Phi["enc0.b"]));
  const Var h1 = ad::softplus(ad::add_row(ad::matmul(h0, Phi["enc1.W"]), Phi["enc1.b"]));
  const Var pooled = ad::sum_rows(h1);
  const Var r0 = ad::softplus(ad::add_row(ad::matmul(pooled, Phi["dec0.W"]), Phi["dec0.b"]));
  return ad::sigmoid(ad::add_row(ad::matmul(r0, Phi["dec1.W"]), Phi["dec1.b"]));
}

Vector combine_deepset(const ad::ParamVector& Phi, const std::vector<Vector>& parts) {
  ad::Tape tape;
  const ad::ParamVars pv(tape, Phi, false);
  std::vector<Var> vars;
  vars.reserve(parts.size());
  for (const auto& p : parts) vars.push_back(tape.constant(p.transpose()));
  return combine_deepset(pv, vars).value().row(0).transpose();
}

// ---------------------------------------------------------------------------
// Encoder

std::string to_string(EmbeddingKind k) {
  switch (k) {
    case EmbeddingKind::Scalar: return "scalar";
    case EmbeddingKind::OneHot: return "onehot";
    case EmbeddingKind::Moa: return "moa";
  }
  return "?";
}

std::string to_string(CombinatorKind k) {
  switch (k) {
    case CombinatorKind::None: return "none";
    case CombinatorKind::MultiHot: return "multihot";
    case CombinatorKind::DeepSet: return "deepset";
  }
  return "?";
}

EmbeddingKind embedding_kind_from_string(const std::string& s) {
  if (s == "scalar") return EmbeddingKind::Scalar;
  if (s == "onehot") return EmbeddingKind::OneHot;
  if (s == "moa") return EmbeddingKind::Moa;
  throw Error(Errc::ConfigError, "unknown embedding '" + s + "'");
}

CombinatorKind combinator_kind_from_string(const std::string& s) {
  if (s == "none") return CombinatorKind::None;
  if (s == "multihot") return CombinatorKind::MultiHot;
  if (s == "deepset") return CombinatorKind::DeepSet;
  throw Error(Errc::ConfigError, "unknown combinator '" + s + "'");
}

Eigen::Index ContextEncoder::embed_dim() const {
  if (kind == ContextKind::Scalar) return 1;
  return trainable_embedding ? phi.entry("emb.table").cols : table.cols();
}

Eigen::Index ContextEncoder::output_dim() const { return embed_dim(); }

Eigen::Index ContextEncoder::label_index(const std::string& label) const {
  const auto it = std::find(vocab.begin(), vocab.end(), label);
  if (it == vocab.end()) throw Error(Errc::UnknownLabel, "label '" + label + "' is not in the vocabulary");
  return it - vocab.begin();
}

Var ContextEncoder::encode(ad::Tape& tape, const ad::ParamVars& phi_vars, const ad::ParamVars& Phi_vars,
                           const Context& c) const {
  if (c.kind != kind) {
    throw Error(Errc::ShapeMismatch, "context of kind " + to_string(c.kind) + " given to a " +
                                         to_string(kind) + " encoder");
  }
  if (kind == ContextKind::Scalar) {
    return tape.constant(Matrix::Constant(1, 1, (c.t - scalar_mean) / scalar_std));
  }
  auto row = [&](const std::string& label) -> Var {
    const Eigen::Index i = label_index(label);
    if (trainable_embedding) return ad::slice_rows(phi_vars["emb.table"], i, 1);
    return tape.constant(table.row(i));
  };
  if (kind == ContextKind::Categorical) return row(c.label);

  std::vector<Var> parts;
  parts.reserve(c.labels.size());
  for (const auto& l : c.labels) parts.push_back(row(l));
  switch (combinator) {
    case CombinatorKind::DeepSet: return combine_deepset(Phi_vars, parts);
    case CombinatorKind::None:
      if (parts.size() != 1) throw Error(Errc::InvalidArgument, "combination context without a combinator");
      return parts.front();
    case CombinatorKind::MultiHot: {
      // Sum in sorted-label order (labels are kept sorted).
      Var s = parts.front();
      for (std::size_t k = 1; k < parts.size(); ++k) s = ad::add(s, parts[k]);
      return s;
    }
  }
  return parts.front();
}

Vector ContextEncoder::encode(const Context& c) const {
  ad::Tape tape;
  const ad::ParamVars pv(tape, phi, false);
  const ad::ParamVars Pv(tape, Phi, false);
  return encode(tape, pv, Pv, c).value().row(0).transpose();
}

ContextEncoder make_encoder(const std::vector<Context>& train_contexts, const EncoderOptions& options) {
  if (train_contexts.empty()) throw Error(Errc::EmptySet, "no training contexts");
  ContextEncoder e;
  e.kind = train_contexts.front().kind;
  for (const auto& c : train_contexts) {
    if (c.kind != e.kind) throw Error(Errc::ConfigError, "training contexts mix kinds");
  }
  if (e.kind == ContextKind::Scalar) {
    e.embedding = EmbeddingKind::Scalar;
    e.combinator = CombinatorKind::None;
    double sum = 0.0;
    for (const auto& c : train_contexts) sum += c.t;
    const double mean = sum / static_cast<double>(train_contexts.size());
    double var = 0.0;
    for (const auto& c : train_contexts) var += (c.t - mean) * (c.t - mean);
    var /= static_cast<double>(train_contexts.size());
    e.scalar_mean = mean;
    e.scalar_std = var > 0.0 ? std::sqrt(var) : 1.0;
    return e;
  }

  e.embedding = options.embedding == EmbeddingKind::Scalar ? EmbeddingKind::OneHot : options.embedding;
  e.combinator = e.kind == ContextKind::ActionSet ? options.combinator : CombinatorKind::None;
  for (const auto& c : train_contexts) {
    if (c.kind == ContextKind::Categorical) e.vocab.push_back(c.label);
    for (const auto& l : c.labels) e.vocab.push_back(l);
  }
  if (e.embedding == EmbeddingKind::Moa) {
    if (options.moa == nullptr) throw Error(Errc::ConfigError, "MoA embedding requested without a table");
    for (const auto& l : options.moa->labels) e.vocab.push_back(l);
  }
  std::sort(e.vocab.begin(), e.vocab.end());
  e.vocab.erase(std::unique(e.vocab.begin(), e.vocab.end()), e.vocab.end());

  const auto V = static_cast<Eigen::Index>(e.vocab.size());
  if (e.embedding == EmbeddingKind::OneHot) {
    e.table = Matrix::Identity(V, V);
  } else {
    e.table.resize(V, options.moa->dim());
    for (Eigen::Index i = 0; i < V; ++i) e.table.row(i) = options.moa->lookup(e.vocab[static_cast<std::size_t>(i)]).transpose();
  }
  e.trainable_embedding = options.trainable_embedding;
  if (e.trainable_embedding) {
    e.phi.add("emb.table", e.table.rows(), e.table.cols());
    e.phi.view("emb.table") = e.table;
  }
  if (e.combinator == CombinatorKind::DeepSet) e.Phi = init_deepset({e.table.cols(), std::max<Eigen::Index>(8, 2 * e.table.cols())}, options.seed);
  return e;
}

json to_json(const ContextEncoder& e) {
  json j{{"kind", to_string(e.kind)},
         {"embedding", to_string(e.embedding)},
         {"combinator", to_string(e.combinator)},
         {"vocab", e.vocab},
         {"scalar_mean", e.scalar_mean},
         {"scalar_std", e.scalar_std},
         {"trainable_embedding", e.trainable_embedding},
         {"table", matrix_to_json(e.table)},
         {"table_cols", e.table.cols()}};
  j["phi"] = params_to_json(e.phi);
  j["Phi"] = params_to_json(e.Phi);
  return j;
}

ContextEncoder encoder_from_json(const json& j) {
  ContextEncoder e;
  try {
    e.kind = context_kind_from_string(j.at("kind").get<std::string>());
    e.embedding = embedding_kind_from_string(j.at("embedding").get<std::string>());
    e.combinator = combinator_kind_from_string(j.at("combinator").get<std::string>());
    e.vocab = j.at("vocab").get<std::vector<std::string>>();
    e.scalar_mean = j.at("scalar_mean").get<double>();
    e.scalar_std = j.at("scalar_std").get<double>();
    e.trainable_embedding = j.at("trainable_embedding").get<bool>();
    e.table = matrix_from_json(j.at("table"), j.value("table_cols", Eigen::Index{0}));
    e.phi = params_from_json(j.at("phi"));
    e.Phi = params_from_json(j.at("Phi"));
  } catch (const json::exception& ex) {
    throw Error(Errc::ConfigError, std::string("malformed context encoder: ") + ex.what());
  }
  return e;
}

}  // namespace condot
