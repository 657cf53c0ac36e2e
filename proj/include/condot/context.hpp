#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "condot/autodiff.hpp"

namespace condot {

enum class ContextKind { Scalar, Categorical, ActionSet };

std::string to_string(ContextKind k);
ContextKind context_kind_from_string(const std::string& s);

/// A condition attached to one (source, target) pair.
struct Context {
  ContextKind kind = ContextKind::Scalar;
  double t = 0.0;                   // Scalar
  std::string label;                // Categorical
  std::vector<std::string> labels;  // ActionSet (stored sorted)

  static Context scalar(double t);
  static Context categorical(std::string label);
  static Context action_set(std::vector<std::string> labels);

  /// Canonical text form, e.g. "t=0.5", "K562", "a1+a3".
  std::string key() const;
  bool operator==(const Context& o) const;
};

nlohmann::json to_json(const Context& c);
Context context_from_json(const nlohmann::json& j);

Vector embed_onehot(const std::string& label, const std::vector<std::string>& vocab);
/// Elementwise sum of equally long vectors.
Vector combine_multihot(const std::vector<Vector>& parts);

// ---------------------------------------------------------------------------
// SMACOF / mode-of-action embedding

struct SmacofOptions {
  int max_iters = 300;
  double rel_tol = 1e-6;
  int restarts = 4;
};

struct SmacofResult {
  Matrix X;                     // n x dim configuration
  double stress = 0.0;          // sum_{i<j} (delta_ij - ||x_i - x_j||)^2
  std::vector<double> history;  // stress after each iteration of the kept restart
  int restart = 0;
};

double raw_stress(const Matrix& D, const Matrix& X);
/// Classical (Torgerson) scaling, used as the first SMACOF start.
Matrix classical_mds(const Matrix& D, Eigen::Index dim);
/// Stress majorisation from a given start.
SmacofResult smacof_from(const Matrix& D, Matrix X0, const SmacofOptions& options = {});
/// Best of `restarts` runs: classical start first, then seeded random starts.
SmacofResult smacof(const Matrix& D, Eigen::Index dim, std::uint64_t seed,
                    const SmacofOptions& options = {});

struct MoaEmbedding {
  std::vector<std::string> labels;
  Matrix vectors;  // one row per label
  double stress = 0.0;
  double epsilon = 0.1;
  Matrix distance;

  Vector lookup(const std::string& label) const;
  Eigen::Index dim() const { return vectors.cols(); }
};

/// Distances are sqrt of the debiased Sinkhorn divergence between target populations.
MoaEmbedding build_moa_embedding(const std::vector<std::pair<std::string, Matrix>>& targets,
                                 Eigen::Index dim = 10, std::uint64_t seed = 0,
                                 double epsilon = 0.1, const SmacofOptions& options = {});

nlohmann::json to_json(const MoaEmbedding& e);
MoaEmbedding moa_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Deep-set combinator: rho(sum_k phi(e_k)) with two softplus layers in the
// encoder phi and a softplus + sigmoid decoder rho.

struct DeepSetSpec {
  Eigen::Index input_dim = 1;
  Eigen::Index hidden = 8;
};

ad::ParamVector make_deepset_params(const DeepSetSpec& spec);
ad::ParamVector init_deepset(const DeepSetSpec& spec, std::uint64_t seed);
DeepSetSpec deepset_spec_of(const ad::ParamVector& params);

/// Elements are pooled in lexicographic order of their values, so the result
/// does not depend on the order of `parts`.
ad::Var combine_deepset(const ad::ParamVars& Phi, const std::vector<ad::Var>& parts);
Vector combine_deepset(const ad::ParamVector& Phi, const std::vector<Vector>& parts);

// ---------------------------------------------------------------------------
// Embedding + combinator pipeline producing the PICNN context c_hat.

enum class EmbeddingKind { Scalar, OneHot, Moa };
enum class CombinatorKind { None, MultiHot, DeepSet };

std::string to_string(EmbeddingKind k);
std::string to_string(CombinatorKind k);
EmbeddingKind embedding_kind_from_string(const std::string& s);
CombinatorKind combinator_kind_from_string(const std::string& s);

struct ContextEncoder {
  ContextKind kind = ContextKind::Scalar;
  EmbeddingKind embedding = EmbeddingKind::Scalar;
  CombinatorKind combinator = CombinatorKind::None;
  std::vector<std::string> vocab;
  double scalar_mean = 0.0;
  double scalar_std = 1.0;
  bool trainable_embedding = false;
  Matrix table;          // fixed embedding table (vocab x dim) when not trainable
  ad::ParamVector phi;   // "emb.table" when trainable
  ad::ParamVector Phi;   // deep-set parameters

  Eigen::Index embed_dim() const;
  Eigen::Index output_dim() const;
  /// Row index of a label in the vocabulary; UnknownLabel otherwise.
  Eigen::Index label_index(const std::string& label) const;

  ad::Var encode(ad::Tape& tape, const ad::ParamVars& phi_vars, const ad::ParamVars& Phi_vars,
                 const Context& c) const;
  Vector encode(const Context& c) const;
};

struct EncoderOptions {
  EmbeddingKind embedding = EmbeddingKind::OneHot;
  CombinatorKind combinator = CombinatorKind::MultiHot;
  bool trainable_embedding = false;
  const MoaEmbedding* moa = nullptr;
  std::uint64_t seed = 0;
};

/// Builds the encoder from the training contexts (vocabulary, scalar
/// normalisation). Scalar contexts ignore the embedding/combinator options.
ContextEncoder make_encoder(const std::vector<Context>& train_contexts, const EncoderOptions& options);

nlohmann::json to_json(const ContextEncoder& e);
ContextEncoder encoder_from_json(const nlohmann::json& j);

}  // namespace condot
