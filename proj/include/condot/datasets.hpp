#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "condot/context.hpp"
#include "condot/gaussian_ot.hpp"

namespace condot {

/// Ground-truth affine map x -> L x + b.
struct AffineOracle {
  Matrix linear;
  Vector offset;

  Matrix apply(const Matrix& X) const;
  static AffineOracle identity(Eigen::Index d);
};

/// Ground truth for every context of a synthetic task, including contexts
/// that have no pair in the dataset (held-out doses or combinations).
struct OracleSet {
  ContextKind kind = ContextKind::Scalar;
  AffineOracle base;                              // scalar tasks: the t = 1 map
  std::map<std::string, AffineOracle> by_label;   // classes or single actions

  /// Scalar: (1 - t) Id + t base. Categorical: the class map. Action sets:
  /// Id + sum_k (T_k - Id).
  AffineOracle for_context(const Context& c) const;
};

/// T = Id + sum_k (T_k - Id); with a single map this returns it unchanged.
AffineOracle compose_additive(const std::vector<AffineOracle>& maps);

struct LabeledPair {
  std::string id;
  Context context;
  Matrix source;
  Matrix target;
};

struct Dataset {
  std::string name;
  Eigen::Index feature_dim = 0;
  ContextKind context_kind = ContextKind::Scalar;
  std::vector<LabeledPair> pairs;
  std::optional<OracleSet> oracle;
  nlohmann::json generator;  // parameters that produced a synthetic dataset

  const LabeledPair& pair(const std::string& id) const;
};

struct ScalarTaskOptions {
  Eigen::Index dim = 2;
  Eigen::Index n_per_pair = 500;
  std::vector<double> t_values{0.0, 0.25, 0.5, 1.0};
  std::uint64_t seed = 0;
  /// Fixes the endpoint map as the Gaussian map between these moments; random otherwise.
  std::optional<GaussianPair> moments;
};

struct CovariateTaskOptions {
  Eigen::Index dim = 2;
  Eigen::Index n_per_pair = 500;
  int n_classes = 3;
  std::uint64_t seed = 0;
  /// Every class uses the same map (control for context-blind comparisons).
  bool identical_maps = false;
};

struct ActionTaskOptions {
  Eigen::Index dim = 2;
  Eigen::Index n_per_pair = 500;
  int n_actions = 6;
  int n_combos = 6;
  std::uint64_t seed = 0;
};

Dataset simulate_scalar_task(const ScalarTaskOptions& options);
Dataset simulate_covariate_task(const CovariateTaskOptions& options);
Dataset simulate_action_task(const ActionTaskOptions& options);

// ---------------------------------------------------------------------------
// Splits

/// Train-combination counts per level over the reference pool of 84 combinations.
const std::vector<int>& default_ladder();
constexpr int kLadderPool = 84;

struct SplitPlan {
  int level = 1;
  std::vector<std::string> train;
  std::vector<std::string> test;
};

/// Singletons always train; combinations are ranked by a seeded permutation
/// and the first round(ladder[level-1] / 84 * n_combos) of them train, so the
/// levels are nested.
SplitPlan make_splits(const Dataset& dataset, int level, std::uint64_t seed,
                      const std::vector<int>& ladder = default_ladder());

nlohmann::json to_json(const SplitPlan& s);
SplitPlan split_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// PCA

struct Pca {
  RowVector mean;
  Matrix basis;               // d x k, orthonormal columns
  Vector explained_variance;  // non-increasing
  std::string warning;        // set when k had to be reduced

  Matrix project(const Matrix& X) const;
  Matrix inverse_project(const Matrix& Z) const;
};

/// Top-k principal directions of X. k is reduced to the numerical rank (and
/// to rows - 1) with a warning, or RankDeficient is raised when `strict`.
Pca pca_fit(const Matrix& X, Eigen::Index k = 50, bool strict = false);

// ---------------------------------------------------------------------------
// On-disk format: manifest.json + one CSV per sample set + oracles.json.

constexpr const char* kManifestFormat = "condot-dataset";
constexpr int kManifestVersion = 1;

/// Writes into `dir` (created if needed) and returns the manifest path.
std::filesystem::path save_dataset(const Dataset& dataset, const std::filesystem::path& dir);
/// Validates the manifest and every referenced file; errors are ManifestError.
Dataset load_dataset(const std::filesystem::path& manifest_path);

nlohmann::json to_json(const AffineOracle& o);
AffineOracle affine_oracle_from_json(const nlohmann::json& j);
nlohmann::json to_json(const OracleSet& o);
OracleSet oracle_set_from_json(const nlohmann::json& j);

}  // namespace condot
