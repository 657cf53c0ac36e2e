#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "condot/context.hpp"
#include "condot/datasets.hpp"
#include "condot/networks.hpp"
#include "condot/ot_metrics.hpp"

namespace condot {

enum class TrainMode { Dual, Primal };
std::string to_string(TrainMode m);
TrainMode train_mode_from_string(const std::string& s);

struct NetConfig {
  /// Picnn is the conditional model; Icnn ignores the context (baseline).
  NetKind kind = NetKind::Picnn;
  std::vector<Eigen::Index> hidden{64, 64, 64, 64};
  Activation sigma = Activation::Softplus;
  Activation tau = Activation::LeakyRelu;
  InitMode init = InitMode::Gaussian;
  ConstraintMode f_constraint = ConstraintMode::Clamp;
  ConstraintMode g_constraint = ConstraintMode::Penalty;
};

struct TrainConfig {
  TrainMode mode = TrainMode::Dual;
  double lr_theta = 1e-4;
  double lr_phi = 1e-4;
  double lr_Phi = 1e-4;
  double beta1 = 0.5;
  double beta2 = 0.9;
  double adam_eps = 1e-8;
  double lambda = 1.0;
  std::int64_t train_freq_f = 10;
  Eigen::Index batch_size = 256;
  /// Number of update steps (one sampled pair per step).
  std::int64_t steps = 1000;
  std::uint64_t seed = 0;
  double eps = 0.1;
  int sinkhorn_max_iters = 5000;
  double sinkhorn_tol = 1e-6;
  /// Checkpoint every this many steps; 0 disables periodic checkpoints.
  std::int64_t checkpoint_every = 0;
  NetConfig net;
  EmbeddingKind embedding = EmbeddingKind::OneHot;
  CombinatorKind combinator = CombinatorKind::MultiHot;
  bool trainable_embedding = false;

  /// ConfigError naming the offending field.
  void validate() const;
  SinkhornOptions sinkhorn() const;
};

nlohmann::json to_json(const TrainConfig& c);
/// Unknown keys and wrongly typed values raise ConfigError.
TrainConfig train_config_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Adam with bias correction:
//   m <- b1 m + (1 - b1) g,  v <- b2 v + (1 - b2) g^2,
//   theta <- theta - lr * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps).

struct AdamState {
  Vector m;
  Vector v;
  std::int64_t t = 0;
};

void adam_step(Vector& theta, const Vector& grad, AdamState& state, double lr, double beta1,
               double beta2, double eps);

// ---------------------------------------------------------------------------
// Losses. Convention: grad g transports source samples X onto targets Y and
// f plays the conjugate role on the target side.
//   l_f = E_Y[f(y)] - E_X[f(grad g(x))]                      (minimised by f)
//   l_g = -E_X[<x, grad g(x)> - f(grad g(x))] + lambda R(g)   (minimised by g)
// R is only added when g uses the penalty constraint mode.

/// `X` must be a tape variable (g's transport differentiates through it).
ad::Var dual_f_loss(const NetSpec& f_spec, const ad::ParamVars& f, const NetSpec& g_spec,
                    const ad::ParamVars& g, const ad::Var& X, const ad::Var& Y, const ad::Var& c);
ad::Var dual_g_loss(const NetSpec& f_spec, const ad::ParamVars& f, const NetSpec& g_spec,
                    const ad::ParamVars& g, const ad::Var& X, const ad::Var& c, double lambda);

struct DualLossValues {
  double l_f = 0.0;
  double l_g = 0.0;
};

DualLossValues dual_losses(const ConvexNet& f, const ConvexNet& g, const Matrix& X, const Matrix& Y,
                           const Vector& c, double lambda = 1.0);

/// Entropic OT cost between the transported batch and Y. The returned Var is
/// a surrogate whose parameter gradient equals the envelope gradient with the
/// plan held at its converged value; `value` receives the Sinkhorn cost.
ad::Var primal_surrogate(const NetSpec& spec, const ad::ParamVars& params, const ad::Var& X,
                         const Matrix& Y, const ad::Var& c, const SinkhornOptions& options,
                         double* value);
double primal_loss(const ConvexNet& net, const Matrix& X, const Matrix& Y, const Vector& c,
                   const SinkhornOptions& options);

// ---------------------------------------------------------------------------
// Training state and loop.

struct HistoryRow {
  std::int64_t step = 0;
  std::string pair_id;
  std::string loss;  // "f", "g" or "primal"
  double value = 0.0;

  bool operator==(const HistoryRow& o) const {
    return step == o.step && pair_id == o.pair_id && loss == o.loss && value == o.value;
  }
};

struct TrainState {
  TrainConfig config;
  ContextEncoder encoder;
  std::optional<ConvexNet> f;  // dual mode only
  ConvexNet g;
  AdamState adam_f;
  AdamState adam_g;
  AdamState adam_phi;
  AdamState adam_Phi;
  /// Completed steps; step numbers in the history start at 1.
  std::int64_t step = 0;
  Rng rng;
  std::vector<HistoryRow> history;
};

using CheckpointSink = std::function<void(const TrainState&)>;

/// Builds encoder and networks (anchors and Gaussian moments come from the
/// training pairs). `moa` is required when config.embedding is Moa.
TrainState init_train_state(const std::vector<LabeledPair>& pairs, const TrainConfig& config,
                            const MoaEmbedding* moa = nullptr);

/// Runs `n_steps` further steps. On a non-finite loss or gradient the sink
/// receives the last good state and NonFiniteLoss is thrown. The sink is also
/// called every config.checkpoint_every steps.
void train_steps(TrainState& state, const std::vector<LabeledPair>& pairs, std::int64_t n_steps,
                 const CheckpointSink& sink = {});

/// init_train_state followed by config.steps steps.
TrainState train(const std::vector<LabeledPair>& pairs, const TrainConfig& config,
                 const MoaEmbedding* moa = nullptr, const CheckpointSink& sink = {});

/// Predicted target samples: grad_x g(x, c_hat) row by row.
Matrix predict(const TrainState& state, const Matrix& X, const Context& c);

nlohmann::json checkpoint_to_json(const TrainState& state);
/// The returned state has an empty history.
TrainState checkpoint_from_json(const nlohmann::json& j);

std::string format_history_csv(const std::vector<HistoryRow>& rows);
std::vector<HistoryRow> parse_history_csv(const std::string& text);

}  // namespace condot
