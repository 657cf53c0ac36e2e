#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "condot/autodiff.hpp"
#include "condot/gaussian_ot.hpp"

namespace condot {

enum class NetKind { Icnn, Picnn };
enum class Activation { Softplus, Relu, LeakyRelu, Identity };
enum class ConstraintMode { ReparamSoftplus, Clamp, Penalty };
enum class InitMode { Vanilla, Identity, Gaussian };

std::string to_string(NetKind v);
std::string to_string(Activation v);
std::string to_string(ConstraintMode v);
std::string to_string(InitMode v);
// Unknown names raise UnsupportedPrimitive (activations) or ConfigError.
Activation activation_from_string(const std::string& s);
ConstraintMode constraint_from_string(const std::string& s);
InitMode init_mode_from_string(const std::string& s);
NetKind net_kind_from_string(const std::string& s);

/// Shape and activation description shared by ICNNs and PICNNs.
///
/// Layer k maps z_k (width hidden[k-1], or n_quad for k = 0) to z_{k+1}
/// (width hidden[k], or 1 for the output layer). The output layer has no
/// activation. For PICNNs the context stream u_k keeps a constant width
/// `u_dim`; with `softmax_modulator` it starts as softmax(c W_mod + b_mod).
struct NetSpec {
  NetKind kind = NetKind::Icnn;
  Eigen::Index input_dim = 1;
  Eigen::Index context_dim = 0;
  std::vector<Eigen::Index> hidden{64, 64, 64, 64};
  Activation sigma = Activation::Softplus;
  Activation tau = Activation::LeakyRelu;
  double leaky_slope = 0.2;
  ConstraintMode constraint = ConstraintMode::Clamp;
  Eigen::Index n_quad = 0;
  bool softmax_modulator = false;
  Eigen::Index u_dim = 0;

  std::size_t n_layers() const { return hidden.size() + 1; }
  Eigen::Index width(std::size_t layer) const;     // output width of layer
  Eigen::Index in_width(std::size_t layer) const;  // width of z entering layer (0 if none)
  void validate() const;
};

nlohmann::json to_json(const NetSpec& spec);
NetSpec net_spec_from_json(const nlohmann::json& j);

struct ConvexNet {
  NetSpec spec;
  ad::ParamVector params;

  NetKind kind() const { return spec.kind; }
};

struct Anchor {
  Vector context;
  AffineMongeMap map;
};
using AnchorSet = std::vector<Anchor>;

/// Allocates the parameter layout for `spec` (all zeros).
ad::ParamVector make_params(const NetSpec& spec);
std::string wz_name(std::size_t layer);

/// Forward pass on a tape. `x` is n x d; `c` is 1 x context_dim (shared by
/// all rows) or n x context_dim. Returns an n x 1 column.
ad::Var net_forward(const NetSpec& spec, const ad::ParamVars& params, const ad::Var& x,
                    const ad::Var& c);
/// Row-wise input gradient on a tape; differentiable w.r.t. the parameters.
ad::Var net_transport(const NetSpec& spec, const ad::ParamVars& params, const ad::Var& x,
                      const ad::Var& c);
/// lambda * sum_k ||max(-W^z_k, 0)||_F^2 on a tape.
ad::Var convexity_penalty(const NetSpec& spec, const ad::ParamVars& params, double lambda);

double icnn_forward(const ConvexNet& net, const Vector& x);
double picnn_forward(const ConvexNet& net, const Vector& x, const Vector& c);
/// Batch forward; c may have one row (shared) or one row per sample.
Vector forward_batch(const ConvexNet& net, const Matrix& x, const Matrix& c = Matrix());
/// Batch transport x -> grad_x psi(x, c).
Matrix transport(const ConvexNet& net, const Matrix& x, const Matrix& c = Matrix());

/// The W^z matrix as it enters the forward pass (softplus of the stored
/// precursor in reparam mode).
Matrix effective_wz(const ConvexNet& net, std::size_t layer);

double convexity_penalty(const ConvexNet& net, double lambda = 1.0);
/// Clamps every stored W^z entry at 0. Idempotent.
void project_convex(ConvexNet& net);

struct InitOptions {
  /// Bias level s with sigma'(s) close to 1; 0 selects 10 for softplus, 1 otherwise.
  double bias_level = 0.0;
  /// Relative amplitude of the uniform perturbation around the target values.
  double noise = 1e-3;
  /// Sharpness of the anchor softmax relative to the closest anchor pair.
  double anchor_sharpness = 8.0;
};

/// `spec.kind` must be Icnn; hidden widths and activations are taken from it.
ConvexNet init_icnn(NetSpec spec, InitMode mode, const std::optional<GaussianPair>& moments,
                    std::uint64_t seed, const InitOptions& options = {});
/// Anchor-based PICNN initialisation (identity or Gaussian quadratic stack
/// modulated by a softmax over anchor contexts). Vanilla mode ignores the
/// anchors' maps and uses u_0 = c.
ConvexNet init_picnn(NetSpec spec, const AnchorSet& anchors, InitMode mode, std::uint64_t seed,
                     const InitOptions& options = {});

double resolved_bias_level(const NetSpec& spec, const InitOptions& options);

// Checkpoint container: JSON with the spec and a base64 little-endian
// float64 payload.
nlohmann::json net_to_json(const ConvexNet& net);
ConvexNet net_from_json(const nlohmann::json& j);
nlohmann::json params_to_json(const ad::ParamVector& params);
ad::ParamVector params_from_json(const nlohmann::json& j);

std::string base64_encode_f64(const Vector& v);
Vector base64_decode_f64(const std::string& s);

}  // namespace condot
