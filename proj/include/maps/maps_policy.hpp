#pragma once

#include "maps/dataset.hpp"
#include "maps/nncore.hpp"
#include "maps/selector.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace maps {

struct MapsArchitecture {
  int state_dim = 0;
  int action_dim = 0;
  int num_tasks = 0;
  int num_modules = 5;
  int feature_dim = 128;
  int hidden_width = 128;
  int module_hidden_layers = 3;
  int selector_hidden_layers = 2;

  void validate() const;
  bool operator==(const MapsArchitecture&) const = default;
};

/// M proto-policy feature networks (state only), a selector over
/// (state, task), and an affine action head over the gated concatenation.
struct MapsModel {
  MapsArchitecture arch;
  std::vector<MlpParams> modules;  // state_dim -> feature_dim
  MlpParams selector;              // state_dim + K -> M logits
  MlpParams head;                  // M * feature_dim -> action_dim

  bool operator==(const MapsModel&) const = default;
};

MapsModel make_maps_model(const MapsArchitecture& arch, std::uint64_t seed);
MapsModel zeros_like(const MapsModel& like);

std::vector<MlpParams*> networks(MapsModel& model);
std::vector<const MlpParams*> networks(const MapsModel& model);

struct TotalLossWeights {
  double imitate = 0.75;
  double selector = 0.25;

  void validate() const;
};

struct PolicyPass {
  Matrix actions;  // (action_dim, b)
  Matrix scores;   // (M, b)
  std::vector<Matrix> features;  // per module, (feature_dim, b), ungated
};

/// a = head(g_1 * mu_1(s), ..., g_M * mu_M(s)) for every column. When
/// `forced_scores` is given it replaces the selector output.
PolicyPass policy_forward(const MapsModel& model, const Matrix& states,
                          std::span<const int> tasks,
                          const Matrix* forced_scores = nullptr);

/// Gated head input for given features and scores, (M * d, b).
Matrix gate_features(std::span<const Matrix> features, const Matrix& scores);

struct LossBreakdown {
  double total = 0.0;
  double bc = 0.0;
  SelectorTerms terms;
  bool operator==(const LossBreakdown&) const = default;
};

struct MapsLoss {
  LossBreakdown value;
  MapsModel grads;  // empty networks when gradients were not requested
};

/// Mean over samples of ||a - a_E||^2, with gradients into every module,
/// the selector and the head.
MapsLoss bc_loss(const MapsModel& model, const TransitionBatch& batch,
                 bool want_grads = true);

/// imitate * L_BC + selector * L_selector. Sharing re-evaluates the selector
/// for every batch state under all K task encodings; smoothness uses the
/// samples that carry a predecessor state. Selector terms are always
/// reported, even when their weight is zero.
MapsLoss total_loss(const MapsModel& model, const TransitionBatch& batch,
                    const TotalLossWeights& total_weights,
                    const SelectorLossWeights& selector_weights,
                    bool want_grads = true);

}  // namespace maps
