#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sefar/elements.hpp"
#include "sefar/nn.hpp"

namespace sefar {

enum class FineFusion { kMean, kConcat };

FineFusion fine_fusion_from_string(const std::string& name);
std::string to_string(FineFusion fusion);

struct FusionConfig {
  FineFusion fine_fusion = FineFusion::kMean;
  // Adds the mean of the fine features as an extra head input next to the
  // context feature.
  bool include_fused_feature = true;
};

struct ModelConfig {
  int feature_dim = 64;   // encoder output width
  int hidden_dim = 64;
  double dropout_rate = 0.1;
  int num_classes = 8;
  FusionConfig fusion;
};

void validate(const ModelConfig& cfg);

struct ModelOutput {
  Matrix logits;
  std::vector<Matrix> element_features;  // fine features then context
  Matrix fused_feature;                  // head input rows
};

struct ModelCache {
  std::vector<MlpCache> fine;
  MlpCache context;
  LinearCache head;
  std::vector<Matrix> fine_features;
  std::size_t batch = 0;
  bool valid = false;
};

struct InputGrads {
  std::vector<Matrix> fine;  // padded widths
  Matrix context;
};

/// Shared fine-element encoder + context encoder + linear head. Fine
/// elements shorter than the widest configured fine length are zero-padded
/// on the right; the context element has its own weight set because its
/// input width differs.
class SefarModel {
 public:
  SefarModel(ModelConfig model_cfg, const ElementConfig& element_cfg, int data_feature_dim);

  const ModelConfig& config() const { return cfg_; }
  std::size_t num_fine_elements() const { return num_fine_; }
  std::size_t fine_input_width() const { return fine_in_; }
  std::size_t context_input_width() const { return ctx_in_; }
  std::size_t head_input_width() const { return head_in_; }

  ParamSet init_params(RngStream rng) const;

  enum class ElementRole { kFine, kContext };

  /// Single element encoding (row-batched). Pads fine tensors as needed.
  Matrix encode_element(const ParamSet& params, const Matrix& tensor, ElementRole role, Mode mode,
                        RngStream rng, MlpCache* cache = nullptr) const;

  ModelOutput forward(const ParamSet& params, const ElementBatch& batch, Mode mode, RngStream rng,
                      ModelCache* cache = nullptr) const;

  /// Exact gradients for every parameter (accumulated into params.grad).
  InputGrads backward(ParamSet& params, ModelCache& cache, const Matrix& dlogits) const;

  /// Eval-mode logits, no cache.
  Matrix predict_logits(const ParamSet& params, const ElementBatch& batch) const;

 private:
  Matrix pad_fine(const Matrix& tensor) const;

  ModelConfig cfg_;
  std::size_t num_fine_ = 0;
  std::size_t fine_in_ = 0;
  std::size_t ctx_in_ = 0;
  std::size_t head_in_ = 0;
};

}  // namespace sefar
