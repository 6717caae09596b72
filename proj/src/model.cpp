#include "sefar/model.hpp"

#include <algorithm>
#include <stdexcept>

namespace sefar {

FineFusion fine_fusion_from_string(const std::string& name) {
  if (name == "mean") return FineFusion::kMean;
  if (name == "concat") return FineFusion::kConcat;
  throw std::invalid_argument("unknown fine_fusion: " + name);
}

std::string to_string(FineFusion fusion) {
  return fusion == FineFusion::kMean ? "mean" : "concat";
}

void validate(const ModelConfig& cfg) {
  if (cfg.feature_dim < 1) throw std::invalid_argument("ModelConfig: feature_dim must be >= 1");
  if (cfg.hidden_dim < 1) throw std::invalid_argument("ModelConfig: hidden_dim must be >= 1");
  if (cfg.dropout_rate < 0.0 || cfg.dropout_rate >= 1.0) {
    throw std::invalid_argument("ModelConfig: dropout_rate must be in [0, 1)");
  }
  if (cfg.num_classes < 1) throw std::invalid_argument("ModelConfig: num_classes must be >= 1");
}

SefarModel::SefarModel(ModelConfig model_cfg, const ElementConfig& element_cfg,
                       int data_feature_dim)
    : cfg_(model_cfg) {
  validate(cfg_);
  validate(element_cfg);
  if (data_feature_dim < 1) throw std::invalid_argument("SefarModel: feature dim must be >= 1");

  num_fine_ = element_cfg.fine_lengths.size();
  int max_fine = 0;
  for (int l : element_cfg.fine_lengths) max_fine = std::max(max_fine, l);
  fine_in_ = static_cast<std::size_t>(max_fine) * static_cast<std::size_t>(data_feature_dim);
  ctx_in_ = static_cast<std::size_t>(element_cfg.context_length) *
            static_cast<std::size_t>(data_feature_dim);

  const auto f = static_cast<std::size_t>(cfg_.feature_dim);
  std::size_t fine_part = 0;
  if (num_fine_ > 0) {
    fine_part = cfg_.fusion.fine_fusion == FineFusion::kMean ? f : num_fine_ * f;
    if (cfg_.fusion.include_fused_feature) fine_part += f;
  }
  head_in_ = fine_part + f;
}

ParamSet SefarModel::init_params(RngStream rng) const {
  ParamSet params;
  if (num_fine_ > 0) {
    add_mlp_params(params, "fine", fine_in_, static_cast<std::size_t>(cfg_.hidden_dim),
                   static_cast<std::size_t>(cfg_.feature_dim), rng.substream(1));
  }
  add_mlp_params(params, "ctx", ctx_in_, static_cast<std::size_t>(cfg_.hidden_dim),
                 static_cast<std::size_t>(cfg_.feature_dim), rng.substream(2));
  add_linear_params(params, "head", head_in_, static_cast<std::size_t>(cfg_.num_classes),
                    rng.substream(3));
  return params;
}

Matrix SefarModel::pad_fine(const Matrix& tensor) const {
  if (tensor.cols == fine_in_) return tensor;
  if (tensor.cols > fine_in_) {
    throw std::invalid_argument("SefarModel: fine tensor wider than encoder input");
  }
  Matrix padded(tensor.rows, fine_in_);
  for (std::size_t r = 0; r < tensor.rows; ++r) {
    std::copy(tensor.row_ptr(r), tensor.row_ptr(r) + tensor.cols, padded.row_ptr(r));
  }
  return padded;
}

Matrix SefarModel::encode_element(const ParamSet& params, const Matrix& tensor, ElementRole role,
                                  Mode mode, RngStream rng, MlpCache* cache) const {
  MlpCache local;
  MlpCache& c = cache ? *cache : local;
  if (role == ElementRole::kFine) {
    if (num_fine_ == 0) throw std::invalid_argument("encode_element: model has no fine encoder");
    return mlp_forward(params, "fine", pad_fine(tensor), cfg_.dropout_rate, mode, rng, c);
  }
  if (tensor.cols != ctx_in_) {
    throw std::invalid_argument("encode_element: context width " + std::to_string(tensor.cols) +
                                " != " + std::to_string(ctx_in_));
  }
  return mlp_forward(params, "ctx", tensor, cfg_.dropout_rate, mode, rng, c);
}

ModelOutput SefarModel::forward(const ParamSet& params, const ElementBatch& batch, Mode mode,
                                RngStream rng, ModelCache* cache) const {
  if (batch.fine.size() != num_fine_) {
    throw std::invalid_argument("forward: batch has " + std::to_string(batch.fine.size()) +
                                " fine elements, model expects " + std::to_string(num_fine_));
  }
  ModelCache local;
  ModelCache& c = cache ? *cache : local;
  c = ModelCache{};
  c.batch = batch.batch_size();
  c.fine.resize(num_fine_);

  ModelOutput out;
  Matrix mean_fine;
  for (std::size_t e = 0; e < num_fine_; ++e) {
    Matrix feat = encode_element(params, batch.fine[e], ElementRole::kFine, mode,
                                 rng.substream(e), &c.fine[e]);
    if (e == 0) {
      mean_fine = feat;
    } else {
      axpy(mean_fine, 1.0, feat);
    }
    c.fine_features.push_back(feat);
    out.element_features.push_back(std::move(feat));
  }
  if (num_fine_ > 0) {
    scale_in_place(mean_fine, 1.0 / static_cast<double>(num_fine_));
  }

  Matrix ctx_feat = encode_element(params, batch.context, ElementRole::kContext, mode,
                                   rng.substream(0xC1), &c.context);
  out.element_features.push_back(ctx_feat);

  std::vector<const Matrix*> parts;
  if (num_fine_ > 0) {
    if (cfg_.fusion.fine_fusion == FineFusion::kMean) {
      parts.push_back(&mean_fine);
    } else {
      for (const Matrix& feat : c.fine_features) parts.push_back(&feat);
    }
  }
  parts.push_back(&ctx_feat);
  if (num_fine_ > 0 && cfg_.fusion.include_fused_feature) parts.push_back(&mean_fine);

  out.fused_feature = hconcat(parts);
  if (out.fused_feature.cols != head_in_) {
    throw std::runtime_error("forward: fused width " + std::to_string(out.fused_feature.cols) +
                             " != head input " + std::to_string(head_in_));
  }
  out.logits = linear_forward(params, "head", out.fused_feature, c.head);
  c.valid = true;
  return out;
}

InputGrads SefarModel::backward(ParamSet& params, ModelCache& cache, const Matrix& dlogits) const {
  if (!cache.valid) throw std::runtime_error("SefarModel::backward: stale cache");
  const auto f = static_cast<std::size_t>(cfg_.feature_dim);

  Matrix dfused = linear_backward(params, "head", cache.head, dlogits);

  // Split the head-input gradient back into its fusion parts.
  auto slice_cols = [&](const Matrix& m, std::size_t lo, std::size_t width) {
    Matrix out(m.rows, width);
    for (std::size_t r = 0; r < m.rows; ++r) {
      std::copy(m.row_ptr(r) + lo, m.row_ptr(r) + lo + width, out.row_ptr(r));
    }
    return out;
  };

  std::size_t offset = 0;
  Matrix dmean(cache.batch, f);
  std::vector<Matrix> dfine_feat;
  if (num_fine_ > 0) {
    if (cfg_.fusion.fine_fusion == FineFusion::kMean) {
      dmean = slice_cols(dfused, offset, f);
      offset += f;
    } else {
      for (std::size_t e = 0; e < num_fine_; ++e) {
        dfine_feat.push_back(slice_cols(dfused, offset, f));
        offset += f;
      }
    }
  }
  Matrix dctx = slice_cols(dfused, offset, f);
  offset += f;
  if (num_fine_ > 0 && cfg_.fusion.include_fused_feature) {
    axpy(dmean, 1.0, slice_cols(dfused, offset, f));
    offset += f;
  }

  InputGrads grads;
  if (num_fine_ > 0) {
    const double inv_m = 1.0 / static_cast<double>(num_fine_);
    for (std::size_t e = 0; e < num_fine_; ++e) {
      Matrix dfeat = cfg_.fusion.fine_fusion == FineFusion::kConcat ? dfine_feat[e]
                                                                    : Matrix(cache.batch, f);
      // Mean paths (fusion and/or fused feature) distribute 1/M to each
      // fine element.
      axpy(dfeat, inv_m, dmean);
      grads.fine.push_back(mlp_backward(params, "fine", cache.fine[e], dfeat));
    }
  }
  grads.context = mlp_backward(params, "ctx", cache.context, dctx);
  cache.valid = false;
  return grads;
}

Matrix SefarModel::predict_logits(const ParamSet& params, const ElementBatch& batch) const {
  return forward(params, batch, Mode::kEval, RngStream(0, 0)).logits;
}

}  // namespace sefar
