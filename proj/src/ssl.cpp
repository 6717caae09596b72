#include "sefar/ssl.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace sefar {

UncertaintyMode uncertainty_mode_from_string(const std::string& name) {
  if (name == "across_pass") return UncertaintyMode::kAcrossPass;
  if (name == "literal") return UncertaintyMode::kLiteral;
  throw std::invalid_argument("unknown uncertainty_mode: " + name);
}

std::string to_string(UncertaintyMode mode) {
  return mode == UncertaintyMode::kAcrossPass ? "across_pass" : "literal";
}

void validate(const TrainConfig& cfg) {
  if (cfg.lr < 0.0) throw std::invalid_argument("TrainConfig: lr must be >= 0");
  if (cfg.momentum < 0.0 || cfg.momentum >= 1.0) {
    throw std::invalid_argument("TrainConfig: momentum must be in [0, 1)");
  }
  if (cfg.weight_decay < 0.0) throw std::invalid_argument("TrainConfig: weight_decay must be >= 0");
  if (cfg.ema_omega < 0.0 || cfg.ema_omega > 1.0) {
    throw std::invalid_argument("TrainConfig: ema_omega must be in [0, 1]");
  }
  if (!(cfg.confidence_threshold > 0.0) || !(cfg.confidence_threshold < 1.0)) {
    throw std::invalid_argument("TrainConfig: confidence_threshold must be in (0, 1)");
  }
  // teacher_passes = 1 is allowed even with ada_reg on (the pass-count
  // sweep exercises it); sigma* then degenerates to 0 in across_pass mode.
  if (cfg.teacher_passes < 1) throw std::invalid_argument("TrainConfig: teacher_passes must be >= 1");
  if (!(cfg.epsilon > 0.0)) throw std::invalid_argument("TrainConfig: epsilon must be > 0");
  if (cfg.beta < 0.0) throw std::invalid_argument("TrainConfig: beta must be >= 0");
  if (cfg.epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
  if (cfg.labeled_batch < 1 || cfg.unlabeled_batch < 1) {
    throw std::invalid_argument("TrainConfig: batch sizes must be >= 1");
  }
}

void ema_update(ParamSet& teacher, const ParamSet& student, double omega) {
  if (omega < 0.0 || omega > 1.0) throw std::invalid_argument("ema_update: omega must be in [0,1]");
  if (teacher.size() != student.size()) {
    throw std::invalid_argument("ema_update: parameter sets differ in size");
  }
  for (std::size_t i = 0; i < teacher.size(); ++i) {
    if (teacher.names()[i] != student.names()[i]) {
      throw std::invalid_argument("ema_update: parameter name mismatch at index " +
                                  std::to_string(i));
    }
    Matrix& t = teacher[i].value;
    const Matrix& s = student[i].value;
    check_same_shape(t, s, "ema_update(" + teacher.names()[i] + ")");
    for (std::size_t k = 0; k < t.data.size(); ++k) {
      t.data[k] = omega * s.data[k] + (1.0 - omega) * t.data[k];
    }
  }
}

Matrix teacher_predict_multi(const SefarModel& model, const ParamSet& teacher_params,
                             const ElementBatch& weak_sample, int passes, RngStream base) {
  if (passes < 1) throw std::invalid_argument("teacher_predict_multi: passes must be >= 1");
  const auto c = static_cast<std::size_t>(model.config().num_classes);
  Matrix out(static_cast<std::size_t>(passes), c);
  for (int u = 0; u < passes; ++u) {
    ModelOutput pred = model.forward(teacher_params, weak_sample, Mode::kTrain,
                                     base.substream(static_cast<std::uint64_t>(u)));
    Matrix probs = softmax(pred.logits);
    std::copy(probs.row_ptr(0), probs.row_ptr(0) + c, out.row_ptr(static_cast<std::size_t>(u)));
  }
  return out;
}

namespace {

std::size_t argmax(const double* v, std::size_t n) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

}  // namespace

Uncertainty compute_uncertainty(const Matrix& pass_probs, UncertaintyMode mode) {
  if (pass_probs.rows < 1) throw std::invalid_argument("compute_uncertainty: no rows");
  const std::size_t u = pass_probs.rows;
  const std::size_t c = pass_probs.cols;
  Uncertainty out;

  if (mode == UncertaintyMode::kAcrossPass) {
    std::vector<double> mean(c, 0.0);
    for (std::size_t i = 0; i < u; ++i) {
      const double* row = pass_probs.row_ptr(i);
      for (std::size_t j = 0; j < c; ++j) mean[j] += row[j];
    }
    for (double& m : mean) m /= static_cast<double>(u);
    const std::size_t best = argmax(mean.data(), c);
    double var = 0.0;
    for (std::size_t i = 0; i < u; ++i) {
      const double d = pass_probs.at(i, best) - mean[best];
      var += d * d;
    }
    out.mu_star = mean[best];
    out.sigma_star = std::sqrt(var / static_cast<double>(u));
    out.pseudo_probs = std::move(mean);
    return out;
  }

  // Literal reading: per pass, confidence = max prob, sigma = population
  // std across categories; the most confident pass supplies everything.
  std::size_t best_pass = 0;
  double best_mu = -1.0;
  for (std::size_t i = 0; i < u; ++i) {
    const double* row = pass_probs.row_ptr(i);
    const double mu = row[argmax(row, c)];
    if (mu > best_mu) {
      best_mu = mu;
      best_pass = i;
    }
  }
  const double* row = pass_probs.row_ptr(best_pass);
  double mean = 0.0;
  for (std::size_t j = 0; j < c; ++j) mean += row[j];
  mean /= static_cast<double>(c);
  double var = 0.0;
  for (std::size_t j = 0; j < c; ++j) var += (row[j] - mean) * (row[j] - mean);
  out.mu_star = best_mu;
  out.sigma_star = std::sqrt(var / static_cast<double>(c));
  out.pseudo_probs.assign(row, row + c);
  return out;
}

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

AdaptiveCoefficients adaptive_coefficients(double mu_star, double sigma_star, double beta,
                                           double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("adaptive_coefficients: epsilon must be > 0");
  if (sigma_star < 0.0) throw std::invalid_argument("adaptive_coefficients: sigma_star < 0");
  AdaptiveCoefficients out;
  out.tau1 = sigmoid(std::exp(mu_star) - std::exp(1.0));
  out.tau2 = sigmoid(1.0 / (beta * sigma_star + epsilon)) - 0.5;
  out.eta = out.tau1 * out.tau2;
  return out;
}

std::optional<PseudoLabel> pseudo_label(const std::vector<double>& probs, double tau) {
  if (probs.empty()) throw std::invalid_argument("pseudo_label: empty row");
  const std::size_t best = argmax(probs.data(), probs.size());
  if (probs[best] > tau) {
    return PseudoLabel{static_cast<int>(best), probs[best]};
  }
  return std::nullopt;
}

UnsupLossResult unsupervised_loss(const Matrix& student_logits,
                                  const std::vector<TeacherStats>& stats, bool ada_reg,
                                  bool gate_active, bool eta_batch_scalar) {
  if (student_logits.rows != stats.size()) {
    throw std::invalid_argument("unsupervised_loss: logits/stats misaligned");
  }
  const std::size_t b = stats.size();
  const std::size_t c = student_logits.cols;

  double eta_scalar = 0.0;
  if (ada_reg && eta_batch_scalar) {
    for (const auto& s : stats) eta_scalar += s.eta;
    eta_scalar /= static_cast<double>(b);
  }

  Matrix targets(b, c);
  std::vector<double> weights(b, 0.0);
  for (std::size_t i = 0; i < b; ++i) {
    const bool in = gate_active ? stats[i].gated_in : true;
    if (!in) continue;
    const double w = ada_reg ? (eta_batch_scalar ? eta_scalar : stats[i].eta) : 1.0;
    weights[i] = w;
    targets.at(i, static_cast<std::size_t>(stats[i].pseudo_label)) = 1.0;
  }

  Matrix probs = softmax(student_logits);
  auto [loss, dlogits] = cross_entropy_weighted(probs, targets, weights, static_cast<double>(b));

  UnsupLossResult out;
  out.loss = loss;
  out.dlogits = std::move(dlogits);
  out.contributions.resize(b, 0.0);
  for (std::size_t i = 0; i < b; ++i) {
    if (weights[i] == 0.0) continue;
    const double p = std::max(probs.at(i, static_cast<std::size_t>(stats[i].pseudo_label)),
                              kLogClamp);
    out.contributions[i] = -weights[i] * std::log(p);
  }
  return out;
}

ElementBatch mix_elements(const ElementBatch& a, const ElementBatch& b, double lambda) {
  if (a.fine.size() != b.fine.size()) {
    throw std::invalid_argument("mix_elements: element structure mismatch");
  }
  ElementBatch out = a;
  for (std::size_t e = 0; e < a.fine.size(); ++e) {
    check_same_shape(a.fine[e], b.fine[e], "mix_elements(fine)");
    for (std::size_t k = 0; k < out.fine[e].data.size(); ++k) {
      out.fine[e].data[k] = lambda * a.fine[e].data[k] + (1.0 - lambda) * b.fine[e].data[k];
    }
  }
  check_same_shape(a.context, b.context, "mix_elements(context)");
  for (std::size_t k = 0; k < out.context.data.size(); ++k) {
    out.context.data[k] = lambda * a.context.data[k] + (1.0 - lambda) * b.context.data[k];
  }
  return out;
}

MixedLossResult mixed_loss(const Matrix& mixed_logits, const std::vector<MixedPair>& pairs,
                           const std::vector<TeacherStats>& stats, bool ada_reg) {
  if (mixed_logits.rows != pairs.size()) {
    throw std::invalid_argument("mixed_loss: logits/pairs misaligned");
  }
  MixedLossResult out;
  if (pairs.empty()) {
    out.dlogits = Matrix(0, mixed_logits.cols);
    return out;
  }
  const std::size_t c = mixed_logits.cols;
  Matrix targets(pairs.size(), c);
  std::vector<double> weights(pairs.size(), 1.0);
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const MixedPair& p = pairs[k];
    targets.at(k, static_cast<std::size_t>(stats[p.j1].pseudo_label)) += p.lambda;
    targets.at(k, static_cast<std::size_t>(stats[p.j2].pseudo_label)) += 1.0 - p.lambda;
    if (ada_reg) weights[k] = p.eta_mix;
  }
  Matrix probs = softmax(mixed_logits);
  auto [loss, dlogits] =
      cross_entropy_weighted(probs, targets, weights, static_cast<double>(pairs.size()));
  out.loss = loss;
  out.dlogits = std::move(dlogits);
  return out;
}

double warmup(int epoch, int max_epochs) {
  if (max_epochs < 1) throw std::invalid_argument("warmup: max_epochs must be >= 1");
  if (epoch < 0 || epoch > max_epochs) {
    throw std::invalid_argument("warmup: epoch outside [0, max_epochs]");
  }
  return std::sin(static_cast<double>(epoch) / static_cast<double>(max_epochs));
}

double total_loss(double l_sup, double l_un, double l_mix, double xi, bool baseline_mode,
                  double gamma1, double gamma2) {
  if (baseline_mode) return gamma1 * l_sup + gamma2 * l_un;
  return l_sup + xi * (l_un + l_mix);
}

// ---------------------------------------------------------------------------

namespace train_streams {

RngStream param_init(std::uint64_t seed) { return derive_stream(seed, streams::kParamInit); }

RngStream labeled_shuffle(std::uint64_t seed, int epoch) {
  return derive_stream(seed, streams::kLabeledShuffle, static_cast<std::uint64_t>(epoch));
}

RngStream unlabeled_shuffle(std::uint64_t seed, int epoch) {
  return derive_stream(seed, streams::kUnlabeledShuffle, static_cast<std::uint64_t>(epoch));
}

RngStream plan(std::uint64_t seed, int epoch, std::size_t sample_index, int branch) {
  return derive_stream(seed, streams::kTrainPlan, static_cast<std::uint64_t>(epoch),
                       static_cast<std::uint64_t>(sample_index),
                       static_cast<std::uint64_t>(branch));
}

RngStream eval_plan(std::uint64_t seed, std::size_t sample_index, int view) {
  return derive_stream(seed, streams::kEvalPlan, static_cast<std::uint64_t>(sample_index),
                       static_cast<std::uint64_t>(view));
}

RngStream weak_labeled(std::uint64_t seed, int epoch, int step) {
  return derive_stream(seed, streams::kWeakLabeled, static_cast<std::uint64_t>(epoch),
                       static_cast<std::uint64_t>(step));
}

RngStream weak_unlabeled(std::uint64_t seed, int epoch, int step) {
  return derive_stream(seed, streams::kWeakUnlabeled, static_cast<std::uint64_t>(epoch),
                       static_cast<std::uint64_t>(step));
}

RngStream dropout_sup(std::uint64_t seed, int epoch, int step) {
  return derive_stream(seed, streams::kDropoutSup, static_cast<std::uint64_t>(epoch),
                       static_cast<std::uint64_t>(step));
}

RngStream dropout_strong(std::uint64_t seed, int epoch, int step) {
  return derive_stream(seed, streams::kDropoutStrong, static_cast<std::uint64_t>(epoch),
                       static_cast<std::uint64_t>(step));
}

RngStream dropout_mixed(std::uint64_t seed, int epoch, int step) {
  return derive_stream(seed, streams::kDropoutMixed, static_cast<std::uint64_t>(epoch),
                       static_cast<std::uint64_t>(step));
}

RngStream teacher(std::uint64_t seed, int epoch, int step, std::size_t sample_index) {
  return derive_stream(seed, streams::kTeacher, static_cast<std::uint64_t>(epoch),
                       static_cast<std::uint64_t>(step), static_cast<std::uint64_t>(sample_index));
}

RngStream strong_aug(std::uint64_t seed, int epoch, int step, std::size_t sample_index) {
  return derive_stream(seed, streams::kStrongAug, static_cast<std::uint64_t>(epoch),
                       static_cast<std::uint64_t>(step), static_cast<std::uint64_t>(sample_index));
}

RngStream mix_pairing(std::uint64_t seed, int epoch, int step) {
  return derive_stream(seed, streams::kMixPairing, static_cast<std::uint64_t>(epoch),
                       static_cast<std::uint64_t>(step));
}

RngStream mix_lambda(std::uint64_t seed, int epoch, int step, std::size_t pair_index) {
  return derive_stream(seed, streams::kMixLambda, static_cast<std::uint64_t>(epoch),
                       static_cast<std::uint64_t>(step), static_cast<std::uint64_t>(pair_index));
}

}  // namespace train_streams

std::vector<std::size_t> shuffled_indices(std::size_t n, RngStream rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = n; i > 1; --i) {
    std::swap(idx[i - 1], idx[rng.next_below(i)]);
  }
  return idx;
}

std::vector<int> predict_labels_multiview(const SefarModel& model, const ParamSet& params,
                                          const std::vector<VideoSample>& samples,
                                          const ElementConfig& element_cfg, std::uint64_t seed) {
  if (samples.empty()) return {};
  std::vector<const VideoSample*> videos;
  videos.reserve(samples.size());
  for (const auto& v : samples) videos.push_back(&v);

  Matrix mean_probs(samples.size(), static_cast<std::size_t>(model.config().num_classes));
  for (int view = 0; view < kEvalViews; ++view) {
    std::vector<ElementPlan> plans;
    plans.reserve(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
      plans.push_back(build_elements(element_cfg, static_cast<int>(samples[i].frames.rows),
                                     train_streams::eval_plan(seed, i, view)));
    }
    const Matrix probs =
        softmax(model.predict_logits(params, materialize_batch(videos, plans)));
    axpy(mean_probs, 1.0 / kEvalViews, probs);
  }
  std::vector<int> preds(mean_probs.rows);
  for (std::size_t i = 0; i < mean_probs.rows; ++i) {
    const double* row = mean_probs.row_ptr(i);
    preds[i] = static_cast<int>(std::max_element(row, row + mean_probs.cols) - row);
  }
  return preds;
}

ElementConfig effective_element_config(const ElementConfig& cfg, bool dual_elements) {
  if (dual_elements) return cfg;
  // Single-granularity baseline: the context element as configured, no
  // fine elements.
  ElementConfig single = cfg;
  single.fine_lengths.clear();
  return single;
}

AugmentKind effective_strong_kind(bool mod_perturb,
                                  const std::optional<AugmentKind>& override_kind) {
  if (override_kind) return *override_kind;
  return mod_perturb ? AugmentKind::kModPerturb : AugmentKind::kWarping;
}

// ---------------------------------------------------------------------------

Trainer::Trainer(ElementConfig element_cfg, ModelConfig model_cfg, TrainConfig train_cfg,
                 WeakAugConfig weak_cfg, AugmentKind strong_kind, TrainData data,
                 std::uint64_t seed)
    : element_cfg_(effective_element_config(element_cfg, train_cfg.dual_elements)),
      model_cfg_(model_cfg),
      cfg_(train_cfg),
      weak_cfg_(weak_cfg),
      strong_kind_(strong_kind),
      data_(std::move(data)),
      seed_(seed),
      model_(model_cfg, element_cfg_,
             data_.labeled.empty() ? 1 : static_cast<int>(data_.labeled.front().frames.cols)) {
  validate(cfg_);
  validate(weak_cfg_);
  if (data_.labeled.empty()) throw std::invalid_argument("Trainer: labeled set is empty");
  const int frames = static_cast<int>(data_.labeled.front().frames.rows);
  if (frames < element_cfg_.representative_frames) {
    throw std::invalid_argument("Trainer: fewer frames than representative_frames");
  }
  student_ = model_.init_params(train_streams::param_init(seed_));
  teacher_ = student_.clone_values();
}

int Trainer::steps_per_epoch() const {
  const auto l = data_.labeled.size();
  const auto u = (cfg_.use_unlabeled && !data_.unlabeled.empty()) ? data_.unlabeled.size() : 0;
  const int labeled_steps =
      static_cast<int>((l + cfg_.labeled_batch - 1) / static_cast<std::size_t>(cfg_.labeled_batch));
  const int unlabeled_steps =
      u == 0 ? 0
             : static_cast<int>((u + cfg_.unlabeled_batch - 1) /
                                static_cast<std::size_t>(cfg_.unlabeled_batch));
  return std::max(1, std::max(labeled_steps, unlabeled_steps));
}

EpochRecord Trainer::train_epoch(int epoch, std::vector<TeacherStatsRow>* teacher_dump) {
  const auto t_epoch_start = std::chrono::steady_clock::now();
  const bool have_unlabeled = cfg_.use_unlabeled && !data_.unlabeled.empty();
  const double xi = cfg_.baseline_mode ? 1.0 : warmup(epoch, cfg_.epochs);
  const int steps = steps_per_epoch();

  const auto labeled_order =
      shuffled_indices(data_.labeled.size(), train_streams::labeled_shuffle(seed_, epoch));
  const auto unlabeled_order =
      have_unlabeled
          ? shuffled_indices(data_.unlabeled.size(), train_streams::unlabeled_shuffle(seed_, epoch))
          : std::vector<std::size_t>{};

  double sum_l_sup = 0.0;
  double sum_l_un = 0.0;
  double sum_l_mix = 0.0;
  double sum_eta = 0.0;
  std::size_t eta_count = 0;
  std::size_t gated = 0;
  std::size_t unlabeled_seen = 0;

  for (int step = 0; step < steps; ++step) {
    student_.zero_grads();

    // --- supervised branch ---
    std::vector<const VideoSample*> lab_videos;
    std::vector<ElementPlan> lab_plans;
    std::vector<int> lab_labels;
    for (int i = 0; i < cfg_.labeled_batch; ++i) {
      const std::size_t pos =
          labeled_order[(static_cast<std::size_t>(step) * cfg_.labeled_batch + i) %
                        data_.labeled.size()];
      const VideoSample& v = data_.labeled[pos];
      lab_videos.push_back(&v);
      lab_plans.push_back(build_elements(element_cfg_, static_cast<int>(v.frames.rows),
                                         train_streams::plan(seed_, epoch, pos, 0)));
      lab_labels.push_back(*v.label);
    }
    ElementBatch lab_batch = weak_augment(materialize_batch(lab_videos, lab_plans), weak_cfg_,
                                          train_streams::weak_labeled(seed_, epoch, step));
    ModelCache sup_cache;
    ModelOutput sup_out = model_.forward(student_, lab_batch, Mode::kTrain,
                                         train_streams::dropout_sup(seed_, epoch, step), &sup_cache);
    auto [l_sup, dlogits_sup] =
        cross_entropy(softmax(sup_out.logits),
                      one_hot(lab_labels, static_cast<std::size_t>(model_cfg_.num_classes)));
    const double sup_coeff = cfg_.baseline_mode ? cfg_.gamma1 : 1.0;
    if (sup_coeff != 1.0) scale_in_place(dlogits_sup, sup_coeff);
    model_.backward(student_, sup_cache, dlogits_sup);
    sum_l_sup += l_sup;

    // --- unlabeled branch ---
    double l_un = 0.0;
    double l_mix = 0.0;
    if (have_unlabeled) {
      std::vector<const VideoSample*> unl_videos;
      std::vector<ElementPlan> unl_plans;
      std::vector<std::size_t> unl_pos;
      for (int i = 0; i < cfg_.unlabeled_batch; ++i) {
        const std::size_t pos =
            unlabeled_order[(static_cast<std::size_t>(step) * cfg_.unlabeled_batch + i) %
                            data_.unlabeled.size()];
        const VideoSample& v = data_.unlabeled[pos];
        unl_pos.push_back(pos);
        unl_videos.push_back(&v);
        unl_plans.push_back(build_elements(element_cfg_, static_cast<int>(v.frames.rows),
                                           train_streams::plan(seed_, epoch, pos, 1)));
      }
      const ElementBatch clean = materialize_batch(unl_videos, unl_plans);
      const ElementBatch weak = weak_augment(clean, weak_cfg_,
                                             train_streams::weak_unlabeled(seed_, epoch, step));

      // Teacher multi-pass statistics (no gradients).
      const auto t_teacher_start = std::chrono::steady_clock::now();
      std::vector<TeacherStats> stats(unl_pos.size());
      for (std::size_t i = 0; i < unl_pos.size(); ++i) {
        TeacherStats& s = stats[i];
        s.pass_probs = teacher_predict_multi(model_, teacher_, take_row(weak, i),
                                             cfg_.teacher_passes,
                                             train_streams::teacher(seed_, epoch, step, unl_pos[i]));
        Uncertainty unc = compute_uncertainty(s.pass_probs, cfg_.uncertainty_mode);
        s.mu_star = unc.mu_star;
        s.sigma_star = unc.sigma_star;
        s.pseudo_probs = std::move(unc.pseudo_probs);
        const AdaptiveCoefficients coeffs =
            adaptive_coefficients(s.mu_star, s.sigma_star, cfg_.beta, cfg_.epsilon);
        s.tau1 = coeffs.tau1;
        s.tau2 = coeffs.tau2;
        s.eta = coeffs.eta;
        const std::size_t best = static_cast<std::size_t>(
            std::max_element(s.pseudo_probs.begin(), s.pseudo_probs.end()) -
            s.pseudo_probs.begin());
        s.pseudo_label = static_cast<int>(best);
        s.confidence = s.pseudo_probs[best];
        s.gated_in = s.confidence > cfg_.confidence_threshold;
        sum_eta += s.eta;
        ++eta_count;
        if (s.gated_in) ++gated;
        ++unlabeled_seen;
        if (teacher_dump) {
          teacher_dump->push_back({epoch, step, unl_pos[i], s.mu_star, s.sigma_star, s.eta,
                                   s.confidence, s.pseudo_label, s.gated_in});
        }
      }
      teacher_seconds_ +=
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t_teacher_start)
              .count();

      // Student on strongly augmented inputs.
      ElementBatch strong;
      if (strong_kind_ == AugmentKind::kSpatialOnly) {
        ElementPlan dummy = unl_plans.front();
        strong = apply_strategy(AugmentKind::kSpatialOnly, dummy, clean,
                                train_streams::strong_aug(seed_, epoch, step, 0))
                     .second;
      } else {
        std::vector<ElementPlan> strong_plans;
        strong_plans.reserve(unl_plans.size());
        for (std::size_t i = 0; i < unl_plans.size(); ++i) {
          strong_plans.push_back(
              apply_strategy_plan(strong_kind_, unl_plans[i],
                                  train_streams::strong_aug(seed_, epoch, step, unl_pos[i])));
        }
        strong = materialize_batch(unl_videos, strong_plans);
      }

      ModelCache un_cache;
      ModelOutput un_out = model_.forward(student_, strong, Mode::kTrain,
                                          train_streams::dropout_strong(seed_, epoch, step),
                                          &un_cache);
      UnsupLossResult un = unsupervised_loss(un_out.logits, stats, cfg_.ada_reg, cfg_.gate,
                                             cfg_.eta_batch_scalar);
      l_un = un.loss;
      const double un_coeff = cfg_.baseline_mode ? cfg_.gamma2 : xi;
      if (un_coeff != 0.0) {
        if (un_coeff != 1.0) scale_in_place(un.dlogits, un_coeff);
        model_.backward(student_, un_cache, un.dlogits);
      }

      // Mixing (SeFAR mode only): disjoint pairs from a seeded shuffle of
      // the batch; a pair participates only when both members are gated in.
      if (!cfg_.baseline_mode && cfg_.mix && unl_pos.size() >= 2) {
        const auto perm =
            shuffled_indices(unl_pos.size(), train_streams::mix_pairing(seed_, epoch, step));
        std::vector<MixedPair> pairs;
        for (std::size_t k = 0; k + 1 < perm.size(); k += 2) {
          const std::size_t j1 = perm[k];
          const std::size_t j2 = perm[k + 1];
          if (!stats[j1].gated_in || !stats[j2].gated_in) continue;
          MixedPair p;
          p.j1 = j1;
          p.j2 = j2;
          p.lambda =
              train_streams::mix_lambda(seed_, epoch, step, k / 2).next_uniform();
          p.eta1 = stats[j1].eta;
          p.eta2 = stats[j2].eta;
          p.eta_mix = p.lambda * p.eta1 + (1.0 - p.lambda) * p.eta2;
          pairs.push_back(p);
        }
        if (!pairs.empty()) {
          ElementBatch mixed;
          mixed.fine.assign(strong.fine.size(), Matrix());
          for (std::size_t e = 0; e < strong.fine.size(); ++e) {
            mixed.fine[e] = Matrix(pairs.size(), strong.fine[e].cols);
          }
          mixed.context = Matrix(pairs.size(), strong.context.cols);
          for (std::size_t k = 0; k < pairs.size(); ++k) {
            const MixedPair& p = pairs[k];
            for (std::size_t e = 0; e <= strong.fine.size(); ++e) {
              const Matrix& src = e < strong.fine.size() ? strong.fine[e] : strong.context;
              Matrix& dst = e < strong.fine.size() ? mixed.fine[e] : mixed.context;
              const double* r1 = src.row_ptr(p.j1);
              const double* r2 = src.row_ptr(p.j2);
              double* d = dst.row_ptr(k);
              for (std::size_t t = 0; t < src.cols; ++t) {
                d[t] = p.lambda * r1[t] + (1.0 - p.lambda) * r2[t];
              }
            }
          }
          ModelCache mix_cache;
          ModelOutput mix_out = model_.forward(student_, mixed, Mode::kTrain,
                                               train_streams::dropout_mixed(seed_, epoch, step),
                                               &mix_cache);
          MixedLossResult mixed_result = mixed_loss(mix_out.logits, pairs, stats, cfg_.ada_reg);
          l_mix = mixed_result.loss;
          if (xi != 0.0) {
            scale_in_place(mixed_result.dlogits, xi);
            model_.backward(student_, mix_cache, mixed_result.dlogits);
          }
        }
      }
    }

    sum_l_un += l_un;
    sum_l_mix += l_mix;

    sgd_momentum_step(student_, cfg_.lr, cfg_.momentum, cfg_.weight_decay);
    ema_update(teacher_, student_, cfg_.ema_omega);
  }

  EpochRecord rec;
  rec.epoch = epoch;
  rec.l_sup = sum_l_sup / steps;
  rec.l_un = sum_l_un / steps;
  rec.l_mix = sum_l_mix / steps;
  rec.xi = xi;
  rec.mean_eta = eta_count > 0 ? sum_eta / static_cast<double>(eta_count) : 0.0;
  rec.gate_rate =
      unlabeled_seen > 0 ? static_cast<double>(gated) / static_cast<double>(unlabeled_seen) : 0.0;
  rec.top1 = evaluate_top1();
  total_seconds_ +=
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_epoch_start).count();
  return rec;
}

std::vector<int> Trainer::predict_test_labels() const {
  return predict_labels_multiview(model_, student_, data_.test, element_cfg_, seed_);
}

std::vector<int> Trainer::test_true_labels() const {
  std::vector<int> truth;
  truth.reserve(data_.test.size());
  for (const auto& v : data_.test) truth.push_back(v.eval_true_label());
  return truth;
}

double Trainer::evaluate_top1() const {
  if (data_.test.empty()) return 0.0;
  const auto preds = predict_test_labels();
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] == data_.test[i].eval_true_label()) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

}  // namespace sefar
