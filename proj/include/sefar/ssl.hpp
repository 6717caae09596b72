#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "sefar/augment.hpp"
#include "sefar/elements.hpp"
#include "sefar/model.hpp"
#include "sefar/synth_data.hpp"

namespace sefar {

enum class UncertaintyMode { kAcrossPass, kLiteral };

UncertaintyMode uncertainty_mode_from_string(const std::string& name);
std::string to_string(UncertaintyMode mode);

struct TrainConfig {
  double lr = 0.005;
  double momentum = 0.9;
  double weight_decay = 0.001;
  double ema_omega = 0.001;           // teacher <- omega*student + (1-omega)*teacher
  double confidence_threshold = 0.5;  // tau
  int teacher_passes = 10;            // U
  double beta = 1.0;
  double epsilon = 0.05;
  bool mix = true;
  int epochs = 30;                    // M_n
  int labeled_batch = 16;
  int unlabeled_batch = 48;
  bool baseline_mode = false;         // gamma1*L_sup + gamma2*L_un, no mixing, no warmup
  double gamma1 = 2.0;
  double gamma2 = 2.0;
  UncertaintyMode uncertainty_mode = UncertaintyMode::kAcrossPass;
  bool dual_elements = true;
  bool mod_perturb = true;
  bool ada_reg = true;
  bool gate = true;                   // tau gate stays active alongside eta weighting
  bool eta_batch_scalar = false;      // weight all samples by the batch-mean eta instead
  bool use_unlabeled = true;
};

void validate(const TrainConfig& cfg);

/// Multi-pass teacher record for one unlabeled sample.
struct TeacherStats {
  Matrix pass_probs;   // U x C softmax rows
  double mu_star = 0.0;
  double sigma_star = 0.0;
  double tau1 = 0.0;
  double tau2 = 0.0;
  double eta = 0.0;
  std::vector<double> pseudo_probs;
  int pseudo_label = -1;
  double confidence = 0.0;
  bool gated_in = false;
};

struct MixedPair {
  std::size_t j1 = 0;
  std::size_t j2 = 0;
  double lambda = 0.0;
  double eta1 = 0.0;
  double eta2 = 0.0;
  double eta_mix = 0.0;  // lambda*eta1 + (1-lambda)*eta2
};

struct LossBreakdown {
  double l_sup = 0.0;
  double l_un = 0.0;
  double l_mix = 0.0;
  double xi = 0.0;
  std::vector<double> eta_values;
  std::vector<double> eta_mix_values;
  double total = 0.0;
};

/// teacher <- omega*student + (1-omega)*teacher, elementwise on values.
void ema_update(ParamSet& teacher, const ParamSet& student, double omega);

/// U stochastic passes (train-mode dropout, no gradients) over one
/// weakly-augmented sample. Pass u draws from base.substream(u), so passes
/// could run in parallel with identical results.
Matrix teacher_predict_multi(const SefarModel& model, const ParamSet& teacher_params,
                             const ElementBatch& weak_sample, int passes, RngStream base);

struct Uncertainty {
  double mu_star = 0.0;
  double sigma_star = 0.0;
  std::vector<double> pseudo_probs;
};

/// kAcrossPass: per-class mean and population std over the U passes; the
/// argmax-mean class supplies (mu*, sigma*) and the mean row is the
/// pseudo-label source. kLiteral: per pass, confidence = max prob and
/// sigma = population std across categories; the most confident pass wins.
Uncertainty compute_uncertainty(const Matrix& pass_probs, UncertaintyMode mode);

struct AdaptiveCoefficients {
  double tau1 = 0.0;
  double tau2 = 0.0;
  double eta = 0.0;
};

/// tau1 = sigmoid(e^mu - e), tau2 = sigmoid(1/(beta*sigma + eps)) - 0.5,
/// eta = tau1 * tau2.
AdaptiveCoefficients adaptive_coefficients(double mu_star, double sigma_star, double beta,
                                           double epsilon);

struct PseudoLabel {
  int label = -1;
  double confidence = 0.0;
};

/// Argmax label (ties to the lowest class index), emitted only when the
/// confidence strictly exceeds tau.
std::optional<PseudoLabel> pseudo_label(const std::vector<double>& probs, double tau);

struct UnsupLossResult {
  double loss = 0.0;
  Matrix dlogits;
  std::vector<double> contributions;  // per-sample gate*w*CE; loss = mean
};

/// Mean over the unlabeled batch of gate * w * CE(pseudo one-hot, student
/// probs); w = eta when ada_reg, else 1. Gated-out samples contribute 0 but
/// stay in the denominator. gate_active=false disables the indicator
/// (pure-eta weighting).
UnsupLossResult unsupervised_loss(const Matrix& student_logits,
                                  const std::vector<TeacherStats>& stats, bool ada_reg,
                                  bool gate_active, bool eta_batch_scalar);

/// Elementwise convex combination lambda*a + (1-lambda)*b of all element
/// tensors. Structures must match.
ElementBatch mix_elements(const ElementBatch& a, const ElementBatch& b, double lambda);

struct MixedLossResult {
  double loss = 0.0;
  Matrix dlogits;
};

/// mixed_logits row k corresponds to pairs[k] (participating pairs only,
/// both members gated in). Per-pair target is the lambda-mix of the two
/// pseudo one-hots, weighted by eta_mix when ada_reg; mean over pairs.
MixedLossResult mixed_loss(const Matrix& mixed_logits, const std::vector<MixedPair>& pairs,
                           const std::vector<TeacherStats>& stats, bool ada_reg);

/// Warmup coefficient xi = sin(n / M_n), radians.
double warmup(int epoch, int max_epochs);

/// SeFAR mode: l_sup + xi*(l_un + l_mix) (eta already inside the terms);
/// baseline mode: gamma1*l_sup + gamma2*l_un.
double total_loss(double l_sup, double l_un, double l_mix, double xi, bool baseline_mode,
                  double gamma1, double gamma2);

// ---------------------------------------------------------------------------
// Stream derivations shared by the trainer and any reference loop that needs
// to replay the exact same randomness (see tests).
// ---------------------------------------------------------------------------
namespace train_streams {

RngStream param_init(std::uint64_t seed);
RngStream labeled_shuffle(std::uint64_t seed, int epoch);
RngStream unlabeled_shuffle(std::uint64_t seed, int epoch);
/// branch: 0 labeled, 1 unlabeled.
RngStream plan(std::uint64_t seed, int epoch, std::size_t sample_index, int branch);
RngStream eval_plan(std::uint64_t seed, std::size_t sample_index, int view = 0);
RngStream weak_labeled(std::uint64_t seed, int epoch, int step);
RngStream weak_unlabeled(std::uint64_t seed, int epoch, int step);
RngStream dropout_sup(std::uint64_t seed, int epoch, int step);
RngStream dropout_strong(std::uint64_t seed, int epoch, int step);
RngStream dropout_mixed(std::uint64_t seed, int epoch, int step);
RngStream teacher(std::uint64_t seed, int epoch, int step, std::size_t sample_index);
RngStream strong_aug(std::uint64_t seed, int epoch, int step, std::size_t sample_index);
RngStream mix_pairing(std::uint64_t seed, int epoch, int step);
RngStream mix_lambda(std::uint64_t seed, int epoch, int step, std::size_t pair_index);

}  // namespace train_streams

/// Seeded Fisher-Yates permutation of [0, n).
std::vector<std::size_t> shuffled_indices(std::size_t n, RngStream rng);

/// Evaluation averages softmax probabilities over this many fixed
/// per-sample element plans (TSN-style multi-view testing). Views are
/// derived streams, so evaluation stays deterministic.
constexpr int kEvalViews = 4;

/// Multi-view eval-mode prediction: mean softmax over kEvalViews fixed
/// plans per sample, argmax per row.
std::vector<int> predict_labels_multiview(const SefarModel& model, const ParamSet& params,
                                          const std::vector<VideoSample>& samples,
                                          const ElementConfig& element_cfg, std::uint64_t seed);

struct TrainData {
  std::vector<VideoSample> labeled;
  std::vector<VideoSample> unlabeled;
  std::vector<VideoSample> test;
};

struct EpochRecord {
  int epoch = 0;
  double l_sup = 0.0;
  double l_un = 0.0;
  double l_mix = 0.0;
  double xi = 0.0;
  double mean_eta = 0.0;
  double gate_rate = 0.0;
  double top1 = 0.0;
};

/// Per-sample teacher record emitted by --dump-teacher-stats and the probe.
struct TeacherStatsRow {
  int epoch = 0;
  int step = 0;
  std::size_t sample_index = 0;  // index into the unlabeled list
  double mu_star = 0.0;
  double sigma_star = 0.0;
  double eta = 0.0;
  double confidence = 0.0;
  int pseudo_label = -1;
  bool gated_in = false;
};

/// One SeFAR training run: EMA teacher, multi-pass uncertainty, adaptive
/// regulation, pseudo-label gating, mixing, warmup. The caller drives
/// epochs so it can checkpoint in between.
class Trainer {
 public:
  Trainer(ElementConfig element_cfg, ModelConfig model_cfg, TrainConfig train_cfg,
          WeakAugConfig weak_cfg, AugmentKind strong_kind, TrainData data, std::uint64_t seed);

  EpochRecord train_epoch(int epoch, std::vector<TeacherStatsRow>* teacher_dump = nullptr);

  /// Student top-1 on the test split (eval mode, fixed per-sample plans).
  double evaluate_top1() const;
  std::vector<int> predict_test_labels() const;
  std::vector<int> test_true_labels() const;

  const SefarModel& model() const { return model_; }
  const ParamSet& student() const { return student_; }
  const ParamSet& teacher() const { return teacher_; }
  const ElementConfig& element_config() const { return element_cfg_; }
  int steps_per_epoch() const;

  double teacher_seconds() const { return teacher_seconds_; }
  double total_seconds() const { return total_seconds_; }

 private:
  ElementConfig element_cfg_;
  ModelConfig model_cfg_;
  TrainConfig cfg_;
  WeakAugConfig weak_cfg_;
  AugmentKind strong_kind_;
  TrainData data_;
  std::uint64_t seed_;
  SefarModel model_;
  ParamSet student_;
  ParamSet teacher_;
  double teacher_seconds_ = 0.0;
  double total_seconds_ = 0.0;
};

/// The element layout a config resolves to: the configured dual-level
/// layout, or a single full-length context element when dual_elements is
/// switched off (the single-granularity baseline).
ElementConfig effective_element_config(const ElementConfig& cfg, bool dual_elements);

/// The strong augmentation a config resolves to when no explicit override
/// is given: ModPerturb when the switch is on, temporal warping otherwise.
AugmentKind effective_strong_kind(bool mod_perturb, const std::optional<AugmentKind>& override_kind);

}  // namespace sefar
