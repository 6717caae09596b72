#include "sefar/synth_data.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace sefar {

void validate(const DatasetSpec& spec) {
  if (spec.num_classes < 1) throw std::invalid_argument("DatasetSpec: num_classes must be >= 1");
  if (spec.frames_per_sample < 2) {
    throw std::invalid_argument("DatasetSpec: frames_per_sample must be >= 2");
  }
  if (spec.feature_dim < 1) throw std::invalid_argument("DatasetSpec: feature_dim must be >= 1");
  if (spec.samples_per_class < 1) {
    throw std::invalid_argument("DatasetSpec: samples_per_class must be >= 1");
  }
  if (spec.noise_sigma < 0.0) throw std::invalid_argument("DatasetSpec: noise_sigma must be >= 0");
  if (spec.reversed_pair_count < 0 || 2 * spec.reversed_pair_count > spec.num_classes) {
    throw std::invalid_argument("DatasetSpec: need 2*reversed_pair_count <= num_classes");
  }
}

void validate(const SplitSpec& spec) {
  if (!(spec.label_ratio > 0.0) || spec.label_ratio > 1.0) {
    throw std::invalid_argument("SplitSpec: label_ratio must be in (0, 1]");
  }
  if (spec.test_fraction < 0.0 || spec.test_fraction >= 1.0) {
    throw std::invalid_argument("SplitSpec: test_fraction must be in [0, 1)");
  }
}

namespace {

Matrix gaussian_frames(int rows, int cols, RngStream& rng) {
  Matrix m(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols));
  for (double& v : m.data) v = rng.next_gaussian();
  return m;
}

// The motif window occupies half the clip (at least two frames), so frame
// order inside it carries the class identity while the shared envelope
// carries none.
int motif_window_length(int frames) { return std::max(2, frames / 2); }

// Window rows share a common component and differ only in small
// per-position deltas, so the window content (which pair) is far easier to
// read than the frame order inside it (which direction). Row variance
// stays 1.
constexpr double kMotifRowCorrelation = 0.95;

Matrix correlated_motif(int window, int cols, RngStream& rng) {
  const double rho = kMotifRowCorrelation;
  const double delta_scale = std::sqrt(1.0 - rho * rho);
  std::vector<double> base(static_cast<std::size_t>(cols));
  for (double& v : base) v = rng.next_gaussian();
  Matrix motif(static_cast<std::size_t>(window), static_cast<std::size_t>(cols));
  for (std::size_t r = 0; r < motif.rows; ++r) {
    double* row = motif.row_ptr(r);
    for (std::size_t c = 0; c < motif.cols; ++c) {
      row[c] = rho * base[c] + delta_scale * rng.next_gaussian();
    }
  }
  return motif;
}

MotifSpec make_motif(int class_index, const Matrix& envelope, const Matrix& motif, int start,
                     bool reversed, std::optional<int> partner) {
  MotifSpec spec;
  spec.class_index = class_index;
  spec.window_start = start;
  spec.window_length = static_cast<int>(motif.rows);
  spec.reversed_of = partner;
  spec.canonical_frames = envelope;
  const int w = spec.window_length;
  for (int k = 0; k < w; ++k) {
    const int src = reversed ? (w - 1 - k) : k;
    const double* from = motif.row_ptr(static_cast<std::size_t>(src));
    double* to = spec.canonical_frames.row_ptr(static_cast<std::size_t>(start + k));
    std::copy(from, from + motif.cols, to);
  }
  return spec;
}

}  // namespace

Dataset generate_dataset(const DatasetSpec& spec) {
  validate(spec);
  const int n = spec.frames_per_sample;
  const int d = spec.feature_dim;
  const int window = motif_window_length(n);

  Dataset out;
  out.spec = spec;
  out.motifs.resize(static_cast<std::size_t>(spec.num_classes));

  // Paired classes (2g, 2g+1) share envelope, window and motif content and
  // differ only in within-window frame order.
  for (int g = 0; g < spec.reversed_pair_count; ++g) {
    RngStream rng = derive_stream(spec.seed, streams::kDataEnvelope, static_cast<std::uint64_t>(g));
    Matrix envelope = gaussian_frames(n, d, rng);
    Matrix motif = correlated_motif(window, d, rng);
    const int start = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n - window + 1)));
    const int a = 2 * g;
    const int b = 2 * g + 1;
    out.motifs[static_cast<std::size_t>(a)] = make_motif(a, envelope, motif, start, false, b);
    out.motifs[static_cast<std::size_t>(b)] = make_motif(b, envelope, motif, start, true, a);
  }
  for (int c = 2 * spec.reversed_pair_count; c < spec.num_classes; ++c) {
    RngStream rng = derive_stream(spec.seed, streams::kDataEnvelope,
                                  0x10000u + static_cast<std::uint64_t>(c));
    Matrix envelope = gaussian_frames(n, d, rng);
    Matrix motif = correlated_motif(window, d, rng);
    const int start = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n - window + 1)));
    out.motifs[static_cast<std::size_t>(c)] = make_motif(c, envelope, motif, start, false, {});
  }

  out.samples.reserve(static_cast<std::size_t>(spec.num_classes) *
                      static_cast<std::size_t>(spec.samples_per_class));
  for (int c = 0; c < spec.num_classes; ++c) {
    const Matrix& base = out.motifs[static_cast<std::size_t>(c)].canonical_frames;
    for (int s = 0; s < spec.samples_per_class; ++s) {
      Matrix frames = base;
      if (spec.noise_sigma > 0.0) {
        RngStream rng = derive_stream(spec.seed, streams::kDataSample,
                                      static_cast<std::uint64_t>(c), static_cast<std::uint64_t>(s));
        for (double& v : frames.data) v += spec.noise_sigma * rng.next_gaussian();
      }
      out.samples.emplace_back(std::move(frames), c, c);
    }
  }
  return out;
}

SplitResult split_by_ratio(const Dataset& data, const SplitSpec& split) {
  validate(split);
  const int num_classes = data.spec.num_classes;

  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(num_classes));
  for (std::size_t i = 0; i < data.samples.size(); ++i) {
    const int c = data.samples[i].eval_true_label();
    if (c < 0 || c >= num_classes) throw std::runtime_error("split_by_ratio: label out of range");
    by_class[static_cast<std::size_t>(c)].push_back(i);
  }

  // Per-class seeded shuffle, then test split from the back.
  std::vector<std::vector<std::size_t>> train_by_class(static_cast<std::size_t>(num_classes));
  SplitResult out;
  std::size_t train_total = 0;
  for (int c = 0; c < num_classes; ++c) {
    auto& idx = by_class[static_cast<std::size_t>(c)];
    RngStream rng = derive_stream(split.seed, streams::kSplit, static_cast<std::uint64_t>(c));
    for (std::size_t i = idx.size(); i > 1; --i) {
      std::swap(idx[i - 1], idx[rng.next_below(i)]);
    }
    const auto test_n = static_cast<std::size_t>(
        std::floor(split.test_fraction * static_cast<double>(idx.size())));
    for (std::size_t i = idx.size() - test_n; i < idx.size(); ++i) out.test_indices.push_back(idx[i]);
    idx.resize(idx.size() - test_n);
    train_total += idx.size();
    train_by_class[static_cast<std::size_t>(c)] = idx;
  }

  // Stratified labeled quota: ceil(alpha * train size) spread evenly, with a
  // floor of one labeled sample per class.
  std::size_t labeled_total = static_cast<std::size_t>(
      std::ceil(split.label_ratio * static_cast<double>(train_total)));
  labeled_total = std::max<std::size_t>(labeled_total, static_cast<std::size_t>(num_classes));
  labeled_total = std::min(labeled_total, train_total);

  std::vector<std::size_t> quota(static_cast<std::size_t>(num_classes),
                                 labeled_total / static_cast<std::size_t>(num_classes));
  for (std::size_t c = 0; c < labeled_total % static_cast<std::size_t>(num_classes); ++c) {
    ++quota[c];
  }
  for (int c = 0; c < num_classes; ++c) {
    auto& q = quota[static_cast<std::size_t>(c)];
    q = std::max<std::size_t>(q, 1);
    q = std::min(q, train_by_class[static_cast<std::size_t>(c)].size());
  }

  for (int c = 0; c < num_classes; ++c) {
    const auto& idx = train_by_class[static_cast<std::size_t>(c)];
    const std::size_t q = quota[static_cast<std::size_t>(c)];
    for (std::size_t i = 0; i < idx.size(); ++i) {
      if (i < q) {
        out.labeled_indices.push_back(idx[i]);
      } else {
        out.unlabeled_indices.push_back(idx[i]);
      }
    }
  }
  std::sort(out.labeled_indices.begin(), out.labeled_indices.end());
  std::sort(out.unlabeled_indices.begin(), out.unlabeled_indices.end());
  std::sort(out.test_indices.begin(), out.test_indices.end());

  for (std::size_t i : out.labeled_indices) out.labeled.push_back(data.samples[i]);
  for (std::size_t i : out.unlabeled_indices) {
    VideoSample s = data.samples[i];
    s.hide_label();
    out.unlabeled.push_back(std::move(s));
  }
  for (std::size_t i : out.test_indices) out.test.push_back(data.samples[i]);
  return out;
}

}  // namespace sefar
