#pragma once

#include <string>

#include "sefar/ssl.hpp"
#include "sefar/synth_data.hpp"

namespace sefar {

/// A generated dataset together with its split membership, as stored on
/// disk: JSON header (spec, split spec, class table, per-sample metadata)
/// followed by a binary frame payload in the checkpoint matrix encoding.
struct StoredDataset {
  DatasetSpec spec;
  SplitSpec split;
  std::vector<VideoSample> samples;  // visible labels already per split
  std::vector<int> membership;       // 0 labeled, 1 unlabeled, 2 test
  struct MotifMeta {
    int class_index = 0;
    int window_start = 0;
    int window_length = 0;
    int reversed_of = -1;  // -1 = none
  };
  std::vector<MotifMeta> motifs;
};

StoredDataset make_stored_dataset(const Dataset& data, const SplitResult& split_result,
                                  const SplitSpec& split);

TrainData to_train_data(const StoredDataset& stored);

void save_dataset(const StoredDataset& stored, const std::string& path);
StoredDataset load_dataset(const std::string& path);

/// CSV companion listing index, membership, visible label and true label.
void write_manifest_csv(const StoredDataset& stored, const std::string& path);

constexpr std::uint32_t kDatasetFileVersion = 1;

}  // namespace sefar
