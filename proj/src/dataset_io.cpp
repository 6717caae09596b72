#include "sefar/dataset_io.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace sefar {

namespace {

using nlohmann::json;

constexpr char kMagic[4] = {'S', 'F', 'D', 'S'};

template <typename T>
void write_pod(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("dataset: truncated file");
  return v;
}

}  // namespace

StoredDataset make_stored_dataset(const Dataset& data, const SplitResult& split_result,
                                  const SplitSpec& split) {
  StoredDataset out;
  out.spec = data.spec;
  out.split = split;
  out.samples = data.samples;
  out.membership.assign(data.samples.size(), -1);
  for (std::size_t i : split_result.labeled_indices) out.membership[i] = 0;
  for (std::size_t i : split_result.unlabeled_indices) {
    out.membership[i] = 1;
    out.samples[i].hide_label();
  }
  for (std::size_t i : split_result.test_indices) out.membership[i] = 2;
  for (int m : out.membership) {
    if (m < 0) throw std::runtime_error("make_stored_dataset: sample missing from all splits");
  }
  for (const MotifSpec& m : data.motifs) {
    out.motifs.push_back({m.class_index, m.window_start, m.window_length,
                          m.reversed_of ? *m.reversed_of : -1});
  }
  return out;
}

TrainData to_train_data(const StoredDataset& stored) {
  TrainData out;
  for (std::size_t i = 0; i < stored.samples.size(); ++i) {
    switch (stored.membership[i]) {
      case 0: out.labeled.push_back(stored.samples[i]); break;
      case 1: out.unlabeled.push_back(stored.samples[i]); break;
      case 2: out.test.push_back(stored.samples[i]); break;
      default: throw std::runtime_error("to_train_data: bad membership");
    }
  }
  return out;
}

void save_dataset(const StoredDataset& stored, const std::string& path) {
  json header;
  header["version"] = kDatasetFileVersion;
  header["spec"] = {{"classes", stored.spec.num_classes},
                    {"frames", stored.spec.frames_per_sample},
                    {"feature_dim", stored.spec.feature_dim},
                    {"samples_per_class", stored.spec.samples_per_class},
                    {"noise_sigma", stored.spec.noise_sigma},
                    {"reversed_pairs", stored.spec.reversed_pair_count},
                    {"seed", stored.spec.seed}};
  header["split"] = {{"label_ratio", stored.split.label_ratio},
                     {"test_fraction", stored.split.test_fraction},
                     {"seed", stored.split.seed}};
  json motifs = json::array();
  for (const auto& m : stored.motifs) {
    motifs.push_back({{"class", m.class_index},
                      {"window_start", m.window_start},
                      {"window_length", m.window_length},
                      {"reversed_of", m.reversed_of}});
  }
  header["class_table"] = std::move(motifs);
  json samples = json::array();
  for (std::size_t i = 0; i < stored.samples.size(); ++i) {
    const VideoSample& s = stored.samples[i];
    samples.push_back({{"membership", stored.membership[i]},
                       {"label", s.label ? json(*s.label) : json(nullptr)},
                       {"true_label", s.eval_true_label()}});
  }
  header["samples"] = std::move(samples);

  const std::string header_str = header.dump();
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("dataset: cannot open " + path + " for writing");
  os.write(kMagic, 4);
  write_pod<std::uint32_t>(os, kDatasetFileVersion);
  write_pod<std::uint64_t>(os, header_str.size());
  os.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
  for (const VideoSample& s : stored.samples) {
    write_pod<std::uint64_t>(os, s.frames.rows);
    write_pod<std::uint64_t>(os, s.frames.cols);
    os.write(reinterpret_cast<const char*>(s.frames.data.data()),
             static_cast<std::streamsize>(s.frames.data.size() * sizeof(double)));
  }
  if (!os) throw std::runtime_error("dataset: write failed for " + path);
}

StoredDataset load_dataset(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("dataset: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) {
    throw std::runtime_error("dataset: bad magic in " + path);
  }
  const auto version = read_pod<std::uint32_t>(is);
  if (version != kDatasetFileVersion) {
    throw std::runtime_error("dataset: unsupported version " + std::to_string(version));
  }
  const auto header_len = read_pod<std::uint64_t>(is);
  std::string header_str(header_len, '\0');
  is.read(header_str.data(), static_cast<std::streamsize>(header_len));
  if (!is) throw std::runtime_error("dataset: truncated header");
  const json header = json::parse(header_str);

  StoredDataset out;
  const json& spec = header.at("spec");
  out.spec.num_classes = spec.at("classes").get<int>();
  out.spec.frames_per_sample = spec.at("frames").get<int>();
  out.spec.feature_dim = spec.at("feature_dim").get<int>();
  out.spec.samples_per_class = spec.at("samples_per_class").get<int>();
  out.spec.noise_sigma = spec.at("noise_sigma").get<double>();
  out.spec.reversed_pair_count = spec.at("reversed_pairs").get<int>();
  out.spec.seed = spec.at("seed").get<std::uint64_t>();
  const json& split = header.at("split");
  out.split.label_ratio = split.at("label_ratio").get<double>();
  out.split.test_fraction = split.at("test_fraction").get<double>();
  out.split.seed = split.at("seed").get<std::uint64_t>();
  for (const json& m : header.at("class_table")) {
    out.motifs.push_back({m.at("class").get<int>(), m.at("window_start").get<int>(),
                          m.at("window_length").get<int>(), m.at("reversed_of").get<int>()});
  }

  const json& samples = header.at("samples");
  out.samples.reserve(samples.size());
  out.membership.reserve(samples.size());
  for (const json& s : samples) {
    const auto rows = read_pod<std::uint64_t>(is);
    const auto cols = read_pod<std::uint64_t>(is);
    Matrix frames(rows, cols);
    is.read(reinterpret_cast<char*>(frames.data.data()),
            static_cast<std::streamsize>(frames.data.size() * sizeof(double)));
    if (!is) throw std::runtime_error("dataset: truncated frame payload");
    std::optional<int> label;
    if (!s.at("label").is_null()) label = s.at("label").get<int>();
    out.samples.emplace_back(std::move(frames), label, s.at("true_label").get<int>());
    out.membership.push_back(s.at("membership").get<int>());
  }
  return out;
}

void write_manifest_csv(const StoredDataset& stored, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("manifest: cannot open " + path + " for writing");
  os << "index,membership,visible_label,true_label\n";
  static const char* kNames[] = {"labeled", "unlabeled", "test"};
  for (std::size_t i = 0; i < stored.samples.size(); ++i) {
    const VideoSample& s = stored.samples[i];
    os << i << ',' << kNames[stored.membership[i]] << ','
       << (s.label ? std::to_string(*s.label) : std::string("")) << ',' << s.eval_true_label()
       << '\n';
  }
}

}  // namespace sefar
