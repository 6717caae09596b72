#include "sefar/params.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace sefar {

static_assert(std::endian::native == std::endian::little,
              "checkpoint writer assumes a little-endian host");

ParamTensor& ParamSet::add(const std::string& name, Matrix value) {
  if (contains(name)) throw std::invalid_argument("ParamSet: duplicate name " + name);
  index_[name] = entries_.size();
  names_.push_back(name);
  entries_.emplace_back(std::move(value));
  return entries_.back();
}

ParamTensor& ParamSet::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::invalid_argument("ParamSet: unknown name " + name);
  return entries_[it->second];
}

const ParamTensor& ParamSet::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::invalid_argument("ParamSet: unknown name " + name);
  return entries_[it->second];
}

void ParamSet::zero_grads() {
  for (auto& e : entries_) e.grad.fill(0.0);
}

ParamSet ParamSet::clone_values() const {
  ParamSet out;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    out.add(names_[i], entries_[i].value);
  }
  return out;
}

std::size_t ParamSet::total_value_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.value.data.size();
  return n;
}

namespace {

template <typename T>
void write_pod(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  return v;
}

constexpr char kMagic[4] = {'S', 'F', 'A', 'R'};

}  // namespace

void save_params(const ParamSet& params, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
  os.write(kMagic, 4);
  write_pod<std::uint32_t>(os, kParamFileVersion);
  write_pod<std::uint64_t>(os, params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const std::string& name = params.names()[i];
    const Matrix& v = params[i].value;
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_pod<std::uint64_t>(os, v.rows);
    write_pod<std::uint64_t>(os, v.cols);
    os.write(reinterpret_cast<const char*>(v.data.data()),
             static_cast<std::streamsize>(v.data.size() * sizeof(double)));
  }
  if (!os) throw std::runtime_error("checkpoint: write failed for " + path);
}

ParamSet load_params(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) {
    throw std::runtime_error("checkpoint: bad magic in " + path);
  }
  const auto version = read_pod<std::uint32_t>(is);
  if (version != kParamFileVersion) {
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
  }
  const auto count = read_pod<std::uint64_t>(is);
  ParamSet out;
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto name_len = read_pod<std::uint32_t>(is);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    const auto rows = read_pod<std::uint64_t>(is);
    const auto cols = read_pod<std::uint64_t>(is);
    Matrix v(rows, cols);
    is.read(reinterpret_cast<char*>(v.data.data()),
            static_cast<std::streamsize>(v.data.size() * sizeof(double)));
    if (!is) throw std::runtime_error("checkpoint: truncated tensor " + name);
    out.add(name, std::move(v));
  }
  return out;
}

}  // namespace sefar
