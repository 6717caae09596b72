#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "sefar/matrix.hpp"

namespace sefar {

/// One trainable tensor with its gradient and SGD momentum buffer.
struct ParamTensor {
  Matrix value;
  Matrix grad;
  Matrix momentum_buf;

  ParamTensor() = default;
  explicit ParamTensor(Matrix v)
      : value(std::move(v)), grad(value.rows, value.cols), momentum_buf(value.rows, value.cols) {}
};

/// Ordered, name-addressed collection of ParamTensors. Iteration order is
/// insertion order and is identical across runs, which the optimizer,
/// EMA update and checkpoint format all rely on.
class ParamSet {
 public:
  ParamTensor& add(const std::string& name, Matrix value);

  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  ParamTensor& at(const std::string& name);
  const ParamTensor& at(const std::string& name) const;

  std::size_t size() const { return entries_.size(); }

  const std::vector<std::string>& names() const { return names_; }

  ParamTensor& operator[](std::size_t i) { return entries_[i]; }
  const ParamTensor& operator[](std::size_t i) const { return entries_[i]; }

  void zero_grads();

  /// Deep copy with freshly zeroed grad/momentum buffers (teacher init).
  ParamSet clone_values() const;

  std::size_t total_value_count() const;

 private:
  std::vector<std::string> names_;
  std::vector<ParamTensor> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Versioned flat checkpoint: "SFAR" magic, u32 format version, u64 count,
/// then per parameter (u32 name length, name bytes, u64 rows, u64 cols,
/// little-endian f64 values). Byte-exact round trip.
void save_params(const ParamSet& params, const std::string& path);
ParamSet load_params(const std::string& path);

constexpr std::uint32_t kParamFileVersion = 1;

}  // namespace sefar
