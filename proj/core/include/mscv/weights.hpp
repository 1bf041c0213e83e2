#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace mscv {

struct ParamArray {
  std::vector<int> shape;
  std::vector<float> values;

  std::size_t count() const noexcept;
  friend bool operator==(const ParamArray&, const ParamArray&) = default;
};

struct ManifestEntry {
  std::string name;
  std::vector<int> shape;
  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

/// Named parameter arrays in insertion order.
class WeightStore {
 public:
  /// Throws ContractError on a duplicate name or a shape/value-count mismatch.
  void add(std::string name, std::vector<int> shape, std::vector<float> values);

  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  const ParamArray* find(const std::string& name) const;

  /// Throws LoadError naming the parameter if it is missing or mis-shaped.
  const ParamArray& require(const std::string& name, std::span<const int> shape) const;

  std::size_t size() const noexcept { return names_.size(); }
  std::vector<ManifestEntry> manifest() const;
  std::size_t parameter_count() const;

  const std::vector<std::string>& names() const noexcept { return names_; }

  friend bool operator==(const WeightStore& a, const WeightStore& b) {
    return a.names_ == b.names_ && a.entries_ == b.entries_;
  }

 private:
  std::vector<std::string> names_;
  std::vector<ParamArray> entries_;
  std::map<std::string, std::size_t> index_;
};

/// MSCV1 container, all integers little-endian u32:
///   "MSCV1" | count | { name_len | name | rank | dims[rank] | f32 payload }*
std::vector<unsigned char> encode_weights(const WeightStore& store);
WeightStore decode_weights(std::span<const unsigned char> bytes);

void save_weights(const WeightStore& store, const std::filesystem::path& path);
WeightStore load_weights(const std::filesystem::path& path);

}  // namespace mscv
