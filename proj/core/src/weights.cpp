#include "mscv/weights.hpp"

#include <bit>
#include <fstream>
#include <functional>
#include <iterator>
#include <numeric>

#include "mscv/error.hpp"

namespace mscv {

namespace {

constexpr char kMagic[] = "MSCV1";
constexpr std::size_t kMagicLen = 5;
// Caps that keep a corrupted header from requesting absurd allocations.
constexpr std::uint32_t kMaxRank = 8;
constexpr std::uint32_t kMaxNameLen = 4096;

std::string shape_str(std::span<const int> shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) s += (i ? "," : "") + std::to_string(shape[i]);
  return s + "]";
}

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<unsigned char>(v >> (8 * b)));
}

class Reader {
 public:
  explicit Reader(std::span<const unsigned char> bytes) : bytes_(bytes) {}

  std::size_t pos() const { return pos_; }

  void need(std::size_t n, const std::string& what, const std::string& param) const {
    if (bytes_.size() - pos_ < n) {
      throw LoadError("truncated weight file while reading " + what + " at byte " + std::to_string(pos_),
                      param);
    }
  }

  std::uint32_t u32(const std::string& what, const std::string& param) {
    need(4, what, param);
    const unsigned char* p = bytes_.data() + pos_;
    pos_ += 4;
    return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 |
           std::uint32_t(p[3]) << 24;
  }

  std::string str(std::size_t n, const std::string& param) {
    need(n, "name", param);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

 private:
  std::span<const unsigned char> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::size_t ParamArray::count() const noexcept {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         [](std::size_t a, int d) { return a * static_cast<std::size_t>(d); });
}

void WeightStore::add(std::string name, std::vector<int> shape, std::vector<float> values) {
  MSCV_REQUIRE(!contains(name), "WeightStore: duplicate parameter " + name);
  ParamArray arr{std::move(shape), std::move(values)};
  MSCV_REQUIRE(arr.count() == arr.values.size(),
               "WeightStore: value count does not match shape for " + name);
  index_.emplace(name, entries_.size());
  names_.push_back(std::move(name));
  entries_.push_back(std::move(arr));
}

const ParamArray* WeightStore::find(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : &entries_[it->second];
}

const ParamArray& WeightStore::require(const std::string& name, std::span<const int> shape) const {
  const ParamArray* p = find(name);
  if (!p) throw LoadError("missing parameter", name);
  if (!std::equal(p->shape.begin(), p->shape.end(), shape.begin(), shape.end())) {
    throw LoadError("shape mismatch: file has " + shape_str(p->shape) + ", architecture expects " +
                        shape_str(shape),
                    name);
  }
  return *p;
}

std::vector<ManifestEntry> WeightStore::manifest() const {
  std::vector<ManifestEntry> m;
  m.reserve(names_.size());
  for (std::size_t i = 0; i < names_.size(); ++i) m.push_back({names_[i], entries_[i].shape});
  return m;
}

std::size_t WeightStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.values.size();
  return n;
}

std::vector<unsigned char> encode_weights(const WeightStore& store) {
  std::vector<unsigned char> out(kMagic, kMagic + kMagicLen);
  put_u32(out, static_cast<std::uint32_t>(store.size()));
  for (const auto& name : store.names()) {
    const ParamArray& p = *store.find(name);
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    put_u32(out, static_cast<std::uint32_t>(p.shape.size()));
    for (int d : p.shape) put_u32(out, static_cast<std::uint32_t>(d));
    for (float v : p.values) put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

WeightStore decode_weights(std::span<const unsigned char> bytes) {
  if (bytes.size() < kMagicLen || !std::equal(kMagic, kMagic + kMagicLen, bytes.begin())) {
    throw LoadError("bad magic: not an MSCV1 weight file", "");
  }
  Reader r(bytes.subspan(kMagicLen));
  const std::uint32_t count = r.u32("entry count", "");
  WeightStore store;
  for (std::uint32_t e = 0; e < count; ++e) {
    const std::string where = "entry #" + std::to_string(e);
    const std::uint32_t len = r.u32("name length", where);
    if (len == 0 || len > kMaxNameLen) throw LoadError("invalid name length " + std::to_string(len), where);
    std::string name = r.str(len, where);
    const std::uint32_t rank = r.u32("rank", name);
    if (rank > kMaxRank) throw LoadError("invalid rank " + std::to_string(rank), name);
    std::vector<int> shape;
    std::size_t n = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
      const std::uint32_t d = r.u32("dims", name);
      if (d > (1u << 30)) throw LoadError("invalid dimension " + std::to_string(d), name);
      shape.push_back(static_cast<int>(d));
      n *= d;
      if (n > bytes.size()) throw LoadError("payload larger than file", name);
    }
    r.need(n * 4, "payload", name);
    std::vector<float> values(n);
    for (auto& v : values) v = std::bit_cast<float>(r.u32("payload", name));
    if (store.contains(name)) throw LoadError("duplicate parameter", name);
    store.add(std::move(name), std::move(shape), std::move(values));
  }
  if (r.pos() != bytes.size() - kMagicLen) {
    throw LoadError("trailing bytes after last entry at byte " + std::to_string(kMagicLen + r.pos()), "");
  }
  return store;
}

void save_weights(const WeightStore& store, const std::filesystem::path& path) {
  const auto bytes = encode_weights(store);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

WeightStore load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open weight file " + path.string(), "");
  const std::vector<unsigned char> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return decode_weights(bytes);
}

}  // namespace mscv
