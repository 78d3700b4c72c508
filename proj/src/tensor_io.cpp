#include "m2n2/tensor_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <random>
#include <set>
#include <sstream>

#include "m2n2/error.hpp"

namespace m2n2 {
namespace {

constexpr char kMagic[4] = {'A', 'T', 'N', '1'};
constexpr std::uint32_t kVersion = 1;
constexpr const char* kSourceImageKey = "source_image_ref";

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  template <class T>
  void scalar(T v) {
    if constexpr (std::endian::native == std::endian::big) {
      std::uint8_t buf[sizeof(T)];
      std::memcpy(buf, &v, sizeof(T));
      std::reverse(std::begin(buf), std::end(buf));
      bytes(buf, sizeof(T));
    } else {
      bytes(&v, sizeof(T));
    }
  }
  void string16(const std::string& s) {
    if (s.size() > std::numeric_limits<std::uint16_t>::max())
      throw ValidationError("string longer than 65535 bytes cannot be stored: " + s.substr(0, 32));
    scalar(static_cast<std::uint16_t>(s.size()));
    bytes(s.data(), s.size());
  }
  void floats(std::span<const float> v) {
    if constexpr (std::endian::native == std::endian::little) {
      bytes(v.data(), v.size_bytes());
    } else {
      for (float f : v) scalar(f);
    }
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  void need(std::size_t n, const char* what) const {
    if (in_.size() - pos_ < n)
      throw CorruptionError(std::string("truncated ATN1 payload while reading ") + what);
  }
  template <class T>
  T scalar(const char* what) {
    need(sizeof(T), what);
    T v;
    std::uint8_t buf[sizeof(T)];
    std::memcpy(buf, in_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(std::begin(buf), std::end(buf));
    std::memcpy(&v, buf, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string string16(const char* what) {
    const auto len = scalar<std::uint16_t>(what);
    need(len, what);
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), len);
    pos_ += len;
    return s;
  }
  void floats(std::vector<float>& out, std::size_t count, const char* what) {
    if (count > (in_.size() - pos_) / sizeof(float))
      throw CorruptionError(std::string("truncated ATN1 payload while reading ") + what);
    out.resize(count);
    if constexpr (std::endian::native == std::endian::little) {
      std::memcpy(out.data(), in_.data() + pos_, count * sizeof(float));
      pos_ += count * sizeof(float);
    } else {
      for (auto& f : out) f = scalar<float>(what);
    }
  }
  bool at_end() const noexcept { return pos_ == in_.size(); }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace

void validate_attention(const AttentionStack& stack) {
  if (stack.h == 0 || stack.w == 0) throw ValidationError("attention grid must be non-empty");
  if (stack.blocks.empty()) throw ValidationError("attention stack has no blocks");
  const std::size_t n = stack.cells();
  std::set<std::string> ids;
  double weight_sum = 0.0;
  for (const auto& block : stack.blocks) {
    if (!ids.insert(block.id).second) throw ValidationError("duplicate block id '" + block.id + "'");
    if (block.tensor.size() != n * n) {
      std::ostringstream msg;
      msg << "block '" << block.id << "' holds " << block.tensor.size() << " values, expected "
          << n * n << " for a " << stack.h << "x" << stack.w << " grid";
      throw ValidationError(msg.str());
    }
    if (!(block.default_weight >= 0.0F && block.default_weight <= 1.0F))
      throw ValidationError("block '" + block.id + "' default weight outside [0, 1]");
    weight_sum += block.default_weight;

    double worst = -1.0;
    std::size_t worst_row = 0;
    double worst_sum = 0.0;
    for (std::size_t row = 0; row < n; ++row) {
      const float* r = block.tensor.data() + row * n;
      double sum = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (!std::isfinite(r[j]) || r[j] < 0.0F) {
          std::ostringstream msg;
          msg << "block '" << block.id << "' row " << row << " has invalid entry " << r[j]
              << " at column " << j;
          throw ValidationError(msg.str());
        }
        sum += r[j];
      }
      const double dev = std::abs(sum - 1.0);
      if (dev > worst) {
        worst = dev;
        worst_row = row;
        worst_sum = sum;
      }
    }
    if (worst > kAttentionRowTolerance) {
      std::ostringstream msg;
      msg << "block '" << block.id << "' row " << worst_row << " sums to " << worst_sum
          << " (tolerance " << kAttentionRowTolerance << ")";
      throw ValidationError(msg.str());
    }
  }
  if (stack.blocks.size() > 1 && std::abs(weight_sum - 1.0) > kBlockWeightTolerance) {
    std::ostringstream msg;
    msg << "block default weights sum to " << weight_sum << ", expected 1";
    throw ValidationError(msg.str());
  }
  for (const auto& [key, value] : stack.source_meta) {
    if (key == kSourceImageKey) throw ValidationError("meta key 'source_image_ref' is reserved");
  }
}

std::vector<std::uint8_t> encode_attention(const AttentionStack& stack, bool validate) {
  if (validate) validate_attention(stack);
  Writer out;
  out.bytes(kMagic, sizeof kMagic);
  out.scalar(kVersion);
  out.scalar(stack.h);
  out.scalar(stack.w);
  out.scalar(static_cast<std::uint32_t>(stack.blocks.size()));
  for (const auto& block : stack.blocks) {
    out.string16(block.id);
    out.scalar(block.default_weight);
    out.floats(block.tensor);
  }
  const std::uint32_t meta_count =
      static_cast<std::uint32_t>(stack.source_meta.size() + (stack.source_image_ref ? 1 : 0));
  out.scalar(meta_count);
  if (stack.source_image_ref) {
    out.string16(kSourceImageKey);
    out.string16(*stack.source_image_ref);
  }
  for (const auto& [key, value] : stack.source_meta) {
    out.string16(key);
    out.string16(value);
  }
  return out.take();
}

AttentionStack decode_attention(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw FormatError("not an ATN1 file (bad magic)");
  Reader in(bytes.subspan(4));
  const auto version = in.scalar<std::uint32_t>("version");
  if (version != kVersion) throw FormatError("unsupported ATN1 version " + std::to_string(version));

  AttentionStack stack;
  stack.h = in.scalar<std::uint32_t>("h");
  stack.w = in.scalar<std::uint32_t>("w");
  const auto block_count = in.scalar<std::uint32_t>("block count");
  const std::uint64_t n = std::uint64_t{stack.h} * stack.w;
  if (n != 0 && n > std::numeric_limits<std::uint64_t>::max() / n)
    throw CorruptionError("ATN1 grid size overflows");
  for (std::uint32_t b = 0; b < block_count; ++b) {
    AttentionBlock block;
    block.id = in.string16("block id");
    block.default_weight = in.scalar<float>("block weight");
    in.floats(block.tensor, static_cast<std::size_t>(n * n), "block payload");
    stack.blocks.push_back(std::move(block));
  }
  const auto meta_count = in.scalar<std::uint32_t>("meta count");
  for (std::uint32_t m = 0; m < meta_count; ++m) {
    auto key = in.string16("meta key");
    auto value = in.string16("meta value");
    if (key == kSourceImageKey)
      stack.source_image_ref = std::move(value);
    else
      stack.source_meta.emplace_back(std::move(key), std::move(value));
  }
  if (!in.at_end()) throw CorruptionError("trailing bytes after ATN1 metadata");
  validate_attention(stack);
  return stack;
}

void write_attention_file(const AttentionStack& stack, const std::filesystem::path& path) {
  const auto bytes = encode_attention(stack);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

AttentionStack read_attention_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_attention(bytes);
}

AttentionStack generate_synthetic_stack(const SyntheticSpec& spec) {
  const std::size_t n = std::size_t{spec.h} * spec.w;
  if (n == 0) throw ValidationError("synthetic grid must be non-empty");
  if (spec.partition.size() != n) {
    std::ostringstream msg;
    msg << "partition has " << spec.partition.size() << " labels, expected " << n << " (" << spec.h
        << "x" << spec.w << ")";
    throw ValidationError(msg.str());
  }
  if (!(spec.in_region_mass > 0.0 && spec.in_region_mass <= 1.0))
    throw ValidationError("in_region_mass must lie in (0, 1]");
  if (!(spec.noise_amplitude >= 0.0 && spec.noise_amplitude < 1.0))
    throw ValidationError("noise_amplitude must lie in [0, 1)");

  const auto [lo, hi] = std::minmax_element(spec.partition.begin(), spec.partition.end());
  if (*lo < 0) throw ValidationError("partition labels must be non-negative");
  std::vector<std::size_t> region_size(static_cast<std::size_t>(*hi) + 1, 0);
  for (int label : spec.partition) ++region_size[static_cast<std::size_t>(label)];
  for (std::size_t r = 0; r < region_size.size(); ++r) {
    if (region_size[r] == 0)
      throw ValidationError("region " + std::to_string(r) + " has zero cells");
  }

  AttentionBlock block;
  block.id = "synthetic";
  block.default_weight = 1.0F;
  block.tensor.resize(n * n);
  std::mt19937_64 rng(spec.noise_seed);
  std::uniform_real_distribution<double> jitter(-1.0, 1.0);
  std::vector<double> row(n);
  for (std::size_t k = 0; k < n; ++k) {
    const int label = spec.partition[k];
    const std::size_t inside = region_size[static_cast<std::size_t>(label)];
    const std::size_t outside = n - inside;
    const double in_mass = outside == 0 ? 1.0 : spec.in_region_mass;
    const double in_value = in_mass / static_cast<double>(inside);
    const double out_value = outside == 0 ? 0.0 : (1.0 - in_mass) / static_cast<double>(outside);
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      double v = spec.partition[j] == label ? in_value : out_value;
      if (spec.noise_amplitude > 0.0) v *= 1.0 + spec.noise_amplitude * jitter(rng);
      row[j] = v;
      sum += v;
    }
    float* dst = block.tensor.data() + k * n;
    if (spec.noise_amplitude > 0.0) {
      for (std::size_t j = 0; j < n; ++j) dst[j] = static_cast<float>(row[j] / sum);
    } else {
      for (std::size_t j = 0; j < n; ++j) dst[j] = static_cast<float>(row[j]);
    }
  }

  AttentionStack stack;
  stack.h = spec.h;
  stack.w = spec.w;
  stack.blocks.push_back(std::move(block));
  stack.source_meta.emplace_back("backbone", "synthetic");
  return stack;
}

}  // namespace m2n2
