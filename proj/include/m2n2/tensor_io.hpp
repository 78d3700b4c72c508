#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace m2n2 {

/// One transformer block's self-attention with heads already summed.
/// `tensor` has shape h x w x h x w, row-major over (k, l, r, c).
struct AttentionBlock {
  std::string id;
  std::vector<float> tensor;
  float default_weight = 1.0F;

  friend bool operator==(const AttentionBlock&, const AttentionBlock&) = default;
};

struct AttentionStack {
  std::uint32_t h = 0;
  std::uint32_t w = 0;
  std::vector<AttentionBlock> blocks;
  std::optional<std::string> source_image_ref;
  std::vector<std::pair<std::string, std::string>> source_meta;

  std::size_t cells() const noexcept { return std::size_t{h} * w; }
  friend bool operator==(const AttentionStack&, const AttentionStack&) = default;
};

inline constexpr double kAttentionRowTolerance = 1e-4;
inline constexpr double kBlockWeightTolerance = 1e-6;

/// Throws ValidationError if any AttentionStack invariant is violated. The
/// message names the block and the row with the largest sum deviation.
void validate_attention(const AttentionStack& stack);

/// Serializes to ATN1 bytes. With `validate` false the stack is written as-is,
/// which lets tests produce deliberately invalid files.
std::vector<std::uint8_t> encode_attention(const AttentionStack& stack, bool validate = true);
AttentionStack decode_attention(std::span<const std::uint8_t> bytes);

void write_attention_file(const AttentionStack& stack, const std::filesystem::path& path);
AttentionStack read_attention_file(const std::filesystem::path& path);

/// Backbone-free stand-in for exported attention. Every row of cell k puts
/// `in_region_mass` uniformly on cells sharing k's label and the remainder
/// uniformly on the other cells. A non-zero `noise_amplitude` perturbs each
/// entry by a factor in [1 - a, 1 + a] drawn from `noise_seed`, after which
/// rows are renormalized.
struct SyntheticSpec {
  std::uint32_t h = 0;
  std::uint32_t w = 0;
  std::vector<int> partition;
  double in_region_mass = 0.8;
  std::uint64_t noise_seed = 0;
  double noise_amplitude = 0.0;
};

AttentionStack generate_synthetic_stack(const SyntheticSpec& spec);

}  // namespace m2n2
