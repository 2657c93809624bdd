#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace veclstm::nn {

/// A named parameter tensor with row-major values.
struct NamedBlock {
  std::string name;
  std::vector<std::uint32_t> extents;
  std::vector<double> values;

  std::size_t element_count() const;
};

inline constexpr std::uint16_t kCheckpointVersion = 1;

// "VLNN", u16 version, then per block: u16 name length, name bytes, u8 rank,
// u32 extents, little-endian f32 values. Blocks run to end of stream.
void write_checkpoint(std::ostream& out, std::span<const NamedBlock> blocks);
std::vector<NamedBlock> read_checkpoint(std::istream& in);

}  // namespace veclstm::nn
