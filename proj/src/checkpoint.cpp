#include "veclstm/nn/checkpoint.hpp"

#include <functional>
#include <istream>
#include <numeric>
#include <ostream>

#include "veclstm/byte_io.hpp"
#include "veclstm/error.hpp"

namespace veclstm::nn {

std::size_t NamedBlock::element_count() const {
  return std::accumulate(extents.begin(), extents.end(), std::size_t{1}, std::multiplies<>());
}

void write_checkpoint(std::ostream& out, std::span<const NamedBlock> blocks) {
  out.write("VLNN", 4);
  byte_io::put<std::uint16_t>(out, kCheckpointVersion);
  for (const auto& block : blocks) {
    if (block.values.size() != block.element_count())
      throw Error(ErrorKind::ShapeMismatch, "checkpoint block '" + block.name + "' size/extents disagree");
    if (block.extents.size() > 0xFF) throw Error(ErrorKind::ShapeMismatch, "rank too large");
    byte_io::put_string16(out, block.name);
    byte_io::put<std::uint8_t>(out, static_cast<std::uint8_t>(block.extents.size()));
    for (auto e : block.extents) byte_io::put<std::uint32_t>(out, e);
    for (double v : block.values) byte_io::put<float>(out, static_cast<float>(v));
  }
  if (!out) throw Error(ErrorKind::Io, "checkpoint write failed");
}

std::vector<NamedBlock> read_checkpoint(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::string(magic, 4) != "VLNN")
    throw Error(ErrorKind::SchemaMismatch, "not a checkpoint (bad magic)");
  const auto version = byte_io::get<std::uint16_t>(in);
  if (version != kCheckpointVersion)
    throw Error(ErrorKind::SchemaMismatch, "unsupported checkpoint version " + std::to_string(version));
  std::vector<NamedBlock> blocks;
  while (in.peek() != std::char_traits<char>::eof()) {
    NamedBlock block;
    block.name = byte_io::get_string16(in);
    const auto rank = byte_io::get<std::uint8_t>(in);
    for (int k = 0; k < rank; ++k) block.extents.push_back(byte_io::get<std::uint32_t>(in));
    block.values.resize(block.element_count());
    for (auto& v : block.values) v = byte_io::get<float>(in);
    blocks.push_back(std::move(block));
  }
  return blocks;
}

}  // namespace veclstm::nn
