#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <type_traits>

#include "veclstm/error.hpp"

namespace veclstm::byte_io {

// Little-endian fixed-width encoding shared by the binary file formats.

template <typename T>
void put(std::ostream& out, T value) {
  static_assert(std::is_arithmetic_v<T>);
  unsigned char bytes[sizeof(T)];
  if constexpr (std::is_floating_point_v<T>) {
    using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
    const U bits = std::bit_cast<U>(value);
    for (std::size_t k = 0; k < sizeof(T); ++k) bytes[k] = static_cast<unsigned char>(bits >> (8 * k));
  } else {
    using U = std::make_unsigned_t<T>;
    const U bits = static_cast<U>(value);
    for (std::size_t k = 0; k < sizeof(T); ++k) bytes[k] = static_cast<unsigned char>(bits >> (8 * k));
  }
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get(std::istream& in, ErrorKind on_error = ErrorKind::Io) {
  static_assert(std::is_arithmetic_v<T>);
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T)))
    throw Error(on_error, "unexpected end of binary stream");
  if constexpr (std::is_floating_point_v<T>) {
    using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
    U bits = 0;
    for (std::size_t k = 0; k < sizeof(T); ++k) bits |= static_cast<U>(bytes[k]) << (8 * k);
    return std::bit_cast<T>(bits);
  } else {
    using U = std::make_unsigned_t<T>;
    U bits = 0;
    for (std::size_t k = 0; k < sizeof(T); ++k) bits |= static_cast<U>(static_cast<U>(bytes[k]) << (8 * k));
    return static_cast<T>(bits);
  }
}

inline void put_string16(std::ostream& out, const std::string& s) {
  if (s.size() > 0xFFFF) throw Error(ErrorKind::ValidationError, "string longer than 65535 bytes");
  put<std::uint16_t>(out, static_cast<std::uint16_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string get_string16(std::istream& in, ErrorKind on_error = ErrorKind::Io) {
  const auto n = get<std::uint16_t>(in, on_error);
  std::string s(n, '\0');
  if (n && !in.read(s.data(), n)) throw Error(on_error, "unexpected end of binary stream");
  return s;
}

}  // namespace veclstm::byte_io
