#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mldem/descriptor.hpp"

namespace mldem {

enum class ParseErrorKind {
  kMalformedHeader,
  kMalformedRecord,
  kDimensionMismatch,
  kNotNormalized,
  kCountMismatch,
  kUnexpectedEnd,
};

/// Error raised while reading a descriptor or index file. `line()` is 1-based.
class ParseError : public std::runtime_error {
 public:
  ParseError(ParseErrorKind kind, std::size_t line, const std::string& what);

  ParseErrorKind kind() const noexcept { return kind_; }
  std::size_t line() const noexcept { return line_; }

 private:
  ParseErrorKind kind_;
  std::size_t line_;
};

// Text format:
//   HGD1 <count> <S1> <S2> <N>
//   # <label> <total_count>          (per record)
//   <n(k)> <b_1> ... <b_N>           (S1*S2 lines, row-major blocks)
// Doubles are written in shortest round-trip form.

void write_descriptors(std::ostream& out, std::span<const GridDescriptor> set);

/// `first_line` is the line number of the header within the enclosing file,
/// used when descriptors are embedded in another format.
std::vector<GridDescriptor> read_descriptors(std::istream& in, std::size_t first_line = 1);

void save_descriptors(const std::filesystem::path& path, std::span<const GridDescriptor> set);
std::vector<GridDescriptor> load_descriptors(const std::filesystem::path& path);

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double v);

}  // namespace mldem
