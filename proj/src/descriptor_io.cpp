#include "mldem/descriptor_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string_view>

namespace mldem {

ParseError::ParseError(ParseErrorKind kind, std::size_t line, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ": " + what), kind_(kind), line_(line) {}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view tok, T& out) {
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return res.ec == std::errc() && res.ptr == tok.data() + tok.size();
}

class LineReader {
 public:
  LineReader(std::istream& in, std::size_t first_line) : in_(in), next_(first_line) {}

  // Returns false at end of stream.
  bool next(std::string& line) {
    if (!std::getline(in_, line)) return false;
    current_ = next_++;
    return true;
  }
  std::size_t line() const { return current_; }
  std::size_t upcoming() const { return next_; }

 private:
  std::istream& in_;
  std::size_t next_;
  std::size_t current_ = 0;
};

}  // namespace

void write_descriptors(std::ostream& out, std::span<const GridDescriptor> set) {
  std::size_t rows = 0, cols = 0, bins = 0;
  if (!set.empty()) {
    rows = set.front().rows();
    cols = set.front().cols();
    bins = set.front().bins();
    for (const auto& d : set) {
      if (!d.same_shape(set.front())) {
        throw std::invalid_argument("descriptors in one file must share S1, S2 and N");
      }
    }
  }
  out << "HGD1 " << set.size() << ' ' << rows << ' ' << cols << ' ' << bins << '\n';
  for (const auto& d : set) {
    out << "# " << d.label() << ' ' << d.total_count() << '\n';
    for (std::size_t k = 0; k < d.blocks(); ++k) {
      out << d.block_count(k);
      for (double b : d.block(k)) out << ' ' << format_double(b);
      out << '\n';
    }
  }
}

std::vector<GridDescriptor> read_descriptors(std::istream& in, std::size_t first_line) {
  LineReader reader(in, first_line);
  std::string line;
  if (!reader.next(line)) {
    throw ParseError(ParseErrorKind::kUnexpectedEnd, first_line, "missing HGD1 header");
  }
  const auto header = split(line);
  std::size_t count = 0, rows = 0, cols = 0, bins = 0;
  if (header.size() != 5 || header[0] != "HGD1" || !parse_number(header[1], count) ||
      !parse_number(header[2], rows) || !parse_number(header[3], cols) || !parse_number(header[4], bins)) {
    throw ParseError(ParseErrorKind::kMalformedHeader, reader.line(),
                     "expected 'HGD1 <count> <S1> <S2> <N>'");
  }
  if (count > 0 && (rows == 0 || cols == 0 || bins == 0)) {
    throw ParseError(ParseErrorKind::kMalformedHeader, reader.line(), "grid dimensions must be positive");
  }

  std::vector<GridDescriptor> set;
  set.reserve(count);
  const std::size_t blocks = rows * cols;
  for (std::size_t r = 0; r < count; ++r) {
    if (!reader.next(line)) {
      throw ParseError(ParseErrorKind::kUnexpectedEnd, reader.upcoming(),
                       "expected record " + std::to_string(r + 1) + " of " + std::to_string(count));
    }
    const auto rec = split(line);
    int label = 0;
    std::uint64_t total = 0;
    if (rec.size() != 3 || rec[0] != "#" || !parse_number(rec[1], label) || !parse_number(rec[2], total)) {
      throw ParseError(ParseErrorKind::kMalformedRecord, reader.line(), "expected '# <label> <total_count>'");
    }
    const std::size_t record_line = reader.line();

    std::vector<double> values;
    values.reserve(blocks * bins);
    std::vector<std::uint64_t> counts;
    counts.reserve(blocks);
    for (std::size_t k = 0; k < blocks; ++k) {
      if (!reader.next(line)) {
        throw ParseError(ParseErrorKind::kUnexpectedEnd, reader.upcoming(), "record truncated");
      }
      const auto toks = split(line);
      if (toks.size() != bins + 1) {
        throw ParseError(ParseErrorKind::kDimensionMismatch, reader.line(),
                         "expected block count and " + std::to_string(bins) + " bins, got " +
                             std::to_string(toks.empty() ? 0 : toks.size() - 1) + " bins");
      }
      std::uint64_t n = 0;
      if (!parse_number(toks[0], n)) {
        throw ParseError(ParseErrorKind::kMalformedRecord, reader.line(), "bad block sample count");
      }
      counts.push_back(n);
      const std::size_t offset = values.size();
      for (std::size_t i = 1; i < toks.size(); ++i) {
        double v = 0.0;
        if (!parse_number(toks[i], v)) {
          throw ParseError(ParseErrorKind::kMalformedRecord, reader.line(),
                           "bad bin value '" + std::string(toks[i]) + "'");
        }
        values.push_back(v);
      }
      try {
        validate_histogram(std::span<const double>(values).subspan(offset, bins));
      } catch (const std::invalid_argument& e) {
        throw ParseError(ParseErrorKind::kNotNormalized, reader.line(), e.what());
      }
    }
    GridDescriptor d(label, rows, cols, bins, std::move(values), std::move(counts));
    if (d.total_count() != total) {
      throw ParseError(ParseErrorKind::kCountMismatch, record_line,
                       "total_count " + std::to_string(total) + " differs from block sum " +
                           std::to_string(d.total_count()));
    }
    set.push_back(std::move(d));
  }
  return set;
}

void save_descriptors(const std::filesystem::path& path, std::span<const GridDescriptor> set) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_descriptors(out, set);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<GridDescriptor> load_descriptors(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_descriptors(in);
}

}  // namespace mldem
