#include "mldem/index_io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "mldem/descriptor_io.hpp"

namespace mldem {

void write_index(std::ostream& out, const SearchIndex& index) {
  const std::size_t r = index.size();
  out << "MLDEM1 " << r << ' ' << format_double(index.beta()) << ' ' << format_double(index.rho0()) << ' '
      << index.r1() << ' ' << to_string(index.metric().kind) << ' ' << index.metric().delta << ' '
      << format_double(index.nK()) << '\n';
  for (std::size_t i = 0; i < r; ++i) {
    const auto row = index.matrix().row(i);
    for (std::size_t j = 0; j < r; ++j) {
      if (j > 0) out << ' ';
      out << format_double(row[j]);
    }
    out << '\n';
  }
  std::vector<GridDescriptor> models;
  models.reserve(r);
  for (const auto& m : index.models()) models.push_back(m.descriptor());
  write_descriptors(out, models);
}

namespace {

template <typename T>
T parse_field(const std::string& tok, std::size_t line, const char* what) {
  T v{};
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
    throw ParseError(ParseErrorKind::kMalformedHeader, line, std::string("bad ") + what + " '" + tok + "'");
  }
  return v;
}

}  // namespace

SearchIndex read_index(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(ParseErrorKind::kUnexpectedEnd, 1, "missing MLDEM1 header");
  std::istringstream hs(line);
  std::string magic, r_tok, beta_tok, rho0_tok, r1_tok, kind_tok, delta_tok, nk_tok, extra;
  hs >> magic >> r_tok >> beta_tok >> rho0_tok >> r1_tok >> kind_tok >> delta_tok >> nk_tok;
  if (magic != "MLDEM1" || nk_tok.empty() || (hs >> extra)) {
    throw ParseError(ParseErrorKind::kMalformedHeader, 1,
                     "expected 'MLDEM1 <R> <beta> <rho0> <r1> <metric-kind> <delta> <nK>'");
  }
  const auto r = parse_field<std::size_t>(r_tok, 1, "R");
  const auto beta = parse_field<double>(beta_tok, 1, "beta");
  const auto rho0 = parse_field<double>(rho0_tok, 1, "rho0");
  const auto r1 = parse_field<std::size_t>(r1_tok, 1, "r1");
  const auto delta = parse_field<std::size_t>(delta_tok, 1, "delta");
  const auto nk = parse_field<double>(nk_tok, 1, "nK");
  MetricConfig metric;
  try {
    metric.kind = parse_metric_kind(kind_tok);
  } catch (const std::invalid_argument& e) {
    throw ParseError(ParseErrorKind::kMalformedHeader, 1, e.what());
  }
  metric.delta = delta;

  std::vector<double> values;
  values.reserve(r * r);
  for (std::size_t i = 0; i < r; ++i) {
    const std::size_t lineno = i + 2;
    if (!std::getline(in, line)) throw ParseError(ParseErrorKind::kUnexpectedEnd, lineno, "matrix truncated");
    std::istringstream ls(line);
    std::string tok;
    std::size_t n = 0;
    while (ls >> tok) {
      values.push_back(parse_field<double>(tok, lineno, "matrix entry"));
      ++n;
    }
    if (n != r) {
      throw ParseError(ParseErrorKind::kDimensionMismatch, lineno,
                       "expected " + std::to_string(r) + " matrix entries, got " + std::to_string(n));
    }
  }
  std::vector<GridDescriptor> models = read_descriptors(in, r + 2);
  if (models.size() != r) {
    throw ParseError(ParseErrorKind::kCountMismatch, r + 2,
                     "index lists " + std::to_string(r) + " models but embeds " + std::to_string(models.size()));
  }
  try {
    return SearchIndex::from_parts(std::move(models), DistanceMatrix(r, std::move(values)), metric, beta, rho0, r1,
                                   nk);
  } catch (const std::invalid_argument& e) {
    throw ParseError(ParseErrorKind::kMalformedHeader, 1, e.what());
  }
}

void save_index(const std::filesystem::path& path, const SearchIndex& index) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_index(out, index);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

SearchIndex load_index(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_index(in);
}

}  // namespace mldem
