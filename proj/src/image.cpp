#include "mldem/image.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>
#include <string>

namespace mldem {

GrayImage::GrayImage(std::size_t width, std::size_t height, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (width_ < 3 || height_ < 3) {
    throw std::invalid_argument("image must be at least 3x3");
  }
  if (pixels_.size() != width_ * height_) {
    throw std::invalid_argument("pixel count does not match width*height");
  }
}

GrayImage median_filter(const GrayImage& img) {
  const std::size_t w = img.width();
  const std::size_t h = img.height();
  std::vector<std::uint8_t> out(w * h);
  std::array<std::uint8_t, 9> window{};
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      std::size_t n = 0;
      for (int dy = -1; dy <= 1; ++dy) {
        // edge replication: clamp coordinates into the image
        const auto yy = static_cast<std::size_t>(
            std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(y) + dy, 0, static_cast<std::ptrdiff_t>(h) - 1));
        for (int dx = -1; dx <= 1; ++dx) {
          const auto xx = static_cast<std::size_t>(
              std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(x) + dx, 0, static_cast<std::ptrdiff_t>(w) - 1));
          window[n++] = img.at(xx, yy);
        }
      }
      std::nth_element(window.begin(), window.begin() + 4, window.end());
      out[y * w + x] = window[4];
    }
  }
  return GrayImage(w, h, std::move(out));
}

GradientField compute_gradients(const GrayImage& img) {
  const std::size_t w = img.width();
  const std::size_t h = img.height();
  GradientField g;
  g.width = w;
  g.height = h;
  g.magnitude.assign(w * h, 0.0);
  g.orientation.assign(w * h, 0.0);
  constexpr double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t y = 1; y + 1 < h; ++y) {
    for (std::size_t x = 1; x + 1 < w; ++x) {
      const double gx = (static_cast<double>(img.at(x + 1, y)) - img.at(x - 1, y)) / 2.0;
      const double gy = (static_cast<double>(img.at(x, y + 1)) - img.at(x, y - 1)) / 2.0;
      const std::size_t i = y * w + x;
      g.magnitude[i] = std::sqrt(gx * gx + gy * gy);
      double theta = std::atan2(gy, gx);
      if (theta < 0.0) theta += two_pi;
      if (theta >= two_pi) theta = 0.0;
      g.orientation[i] = theta;
    }
  }
  return g;
}

namespace {

// Reads the next whitespace-delimited header token, skipping '#' comments.
std::string next_token(std::istream& in) {
  std::string tok;
  char c;
  while (in.get(c)) {
    if (c == '#') {
      std::string ignored;
      std::getline(in, ignored);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(c);
  }
  return tok;
}

std::size_t parse_header_number(std::istream& in, const std::filesystem::path& path) {
  const std::string tok = next_token(in);
  try {
    std::size_t pos = 0;
    const unsigned long v = std::stoul(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("bad PGM header in " + path.string());
  }
}

}  // namespace

GrayImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  if (next_token(in) != "P5") {
    throw std::runtime_error("not a binary PGM (P5): " + path.string());
  }
  const std::size_t w = parse_header_number(in, path);
  const std::size_t h = parse_header_number(in, path);
  const std::size_t maxval = parse_header_number(in, path);
  if (maxval == 0 || maxval > 255) {
    throw std::runtime_error("only 8-bit PGM supported: " + path.string());
  }
  // next_token consumed the single whitespace byte after maxval
  std::vector<std::uint8_t> px(w * h);
  in.read(reinterpret_cast<char*>(px.data()), static_cast<std::streamsize>(px.size()));
  if (in.gcount() != static_cast<std::streamsize>(px.size())) {
    throw std::runtime_error("truncated PGM: " + path.string());
  }
  if (maxval != 255) {
    for (auto& p : px) p = static_cast<std::uint8_t>(std::min<std::size_t>(255, p * 255 / maxval));
  }
  return GrayImage(w, h, std::move(px));
}

void write_pgm(const std::filesystem::path& path, const GrayImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels().data()),
            static_cast<std::streamsize>(img.pixels().size()));
}

}  // namespace mldem
