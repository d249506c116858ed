#include "sead/pixmap.hpp"

#include <fstream>

namespace sead {

namespace {

constexpr std::array<std::uint8_t, 3> kGreen{32, 168, 72};
constexpr std::array<std::uint8_t, 3> kRed{200, 44, 36};
constexpr std::array<std::uint8_t, 3> kBlue{48, 88, 220};

void write_header(std::ofstream& os, const char* magic, std::size_t w,
                  std::size_t h) {
  os << magic << '\n' << w << ' ' << h << '\n' << 255 << '\n';
}

}  // namespace

void write_pgm(const ImageGray& img, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("pixmap: cannot open '" + path + "' for write");
  write_header(os, "P5", img.width, img.height);
  os.write(reinterpret_cast<const char*>(img.pixels.data()),
           static_cast<std::streamsize>(img.pixels.size()));
  if (!os) throw IoError("pixmap: write to '" + path + "' failed");
}

void write_ppm(const ImageRgb& img, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("pixmap: cannot open '" + path + "' for write");
  write_header(os, "P6", img.width, img.height);
  os.write(reinterpret_cast<const char*>(img.pixels.data()),
           static_cast<std::streamsize>(img.pixels.size()));
  if (!os) throw IoError("pixmap: write to '" + path + "' failed");
}

ImageGray render_trace_gray(const SpacetimeTrace& trace) {
  if (trace.rows.empty()) throw ContractViolation("render: empty trace");
  ImageGray img;
  img.width = trace.width();
  img.height = trace.rows.size();
  img.pixels.resize(img.width * img.height);
  const int n_sym = trace.alphabet ? trace.alphabet->size : 2;
  const int span = n_sym > 1 ? n_sym - 1 : 1;
  for (std::size_t row = 0; row < img.height; ++row) {
    for (std::size_t col = 0; col < img.width; ++col) {
      const int s = trace.rows[row][col];
      img.at(row, col) = static_cast<std::uint8_t>(255 - (s * 255) / span);
    }
  }
  return img;
}

ImageRgb render_trace_correctness(const SpacetimeTrace& trace,
                                  const std::vector<Symbol>& oracle_final,
                                  std::optional<std::size_t> cone_source) {
  if (trace.rows.empty()) throw ContractViolation("render: empty trace");
  if (oracle_final.size() != trace.width())
    throw ContractViolation("render: oracle answer width mismatch");
  ImageRgb img;
  img.width = trace.width();
  img.height = trace.rows.size();
  img.pixels.resize(img.width * img.height * 3);
  for (std::size_t row = 0; row < img.height; ++row) {
    for (std::size_t col = 0; col < img.width; ++col)
      img.set(row, col,
              trace.rows[row][col] == oracle_final[col] ? kGreen : kRed);
  }
  if (cone_source) {
    // Dashed slope-1 guide: one cell per step from the source, drawn on
    // every other recorded row.
    for (std::size_t row = 0; row < img.height; row += 2) {
      const std::size_t t = trace.row_steps[row];
      const std::size_t right = *cone_source + t;
      if (right < img.width) img.set(row, right, kBlue);
      if (t <= *cone_source) img.set(row, *cone_source - t, kBlue);
    }
  }
  return img;
}

}  // namespace sead
