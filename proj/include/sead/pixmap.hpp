#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sead/lattice.hpp"

namespace sead {

struct ImageGray {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;  // row-major

  std::uint8_t& at(std::size_t row, std::size_t col) {
    return pixels[row * width + col];
  }
};

struct ImageRgb {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;  // row-major, 3 bytes per pixel

  void set(std::size_t row, std::size_t col,
           const std::array<std::uint8_t, 3>& rgb) {
    const std::size_t o = (row * width + col) * 3;
    pixels[o] = rgb[0];
    pixels[o + 1] = rgb[1];
    pixels[o + 2] = rgb[2];
  }
};

// Binary portable pixmaps (P5 grayscale / P6 color); byte-deterministic.
void write_pgm(const ImageGray& img, const std::string& path);
void write_ppm(const ImageRgb& img, const std::string& path);

// Spacetime diagram: rows = time increasing downward, columns = position,
// symbols spread over the gray ramp.
ImageGray render_trace_gray(const SpacetimeTrace& trace);

// Correctness overlay: each recorded row is compared cell-by-cell against
// the oracle's final answer (green = equal, red = different). The optional
// light-cone guide draws a dashed slope-1 line from the source cell.
ImageRgb render_trace_correctness(const SpacetimeTrace& trace,
                                  const std::vector<Symbol>& oracle_final,
                                  std::optional<std::size_t> cone_source = {});

}  // namespace sead
