#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace fp {

/// Interleaved RGB raster. Samples are stored row-major, three per pixel.
template <class T>
struct Raster {
  int width = 0;
  int height = 0;
  std::vector<T> data;

  Raster() = default;
  Raster(int w, int h, T fill = T{})
      : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, fill) {}

  bool empty() const noexcept { return data.empty(); }
  std::size_t pixel_count() const noexcept { return static_cast<std::size_t>(width) * height; }

  T& at(int x, int y, int c) { return data[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  const T& at(int x, int y, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }

  friend bool operator==(const Raster&, const Raster&) = default;
};

using Image8 = Raster<std::uint8_t>;
using ImageF = Raster<float>;  // 0..255 scale

}  // namespace fp
