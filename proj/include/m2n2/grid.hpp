#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "m2n2/error.hpp"

namespace m2n2 {

struct Pixel {
  int x = 0;  // column
  int y = 0;  // row

  friend bool operator==(const Pixel&, const Pixel&) = default;
};

/// Dense row-major 2-D array. Index (row, col) maps to row * width + col.
template <class T>
class Grid {
 public:
  Grid() = default;
  Grid(int height, int width, T fill = T{})
      : height_(height), width_(width),
        data_(static_cast<std::size_t>(checked(height) * checked(width)), fill) {}
  Grid(int height, int width, std::vector<T> data)
      : height_(height), width_(width), data_(std::move(data)) {
    if (data_.size() != static_cast<std::size_t>(checked(height) * checked(width)))
      throw ValidationError("grid data size does not match its shape");
  }

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(int row, int col) noexcept { return data_[index(row, col)]; }
  const T& operator()(int row, int col) const noexcept { return data_[index(row, col)]; }
  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }

  bool contains(int row, int col) const noexcept {
    return row >= 0 && col >= 0 && row < height_ && col < width_;
  }
  bool contains(Pixel p) const noexcept { return contains(p.y, p.x); }

  std::size_t index(int row, int col) const noexcept {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(col);
  }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }
  std::vector<T>& storage() noexcept { return data_; }
  const std::vector<T>& storage() const noexcept { return data_; }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  static std::int64_t checked(int extent) {
    if (extent < 0) throw ValidationError("grid extent must be non-negative");
    return extent;
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<T> data_;
};

using FloatMap = Grid<float>;
using Mask = Grid<std::uint8_t>;

}  // namespace m2n2
