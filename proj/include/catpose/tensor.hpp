#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace catpose {

/// Dense planar tensor (channels x height x width), row-major, double precision.
class Tensor {
 public:
  Tensor() = default;
  Tensor(int channels, int height, int width, double fill = 0.0)
      : channels_(channels), height_(height), width_(width),
        data_(static_cast<std::size_t>(channels) * height * width, fill) {}

  int channels() const { return channels_; }
  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return data_.size(); }
  bool same_shape(const Tensor& o) const {
    return channels_ == o.channels_ && height_ == o.height_ && width_ == o.width_;
  }

  std::size_t index(int c, int y, int x) const {
    return (static_cast<std::size_t>(c) * height_ + y) * width_ + x;
  }
  double& operator()(int c, int y, int x) { return data_[index(c, y, x)]; }
  double operator()(int c, int y, int x) const { return data_[index(c, y, x)]; }
  bool in_bounds(int y, int x) const { return y >= 0 && y < height_ && x >= 0 && x < width_; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::span<double> channel(int c) {
    return std::span<double>(data_).subspan(static_cast<std::size_t>(c) * height_ * width_,
                                            static_cast<std::size_t>(height_) * width_);
  }
  std::span<const double> channel(int c) const {
    return std::span<const double>(data_).subspan(
        static_cast<std::size_t>(c) * height_ * width_, static_cast<std::size_t>(height_) * width_);
  }

  bool operator==(const Tensor& o) const = default;

 private:
  int channels_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<double> data_;
};

}  // namespace catpose
