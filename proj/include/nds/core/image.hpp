#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "nds/core/error.hpp"

namespace nds {

/// Row-major, channel-interleaved float image. Samples are sRGB-encoded and
/// nominally in [0, 1]; 8-bit values only exist at the I/O boundary.
class ImageBuffer {
 public:
  ImageBuffer() = default;
  ImageBuffer(int height, int width, int channels, float fill = 0.0f)
      : height_(height), width_(width), channels_(channels) {
    if (height < 1 || width < 1) throw InvalidInput("image dimensions must be positive");
    if (channels != 1 && channels != 3) throw InvalidInput("image must have 1 or 3 channels");
    data_.assign(static_cast<std::size_t>(height) * width * channels, fill);
  }
  ImageBuffer(int height, int width, int channels, std::vector<float> data)
      : height_(height), width_(width), channels_(channels), data_(std::move(data)) {
    if (height < 1 || width < 1) throw InvalidInput("image dimensions must be positive");
    if (channels != 1 && channels != 3) throw InvalidInput("image must have 1 or 3 channels");
    if (data_.size() != static_cast<std::size_t>(height) * width * channels)
      throw InvalidInput("image data length does not match dimensions");
  }

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  float& at(int row, int col, int ch) { return data_[index(row, col, ch)]; }
  float at(int row, int col, int ch) const { return data_[index(row, col, ch)]; }

  /// Replicate-border access.
  float clamped(int row, int col, int ch) const {
    return at(std::clamp(row, 0, height_ - 1), std::clamp(col, 0, width_ - 1), ch);
  }

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }

  bool same_shape(const ImageBuffer& other) const {
    return height_ == other.height_ && width_ == other.width_ && channels_ == other.channels_;
  }

  void clamp01() {
    for (float& v : data_) v = std::clamp(v, 0.0f, 1.0f);
  }

  friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;

 private:
  std::size_t index(int row, int col, int ch) const {
    return (static_cast<std::size_t>(row) * width_ + col) * channels_ + ch;
  }

  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<float> data_;
};

inline void require_same_shape(const ImageBuffer& a, const ImageBuffer& b, const char* what) {
  if (!a.same_shape(b)) {
    throw InvalidInput(std::string(what) + ": image shapes differ (" + std::to_string(a.height()) + "x" +
                       std::to_string(a.width()) + "x" + std::to_string(a.channels()) + " vs " +
                       std::to_string(b.height()) + "x" + std::to_string(b.width()) + "x" +
                       std::to_string(b.channels()) + ")");
  }
}

/// Extracts one channel as a single-channel image.
inline ImageBuffer extract_channel(const ImageBuffer& img, int ch) {
  ImageBuffer out(img.height(), img.width(), 1);
  for (int r = 0; r < img.height(); ++r)
    for (int c = 0; c < img.width(); ++c) out.at(r, c, 0) = img.at(r, c, ch);
  return out;
}

}  // namespace nds
