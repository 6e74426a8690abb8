#include "objreason/encoder/image_encoders.hpp"

namespace objreason {

IndexMatrix conv3x3_table(int images, int height, int width, int stride, int* out_height, int* out_width) {
  if (stride < 1) throw ConfigError("convolution stride must be positive");
  const int oh = (height - 1) / stride + 1;
  const int ow = (width - 1) / stride + 1;
  IndexMatrix table(static_cast<Eigen::Index>(images) * oh * ow, 9);
  for (int n = 0; n < images; ++n) {
    for (int r = 0; r < oh; ++r) {
      for (int c = 0; c < ow; ++c) {
        const Eigen::Index row = (static_cast<Eigen::Index>(n) * oh + r) * ow + c;
        for (int dr = -1; dr <= 1; ++dr) {
          for (int dc = -1; dc <= 1; ++dc) {
            const int sr = r * stride + dr, sc = c * stride + dc;
            const bool inside = sr >= 0 && sr < height && sc >= 0 && sc < width;
            table(row, (dr + 1) * 3 + (dc + 1)) = inside ? (n * height + sr) * width + sc : -1;
          }
        }
      }
    }
  }
  if (out_height) *out_height = oh;
  if (out_width) *out_width = ow;
  return table;
}

Matrix<double> masked_pixels(const Episode& episode, int slots) {
  const Eigen::Index hw = static_cast<Eigen::Index>(episode.height) * episode.width;
  Matrix<double> out = Matrix<double>::Zero(static_cast<Eigen::Index>(episode.num_frames) * slots * hw, 3);
  for (int t = 0; t < episode.num_frames; ++t) {
    const auto& img = episode.frames.at(static_cast<std::size_t>(t));
    const auto& lab = episode.masks.at(static_cast<std::size_t>(t));
    for (int r = 0; r < episode.height; ++r) {
      for (int c = 0; c < episode.width; ++c) {
        const int owner = lab.at(r, c) - 1;
        if (owner < 0 || owner >= slots) continue;
        const Eigen::Index row = (static_cast<Eigen::Index>(t) * slots + owner) * hw + r * episode.width + c;
        for (int ch = 0; ch < 3; ++ch) out(row, ch) = img.at(r, c, ch) / 255.0;
      }
    }
  }
  return out;
}

Matrix<double> frame_pixels(const Episode& episode) {
  const Eigen::Index hw = static_cast<Eigen::Index>(episode.height) * episode.width;
  Matrix<double> out(static_cast<Eigen::Index>(episode.num_frames) * hw, 3);
  for (int t = 0; t < episode.num_frames; ++t) {
    const auto& img = episode.frames.at(static_cast<std::size_t>(t));
    for (int r = 0; r < episode.height; ++r) {
      for (int c = 0; c < episode.width; ++c) {
        for (int ch = 0; ch < 3; ++ch) out(t * hw + r * episode.width + c, ch) = img.at(r, c, ch) / 255.0;
      }
    }
  }
  return out;
}

}  // namespace objreason
