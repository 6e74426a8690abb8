#pragma once

#include <cstdint>
#include <numeric>
#include <string>

#include "objreason/encoder/slots.hpp"
#include "objreason/numerics.hpp"
#include "objreason/numerics/init.hpp"

namespace objreason {

struct ImageEncoderConfig {
  int channels = 8;
  int stem_stride = 2;
  int residual_blocks = 3;
  int dim = 16;
};

/// Gather table for a 3x3, padding-1 convolution over `images` stacked
/// row-major H x W maps (one pixel per row).
IndexMatrix conv3x3_table(int images, int height, int width, int stride, int* out_height, int* out_width);

/// (frames * slots * H * W) x 3 matrix of mask-times-image pixels in [0, 1].
Matrix<double> masked_pixels(const Episode& episode, int slots);

/// (frames * H * W) x 3 matrix of raw pixels in [0, 1].
Matrix<double> frame_pixels(const Episode& episode);

template <typename Scalar>
Var<Scalar> conv3x3(Var<Scalar> x, const IndexMatrix& table, Var<Scalar> weight, Var<Scalar> bias) {
  return add_row(matmul(patch_gather(x, table), weight), bias);
}

template <typename Scalar>
void init_masked_image_encoder(ParamStore<Scalar>& params, const ImageEncoderConfig& cfg, std::mt19937_64& rng) {
  const int c = cfg.channels;
  params.add("enc.stem.weight", scaled_normal<Scalar>(9 * 3, c, rng, 2.0));
  params.add("enc.stem.bias", Matrix<Scalar>::Zero(1, c));
  for (int b = 0; b < cfg.residual_blocks; ++b) {
    for (int k = 0; k < 2; ++k) {
      const std::string p = "enc.block" + std::to_string(b) + ".conv" + std::to_string(k);
      params.add(p + ".weight", scaled_normal<Scalar>(9 * c, c, rng, k == 0 ? 2.0 : 0.5));
      params.add(p + ".bias", Matrix<Scalar>::Zero(1, c));
    }
  }
  params.add("enc.out.weight", scaled_normal<Scalar>(c, cfg.dim, rng));
  params.add("enc.out.bias", Matrix<Scalar>::Zero(1, cfg.dim));
}

/// v_ti = f(A_ti * image): each slot's masked frame runs through a strided
/// stem, residual blocks of two 3x3 convolutions, global mean pooling and
/// a linear map to `dim`. Returns (frames * slots) x dim.
template <typename Scalar>
Var<Scalar> masked_image_encode(Graph<Scalar>& g, const ParamStore<Scalar>& params, const Episode& episode,
                                const ImageEncoderConfig& cfg, int slots = 0) {
  if (!episode.rendered()) throw Error("masked_image_encode: episode has no rendered frames");
  const int n = slots > 0 ? slots : episode.num_slots;
  const int images = episode.num_frames * n;
  int h = 0, w = 0, h2 = 0, w2 = 0;
  const IndexMatrix stem = conv3x3_table(images, episode.height, episode.width, cfg.stem_stride, &h, &w);
  const IndexMatrix same = conv3x3_table(images, h, w, 1, &h2, &w2);
  auto x = g.constant(masked_pixels(episode, n).template cast<Scalar>());
  x = relu(conv3x3(x, stem, g.param(params, "enc.stem.weight"), g.param(params, "enc.stem.bias")));
  for (int b = 0; b < cfg.residual_blocks; ++b) {
    const std::string p = "enc.block" + std::to_string(b);
    auto y = relu(conv3x3(x, same, g.param(params, p + ".conv0.weight"), g.param(params, p + ".conv0.bias")));
    y = conv3x3(y, same, g.param(params, p + ".conv1.weight"), g.param(params, p + ".conv1.bias"));
    x = relu(add(x, y));
  }
  auto pooled = group_mean_rows(x, static_cast<Eigen::Index>(h) * w);
  return linear(pooled, g.param(params, "enc.out.weight"), g.param(params, "enc.out.bias"));
}

template <typename Scalar>
SlotTensor<Scalar> masked_image_slots(const ParamStore<Scalar>& params, const Episode& episode,
                                      const ImageEncoderConfig& cfg, int slots = 0) {
  Graph<Scalar> g;
  SlotTensor<Scalar> out;
  out.frames = episode.num_frames;
  out.slots = slots > 0 ? slots : episode.num_slots;
  out.dim = cfg.dim;
  out.mu = masked_image_encode(g, params, episode, cfg, out.slots).value();
  out.permutations.assign(static_cast<std::size_t>(out.frames), std::vector<int>(static_cast<std::size_t>(out.slots)));
  for (auto& p : out.permutations) std::iota(p.begin(), p.end(), 0);
  out.source = EncoderKind::MaskedImage;
  return out;
}

/// Region count of the hyperpixel encoder: three stride-2 stages.
inline int hyperpixel_regions(int height, int width) { return (height / 8) * (width / 8); }

template <typename Scalar>
void init_hyperpixel_encoder(ParamStore<Scalar>& params, const ImageEncoderConfig& cfg, std::mt19937_64& rng) {
  const int c = cfg.channels;
  params.add("hyper.conv0.weight", scaled_normal<Scalar>(9 * 3, c, rng, 2.0));
  params.add("hyper.conv0.bias", Matrix<Scalar>::Zero(1, c));
  params.add("hyper.conv1.weight", scaled_normal<Scalar>(9 * c, c, rng, 2.0));
  params.add("hyper.conv1.bias", Matrix<Scalar>::Zero(1, c));
  params.add("hyper.conv2.weight", scaled_normal<Scalar>(9 * c, cfg.dim - 2, rng, 2.0));
  params.add("hyper.conv2.bias", Matrix<Scalar>::Zero(1, cfg.dim - 2));
}

/// Whole-frame convnet downsampling by 8; every output cell becomes one
/// sequence element with its normalised (row, col) appended.
/// Returns (frames * regions) x dim.
template <typename Scalar>
Var<Scalar> hyperpixel_encode(Graph<Scalar>& g, const ParamStore<Scalar>& params, const Episode& episode,
                              const ImageEncoderConfig& cfg) {
  if (!episode.rendered()) throw Error("hyperpixel_encode: episode has no rendered frames");
  if (cfg.dim < 3) throw ConfigError("hyperpixel_encode: dim must exceed 2");
  const int frames = episode.num_frames;
  int h = episode.height, w = episode.width;
  auto x = g.constant(frame_pixels(episode).template cast<Scalar>());
  for (int k = 0; k < 3; ++k) {
    int oh = 0, ow = 0;
    const IndexMatrix table = conv3x3_table(frames, h, w, 2, &oh, &ow);
    const std::string p = "hyper.conv" + std::to_string(k);
    x = conv3x3(x, table, g.param(params, p + ".weight"), g.param(params, p + ".bias"));
    if (k < 2) x = relu(x);
    h = oh;
    w = ow;
  }
  Matrix<Scalar> coords(static_cast<Eigen::Index>(frames) * h * w, 2);
  for (int f = 0; f < frames; ++f) {
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        const Eigen::Index row = (static_cast<Eigen::Index>(f) * h + r) * w + c;
        coords(row, 0) = h > 1 ? Scalar(r) / Scalar(h - 1) : Scalar(0);
        coords(row, 1) = w > 1 ? Scalar(c) / Scalar(w - 1) : Scalar(0);
      }
    }
  }
  return concat_cols<Scalar>({x, g.constant(std::move(coords))});
}

}  // namespace objreason
