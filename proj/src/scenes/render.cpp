#include "objreason/scenes/render.hpp"

#include <algorithm>
#include <cmath>

#include "objreason/numerics/error.hpp"

namespace objreason {

std::array<std::uint8_t, 3> palette(int color_code) {
  static constexpr std::array<std::array<std::uint8_t, 3>, kNumColorCodes> table = {{
      {220, 40, 40},    // red
      {40, 190, 60},    // green
      {50, 80, 230},    // blue
      {235, 215, 40},   // yellow
      {40, 210, 220},   // cyan
      {160, 60, 200},   // purple
      {212, 175, 55},   // gold
      {255, 250, 170},  // lit machine
      {110, 110, 110},  // unlit machine
      {60, 60, 140},    // unknown machine
  }};
  if (color_code < 0 || color_code >= kNumColorCodes) throw Error("palette: bad color code");
  return table[static_cast<std::size_t>(color_code)];
}

namespace {

bool covers(int shape_code, double dx, double dy, double r) {
  switch (shape_code) {
    case shape::kCube: return std::abs(dx) <= 0.85 * r && std::abs(dy) <= 0.85 * r;
    case shape::kSphere: return dx * dx + dy * dy <= r * r;
    case shape::kCylinder: return std::abs(dx) <= 0.7 * r && std::abs(dy) <= r;
    case shape::kCone: return dy >= -r && dy <= r && std::abs(dx) <= r * (dy + r) / (2.0 * r);
    case shape::kSnitch: return std::abs(dx) + std::abs(dy) <= r;
    case shape::kMachine: return std::abs(dx) <= r && std::abs(dy) <= 0.3 * r;
    default: throw Error("render: unknown shape code " + std::to_string(shape_code));
  }
}

}  // namespace

RenderedFrame render_frame(const std::vector<SceneObject>& objects, int frame, int height, int width,
                           double arena) {
  RenderedFrame out{Image(height, width), LabelMap(height, width)};
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      for (int ch = 0; ch < 3; ++ch) out.image.at(r, c, ch) = kBackground[static_cast<std::size_t>(ch)];
    }
  }
  std::vector<int> order;
  for (int k = 0; k < static_cast<int>(objects.size()); ++k) {
    const auto& s = objects[static_cast<std::size_t>(k)].trajectory.at(static_cast<std::size_t>(frame));
    if (s.visible) order.push_back(k);
  }
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const auto& oa = objects[static_cast<std::size_t>(a)];
    const auto& ob = objects[static_cast<std::size_t>(b)];
    const double ya = oa.trajectory[static_cast<std::size_t>(frame)].y;
    const double yb = ob.trajectory[static_cast<std::size_t>(frame)].y;
    if (oa.layer != ob.layer) return oa.layer < ob.layer;
    if (ya != yb) return ya < yb;
    return oa.id < ob.id;
  });
  const double px_per_unit_x = width / arena;
  const double px_per_unit_y = height / arena;
  for (int k : order) {
    const auto& obj = objects[static_cast<std::size_t>(k)];
    const auto& s = obj.trajectory[static_cast<std::size_t>(frame)];
    const auto rgb = palette(obj.color_at(frame));
    for (int r = 0; r < height; ++r) {
      const double dy = (r + 0.5) / px_per_unit_y - s.y;
      if (std::abs(dy) > obj.radius) continue;
      for (int c = 0; c < width; ++c) {
        const double dx = (c + 0.5) / px_per_unit_x - s.x;
        if (!covers(obj.shape, dx, dy, obj.radius)) continue;
        for (int ch = 0; ch < 3; ++ch) out.image.at(r, c, ch) = rgb[static_cast<std::size_t>(ch)];
        out.masks.at(r, c) = static_cast<std::uint8_t>(k + 1);
      }
    }
  }
  return out;
}

void render_episode(Episode& episode) {
  episode.frames.clear();
  episode.masks.clear();
  for (int t = 0; t < episode.num_frames; ++t) {
    auto f = render_frame(episode.objects, t, episode.height, episode.width, episode.arena);
    episode.frames.push_back(std::move(f.image));
    episode.masks.push_back(std::move(f.masks));
  }
}

}  // namespace objreason
