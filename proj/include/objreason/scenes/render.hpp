#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "objreason/scenes/episode.hpp"

namespace objreason {

struct RenderedFrame {
  Image image;
  LabelMap masks;
};

inline constexpr std::array<std::uint8_t, 3> kBackground = {24, 24, 24};

std::array<std::uint8_t, 3> palette(int color_code);

/// Flat-shaded rendering of one frame. Visible objects are painted in
/// (layer, y, id) order, so an overlap pixel belongs to the nearer object
/// (larger y) and its label map entry names that object's slot.
RenderedFrame render_frame(const std::vector<SceneObject>& objects, int frame, int height, int width,
                           double arena);

/// Fills `episode.frames` and `episode.masks` for every frame.
void render_episode(Episode& episode);

}  // namespace objreason
