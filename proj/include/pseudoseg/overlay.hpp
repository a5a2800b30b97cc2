#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "pseudoseg/grid.hpp"
#include "pseudoseg/ndio.hpp"

namespace pseudoseg {

// Fully saturated colour whose hue advances by the golden angle per index.
std::array<std::uint8_t, 3> mask_color(std::size_t index);

// Blends each mask's colour at alpha 0.5 over the pixels it covers, masks in
// order. Throws ShapeMismatch when a mask's extent differs from the image.
RgbImage render_overlay(const RgbImage& image, const std::vector<Mask>& masks);

}  // namespace pseudoseg
