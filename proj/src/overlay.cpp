#include "pseudoseg/overlay.hpp"

#include <cmath>

namespace pseudoseg {

std::array<std::uint8_t, 3> mask_color(std::size_t index) {
  constexpr double kGoldenAngle = 137.50776405003785;
  const double hue = std::fmod(static_cast<double>(index) * kGoldenAngle, 360.0);
  const double h = hue / 60.0;
  const double x = 1.0 - std::abs(std::fmod(h, 2.0) - 1.0);
  double rgb[3];
  switch (static_cast<int>(h)) {
    case 0: rgb[0] = 1, rgb[1] = x, rgb[2] = 0; break;
    case 1: rgb[0] = x, rgb[1] = 1, rgb[2] = 0; break;
    case 2: rgb[0] = 0, rgb[1] = 1, rgb[2] = x; break;
    case 3: rgb[0] = 0, rgb[1] = x, rgb[2] = 1; break;
    case 4: rgb[0] = x, rgb[1] = 0, rgb[2] = 1; break;
    default: rgb[0] = 1, rgb[1] = 0, rgb[2] = x; break;
  }
  return {static_cast<std::uint8_t>(std::lround(rgb[0] * 255.0)),
          static_cast<std::uint8_t>(std::lround(rgb[1] * 255.0)),
          static_cast<std::uint8_t>(std::lround(rgb[2] * 255.0))};
}

RgbImage render_overlay(const RgbImage& image, const std::vector<Mask>& masks) {
  RgbImage out = image;
  for (std::size_t m = 0; m < masks.size(); ++m) {
    const Mask& mask = masks[m];
    if (mask.rows() != image.height || mask.cols() != image.width) {
      throw Error(ErrorCode::ShapeMismatch, "overlay mask " + std::to_string(m) +
                                                " does not match the image extent");
    }
    const auto color = mask_color(m);
    for (std::size_t i = 0; i < mask.size(); ++i) {
      if (!mask[i]) continue;
      for (int ch = 0; ch < 3; ++ch) {
        auto& px = out.rgb[i * 3 + ch];
        // Round half up: (a + b + 1) / 2 == round(0.5 a + 0.5 b).
        px = static_cast<std::uint8_t>((px + color[ch] + 1) / 2);
      }
    }
  }
  return out;
}

}  // namespace pseudoseg
