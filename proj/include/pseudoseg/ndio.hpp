#pragma once

// Interchange I/O: NPY v1.0 arrays, binary PPM images, and JSON run manifests.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "pseudoseg/grid.hpp"

namespace pseudoseg {

enum class DType { Float32, UInt8, Int32 };

const char* to_string(DType dtype);

// An n-dimensional C-contiguous array as stored on disk. Only the three
// interchange dtypes are representable.
class ArrayFile {
 public:
  using Storage = std::variant<std::vector<float>, std::vector<std::uint8_t>,
                               std::vector<std::int32_t>>;

  ArrayFile() = default;
  // Throws ShapeMismatch when product(shape) differs from the element count.
  ArrayFile(std::vector<std::size_t> shape, Storage values);

  template <class T>
  static ArrayFile from(std::vector<std::size_t> shape, std::vector<T> values) {
    return ArrayFile(std::move(shape), Storage(std::move(values)));
  }

  DType dtype() const noexcept { return static_cast<DType>(values_.index()); }
  const std::vector<std::size_t>& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t element_count() const;

  template <class T>
  bool holds() const noexcept {
    return std::holds_alternative<std::vector<T>>(values_);
  }
  // Throws UnsupportedDtype if the stored dtype is not T.
  template <class T>
  std::span<const T> values() const {
    if (const auto* v = std::get_if<std::vector<T>>(&values_)) return *v;
    throw Error(ErrorCode::UnsupportedDtype,
                std::string("array holds ") + to_string(dtype()));
  }
  const Storage& storage() const noexcept { return values_; }

  friend bool operator==(const ArrayFile&, const ArrayFile&) = default;

 private:
  std::vector<std::size_t> shape_;
  Storage values_ = std::vector<float>{};
};

// NPY v1.0 encoding, little-endian, header padded to a 64-byte boundary.
std::vector<std::uint8_t> encode_npy(const ArrayFile& a);
ArrayFile decode_npy(std::span<const std::uint8_t> bytes);

ArrayFile read_array(const std::filesystem::path& path);
void write_array(const ArrayFile& a, const std::filesystem::path& path);

// Binary P6 with maxval 255 only. Returns uint8 [H,W,3].
ArrayFile read_image_ppm(const std::filesystem::path& path);
ArrayFile decode_ppm(std::span<const std::uint8_t> bytes);
void write_image_ppm(const ArrayFile& rgb, const std::filesystem::path& path);

// Typed views between ArrayFile and the in-memory grids. The role string only
// feeds error messages.
Grid<float> to_float_grid(const ArrayFile& a, const std::string& role);
Grid<double> to_double_grid(const ArrayFile& a, const std::string& role);
Grid<std::int32_t> to_label_grid(const ArrayFile& a, const std::string& role);
Mask to_mask(const ArrayFile& a, const std::string& role);
// Accepts [M,H,W] stacks and a bare [H,W] mask (treated as M = 1).
std::vector<Mask> to_mask_stack(const ArrayFile& a, const std::string& role);

ArrayFile from_grid(const Grid<float>& g);
ArrayFile from_grid(const Grid<double>& g);  // narrowed to float32
ArrayFile from_grid(const Grid<std::int32_t>& g);
ArrayFile from_grid(const Mask& g);
// Masks must share one extent. An empty list yields shape [0,rows,cols].
ArrayFile from_mask_stack(std::span<const Mask> masks, int rows = 0, int cols = 0);
ArrayFile from_grid_stack(std::span<const Grid<double>> grids, int rows = 0,
                          int cols = 0);

// Interleaved 8-bit RGB, row-major, top-left origin.
struct RgbImage {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> rgb;  // height * width * 3

  std::span<const std::uint8_t, 3> pixel(int row, int col) const {
    return std::span<const std::uint8_t, 3>(
        rgb.data() + (static_cast<std::size_t>(row) * width + col) * 3, 3);
  }
  friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

// Accepts uint8 [H,W,3].
RgbImage to_rgb_image(const ArrayFile& a);
ArrayFile from_rgb_image(const RgbImage& img);

struct HyperParams {
  double q_percent = 60.0;
  double alpha1 = 100.0;
  double alpha2 = 200.0;
  int e_checkpoints = 3;
  double epsilon = 0.6;
  double d_hat = 3.0;
  double tau_cut = 0.5;

  // Throws InvalidArgument naming the offending field.
  void validate() const;

  friend bool operator==(const HyperParams&, const HyperParams&) = default;
};

// One image's inputs and produced artifacts. Paths are kept as written in the
// manifest; resolve() makes them absolute against the manifest directory.
struct RunManifest {
  std::string image_id;
  std::string features;
  std::string image;
  std::string prob_map;
  std::vector<std::string> masks;
  std::string superpixels;
  // Mask stacks of checkpoint_1 .. checkpoint_e, last checkpoint at the back.
  std::vector<std::string> checkpoints;
  HyperParams hyperparams;
  // Artifacts written by pipeline stages, keyed by artifact name.
  std::map<std::string, std::string> outputs;

  std::filesystem::path base_dir;

  std::filesystem::path resolve(const std::string& p) const;

  friend bool operator==(const RunManifest& a, const RunManifest& b) {
    return a.image_id == b.image_id && a.features == b.features && a.image == b.image &&
           a.prob_map == b.prob_map && a.masks == b.masks &&
           a.superpixels == b.superpixels && a.checkpoints == b.checkpoints &&
           a.hyperparams == b.hyperparams && a.outputs == b.outputs;
  }
};

// A manifest file holds either one manifest object or an array of them.
std::vector<RunManifest> read_manifests(const std::filesystem::path& path);
void write_manifest(const RunManifest& m, const std::filesystem::path& path);
std::string manifest_to_json(const RunManifest& m);
RunManifest manifest_from_json(const std::string& text,
                               const std::filesystem::path& base_dir);

std::string hyperparams_to_json(const HyperParams& hp);
// Missing keys keep the values already in `base`.
HyperParams hyperparams_from_json(const std::string& text, HyperParams base = {});

// Writes text followed by '\n'; throws IoFailure.
void write_text(const std::string& text, const std::filesystem::path& path);
std::string read_text(const std::filesystem::path& path);

}  // namespace pseudoseg
