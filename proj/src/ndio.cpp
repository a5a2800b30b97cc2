#include "pseudoseg/ndio.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include <json.hpp>

namespace pseudoseg {

static_assert(std::endian::native == std::endian::little,
              "NPY payloads are copied verbatim; big-endian hosts need byte swapping");

namespace {

using json = nlohmann::json;

constexpr std::uint8_t kNpyMagic[6] = {0x93, 'N', 'U', 'M', 'P', 'Y'};
constexpr std::size_t kNpyPreamble = 10;  // magic + version + u16 header length
constexpr std::size_t kNpyAlign = 64;

std::size_t item_size(DType d) {
  switch (d) {
    case DType::Float32: return 4;
    case DType::UInt8: return 1;
    case DType::Int32: return 4;
  }
  return 0;
}

const char* descr_of(DType d) {
  switch (d) {
    case DType::Float32: return "<f4";
    case DType::UInt8: return "|u1";
    case DType::Int32: return "<i4";
  }
  return "";
}

std::string shape_literal(const std::vector<std::size_t>& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  if (shape.size() == 1) s += ",";
  s += ")";
  return s;
}

// Parser for the Python-literal dict in an NPY header. Offsets reported in
// errors are absolute file offsets.
class HeaderParser {
 public:
  HeaderParser(std::string_view text, std::size_t base) : text_(text), base_(base) {}

  struct Fields {
    std::string descr;
    bool fortran_order = false;
    std::vector<std::size_t> shape;
    bool has_descr = false, has_order = false, has_shape = false;
  };

  Fields parse() {
    Fields f;
    skip_ws();
    expect('{');
    skip_ws();
    while (peek() != '}') {
      const std::size_t key_pos = pos_;
      std::string key = parse_string();
      skip_ws();
      expect(':');
      skip_ws();
      if (key == "descr") {
        f.descr = parse_string();
        f.has_descr = true;
      } else if (key == "fortran_order") {
        f.fortran_order = parse_bool();
        f.has_order = true;
      } else if (key == "shape") {
        f.shape = parse_tuple();
        f.has_shape = true;
      } else {
        fail(key_pos, "unexpected key '" + key + "'");
      }
      skip_ws();
      if (peek() == ',') {
        ++pos_;
        skip_ws();
      } else if (peek() != '}') {
        fail(pos_, "expected ',' or '}'");
      }
    }
    if (!f.has_descr || !f.has_order || !f.has_shape) {
      fail(pos_, "header dict lacks descr, fortran_order or shape");
    }
    return f;
  }

 private:
  [[noreturn]] void fail(std::size_t at, const std::string& what) const {
    throw Error(ErrorCode::MalformedHeader, base_ + at,
                "malformed NPY header at byte " + std::to_string(base_ + at) + ": " + what);
  }
  char peek() const {
    if (pos_ >= text_.size()) fail(pos_, "unexpected end of header");
    return text_[pos_];
  }
  void expect(char c) {
    if (peek() != c) fail(pos_, std::string("expected '") + c + "'");
    ++pos_;
  }
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  std::string parse_string() {
    const char q = peek();
    if (q != '\'' && q != '"') fail(pos_, "expected string literal");
    ++pos_;
    std::string out;
    while (peek() != q) out += text_[pos_++];
    ++pos_;
    return out;
  }
  bool parse_bool() {
    if (text_.substr(pos_, 4) == "True") {
      pos_ += 4;
      return true;
    }
    if (text_.substr(pos_, 5) == "False") {
      pos_ += 5;
      return false;
    }
    fail(pos_, "expected True or False");
  }
  std::vector<std::size_t> parse_tuple() {
    expect('(');
    std::vector<std::size_t> dims;
    skip_ws();
    while (peek() != ')') {
      if (!std::isdigit(static_cast<unsigned char>(peek()))) fail(pos_, "expected extent");
      std::size_t v = 0;
      while (std::isdigit(static_cast<unsigned char>(peek()))) {
        v = v * 10 + static_cast<std::size_t>(text_[pos_++] - '0');
      }
      // numpy writes 2L on some Python 2 builds
      if (peek() == 'L') ++pos_;
      dims.push_back(v);
      skip_ws();
      if (peek() == ',') {
        ++pos_;
        skip_ws();
      } else if (peek() != ')') {
        fail(pos_, "expected ',' or ')'");
      }
    }
    ++pos_;
    return dims;
  }

  std::string_view text_;
  std::size_t base_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::IoFailure, "read failed: " + path.string());
  return bytes;
}

void write_bytes(std::span<const std::uint8_t> bytes, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoFailure, "write failed: " + path.string());
}

std::string shape_str(const std::vector<std::size_t>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

void require_rank(const ArrayFile& a, std::size_t rank, const std::string& role) {
  if (a.rank() != rank) {
    throw Error(ErrorCode::ShapeMismatch, role + ": expected rank " + std::to_string(rank) +
                                              ", got shape " + shape_str(a.shape()));
  }
}

template <class T>
Grid<T> grid_of(const ArrayFile& a, const std::string& role) {
  require_rank(a, 2, role);
  auto v = a.values<T>();
  return Grid<T>(static_cast<int>(a.shape()[0]), static_cast<int>(a.shape()[1]),
                 std::vector<T>(v.begin(), v.end()));
}

json hyperparams_json(const HyperParams& hp) {
  return json{{"q_percent", hp.q_percent}, {"alpha1", hp.alpha1},
              {"alpha2", hp.alpha2},       {"e_checkpoints", hp.e_checkpoints},
              {"epsilon", hp.epsilon},     {"d_hat", hp.d_hat},
              {"tau_cut", hp.tau_cut}};
}

HyperParams hyperparams_of(const json& j, HyperParams hp) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "hyperparams must be an object");
  hp.q_percent = j.value("q_percent", hp.q_percent);
  hp.alpha1 = j.value("alpha1", hp.alpha1);
  hp.alpha2 = j.value("alpha2", hp.alpha2);
  hp.e_checkpoints = j.value("e_checkpoints", hp.e_checkpoints);
  hp.epsilon = j.value("epsilon", hp.epsilon);
  hp.d_hat = j.value("d_hat", hp.d_hat);
  hp.tau_cut = j.value("tau_cut", hp.tau_cut);
  return hp;
}

json manifest_json(const RunManifest& m) {
  json j;
  j["image_id"] = m.image_id;
  j["features"] = m.features;
  j["image"] = m.image;
  j["prob_map"] = m.prob_map;
  j["masks"] = m.masks;
  j["superpixels"] = m.superpixels;
  j["hyperparams"] = hyperparams_json(m.hyperparams);
  if (!m.checkpoints.empty()) j["checkpoints"] = m.checkpoints;
  if (!m.outputs.empty()) j["outputs"] = m.outputs;
  return j;
}

RunManifest manifest_of(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "manifest entry must be an object");
  RunManifest m;
  m.base_dir = base_dir;
  try {
    m.image_id = j.at("image_id").get<std::string>();
    m.features = j.value("features", std::string{});
    m.image = j.value("image", std::string{});
    m.prob_map = j.value("prob_map", std::string{});
    m.masks = j.value("masks", std::vector<std::string>{});
    m.superpixels = j.value("superpixels", std::string{});
    m.checkpoints = j.value("checkpoints", std::vector<std::string>{});
    m.outputs = j.value("outputs", std::map<std::string, std::string>{});
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("manifest: ") + e.what());
  }
  if (m.image_id.empty()) throw Error(ErrorCode::InvalidArgument, "manifest: empty image_id");
  if (j.contains("hyperparams")) m.hyperparams = hyperparams_of(j["hyperparams"], {});
  return m;
}

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::InvalidArgument, what + ": " + e.what());
  }
}

}  // namespace

const char* to_string(DType dtype) {
  switch (dtype) {
    case DType::Float32: return "float32";
    case DType::UInt8: return "uint8";
    case DType::Int32: return "int32";
  }
  return "?";
}

ArrayFile::ArrayFile(std::vector<std::size_t> shape, Storage values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  const std::size_t stored = std::visit([](const auto& v) { return v.size(); }, values_);
  if (stored != element_count()) {
    throw Error(ErrorCode::ShapeMismatch, "shape " + shape_str(shape_) + " holds " +
                                              std::to_string(element_count()) +
                                              " elements, given " + std::to_string(stored));
  }
}

std::size_t ArrayFile::element_count() const {
  std::size_t n = 1;
  for (auto d : shape_) n *= d;
  return n;
}

std::vector<std::uint8_t> encode_npy(const ArrayFile& a) {
  std::string header = "{'descr': '";
  header += descr_of(a.dtype());
  header += "', 'fortran_order': False, 'shape': ";
  header += shape_literal(a.shape());
  header += ", }";
  const std::size_t unpadded = kNpyPreamble + header.size() + 1;
  const std::size_t total = (unpadded + kNpyAlign - 1) / kNpyAlign * kNpyAlign;
  header.append(total - unpadded, ' ');
  header += '\n';

  const std::size_t payload = a.element_count() * item_size(a.dtype());
  std::vector<std::uint8_t> out;
  out.reserve(total + payload);
  out.insert(out.end(), std::begin(kNpyMagic), std::end(kNpyMagic));
  out.push_back(1);
  out.push_back(0);
  const auto hlen = static_cast<std::uint16_t>(header.size());
  out.push_back(static_cast<std::uint8_t>(hlen & 0xff));
  out.push_back(static_cast<std::uint8_t>(hlen >> 8));
  out.insert(out.end(), header.begin(), header.end());
  std::visit(
      [&](const auto& v) {
        const auto* p = reinterpret_cast<const std::uint8_t*>(v.data());
        out.insert(out.end(), p, p + payload);
      },
      a.storage());
  return out;
}

ArrayFile decode_npy(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kNpyPreamble) {
    throw Error(ErrorCode::MalformedHeader, bytes.size(),
                "malformed NPY header at byte " + std::to_string(bytes.size()) +
                    ": file shorter than preamble");
  }
  for (std::size_t i = 0; i < 6; ++i) {
    if (bytes[i] != kNpyMagic[i]) {
      throw Error(ErrorCode::MalformedHeader, i,
                  "malformed NPY header at byte " + std::to_string(i) + ": bad magic");
    }
  }
  if (bytes[6] != 1 || bytes[7] != 0) {
    throw Error(ErrorCode::MalformedHeader, 6,
                "malformed NPY header at byte 6: only format version 1.0 is supported");
  }
  const std::size_t hlen = bytes[8] | (static_cast<std::size_t>(bytes[9]) << 8);
  if (bytes.size() < kNpyPreamble + hlen) {
    throw Error(ErrorCode::MalformedHeader, bytes.size(),
                "malformed NPY header at byte " + std::to_string(bytes.size()) +
                    ": header truncated");
  }
  std::string_view text(reinterpret_cast<const char*>(bytes.data() + kNpyPreamble), hlen);
  const auto fields = HeaderParser(text, kNpyPreamble).parse();

  DType dtype;
  if (fields.descr == "<f4") {
    dtype = DType::Float32;
  } else if (fields.descr == "|u1" || fields.descr == "<u1") {
    dtype = DType::UInt8;
  } else if (fields.descr == "<i4") {
    dtype = DType::Int32;
  } else {
    throw Error(ErrorCode::UnsupportedDtype, kNpyPreamble,
                "unsupported dtype '" + fields.descr + "' in header at byte " +
                    std::to_string(kNpyPreamble));
  }
  if (fields.fortran_order) {
    throw Error(ErrorCode::MalformedHeader, kNpyPreamble,
                "malformed NPY header at byte " + std::to_string(kNpyPreamble) +
                    ": fortran_order arrays are not supported");
  }

  std::size_t count = 1;
  for (auto d : fields.shape) count *= d;
  const std::size_t data_start = kNpyPreamble + hlen;
  const std::size_t need = count * item_size(dtype);
  const std::size_t have = bytes.size() - data_start;
  if (have < need) {
    throw Error(ErrorCode::TruncatedPayload, bytes.size(),
                "truncated payload at byte " + std::to_string(bytes.size()) + ": expected " +
                    std::to_string(need) + " payload bytes, found " + std::to_string(have));
  }
  const auto* src = bytes.data() + data_start;
  auto copy = [&](auto tag) {
    using T = decltype(tag);
    std::vector<T> v(count);
    if (need) std::memcpy(v.data(), src, need);
    return ArrayFile(fields.shape, ArrayFile::Storage(std::move(v)));
  };
  switch (dtype) {
    case DType::Float32: return copy(float{});
    case DType::UInt8: return copy(std::uint8_t{});
    case DType::Int32: return copy(std::int32_t{});
  }
  return {};
}

ArrayFile read_array(const std::filesystem::path& path) {
  const auto bytes = read_bytes(path);
  try {
    return decode_npy(bytes);
  } catch (const Error& e) {
    if (e.byte_offset()) {
      throw Error(e.code(), *e.byte_offset(), path.string() + ": " + e.what());
    }
    throw;
  }
}

void write_array(const ArrayFile& a, const std::filesystem::path& path) {
  write_bytes(encode_npy(a), path);
}

ArrayFile decode_ppm(std::span<const std::uint8_t> bytes) {
  std::size_t pos = 0;
  auto malformed = [&](const std::string& what) -> Error {
    return Error(ErrorCode::MalformedHeader, pos,
                 "malformed PPM header at byte " + std::to_string(pos) + ": " + what);
  };
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') {
    throw malformed("expected binary P6 magic");
  }
  pos = 2;
  auto skip_ws_and_comments = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_uint = [&](const char* what) {
    const std::size_t before = pos;
    skip_ws_and_comments();
    if (pos == before) throw malformed(std::string("expected whitespace before ") + what);
    if (pos >= bytes.size() || !std::isdigit(bytes[pos])) {
      throw malformed(std::string("expected ") + what);
    }
    std::uint64_t v = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      v = v * 10 + (bytes[pos++] - '0');
      if (v > (1u << 30)) throw malformed(std::string(what) + " too large");
    }
    return v;
  };
  const auto width = read_uint("width");
  const auto height = read_uint("height");
  const std::size_t maxval_pos = pos;
  const auto maxval = read_uint("maxval");
  if (maxval != 255) {
    throw Error(ErrorCode::UnsupportedMaxval, maxval_pos,
                "unsupported PPM maxval " + std::to_string(maxval) + " at byte " +
                    std::to_string(maxval_pos));
  }
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) {
    throw malformed("expected single whitespace before raster");
  }
  ++pos;
  const std::size_t need = static_cast<std::size_t>(width * height * 3);
  if (bytes.size() - pos < need) {
    throw Error(ErrorCode::TruncatedPayload, bytes.size(),
                "truncated PPM raster at byte " + std::to_string(bytes.size()));
  }
  std::vector<std::uint8_t> rgb(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                                bytes.begin() + static_cast<std::ptrdiff_t>(pos + need));
  return ArrayFile::from<std::uint8_t>({height, width, 3}, std::move(rgb));
}

ArrayFile read_image_ppm(const std::filesystem::path& path) {
  const auto bytes = read_bytes(path);
  try {
    return decode_ppm(bytes);
  } catch (const Error& e) {
    if (e.byte_offset()) throw Error(e.code(), *e.byte_offset(), path.string() + ": " + e.what());
    throw;
  }
}

void write_image_ppm(const ArrayFile& rgb, const std::filesystem::path& path) {
  if (rgb.rank() != 3 || rgb.shape()[2] != 3) {
    throw Error(ErrorCode::ShapeMismatch, "PPM output needs [H,W,3], got " + shape_str(rgb.shape()));
  }
  const auto px = rgb.values<std::uint8_t>();
  const std::string header = "P6\n" + std::to_string(rgb.shape()[1]) + " " +
                             std::to_string(rgb.shape()[0]) + "\n255\n";
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  bytes.insert(bytes.end(), px.begin(), px.end());
  write_bytes(bytes, path);
}

Grid<float> to_float_grid(const ArrayFile& a, const std::string& role) {
  return grid_of<float>(a, role);
}

Grid<double> to_double_grid(const ArrayFile& a, const std::string& role) {
  require_rank(a, 2, role);
  auto v = a.values<float>();
  return Grid<double>(static_cast<int>(a.shape()[0]), static_cast<int>(a.shape()[1]),
                      std::vector<double>(v.begin(), v.end()));
}

Grid<std::int32_t> to_label_grid(const ArrayFile& a, const std::string& role) {
  return grid_of<std::int32_t>(a, role);
}

Mask to_mask(const ArrayFile& a, const std::string& role) {
  auto m = grid_of<std::uint8_t>(a, role);
  for (auto v : m.values()) {
    if (v > 1) throw Error(ErrorCode::InvalidArgument, role + ": mask values must be 0 or 1");
  }
  return m;
}

std::vector<Mask> to_mask_stack(const ArrayFile& a, const std::string& role) {
  if (a.rank() == 2) return {to_mask(a, role)};
  require_rank(a, 3, role);
  const auto v = a.values<std::uint8_t>();
  const int rows = static_cast<int>(a.shape()[1]);
  const int cols = static_cast<int>(a.shape()[2]);
  const std::size_t plane = a.shape()[1] * a.shape()[2];
  std::vector<Mask> out;
  out.reserve(a.shape()[0]);
  for (std::size_t m = 0; m < a.shape()[0]; ++m) {
    std::vector<std::uint8_t> px(v.begin() + static_cast<std::ptrdiff_t>(m * plane),
                                 v.begin() + static_cast<std::ptrdiff_t>((m + 1) * plane));
    for (auto b : px) {
      if (b > 1) throw Error(ErrorCode::InvalidArgument, role + ": mask values must be 0 or 1");
    }
    out.emplace_back(rows, cols, std::move(px));
  }
  return out;
}

ArrayFile from_grid(const Grid<float>& g) {
  return ArrayFile::from<float>({std::size_t(g.rows()), std::size_t(g.cols())}, g.vector());
}

ArrayFile from_grid(const Grid<double>& g) {
  std::vector<float> v(g.values().begin(), g.values().end());
  return ArrayFile::from<float>({std::size_t(g.rows()), std::size_t(g.cols())}, std::move(v));
}

ArrayFile from_grid(const Grid<std::int32_t>& g) {
  return ArrayFile::from<std::int32_t>({std::size_t(g.rows()), std::size_t(g.cols())},
                                       g.vector());
}

ArrayFile from_grid(const Mask& g) {
  return ArrayFile::from<std::uint8_t>({std::size_t(g.rows()), std::size_t(g.cols())},
                                       g.vector());
}

ArrayFile from_mask_stack(std::span<const Mask> masks, int rows, int cols) {
  if (!masks.empty()) {
    rows = masks.front().rows();
    cols = masks.front().cols();
  }
  std::vector<std::uint8_t> v;
  v.reserve(masks.size() * std::size_t(rows) * std::size_t(cols));
  for (const auto& m : masks) {
    if (m.rows() != rows || m.cols() != cols) {
      throw Error(ErrorCode::ShapeMismatch, "mask stack entries differ in extent");
    }
    v.insert(v.end(), m.values().begin(), m.values().end());
  }
  return ArrayFile::from<std::uint8_t>({masks.size(), std::size_t(rows), std::size_t(cols)},
                                       std::move(v));
}

ArrayFile from_grid_stack(std::span<const Grid<double>> grids, int rows, int cols) {
  if (!grids.empty()) {
    rows = grids.front().rows();
    cols = grids.front().cols();
  }
  std::vector<float> v;
  v.reserve(grids.size() * std::size_t(rows) * std::size_t(cols));
  for (const auto& g : grids) {
    if (g.rows() != rows || g.cols() != cols) {
      throw Error(ErrorCode::ShapeMismatch, "grid stack entries differ in extent");
    }
    v.insert(v.end(), g.values().begin(), g.values().end());
  }
  return ArrayFile::from<float>({grids.size(), std::size_t(rows), std::size_t(cols)},
                                std::move(v));
}

RgbImage to_rgb_image(const ArrayFile& a) {
  if (a.rank() != 3 || a.shape()[2] != 3) {
    throw Error(ErrorCode::ShapeMismatch, "image must be uint8 [H,W,3], got " + shape_str(a.shape()));
  }
  const auto v = a.values<std::uint8_t>();
  return RgbImage{static_cast<int>(a.shape()[0]), static_cast<int>(a.shape()[1]),
                  std::vector<std::uint8_t>(v.begin(), v.end())};
}

ArrayFile from_rgb_image(const RgbImage& img) {
  return ArrayFile::from<std::uint8_t>(
      {std::size_t(img.height), std::size_t(img.width), 3}, img.rgb);
}

void HyperParams::validate() const {
  auto bad = [](const std::string& what) { throw Error(ErrorCode::InvalidArgument, what); };
  if (!(q_percent > 0.0 && q_percent <= 100.0)) bad("q_percent must lie in (0,100]");
  if (!(alpha1 > 0.0)) bad("alpha1 must be positive");
  if (!(alpha2 > 0.0)) bad("alpha2 must be positive");
  if (e_checkpoints < 2) bad("e_checkpoints must be at least 2");
  if (!(epsilon > 0.0 && epsilon < 1.0)) bad("epsilon must lie in (0,1)");
  if (!(d_hat > 0.0)) bad("d_hat must be positive");
  if (!std::isfinite(tau_cut)) bad("tau_cut must be finite");
}

std::filesystem::path RunManifest::resolve(const std::string& p) const {
  std::filesystem::path path(p);
  if (path.is_absolute() || base_dir.empty()) return path.lexically_normal();
  return (base_dir / path).lexically_normal();
}

std::vector<RunManifest> read_manifests(const std::filesystem::path& path) {
  const auto text = read_text(path);
  const auto j = parse_json(text, path.string());
  const auto base = std::filesystem::absolute(path).parent_path();
  std::vector<RunManifest> out;
  if (j.is_array()) {
    for (const auto& entry : j) out.push_back(manifest_of(entry, base));
  } else {
    out.push_back(manifest_of(j, base));
  }
  return out;
}

std::string manifest_to_json(const RunManifest& m) { return manifest_json(m).dump(2); }

RunManifest manifest_from_json(const std::string& text, const std::filesystem::path& base_dir) {
  return manifest_of(parse_json(text, "manifest"), base_dir);
}

void write_manifest(const RunManifest& m, const std::filesystem::path& path) {
  write_text(manifest_to_json(m), path);
}

std::string hyperparams_to_json(const HyperParams& hp) { return hyperparams_json(hp).dump(); }

HyperParams hyperparams_from_json(const std::string& text, HyperParams base) {
  return hyperparams_of(parse_json(text, "hyperparams"), base);
}

void write_text(const std::string& text, const std::filesystem::path& path) {
  std::string body = text;
  body += '\n';
  write_bytes(std::span(reinterpret_cast<const std::uint8_t*>(body.data()), body.size()), path);
}

std::string read_text(const std::filesystem::path& path) {
  const auto bytes = read_bytes(path);
  return std::string(bytes.begin(), bytes.end());
}

}  // namespace pseudoseg
