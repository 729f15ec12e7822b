#include "rasim/io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include "json.hpp"
#include "rasim/errors.hpp"

namespace rasim {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------- text files

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << content;
  if (!out) throw IoError("write failed: " + path.string());
}

// ----------------------------------------------------------------------- PFM

namespace {

struct FileHandle {
  FILE* fp = nullptr;
  explicit FileHandle(FILE* f) : fp(f) {}
  ~FileHandle() {
    if (fp) std::fclose(fp);
  }
  FileHandle(const FileHandle&) = delete;
  FileHandle& operator=(const FileHandle&) = delete;
};

void put_le32(float v, unsigned char* out) {
  const uint32_t bits = std::bit_cast<uint32_t>(v);
  out[0] = bits & 0xff;
  out[1] = (bits >> 8) & 0xff;
  out[2] = (bits >> 16) & 0xff;
  out[3] = (bits >> 24) & 0xff;
}

float get_float(const unsigned char* in, bool little_endian) {
  uint32_t bits;
  if (little_endian) {
    bits = uint32_t(in[0]) | uint32_t(in[1]) << 8 | uint32_t(in[2]) << 16 |
           uint32_t(in[3]) << 24;
  } else {
    bits = uint32_t(in[3]) | uint32_t(in[2]) << 8 | uint32_t(in[1]) << 16 |
           uint32_t(in[0]) << 24;
  }
  return std::bit_cast<float>(bits);
}

// Reads one whitespace-delimited header token.
std::string pfm_token(FILE* fp, const fs::path& path) {
  std::string tok;
  int c = std::fgetc(fp);
  while (c != EOF && std::isspace(c)) c = std::fgetc(fp);
  while (c != EOF && !std::isspace(c)) {
    tok.push_back(static_cast<char>(c));
    c = std::fgetc(fp);
  }
  if (tok.empty()) {
    throw IoError("malformed PFM header in " + path.string());
  }
  return tok;
}

FloatMap read_pfm_map(const fs::path& path) {
  FileHandle f(std::fopen(path.string().c_str(), "rb"));
  if (!f.fp) throw IoError("cannot open " + path.string());

  const std::string magic = pfm_token(f.fp, path);
  if (magic == "PF") {
    throw IoError("PFM " + path.string() +
                  " is a color map; expected grayscale \"Pf\"");
  }
  if (magic != "Pf") {
    throw IoError("not a PFM file (bad magic \"" + magic + "\"): " +
                  path.string());
  }
  int width = 0, height = 0;
  double scale = 0.0;
  try {
    width = std::stoi(pfm_token(f.fp, path));
    height = std::stoi(pfm_token(f.fp, path));
    scale = std::stod(pfm_token(f.fp, path));
  } catch (const std::exception&) {
    throw IoError("malformed PFM header in " + path.string());
  }
  if (width <= 0 || height <= 0) {
    throw IoError("PFM " + path.string() + " has invalid dimensions");
  }
  if (scale == 0.0) {
    throw IoError("PFM " + path.string() + " has zero scale");
  }
  const bool little_endian = scale < 0.0;

  FloatMap map(width, height);
  std::vector<unsigned char> row(static_cast<size_t>(width) * 4);
  // Rows are stored bottom-to-top.
  for (int y = height - 1; y >= 0; --y) {
    if (std::fread(row.data(), 1, row.size(), f.fp) != row.size()) {
      throw IoError("truncated PFM payload in " + path.string());
    }
    for (int x = 0; x < width; ++x) {
      const float v = get_float(&row[static_cast<size_t>(x) * 4], little_endian);
      if (std::isfinite(v)) {
        map.set(x, y, v);
      }
    }
  }
  return map;
}

}  // namespace

void write_pfm(const FloatMap& map, const fs::path& path) {
  if (map.width <= 0 || map.height <= 0) {
    throw ValidationError("write_pfm: empty map");
  }
  FileHandle f(std::fopen(path.string().c_str(), "wb"));
  if (!f.fp) throw IoError("cannot open " + path.string() + " for writing");

  std::fprintf(f.fp, "Pf\n%d %d\n-1.0\n", map.width, map.height);
  std::vector<unsigned char> row(static_cast<size_t>(map.width) * 4);
  for (int y = map.height - 1; y >= 0; --y) {
    for (int x = 0; x < map.width; ++x) {
      put_le32(map.values[map.index(x, y)], &row[static_cast<size_t>(x) * 4]);
    }
    if (std::fwrite(row.data(), 1, row.size(), f.fp) != row.size()) {
      throw IoError("write failed: " + path.string());
    }
  }
}

DisparityMap read_pfm_disparity(const fs::path& path) {
  FloatMap raw = read_pfm_map(path);
  DisparityMap out(raw.width, raw.height);
  static_cast<FloatMap&>(out) = std::move(raw);
  return out;
}

DepthMap read_pfm_depth(const fs::path& path) {
  FloatMap raw = read_pfm_map(path);
  DepthMap out(raw.width, raw.height);
  static_cast<FloatMap&>(out) = std::move(raw);
  return out;
}

// ----------------------------------------------------------------------- PNG

namespace {

struct PngWriter {
  FILE* fp = nullptr;
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngWriter() {
    if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
    if (fp) std::fclose(fp);
  }
};

struct PngReader {
  FILE* fp = nullptr;
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngReader() {
    if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    if (fp) std::fclose(fp);
  }
};

void write_png_rows(const fs::path& path, int width, int height, int bit_depth,
                    int color_type, std::vector<png_bytep>& rows) {
  PngWriter w;
  w.fp = std::fopen(path.string().c_str(), "wb");
  if (!w.fp) throw IoError("cannot open " + path.string() + " for writing");
  w.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr,
                                  nullptr);
  if (!w.png) throw IoError("libpng init failed");
  w.info = png_create_info_struct(w.png);
  if (!w.info) throw IoError("libpng init failed");
  if (setjmp(png_jmpbuf(w.png))) {
    throw IoError("PNG write failed: " + path.string());
  }
  png_init_io(w.png, w.fp);
  png_set_IHDR(w.png, w.info, width, height, bit_depth, color_type,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(w.png, w.info);
  png_write_image(w.png, rows.data());
  png_write_end(w.png, nullptr);
}

struct PngData {
  int width = 0;
  int height = 0;
  int bit_depth = 0;
  int color_type = 0;
  std::vector<std::vector<unsigned char>> rows;
};

PngData read_png_rows(const fs::path& path) {
  PngReader r;
  r.fp = std::fopen(path.string().c_str(), "rb");
  if (!r.fp) throw IoError("cannot open " + path.string());
  r.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr,
                                 nullptr);
  if (!r.png) throw IoError("libpng init failed");
  r.info = png_create_info_struct(r.png);
  if (!r.info) throw IoError("libpng init failed");
  if (setjmp(png_jmpbuf(r.png))) {
    throw IoError("malformed PNG: " + path.string());
  }
  png_init_io(r.png, r.fp);
  png_read_info(r.png, r.info);

  PngData data;
  data.width = static_cast<int>(png_get_image_width(r.png, r.info));
  data.height = static_cast<int>(png_get_image_height(r.png, r.info));
  data.bit_depth = png_get_bit_depth(r.png, r.info);
  data.color_type = png_get_color_type(r.png, r.info);

  const size_t row_bytes = png_get_rowbytes(r.png, r.info);
  data.rows.assign(static_cast<size_t>(data.height),
                   std::vector<unsigned char>(row_bytes));
  std::vector<png_bytep> ptrs(data.rows.size());
  for (size_t i = 0; i < data.rows.size(); ++i) ptrs[i] = data.rows[i].data();
  png_read_image(r.png, ptrs.data());
  png_read_end(r.png, nullptr);
  return data;
}

}  // namespace

void write_depth_png16(const DepthMap& z, const fs::path& path,
                       double units_per_meter) {
  if (!(units_per_meter > 0.0)) {
    throw ValidationError("write_depth_png16: units_per_meter must be > 0");
  }
  std::vector<std::vector<unsigned char>> rows(
      static_cast<size_t>(z.height),
      std::vector<unsigned char>(static_cast<size_t>(z.width) * 2, 0));
  for (int y = 0; y < z.height; ++y) {
    for (int x = 0; x < z.width; ++x) {
      if (!z.valid(x, y)) continue;
      const long code = std::lround(z.value(x, y) * units_per_meter);
      if (code < 1 || code > 65535) {
        throw ValidationError(
            "write_depth_png16: depth " + std::to_string(z.value(x, y)) +
            " m at pixel (" + std::to_string(x) + ", " + std::to_string(y) +
            ") not encodable at " + std::to_string(units_per_meter) +
            " units/m");
      }
      rows[y][static_cast<size_t>(x) * 2] =
          static_cast<unsigned char>((code >> 8) & 0xff);  // big-endian
      rows[y][static_cast<size_t>(x) * 2 + 1] =
          static_cast<unsigned char>(code & 0xff);
    }
  }
  std::vector<png_bytep> ptrs(rows.size());
  for (size_t i = 0; i < rows.size(); ++i) ptrs[i] = rows[i].data();
  write_png_rows(path, z.width, z.height, 16, PNG_COLOR_TYPE_GRAY, ptrs);
}

DepthMap read_depth_png16(const fs::path& path, double units_per_meter) {
  if (!(units_per_meter > 0.0)) {
    throw ValidationError("read_depth_png16: units_per_meter must be > 0");
  }
  const PngData data = read_png_rows(path);
  if (data.bit_depth != 16 || data.color_type != PNG_COLOR_TYPE_GRAY) {
    throw IoError("depth PNG " + path.string() +
                  " must be 16-bit grayscale, got depth " +
                  std::to_string(data.bit_depth));
  }
  DepthMap z(data.width, data.height);
  for (int y = 0; y < data.height; ++y) {
    for (int x = 0; x < data.width; ++x) {
      const unsigned code = unsigned(data.rows[y][size_t(x) * 2]) << 8 |
                            data.rows[y][size_t(x) * 2 + 1];
      if (code == 0) continue;
      z.set(x, y, static_cast<float>(code / units_per_meter));
    }
  }
  return z;
}

namespace {

unsigned char to_byte(float v) {
  return static_cast<unsigned char>(
      std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

}  // namespace

void write_image_png(const ImageGray& img, const fs::path& path) {
  std::vector<std::vector<unsigned char>> rows(
      static_cast<size_t>(img.height),
      std::vector<unsigned char>(static_cast<size_t>(img.width), 0));
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) rows[y][x] = to_byte(img.at(x, y));
  }
  std::vector<png_bytep> ptrs(rows.size());
  for (size_t i = 0; i < rows.size(); ++i) ptrs[i] = rows[i].data();
  write_png_rows(path, img.width, img.height, 8, PNG_COLOR_TYPE_GRAY, ptrs);
}

void write_image_png(const ImageRGB& img, const fs::path& path) {
  std::vector<std::vector<unsigned char>> rows(
      static_cast<size_t>(img.height),
      std::vector<unsigned char>(static_cast<size_t>(img.width) * 3, 0));
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < 3; ++c) {
        rows[y][static_cast<size_t>(x) * 3 + c] = to_byte(img.at(x, y, c));
      }
    }
  }
  std::vector<png_bytep> ptrs(rows.size());
  for (size_t i = 0; i < rows.size(); ++i) ptrs[i] = rows[i].data();
  write_png_rows(path, img.width, img.height, 8, PNG_COLOR_TYPE_RGB, ptrs);
}

std::variant<ImageGray, ImageRGB> read_image_png(const fs::path& path) {
  const PngData data = read_png_rows(path);
  if (data.bit_depth != 8) {
    throw IoError("image PNG " + path.string() + " has unsupported bit depth " +
                  std::to_string(data.bit_depth) + " (expected 8)");
  }
  if (data.color_type == PNG_COLOR_TYPE_GRAY) {
    ImageGray img(data.width, data.height);
    for (int y = 0; y < data.height; ++y) {
      for (int x = 0; x < data.width; ++x) {
        img.at(x, y) = data.rows[y][x] / 255.0f;
      }
    }
    return img;
  }
  if (data.color_type == PNG_COLOR_TYPE_RGB) {
    ImageRGB img(data.width, data.height);
    for (int y = 0; y < data.height; ++y) {
      for (int x = 0; x < data.width; ++x) {
        for (int c = 0; c < 3; ++c) {
          img.at(x, y, c) = data.rows[y][static_cast<size_t>(x) * 3 + c] / 255.0f;
        }
      }
    }
    return img;
  }
  throw IoError("image PNG " + path.string() +
                " has unsupported color type (expected gray or RGB)");
}

// ---------------------------------------------------------------------- JSON

namespace {

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("invalid JSON: ") + e.what());
  }
}

void check_keys(const json& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) {
    throw ValidationError(path + ": expected an object");
  }
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed) {
      if (it.key() == k) {
        ok = true;
        break;
      }
    }
    if (!ok) {
      throw ValidationError("unknown key \"" + it.key() + "\" at " + path);
    }
  }
}

const json* find(const json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

double req_num(const json& obj, const std::string& path, const char* key) {
  const json* v = find(obj, key);
  if (!v) throw ValidationError(path + "." + key + ": missing required field");
  if (!v->is_number()) {
    throw ValidationError(path + "." + key + ": expected a number");
  }
  return v->get<double>();
}

double num_or(const json& obj, const std::string& path, const char* key,
              double def) {
  const json* v = find(obj, key);
  if (!v) return def;
  if (!v->is_number()) {
    throw ValidationError(path + "." + key + ": expected a number");
  }
  return v->get<double>();
}

int int_or(const json& obj, const std::string& path, const char* key, int def) {
  const json* v = find(obj, key);
  if (!v) return def;
  if (!v->is_number_integer()) {
    throw ValidationError(path + "." + key + ": expected an integer");
  }
  return v->get<int>();
}

uint64_t u64_or(const json& obj, const std::string& path, const char* key,
                uint64_t def) {
  const json* v = find(obj, key);
  if (!v) return def;
  if (!v->is_number_integer() ||
      (v->is_number_integer() && !v->is_number_unsigned() &&
       v->get<int64_t>() < 0)) {
    throw ValidationError(path + "." + key +
                          ": expected a non-negative integer");
  }
  return v->get<uint64_t>();
}

bool bool_or(const json& obj, const std::string& path, const char* key,
             bool def) {
  const json* v = find(obj, key);
  if (!v) return def;
  if (!v->is_boolean()) {
    throw ValidationError(path + "." + key + ": expected a boolean");
  }
  return v->get<bool>();
}

std::string req_str(const json& obj, const std::string& path, const char* key) {
  const json* v = find(obj, key);
  if (!v) throw ValidationError(path + "." + key + ": missing required field");
  if (!v->is_string()) {
    throw ValidationError(path + "." + key + ": expected a string");
  }
  return v->get<std::string>();
}

std::vector<double> num_array(const json& v, const std::string& where,
                              size_t n) {
  if (!v.is_array() || v.size() != n) {
    throw ValidationError(where + ": expected an array of " +
                          std::to_string(n) + " numbers");
  }
  std::vector<double> out;
  out.reserve(n);
  for (const auto& e : v) {
    if (!e.is_number()) {
      throw ValidationError(where + ": expected an array of numbers");
    }
    out.push_back(e.get<double>());
  }
  return out;
}

Vec3 vec3_or(const json& obj, const std::string& path, const char* key,
             const Vec3& def) {
  const json* v = find(obj, key);
  if (!v) return def;
  const auto a = num_array(*v, path + "." + std::string(key), 3);
  return Vec3(a[0], a[1], a[2]);
}

Color color_or(const json& obj, const std::string& path, const char* key,
               const Color& def) {
  const json* v = find(obj, key);
  if (!v) return def;
  const auto a = num_array(*v, path + "." + std::string(key), 3);
  return Color{static_cast<float>(a[0]), static_cast<float>(a[1]),
               static_cast<float>(a[2])};
}

Texture parse_texture(const json* v, const std::string& path) {
  Texture tex;
  if (!v) return tex;  // default flat gray
  const std::string type = req_str(*v, path, "type");
  if (type == "flat") {
    check_keys(*v, path, {"type", "color"});
    tex.kind = Texture::Kind::Flat;
    tex.color_a = color_or(*v, path, "color", tex.color_a);
  } else if (type == "checker" || type == "noise") {
    tex.kind = type == "checker" ? Texture::Kind::Checker : Texture::Kind::Noise;
    if (type == "checker") {
      check_keys(*v, path, {"type", "color_a", "color_b", "scale"});
    } else {
      check_keys(*v, path, {"type", "color_a", "color_b", "scale", "seed"});
      tex.seed = u64_or(*v, path, "seed", 0);
    }
    tex.color_a = color_or(*v, path, "color_a", tex.color_a);
    tex.color_b = color_or(*v, path, "color_b", tex.color_b);
    tex.scale = num_or(*v, path, "scale", tex.scale);
    if (!(tex.scale > 0.0)) {
      throw ValidationError(path + ".scale: must be > 0, got " +
                            std::to_string(tex.scale));
    }
  } else {
    throw ValidationError(path + ".type: unknown texture type \"" + type +
                          "\"");
  }
  return tex;
}

Primitive parse_object(const json& v, const std::string& path) {
  const std::string type = req_str(v, path, "type");
  const Texture tex = parse_texture(find(v, "texture"), path + ".texture");
  if (type == "plane") {
    check_keys(v, path, {"type", "point", "normal", "extent", "texture"});
    const Vec3 point = vec3_or(v, path, "point", Vec3(0, 0, 1));
    const Vec3 normal = vec3_or(v, path, "normal", Vec3(0, 0, -1));
    std::optional<std::pair<double, double>> extent;
    if (const json* e = find(v, "extent")) {
      const auto a = num_array(*e, path + ".extent", 2);
      if (!(a[0] > 0.0) || !(a[1] > 0.0)) {
        throw ValidationError(path + ".extent: must be > 0");
      }
      extent = std::make_pair(a[0] * 0.5, a[1] * 0.5);  // stored as half-sizes
    }
    return Primitive::make_plane(point, normal, extent, tex);
  }
  if (type == "sphere") {
    check_keys(v, path, {"type", "center", "radius", "texture"});
    const Vec3 center = vec3_or(v, path, "center", Vec3(0, 0, 1));
    const double radius = req_num(v, path, "radius");
    if (!(radius > 0.0)) {
      throw ValidationError(path + ".radius: must be > 0, got " +
                            std::to_string(radius));
    }
    return Primitive::make_sphere(center, radius, tex);
  }
  throw ValidationError(path + ".type: unknown object type \"" + type + "\"");
}

Pose parse_pose(const json* v, const std::string& path) {
  Pose pose;
  if (!v) return pose;
  check_keys(*v, path, {"position", "rotation"});
  pose.position = vec3_or(*v, path, "position", Vec3::Zero());
  if (const json* r = find(*v, "rotation")) {
    check_keys(*r, path + ".rotation", {"axis", "angle_deg"});
    const Vec3 axis = vec3_or(*r, path + ".rotation", "axis", Vec3(0, 0, 1));
    const double deg = num_or(*r, path + ".rotation", "angle_deg", 0.0);
    if (!(axis.norm() > 0.0)) {
      throw ValidationError(path + ".rotation.axis: must be nonzero");
    }
    pose = Pose::from_axis_angle(axis, deg * M_PI / 180.0, pose.position);
  }
  return pose;
}

Mat3 parse_mat3(const json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 3) {
    throw ValidationError(where + ": expected a 3x3 matrix (3 rows)");
  }
  Mat3 m;
  for (int r = 0; r < 3; ++r) {
    const auto row = num_array(v[r], where + "[" + std::to_string(r) + "]", 3);
    for (int c = 0; c < 3; ++c) m(r, c) = row[c];
  }
  return m;
}

}  // namespace

SceneSpec parse_scene_spec(const std::string& json_text) {
  const json j = parse_json(json_text);
  check_keys(j, "scene", {"objects", "background", "illumination"});

  SceneSpec scene;
  if (const json* objs = find(j, "objects")) {
    if (!objs->is_array()) {
      throw ValidationError("scene.objects: expected an array");
    }
    for (size_t i = 0; i < objs->size(); ++i) {
      scene.objects.push_back(
          parse_object((*objs)[i], "objects[" + std::to_string(i) + "]"));
    }
  }
  if (const json* bg = find(j, "background")) {
    check_keys(*bg, "background", {"point", "normal", "texture"});
    scene.background = Primitive::make_plane(
        vec3_or(*bg, "background", "point", Vec3(0, 0, 5)),
        vec3_or(*bg, "background", "normal", Vec3(0, 0, -1)), std::nullopt,
        parse_texture(find(*bg, "texture"), "background.texture"));
  }
  if (const json* il = find(j, "illumination")) {
    check_keys(*il, "illumination",
               {"ambient", "ir_ambient", "ir_intensity_scale"});
    scene.illumination.ambient =
        num_or(*il, "illumination", "ambient", scene.illumination.ambient);
    scene.illumination.ir_ambient = num_or(*il, "illumination", "ir_ambient",
                                           scene.illumination.ir_ambient);
    scene.illumination.ir_intensity_scale =
        num_or(*il, "illumination", "ir_intensity_scale",
               scene.illumination.ir_intensity_scale);
  }
  scene.validate();
  return scene;
}

MatchConfig parse_match_config(const std::string& json_text) {
  const json j = parse_json(json_text);
  check_keys(j, "config", {"census_window", "d_max", "sgm", "refine", "depth"});

  MatchConfig cfg;
  if (const json* w = find(j, "census_window")) {
    const auto a = num_array(*w, "config.census_window", 2);
    cfg.census_win_w = static_cast<int>(a[0]);
    cfg.census_win_h = static_cast<int>(a[1]);
  }
  cfg.d_max = int_or(j, "config", "d_max", cfg.d_max);
  if (const json* s = find(j, "sgm")) {
    check_keys(*s, "config.sgm", {"p1", "p2", "paths", "uniqueness_ratio"});
    cfg.sgm.p1 = int_or(*s, "config.sgm", "p1", cfg.sgm.p1);
    cfg.sgm.p2 = int_or(*s, "config.sgm", "p2", cfg.sgm.p2);
    cfg.sgm.paths = int_or(*s, "config.sgm", "paths", cfg.sgm.paths);
    cfg.sgm.uniqueness_ratio =
        num_or(*s, "config.sgm", "uniqueness_ratio", cfg.sgm.uniqueness_ratio);
  }
  if (const json* r = find(j, "refine")) {
    check_keys(*r, "config.refine",
               {"lr_threshold", "median_window", "speckle_max_size",
                "speckle_diff", "median_before_consistency"});
    cfg.refine.lr_threshold =
        num_or(*r, "config.refine", "lr_threshold", cfg.refine.lr_threshold);
    cfg.refine.median_window =
        int_or(*r, "config.refine", "median_window", cfg.refine.median_window);
    cfg.refine.speckle_max_size = int_or(*r, "config.refine", "speckle_max_size",
                                         cfg.refine.speckle_max_size);
    cfg.refine.speckle_diff =
        num_or(*r, "config.refine", "speckle_diff", cfg.refine.speckle_diff);
    cfg.refine.median_before_consistency =
        bool_or(*r, "config.refine", "median_before_consistency",
                cfg.refine.median_before_consistency);
  }
  if (const json* d = find(j, "depth")) {
    check_keys(*d, "config.depth", {"epsilon", "max_range_m"});
    cfg.depth.epsilon = num_or(*d, "config.depth", "epsilon", cfg.depth.epsilon);
    cfg.depth.max_range_m =
        num_or(*d, "config.depth", "max_range_m", cfg.depth.max_range_m);
  }
  cfg.validate();
  return cfg;
}

SensorSpec parse_rig(const std::string& json_text) {
  const json j = parse_json(json_text);
  check_keys(j, "rig",
             {"baseline_m", "focal_px", "image_size", "principal_point",
              "projector"});

  const double baseline = req_num(j, "rig", "baseline_m");
  const double focal = req_num(j, "rig", "focal_px");
  const json* size = find(j, "image_size");
  if (!size) {
    throw ValidationError("rig.image_size: missing required field");
  }
  const auto wh = num_array(*size, "rig.image_size", 2);
  const int w = static_cast<int>(wh[0]);
  const int h = static_cast<int>(wh[1]);

  SensorSpec sensor;
  if (const json* pp = find(j, "principal_point")) {
    const auto p = num_array(*pp, "rig.principal_point", 2);
    sensor.rig = StereoRig::make(baseline, focal, w, h, p[0], p[1]);
  } else {
    sensor.rig = StereoRig::make(baseline, focal, w, h);
  }
  if (const json* proj = find(j, "projector")) {
    check_keys(*proj, "rig.projector", {"dot_density", "seed", "intensity"});
    IrProjectorSpec p;
    p.dot_density = num_or(*proj, "rig.projector", "dot_density", p.dot_density);
    p.seed = u64_or(*proj, "rig.projector", "seed", p.seed);
    p.intensity = num_or(*proj, "rig.projector", "intensity", p.intensity);
    p.validate();
    sensor.projector = p;
  }
  return sensor;
}

SequenceSpec parse_sequence_spec(const std::string& json_text) {
  const json j = parse_json(json_text);
  check_keys(j, "sequence", {"frame_count", "keyframes"});

  SequenceSpec seq;
  seq.frame_count = int_or(j, "sequence", "frame_count", 1);
  if (const json* kfs = find(j, "keyframes")) {
    if (!kfs->is_array()) {
      throw ValidationError("sequence.keyframes: expected an array");
    }
    for (size_t i = 0; i < kfs->size(); ++i) {
      const std::string path = "keyframes[" + std::to_string(i) + "]";
      const json& kf = (*kfs)[i];
      check_keys(kf, path, {"frame", "camera", "objects"});
      Keyframe out;
      out.frame = int_or(kf, path, "frame", 0);
      out.camera = parse_pose(find(kf, "camera"), path + ".camera");
      if (const json* objs = find(kf, "objects")) {
        if (!objs->is_array()) {
          throw ValidationError(path + ".objects: expected an array");
        }
        for (size_t o = 0; o < objs->size(); ++o) {
          out.objects.push_back(parse_pose(
              &(*objs)[o], path + ".objects[" + std::to_string(o) + "]"));
        }
      }
      seq.keyframes.push_back(std::move(out));
    }
  }
  seq.validate();
  return seq;
}

std::vector<PoseEvalCase> parse_pose_samples(const std::string& json_text) {
  const json j = parse_json(json_text);
  check_keys(j, "poses", {"samples"});
  const json* samples = find(j, "samples");
  if (!samples || !samples->is_array()) {
    throw ValidationError("poses.samples: expected an array");
  }

  std::vector<PoseEvalCase> out;
  for (size_t i = 0; i < samples->size(); ++i) {
    const std::string path = "samples[" + std::to_string(i) + "]";
    const json& s = (*samples)[i];
    check_keys(s, path,
               {"rotation", "translation", "rotation_est", "translation_est",
                "model_points", "diameter", "symmetric"});
    PoseEvalCase c;
    const json* rot = find(s, "rotation");
    const json* rot_est = find(s, "rotation_est");
    if (!rot || !rot_est) {
      throw ValidationError(path + ": rotation and rotation_est are required");
    }
    c.gt.rotation = parse_mat3(*rot, path + ".rotation");
    c.est.rotation = parse_mat3(*rot_est, path + ".rotation_est");
    c.gt.translation = vec3_or(s, path, "translation", Vec3::Zero());
    c.est.translation = vec3_or(s, path, "translation_est", Vec3::Zero());
    const json* pts = find(s, "model_points");
    if (!pts || !pts->is_array() || pts->empty()) {
      throw ValidationError(path + ".model_points: expected a non-empty array");
    }
    for (size_t p = 0; p < pts->size(); ++p) {
      const auto a = num_array(
          (*pts)[p], path + ".model_points[" + std::to_string(p) + "]", 3);
      c.gt.model_points.emplace_back(a[0], a[1], a[2]);
    }
    c.gt.diameter = req_num(s, path, "diameter");
    c.gt.symmetric = bool_or(s, path, "symmetric", false);
    try {
      c.gt.validate();
      c.est.validate();
    } catch (const ValidationError& e) {
      throw ValidationError(path + ": " + e.what());
    }
    out.push_back(std::move(c));
  }
  return out;
}

SceneSpec load_scene_spec(const fs::path& path) {
  return parse_scene_spec(read_text_file(path));
}
MatchConfig load_match_config(const fs::path& path) {
  return parse_match_config(read_text_file(path));
}
SensorSpec load_rig(const fs::path& path) {
  return parse_rig(read_text_file(path));
}
SequenceSpec load_sequence_spec(const fs::path& path) {
  return parse_sequence_spec(read_text_file(path));
}
std::vector<PoseEvalCase> load_pose_samples(const fs::path& path) {
  return parse_pose_samples(read_text_file(path));
}

// ------------------------------------------------------------------ manifest

namespace {

json rig_json(const SensorSpec& sensor) {
  json r;
  r["baseline_m"] = sensor.rig.baseline_m;
  r["focal_px"] = sensor.rig.focal_px;
  r["image_size"] = {sensor.rig.width, sensor.rig.height};
  r["principal_point"] = {sensor.rig.ppx, sensor.rig.ppy};
  if (sensor.projector) {
    r["projector"] = {{"dot_density", sensor.projector->dot_density},
                      {"seed", sensor.projector->seed},
                      {"intensity", sensor.projector->intensity}};
  }
  return r;
}

std::string mode_name(RenderMode mode) {
  return mode == RenderMode::IR ? "ir" : "rgb";
}

RenderMode mode_from_name(const std::string& name, const std::string& where) {
  if (name == "ir") return RenderMode::IR;
  if (name == "rgb") return RenderMode::RGB;
  throw ValidationError(where + ": unknown mode \"" + name + "\"");
}

}  // namespace

std::string rig_to_json(const SensorSpec& sensor) {
  return rig_json(sensor).dump(2) + "\n";
}

void write_manifest(const DatasetManifest& manifest, const fs::path& path) {
  json j;
  j["version"] = manifest.version;
  j["rig"] = rig_json(manifest.sensor);
  if (!manifest.scene_spec.empty()) j["scene_spec"] = manifest.scene_spec;
  if (!manifest.sequence_spec.empty()) {
    j["sequence_spec"] = manifest.sequence_spec;
  }
  j["mode_threshold_m"] = manifest.mode_threshold_m;
  j["seed"] = manifest.seed;
  json frames = json::array();
  for (const auto& f : manifest.frames) {
    json e;
    e["frame_index"] = f.frame_index;
    e["mode"] = mode_name(f.mode);
    e["left"] = f.left;
    e["right"] = f.right;
    e["gt_depth"] = f.gt_depth;
    if (!f.sim_depth.empty()) e["sim_depth"] = f.sim_depth;
    if (!f.disparity.empty()) e["disparity"] = f.disparity;
    frames.push_back(std::move(e));
  }
  j["frames"] = std::move(frames);

  const fs::path dir = path.parent_path();
  for (const auto& f : manifest.frames) {
    for (const std::string& rel :
         {f.left, f.right, f.gt_depth, f.sim_depth, f.disparity}) {
      if (!rel.empty() && !fs::exists(dir / rel)) {
        throw IoError("manifest references missing file: " +
                      (dir / rel).string());
      }
    }
  }
  write_text_file(path, j.dump(2) + "\n");
}

DatasetManifest read_manifest(const fs::path& path) {
  const json j = parse_json(read_text_file(path));
  check_keys(j, "manifest",
             {"version", "rig", "scene_spec", "sequence_spec",
              "mode_threshold_m", "seed", "frames"});
  DatasetManifest m;
  m.version = req_str(j, "manifest", "version");
  if (m.version != "1") {
    throw ValidationError("manifest.version: expected \"1\", got \"" +
                          m.version + "\"");
  }
  const json* rig = find(j, "rig");
  if (!rig) throw ValidationError("manifest.rig: missing required field");
  m.sensor = parse_rig(rig->dump());
  if (const json* s = find(j, "scene_spec")) m.scene_spec = s->get<std::string>();
  if (const json* s = find(j, "sequence_spec")) {
    m.sequence_spec = s->get<std::string>();
  }
  m.mode_threshold_m = num_or(j, "manifest", "mode_threshold_m", 2.0);
  m.seed = u64_or(j, "manifest", "seed", 0);

  const json* frames = find(j, "frames");
  if (!frames || !frames->is_array()) {
    throw ValidationError("manifest.frames: expected an array");
  }
  const fs::path dir = path.parent_path();
  for (size_t i = 0; i < frames->size(); ++i) {
    const std::string where = "frames[" + std::to_string(i) + "]";
    const json& f = (*frames)[i];
    check_keys(f, where,
               {"frame_index", "mode", "left", "right", "gt_depth", "sim_depth",
                "disparity"});
    FrameEntry e;
    e.frame_index = int_or(f, where, "frame_index", 0);
    e.mode = mode_from_name(req_str(f, where, "mode"), where + ".mode");
    e.left = req_str(f, where, "left");
    e.right = req_str(f, where, "right");
    e.gt_depth = req_str(f, where, "gt_depth");
    if (find(f, "sim_depth")) e.sim_depth = req_str(f, where, "sim_depth");
    if (find(f, "disparity")) e.disparity = req_str(f, where, "disparity");
    for (const std::string& rel :
         {e.left, e.right, e.gt_depth, e.sim_depth, e.disparity}) {
      if (!rel.empty() && !fs::exists(dir / rel)) {
        throw IoError("manifest references missing file: " +
                      (dir / rel).string());
      }
    }
    m.frames.push_back(std::move(e));
  }
  return m;
}

// ------------------------------------------------------------------- reports

std::string depth_metrics_to_json(const DepthMetricsReport& report) {
  json j;
  j["rmse"] = report.rmse;
  j["rel"] = report.rel;
  j["mae"] = report.mae;
  j["delta_105"] = report.delta_105;
  j["delta_110"] = report.delta_110;
  j["delta_125"] = report.delta_125;
  j["n_evaluated"] = report.n_evaluated;
  return j.dump(2) + "\n";
}

std::string pose_report_to_json(double add_01d, double auc_add,
                                double auc_adds, long n_samples) {
  json j;
  j["add_01d"] = add_01d;
  j["auc_add"] = auc_add;
  j["auc_adds"] = auc_adds;
  j["n_samples"] = n_samples;
  return j.dump(2) + "\n";
}

}  // namespace rasim
