#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>

#include "ctm/error.hpp"
#include "ctm/io.hpp"

namespace ctm {

namespace {

static_assert(std::endian::native == std::endian::little, "binary PLY support assumes a little-endian host");

enum class Scalar { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

std::optional<Scalar> parse_scalar(std::string_view name) {
  if (name == "char" || name == "int8") return Scalar::Int8;
  if (name == "uchar" || name == "uint8") return Scalar::UInt8;
  if (name == "short" || name == "int16") return Scalar::Int16;
  if (name == "ushort" || name == "uint16") return Scalar::UInt16;
  if (name == "int" || name == "int32") return Scalar::Int32;
  if (name == "uint" || name == "uint32") return Scalar::UInt32;
  if (name == "float" || name == "float32") return Scalar::Float32;
  if (name == "double" || name == "float64") return Scalar::Float64;
  return std::nullopt;
}

std::size_t scalar_size(Scalar s) {
  switch (s) {
    case Scalar::Int8:
    case Scalar::UInt8: return 1;
    case Scalar::Int16:
    case Scalar::UInt16: return 2;
    case Scalar::Int32:
    case Scalar::UInt32:
    case Scalar::Float32: return 4;
    case Scalar::Float64: return 8;
  }
  return 0;
}

template <typename T>
T load(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

double load_scalar(Scalar s, const char* p) {
  switch (s) {
    case Scalar::Int8: return load<std::int8_t>(p);
    case Scalar::UInt8: return load<std::uint8_t>(p);
    case Scalar::Int16: return load<std::int16_t>(p);
    case Scalar::UInt16: return load<std::uint16_t>(p);
    case Scalar::Int32: return load<std::int32_t>(p);
    case Scalar::UInt32: return load<std::uint32_t>(p);
    case Scalar::Float32: return load<float>(p);
    case Scalar::Float64: return load<double>(p);
  }
  return 0.0;
}

struct Property {
  std::string name;
  Scalar type = Scalar::Float32;
  bool is_list = false;
  Scalar count_type = Scalar::UInt8;
};

struct Element {
  std::string name;
  std::size_t count = 0;
  std::vector<Property> properties;
};

enum class Encoding { Ascii, BinaryLittleEndian };

struct Header {
  Encoding encoding = Encoding::Ascii;
  std::vector<Element> elements;
  std::size_t body_offset = 0;
  std::size_t body_line = 0;  // 1-based line of the first body line (ascii)
};

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

[[noreturn]] void header_error(std::size_t line, const std::string& what) {
  throw Error("ply header line " + std::to_string(line) + ": " + what);
}

Header parse_header(std::string_view bytes) {
  Header h;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  bool saw_format = false;
  while (true) {
    const std::size_t eol = bytes.find('\n', pos);
    if (eol == std::string_view::npos) throw Error("ply header: missing end_header");
    std::string_view line = bytes.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const auto tok = split_ws(line);

    if (line_no == 1) {
      if (tok.size() != 1 || tok[0] != "ply") header_error(1, "missing 'ply' magic");
      continue;
    }
    if (tok.empty() || tok[0] == "comment" || tok[0] == "obj_info") continue;
    if (tok[0] == "format") {
      if (tok.size() < 3) header_error(line_no, "malformed format line");
      if (tok[1] == "ascii") {
        h.encoding = Encoding::Ascii;
      } else if (tok[1] == "binary_little_endian") {
        h.encoding = Encoding::BinaryLittleEndian;
      } else {
        header_error(line_no, "unsupported encoding '" + std::string(tok[1]) + "'");
      }
      saw_format = true;
    } else if (tok[0] == "element") {
      if (tok.size() != 3) header_error(line_no, "malformed element line");
      Element e;
      e.name = tok[1];
      const auto res = std::from_chars(tok[2].data(), tok[2].data() + tok[2].size(), e.count);
      if (res.ec != std::errc() || res.ptr != tok[2].data() + tok[2].size()) {
        header_error(line_no, "bad element count");
      }
      h.elements.push_back(std::move(e));
    } else if (tok[0] == "property") {
      if (h.elements.empty()) header_error(line_no, "property before any element");
      Property p;
      if (tok.size() == 5 && tok[1] == "list") {
        const auto ct = parse_scalar(tok[2]);
        const auto vt = parse_scalar(tok[3]);
        if (!ct || !vt) header_error(line_no, "unknown list property type");
        p.is_list = true;
        p.count_type = *ct;
        p.type = *vt;
        p.name = tok[4];
      } else if (tok.size() == 3) {
        const auto t = parse_scalar(tok[1]);
        if (!t) header_error(line_no, "unknown property type '" + std::string(tok[1]) + "'");
        p.type = *t;
        p.name = tok[2];
      } else {
        header_error(line_no, "malformed property line");
      }
      h.elements.back().properties.push_back(std::move(p));
    } else if (tok[0] == "end_header") {
      break;
    } else {
      header_error(line_no, "unexpected keyword '" + std::string(tok[0]) + "'");
    }
  }
  if (!saw_format) throw Error("ply header: missing format line");
  h.body_offset = pos;
  h.body_line = line_no + 1;
  return h;
}

// Column of each recognised vertex attribute, if present.
struct VertexLayout {
  int x = -1, y = -1, z = -1, intensity = -1, red = -1, green = -1, blue = -1, nx = -1, ny = -1, nz = -1;
};

VertexLayout vertex_layout(const Element& e) {
  VertexLayout l;
  for (int i = 0; i < static_cast<int>(e.properties.size()); ++i) {
    const auto& p = e.properties[static_cast<std::size_t>(i)];
    if (p.is_list) continue;
    if (p.name == "x") l.x = i;
    else if (p.name == "y") l.y = i;
    else if (p.name == "z") l.z = i;
    else if (p.name == "intensity") l.intensity = i;
    else if (p.name == "red") l.red = i;
    else if (p.name == "green") l.green = i;
    else if (p.name == "blue") l.blue = i;
    else if (p.name == "nx") l.nx = i;
    else if (p.name == "ny") l.ny = i;
    else if (p.name == "nz") l.nz = i;
  }
  if (l.x < 0 || l.y < 0 || l.z < 0) throw Error("ply: vertex element lacks x/y/z");
  return l;
}

double colour_scale(Scalar s) {
  switch (s) {
    case Scalar::UInt8: return 1.0 / 255.0;
    case Scalar::UInt16: return 1.0 / 65535.0;
    case Scalar::Float32:
    case Scalar::Float64: return 1.0;
    default: return 1.0 / 255.0;
  }
}

void store_vertex(PointCloud& cloud, const VertexLayout& l, const Element& e, const std::vector<double>& v) {
  auto at = [&](int i) { return v[static_cast<std::size_t>(i)]; };
  cloud.points.emplace_back(at(l.x), at(l.y), at(l.z));
  const bool rgb = l.red >= 0 && l.green >= 0 && l.blue >= 0;
  if (rgb) {
    const Vec3 c(at(l.red) * colour_scale(e.properties[static_cast<std::size_t>(l.red)].type),
                 at(l.green) * colour_scale(e.properties[static_cast<std::size_t>(l.green)].type),
                 at(l.blue) * colour_scale(e.properties[static_cast<std::size_t>(l.blue)].type));
    cloud.colour.push_back(c.cwiseMax(0.0).cwiseMin(1.0));
  }
  if (l.intensity >= 0) {
    cloud.intensity.push_back(at(l.intensity));
  } else if (rgb) {
    cloud.intensity.push_back(cloud.colour.back().mean());
  }
  if (l.nx >= 0 && l.ny >= 0 && l.nz >= 0) {
    Vec3 n(at(l.nx), at(l.ny), at(l.nz));
    const double len = n.norm();
    cloud.normals.push_back(len > 0.0 ? Vec3(n / len) : Vec3::UnitZ());
  }
}

}  // namespace

namespace detail {

void finish_loaded_cloud(PointCloud& cloud, const ReadOptions& options) {
  if (cloud.has_intensity() && options.normalize_out_of_range_intensity) {
    const auto [lo_it, hi_it] = std::minmax_element(cloud.intensity.begin(), cloud.intensity.end());
    const double lo = *lo_it, hi = *hi_it;
    if (lo < 0.0 || hi > 1.0) {
      const double range = hi - lo;
      for (auto& v : cloud.intensity) v = range > 0.0 ? (v - lo) / range : 0.0;
    }
  }
  cloud.validate();
}

}  // namespace detail

namespace {

void read_ascii_body(std::string_view bytes, const Header& h, PointCloud& cloud) {
  std::size_t pos = h.body_offset;
  std::size_t line_no = h.body_line - 1;
  auto next_line = [&]() -> std::string_view {
    while (pos < bytes.size()) {
      std::size_t eol = bytes.find('\n', pos);
      if (eol == std::string_view::npos) eol = bytes.size();
      std::string_view line = bytes.substr(pos, eol - pos);
      pos = eol + 1;
      ++line_no;
      if (!split_ws(line).empty()) return line;
    }
    throw Error("ply: unexpected end of file after line " + std::to_string(line_no));
  };

  for (const auto& e : h.elements) {
    const bool is_vertex = e.name == "vertex";
    const VertexLayout layout = is_vertex ? vertex_layout(e) : VertexLayout{};
    std::vector<double> values(e.properties.size());
    for (std::size_t row = 0; row < e.count; ++row) {
      const auto tok = split_ws(next_line());
      std::size_t t = 0;
      auto number = [&]() {
        if (t >= tok.size()) throw Error("ply line " + std::to_string(line_no) + ": too few values");
        double v = 0.0;
        const auto sv = tok[t++];
        const auto res = std::from_chars(sv.data(), sv.data() + sv.size(), v);
        if (res.ec != std::errc() || res.ptr != sv.data() + sv.size()) {
          throw Error("ply line " + std::to_string(line_no) + ": non-numeric value '" + std::string(sv) + "'");
        }
        return v;
      };
      for (std::size_t k = 0; k < e.properties.size(); ++k) {
        if (e.properties[k].is_list) {
          const auto n = static_cast<std::size_t>(number());
          for (std::size_t j = 0; j < n; ++j) number();
        } else {
          values[k] = number();
        }
      }
      if (is_vertex) store_vertex(cloud, layout, e, values);
    }
  }
}

void read_binary_body(std::string_view bytes, const Header& h, PointCloud& cloud) {
  std::size_t pos = h.body_offset;
  auto need = [&](std::size_t n) {
    if (pos + n > bytes.size()) {
      throw Error("ply: truncated binary payload at byte offset " + std::to_string(pos) + " (need " +
                  std::to_string(n) + " bytes, file has " + std::to_string(bytes.size()) + ")");
    }
  };
  for (const auto& e : h.elements) {
    const bool is_vertex = e.name == "vertex";
    const VertexLayout layout = is_vertex ? vertex_layout(e) : VertexLayout{};
    std::vector<double> values(e.properties.size());
    for (std::size_t row = 0; row < e.count; ++row) {
      for (std::size_t k = 0; k < e.properties.size(); ++k) {
        const Property& p = e.properties[k];
        if (p.is_list) {
          need(scalar_size(p.count_type));
          const auto n = static_cast<std::size_t>(load_scalar(p.count_type, bytes.data() + pos));
          pos += scalar_size(p.count_type);
          need(n * scalar_size(p.type));
          pos += n * scalar_size(p.type);
        } else {
          need(scalar_size(p.type));
          values[k] = load_scalar(p.type, bytes.data() + pos);
          pos += scalar_size(p.type);
        }
      }
      if (is_vertex) store_vertex(cloud, layout, e, values);
    }
  }
}

template <typename T>
void append_raw(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

void append_ascii(std::string& out, double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), static_cast<float>(v));
  out.append(buf, res.ptr);
}

}  // namespace

PointCloud read_ply(std::string_view bytes, const ReadOptions& options) {
  const Header h = parse_header(bytes);
  PointCloud cloud;
  if (h.encoding == Encoding::Ascii) {
    read_ascii_body(bytes, h, cloud);
  } else {
    read_binary_body(bytes, h, cloud);
  }
  detail::finish_loaded_cloud(cloud, options);
  return cloud;
}

std::string write_ply(const PointCloud& cloud, bool binary) {
  cloud.validate();
  const bool has_i = cloud.has_intensity();
  const bool has_n = cloud.has_normals();
  // Colour is only worth storing when it carries more than the replicated intensity.
  bool has_c = cloud.has_colour();
  if (has_c && has_i) {
    has_c = false;
    for (std::size_t i = 0; i < cloud.size() && !has_c; ++i) {
      has_c = (cloud.colour[i] - Vec3::Constant(cloud.intensity[i])).cwiseAbs().maxCoeff() > 0.5 / 255.0;
    }
  }

  std::string out = "ply\nformat ";
  out += binary ? "binary_little_endian" : "ascii";
  out += " 1.0\nelement vertex " + std::to_string(cloud.size()) + "\n";
  out += "property float x\nproperty float y\nproperty float z\n";
  if (has_i) out += "property float intensity\n";
  if (has_n) out += "property float nx\nproperty float ny\nproperty float nz\n";
  if (has_c) out += "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  out += "end_header\n";

  auto to_byte = [](double c) { return static_cast<std::uint8_t>(std::lround(std::clamp(c, 0.0, 1.0) * 255.0)); };
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    std::vector<double> floats{cloud.points[i].x(), cloud.points[i].y(), cloud.points[i].z()};
    if (has_i) floats.push_back(cloud.intensity[i]);
    if (has_n) floats.insert(floats.end(), {cloud.normals[i].x(), cloud.normals[i].y(), cloud.normals[i].z()});
    if (binary) {
      for (double f : floats) append_raw(out, static_cast<float>(f));
      if (has_c) {
        for (int c = 0; c < 3; ++c) append_raw(out, to_byte(cloud.colour[i][c]));
      }
    } else {
      for (std::size_t k = 0; k < floats.size(); ++k) {
        if (k) out += ' ';
        append_ascii(out, floats[k]);
      }
      if (has_c) {
        for (int c = 0; c < 3; ++c) out += ' ' + std::to_string(to_byte(cloud.colour[i][c]));
      }
      out += '\n';
    }
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

CloudFormat parse_cloud_format(std::string_view name) {
  if (name == "ply" || name == "ply-binary" || name == "binary") return CloudFormat::PlyBinary;
  if (name == "ply-ascii" || name == "ascii") return CloudFormat::PlyAscii;
  if (name == "xyzi" || name == "txt" || name == "xyz") return CloudFormat::Xyzi;
  throw Error("unknown cloud format '" + std::string(name) + "'");
}

PointCloud read_point_cloud(const std::filesystem::path& path, const ReadOptions& options) {
  const std::string bytes = read_file(path);
  try {
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".ply" ? read_ply(bytes, options) : read_xyzi(bytes, options);
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

void write_point_cloud(const PointCloud& cloud, const std::filesystem::path& path, CloudFormat format) {
  switch (format) {
    case CloudFormat::PlyAscii: write_file(path, write_ply(cloud, false)); break;
    case CloudFormat::PlyBinary: write_file(path, write_ply(cloud, true)); break;
    case CloudFormat::Xyzi: write_file(path, write_xyzi(cloud)); break;
  }
}

}  // namespace ctm
