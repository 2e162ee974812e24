#include <cctype>
#include <charconv>

#include "ctm/error.hpp"
#include "ctm/io.hpp"

namespace ctm {

PointCloud read_xyzi(std::string_view text, const ReadOptions& options) {
  PointCloud cloud;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  bool with_intensity = false;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);

    double values[4];
    std::size_t count = 0;
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
      if (i >= line.size()) break;
      std::size_t j = i;
      while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
      const std::string_view field = line.substr(i, j - i);
      if (count == 4) throw Error("xyzi line " + std::to_string(line_no) + ": more than four fields");
      const auto res = std::from_chars(field.data(), field.data() + field.size(), values[count]);
      if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
        throw Error("xyzi line " + std::to_string(line_no) + ": non-numeric field '" + std::string(field) + "'");
      }
      ++count;
      i = j;
    }
    if (count == 0) continue;
    if (count < 3) throw Error("xyzi line " + std::to_string(line_no) + ": expected x y z [intensity]");
    if (cloud.points.empty()) {
      with_intensity = count == 4;
    } else if (with_intensity != (count == 4)) {
      throw Error("xyzi line " + std::to_string(line_no) + ": inconsistent column count");
    }
    cloud.points.emplace_back(values[0], values[1], values[2]);
    if (with_intensity) cloud.intensity.push_back(values[3]);
  }
  detail::finish_loaded_cloud(cloud, options);
  return cloud;
}

std::string write_xyzi(const PointCloud& cloud) {
  cloud.validate();
  std::string out;
  char buf[64];
  auto put = [&](double v) {
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, res.ptr);
  };
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    put(cloud.points[i].x());
    out += ' ';
    put(cloud.points[i].y());
    out += ' ';
    put(cloud.points[i].z());
    if (cloud.has_intensity()) {
      out += ' ';
      put(cloud.intensity[i]);
    }
    out += '\n';
  }
  return out;
}

}  // namespace ctm
