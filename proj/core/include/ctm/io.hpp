#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "ctm/point_cloud.hpp"

namespace ctm {

enum class CloudFormat { PlyAscii, PlyBinary, Xyzi };

/// "ply" / "ply-ascii" / "ply-binary" / "xyzi".
CloudFormat parse_cloud_format(std::string_view name);

struct ReadOptions {
  /// Rescale intensity onto [0,1] when any value falls outside it.
  bool normalize_out_of_range_intensity = true;
};

/// PLY (ascii, binary_little_endian) or whitespace-separated `x y z intensity` text.
/// Format follows the extension: .ply, otherwise text.
PointCloud read_point_cloud(const std::filesystem::path& path, const ReadOptions& options = {});
void write_point_cloud(const PointCloud& cloud, const std::filesystem::path& path, CloudFormat format);

PointCloud read_ply(std::string_view bytes, const ReadOptions& options = {});
std::string write_ply(const PointCloud& cloud, bool binary);

PointCloud read_xyzi(std::string_view text, const ReadOptions& options = {});
std::string write_xyzi(const PointCloud& cloud);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

namespace detail {
/// Shared tail of the readers: optional intensity rescale, then invariant check.
void finish_loaded_cloud(PointCloud& cloud, const ReadOptions& options);
}  // namespace detail

/// Flat `key = value` text, '#' comments, blank lines ignored.
/// Duplicate keys and lines without '=' are errors naming the line.
std::map<std::string, std::string> parse_key_values(std::string_view text);

/// Value parsers for config entries; errors name the key.
double parse_double(std::string_view value, std::string_view key);
long long parse_integer(std::string_view value, std::string_view key);
bool parse_bool(std::string_view value, std::string_view key);
/// Whitespace- or comma-separated numbers.
std::vector<double> parse_doubles(std::string_view value, std::string_view key);
Vec3 parse_vec3(std::string_view value, std::string_view key);

}  // namespace ctm
