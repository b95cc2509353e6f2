#pragma once

#include <filesystem>
#include <stdexcept>

#include "scanmap/point_cloud.hpp"

namespace scanmap {

enum class CloudFormat { PLY, PCD };

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Reads an ASCII PLY or ASCII PCD file (picked by header, not extension).
/// Normals are populated iff the file declares them. Binary variants and
/// malformed headers raise ParseError with the offending line number.
PointCloud loadCloud(const std::filesystem::path& path);

/// Writes ASCII PLY or PCD. Normals are written iff the cloud carries them.
void saveCloud(const PointCloud& cloud, const std::filesystem::path& path, CloudFormat format);

/// Picks the format from the file extension (.ply / .pcd), defaulting to PLY.
CloudFormat formatFromExtension(const std::filesystem::path& path);

}  // namespace scanmap
