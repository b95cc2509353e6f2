#include "scanmap/cloud_io.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace scanmap {

namespace {

[[noreturn]] void fail(const std::filesystem::path& path, int line, const std::string& what) {
  throw ParseError(path.string() + ":" + std::to_string(line) + ": " + what);
}

std::vector<std::string> tokenize(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> out;
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

double parseCoord(const std::string& tok, const std::filesystem::path& path, int line) {
  std::size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(tok, &pos);
  } catch (const std::exception&) {
    fail(path, line, "expected a number, got '" + tok + "'");
  }
  if (pos != tok.size()) fail(path, line, "trailing garbage in number '" + tok + "'");
  if (!std::isfinite(v)) fail(path, line, "non-finite coordinate '" + tok + "'");
  return v;
}

struct FieldLayout {
  int x = -1, y = -1, z = -1;
  int nx = -1, ny = -1, nz = -1;
  int count = 0;
  bool hasNormals() const { return nx >= 0 && ny >= 0 && nz >= 0; }
};

PointCloud readRecords(std::istream& in, const std::filesystem::path& path, int& lineNo,
                       const FieldLayout& layout, long vertexCount) {
  PointCloud cloud;
  cloud.points.reserve(static_cast<std::size_t>(vertexCount));
  if (layout.hasNormals()) cloud.normals.reserve(static_cast<std::size_t>(vertexCount));

  std::string line;
  long seen = 0;
  while (seen < vertexCount) {
    if (!std::getline(in, line)) fail(path, lineNo, "unexpected end of file, expected more vertices");
    ++lineNo;
    auto toks = tokenize(line);
    if (toks.empty()) continue;  // blank line
    if (static_cast<int>(toks.size()) < layout.count) {
      fail(path, lineNo, "vertex record has " + std::to_string(toks.size()) + " fields, expected " +
                             std::to_string(layout.count));
    }
    Vec3 p(parseCoord(toks[layout.x], path, lineNo), parseCoord(toks[layout.y], path, lineNo),
           parseCoord(toks[layout.z], path, lineNo));
    cloud.points.push_back(p);
    if (layout.hasNormals()) {
      cloud.normals.emplace_back(parseCoord(toks[layout.nx], path, lineNo),
                                 parseCoord(toks[layout.ny], path, lineNo),
                                 parseCoord(toks[layout.nz], path, lineNo));
    }
    ++seen;
  }
  return cloud;
}

PointCloud loadPly(std::istream& in, const std::filesystem::path& path) {
  int lineNo = 1;  // "ply" magic already consumed
  std::string line;
  FieldLayout layout;
  long vertexCount = -1;
  bool inVertexElement = false;
  int propertyIndex = 0;
  bool headerDone = false;

  while (std::getline(in, line)) {
    ++lineNo;
    auto toks = tokenize(line);
    if (toks.empty()) continue;
    if (toks[0] == "comment") continue;
    if (toks[0] == "format") {
      if (toks.size() < 2 || toks[1] != "ascii") {
        fail(path, lineNo, "only 'format ascii' PLY is supported (binary rejected)");
      }
    } else if (toks[0] == "element") {
      if (toks.size() < 3) fail(path, lineNo, "malformed element declaration");
      inVertexElement = (toks[1] == "vertex");
      if (inVertexElement) vertexCount = std::stol(toks[2]);
    } else if (toks[0] == "property") {
      if (!inVertexElement) continue;
      if (toks.size() >= 2 && toks[1] == "list") fail(path, lineNo, "list properties unsupported");
      if (toks.size() < 3) fail(path, lineNo, "malformed property declaration");
      const std::string& name = toks[2];
      if (name == "x") layout.x = propertyIndex;
      else if (name == "y") layout.y = propertyIndex;
      else if (name == "z") layout.z = propertyIndex;
      else if (name == "nx") layout.nx = propertyIndex;
      else if (name == "ny") layout.ny = propertyIndex;
      else if (name == "nz") layout.nz = propertyIndex;
      ++propertyIndex;
    } else if (toks[0] == "end_header") {
      headerDone = true;
      break;
    } else {
      fail(path, lineNo, "unrecognized header line '" + toks[0] + "'");
    }
  }
  if (!headerDone) fail(path, lineNo, "missing end_header");
  if (vertexCount < 0) fail(path, lineNo, "missing 'element vertex' declaration");
  if (layout.x < 0 || layout.y < 0 || layout.z < 0) fail(path, lineNo, "vertex element lacks x/y/z");
  layout.count = propertyIndex;
  return readRecords(in, path, lineNo, layout, vertexCount);
}

PointCloud loadPcd(std::istream& in, const std::filesystem::path& path, const std::string& first) {
  int lineNo = 0;
  std::string line = first;
  FieldLayout layout;
  long pointCount = -1;
  bool headerDone = false;

  do {
    ++lineNo;
    auto toks = tokenize(line);
    if (toks.empty() || toks[0][0] == '#') continue;
    if (toks[0] == "FIELDS") {
      for (std::size_t i = 1; i < toks.size(); ++i) {
        int idx = static_cast<int>(i) - 1;
        if (toks[i] == "x") layout.x = idx;
        else if (toks[i] == "y") layout.y = idx;
        else if (toks[i] == "z") layout.z = idx;
        else if (toks[i] == "normal_x") layout.nx = idx;
        else if (toks[i] == "normal_y") layout.ny = idx;
        else if (toks[i] == "normal_z") layout.nz = idx;
      }
      layout.count = static_cast<int>(toks.size()) - 1;
    } else if (toks[0] == "POINTS") {
      if (toks.size() < 2) fail(path, lineNo, "malformed POINTS line");
      pointCount = std::stol(toks[1]);
    } else if (toks[0] == "DATA") {
      if (toks.size() < 2 || toks[1] != "ascii") {
        fail(path, lineNo, "only 'DATA ascii' PCD is supported (binary rejected)");
      }
      headerDone = true;
      break;
    }
    // VERSION / SIZE / TYPE / COUNT / WIDTH / HEIGHT / VIEWPOINT accepted as-is
  } while (std::getline(in, line));

  if (!headerDone) fail(path, lineNo, "missing DATA line");
  if (pointCount < 0) fail(path, lineNo, "missing POINTS line");
  if (layout.x < 0 || layout.y < 0 || layout.z < 0) fail(path, lineNo, "FIELDS lack x/y/z");
  return readRecords(in, path, lineNo, layout, pointCount);
}

void writeNumber(std::ostream& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9f", v);
  out << buf;
}

void writeRecords(std::ostream& out, const PointCloud& cloud) {
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    writeNumber(out, cloud.points[i].x());
    out << ' ';
    writeNumber(out, cloud.points[i].y());
    out << ' ';
    writeNumber(out, cloud.points[i].z());
    if (cloud.hasNormals()) {
      for (int k = 0; k < 3; ++k) {
        out << ' ';
        writeNumber(out, cloud.normals[i][k]);
      }
    }
    out << '\n';
  }
}

}  // namespace

PointCloud loadCloud(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string() + ": cannot open file");
  std::string magic;
  if (!std::getline(in, magic)) throw ParseError(path.string() + ":1: empty file");
  // strip trailing CR from files written on other platforms
  while (!magic.empty() && (magic.back() == '\r' || magic.back() == ' ')) magic.pop_back();
  if (magic == "ply") {
    return loadPly(in, path);
  }
  return loadPcd(in, path, magic);
}

void saveCloud(const PointCloud& cloud, const std::filesystem::path& path, CloudFormat format) {
  cloud.validate();
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
  const std::size_t n = cloud.points.size();
  if (format == CloudFormat::PLY) {
    out << "ply\nformat ascii 1.0\n";
    out << "element vertex " << n << "\n";
    out << "property float x\nproperty float y\nproperty float z\n";
    if (cloud.hasNormals()) {
      out << "property float nx\nproperty float ny\nproperty float nz\n";
    }
    out << "end_header\n";
  } else {
    const char* fields = cloud.hasNormals() ? "x y z normal_x normal_y normal_z" : "x y z";
    int fieldCount = cloud.hasNormals() ? 6 : 3;
    out << "# .PCD v0.7 - Point Cloud Data file format\n";
    out << "VERSION 0.7\n";
    out << "FIELDS " << fields << "\n";
    out << "SIZE";
    for (int i = 0; i < fieldCount; ++i) out << " 4";
    out << "\nTYPE";
    for (int i = 0; i < fieldCount; ++i) out << " F";
    out << "\nCOUNT";
    for (int i = 0; i < fieldCount; ++i) out << " 1";
    out << "\nWIDTH " << n << "\nHEIGHT 1\nVIEWPOINT 0 0 0 1 0 0 0\n";
    out << "POINTS " << n << "\nDATA ascii\n";
  }
  writeRecords(out, cloud);
  if (!out) throw std::runtime_error(path.string() + ": write failed");
}

CloudFormat formatFromExtension(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext == ".pcd" ? CloudFormat::PCD : CloudFormat::PLY;
}

}  // namespace scanmap
