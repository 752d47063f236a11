#include "hopc/depth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <mutex>
#include <sstream>

#include <png.h>

#include "hopc/error.hpp"
#include "hopc/io.hpp"

namespace hopc {

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw Error(Errc::InvalidArgument, "focal lengths must be positive");
  if (!(depth_scale > 0.0)) throw Error(Errc::InvalidArgument, "depth scale must be positive");
  if (!std::isfinite(cx) || !std::isfinite(cy)) throw Error(Errc::InvalidArgument, "principal point must be finite");
}

PointCloudFrame backproject(const DepthImage& depth, const CameraIntrinsics& k) {
  k.validate();
  if (depth.width <= 0 || depth.height <= 0 ||
      depth.pixels.size() != static_cast<std::size_t>(depth.width) * static_cast<std::size_t>(depth.height))
    throw Error(Errc::LengthMismatch, "depth image dimensions do not match its pixel buffer");
  PointCloudFrame frame;
  for (int v = 0; v < depth.height; ++v)
    for (int u = 0; u < depth.width; ++u) {
      const std::uint16_t d = depth.at(u, v);
      if (d == 0) continue;
      const double z = d * k.depth_scale;
      frame.points.emplace_back((u - k.cx) * z / k.fx, (v - k.cy) * z / k.fy, z);
    }
  return frame;
}

namespace {

// Reads one whitespace-separated PGM header token, skipping comments.
std::string pgm_token(const Bytes& b, std::size_t& pos) {
  for (;;) {
    while (pos < b.size() && std::isspace(b[pos])) ++pos;
    if (pos < b.size() && b[pos] == '#') {
      while (pos < b.size() && b[pos] != '\n') ++pos;
      continue;
    }
    break;
  }
  std::string tok;
  while (pos < b.size() && !std::isspace(b[pos])) tok.push_back(static_cast<char>(b[pos++]));
  if (tok.empty()) throw ParseError("truncated PGM header", pos);
  return tok;
}

int pgm_int(const Bytes& b, std::size_t& pos) {
  const auto at = pos;
  const std::string tok = pgm_token(b, pos);
  try {
    std::size_t used = 0;
    const int v = std::stoi(tok, &used);
    if (used != tok.size() || v <= 0) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw ParseError("bad PGM header field '" + tok + "'", at);
  }
}

}  // namespace

DepthImage read_pgm16(const std::filesystem::path& path) {
  const Bytes b = read_file(path);
  std::size_t pos = 0;
  if (pgm_token(b, pos) != "P5") throw ParseError("not a binary PGM", 0);
  DepthImage img;
  img.width = pgm_int(b, pos);
  img.height = pgm_int(b, pos);
  const int maxval = pgm_int(b, pos);
  if (maxval < 256 || maxval > 65535) throw ParseError("PGM is not 16-bit", pos);
  ++pos;  // single whitespace before the raster
  const std::size_t n = static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height);
  if (b.size() < pos || b.size() - pos < 2 * n) throw ParseError("truncated PGM raster", b.size());
  img.pixels.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    img.pixels[i] = static_cast<std::uint16_t>((b[pos + 2 * i] << 8) | b[pos + 2 * i + 1]);
  return img;
}

void write_pgm16(const std::filesystem::path& path, const DepthImage& depth) {
  const std::string head =
      "P5\n" + std::to_string(depth.width) + " " + std::to_string(depth.height) + "\n65535\n";
  Bytes b(head.begin(), head.end());
  for (const auto p : depth.pixels) {
    b.push_back(static_cast<std::uint8_t>(p >> 8));
    b.push_back(static_cast<std::uint8_t>(p & 0xff));
  }
  write_file(path, b);
}

DepthImage read_png16(const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  const Bytes data = read_file(path);
  if (!png_image_begin_read_from_memory(&image, data.data(), data.size()))
    throw ParseError(std::string("bad PNG: ") + image.message, 0);
  image.format = PNG_FORMAT_LINEAR_Y;
  DepthImage img;
  img.width = static_cast<int>(image.width);
  img.height = static_cast<int>(image.height);
  img.pixels.resize(static_cast<std::size_t>(image.width) * image.height);
  // The simplified API converts to linear light unless the file is already
  // linear 16-bit gray; depth PNGs carry no gamma, so values pass through.
  if (!png_image_finish_read(&image, nullptr, img.pixels.data(), 0, nullptr)) {
    png_image_free(&image);
    throw ParseError(std::string("bad PNG: ") + image.message, 0);
  }
  return img;
}

void write_png16(const std::filesystem::path& path, const DepthImage& depth) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(depth.width);
  image.height = static_cast<png_uint_32>(depth.height);
  image.format = PNG_FORMAT_LINEAR_Y;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, depth.pixels.data(), 0, nullptr))
    throw Error(Errc::Io, std::string("PNG encode failed: ") + image.message);
  Bytes out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, depth.pixels.data(), 0, nullptr))
    throw Error(Errc::Io, std::string("PNG encode failed: ") + image.message);
  out.resize(size);
  write_file(path, out);
}

namespace {

std::mutex& registry_mutex() {
  static std::mutex m;
  return m;
}

std::vector<std::shared_ptr<const DepthImporter>>& registry() {
  static std::vector<std::shared_ptr<const DepthImporter>> r;
  return r;
}

std::string lower_extension(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

}  // namespace

void register_importer(std::shared_ptr<const DepthImporter> importer) {
  std::lock_guard lock(registry_mutex());
  registry().push_back(std::move(importer));
}

DepthImage read_depth(const std::filesystem::path& path) {
  {
    std::lock_guard lock(registry_mutex());
    for (const auto& imp : registry())
      if (imp->accepts(path)) return imp->read(path);
  }
  const std::string ext = lower_extension(path);
  if (ext == ".pgm") return read_pgm16(path);
  if (ext == ".png") return read_png16(path);
  throw Error(Errc::InvalidArgument, "unsupported depth format '" + path.string() + "'");
}

void SequenceManifest::validate() const {
  if (frames.empty()) throw Error(Errc::InvalidArgument, "manifest '" + id + "' lists no frames");
  if (!views.empty() && std::find(views.begin(), views.end(), view_id) == views.end())
    throw Error(Errc::InvalidArgument, "view " + std::to_string(view_id) + " is not among the declared views");
  intrinsics.validate();
}

SequenceManifest load_manifest(const std::filesystem::path& path) {
  const Bytes bytes = read_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed manifest: ") + e.what(), e.byte);
  }
  SequenceManifest m;
  try {
    m.id = j.value("id", path.stem().string());
    m.action_label = j.at("action_label").get<int>();
    m.subject_id = j.value("subject_id", 0);
    m.view_id = j.value("view_id", 0);
    m.views = j.value("views", std::vector<int>{});
    m.units = j.value("units", std::string("m"));
    const auto& k = j.at("intrinsics");
    m.intrinsics = {k.at("fx").get<double>(), k.at("fy").get<double>(), k.at("cx").get<double>(),
                    k.at("cy").get<double>(), k.value("depth_scale", 0.001)};
    const auto base = path.parent_path();
    for (const auto& f : j.at("frames")) m.frames.push_back(base / f.get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::Parse, std::string("manifest '") + path.string() + "': " + e.what());
  }
  m.validate();
  return m;
}

nlohmann::json to_json(const SequenceManifest& m) {
  nlohmann::json frames = nlohmann::json::array();
  for (const auto& f : m.frames) frames.push_back(f.string());
  return {{"id", m.id},
          {"action_label", m.action_label},
          {"subject_id", m.subject_id},
          {"view_id", m.view_id},
          {"views", m.views},
          {"frames", frames},
          {"intrinsics",
           {{"fx", m.intrinsics.fx},
            {"fy", m.intrinsics.fy},
            {"cx", m.intrinsics.cx},
            {"cy", m.intrinsics.cy},
            {"depth_scale", m.intrinsics.depth_scale}}},
          {"units", m.units}};
}

PointCloudSequence convert(const SequenceManifest& manifest) {
  manifest.validate();
  std::vector<std::future<PointCloudFrame>> jobs;
  jobs.reserve(manifest.frames.size());
  for (const auto& f : manifest.frames)
    jobs.push_back(std::async(std::launch::async, [&manifest, f] { return backproject(read_depth(f), manifest.intrinsics); }));
  PointCloudSequence seq;
  seq.frames.reserve(jobs.size());
  for (auto& j : jobs) seq.frames.push_back(j.get());
  return seq;
}

}  // namespace hopc
