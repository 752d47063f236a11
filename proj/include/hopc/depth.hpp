#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "hopc/types.hpp"

namespace hopc {

struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  /// Metres (or scene units) per stored depth unit.
  double depth_scale = 0.001;

  void validate() const;
};

/// 16-bit depth map, row-major; zero marks an invalid pixel.
struct DepthImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> pixels;

  std::uint16_t at(int u, int v) const { return pixels[static_cast<std::size_t>(v) * width + u]; }
};

/// Pinhole back-projection of every valid pixel, in row-major pixel order.
PointCloudFrame backproject(const DepthImage& depth, const CameraIntrinsics& k);

DepthImage read_pgm16(const std::filesystem::path& path);
void write_pgm16(const std::filesystem::path& path, const DepthImage& depth);
DepthImage read_png16(const std::filesystem::path& path);
void write_png16(const std::filesystem::path& path, const DepthImage& depth);

/// Picks the reader from the file extension (.pgm or .png).
DepthImage read_depth(const std::filesystem::path& path);

struct SequenceManifest {
  std::string id;
  int action_label = 0;
  int subject_id = 0;
  int view_id = 0;
  std::vector<int> views;
  /// Frame files, resolved relative to the manifest's directory.
  std::vector<std::filesystem::path> frames;
  CameraIntrinsics intrinsics;
  std::string units = "m";

  void validate() const;
};

SequenceManifest load_manifest(const std::filesystem::path& path);
nlohmann::json to_json(const SequenceManifest& m);

/// Decoder for a dataset-specific depth format. Registered importers are
/// consulted by extension before the built-in PGM/PNG readers.
class DepthImporter {
 public:
  virtual ~DepthImporter() = default;
  virtual bool accepts(const std::filesystem::path& path) const = 0;
  virtual DepthImage read(const std::filesystem::path& path) const = 0;
};

void register_importer(std::shared_ptr<const DepthImporter> importer);

/// Decodes every frame of the manifest (in parallel across files) and
/// back-projects it.
PointCloudSequence convert(const SequenceManifest& manifest);

}  // namespace hopc
