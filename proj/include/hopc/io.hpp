#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "hopc/detector.hpp"
#include "hopc/pipeline.hpp"
#include "hopc/recognition.hpp"
#include "hopc/types.hpp"

namespace hopc {

using Bytes = std::vector<std::uint8_t>;

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const Bytes& bytes);

// Point cloud sequence container: "PCSQ", u32 version (1), u32 frame count,
// then per frame a u32 point count and count x 3 float32. Little-endian.
Bytes encode_pcseq(const PointCloudSequence& seq);
PointCloudSequence decode_pcseq(const Bytes& bytes);
void save_pcseq(const std::filesystem::path& path, const PointCloudSequence& seq);
PointCloudSequence load_pcseq(const std::filesystem::path& path);

// The remaining containers share a layout: 8-byte magic, u32 version, then a
// u32-length JSON header carrying the parameters that produced the payload.

struct KeypointFile {
  nlohmann::json header;
  double radius = 0.0;
  std::vector<StkRecord> stks;
};

Bytes encode_keypoints(const KeypointFile& file);
KeypointFile decode_keypoints(const Bytes& bytes);

/// Local descriptors (one row per keypoint) together with their keypoints,
/// or a single holistic descriptor with no keypoints.
struct DescriptorFile {
  nlohmann::json header;
  SequenceFeatures features;
};

Bytes encode_descriptors(const DescriptorFile& file);
DescriptorFile decode_descriptors(const Bytes& bytes);

struct CodebookFile {
  nlohmann::json header;
  Codebook codebook;
};

Bytes encode_codebook(const CodebookFile& file);
CodebookFile decode_codebook(const Bytes& bytes);

/// Codebook and classifier are stored as float32; training already rounds
/// them, so the round trip is exact.
Bytes encode_model(const RecognitionModel& model, const nlohmann::json& header = {});
RecognitionModel decode_model(const Bytes& bytes, nlohmann::json* header = nullptr);

void write_ply(const std::filesystem::path& path, const std::vector<StkRecord>& stks);

}  // namespace hopc
