#pragma once

#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "hopc/detector.hpp"
#include "hopc/local_descriptor.hpp"
#include "hopc/recognition.hpp"
#include "hopc/scale_selection.hpp"
#include "hopc/stkd.hpp"

namespace hopc {

enum class DescriptorMode { Combined, LocalOnly, StkdOnly };

const char* to_string(DescriptorMode mode) noexcept;
DescriptorMode descriptor_mode_from_string(const std::string& s);

/// Every knob of the recognition pipeline. Defaults follow the reference
/// parameter set: K = 1500, n_k = 400, all eigenratio thresholds 1.3,
/// 2x2x3 cells, tau_m = ceil(0.2 n_f), m_k = ceil(0.05 n_k).
struct PipelineParams {
  ScaleParams scale;
  /// Positive value overrides sigma * subject height.
  double radius = 0.0;
  /// `detector.radius` is filled in per sequence.
  DetectorParams detector;
  CellGrid grid;
  double theta_l = 1.3;
  StkdParams stkd;
  std::size_t codebook_size = 1500;
  std::uint64_t seed = 0;
  int kmeans_iterations = 100;
  double keep_fraction = 0.98;
  SmoParams svm;
  DescriptorMode mode = DescriptorMode::Combined;
};

nlohmann::json to_json(const PipelineParams& params);
PipelineParams pipeline_params_from_json(const nlohmann::json& j);

/// Support radius for a sequence: the override if set, else sigma * height.
double resolve_radius(const PointCloudSequence& seq, const PipelineParams& params);

/// Keypoints and their Local HOPC descriptors for one sequence.
struct SequenceFeatures {
  double radius = 0.0;
  std::vector<StkRecord> stks;
  SampleMatrix local;
};

SequenceFeatures extract_features(const PointCloudSequence& seq, const PipelineParams& params);

/// Local HOPC descriptors for given keypoints (one row each).
SampleMatrix describe_keypoints(const PointCloudSequence& seq, std::span<const StkRecord> stks, double radius,
                                const CellGrid& grid, double theta_l);

struct ActionDescriptor {
  Eigen::VectorXd bow;
  Eigen::VectorXd stkd;
  Eigen::VectorXd combined;

  Eigen::VectorXd select(DescriptorMode mode) const;
};

/// L1-normalized BoW over kept codewords, L1-normalized STK-D, and their
/// concatenation. Throws TooFewKeypoints when STK-D cannot be formed.
ActionDescriptor action_descriptor(const SequenceFeatures& features, const Codebook& codebook,
                                   const PipelineParams& params);

ActionDescriptor action_descriptor(const PointCloudSequence& seq, const Codebook& codebook,
                                   const PipelineParams& params);

/// Features of one sequence with the metadata the cross-view protocol needs.
struct TaggedFeatures {
  std::string id;
  int label = 0;
  int subject = 0;
  int view = 0;
  SequenceFeatures features;
};

/// Train/test partition by camera view. Training helpers refuse any sample
/// whose view is not a training view.
class CrossViewSplit {
 public:
  CrossViewSplit(std::set<int> train_views, std::set<int> test_views);

  bool is_train(int view) const { return train_.count(view) > 0; }
  bool is_test(int view) const { return test_.count(view) > 0; }
  const std::set<int>& train_views() const noexcept { return train_; }
  const std::set<int>& test_views() const noexcept { return test_; }

  /// Throws InvalidArgument if any sample comes from outside the training views.
  void require_training(std::span<const TaggedFeatures> samples) const;

 private:
  std::set<int> train_;
  std::set<int> test_;
};

struct RecognitionModel {
  PipelineParams params;
  Codebook codebook;
  KernelModel classifier;
};

/// k-means codebook over the Local HOPC descriptors of the training samples.
Codebook train_codebook(std::span<const TaggedFeatures> training, const CrossViewSplit& split,
                        const PipelineParams& params);

/// F-score mining of codewords (sets `codebook.keep`) followed by the kernel
/// classifier on the selected descriptor mode. Samples without enough
/// keypoints for STK-D are skipped.
RecognitionModel train_model(std::span<const TaggedFeatures> training, const CrossViewSplit& split,
                             Codebook codebook, const PipelineParams& params);

/// Raw (unnormalized) BoW histograms over all codewords, one row per sample.
SampleMatrix codeword_histograms(std::span<const TaggedFeatures> samples, const Codebook& codebook);

struct Prediction {
  int label = -1;
  Eigen::VectorXd scores;
  bool rejected = false;
  std::string diagnostic;
};

Prediction classify(const RecognitionModel& model, const SequenceFeatures& features);
Prediction classify(const RecognitionModel& model, const PointCloudSequence& seq);

struct EvaluationRow {
  std::string id;
  int view = 0;
  int label = 0;
  int predicted = -1;
  std::string mode;
};

struct EvaluationReport {
  std::vector<EvaluationRow> rows;
  /// Accuracy on the test views per descriptor mode.
  double accuracy_combined = 0.0;
  double accuracy_local = 0.0;
  double accuracy_stkd = 0.0;
};

/// Cross-view protocol: codebook and classifiers from training views only,
/// accuracy on the test views for all three descriptor modes.
EvaluationReport evaluate_cross_view(std::span<const TaggedFeatures> samples, const CrossViewSplit& split,
                                     const PipelineParams& params);

}  // namespace hopc
