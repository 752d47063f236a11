#include "hopc/pipeline.hpp"

#include <algorithm>
#include <map>

namespace hopc {

const char* to_string(DescriptorMode mode) noexcept {
  switch (mode) {
    case DescriptorMode::Combined: return "combined";
    case DescriptorMode::LocalOnly: return "local";
    case DescriptorMode::StkdOnly: return "stkd";
  }
  return "combined";
}

DescriptorMode descriptor_mode_from_string(const std::string& s) {
  if (s == "combined") return DescriptorMode::Combined;
  if (s == "local") return DescriptorMode::LocalOnly;
  if (s == "stkd") return DescriptorMode::StkdOnly;
  throw Error(Errc::InvalidArgument, "unknown descriptor mode '" + s + "'");
}

nlohmann::json to_json(const PipelineParams& p) {
  return {
      {"sigma", p.scale.sigma},
      {"tau_m", p.scale.max_temporal_scale},
      {"height_percentile", p.scale.height_percentile},
      {"r", p.radius},
      {"theta_stk", p.detector.theta_stk},
      {"nms_radius", p.detector.nms_radius},
      {"nms_frames", p.detector.nms_frames},
      {"n_k", p.detector.max_keypoints},
      {"quality_floor", p.detector.quality_floor},
      {"stride", p.detector.stride},
      {"grid", {p.grid.nx, p.grid.ny, p.grid.nt}},
      {"theta_l", p.theta_l},
      {"theta_g", p.stkd.theta_g},
      {"m_k", p.stkd.removal_per_step},
      {"min_keep", p.stkd.min_keep},
      {"stkd_isotropic", p.stkd.isotropic},
      {"K", p.codebook_size},
      {"seed", p.seed},
      {"kmeans_iterations", p.kmeans_iterations},
      {"keep_fraction", p.keep_fraction},
      {"C", p.svm.c},
      {"svm_tolerance", p.svm.tolerance},
      {"svm_max_iterations", p.svm.max_iterations},
      {"mode", to_string(p.mode)},
  };
}

PipelineParams pipeline_params_from_json(const nlohmann::json& j) {
  PipelineParams p;
  auto get = [&](const char* key, auto& out) {
    if (j.contains(key)) j.at(key).get_to(out);
  };
  get("sigma", p.scale.sigma);
  get("tau_m", p.scale.max_temporal_scale);
  get("height_percentile", p.scale.height_percentile);
  get("r", p.radius);
  get("theta_stk", p.detector.theta_stk);
  get("nms_radius", p.detector.nms_radius);
  get("nms_frames", p.detector.nms_frames);
  get("n_k", p.detector.max_keypoints);
  get("quality_floor", p.detector.quality_floor);
  get("stride", p.detector.stride);
  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    p.grid = {g.at(0).get<int>(), g.at(1).get<int>(), g.at(2).get<int>()};
  }
  get("theta_l", p.theta_l);
  get("theta_g", p.stkd.theta_g);
  get("m_k", p.stkd.removal_per_step);
  get("min_keep", p.stkd.min_keep);
  get("stkd_isotropic", p.stkd.isotropic);
  get("K", p.codebook_size);
  get("seed", p.seed);
  get("kmeans_iterations", p.kmeans_iterations);
  get("keep_fraction", p.keep_fraction);
  get("C", p.svm.c);
  get("svm_tolerance", p.svm.tolerance);
  get("svm_max_iterations", p.svm.max_iterations);
  if (j.contains("mode")) p.mode = descriptor_mode_from_string(j.at("mode").get<std::string>());
  return p;
}

double resolve_radius(const PointCloudSequence& seq, const PipelineParams& params) {
  return params.radius > 0.0 ? params.radius : spatial_scale(seq, params.scale);
}

SampleMatrix describe_keypoints(const PointCloudSequence& seq, std::span<const StkRecord> stks, double radius,
                                const CellGrid& grid, double theta_l) {
  const SequenceIndex index(seq, radius);
  LocalDescriber describer(index, {radius, grid, theta_l});
  SampleMatrix out(static_cast<Eigen::Index>(stks.size()), static_cast<Eigen::Index>(grid.descriptor_size()));
  for (std::size_t i = 0; i < stks.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = describer.describe(stks[i]).transpose();
  return out;
}

SequenceFeatures extract_features(const PointCloudSequence& seq, const PipelineParams& params) {
  SequenceFeatures out;
  out.radius = resolve_radius(seq, params);
  DetectorParams det = params.detector;
  det.radius = out.radius;
  if (det.max_temporal_scale == 0) det.max_temporal_scale = params.scale.max_temporal_scale;
  out.stks = detect(seq, det);
  out.local = describe_keypoints(seq, out.stks, out.radius, params.grid, params.theta_l);
  return out;
}

Eigen::VectorXd ActionDescriptor::select(DescriptorMode mode) const {
  switch (mode) {
    case DescriptorMode::LocalOnly: return bow;
    case DescriptorMode::StkdOnly: return stkd;
    case DescriptorMode::Combined: break;
  }
  return combined;
}

namespace {

void l1_normalize(Eigen::VectorXd& v) {
  const double s = v.sum();
  if (s > 0.0) v /= s;
}

}  // namespace

ActionDescriptor action_descriptor(const SequenceFeatures& features, const Codebook& codebook,
                                   const PipelineParams& params) {
  ActionDescriptor d;
  d.bow = bow_histogram(features.local, codebook);
  l1_normalize(d.bow);
  StkdParams sp = params.stkd;
  sp.l1_normalize = true;
  d.stkd = stkd(features.stks, sp).histogram;
  d.combined.resize(d.bow.size() + d.stkd.size());
  d.combined << d.bow, d.stkd;
  return d;
}

ActionDescriptor action_descriptor(const PointCloudSequence& seq, const Codebook& codebook,
                                   const PipelineParams& params) {
  return action_descriptor(extract_features(seq, params), codebook, params);
}

CrossViewSplit::CrossViewSplit(std::set<int> train_views, std::set<int> test_views)
    : train_(std::move(train_views)), test_(std::move(test_views)) {
  if (train_.empty()) throw Error(Errc::InvalidArgument, "no training views");
  for (const int v : test_)
    if (train_.count(v)) throw Error(Errc::InvalidArgument, "view " + std::to_string(v) + " is both train and test");
}

void CrossViewSplit::require_training(std::span<const TaggedFeatures> samples) const {
  for (const auto& s : samples)
    if (!is_train(s.view))
      throw Error(Errc::InvalidArgument,
                  "sample '" + s.id + "' from view " + std::to_string(s.view) + " is not training data");
}

Codebook train_codebook(std::span<const TaggedFeatures> training, const CrossViewSplit& split,
                        const PipelineParams& params) {
  split.require_training(training);
  Eigen::Index rows = 0, cols = 0;
  for (const auto& s : training) {
    rows += s.features.local.rows();
    if (s.features.local.rows() > 0) cols = s.features.local.cols();
  }
  SampleMatrix all(rows, cols);
  Eigen::Index r = 0;
  for (const auto& s : training) {
    if (s.features.local.rows() == 0) continue;
    all.middleRows(r, s.features.local.rows()) = s.features.local;
    r += s.features.local.rows();
  }
  return kmeans(all, params.codebook_size, params.seed, params.kmeans_iterations);
}

SampleMatrix codeword_histograms(std::span<const TaggedFeatures> samples, const Codebook& codebook) {
  Codebook all = codebook;
  all.keep.assign(codebook.size(), 1);
  SampleMatrix out(static_cast<Eigen::Index>(samples.size()), static_cast<Eigen::Index>(codebook.size()));
  for (std::size_t i = 0; i < samples.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = bow_histogram(samples[i].features.local, all).transpose();
  return out;
}

RecognitionModel train_model(std::span<const TaggedFeatures> training, const CrossViewSplit& split,
                             Codebook codebook, const PipelineParams& params) {
  split.require_training(training);
  round_to_float(codebook.centroids);
  // Discriminative codeword mining on L1-normalized histograms.
  SampleMatrix hist = codeword_histograms(training, codebook);
  for (Eigen::Index i = 0; i < hist.rows(); ++i) {
    const double s = hist.row(i).sum();
    if (s > 0.0) hist.row(i) /= s;
  }
  std::vector<int> labels;
  for (const auto& s : training) labels.push_back(s.label);
  std::vector<double> scores(codebook.size());
  std::vector<double> column(training.size());
  for (std::size_t c = 0; c < codebook.size(); ++c) {
    for (std::size_t i = 0; i < training.size(); ++i) column[i] = hist(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c));
    scores[c] = fscore(column, labels);
  }
  codebook.keep = select_features(scores, params.keep_fraction);

  std::vector<Eigen::VectorXd> rows;
  std::vector<int> used_labels;
  for (const auto& s : training) {
    try {
      rows.push_back(action_descriptor(s.features, codebook, params).select(params.mode));
      used_labels.push_back(s.label);
    } catch (const Error& e) {
      if (e.code() != Errc::TooFewKeypoints) throw;
    }
  }
  if (rows.empty()) throw Error(Errc::DegenerateTraining, "no training sequence produced a descriptor");
  SampleMatrix x(static_cast<Eigen::Index>(rows.size()), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) x.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();

  RecognitionModel model;
  model.params = params;
  model.codebook = std::move(codebook);
  model.classifier = train(x, used_labels, params.svm);
  return model;
}

Prediction classify(const RecognitionModel& model, const SequenceFeatures& features) {
  Prediction p;
  try {
    const auto desc = action_descriptor(features, model.codebook, model.params).select(model.params.mode);
    p.label = predict(model.classifier, desc, &p.scores);
  } catch (const Error& e) {
    if (e.code() != Errc::TooFewKeypoints) throw;
    p.rejected = true;
    p.diagnostic = e.what();
  }
  return p;
}

Prediction classify(const RecognitionModel& model, const PointCloudSequence& seq) {
  return classify(model, extract_features(seq, model.params));
}

EvaluationReport evaluate_cross_view(std::span<const TaggedFeatures> samples, const CrossViewSplit& split,
                                     const PipelineParams& params) {
  std::vector<TaggedFeatures> training;
  std::vector<const TaggedFeatures*> testing;
  for (const auto& s : samples) {
    if (split.is_train(s.view)) training.push_back(s);
    else if (split.is_test(s.view)) testing.push_back(&s);
  }
  const Codebook codebook = train_codebook(training, split, params);

  EvaluationReport report;
  for (const auto mode : {DescriptorMode::Combined, DescriptorMode::LocalOnly, DescriptorMode::StkdOnly}) {
    PipelineParams mp = params;
    mp.mode = mode;
    const RecognitionModel model = train_model(training, split, codebook, mp);
    std::size_t correct = 0;
    for (const auto* s : testing) {
      const Prediction pred = classify(model, s->features);
      report.rows.push_back({s->id, s->view, s->label, pred.label, to_string(mode)});
      if (!pred.rejected && pred.label == s->label) ++correct;
    }
    const double acc = testing.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(testing.size());
    if (mode == DescriptorMode::Combined) report.accuracy_combined = acc;
    else if (mode == DescriptorMode::LocalOnly) report.accuracy_local = acc;
    else report.accuracy_stkd = acc;
  }
  return report;
}

}  // namespace hopc
