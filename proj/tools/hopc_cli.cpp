// hopc: command-line front end. Exit codes: 0 success, 2 usage error,
// 3 data error.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hopc/benchmark.hpp"
#include "hopc/depth.hpp"
#include "hopc/detector.hpp"
#include "hopc/io.hpp"
#include "hopc/local_descriptor.hpp"
#include "hopc/pipeline.hpp"
#include "hopc/synth.hpp"

namespace fs = std::filesystem;
using namespace hopc;

namespace {

constexpr int kUsageError = 2;
constexpr int kDataError = 3;
constexpr const char* kVersion = "1.0.0";

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

CellGrid parse_grid(const std::string& text) {
  CellGrid g;
  char x1 = 0, x2 = 0;
  std::istringstream in(text);
  if (!(in >> g.nx >> x1 >> g.ny >> x2 >> g.nt) || x1 != 'x' || x2 != 'x' || !in.eof() || g.nx < 1 || g.ny < 1 ||
      g.nt < 1)
    throw UsageError("grid must look like 2x2x3, got '" + text + "'");
  return g;
}

std::set<int> parse_views(const std::string& text) {
  std::set<int> views;
  std::istringstream in(text);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    try {
      std::size_t used = 0;
      views.insert(std::stoi(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw UsageError("bad view list '" + text + "'");
    }
  }
  if (views.empty()) throw UsageError("empty view list");
  return views;
}

/// Parameters and provenance written into every output.
nlohmann::json reproducibility_header(const std::string& command, const PipelineParams& params, double r) {
  nlohmann::json h;
  h["tool"] = "hopc";
  h["version"] = kVersion;
  h["command"] = command;
  h["params"] = to_json(params);
  h["sigma"] = params.scale.sigma;
  h["seed"] = params.seed;
  h["r"] = r;
  return h;
}

void write_sidecar(const fs::path& out, const nlohmann::json& header) {
  std::ofstream f(out.string() + ".json");
  if (!f) throw Error(Errc::Io, "cannot write '" + out.string() + ".json'");
  f << header.dump(2) << '\n';
}

// Common pipeline options shared by several subcommands.
struct PipelineOptions {
  double sigma = 0.2;
  double radius = 0.0;
  double theta_stk = 1.3;
  std::size_t nk = 400;
  int tau_m = 0;
  int stride = 1;
  std::string grid = "2x2x3";
  double theta_l = 1.3;
  double theta_g = 1.3;
  std::size_t k = 1500;
  std::uint64_t seed = 0;
  double keep = 0.98;
  double c = 1.0;
  std::string mode = "combined";

  void add_detector(CLI::App* app) {
    app->add_option("--sigma", sigma, "support radius as a fraction of subject height")->capture_default_str();
    app->add_option("--r", radius, "explicit support radius (overrides --sigma)");
    app->add_option("--theta-stk", theta_stk, "eigenratio threshold for keypoints")->capture_default_str();
    app->add_option("--nk", nk, "maximum number of keypoints")->capture_default_str();
    app->add_option("--tau-m", tau_m, "largest temporal scale (0 = ceil(0.2 n_f))")->capture_default_str();
    app->add_option("--stride", stride, "candidate point stride")->capture_default_str();
  }
  void add_descriptor(CLI::App* app) {
    app->add_option("--grid", grid, "spatio-temporal cell grid NXxNYxNT")->capture_default_str();
    app->add_option("--theta-l", theta_l, "eigenratio threshold for Local HOPC")->capture_default_str();
    app->add_option("--theta-g", theta_g, "eigenratio threshold for STK-D")->capture_default_str();
  }
  void add_learning(CLI::App* app) {
    app->add_option("--k", k, "codebook size")->capture_default_str();
    app->add_option("--seed", seed, "random seed")->capture_default_str();
    app->add_option("--keep", keep, "fraction of codewords kept by F-score")->capture_default_str();
    app->add_option("--c", c, "SVM regularization")->capture_default_str();
    app->add_option("--mode", mode, "descriptor: combined, local or stkd")->capture_default_str();
  }

  PipelineParams params() const {
    PipelineParams p;
    p.scale.sigma = sigma;
    p.scale.max_temporal_scale = tau_m;
    p.radius = radius;
    p.detector.theta_stk = theta_stk;
    p.detector.max_keypoints = nk;
    p.detector.stride = stride;
    p.grid = parse_grid(grid);
    p.theta_l = theta_l;
    p.stkd.theta_g = theta_g;
    p.codebook_size = k;
    p.seed = seed;
    p.keep_fraction = keep;
    p.svm.c = c;
    try {
      p.mode = descriptor_mode_from_string(mode);
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
    return p;
  }
};

std::vector<fs::path> files_with_extension(const fs::path& dir, const std::string& ext) {
  if (!fs::is_directory(dir)) throw Error(Errc::Io, "'" + dir.string() + "' is not a directory");
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ext) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

struct LabelRow {
  int label = 0;
  int subject = 0;
  int view = 0;
};

// CSV: id,label[,subject,view]; '#' lines and a leading "id," header are skipped.
std::map<std::string, LabelRow> read_labels(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open '" + path.string() + "'");
  std::map<std::string, LabelRow> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#' || line.rfind("id,", 0) == 0) continue;
    std::vector<std::string> cells;
    std::istringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (cells.size() < 2) throw Error(Errc::Parse, path.string() + ":" + std::to_string(lineno) + ": expected id,label");
    LabelRow r;
    try {
      r.label = std::stoi(cells[1]);
      if (cells.size() > 2) r.subject = std::stoi(cells[2]);
      if (cells.size() > 3) r.view = std::stoi(cells[3]);
    } catch (const std::exception&) {
      throw Error(Errc::Parse, path.string() + ":" + std::to_string(lineno) + ": bad number");
    }
    out[cells[0]] = r;
  }
  return out;
}

std::vector<TaggedFeatures> load_tagged(const fs::path& dir, const std::map<std::string, LabelRow>& labels) {
  std::vector<TaggedFeatures> out;
  for (const auto& path : files_with_extension(dir, ".desc")) {
    const auto it = labels.find(path.stem().string());
    if (it == labels.end()) continue;
    TaggedFeatures t;
    t.id = it->first;
    t.label = it->second.label;
    t.subject = it->second.subject;
    t.view = it->second.view;
    t.features = decode_descriptors(read_file(path)).features;
    out.push_back(std::move(t));
  }
  if (out.empty()) throw Error(Errc::TooFewSamples, "no labelled descriptor files in '" + dir.string() + "'");
  return out;
}

std::string command_line(int argc, char** argv) {
  std::string s;
  for (int i = 0; i < argc; ++i) s += (i ? " " : "") + std::string(argv[i]);
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HOPC / Local HOPC / STK-D point cloud action recognition"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  const std::string cmdline = command_line(argc, argv);

  PipelineOptions opt;
  std::string in, out, stks_path, manifest, spec_path, model_path, descs, features, labels, codebook_path;
  std::string protocol = "cross-view", train_views = "0,1", test_views = "2", dataset;
  std::uint64_t synth_seed = 0;
  bool synth_seed_set = false;
  int holistic_tau = 2;
  bool synthetic = false;

  auto* convert_cmd = app.add_subcommand("convert", "depth frames listed in a manifest -> .pcseq");
  convert_cmd->add_option("--manifest", manifest, "sequence manifest (JSON)")->required();
  convert_cmd->add_option("--out", out, "output .pcseq")->required();

  auto* synth = app.add_subcommand("synth", "synthetic articulated-body sequence -> .pcseq");
  synth->add_option("--spec", spec_path, "synthesis spec (JSON)")->required();
  synth->add_option("--seed", synth_seed, "overrides the spec's seed")->each([&](const std::string&) {
    synth_seed_set = true;
  });
  synth->add_option("--out", out, "output .pcseq")->required();

  auto* detect_cmd = app.add_subcommand("detect", "spatio-temporal keypoints of a sequence");
  detect_cmd->add_option("--in", in, "input .pcseq")->required();
  detect_cmd->add_option("--out", out, "output keypoint file")->required();
  opt.add_detector(detect_cmd);

  auto* describe = app.add_subcommand("describe", "Local HOPC descriptors of detected keypoints");
  describe->add_option("--in", in, "input .pcseq")->required();
  describe->add_option("--stks", stks_path, "keypoint file from 'detect'")->required();
  describe->add_option("--out", out, "output descriptor file")->required();
  opt.add_descriptor(describe);

  auto* holistic = app.add_subcommand("holistic", "view-dependent whole-sequence HOPC");
  holistic->add_option("--in", in, "input .pcseq")->required();
  holistic->add_option("--out", out, "output descriptor file")->required();
  holistic->add_option("--tau", holistic_tau, "temporal half-window")->capture_default_str();
  holistic->add_option("--sigma", opt.sigma, "support radius as a fraction of subject height")->capture_default_str();
  holistic->add_option("--r", opt.radius, "explicit support radius");
  std::string holistic_grid = "6x5x3";
  holistic->add_option("--grid", holistic_grid, "cell grid NXxNYxNT")->capture_default_str();

  auto* codebook = app.add_subcommand("codebook", "k-means codebook over descriptor files");
  codebook->add_option("--descs", descs, "directory of .desc files")->required();
  codebook->add_option("--out", out, "output codebook")->required();
  codebook->add_option("--k", opt.k, "codebook size")->capture_default_str();
  codebook->add_option("--seed", opt.seed, "random seed")->capture_default_str();

  auto* train_cmd = app.add_subcommand("train", "F-score codeword selection and SVM training");
  train_cmd->add_option("--features", features, "directory of .desc files")->required();
  train_cmd->add_option("--labels", labels, "CSV id,label[,subject,view]")->required();
  train_cmd->add_option("--codebook", codebook_path, "codebook from 'codebook' (built from --features if absent)");
  train_cmd->add_option("--out", out, "output model")->required();
  opt.add_learning(train_cmd);
  train_cmd->add_option("--theta-g", opt.theta_g, "eigenratio threshold for STK-D")->capture_default_str();

  auto* classify_cmd = app.add_subcommand("classify", "label a sequence with a trained model");
  classify_cmd->add_option("--model", model_path, "model file")->required();
  classify_cmd->add_option("--in", in, "input .pcseq")->required();

  auto* evaluate = app.add_subcommand("evaluate", "cross-view evaluation");
  evaluate->add_option("--protocol", protocol, "evaluation protocol")->check(CLI::IsMember({"cross-view"}));
  evaluate->add_option("--train-views", train_views, "comma-separated training views")->capture_default_str();
  evaluate->add_option("--test-views", test_views, "comma-separated test views")->capture_default_str();
  evaluate->add_option("--dataset", dataset, "directory of .pcseq files (needs --labels)");
  evaluate->add_option("--labels", labels, "CSV id,label,subject,view for --dataset");
  evaluate->add_flag("--synthetic", synthetic, "use the built-in synthetic multi-view set");
  evaluate->add_option("--out", out, "report CSV")->required();
  opt.add_detector(evaluate);
  opt.add_descriptor(evaluate);
  opt.add_learning(evaluate);

  auto* ply = app.add_subcommand("export-ply", "keypoints as an ASCII PLY point set");
  ply->add_option("--stks", stks_path, "keypoint file")->required();
  ply->add_option("--out", out, "output .ply")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  try {
    if (*convert_cmd) {
      const auto m = load_manifest(manifest);
      const auto seq = convert(m);
      save_pcseq(out, seq);
      PipelineParams p;
      auto h = reproducibility_header(cmdline, p, 0.0);
      h["manifest"] = to_json(m);
      write_sidecar(out, h);
      std::cerr << "wrote " << seq.num_frames() << " frames, " << seq.num_points() << " points to " << out << '\n';
    } else if (*synth) {
      const Bytes text = read_file(spec_path);
      SynthSpec spec;
      try {
        spec = synth_spec_from_json(nlohmann::json::parse(text.begin(), text.end()));
      } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::Parse, "spec '" + spec_path + "': " + e.what());
      }
      if (synth_seed_set) spec.seed = synth_seed;
      const auto result = synth_generate(spec);
      save_pcseq(out, result.sequence);
      PipelineParams p;
      p.seed = spec.seed;
      auto h = reproducibility_header(cmdline, p, 0.0);
      h["synth"] = to_json(spec);
      write_sidecar(out, h);
    } else if (*detect_cmd) {
      const auto seq = load_pcseq(in);
      const PipelineParams p = opt.params();
      KeypointFile file;
      file.radius = resolve_radius(seq, p);
      DetectorParams det = p.detector;
      det.radius = file.radius;
      det.max_temporal_scale = p.scale.max_temporal_scale;
      file.stks = detect(seq, det);
      file.header = reproducibility_header(cmdline, p, file.radius);
      file.header["input"] = in;
      write_file(out, encode_keypoints(file));
      std::cerr << file.stks.size() << " keypoints\n";
    } else if (*describe) {
      const auto seq = load_pcseq(in);
      const auto kp = decode_keypoints(read_file(stks_path));
      PipelineParams p = kp.header.contains("params") ? pipeline_params_from_json(kp.header["params"]) : PipelineParams{};
      p.grid = parse_grid(opt.grid);
      p.theta_l = opt.theta_l;
      p.stkd.theta_g = opt.theta_g;
      for (const auto& s : kp.stks)
        if (s.frame >= seq.num_frames() || s.point_index >= seq.frames[s.frame].points.size())
          throw Error(Errc::LengthMismatch, "keypoint file does not belong to '" + in + "'");
      DescriptorFile file;
      file.features.radius = kp.radius;
      file.features.stks = kp.stks;
      file.features.local = describe_keypoints(seq, kp.stks, kp.radius, p.grid, p.theta_l);
      file.header = reproducibility_header(cmdline, p, kp.radius);
      file.header["input"] = in;
      write_file(out, encode_descriptors(file));
    } else if (*holistic) {
      const auto seq = load_pcseq(in);
      PipelineParams p = opt.params();
      p.grid = parse_grid(holistic_grid);
      DescriptorFile file;
      file.features.radius = resolve_radius(seq, p);
      const Eigen::VectorXd d = holistic_hopc(seq, p.grid, holistic_tau, file.features.radius);
      file.features.local = d.transpose();
      file.header = reproducibility_header(cmdline, p, file.features.radius);
      file.header["holistic_tau"] = holistic_tau;
      write_file(out, encode_descriptors(file));
    } else if (*codebook) {
      PipelineParams p = opt.params();
      std::vector<TaggedFeatures> all;
      for (const auto& path : files_with_extension(descs, ".desc")) {
        TaggedFeatures t;
        t.id = path.stem().string();
        t.features = decode_descriptors(read_file(path)).features;
        all.push_back(std::move(t));
      }
      if (all.empty()) throw Error(Errc::TooFewSamples, "no .desc files in '" + descs + "'");
      const CrossViewSplit split({0}, {});
      CodebookFile file;
      file.codebook = train_codebook(all, split, p);
      file.header = reproducibility_header(cmdline, p, all.front().features.radius);
      write_file(out, encode_codebook(file));
      std::cerr << "codebook " << file.codebook.size() << " x " << file.codebook.centroids.cols() << ", inertia "
                << file.codebook.inertia << '\n';
    } else if (*train_cmd) {
      PipelineParams p = opt.params();
      const auto rows = read_labels(labels);
      auto samples = load_tagged(features, rows);
      std::set<int> views;
      for (auto& s : samples) views.insert(s.view);
      const CrossViewSplit split(views, {});
      Codebook cb;
      if (!codebook_path.empty()) {
        cb = decode_codebook(read_file(codebook_path)).codebook;
        p.codebook_size = cb.size();
      } else {
        cb = train_codebook(samples, split, p);
      }
      const auto model = train_model(samples, split, cb, p);
      write_file(out, encode_model(model, reproducibility_header(cmdline, p, samples.front().features.radius)));
      std::cerr << "trained on " << samples.size() << " sequences, " << model.codebook.kept() << " codewords kept, "
                << model.classifier.support.rows() << " support vectors\n";
    } else if (*classify_cmd) {
      nlohmann::json header;
      const auto model = decode_model(read_file(model_path), &header);
      const auto seq = load_pcseq(in);
      const auto features = extract_features(seq, model.params);
      const auto pred = classify(model, features);
      auto h = reproducibility_header(cmdline, model.params, features.radius);
      std::cout << "# " << h.dump() << '\n';
      if (pred.rejected) {
        std::cout << "rejected: " << pred.diagnostic << '\n';
        return kDataError;
      }
      std::cout << "label " << pred.label << '\n';
      for (std::size_t i = 0; i < model.classifier.classes.size(); ++i)
        std::cout << "score " << model.classifier.classes[i] << ' ' << pred.scores(static_cast<Eigen::Index>(i))
                  << '\n';
    } else if (*evaluate) {
      const CrossViewSplit split(parse_views(train_views), parse_views(test_views));
      PipelineParams p = opt.params();
      std::vector<TaggedFeatures> samples;
      if (synthetic == !dataset.empty()) throw UsageError("give exactly one of --synthetic or --dataset");
      if (synthetic) {
        if (evaluate->count("--k") == 0) p.codebook_size = synthetic_benchmark_params().codebook_size;
        if (evaluate->count("--seed") == 0) p.seed = synthetic_benchmark_params().seed;
        samples = featurize(synthetic_benchmark(), p);
      } else {
        if (labels.empty()) throw UsageError("--dataset needs --labels");
        const auto rows = read_labels(labels);
        for (const auto& path : files_with_extension(dataset, ".pcseq")) {
          const auto it = rows.find(path.stem().string());
          if (it == rows.end()) continue;
          TaggedFeatures t;
          t.id = it->first;
          t.label = it->second.label;
          t.subject = it->second.subject;
          t.view = it->second.view;
          t.features = extract_features(load_pcseq(path), p);
          samples.push_back(std::move(t));
        }
      }
      const auto report = evaluate_cross_view(samples, split, p);
      std::ofstream csv(out);
      if (!csv) throw Error(Errc::Io, "cannot write '" + out + "'");
      csv << "# " << reproducibility_header(cmdline, p, samples.empty() ? 0.0 : samples.front().features.radius).dump()
          << '\n';
      csv << "# accuracy combined=" << report.accuracy_combined << " local=" << report.accuracy_local
          << " stkd=" << report.accuracy_stkd << '\n';
      csv << "id,view,label,predicted,mode\n";
      for (const auto& r : report.rows)
        csv << r.id << ',' << r.view << ',' << r.label << ',' << r.predicted << ',' << r.mode << '\n';
      std::cout << "accuracy combined " << report.accuracy_combined << " local " << report.accuracy_local
                << " stkd " << report.accuracy_stkd << '\n';
    } else if (*ply) {
      const auto kp = decode_keypoints(read_file(stks_path));
      write_ply(out, kp.stks);
      write_sidecar(out, kp.header);
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsageError;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == Errc::InvalidArgument || e.code() == Errc::BadSigma ? kUsageError : kDataError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  }
  return 0;
}
