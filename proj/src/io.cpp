#include "hopc/io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace hopc {

namespace {

constexpr char kPcseqMagic[4] = {'P', 'C', 'S', 'Q'};
constexpr std::uint32_t kPcseqVersion = 1;
constexpr char kKeypointMagic[8] = {'H', 'O', 'P', 'C', 'S', 'T', 'K', 'S'};
constexpr char kDescriptorMagic[8] = {'H', 'O', 'P', 'C', 'D', 'E', 'S', 'C'};
constexpr char kCodebookMagic[8] = {'H', 'O', 'P', 'C', 'C', 'B', 'O', 'K'};
constexpr char kModelMagic[8] = {'H', 'O', 'P', 'C', 'M', 'O', 'D', 'L'};
constexpr std::uint32_t kContainerVersion = 1;

class Writer {
 public:
  Bytes bytes;

  void raw(const char* data, std::size_t n) { bytes.insert(bytes.end(), data, data + n); }
  void u8(std::uint8_t v) { bytes.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void count(std::size_t n, const char* what) {
    if (n > 0xffffffffu) throw Error(Errc::InvalidArgument, std::string(what) + " too large for the file format");
    u32(static_cast<std::uint32_t>(n));
  }
  void string(const std::string& s) {
    count(s.size(), "string");
    raw(s.data(), s.size());
  }
};

class Reader {
 public:
  explicit Reader(const Bytes& b) : bytes_(b) {}

  std::uint64_t offset() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }
  void set_frame(std::optional<std::size_t> f) { frame_ = f; }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, pos_, frame_); }

  void need(std::uint64_t n, const char* what) const {
    if (remaining() < n) fail(std::string("truncated ") + what);
  }

  void magic(const char* expected, std::size_t n) {
    need(n, "magic");
    if (std::memcmp(bytes_.data() + pos_, expected, n) != 0) fail("bad magic");
    pos_ += n;
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return bytes_[pos_++];
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + static_cast<std::size_t>(i)]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + static_cast<std::size_t>(i)]) << (8 * i);
    pos_ += 8;
    return v;
  }
  std::int32_t i32(const char* what) { return static_cast<std::int32_t>(u32(what)); }
  float f32(const char* what) { return std::bit_cast<float>(u32(what)); }
  double f64(const char* what) { return std::bit_cast<double>(u64(what)); }
  double finite_f64(const char* what) {
    const auto at = pos_;
    const double v = f64(what);
    if (!std::isfinite(v)) throw ParseError(std::string("non-finite ") + what, at, frame_);
    return v;
  }
  double finite_f32(const char* what) {
    const auto at = pos_;
    const float v = f32(what);
    if (!std::isfinite(v)) throw ParseError(std::string("non-finite ") + what, at, frame_);
    return static_cast<double>(v);
  }
  std::string string(const char* what) {
    const std::uint32_t n = u32(what);
    need(n, what);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  void finish() const {
    if (remaining() != 0) fail("trailing bytes");
  }

 private:
  const Bytes& bytes_;
  std::uint64_t pos_ = 0;
  std::optional<std::size_t> frame_;
};

void begin_container(Writer& w, const char (&magic)[8], const nlohmann::json& header) {
  w.raw(magic, 8);
  w.u32(kContainerVersion);
  w.string(header.is_null() ? std::string("{}") : header.dump());
}

nlohmann::json open_container(Reader& r, const char (&magic)[8]) {
  r.magic(magic, 8);
  const auto at = r.offset();
  if (r.u32("version") != kContainerVersion) throw ParseError("unsupported version", at);
  const auto json_at = r.offset();
  const std::string text = r.string("header");
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed header: ") + e.what(), json_at);
  }
}

std::uint32_t read_dim(Reader& r, const char* what, std::uint64_t element_bytes, std::uint64_t per_row = 1) {
  const std::uint32_t n = r.u32(what);
  r.need(static_cast<std::uint64_t>(n) * element_bytes * per_row, what);
  return n;
}

void write_matrix_f64(Writer& w, const SampleMatrix& m) {
  w.count(static_cast<std::size_t>(m.rows()), "matrix");
  w.count(static_cast<std::size_t>(m.cols()), "matrix");
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) w.f64(m(i, j));
}

SampleMatrix read_matrix_f64(Reader& r, const char* what) {
  const std::uint32_t rows = r.u32(what);
  const std::uint32_t cols = r.u32(what);
  r.need(std::uint64_t{rows} * cols * 8, what);
  SampleMatrix m(rows, cols);
  for (std::uint32_t i = 0; i < rows; ++i)
    for (std::uint32_t j = 0; j < cols; ++j) m(i, j) = r.finite_f64(what);
  return m;
}

void write_matrix_f32(Writer& w, const SampleMatrix& m) {
  w.count(static_cast<std::size_t>(m.rows()), "matrix");
  w.count(static_cast<std::size_t>(m.cols()), "matrix");
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) w.f32(static_cast<float>(m(i, j)));
}

SampleMatrix read_matrix_f32(Reader& r, const char* what) {
  const std::uint32_t rows = r.u32(what);
  const std::uint32_t cols = r.u32(what);
  r.need(std::uint64_t{rows} * cols * 4, what);
  SampleMatrix m(rows, cols);
  for (std::uint32_t i = 0; i < rows; ++i)
    for (std::uint32_t j = 0; j < cols; ++j) m(i, j) = r.finite_f32(what);
  return m;
}

void write_basis(Writer& w, const EigenBasisd& b) {
  for (int i = 0; i < 3; ++i) w.f64(b.values(i));
  for (int j = 0; j < 3; ++j)
    for (int i = 0; i < 3; ++i) w.f64(b.vectors(i, j));
  for (int i = 0; i < 3; ++i) w.f64(b.mean(i));
  for (int i = 0; i < 3; ++i) w.f64(b.sign_scores(i));
  w.u8(b.degenerate ? 1 : 0);
}

EigenBasisd read_basis(Reader& r) {
  EigenBasisd b;
  for (int i = 0; i < 3; ++i) b.values(i) = r.finite_f64("eigenvalue");
  for (int j = 0; j < 3; ++j)
    for (int i = 0; i < 3; ++i) b.vectors(i, j) = r.finite_f64("eigenvector");
  for (int i = 0; i < 3; ++i) b.mean(i) = r.finite_f64("mean");
  for (int i = 0; i < 3; ++i) b.sign_scores(i) = r.finite_f64("sign score");
  b.degenerate = r.u8("flag") != 0;
  return b;
}

constexpr std::uint64_t kStkBytes = 4 + 4 + 24 + 4 + 8 + 2 * (8 * 18 + 1);

void write_stks(Writer& w, const std::vector<StkRecord>& stks) {
  w.count(stks.size(), "keypoint list");
  for (const auto& s : stks) {
    w.u32(s.frame);
    w.u32(s.point_index);
    for (int i = 0; i < 3; ++i) w.f64(s.position(i));
    w.i32(s.tau);
    w.f64(s.quality);
    write_basis(w, s.spatial);
    write_basis(w, s.spatiotemporal);
  }
}

std::vector<StkRecord> read_stks(Reader& r) {
  const std::uint32_t n = read_dim(r, "keypoint list", kStkBytes);
  std::vector<StkRecord> stks(n);
  for (auto& s : stks) {
    s.frame = r.u32("frame");
    s.point_index = r.u32("point index");
    for (int i = 0; i < 3; ++i) s.position(i) = r.finite_f64("position");
    s.tau = r.i32("tau");
    s.quality = r.finite_f64("quality");
    s.spatial = read_basis(r);
    s.spatiotemporal = read_basis(r);
  }
  return stks;
}

}  // namespace

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open '" + path.string() + "'");
  Bytes bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(Errc::Io, "cannot read '" + path.string() + "'");
  return bytes;
}

void write_file(const std::filesystem::path& path, const Bytes& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::Io, "cannot create '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::Io, "cannot write '" + path.string() + "'");
}

Bytes encode_pcseq(const PointCloudSequence& seq) {
  Writer w;
  w.raw(kPcseqMagic, 4);
  w.u32(kPcseqVersion);
  w.count(seq.num_frames(), "frame list");
  for (const auto& f : seq.frames) {
    w.count(f.points.size(), "frame");
    for (const auto& p : f.points)
      for (int i = 0; i < 3; ++i) {
        if (!std::isfinite(p(i))) throw Error(Errc::InvalidArgument, "non-finite coordinate");
        w.f32(static_cast<float>(p(i)));
      }
  }
  return std::move(w.bytes);
}

PointCloudSequence decode_pcseq(const Bytes& bytes) {
  Reader r(bytes);
  r.magic(kPcseqMagic, 4);
  const auto at = r.offset();
  if (r.u32("version") != kPcseqVersion) throw ParseError("unsupported version", at);
  const std::uint32_t frames = read_dim(r, "frame count", 4);
  PointCloudSequence seq;
  seq.frames.resize(frames);
  for (std::uint32_t f = 0; f < frames; ++f) {
    r.set_frame(f);
    const std::uint32_t n = read_dim(r, "frame", 12);
    auto& pts = seq.frames[f].points;
    pts.resize(n);
    for (auto& p : pts)
      for (int i = 0; i < 3; ++i) p(i) = r.finite_f32("coordinate");
  }
  r.set_frame(std::nullopt);
  r.finish();
  return seq;
}

void save_pcseq(const std::filesystem::path& path, const PointCloudSequence& seq) {
  write_file(path, encode_pcseq(seq));
}

PointCloudSequence load_pcseq(const std::filesystem::path& path) { return decode_pcseq(read_file(path)); }

Bytes encode_keypoints(const KeypointFile& file) {
  Writer w;
  begin_container(w, kKeypointMagic, file.header);
  w.f64(file.radius);
  write_stks(w, file.stks);
  return std::move(w.bytes);
}

KeypointFile decode_keypoints(const Bytes& bytes) {
  Reader r(bytes);
  KeypointFile file;
  file.header = open_container(r, kKeypointMagic);
  file.radius = r.finite_f64("radius");
  file.stks = read_stks(r);
  r.finish();
  return file;
}

Bytes encode_descriptors(const DescriptorFile& file) {
  Writer w;
  begin_container(w, kDescriptorMagic, file.header);
  w.f64(file.features.radius);
  write_stks(w, file.features.stks);
  write_matrix_f64(w, file.features.local);
  return std::move(w.bytes);
}

DescriptorFile decode_descriptors(const Bytes& bytes) {
  Reader r(bytes);
  DescriptorFile file;
  file.header = open_container(r, kDescriptorMagic);
  file.features.radius = r.finite_f64("radius");
  file.features.stks = read_stks(r);
  file.features.local = read_matrix_f64(r, "descriptor matrix");
  r.finish();
  return file;
}

Bytes encode_codebook(const CodebookFile& file) {
  Writer w;
  begin_container(w, kCodebookMagic, file.header);
  const Codebook& cb = file.codebook;
  w.u64(cb.seed);
  w.f64(cb.inertia);
  w.i32(cb.iterations);
  w.count(cb.inertia_history.size(), "inertia history");
  for (const double v : cb.inertia_history) w.f64(v);
  write_matrix_f64(w, cb.centroids);
  w.count(cb.keep.size(), "keep mask");
  for (const auto k : cb.keep) w.u8(k);
  return std::move(w.bytes);
}

CodebookFile decode_codebook(const Bytes& bytes) {
  Reader r(bytes);
  CodebookFile file;
  file.header = open_container(r, kCodebookMagic);
  Codebook& cb = file.codebook;
  cb.seed = r.u64("seed");
  cb.inertia = r.finite_f64("inertia");
  cb.iterations = r.i32("iterations");
  const std::uint32_t h = read_dim(r, "inertia history", 8);
  cb.inertia_history.resize(h);
  for (auto& v : cb.inertia_history) v = r.finite_f64("inertia");
  cb.centroids = read_matrix_f64(r, "centroids");
  const auto keep_at = r.offset();
  const std::uint32_t k = read_dim(r, "keep mask", 1);
  if (k != 0 && k != cb.centroids.rows()) throw ParseError("keep mask does not match the codebook size", keep_at);
  cb.keep.resize(k);
  for (auto& v : cb.keep) v = r.u8("keep mask");
  r.finish();
  return file;
}

Bytes encode_model(const RecognitionModel& model, const nlohmann::json& header) {
  Writer w;
  nlohmann::json h = header.is_null() ? nlohmann::json::object() : header;
  h["params"] = to_json(model.params);
  begin_container(w, kModelMagic, h);
  write_matrix_f32(w, model.codebook.centroids);
  w.count(model.codebook.keep.size(), "keep mask");
  for (const auto k : model.codebook.keep) w.u8(k);

  const KernelModel& c = model.classifier;
  w.count(c.classes.size(), "class list");
  for (const int label : c.classes) w.i32(label);
  write_matrix_f32(w, c.support);
  SampleMatrix coef = c.coef;
  write_matrix_f32(w, coef);
  w.count(static_cast<std::size_t>(c.bias.size()), "bias");
  for (Eigen::Index i = 0; i < c.bias.size(); ++i) w.f32(static_cast<float>(c.bias(i)));
  w.f64(c.c);
  return std::move(w.bytes);
}

RecognitionModel decode_model(const Bytes& bytes, nlohmann::json* header) {
  Reader r(bytes);
  const auto header_at = r.offset();
  nlohmann::json h = open_container(r, kModelMagic);
  RecognitionModel model;
  try {
    model.params = pipeline_params_from_json(h.value("params", nlohmann::json::object()));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad model parameters: ") + e.what(), header_at);
  }
  model.codebook.centroids = read_matrix_f32(r, "centroids");
  model.codebook.seed = model.params.seed;
  const auto keep_at = r.offset();
  const std::uint32_t k = read_dim(r, "keep mask", 1);
  if (k != model.codebook.centroids.rows()) throw ParseError("keep mask does not match the codebook size", keep_at);
  model.codebook.keep.resize(k);
  for (auto& v : model.codebook.keep) v = r.u8("keep mask");

  KernelModel& c = model.classifier;
  const auto classes_at = r.offset();
  const std::uint32_t nc = read_dim(r, "class list", 4);
  if (nc == 0) throw ParseError("model has no classes", classes_at);
  c.classes.resize(nc);
  for (auto& label : c.classes) label = r.i32("class label");
  const auto sv_at = r.offset();
  c.support = read_matrix_f32(r, "support vectors");
  const auto coef_at = r.offset();
  const SampleMatrix coef = read_matrix_f32(r, "coefficients");
  if (coef.rows() != nc || coef.cols() != c.support.rows())
    throw ParseError("coefficient matrix does not match the support set", coef_at);
  if (c.support.rows() > 0 && c.support.cols() != static_cast<Eigen::Index>(model.codebook.kept()) &&
      model.params.mode == DescriptorMode::LocalOnly)
    throw ParseError("support vectors do not match the kept codewords", sv_at);
  c.coef = coef;
  const auto bias_at = r.offset();
  const std::uint32_t nb = read_dim(r, "bias", 4);
  if (nb != nc) throw ParseError("bias does not match the class list", bias_at);
  c.bias.resize(nb);
  for (std::uint32_t i = 0; i < nb; ++i) c.bias(i) = r.finite_f32("bias");
  c.c = r.finite_f64("C");
  r.finish();
  if (header) *header = std::move(h);
  return model;
}

void write_ply(const std::filesystem::path& path, const std::vector<StkRecord>& stks) {
  std::ostringstream out;
  out << "ply\nformat ascii 1.0\nelement vertex " << stks.size()
      << "\nproperty float x\nproperty float y\nproperty float z\n"
         "property int frame\nproperty int tau\nproperty float quality\nend_header\n";
  out << std::setprecision(9);
  for (const auto& s : stks)
    out << s.position.x() << ' ' << s.position.y() << ' ' << s.position.z() << ' ' << s.frame << ' ' << s.tau
        << ' ' << s.quality << '\n';
  const std::string text = out.str();
  write_file(path, Bytes(text.begin(), text.end()));
}

}  // namespace hopc
