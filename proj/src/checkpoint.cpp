#include <cstring>
#include <fstream>
#include <string>

#include "sagefin/model.hpp"

// Versioned binary container for a whole model: config, every parameter
// tensor, batch-norm running statistics, optimizer state and seeds. The
// payload is raw little-endian doubles so a round-trip reproduces forward
// outputs bit for bit.

namespace sagefin {

namespace {

constexpr char kMagic[8] = {'S', 'F', 'I', 'N', 'C', 'K', 'P', '1'};

struct Writer {
  std::ofstream out;

  explicit Writer(const std::string& path) : out(path, std::ios::binary) {
    if (!out) throw IoError("cannot open checkpoint for writing: " + path);
  }
  void bytes(const void* p, std::size_t n) {
    out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    if (!out) throw IoError("checkpoint write failed");
  }
  void i64(std::int64_t x) { bytes(&x, sizeof x); }
  void u64(std::uint64_t x) { bytes(&x, sizeof x); }
  void u8(std::uint8_t x) { bytes(&x, sizeof x); }
  void f64(double x) { bytes(&x, sizeof x); }
  void matrix(const Matrix& m) {
    i64(m.rows());
    i64(m.cols());
    // Column-major storage order is Eigen's default; written as-is.
    bytes(m.data(), sizeof(double) * static_cast<std::size_t>(m.size()));
  }
  void rowvec(const RowVector& v) {
    i64(v.size());
    bytes(v.data(), sizeof(double) * static_cast<std::size_t>(v.size()));
  }
};

struct Reader {
  std::ifstream in;

  explicit Reader(const std::string& path) : in(path, std::ios::binary) {
    if (!in) throw IoError("cannot open checkpoint: " + path);
  }
  void bytes(void* p, std::size_t n) {
    in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (!in) throw IoError("checkpoint truncated or unreadable");
  }
  std::int64_t i64() { std::int64_t x; bytes(&x, sizeof x); return x; }
  std::uint64_t u64() { std::uint64_t x; bytes(&x, sizeof x); return x; }
  std::uint8_t u8() { std::uint8_t x; bytes(&x, sizeof x); return x; }
  double f64() { double x; bytes(&x, sizeof x); return x; }
  Matrix matrix() {
    const Index rows = static_cast<Index>(i64());
    const Index cols = static_cast<Index>(i64());
    if (rows < 0 || cols < 0) throw IoError("checkpoint matrix header corrupt");
    Matrix m(rows, cols);
    bytes(m.data(), sizeof(double) * static_cast<std::size_t>(m.size()));
    return m;
  }
  RowVector rowvec() {
    const Index n = static_cast<Index>(i64());
    if (n < 0) throw IoError("checkpoint vector header corrupt");
    RowVector v(n);
    bytes(v.data(), sizeof(double) * static_cast<std::size_t>(v.size()));
    return v;
  }
};

void write_linear(Writer& w, const LinearParams& p) {
  w.matrix(p.w);
  w.rowvec(p.b);
  w.matrix(p.m_w);
  w.matrix(p.v_w);
  w.rowvec(p.m_b);
  w.rowvec(p.v_b);
}

LinearParams read_linear(Reader& r) {
  LinearParams p;
  p.w = r.matrix();
  p.b = r.rowvec();
  p.m_w = r.matrix();
  p.v_w = r.matrix();
  p.m_b = r.rowvec();
  p.v_b = r.rowvec();
  return p;
}

void write_batchnorm(Writer& w, const BatchNormParams& p) {
  w.rowvec(p.gamma);
  w.rowvec(p.beta);
  w.rowvec(p.running_mean);
  w.rowvec(p.running_var);
  w.f64(p.momentum);
  w.f64(p.epsilon);
  w.rowvec(p.m_gamma);
  w.rowvec(p.v_gamma);
  w.rowvec(p.m_beta);
  w.rowvec(p.v_beta);
}

BatchNormParams read_batchnorm(Reader& r) {
  BatchNormParams p;
  p.gamma = r.rowvec();
  p.beta = r.rowvec();
  p.running_mean = r.rowvec();
  p.running_var = r.rowvec();
  p.momentum = r.f64();
  p.epsilon = r.f64();
  p.m_gamma = r.rowvec();
  p.v_gamma = r.rowvec();
  p.m_beta = r.rowvec();
  p.v_beta = r.rowvec();
  return p;
}

void write_conv(Writer& w, const BeanConvParams& p) {
  w.u8(static_cast<std::uint8_t>(p.aggregator));
  w.u8(p.post ? 1 : 0);
  write_linear(w, p.u_lin);
  write_linear(w, p.v_lin);
  write_linear(w, p.e_lin);
  write_batchnorm(w, p.u_bn);
  write_batchnorm(w, p.v_bn);
  write_batchnorm(w, p.e_bn);
}

BeanConvParams read_conv(Reader& r) {
  BeanConvParams p;
  p.aggregator = static_cast<Aggregator>(r.u8());
  p.post = r.u8() != 0;
  p.u_lin = read_linear(r);
  p.v_lin = read_linear(r);
  p.e_lin = read_linear(r);
  p.u_bn = read_batchnorm(r);
  p.v_bn = read_batchnorm(r);
  p.e_bn = read_batchnorm(r);
  return p;
}

void write_mlp(Writer& w, const Mlp& m) {
  w.i64(static_cast<std::int64_t>(m.layers.size()));
  for (const auto& layer : m.layers) write_linear(w, layer);
}

Mlp read_mlp(Reader& r) {
  Mlp m;
  const std::int64_t n = r.i64();
  for (std::int64_t i = 0; i < n; ++i) m.layers.push_back(read_linear(r));
  return m;
}

void write_scaler(Writer& w, const FeatureScaler& s) {
  w.rowvec(s.mean);
  w.rowvec(s.stddev);
}

FeatureScaler read_scaler(Reader& r) {
  FeatureScaler s;
  s.mean = r.rowvec();
  s.stddev = r.rowvec();
  return s;
}

}  // namespace

void save_checkpoint(const SageFinModel& model, const std::string& path) {
  Writer w(path);
  w.bytes(kMagic, sizeof kMagic);

  const SageFinConfig& c = model.config;
  w.i64(c.conv_layers);
  w.i64(c.hidden_dim);
  w.i64(c.latent_dim);
  w.i64(c.mlp_depth);
  w.i64(c.negative_ratio);
  w.f64(c.lambda_feature);
  w.f64(c.lambda_structure);
  w.f64(c.lambda_class);
  w.u8(static_cast<std::uint8_t>(c.aggregator));
  w.u8(c.reconstruct_edge_features ? 1 : 0);
  w.u64(c.seed);

  w.i64(model.input_dims.u);
  w.i64(model.input_dims.v);
  w.i64(model.input_dims.e);

  w.f64(model.adam.learning_rate);
  w.f64(model.adam.beta1);
  w.f64(model.adam.beta2);
  w.f64(model.adam.epsilon);
  w.i64(model.adam.t);
  w.u64(model.split_seed);
  w.u8(model.trained ? 1 : 0);

  write_scaler(w, model.u_scaler);
  write_scaler(w, model.v_scaler);
  write_scaler(w, model.e_scaler);

  w.i64(static_cast<std::int64_t>(model.encoder.size()));
  for (const auto& layer : model.encoder) write_conv(w, layer);
  w.i64(static_cast<std::int64_t>(model.decoder.size()));
  for (const auto& layer : model.decoder) write_conv(w, layer);
  write_mlp(w, model.structure_decoder);
  write_mlp(w, model.u_classifier);
  write_mlp(w, model.v_classifier);
}

SageFinModel load_checkpoint(const std::string& path) {
  Reader r(path);
  char magic[8];
  r.bytes(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw IoError("not a sagefin checkpoint: " + path);
  }

  SageFinModel m;
  SageFinConfig& c = m.config;
  c.conv_layers = static_cast<int>(r.i64());
  c.hidden_dim = static_cast<int>(r.i64());
  c.latent_dim = static_cast<int>(r.i64());
  c.mlp_depth = static_cast<int>(r.i64());
  c.negative_ratio = static_cast<int>(r.i64());
  c.lambda_feature = r.f64();
  c.lambda_structure = r.f64();
  c.lambda_class = r.f64();
  c.aggregator = static_cast<Aggregator>(r.u8());
  c.reconstruct_edge_features = r.u8() != 0;
  c.seed = r.u64();

  m.input_dims.u = static_cast<Index>(r.i64());
  m.input_dims.v = static_cast<Index>(r.i64());
  m.input_dims.e = static_cast<Index>(r.i64());

  m.adam.learning_rate = r.f64();
  m.adam.beta1 = r.f64();
  m.adam.beta2 = r.f64();
  m.adam.epsilon = r.f64();
  m.adam.t = static_cast<long>(r.i64());
  m.split_seed = r.u64();
  m.trained = r.u8() != 0;

  m.u_scaler = read_scaler(r);
  m.v_scaler = read_scaler(r);
  m.e_scaler = read_scaler(r);

  const std::int64_t n_enc = r.i64();
  for (std::int64_t i = 0; i < n_enc; ++i) m.encoder.push_back(read_conv(r));
  const std::int64_t n_dec = r.i64();
  for (std::int64_t i = 0; i < n_dec; ++i) m.decoder.push_back(read_conv(r));
  m.structure_decoder = read_mlp(r);
  m.u_classifier = read_mlp(r);
  m.v_classifier = read_mlp(r);
  return m;
}

}  // namespace sagefin
