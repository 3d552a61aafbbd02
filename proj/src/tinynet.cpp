#include "alplab/tinynet.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <random>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "alplab/errors.hpp"

namespace alplab {

// ---------------------------------------------------------------------------
// Tokenizer

Tokenizer::Tokenizer() : tokens_{"<unk>"} {}

std::vector<std::string> Tokenizer::split(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    unsigned char c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

Tokenizer Tokenizer::build(std::span<const std::string> texts) {
  std::set<std::string> seen;
  for (const auto& t : texts)
    for (auto& tok : split(t)) seen.insert(std::move(tok));
  return from_tokens({seen.begin(), seen.end()});
}

Tokenizer Tokenizer::from_tokens(std::vector<std::string> tokens) {
  Tokenizer t;
  for (auto& tok : tokens)
    if (tok != t.tokens_[0]) t.tokens_.push_back(std::move(tok));
  return t;
}

std::vector<int> Tokenizer::encode(std::string_view text) const {
  std::vector<int> ids;
  for (const auto& tok : split(text)) {
    auto it = std::lower_bound(tokens_.begin() + 1, tokens_.end(), tok);
    ids.push_back(it != tokens_.end() && *it == tok ? static_cast<int>(it - tokens_.begin())
                                                    : kUnk);
  }
  if (ids.empty()) ids.push_back(kUnk);
  return ids;
}

// ---------------------------------------------------------------------------
// ParamStore

std::size_t ParamStore::add_segment(std::string name, std::size_t rows, std::size_t cols) {
  for (const auto& s : segments_)
    if (s.name == name) throw ConfigError(fmt::format("duplicate segment '{}'", name));
  Segment seg{std::move(name), rows, cols, values_.size()};
  values_.resize(values_.size() + seg.size(), 0.0);
  segments_.push_back(std::move(seg));
  return segments_.back().offset;
}

const Segment& ParamStore::segment_info(std::string_view name) const {
  for (const auto& s : segments_)
    if (s.name == name) return s;
  throw ConfigError(fmt::format("no segment named '{}'", name));
}

std::span<double> ParamStore::segment(std::string_view name) {
  const auto& s = segment_info(name);
  return std::span<double>(values_).subspan(s.offset, s.size());
}

std::span<const double> ParamStore::segment(std::string_view name) const {
  const auto& s = segment_info(name);
  return std::span<const double>(values_).subspan(s.offset, s.size());
}

bool ParamStore::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

// ---------------------------------------------------------------------------
// CompetenceNet

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double bce_with_logit(double z, int outcome) {
  return std::max(z, 0.0) - outcome * z + std::log1p(std::exp(-std::abs(z)));
}

CompetenceNet::CompetenceNet(NetShape shape) : shape_(shape) {
  if (shape.vocab < 1 || shape.embed_dim < 1 || shape.hidden < 1)
    throw ConfigError("network dimensions must be positive");
}

ParamStore CompetenceNet::make_params(std::uint64_t seed, double scale) const {
  const auto V = static_cast<std::size_t>(shape_.vocab);
  const auto D = static_cast<std::size_t>(shape_.embed_dim);
  const auto H = static_cast<std::size_t>(shape_.hidden);
  ParamStore p;
  p.add_segment("embedding", V, D);
  p.add_segment("encoder.weight", D, D);
  p.add_segment("encoder.bias", 1, D);
  p.add_segment("head.weight", D, H);
  p.add_segment("head.bias", 1, H);
  p.add_segment("out.weight", 1, H);
  p.add_segment("out.bias", 1, 1);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  for (double& v : p.values()) v = u(rng);
  return p;
}

namespace {

// Forward activations for one goal, laid out for reuse in backprop.
struct Activations {
  std::vector<double> mean;    // D
  std::vector<double> latent;  // D, tanh
  std::vector<double> hidden;  // H, tanh
  double logit = 0.0;
};

struct Views {
  std::span<const double> emb, w1, b1, w2, b2, w3, b3;
  std::size_t D, H;
};

Views views(const ParamStore& p, const NetShape& s) {
  return {p.segment("embedding"),   p.segment("encoder.weight"), p.segment("encoder.bias"),
          p.segment("head.weight"), p.segment("head.bias"),      p.segment("out.weight"),
          p.segment("out.bias"),    static_cast<std::size_t>(s.embed_dim),
          static_cast<std::size_t>(s.hidden)};
}

void run_forward(const Views& w, std::span<const int> tokens, int vocab, Activations& a) {
  const std::size_t D = w.D, H = w.H;
  a.mean.assign(D, 0.0);
  a.latent.resize(D);
  a.hidden.resize(H);
  const int unk = Tokenizer::kUnk;
  const std::size_t n = tokens.empty() ? 1 : tokens.size();
  for (std::size_t t = 0; t < n; ++t) {
    int id = tokens.empty() ? unk : tokens[t];
    if (id < 0 || id >= vocab) id = unk;
    const double* row = w.emb.data() + static_cast<std::size_t>(id) * D;
    for (std::size_t i = 0; i < D; ++i) a.mean[i] += row[i];
  }
  const double inv = 1.0 / static_cast<double>(n);
  for (double& v : a.mean) v *= inv;

  // Weights are stored input-major (row j holds every output's weight from
  // input j) so the inner loops run over outputs and vectorize.
  std::copy(w.b1.begin(), w.b1.end(), a.latent.begin());
  for (std::size_t j = 0; j < D; ++j) {
    const double x = a.mean[j];
    const double* row = w.w1.data() + j * D;
    for (std::size_t i = 0; i < D; ++i) a.latent[i] += row[i] * x;
  }
  for (double& v : a.latent) v = std::tanh(v);
  std::copy(w.b2.begin(), w.b2.end(), a.hidden.begin());
  for (std::size_t j = 0; j < D; ++j) {
    const double x = a.latent[j];
    const double* row = w.w2.data() + j * H;
    for (std::size_t i = 0; i < H; ++i) a.hidden[i] += row[i] * x;
  }
  for (double& v : a.hidden) v = std::tanh(v);
  double z = w.b3[0];
  for (std::size_t i = 0; i < H; ++i) z += w.w3[i] * a.hidden[i];
  a.logit = z;
}

}  // namespace

double CompetenceNet::logit(const ParamStore& params, std::span<const int> tokens) const {
  thread_local Activations a;
  run_forward(views(params, shape_), tokens, shape_.vocab, a);
  return a.logit;
}

double CompetenceNet::forward(const ParamStore& params, std::span<const int> tokens) const {
  return sigmoid(logit(params, tokens));
}

void CompetenceNet::latent(const ParamStore& params, std::span<const int> tokens,
                           std::span<double> out) const {
  thread_local Activations a;
  run_forward(views(params, shape_), tokens, shape_.vocab, a);
  std::copy(a.latent.begin(), a.latent.end(), out.begin());
}

double CompetenceNet::accumulate_gradient(const ParamStore& params, std::span<const int> tokens,
                                          int outcome, double weight,
                                          std::span<double> grad) const {
  thread_local Activations a;
  thread_local std::vector<double> d_hidden, d_latent, d_mean;
  const Views w = views(params, shape_);
  run_forward(w, tokens, shape_.vocab, a);
  const std::size_t D = w.D, H = w.H;

  auto off = [&](std::string_view name) { return params.segment_info(name).offset; };
  double* g_emb = grad.data() + off("embedding");
  double* g_w1 = grad.data() + off("encoder.weight");
  double* g_b1 = grad.data() + off("encoder.bias");
  double* g_w2 = grad.data() + off("head.weight");
  double* g_b2 = grad.data() + off("head.bias");
  double* g_w3 = grad.data() + off("out.weight");
  double* g_b3 = grad.data() + off("out.bias");

  const double dz = weight * (sigmoid(a.logit) - outcome);
  g_b3[0] += dz;
  d_hidden.assign(H, 0.0);
  for (std::size_t i = 0; i < H; ++i) {
    g_w3[i] += dz * a.hidden[i];
    d_hidden[i] = dz * w.w3[i] * (1.0 - a.hidden[i] * a.hidden[i]);
  }
  for (std::size_t i = 0; i < H; ++i) g_b2[i] += d_hidden[i];
  d_latent.assign(D, 0.0);
  for (std::size_t j = 0; j < D; ++j) {
    const double x = a.latent[j];
    double* grow = g_w2 + j * H;
    const double* wrow = w.w2.data() + j * H;
    double acc = 0.0;
    for (std::size_t i = 0; i < H; ++i) {
      grow[i] += d_hidden[i] * x;
      acc += d_hidden[i] * wrow[i];
    }
    d_latent[j] = acc * (1.0 - x * x);
  }
  for (std::size_t i = 0; i < D; ++i) g_b1[i] += d_latent[i];
  d_mean.assign(D, 0.0);
  for (std::size_t j = 0; j < D; ++j) {
    const double x = a.mean[j];
    double* grow = g_w1 + j * D;
    const double* wrow = w.w1.data() + j * D;
    double acc = 0.0;
    for (std::size_t i = 0; i < D; ++i) {
      grow[i] += d_latent[i] * x;
      acc += d_latent[i] * wrow[i];
    }
    d_mean[j] = acc;
  }
  const std::size_t n = tokens.empty() ? 1 : tokens.size();
  const double inv = 1.0 / static_cast<double>(n);
  for (std::size_t t = 0; t < n; ++t) {
    int id = tokens.empty() ? Tokenizer::kUnk : tokens[t];
    if (id < 0 || id >= shape_.vocab) id = Tokenizer::kUnk;
    double* row = g_emb + static_cast<std::size_t>(id) * D;
    for (std::size_t j = 0; j < D; ++j) row[j] += d_mean[j] * inv;
  }
  return bce_with_logit(a.logit, outcome);
}

// ---------------------------------------------------------------------------
// Adam

Adam::Adam(std::size_t n, AdamConfig config) : config_(config), m_(n, 0.0), v_(n, 0.0) {}

void Adam::step(ParamStore& params, std::span<const double> grad) {
  auto values = params.values();
  if (grad.size() != values.size() || m_.size() != values.size())
    throw ConfigError("Adam state does not match the parameter shape");
  ++t_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  const double lr = config_.learning_rate;
  for (std::size_t i = 0; i < values.size(); ++i) {
    m_[i] = b1 * m_[i] + (1.0 - b1) * grad[i];
    v_[i] = b2 * v_[i] + (1.0 - b2) * grad[i] * grad[i];
    values[i] -= lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + config_.epsilon);
  }
  params.bump_version();
}

void Adam::restore(std::vector<double> m, std::vector<double> v, std::uint64_t t) {
  if (m.size() != v.size()) throw ConfigError("Adam moments differ in size");
  m_ = std::move(m);
  v_ = std::move(v);
  t_ = t;
}

double train_batch(const CompetenceNet& net, ParamStore& params, Adam& adam,
                   std::span<const TrainSample> batch) {
  if (batch.empty()) throw ValidationError("train_batch on an empty batch");
  for (const auto& s : batch)
    if (s.outcome != 0 && s.outcome != 1)
      throw ValidationError(fmt::format("outcome {} is not binary", s.outcome));
  std::vector<double> grad(params.size(), 0.0);
  const double w = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;
  for (const auto& s : batch) loss += net.accumulate_gradient(params, s.tokens, s.outcome, w, grad);
  adam.step(params, grad);
  return loss * w;
}

// ---------------------------------------------------------------------------
// Snapshots

Snapshot snapshot(const ParamStore& params, std::int64_t episode) {
  auto v = params.values();
  return Snapshot{params.segments(), {v.begin(), v.end()}, params.version(), episode};
}

ParamStore restore(const Snapshot& snap) {
  ParamStore p;
  for (const auto& s : snap.segments) p.add_segment(s.name, s.rows, s.cols);
  if (p.size() != snap.values.size()) throw ConfigError("snapshot segment table does not cover its values");
  std::copy(snap.values.begin(), snap.values.end(), p.values().begin());
  p.set_version(snap.version);
  return p;
}

void restore_into(ParamStore& params, const Snapshot& snap) {
  if (params.segments() != snap.segments || params.size() != snap.values.size())
    throw ConfigError("snapshot shape does not match the parameter store");
  std::copy(snap.values.begin(), snap.values.end(), params.values().begin());
  params.set_version(snap.version);
}

namespace {

constexpr char kMagic[8] = {'A', 'L', 'P', 'S', 'N', 'A', 'P', '\0'};

template <typename T>
void put_le(std::string& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  auto bytes = std::bit_cast<std::array<char, sizeof(T)>>(value);
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  out.append(bytes.data(), bytes.size());
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    std::array<char, sizeof(T)> raw;
    take(raw.data(), raw.size());
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw.begin(), raw.end());
    return std::bit_cast<T>(raw);
  }
  std::string get_string(std::size_t n) {
    std::string s(n, '\0');
    take(s.data(), n);
    return s;
  }
  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  void take(char* dst, std::size_t n) {
    if (bytes_.size() - pos_ < n) throw ValidationError("snapshot is truncated");
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_snapshot(const Snapshot& snap) {
  std::string out(kMagic, sizeof(kMagic));
  put_le<std::uint32_t>(out, kSnapshotFormatVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(snap.segments.size()));
  for (const auto& s : snap.segments) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.name.size()));
    out += s.name;
    put_le<std::uint64_t>(out, s.rows);
    put_le<std::uint64_t>(out, s.cols);
  }
  put_le<std::uint64_t>(out, snap.version);
  put_le<std::int64_t>(out, snap.episode);
  put_le<std::uint64_t>(out, snap.values.size());
  for (double v : snap.values) put_le<double>(out, v);
  return out;
}

Snapshot decode_snapshot(std::string_view bytes) {
  if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
    throw ValidationError("not a snapshot file (bad magic)");
  Reader r(bytes.substr(sizeof(kMagic)));
  const auto version = r.get<std::uint32_t>();
  if (version != kSnapshotFormatVersion)
    throw ValidationError(fmt::format("snapshot format version {} is not supported", version));
  Snapshot snap;
  const auto nseg = r.get<std::uint32_t>();
  std::size_t offset = 0;
  for (std::uint32_t i = 0; i < nseg; ++i) {
    Segment s;
    s.name = r.get_string(r.get<std::uint32_t>());
    s.rows = r.get<std::uint64_t>();
    s.cols = r.get<std::uint64_t>();
    s.offset = offset;
    offset += s.size();
    snap.segments.push_back(std::move(s));
  }
  snap.version = r.get<std::uint64_t>();
  snap.episode = r.get<std::int64_t>();
  const auto n = r.get<std::uint64_t>();
  if (n != offset) throw ValidationError("snapshot value count disagrees with its segment table");
  snap.values.resize(n);
  for (auto& v : snap.values) v = r.get<double>();
  if (!r.at_end()) throw ValidationError("trailing bytes after snapshot payload");
  return snap;
}

void write_snapshot(const std::filesystem::path& path, const Snapshot& snap) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(fmt::format("cannot write {}", path.string()));
  const auto bytes = encode_snapshot(snap);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError(fmt::format("write to {} failed", path.string()));
}

Snapshot read_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot read {}", path.string()));
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_snapshot(bytes);
}

}  // namespace alplab
