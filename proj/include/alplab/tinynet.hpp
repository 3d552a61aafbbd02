#pragma once

// Small from-scratch network for goal-conditioned success prediction:
//
//   tokens -> mean embedding -> dense+tanh (latent) -> dense(128)+tanh -> sigmoid
//
// Parameters live in one flat array so they can be snapshotted, diffed and
// written to disk without per-layer bookkeeping.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace alplab {

class Tokenizer {
 public:
  static constexpr int kUnk = 0;

  Tokenizer();
  // Vocabulary is the sorted set of tokens seen in `texts`, after UNK.
  static Tokenizer build(std::span<const std::string> texts);
  static Tokenizer from_tokens(std::vector<std::string> tokens);

  // Lowercased alphanumeric runs.
  static std::vector<std::string> split(std::string_view text);

  // Unknown tokens map to UNK; empty text encodes as a single UNK.
  std::vector<int> encode(std::string_view text) const;
  int size() const { return static_cast<int>(tokens_.size()); }
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::vector<std::string> tokens_;  // tokens_[0] == "<unk>"
};

struct Segment {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t offset = 0;

  std::size_t size() const { return rows * cols; }
  bool operator==(const Segment&) const = default;
};

class ParamStore {
 public:
  ParamStore() = default;

  // Only valid before any values are read; shapes are fixed afterwards.
  std::size_t add_segment(std::string name, std::size_t rows, std::size_t cols);

  std::span<double> segment(std::string_view name);
  std::span<const double> segment(std::string_view name) const;
  const Segment& segment_info(std::string_view name) const;
  const std::vector<Segment>& segments() const { return segments_; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }

  std::uint64_t version() const { return version_; }
  void bump_version() { ++version_; }
  void set_version(std::uint64_t v) { version_ = v; }

  bool all_finite() const;

 private:
  std::vector<Segment> segments_;
  std::vector<double> values_;
  std::uint64_t version_ = 0;
};

struct NetShape {
  int vocab = 1;
  int embed_dim = 64;
  int hidden = 128;
};

class CompetenceNet {
 public:
  explicit CompetenceNet(NetShape shape);

  const NetShape& shape() const { return shape_; }

  // Uniform [-scale, scale] init from a seeded engine.
  ParamStore make_params(std::uint64_t seed, double scale = 0.05) const;

  double logit(const ParamStore& params, std::span<const int> tokens) const;
  double forward(const ParamStore& params, std::span<const int> tokens) const;
  // Encoder output (embed_dim values).
  void latent(const ParamStore& params, std::span<const int> tokens, std::span<double> out) const;

  // Adds d BCE(outcome, forward) / d params into `grad`, scaled by `weight`.
  // Returns the unscaled loss.
  double accumulate_gradient(const ParamStore& params, std::span<const int> tokens, int outcome,
                             double weight, std::span<double> grad) const;

 private:
  NetShape shape_;
};

// Stable log(1 + e^z) - y z.
double bce_with_logit(double z, int outcome);
double sigmoid(double z);

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class Adam {
 public:
  Adam() = default;
  Adam(std::size_t n, AdamConfig config);

  void step(ParamStore& params, std::span<const double> grad);

  const AdamConfig& config() const { return config_; }
  std::uint64_t steps() const { return t_; }
  std::span<const double> first_moment() const { return m_; }
  std::span<const double> second_moment() const { return v_; }
  void restore(std::vector<double> m, std::vector<double> v, std::uint64_t t);

 private:
  AdamConfig config_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::uint64_t t_ = 0;
};

struct TrainSample {
  std::span<const int> tokens;
  int outcome = 0;
};

// One Adam step on the mean BCE of the batch. Returns the pre-step mean
// loss. Throws ValidationError for non-binary outcomes or an empty batch.
double train_batch(const CompetenceNet& net, ParamStore& params, Adam& adam,
                   std::span<const TrainSample> batch);

struct Snapshot {
  std::vector<Segment> segments;
  std::vector<double> values;
  std::uint64_t version = 0;
  std::int64_t episode = 0;
};

Snapshot snapshot(const ParamStore& params, std::int64_t episode = 0);
ParamStore restore(const Snapshot& snap);
// Overwrites values in place; throws ConfigError when shapes differ.
void restore_into(ParamStore& params, const Snapshot& snap);

inline constexpr std::uint32_t kSnapshotFormatVersion = 1;

// Versioned binary container: magic "ALPSNAP\0", format version, segment
// table (name, rows, cols), version, episode, then little-endian doubles.
void write_snapshot(const std::filesystem::path& path, const Snapshot& snap);
Snapshot read_snapshot(const std::filesystem::path& path);
std::string encode_snapshot(const Snapshot& snap);
Snapshot decode_snapshot(std::string_view bytes);

}  // namespace alplab
