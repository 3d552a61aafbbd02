#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "alplab/errors.hpp"
#include "alplab/tinynet.hpp"
#include "helpers.hpp"

using namespace alplab;

TEST_CASE("tokenizer lowercases, splits on punctuation and maps unknowns") {
  CHECK(Tokenizer::split("Goal: Grow lion\nYou see: water, baby cow") ==
        std::vector<std::string>{"goal", "grow", "lion", "you", "see", "water", "baby", "cow"});
  const std::vector<std::string> texts{"Grasp bed", "grow LION"};
  const Tokenizer t = Tokenizer::build(texts);
  CHECK(t.tokens() == std::vector<std::string>{"<unk>", "bed", "grasp", "grow", "lion"});
  CHECK(t.encode("grow zebra") == std::vector<int>{3, Tokenizer::kUnk});
  CHECK(t.encode("") == std::vector<int>{Tokenizer::kUnk});
}

TEST_CASE("bce is stable at extreme logits") {
  CHECK(bce_with_logit(0.0, 1) == doctest::Approx(std::log(2.0)));
  CHECK(bce_with_logit(800.0, 1) == doctest::Approx(0.0));
  CHECK(bce_with_logit(800.0, 0) == doctest::Approx(800.0));
  CHECK(std::isfinite(bce_with_logit(-800.0, 1)));
  CHECK(sigmoid(-800.0) >= 0.0);
}

TEST_CASE("untrained network predicts about one half") {
  const CompetenceNet net(NetShape{30, 64, 128});
  const ParamStore p = net.make_params(1);
  const std::vector<int> tokens{1, 5, 7, 7, 29};
  CHECK(net.forward(p, tokens) == doctest::Approx(0.5).epsilon(0.05));
  CHECK(p.all_finite());
  CHECK(p.segment_info("embedding").rows == 30);
  CHECK(p.segment_info("head.weight").cols == 128);
}

TEST_CASE("gradients match central finite differences") {
  std::mt19937_64 rng(2024);
  int checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const NetShape shape{static_cast<int>(rng() % 8) + 3, static_cast<int>(rng() % 6) + 2,
                         static_cast<int>(rng() % 7) + 2};
    const CompetenceNet net(shape);
    ParamStore p = net.make_params(rng(), 0.8);
    std::vector<int> tokens(rng() % 6 + 1);
    for (auto& t : tokens) t = static_cast<int>(rng() % static_cast<std::uint64_t>(shape.vocab));
    const int y = static_cast<int>(rng() % 2);

    std::vector<double> grad(p.size(), 0.0);
    net.accumulate_gradient(p, tokens, y, 1.0, grad);
    auto values = p.values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double h = 1e-6, keep = values[i];
      values[i] = keep + h;
      const double up = bce_with_logit(net.logit(p, tokens), y);
      values[i] = keep - h;
      const double down = bce_with_logit(net.logit(p, tokens), y);
      values[i] = keep;
      const double fd = (up - down) / (2 * h);
      const double scale = std::max({std::abs(fd), std::abs(grad[i]), 1e-5});
      CHECK(std::abs(fd - grad[i]) / scale < 1e-4);
      ++checked;
    }
  }
  CHECK(checked > 1000);
}

TEST_CASE("first adam step moves each parameter by about the learning rate") {
  const CompetenceNet net(NetShape{6, 4, 5});
  ParamStore p = net.make_params(9, 0.3);
  const ParamStore before = p;
  const std::vector<int> tokens{1, 2, 3};
  std::vector<double> grad(p.size(), 0.0);
  net.accumulate_gradient(p, tokens, 1, 1.0, grad);

  Adam adam(p.size(), AdamConfig{1e-3});
  adam.step(p, grad);
  CHECK(p.version() == before.version() + 1);
  CHECK(adam.steps() == 1);
  for (std::size_t i = 0; i < p.size(); ++i) {
    // m_hat = g, v_hat = g^2, so the step is lr * g / (|g| + eps).
    const double expect = before.values()[i] - 1e-3 * grad[i] / (std::abs(grad[i]) + 1e-8);
    CHECK(p.values()[i] == doctest::Approx(expect).epsilon(1e-9));
  }
}

TEST_CASE("training separates two token patterns") {
  const CompetenceNet net(NetShape{4, 8, 16});
  ParamStore p = net.make_params(3);
  Adam adam(p.size(), AdamConfig{1e-2});
  const std::vector<int> pos{1, 2}, neg{1, 3};
  const std::vector<TrainSample> batch{{pos, 1}, {neg, 0}};
  double first = 0.0, last = 0.0;
  for (int i = 0; i < 300; ++i) {
    last = train_batch(net, p, adam, batch);
    if (i == 0) first = last;
  }
  CHECK(last < first);
  CHECK(net.forward(p, pos) > 0.9);
  CHECK(net.forward(p, neg) < 0.1);
  CHECK(p.version() == 300);

  const std::vector<TrainSample> bad{{pos, 2}};
  CHECK_THROWS_AS(train_batch(net, p, adam, bad), ValidationError);
  CHECK_THROWS_AS(train_batch(net, p, adam, std::span<const TrainSample>{}), ValidationError);
}

TEST_CASE("snapshots restore bit-exactly") {
  const CompetenceNet net(NetShape{12, 8, 16});
  ParamStore p = net.make_params(4);
  p.set_version(17);
  const Snapshot s = snapshot(p, 320);
  const Snapshot d = decode_snapshot(encode_snapshot(s));
  CHECK(d.version == 17);
  CHECK(d.episode == 320);
  CHECK(d.segments == s.segments);
  REQUIRE(d.values.size() == s.values.size());
  CHECK(std::memcmp(d.values.data(), s.values.data(), s.values.size() * sizeof(double)) == 0);

  const auto dir = test::scratch_dir("tinynet");
  write_snapshot(dir / "p.snap", s);
  const ParamStore q = restore(read_snapshot(dir / "p.snap"));
  CHECK(std::memcmp(q.values().data(), p.values().data(), p.size() * sizeof(double)) == 0);

  ParamStore other = CompetenceNet(NetShape{12, 8, 15}).make_params(4);
  CHECK_THROWS_AS(restore_into(other, s), ConfigError);

  std::string bytes = encode_snapshot(s);
  bytes[8] = 99;  // format version
  CHECK_THROWS_AS(decode_snapshot(bytes), ValidationError);
  CHECK_THROWS_AS(decode_snapshot(bytes.substr(0, 20)), ValidationError);
}
