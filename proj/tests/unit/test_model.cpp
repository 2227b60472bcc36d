#include <nlohmann/json.hpp>

#include "helpers.hpp"
#include "oracles.hpp"
#include "smarthand/model.hpp"

using namespace smarthand;
using nn::LayerKind;
using testutil::error_kind;

namespace {

nn::ModelGraph two_node_graph(nn::LayerSpec input, nn::LayerSpec layer) {
  nn::ModelGraph g;
  layer.inputs = {0};
  g.nodes.push_back({input, {}, {}});
  g.nodes.push_back({layer, {}, {}});
  nn::initialize(g, 0);
  return g;
}

TactileFrame pressed_frame(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> v(1489, 3000);
  TactileFrame f;
  f.values.fill(1489);
  for (int r = 10; r < 20; ++r)
    for (int c = 8; c < 22; ++c) f.values[r * 32 + c] = static_cast<std::uint16_t>(v(rng));
  return f;
}

std::size_t tactile_params(const nn::ModelGraph& g) {
  std::size_t n = 0;
  for (std::size_t i = 0; i + 1 < g.nodes.size(); ++i) {
    const auto& s = g.nodes[i].spec;
    if (s.kind == LayerKind::ImuInput) break;
    for (const auto& p : g.nodes[i].params) n += p.size();
  }
  return n;
}

}  // namespace

TEST_CASE("network structure") {
  const auto plain = build_smarthand_net(false, 1);
  const auto fused = build_smarthand_net(true, 1);
  CHECK(classifier_input_width(plain) == 32 * 7 * 7);
  CHECK(classifier_input_width(fused) == 32 * 7 * 7 + 3);
  CHECK(plain.nodes.back().spec.out_channels == 17);
  CHECK(fused.nodes.back().spec.out_channels == 17);
  CHECK_FALSE(plain.has_imu_input());
  CHECK(fused.has_imu_input());

  // Stem width 16, second residual block width 32.
  std::vector<int> widths;
  for (const auto& n : plain.nodes)
    if (n.spec.kind == LayerKind::Conv2d) widths.push_back(n.spec.out_channels);
  CHECK(widths.front() == 16);
  CHECK(std::count(widths.begin(), widths.end(), 32) == 3);
  CHECK(std::count_if(plain.nodes.begin(), plain.nodes.end(), [](const auto& n) {
          return n.spec.kind == LayerKind::Input;
        }) == 1);
  CHECK(plain.nodes.front().spec.in_channels == 1);
  CHECK(plain.nodes.front().spec.height == 32);

  // IMU MLP 6 -> 30 -> 3.
  std::vector<std::pair<int, int>> dense;
  for (const auto& n : fused.nodes)
    if (n.spec.kind == LayerKind::Dense) dense.emplace_back(n.spec.in_channels, n.spec.out_channels);
  CHECK(dense.size() == 3);
  CHECK(dense[0] == std::pair{6, 30});
  CHECK(dense[1] == std::pair{30, 3});
}

TEST_CASE("deterministic construction") {
  CHECK(build_smarthand_net(false, 9) == build_smarthand_net(false, 9));
  CHECK_FALSE(build_smarthand_net(false, 9) == build_smarthand_net(false, 10));
}

TEST_CASE("IMU branch leaves tactile parameters unchanged") {
  const auto plain = build_smarthand_net(false, 4), fused = build_smarthand_net(true, 4);
  std::size_t i = 0;
  for (; i < plain.nodes.size() - 1; ++i) CHECK(plain.nodes[i] == fused.nodes[i]);
  CHECK(tactile_params(plain) == tactile_params(fused));
  CHECK(fused.param_count() - plain.param_count() == (6 * 30 + 30) + (30 * 3 + 3) + 3 * 17);
}

TEST_CASE("profile closed forms") {
  nn::LayerSpec vec;
  vec.kind = LayerKind::Input;
  vec.in_channels = 10;
  vec.height = vec.width = 1;
  nn::LayerSpec dense;
  dense.kind = LayerKind::Dense;
  dense.in_channels = 10;
  dense.out_channels = 5;
  const auto d = profile(two_node_graph(vec, dense));
  CHECK(d.macc_total == 50);
  CHECK(d.param_count == 55);
  CHECK(d.param_bytes_32bit == 220);

  nn::LayerSpec img;
  img.kind = LayerKind::Input;
  img.in_channels = 1;
  img.height = img.width = 32;
  nn::LayerSpec conv;
  conv.kind = LayerKind::Conv2d;
  conv.kernel = 3;
  conv.padding = 1;
  conv.in_channels = 1;
  conv.out_channels = 16;
  const auto c = profile(two_node_graph(img, conv));
  CHECK(c.macc_total == 147'456);
  CHECK(c.layers[1].output_shape == std::array<int, 3>{16, 32, 32});
  CHECK(c.peak_activation_bytes == (1024 + 16 * 1024) * 4);
}

TEST_CASE("default network budget") {
  const auto r = profile(build_smarthand_net(false, 0));
  CHECK(r.macc_total >= 4'200'000);
  CHECK(r.macc_total <= 5'200'000);
  CHECK(r.param_bytes_32bit >= 150'000);
  CHECK(r.param_bytes_32bit <= 205'000);
  CHECK(r.macc_total == 4'630'560);
  CHECK(r.param_count == 48'545);
  CHECK(r.param_bytes_32bit == 4 * r.param_count);

  std::uint64_t macc = 0;
  std::size_t params = 0;
  for (const auto& l : r.layers) {
    macc += l.macc;
    params += l.params;
  }
  CHECK(macc == r.macc_total);
  CHECK(params == r.param_count);

  const auto j = nlohmann::json::parse(r.to_json());
  CHECK(j["macc_total"] == r.macc_total);
  CHECK(j["layers"].size() == r.layers.size());
}

TEST_CASE("profile equals multiplies counted from an executed forward pass") {
  for (bool imu : {false, true}) {
    auto g = build_smarthand_net(imu, 2);
    const auto frame = pressed_frame(1);
    const TactileFrame* ptr = &frame;
    const auto x = frames_to_tensor<double>(std::span(&ptr, 1), 1489);
    nn::Tensor64 m(1, 6, 1, 1, 0.1);
    nn::ForwardCache<double> cache;
    nn::forward(g, x, imu ? &m : nullptr, nn::Mode::Eval, 0, &cache);
    std::uint64_t counted = 0;
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
      const auto& s = g.nodes[i].spec;
      const auto& out = cache.outputs[i];
      if (s.kind == LayerKind::Conv2d) {
        const auto& w = g.nodes[i].params[0];
        counted += out.size() * static_cast<std::uint64_t>(w.c() * w.h() * w.w());
      } else if (s.kind == LayerKind::Dense) {
        counted += out.size() * cache.outputs[s.inputs[0]].stride0();
      }
    }
    CHECK(counted == profile(g).macc_total);
  }
}

TEST_CASE("inference") {
  const auto frame = pressed_frame(3);
  SUBCASE("zeroed classifier gives uniform probabilities") {
    auto g = build_smarthand_net(false, 5);
    for (auto& p : g.nodes.back().params) std::fill(p.data.begin(), p.data.end(), 0.0);
    for (double p : infer(g, frame, std::nullopt, 1489))
      CHECK(p == doctest::Approx(1.0 / 17).epsilon(1e-12));
  }
  SUBCASE("probabilities sum to one") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto g = build_smarthand_net(seed % 2 == 1, seed);
      const std::optional<ImuFeatures> imu =
          g.has_imu_input() ? std::optional<ImuFeatures>(ImuFeatures{0.1, -0.2, 0.97, 0, 0.01, 0})
                            : std::nullopt;
      const auto p = infer(g, pressed_frame(seed), imu, 1489);
      double s = 0;
      for (double v : p) s += v;
      CHECK(std::abs(s - 1) < 1e-6);
      const auto p32 = InferenceEngine(g, 1489).infer(pressed_frame(seed), imu);
      double s32 = 0;
      for (float v : p32) s32 += v;
      CHECK(std::abs(s32 - 1) < 1e-5);
    }
  }
  SUBCASE("32-bit agrees with 64-bit") {
    const auto g = build_smarthand_net(false, 6);
    const InferenceEngine engine(g, 1489);
    for (std::uint64_t seed = 10; seed < 15; ++seed) {
      const auto p64 = infer(g, pressed_frame(seed), std::nullopt, 1489);
      const auto p32 = engine.infer(pressed_frame(seed));
      std::vector<double> a(p32.begin(), p32.end()), b(p64.begin(), p64.end());
      CHECK(oracle::rel_diff(a, b) < 1e-4);
    }
  }
  SUBCASE("deterministic") {
    const auto g = build_smarthand_net(false, 7);
    CHECK(infer(g, frame, std::nullopt, 1489) == infer(g, frame, std::nullopt, 1489));
    CHECK(argmax(std::vector<double>{0.1, 0.7, 0.7, 0.2}) == 1);
  }
  SUBCASE("IMU mismatches") {
    const auto plain = build_smarthand_net(false, 8), fused = build_smarthand_net(true, 8);
    CHECK(error_kind([&] { infer(plain, frame, ImuFeatures{}, 1489); }) ==
          ErrorKind::InvalidArgument);
    CHECK(error_kind([&] { infer(fused, frame, std::nullopt, 1489); }) ==
          ErrorKind::InvalidArgument);
    CHECK(error_kind([&] { InferenceEngine(plain, 1489).infer(frame, ImuFeatures{}); }) ==
          ErrorKind::InvalidArgument);
  }
}

TEST_CASE("input normalisation") {
  TactileFrame f;
  f.values.fill(1489);
  f.values[5] = 4095;
  f.values[6] = 0;
  const TactileFrame* ptr = &f;
  const auto t = frames_to_tensor<double>(std::span(&ptr, 1), 1489);
  CHECK(t.shape == std::array<int, 4>{1, 1, 32, 32});
  CHECK(t.data[0] == 0.0);
  CHECK(t.data[5] == doctest::Approx((4095 - 1489) / 4095.0));
  CHECK(t.data[6] == doctest::Approx(-1489 / 4095.0));

  ImuSample s{};
  s.accel = {16384, -32768, 0};
  s.gyro = {0, 0, 32767};
  const auto feat = imu_features(s);
  CHECK(feat[0] == 0.5);
  CHECK(feat[1] == -1.0);
  CHECK(feat[5] == doctest::Approx(32767 / 32768.0));
}
