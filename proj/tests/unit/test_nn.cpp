#include "graphs.hpp"
#include "helpers.hpp"
#include "oracles.hpp"
#include "smarthand/nn.hpp"

using namespace smarthand;
using namespace smarthand::nn;
using oracle::every_kind_graph;
using oracle::numeric_grad;
using oracle::random_tensor;
using oracle::rel_diff;
using oracle::spec;
using testutil::error_kind;

namespace {

constexpr double kGradTol = 1e-4;

}  // namespace

TEST_CASE("conv2d forward") {
  SUBCASE("1x1 identity kernel") {
    std::mt19937_64 rng(1);
    const auto x = random_tensor(rng, 2, 1, 5, 7);
    Tensor64 w(1, 1, 1, 1, 1.0);
    CHECK(conv2d_forward<double>(x, w, {}, {1, 1, 0}).data == x.data);
  }
  SUBCASE("3x3 ones on 5x5 ones") {
    Tensor64 x(1, 1, 5, 5, 1.0), w(1, 1, 3, 3, 1.0);
    const auto y = conv2d_forward<double>(x, w, {}, {3, 1, 0});
    CHECK(y.shape == std::array<int, 4>{1, 1, 3, 3});
    for (double v : y.data) CHECK(v == 9.0);
  }
  SUBCASE("naive oracle, seed 31") {
    std::mt19937_64 rng(31);
    std::uniform_int_distribution<int> dim(1, 4), sz(5, 11), kk(1, 3), st(1, 2), pd(0, 1);
    for (int t = 0; t < 20; ++t) {
      const int k = kk(rng), s = st(rng), p = pd(rng);
      const auto x = random_tensor(rng, dim(rng), dim(rng), sz(rng), sz(rng));
      const auto w = random_tensor(rng, dim(rng), x.c(), k, k);
      std::vector<double> b(static_cast<std::size_t>(w.n()));
      for (auto& v : b) v = std::uniform_real_distribution<double>(-1, 1)(rng);
      const auto y = conv2d_forward<double>(x, w, b, {k, s, p});
      const auto ref = oracle::conv2d(x, w, b, s, p);
      REQUIRE(y.shape == ref.shape);
      CHECK(rel_diff(y.data, ref.data) < 1e-12);
    }
  }
  SUBCASE("shape errors") {
    Tensor64 x(1, 2, 5, 5), w(1, 3, 3, 3);
    CHECK(error_kind([&] { conv2d_forward<double>(x, w, {}, {3, 1, 0}); }) ==
          ErrorKind::InvalidArgument);
    Tensor64 w2(1, 2, 7, 7);
    CHECK(error_kind([&] { conv2d_forward<double>(x, w2, {}, {7, 1, 0}); }) ==
          ErrorKind::InvalidArgument);
  }
}

TEST_CASE("dense forward") {
  std::mt19937_64 rng(32);
  for (int t = 0; t < 10; ++t) {
    const auto x = random_tensor(rng, 3, 7 + t, 1, 1);
    const auto w = random_tensor(rng, 5, 7 + t, 1, 1);
    std::vector<double> b(5, 0.25);
    CHECK(rel_diff(dense_forward<double>(x, w, b).data, oracle::dense(x, w, b).data) < 1e-12);
  }
}

TEST_CASE("kernel gradients") {
  std::mt19937_64 rng(33);

  SUBCASE("conv2d") {
    for (auto [k, s, p] : {std::tuple{3, 1, 1}, {3, 2, 1}, {1, 2, 0}, {2, 1, 0}}) {
      auto x = random_tensor(rng, 2, 2, 6, 5);
      auto w = random_tensor(rng, 3, 2, k, k);
      std::vector<double> b{0.1, -0.2, 0.3};
      const ConvGeometry geo{k, s, p};
      const auto r = random_tensor(rng, 2, 3, (6 + 2 * p - k) / s + 1, (5 + 2 * p - k) / s + 1);
      auto f = [&] { return oracle::dot(conv2d_forward<double>(x, w, b, geo), r); };
      const auto an = conv2d_backward<double>(x, w, geo, r);
      CHECK(rel_diff(an.x.data, numeric_grad(x.data, f)) < kGradTol);
      CHECK(rel_diff(an.w.data, numeric_grad(w.data, f)) < kGradTol);
      CHECK(rel_diff(an.bias, numeric_grad(b, f)) < kGradTol);
    }
  }
  SUBCASE("dense") {
    auto x = random_tensor(rng, 3, 8, 1, 1);
    auto w = random_tensor(rng, 4, 8, 1, 1);
    std::vector<double> b(4, 0.0);
    const auto r = random_tensor(rng, 3, 4, 1, 1);
    auto f = [&] { return oracle::dot(dense_forward<double>(x, w, b), r); };
    const auto an = dense_backward<double>(x, w, r);
    CHECK(rel_diff(an.x.data, numeric_grad(x.data, f)) < kGradTol);
    CHECK(rel_diff(an.w.data, numeric_grad(w.data, f)) < kGradTol);
    CHECK(rel_diff(an.bias, numeric_grad(b, f)) < kGradTol);
  }
  SUBCASE("dense single sample is an outer product") {
    const auto x = random_tensor(rng, 1, 3, 1, 1);
    const auto w = random_tensor(rng, 2, 3, 1, 1);
    const auto go = random_tensor(rng, 1, 2, 1, 1);
    const auto an = dense_backward<double>(x, w, go);
    for (int o = 0; o < 2; ++o)
      for (int i = 0; i < 3; ++i) CHECK(an.w.data[o * 3 + i] == go.data[o] * x.data[i]);
  }
  SUBCASE("relu") {
    auto x = random_tensor(rng, 2, 3, 4, 4);
    const auto r = random_tensor(rng, 2, 3, 4, 4);
    auto f = [&] { return oracle::dot(relu_forward<double>(x), r); };
    const auto an = relu_backward<double>(x, r);
    CHECK(rel_diff(an.data, numeric_grad(x.data, f)) < kGradTol);
    for (std::size_t i = 0; i < x.size(); ++i)
      CHECK(an.data[i] == (x.data[i] > 0 ? r.data[i] : 0.0));
  }
  SUBCASE("maxpool") {
    auto x = random_tensor(rng, 2, 2, 6, 6);
    const auto r = random_tensor(rng, 2, 2, 5, 5);
    auto f = [&] { return oracle::dot(maxpool_forward<double>(x, 2, 1, nullptr), r); };
    std::vector<std::uint32_t> arg;
    maxpool_forward<double>(x, 2, 1, &arg);
    const auto an = maxpool_backward<double>(x.shape, arg, r);
    CHECK(rel_diff(an.data, numeric_grad(x.data, f)) < kGradTol);
  }
  SUBCASE("avgpool") {
    auto x = random_tensor(rng, 2, 2, 6, 6);
    const auto r = random_tensor(rng, 2, 2, 3, 3);
    auto f = [&] { return oracle::dot(avgpool_forward<double>(x, 2, 2), r); };
    const auto an = avgpool_backward<double>(x.shape, 2, 2, r);
    CHECK(rel_diff(an.data, numeric_grad(x.data, f)) < kGradTol);
  }
  SUBCASE("batchnorm train mode") {
    auto x = random_tensor(rng, 4, 3, 3, 3);
    std::vector<double> gamma{0.7, 1.3, 1.0}, beta{0.1, -0.4, 0.0};
    std::vector<double> rm(3, 0.0), rv(3, 1.0);
    const auto r = random_tensor(rng, 4, 3, 3, 3);
    auto f = [&] {
      std::vector<double> m = rm, v = rv;
      return oracle::dot(batchnorm_forward<double>(x, gamma, beta, m, v, Mode::Train, nullptr), r);
    };
    BatchNormCache<double> cache;
    batchnorm_forward<double>(x, gamma, beta, rm, rv, Mode::Train, &cache);
    const auto an = batchnorm_backward<double>(cache, gamma, r);
    CHECK(rel_diff(an.x.data, numeric_grad(x.data, f)) < kGradTol);
    CHECK(rel_diff(an.w.data, numeric_grad(gamma, f)) < kGradTol);
    CHECK(rel_diff(an.bias, numeric_grad(beta, f)) < kGradTol);
  }
  SUBCASE("batchnorm eval mode") {
    auto x = random_tensor(rng, 1, 2, 3, 3);
    std::vector<double> gamma{0.7, 1.3}, beta{0.1, -0.4}, rm{0.2, -0.1}, rv{0.5, 2.0};
    const auto r = random_tensor(rng, 1, 2, 3, 3);
    auto f = [&] {
      return oracle::dot(batchnorm_forward<double>(x, gamma, beta, rm, rv, Mode::Eval, nullptr), r);
    };
    BatchNormCache<double> cache;
    batchnorm_forward<double>(x, gamma, beta, rm, rv, Mode::Eval, &cache);
    const auto an = batchnorm_backward<double>(cache, gamma, r);
    CHECK(rel_diff(an.x.data, numeric_grad(x.data, f)) < kGradTol);
    CHECK(rel_diff(an.w.data, numeric_grad(gamma, f)) < kGradTol);
  }
  SUBCASE("dropout") {
    auto x = random_tensor(rng, 2, 3, 4, 4);
    const auto r = random_tensor(rng, 2, 3, 4, 4);
    auto f = [&] { return oracle::dot(dropout_forward<double>(x, 0.4, Mode::Train, 5, nullptr), r); };
    std::vector<double> mask;
    dropout_forward<double>(x, 0.4, Mode::Train, 5, &mask);
    CHECK(rel_diff(dropout_backward<double>(mask, r).data, numeric_grad(x.data, f)) < kGradTol);
  }
  SUBCASE("softmax") {
    auto x = random_tensor(rng, 3, 17, 1, 1, -3, 3);
    const auto r = random_tensor(rng, 3, 17, 1, 1);
    auto f = [&] { return oracle::dot(softmax<double>(x), r); };
    const auto an = softmax_backward<double>(softmax<double>(x), r);
    CHECK(rel_diff(an.data, numeric_grad(x.data, f)) < kGradTol);
  }
  SUBCASE("cross entropy") {
    auto x = random_tensor(rng, 5, 17, 1, 1, -3, 3);
    const std::vector<int> labels{0, 16, 3, 3, 9};
    auto f = [&] { return cross_entropy(x, labels).loss; };
    CHECK(rel_diff(cross_entropy(x, labels).grad.data, numeric_grad(x.data, f)) < kGradTol);
  }
}

TEST_CASE("graph backward matches finite differences for every layer kind") {
  auto g = every_kind_graph(3);
  std::mt19937_64 rng(34);
  auto x = random_tensor(rng, 3, 1, 6, 6);
  auto imu = random_tensor(rng, 3, 6, 1, 1);
  const auto r = random_tensor(rng, 3, 5, 1, 1);
  auto f = [&] { return oracle::dot(forward(g, x, &imu, Mode::Train, 9, nullptr), r); };

  ForwardCache<double> cache;
  forward(g, x, &imu, Mode::Train, 9, &cache);
  Tensor64 gx;
  const auto grads = backward(g, cache, r, &gx);
  CHECK(rel_diff(gx.data, numeric_grad(x.data, f)) < kGradTol);
  int checked = 0;
  for (std::size_t i = 0; i < g.nodes.size(); ++i)
    for (std::size_t p = 0; p < g.nodes[i].params.size(); ++p) {
      CAPTURE(i);
      CAPTURE(p);
      const auto num = numeric_grad(g.nodes[i].params[p].data, f);
      // Conv biases feeding batch norm have an identically zero gradient.
      double peak = 0;
      for (double v : num) peak = std::max(peak, std::abs(v));
      if (peak < 1e-8) {
        for (double v : grads[i][p].data) CHECK(std::abs(v) < 1e-12);
      } else {
        CHECK(rel_diff(grads[i][p].data, num) < kGradTol);
      }
      ++checked;
    }
  CHECK(checked == 12);
}

TEST_CASE("batchnorm examples") {
  std::vector<double> gamma{1.0}, beta{0.0}, rm{0.0}, rv{1.0};
  Tensor64 x(8, 1, 1, 1);
  const double vals[] = {-1.5, -1, -0.5, 0, 0, 0.5, 1, 1.5};
  std::copy(std::begin(vals), std::end(vals), x.data.begin());
  double var = 0;
  for (double v : vals) var += v * v / 8;
  for (auto& v : x.data) v /= std::sqrt(var);
  const auto y = batchnorm_forward<double>(x, gamma, beta, rm, rv, Mode::Train, nullptr);
  for (std::size_t i = 0; i < 8; ++i) {
    CHECK(y.data[i] == doctest::Approx(x.data[i] / std::sqrt(1 + kBatchNormEps)).epsilon(1e-12));
    CHECK(std::abs(y.data[i] - x.data[i]) <= 1e-5 * std::abs(x.data[i]) + 1e-15);
  }
  CHECK(rm[0] == doctest::Approx(0.0));
  CHECK(rv[0] == doctest::Approx(0.9 + 0.1 * 8.0 / 7.0));

  std::mt19937_64 rng(35);
  const auto z = random_tensor(rng, 6, 3, 2, 2);
  std::vector<double> g3{1.2, 0.8, 2.0}, b3{0.5, -1.0, 3.0}, m3(3, 0.0), v3(3, 1.0);
  const auto out = batchnorm_forward<double>(z, g3, b3, m3, v3, Mode::Train, nullptr);
  for (int c = 0; c < 3; ++c) {
    double s = 0;
    for (int n = 0; n < 6; ++n)
      for (int i = 0; i < 4; ++i) s += out.at(n, c, i / 2, i % 2);
    CHECK(s / 24 == doctest::Approx(b3[c]).epsilon(1e-12));
  }
  Tensor64 one(1, 3, 2, 2);
  CHECK(error_kind([&] {
          batchnorm_forward<double>(one, g3, b3, m3, v3, Mode::Train, nullptr);
        }) == ErrorKind::InvalidArgument);
}

TEST_CASE("cross entropy examples") {
  Tensor64 uniform(2, 17, 1, 1, 0.3);
  const std::vector<int> l2{4, 11};
  CHECK(cross_entropy(uniform, l2).loss == doctest::Approx(std::log(17.0)).epsilon(1e-12));
  CHECK(std::log(17.0) == doctest::Approx(2.833213).epsilon(1e-6));

  Tensor64 sharp(1, 17, 1, 1);
  sharp.data[6] = 1e3;
  const std::vector<int> l1{6};
  CHECK(cross_entropy(sharp, l1).loss < 1e-6);

  std::mt19937_64 rng(37);
  const auto x = random_tensor(rng, 32, 17, 1, 1, -8, 8);
  std::vector<int> labels(32);
  for (auto& l : labels) l = std::uniform_int_distribution<int>(0, 16)(rng);
  const double ref = oracle::cross_entropy(x, labels);
  CHECK(std::abs(cross_entropy(x, labels).loss - ref) <= 1e-12 * std::abs(ref));

  const std::vector<int> bad{17};
  CHECK(error_kind([&] { cross_entropy(sharp, bad); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("softmax rows") {
  std::mt19937_64 rng(36);
  const auto x = random_tensor(rng, 10, 17, 1, 1, -40, 40);
  const auto p = softmax<double>(x);
  for (int n = 0; n < 10; ++n) {
    double s = 0;
    for (int k = 0; k < 17; ++k) {
      CHECK(p.data[n * 17 + k] > 0);
      s += p.data[n * 17 + k];
    }
    CHECK(std::abs(s - 1) < 1e-9);
  }
}

TEST_CASE("adam") {
  SUBCASE("zero gradient and zero lr leave parameters unchanged") {
    std::vector<double> p{1.0, -2.0, 3.0}, g0(3, 0.0), g1{1.0, 2.0, 3.0};
    const auto before = p;
    AdamState st;
    std::vector<std::span<double>> ps{p};
    std::vector<std::span<const double>> gs{g0};
    for (int i = 0; i < 3; ++i) adam_step(ps, gs, st, {});
    CHECK(p == before);
    AdamState st2;
    std::vector<std::span<const double>> gs1{g1};
    for (int i = 0; i < 3; ++i) adam_step(ps, gs1, st2, {0.0});
    CHECK(p == before);
  }
  SUBCASE("three steps against the recurrences") {
    std::vector<double> p{0.5}, g{1.0};
    AdamState st;
    std::vector<std::span<double>> ps{p};
    std::vector<std::span<const double>> gs{g};
    double m = 0, v = 0, ref = 0.5;
    for (int t = 1; t <= 3; ++t) {
      adam_step(ps, gs, st, {0.1});
      m = 0.9 * m + 0.1;
      v = 0.999 * v + 0.001;
      ref -= 0.1 * (m / (1 - std::pow(0.9, t))) / (std::sqrt(v / (1 - std::pow(0.999, t))) + 1e-8);
      CHECK(p[0] == doctest::Approx(ref).epsilon(1e-14));
    }
    // With a constant gradient every bias-corrected step is lr / (1 + eps).
    CHECK(p[0] == doctest::Approx(0.5 - 0.3 / (1 + 1e-8)).epsilon(1e-14));
  }
  SUBCASE("shape mismatch") {
    std::vector<double> p{1.0, 2.0}, g{1.0};
    AdamState st;
    std::vector<std::span<double>> ps{p};
    std::vector<std::span<const double>> gs{g};
    CHECK(error_kind([&] { adam_step(ps, gs, st, {}); }) == ErrorKind::InvalidArgument);
  }
}

TEST_CASE("dropout") {
  std::mt19937_64 rng(40);
  const auto x = random_tensor(rng, 2, 3, 4, 4);
  CHECK(dropout_forward<double>(x, 0.0, Mode::Train, 1, nullptr).data == x.data);
  CHECK(dropout_forward<double>(x, 0.0, Mode::Eval, 1, nullptr).data == x.data);
  CHECK(dropout_forward<double>(x, 0.7, Mode::Eval, 1, nullptr).data == x.data);

  Tensor64 big(1, 1000, 1000, 1, 1.0);
  const auto y = dropout_forward<double>(big, 0.5, Mode::Train, 41, nullptr);
  std::size_t kept = 0;
  for (double v : y.data) {
    CHECK((v == 0.0 || v == 2.0));
    kept += v != 0.0;
  }
  CHECK(std::abs(double(kept) / 1e6 - 0.5) <= 0.002);
  CHECK(error_kind([&] { dropout_forward<double>(x, 1.0, Mode::Train, 1, nullptr); }) ==
        ErrorKind::InvalidArgument);
}

TEST_CASE("graph forward properties") {
  auto g = every_kind_graph(5);
  std::mt19937_64 rng(42);
  const auto x = random_tensor(rng, 4, 1, 6, 6);
  const auto imu = random_tensor(rng, 4, 6, 1, 1);
  SUBCASE("deterministic") {
    auto g2 = g;
    CHECK(forward(g, x, &imu, Mode::Train, 3, nullptr).data ==
          forward(g2, x, &imu, Mode::Train, 3, nullptr).data);
    CHECK(g == g2);
  }
  SUBCASE("32-bit agrees with 64-bit") {
    const auto y64 = forward<double>(g, x, &imu);
    const auto g32 = g.cast<float>();
    const auto x32 = x.cast<float>(), imu32 = imu.cast<float>();
    const auto y32 = forward<float>(g32, x32, &imu32).cast<double>();
    CHECK(rel_diff(y32.data, y64.data) < 1e-4);
  }
  SUBCASE("missing IMU input") {
    CHECK(error_kind([&] { forward<double>(g, x, nullptr); }) == ErrorKind::InvalidArgument);
  }
  SUBCASE("backward without a cache") {
    ForwardCache<double> empty;
    CHECK(error_kind([&] { backward(g, empty, Tensor64(4, 5, 1, 1)); }) ==
          ErrorKind::MissingCache);
  }
  SUBCASE("eval-mode backward") {
    auto xv = x;
    std::mt19937_64 r2(43);
    const auto r = random_tensor(r2, 4, 5, 1, 1);
    auto f = [&] { return oracle::dot(forward<double>(g, xv, &imu), r); };
    ForwardCache<double> eval;
    forward(g, xv, &imu, Mode::Eval, 0, &eval);
    Tensor64 gx;
    backward(g, eval, r, &gx);
    CHECK(rel_diff(gx.data, numeric_grad(xv.data, f)) < kGradTol);
  }
}

TEST_CASE("graph validation") {
  auto g = every_kind_graph(1);
  CHECK(g.has_imu_input());
  CHECK(g.param_count() == 1 * 3 * 9 + 3 + 6 + 3 * 3 * 9 + 3 + 6 + 6 * 4 + 4 + 16 * 5 + 5);
  auto bad = g;
  bad.nodes[4].spec.in_channels = 2;
  CHECK(error_kind([&] { bad.validate(); }) == ErrorKind::Validation);
  bad = g;
  bad.nodes[6].spec.inputs = {5, 8};
  CHECK(error_kind([&] { bad.validate(); }) == ErrorKind::Validation);
  bad = g;
  bad.nodes[3].spec.inputs = {5};  // forward reference
  CHECK(error_kind([&] { bad.validate(); }) == ErrorKind::Validation);
}

TEST_CASE("graph serialisation") {
  const auto g = every_kind_graph(8);
  const auto bytes = encode_graph(g);
  CHECK(std::string(bytes.begin(), bytes.begin() + 8) == std::string("STAGNN1\0", 8));
  const auto back = decode_graph(bytes);
  auto expected = g.cast<float>().cast<double>();
  for (auto& n : expected.nodes) n.spec.dropout = static_cast<float>(n.spec.dropout);
  CHECK(back == expected);
  CHECK(encode_graph(back) == bytes);

  for (std::size_t cut = 0; cut < bytes.size(); cut += 7) {
    const std::span<const std::uint8_t> part(bytes.data(), cut);
    const auto k = error_kind([&] { decode_graph(part); });
    CHECK((k == ErrorKind::Truncated || k == ErrorKind::BadMagic));
  }
  auto corrupt = bytes;
  corrupt[0] = 'X';
  CHECK(error_kind([&] { decode_graph(corrupt); }) == ErrorKind::BadMagic);

  testutil::TempDir dir("nn");
  write_graph(g, dir / "m.stag");
  CHECK(read_graph(dir / "m.stag") == back);
  CHECK(error_kind([&] { read_graph(dir / "missing.stag"); }) == ErrorKind::Io);
}
