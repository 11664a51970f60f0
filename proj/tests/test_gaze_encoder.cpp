#include <doctest.h>

#include <cmath>
#include <cstring>

#include "gazeact/errors.hpp"
#include "gazeact/gaze_encoder.hpp"
#include "gazeact/reference.hpp"
#include "gazeact/rng.hpp"
#include "test_util.hpp"

using namespace gazeact;

namespace {

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("median filter: worked examples") {
  const std::vector<double> spike = {0, 0, 9, 0, 0};
  CHECK(median_filter(spike, 3) == std::vector<double>(5, 0.0));
  const std::vector<double> flat(20, 4.5);
  CHECK(median_filter(flat, 5) == flat);
  const std::vector<double> ramp = {3, 1, 4, 1, 5, 9, 2, 6};
  CHECK(median_filter(ramp, 1) == ramp);
  CHECK_THROWS_AS(median_filter(ramp, 4), ParameterError);
}

TEST_CASE("median filter: windows shrink symmetrically at the edges") {
  const std::vector<double> v = {10, 0, 5, 7, 1};
  const auto out = median_filter(v, 5);
  CHECK(out[0] == 10.0);  // radius 0
  CHECK(out[1] == 5.0);   // median of 10, 0, 5
  CHECK(out[2] == 5.0);   // median of all five
  CHECK(out[3] == 5.0);   // median of 5, 7, 1
  CHECK(out[4] == 1.0);
}

TEST_CASE("haar: step example") {
  std::vector<double> step(30, 0.0);
  for (std::size_t i = 5; i < step.size(); ++i) step[i] = 1.0;
  const auto c = haar_cwt(step, 10);
  CHECK(c.values[0] == doctest::Approx(-5.0 / std::sqrt(10.0)).epsilon(1e-12));
  CHECK(c.values[0] == doctest::Approx(-1.5811).epsilon(1e-4));
}

TEST_CASE("haar: zero at interior positions of a constant signal") {
  const std::vector<double> flat(100, 7.25);
  const auto c = haar_cwt(flat, 10);
  for (std::size_t b = 0; b + 10 <= flat.size(); ++b) CHECK(c.values[b] == 0.0);
}

TEST_CASE("haar: matches the defining sum on random signals") {
  Rng rng(2024);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = testutil::random_signal(rng, 300, rng.uniform(0.1, 100.0));
    for (std::size_t scale : {2u, 10u, 64u}) {
      const auto got = haar_cwt(x, scale).values;
      const auto want = testutil::haar_oracle(x, scale);
      for (std::size_t b = 0; b < x.size(); ++b) {
        worst = std::max(worst, std::abs(got[b] - want[b]) / std::abs(want[b]));
      }
    }
  }
  CHECK(worst <= 1e-9);
}

TEST_CASE("haar: linearity") {
  Rng rng(9);
  const auto x = testutil::random_signal(rng, 200);
  const auto y = testutil::random_signal(rng, 200);
  const double alpha = 2.5;
  const double beta = -0.75;
  std::vector<double> mix(200);
  for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = alpha * x[i] + beta * y[i];
  const auto cx = haar_cwt(x, 10).values;
  const auto cy = haar_cwt(y, 10).values;
  const auto cm = haar_cwt(mix, 10).values;
  for (std::size_t i = 0; i < mix.size(); ++i) CHECK(std::abs(cm[i] - (alpha * cx[i] + beta * cy[i])) <= 1e-9);
}

TEST_CASE("haar: odd or tiny scale is rejected") {
  const std::vector<double> x(20, 1.0);
  CHECK_THROWS_AS(haar_cwt(x, 9), ParameterError);
  CHECK_THROWS_AS(haar_cwt(x, 0), ParameterError);
}

TEST_CASE("quantize: worked examples and boundaries") {
  const QuantThresholds tau{0.5, 2.0};
  CHECK(quantize_value(0.3, tau) == 0);
  CHECK(quantize_value(1.0, tau) == 1);
  CHECK(quantize_value(2.5, tau) == 2);
  CHECK(quantize_value(-1.0, tau) == -1);
  CHECK(quantize_value(-3.0, tau) == -2);
  CHECK(quantize_value(0.5, tau) == 0);
  CHECK(quantize_value(2.0, tau) == 2);
  CHECK(quantize_value(-0.5, tau) == 0);
  CHECK(quantize_value(-2.0, tau) == -2);
  CHECK_THROWS_AS(quantize(std::vector<double>{1.0}, QuantThresholds{2.0, 0.5}), ParameterError);
  CHECK_THROWS_AS(quantize(std::vector<double>{1.0}, QuantThresholds{1.0, 1.0}), ParameterError);
}

TEST_CASE("quantize: monotone and odd-symmetric off the thresholds") {
  const QuantThresholds tau{0.5, 2.0};
  QuantLevel prev = -2;
  for (int i = -4000; i <= 4000; ++i) {
    const double c = i / 1000.0;
    const auto q = quantize_value(c, tau);
    CHECK(q >= prev);
    prev = q;
    const double m = std::abs(c);
    if (m != tau.small && m != tau.large) CHECK(quantize_value(-c, tau) == -q);
  }
}

TEST_CASE("joint encoding: worked examples and bijection") {
  CHECK(encode_pair(0, 0).code == 12);
  CHECK(encode_pair(-2, -2).code == 0);
  CHECK(encode_pair(2, 2).code == 24);
  const std::vector<QuantLevel> qx = {0, 1};
  const std::vector<QuantLevel> qy = {0, -2};
  const auto s = encode_joint(qx, qy);
  REQUIRE(s.size() == 2);
  CHECK(s[0].code == 12);
  CHECK(s[1].code == 15);

  std::vector<bool> hit(kSymbolCount, false);
  for (int x = -2; x <= 2; ++x) {
    for (int y = -2; y <= 2; ++y) {
      const auto sym = encode_pair(static_cast<QuantLevel>(x), static_cast<QuantLevel>(y));
      REQUIRE(sym.code < kSymbolCount);
      CHECK_FALSE(hit[sym.code]);
      hit[sym.code] = true;
      const auto back = decode_symbol(sym);
      CHECK(back[0] == x);
      CHECK(back[1] == y);
    }
  }
  CHECK_THROWS_AS(encode_joint(qx, std::vector<QuantLevel>{0}), ParameterError);
  CHECK_THROWS_AS(encode_pair(3, 0), ParameterError);
}

TEST_CASE("percentile: linear interpolation") {
  CHECK(percentile({1, 2, 3, 4}, 50) == doctest::Approx(2.5));
  CHECK(percentile({1, 2, 3, 4}, 90) == doctest::Approx(3.7));
  CHECK(percentile({5}, 90) == 5.0);
  CHECK(percentile({4, 1, 3, 2}, 0) == 1.0);
  CHECK(percentile({4, 1, 3, 2}, 100) == 4.0);
  CHECK_THROWS_AS(percentile({}, 50), InsufficientDataError);
}

TEST_CASE("thresholds: pooled percentiles and the degenerate fallback") {
  AxisCoefficients a;
  a.x.values = {1, -2, 3, -4};
  a.y.values = {0, 0, 0, 0};
  const AxisCoefficients* src[] = {&a};
  const auto tau = estimate_thresholds(src, 50, 90);
  CHECK(tau.small == doctest::Approx(0.5));
  CHECK(tau.large == doctest::Approx(3.3));

  AxisCoefficients flat;
  flat.x.values.assign(10, 0.0);
  flat.y.values.assign(10, 0.0);
  const AxisCoefficients* zero[] = {&flat};
  const auto fallback = estimate_thresholds(zero, 50, 90);
  CHECK_NOTHROW(fallback.validate());
}

TEST_CASE("gaze channel: constant gaze gives symbol 12 wherever the wavelet sees no padding") {
  std::vector<GazeSample> g;
  for (int i = 0; i < 300; ++i) g.push_back({i / 30.0, 640, 360, true});
  PipelineConfig config;
  const auto s = encode_gaze_channel(g, config, QuantThresholds{0.5, 2.0});
  REQUIRE(s.size() == g.size());
  for (std::size_t i = 0; i + config.wavelet_scale <= s.size(); ++i) CHECK(s[i].code == 12);
  // A position at the origin has no padding step at all.
  for (auto& p : g) p.x = p.y = 0.0;
  for (auto sym : encode_gaze_channel(g, config, QuantThresholds{0.5, 2.0})) CHECK(sym.code == 12);
}

TEST_CASE("gaze channel: a horizontal saccade moves qx only") {
  std::vector<GazeSample> g;
  for (int i = 0; i < 120; ++i) g.push_back({i / 30.0, i < 60 ? 100.0 : 400.0, 300.0, true});
  PipelineConfig config;
  const auto s = encode_gaze_channel(g, config, QuantThresholds{1.0, 50.0});
  REQUIRE(s.size() == g.size());
  bool saw_extreme = false;
  for (std::size_t i = 0; i + config.wavelet_scale <= s.size(); ++i) {
    const auto q = decode_symbol(s[i]);
    CHECK(q[1] == 0);
    if (i >= 50 && i < 60 && std::abs(q[0]) == 2) saw_extreme = true;
  }
  CHECK(saw_extreme);
}

TEST_CASE("gaze channel: a constant offset leaves interior symbols unchanged") {
  Rng rng(77);
  std::vector<GazeSample> g;
  double x = 600;
  double y = 300;
  for (int i = 0; i < 600; ++i) {
    if (i % 9 == 0) {
      x += rng.normal(0, 60);
      y += rng.normal(0, 40);
    }
    g.push_back({i / 30.0, x, y, true});
  }
  auto shifted = g;
  for (auto& s : shifted) {
    s.x += 250.0;
    s.y -= 125.0;
  }
  PipelineConfig config;
  const QuantThresholds tau{5.0, 40.0};
  const auto a = encode_gaze_channel(g, config, tau);
  const auto b = encode_gaze_channel(shifted, config, tau);
  for (std::size_t i = 0; i + config.wavelet_scale <= a.size(); ++i) CHECK(a[i].code == b[i].code);
}

TEST_CASE("gaze channel: non-uniform sampling is rejected") {
  std::vector<GazeSample> g = {{0.0, 1, 1, true}, {0.1, 1, 1, true}, {0.15, 1, 1, true}, {0.3, 1, 1, true},
                               {0.4, 1, 1, true}, {0.5, 1, 1, true}};
  CHECK_THROWS_AS(encode_gaze_channel(g, PipelineConfig{}, QuantThresholds{0.5, 2.0}), ParameterError);
}

TEST_CASE("parallel kernels are bit-identical to the serial reference") {
  Rng rng(404);
  for (std::size_t n : {1u, 7u, 64u, 1000u, 4099u}) {
    const auto x = testutil::random_signal(rng, n, 30.0);
    if (n >= 5) {
      const auto ref = reference::median_filter(x, 5);
      CHECK(same_bits(median_filter(x, 5, Execution::kParallel), ref));
      CHECK(same_bits(median_filter(x, 5, Execution::kSerial), ref));
    }
    const auto ref = reference::haar_cwt(x, 10);
    CHECK(same_bits(haar_cwt(x, 10, Execution::kParallel).values, haar_cwt(x, 10, Execution::kSerial).values));
    const auto par = haar_cwt(x, 10).values;
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(par[i] - ref[i]) <= 1e-12 * std::max(1.0, std::abs(ref[i])));
  }
}
