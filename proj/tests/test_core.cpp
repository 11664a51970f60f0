#include <doctest.h>

#include <algorithm>
#include <cstring>
#include <numeric>
#include <sstream>

#include "gazeact/config.hpp"
#include "gazeact/core.hpp"
#include "gazeact/errors.hpp"
#include "gazeact/rng.hpp"
#include "test_util.hpp"

using namespace gazeact;

namespace {

std::vector<GazeSample> parse(const std::string& text, double rate = 30.0) {
  std::istringstream in(text);
  return parse_gaze_csv(in, rate);
}

SessionRecord consistent_session() {
  SessionRecord s;
  s.subject_id = "s1";
  s.session_index = 1;
  s.sample_rate = 10.0;
  for (int i = 0; i < 50; ++i) s.gaze.push_back({i / 10.0, 100.0 + i, 200.0, true});
  s.flows.resize(49);
  s.embeddings = EmbeddingMatrix{};
  s.embeddings->dim = 4;
  s.embeddings->values.assign(50 * 4, 0.5f);
  s.labels.segments = {{0.0, 2.0, ActivityLabel::kRead}, {2.0, 4.9, ActivityLabel::kWrite}};
  return s;
}

}  // namespace

TEST_CASE("gaze log: well-formed rows come back in time order") {
  const auto g = parse("t,x,y,valid\n0,1,2,1\n0.0333,3,4,1\n0.0667,5,6,1\n");
  REQUIRE(g.size() == 3);
  CHECK(g[0].x == 1.0);
  CHECK(g[2].y == 6.0);
  CHECK(std::all_of(g.begin(), g.end(), [](const GazeSample& s) { return s.valid; }));
}

TEST_CASE("gaze log: out-of-order rows are sorted with a warning") {
  testutil::WarningCapture w;
  const auto g = parse("t,x,y,valid\n0.0667,5,6,1\n0,1,2,1\n0.0333,3,4,1\n");
  REQUIRE(g.size() == 3);
  CHECK(g[0].t == 0.0);
  CHECK(g[1].t == doctest::Approx(0.0333));
  CHECK(g[2].x == 5.0);
  CHECK(w.messages.size() == 1);
}

TEST_CASE("gaze log: a single invalid sample between close neighbours is interpolated") {
  const auto g = parse("t,x,y,valid\n0,10,20,1\n0.0165,999,999,0\n0.033,20,40,1\n", 60.0);
  REQUIRE(g.size() == 3);
  CHECK(g[1].valid);
  CHECK(g[1].x == doctest::Approx(15.0));
  CHECK(g[1].y == doctest::Approx(30.0));
}

TEST_CASE("gaze log: long track loss holds the last value and stays flagged") {
  std::string text = "t,x,y,valid\n0,10,20,1\n";
  for (int i = 1; i <= 12; ++i) text += std::to_string(i / 30.0) + ",0,0,0\n";
  text += std::to_string(13 / 30.0) + ",50,60,1\n";
  const auto g = parse(text);
  for (int i = 1; i <= 12; ++i) {
    CHECK_FALSE(g[static_cast<std::size_t>(i)].valid);
    CHECK(g[static_cast<std::size_t>(i)].x == 10.0);
  }
  CHECK(g.back().x == 50.0);
}

TEST_CASE("gaze log: malformed input") {
  SUBCASE("empty file") { CHECK_THROWS_AS(parse(""), EmptyInputError); }
  SUBCASE("header only") { CHECK_THROWS_AS(parse("t,x,y,valid\n"), EmptyInputError); }
  SUBCASE("bad number carries the line") {
    try {
      parse("t,x,y,valid\n0,1,2,1\n0.1,abc,2,1\n");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
    }
  }
  SUBCASE("bad valid flag") { CHECK_THROWS_AS(parse("t,x,y,valid\n0,1,2,yes\n"), ParseError); }
  SUBCASE("duplicate timestamp") { CHECK_THROWS_AS(parse("t,x,y,valid\n0,1,2,1\n0,1,2,1\n"), ParseError); }
  SUBCASE("wrong header") { CHECK_THROWS_AS(parse("time,x,y,valid\n0,1,2,1\n"), ParseError); }
}

TEST_CASE("gaze log: parse -> write -> parse is idempotent") {
  Rng rng(5);
  std::vector<GazeSample> src;
  for (int i = 0; i < 200; ++i) src.push_back({i / 30.0, rng.uniform(0, 1280), rng.uniform(0, 720), true});
  std::ostringstream a;
  write_gaze_csv(a, src);
  const auto once = parse(a.str());
  std::ostringstream b;
  write_gaze_csv(b, once);
  const auto twice = parse(b.str());
  CHECK(once == src);
  CHECK(twice == once);
}

TEST_CASE("gaze log: any permutation of the rows yields monotone timestamps") {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> idx(60);
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng.index(i)]);
    std::string text = "t,x,y,valid\n";
    for (int i : idx) text += std::to_string(i / 30.0) + ",1,1," + (rng.uniform() < 0.1 ? "0" : "1") + "\n";
    testutil::WarningCapture w;
    const auto g = parse(text);
    for (std::size_t i = 1; i < g.size(); ++i) CHECK(g[i].t > g[i - 1].t);
  }
}

TEST_CASE("resample: identity at the input rate") {
  Rng rng(3);
  std::vector<GazeSample> src;
  for (int i = 0; i < 100; ++i) src.push_back({i / 30.0, rng.normal(), rng.normal(), true});
  const auto out = resample_gaze(src, 30.0);
  REQUIRE(out.size() == src.size());
  for (std::size_t i = 0; i < src.size(); ++i) {
    CHECK(std::abs(out[i].x - src[i].x) <= 1e-12);
    CHECK(std::abs(out[i].y - src[i].y) <= 1e-12);
  }
}

TEST_CASE("resample: a linear ramp survives 60 -> 30 Hz") {
  std::vector<GazeSample> src;
  for (int i = 0; i <= 120; ++i) src.push_back({i / 60.0, i / 60.0, 0.0, true});
  const auto out = resample_gaze(src, 30.0);
  REQUIRE(out.size() == 61);
  for (const auto& s : out) CHECK(s.x == doctest::Approx(s.t).epsilon(1e-12));
}

TEST_CASE("resample: two samples at 4 Hz") {
  const std::vector<GazeSample> src = {{0.0, 0.0, 0.0, true}, {1.0, 10.0, 0.0, true}};
  const auto out = resample_gaze(src, 4.0);
  const std::vector<double> expect = {0.0, 2.5, 5.0, 7.5, 10.0};
  REQUIRE(out.size() == expect.size());
  for (std::size_t i = 0; i < expect.size(); ++i) CHECK(out[i].x == doctest::Approx(expect[i]));
}

TEST_CASE("resample: fewer than two samples") {
  const std::vector<GazeSample> one = {{0.0, 1.0, 1.0, true}};
  CHECK_THROWS_AS(resample_gaze(one, 30.0), InsufficientDataError);
}

TEST_CASE("labels and flows: CSV round trip") {
  LabelTrack track;
  track.segments = {{0.0, 10.5, ActivityLabel::kRead}, {10.5, 20.0, ActivityLabel::kCopyText}};
  std::ostringstream out;
  write_label_csv(out, track);
  std::istringstream in(out.str());
  const auto back = parse_label_csv(in);
  REQUIRE(back.segments.size() == 2);
  CHECK(back.segments[1].label == ActivityLabel::kCopyText);
  CHECK(back.segments[0].t_end == 10.5);

  const std::vector<FlowEstimate> flows = {{1.5, -2.25, 12}, {0.0, 0.0, 0}};
  std::ostringstream fo;
  write_flow_csv(fo, flows);
  std::istringstream fi(fo.str());
  CHECK(parse_flow_csv(fi) == flows);
}

TEST_CASE("labels: unknown activity is a parse error") {
  std::istringstream in("t_start,t_end,label\n0,1,sleep\n");
  CHECK_THROWS_AS(parse_label_csv(in), ParseError);
}

TEST_CASE("embeddings: binary round trip is bit exact") {
  Rng rng(11);
  EmbeddingMatrix m;
  m.dim = kFc7Dim;
  m.comment = "fc7 relu";
  m.values.resize(3 * kFc7Dim);
  for (float& v : m.values) v = static_cast<float>(std::max(0.0, rng.normal()));
  std::ostringstream out;
  write_embeddings(out, m);
  const std::string bytes = out.str();
  CHECK(bytes.substr(0, 4) == "GAEM");
  std::istringstream in(bytes);
  const auto back = read_embeddings(in);
  CHECK(back.dim == kFc7Dim);
  CHECK(back.rows() == 3);
  CHECK(back.comment == m.comment);
  CHECK(std::memcmp(back.values.data(), m.values.data(), m.values.size() * sizeof(float)) == 0);
}

TEST_CASE("embeddings: malformed files") {
  EmbeddingMatrix m;
  m.dim = 2;
  m.values = {1.0f, 2.0f, 3.0f, 4.0f};
  std::ostringstream out;
  write_embeddings(out, m);
  const std::string good = out.str();

  auto read = [](const std::string& bytes) {
    std::istringstream in(bytes);
    return read_embeddings(in);
  };
  CHECK_THROWS_AS(read(""), EmptyInputError);
  CHECK_THROWS_AS(read("GAVC" + good.substr(4)), ParseError);
  CHECK_THROWS_AS(read(good.substr(0, good.size() - 1)), ParseError);
  CHECK_THROWS_AS(read(good + "x"), ParseError);
  std::string bad_version = good;
  bad_version[4] = 9;
  CHECK_THROWS_AS(read(bad_version), ParseError);
}

TEST_CASE("validate_session") {
  SUBCASE("consistent session has no issues") { CHECK(validate_session(consistent_session(), 4).empty()); }
  SUBCASE("embedding count mismatch names both counts") {
    auto s = consistent_session();
    s.embeddings->values.resize(40 * 4);
    const auto issues = validate_session(s, 4);
    REQUIRE(issues.size() == 1);
    CHECK(issues[0].find("40") != std::string::npos);
    CHECK(issues[0].find("50") != std::string::npos);
  }
  SUBCASE("overlapping segments cite both") {
    auto s = consistent_session();
    s.labels.segments[1].t_start = 1.5;
    const auto issues = validate_session(s, 4);
    REQUIRE(issues.size() == 1);
    CHECK(issues[0].find("read") != std::string::npos);
    CHECK(issues[0].find("write") != std::string::npos);
  }
  SUBCASE("wrong embedding dimension") {
    CHECK(validate_session(consistent_session(), kFc7Dim).size() == 1);
  }
}

TEST_CASE("config: JSON round trip and rejection of unknown keys") {
  PipelineConfig c;
  c.tau_small = 0.5;
  c.tau_large = 2.0;
  c.n_trees = 50;
  c.class_mode = 5;
  const auto back = parse_config_json(config_to_json(c));
  CHECK(back.tau_small == 0.5);
  CHECK(back.tau_large == 2.0);
  CHECK(back.n_trees == 50);
  CHECK(back.class_mode == 5);
  CHECK_FALSE(back.motion_tau_small.has_value());

  CHECK_THROWS_AS(parse_config_json(R"({"n_tree": 10})"), ParseError);
  CHECK_THROWS_AS(parse_config_json(R"({"n_trees": "many"})"), ParseError);
  CHECK_THROWS_AS(parse_config_json(R"({"median_filter_width": 4})"), ParseError);
  CHECK_THROWS_AS(parse_config_json("{"), ParseError);
}

TEST_CASE("class modes") {
  CHECK(classes_for_mode(5).size() == 5);
  const auto six = classes_for_mode(6);
  REQUIRE(six.size() == 6);
  CHECK(six.back() == ActivityLabel::kVoid);
  const auto five = classes_for_mode(5);
  CHECK(std::find(five.begin(), five.end(), ActivityLabel::kVoid) == five.end());
  CHECK_THROWS_AS(classes_for_mode(4), ParameterError);
}
