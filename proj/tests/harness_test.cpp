#include "doctest.h"
#include "support.hpp"

#include "vecfit/error.hpp"
#include "vecfit/export.hpp"
#include "vecfit/harness.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>

using namespace vecfit;
using namespace testing;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = 3.14159265358979323846;

void write_file(const fs::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary);
  out << text;
}

int run(const std::string& args, const fs::path& err = {}) {
  std::string cmd = std::string(VECFIT_CLI) + " " + args + " > /dev/null";
  cmd += err.empty() ? " 2> /dev/null" : " 2> " + err.string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("synthetic spec json") {
  const SyntheticSpec s = synthetic_spec_from_json(
      R"({"resolution": 64, "keyframes": 5, "noise": 0.01, "seed": 9,
          "groups": {"ball": {"tx": 12, "rotation_deg": 30}},
          "paths": {"ball": {"amplitude": 3, "frequency": 2}}})");
  CHECK(s.resolution == 64);
  CHECK(s.keyframes == 5);
  CHECK(s.noise == 0.01);
  CHECK(s.seed == 9);
  CHECK(s.groups.at("ball").translation == Point(12, 0));
  CHECK(s.groups.at("ball").rotation_deg == 30);
  CHECK(s.paths.at("ball").frequency == 2);
  CHECK_THROWS_AS(synthetic_spec_from_json(R"({"frames": 3})"), ConfigError);
  CHECK_THROWS_AS(synthetic_spec_from_json(R"({"groups": {"a": {"spin": 1}}})"), ConfigError);
  CHECK_THROWS_AS(synthetic_spec_from_json(R"({"keyframes": 0})"), ConfigError);
  CHECK_THROWS_AS(synthetic_spec_from_json(R"({"noise": "x"})"), ConfigError);
}

TEST_CASE("synthetic ramps") {
  const SvgDocument doc = load_fixture("figure.svg");
  SyntheticSpec spec;
  spec.resolution = 100;
  spec.keyframes = 5;
  spec.groups["arm"].rotation_deg = 30;
  spec.groups["leg"].translation = Point(8, -4);
  spec.paths["torso-shape"].amplitude = 3;
  const CanonicalGeometry geom = make_geometry_for_resolution(doc, 100);
  const MotionParams p = synthetic_params(geom, doc, spec);
  CHECK(p.homographies[0].isZero(0.0));
  CHECK(p.offsets[0].isZero(0.0));
  CHECK(p.homographies[2](kTheta, 2) == doctest::Approx(0.5 * kPi / 6));
  CHECK(p.homographies[4](kTheta, 2) == doctest::Approx(kPi / 6));
  CHECK(p.homographies[1](kTx, 0) == doctest::Approx(2.0));
  CHECK(p.homographies[1](kTy, 0) == doctest::Approx(-1.0));
  const auto& torso = geom.paths[1];
  for (int i = torso.first; i < torso.first + torso.count; ++i) {
    CHECK(p.offsets[4](0, i) == 0.0);
    CHECK(p.offsets[4](1, i) == doctest::Approx(3 * std::sin(2 * kPi * geom.rest(0, i) / 100.0)));
    CHECK(p.offsets[2](1, i) == doctest::Approx(1.5 * std::sin(2 * kPi * geom.rest(0, i) / 100.0)));
  }
  CHECK(p.offsets[4].col(geom.paths[0].first).isZero(0.0));

  SyntheticSpec bad = spec;
  bad.groups["wing"].rotation_deg = 1;
  CHECK_THROWS_AS(synthetic_params(geom, doc, bad), ConfigError);
}

TEST_CASE("synth_target frames and noise") {
  const SvgDocument doc = load_fixture("ball.svg");
  SyntheticSpec spec;
  spec.resolution = 64;
  spec.keyframes = 3;
  spec.groups["ball"].translation = Point(10, 0);
  const SyntheticTarget a = synth_target(doc, spec);
  REQUIRE(a.frames.size() == 3);
  CHECK(a.frames[0].width() == 64);
  const RasterFrame rest = render_document(doc, 64, 64);
  for (int c = 0; c < 3; ++c) CHECK((a.frames[0].rgb[c] - rest.rgb[c]).abs().maxCoeff() < 1e-12);
  CHECK(pixel_mse(a.frames[0], a.frames[2]) > 0.0);

  spec.noise = 0.05;
  spec.seed = 3;
  const SyntheticTarget n1 = synth_target(doc, spec);
  const SyntheticTarget n2 = synth_target(doc, spec);
  for (int c = 0; c < 3; ++c) {
    CHECK((n1.frames[1].rgb[c] == n2.frames[1].rgb[c]).all());
    CHECK((n1.frames[1].rgb[c] - a.frames[1].rgb[c]).abs().maxCoeff() <= 0.05 + 1e-12);
    CHECK(n1.frames[1].rgb[c].minCoeff() >= 0.0);
    CHECK(n1.frames[1].rgb[c].maxCoeff() <= 1.0);
  }
  spec.seed = 4;
  CHECK_FALSE((synth_target(doc, spec).frames[1].rgb[0] == n1.frames[1].rgb[0]).all());
}

TEST_CASE("metrics") {
  RasterFrame white(10, 10), a(10, 10), b(10, 10);
  CHECK(foreground_iou(white, white) == 1.0);
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 4; ++x) a.set_pixel(x, y, Rgb(0, 0, 0));
  for (int y = 0; y < 10; ++y)
    for (int x = 2; x < 6; ++x) b.set_pixel(x, y, Rgb(0, 0, 0));
  CHECK(foreground_iou(a, b) == doctest::Approx(20.0 / 60.0));
  CHECK(foreground_iou(a, white) == 0.0);
  CHECK(pixel_mse(a, a) == 0.0);
  // 40 black pixels differ in all channels by 1.
  CHECK(pixel_mse(a, white) == doctest::Approx(0.4));
  CHECK_THROWS_AS(pixel_mse(a, RasterFrame(5, 5)), DimensionMismatch);
}

TEST_CASE("eval_fit against the truth") {
  const SvgDocument doc = load_fixture("ball_bar.svg");
  SyntheticSpec spec;
  spec.resolution = 64;
  spec.keyframes = 4;
  spec.groups["ball"].translation = Point(12, 3);
  spec.groups["bar"].rotation_deg = 20;
  const SyntheticTarget t = synth_target(doc, spec);
  const EvalReport exact = eval_fit(t.geometry, t.truth, t.frames, &t.truth);
  for (double m : exact.mse) CHECK(m < 1e-12);
  for (double iou : exact.iou) CHECK(iou == 1.0);
  REQUIRE(exact.translation_error.size() == 2);
  CHECK(exact.translation_error[0] == 0.0);
  CHECK(exact.rotation_error[1] == 0.0);

  MotionParams off = t.truth;
  for (int k = 0; k < 4; ++k) off.homographies[k](kTx, 0) += 2.0;
  off.homographies[0].setZero();
  const EvalReport shifted = eval_fit(t.geometry, off, t.frames, &t.truth);
  CHECK(shifted.translation_error[0] == doctest::Approx(2.0 * 3 / 4));
  CHECK(shifted.mse[0] < 1e-12);
  CHECK(shifted.mse[1] > 0.0);
  CHECK(shifted.iou[2] < 1.0);
  CHECK(shifted.to_json().find("\"iou\"") != std::string::npos);
}

TEST_CASE("command line") {
  const fs::path dir = fs::temp_directory_path() / "vecfit_cli_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string svg = testing::fixture("ball_bar.svg");
  const std::string d = dir.string();

  CHECK(run("") == 1);
  CHECK(run("frobnicate") == 1);
  CHECK(run("recolor --svg " + svg) == 1);

  CHECK(run("recolor --svg " + svg + " --out " + d + "/re.svg --map " + d + "/map.json") == 0);
  CHECK(fs::exists(dir / "re.svg"));
  CHECK(recolor_map_from_json(testing::read_text(d + "/map.json")).assignments.size() == 2);

  write_file(dir / "spec.json", R"({"resolution": 48, "keyframes": 3, "groups": {"ball": {"tx": 6}}})");
  CHECK(run("synth --svg " + svg + " --out " + d + "/frames --spec " + d + "/spec.json") == 0);
  CHECK(fs::exists(dir / "frames" / "frame_0002.png"));
  CHECK(fs::exists(dir / "frames" / "gt.json"));

  write_file(dir / "config.json", R"({"resolution": 48, "keyframes": 3, "iterations": 30, "activation_cadence": 10})");
  CHECK(run("fit --svg " + svg + " --frames " + d + "/frames --config " + d + "/config.json --out " + d +
            "/anim.svg --log " + d + "/log.jsonl --init probe") == 0);
  CHECK(fs::exists(dir / "anim.ckpt.json"));
  CHECK(testing::read_text(d + "/anim.svg").find("<animate") != std::string::npos);
  CHECK(testing::read_text(d + "/log.jsonl").find("\"iteration\"") != std::string::npos);

  CHECK(run("export --svg " + svg + " --ckpt " + d + "/anim.ckpt.json --out " + d + "/export.svg --frames-out " +
            d + "/preview --size 40 --repeat 2") == 0);
  CHECK(fs::exists(dir / "preview" / "frame_0002.png"));
  CHECK(testing::read_text(d + "/export.svg").find("repeatCount=\"2\"") != std::string::npos);

  CHECK(run("eval --svg " + svg + " --ckpt " + d + "/anim.ckpt.json --frames " + d + "/frames --gt " + d +
            "/frames/gt.json --map " + d + "/frames/map.json --out " + d + "/eval.json") == 0);
  CHECK(testing::read_text(d + "/eval.json").find("\"mse\"") != std::string::npos);

  CHECK(run("reorder --svg " + svg + " --frames " + d + "/frames --map " + d + "/frames/map.json --out " + d +
            "/reordered.svg") == 0);
  CHECK(fs::exists(dir / "reordered.svg"));

  // Domain errors exit with 2, optionally as JSON.
  write_file(dir / "bad.json", R"({"keyframes": 3, "learning_rate": 1})");
  CHECK(run("fit --svg " + svg + " --frames " + d + "/frames --config " + d + "/bad.json --out " + d +
                "/x.svg --json-errors",
            dir / "err.txt") == 2);
  const std::string err = testing::read_text(d + "/err.txt");
  CHECK(err.find("\"error\":\"ConfigError\"") != std::string::npos);
  CHECK(err.find("learning_rate") != std::string::npos);
  CHECK(run("recolor --svg " + d + "/missing.svg --out " + d + "/m.svg --map " + d + "/m.json") == 2);
  fs::remove_all(dir);
}
