#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <random>

#include "glyphforge/errors.hpp"
#include "glyphforge/io_util.hpp"
#include "glyphforge/optimizer.hpp"
#include "glyphforge/rng.hpp"
#include "glyphforge/svg.hpp"

using namespace glyphforge;

namespace {

RasterImage target_image(std::uint64_t seed, int strokes = 8) {
  std::mt19937_64 rng(seed);
  return render(random_sketch(rng, strokes, {224, 224}), RasterConfig{});
}

bool inside_canvas(const VectorSketch& s) {
  for (const auto& st : s.strokes)
    for (const auto& p : st.points)
      if (p.x < 0 || p.x > s.canvas.width - 1 || p.y < 0 || p.y > s.canvas.height - 1) return false;
  return true;
}

/// Returns NaN from the third loss evaluation on.
class BrokenEncoder final : public Encoder {
 public:
  const EncoderDescriptor& descriptor() const override { return inner_.descriptor(); }
  Embedding embed_image(const RasterImage& img) override { return inner_.embed_image(img); }
  LossGradResult loss_and_grad(const RasterImage& img, const Embedding& t) override {
    auto r = inner_.loss_and_grad(img, t);
    if (++calls_ >= 3) r.loss = std::numeric_limits<double>::quiet_NaN();
    return r;
  }

 private:
  BuiltinEncoder inner_{EncoderKind::builtin_semantic};
  int calls_ = 0;
};

}  // namespace

TEST_CASE("config validation") {
  BuiltinEncoder enc(EncoderKind::builtin_semantic);
  std::mt19937_64 rng(1);
  const VectorSketch init = random_sketch(rng, 2, {224, 224});
  OptimizeConfig cfg;
  cfg.iterations = 0;
  CHECK_THROWS_AS(optimize(init, target_image(1), enc, RasterConfig{}, cfg), ContractError);
  cfg.iterations = 5;
  cfg.step_size = 0.0;
  CHECK_THROWS_AS(optimize(init, target_image(1), enc, RasterConfig{}, cfg), ContractError);
  cfg.step_size = 1.0;
  cfg.checkpoint_every = 0;
  CHECK_THROWS_AS(optimize(init, target_image(1), enc, RasterConfig{}, cfg), ContractError);
}

TEST_CASE("one iteration only moves coordinates with nonzero gradient") {
  BuiltinEncoder enc(EncoderKind::builtin_semantic);
  VectorSketch init;
  init.strokes.push_back({{Point2{40, 40}, Point2{60, 30}, Point2{80, 60}, Point2{100, 40}}});
  // Second stroke far off the canvas: zero gradient, must not move (clamping aside).
  init.strokes.push_back({{Point2{150, 150}, Point2{170, 160}, Point2{190, 150}, Point2{200, 170}}});
  const RasterImage image = target_image(2);
  OptimizeConfig cfg;
  cfg.iterations = 1;

  const Embedding target = enc.embed_image(image);
  const auto lg = enc.loss_and_grad(render(init, RasterConfig{}), target);
  const auto grad = backward(init, RasterConfig{}, lg.pixel_grad);
  const auto out = optimize(init, image, enc, RasterConfig{}, cfg);
  CHECK(out.trace.losses.size() == 2);
  int moved = 0;
  for (std::size_t j = 0; j < 2; ++j)
    for (int p = 0; p < 4; ++p) {
      const Point2 g = grad.strokes[j][p];
      if (g.x == 0.0) CHECK(out.sketch.strokes[j].points[p].x == init.strokes[j].points[p].x);
      if (g.y == 0.0) CHECK(out.sketch.strokes[j].points[p].y == init.strokes[j].points[p].y);
      moved += (out.sketch.strokes[j].points[p].x != init.strokes[j].points[p].x) +
               (out.sketch.strokes[j].points[p].y != init.strokes[j].points[p].y);
    }
  CHECK(moved > 0);
}

TEST_CASE("trace, checkpoints and canvas clamping") {
  BuiltinEncoder enc(EncoderKind::builtin_semantic);
  std::mt19937_64 rng(3);
  VectorSketch init = random_sketch(rng, 6, {224, 224});
  init.strokes[0].points[0] = {-20, 300};  // starts outside; clamped before the first render
  OptimizeConfig cfg;
  cfg.iterations = 25;
  cfg.checkpoint_every = 10;
  const auto out = optimize(init, target_image(4), enc, RasterConfig{}, cfg);
  CHECK(out.trace.losses.size() == 26);
  for (double l : out.trace.losses) {
    CHECK(std::isfinite(l));
    CHECK(l >= 0.0);
    CHECK(l <= 2.0);
  }
  REQUIRE(out.trace.checkpoints.size() == 4);
  CHECK(out.trace.checkpoints[0].iteration == 0);
  CHECK(out.trace.checkpoints[1].iteration == 10);
  CHECK(out.trace.checkpoints[2].iteration == 20);
  CHECK(out.trace.checkpoints[3].iteration == 25);
  CHECK(out.trace.checkpoints[3].sketch == out.sketch);
  for (const auto& cp : out.trace.checkpoints) CHECK(inside_canvas(cp.sketch));
  CHECK_FALSE(out.trace.degenerate_target);
}

TEST_CASE("self target stays at the optimum") {
  BuiltinEncoder enc(EncoderKind::builtin_semantic);
  std::mt19937_64 rng(5);
  const VectorSketch init = random_sketch(rng, 8, {224, 224});
  OptimizeConfig cfg;
  cfg.iterations = 300;
  const auto out = optimize(init, render(init, RasterConfig{}), enc, RasterConfig{}, cfg);
  CHECK(out.trace.losses.back() <= out.trace.losses.front() + 1e-12);
  CHECK(out.trace.losses.back() <= 0.01);
}

TEST_CASE("cross target improves and is reproducible") {
  BuiltinEncoder enc(EncoderKind::builtin_semantic);
  PipelineConfig cfg;
  cfg.spec.n_strokes = 8;
  cfg.optimize.iterations = 300;
  cfg.optimize.seed = 9;
  const RasterImage image = target_image(6);
  const auto a = full_pipeline(image, enc, cfg);
  const auto& l = a.trace.losses;
  REQUIRE(l.size() == 301);
  double first = 0, last = 0;
  for (int i = 0; i < 100; ++i) {
    first += l[i];
    last += l[l.size() - 1 - i];
  }
  CHECK(last <= first);
  CHECK(l.back() <= 0.5 * l.front());
  const double cos = dot(enc.embed_image(render(a.sketch, cfg.raster)).values, enc.embed_image(image).values);
  CHECK(cos >= 0.9);

  cfg.optimize.iterations = 40;
  const auto x = full_pipeline(image, enc, cfg);
  const auto y = full_pipeline(image, enc, cfg);
  CHECK(x.trace.losses == y.trace.losses);
  CHECK(x.sketch == y.sketch);
  CHECK(x.initial == y.initial);
  CHECK(format_trace(x.trace) == format_trace(y.trace));
}

TEST_CASE("plain gradient descent is available") {
  BuiltinEncoder enc(EncoderKind::builtin_semantic);
  std::mt19937_64 rng(7);
  const VectorSketch init = random_sketch(rng, 4, {224, 224});
  OptimizeConfig adam;
  adam.iterations = 5;
  OptimizeConfig gd = adam;
  gd.rule = UpdateRule::gradient_descent;
  gd.step_size = 50.0;
  const auto a = optimize(init, target_image(8), enc, RasterConfig{}, adam);
  const auto g = optimize(init, target_image(8), enc, RasterConfig{}, gd);
  CHECK(g.trace.losses.size() == 6);
  CHECK_FALSE(a.sketch == g.sketch);
  CHECK_FALSE(g.sketch == init);
}

TEST_CASE("blank input keeps the initial sketch") {
  BuiltinEncoder enc(EncoderKind::builtin_semantic);
  PipelineConfig cfg;
  cfg.spec.n_strokes = 4;
  cfg.optimize.iterations = 20;
  const auto out = full_pipeline(RasterImage(224, 224, 3, 1.0), enc, cfg);
  CHECK(out.trace.degenerate_target);
  CHECK(out.sketch == out.initial);
  CHECK(out.trace.losses.size() == 21);
  for (double l : out.trace.losses) CHECK(l == 1.0);
  REQUIRE_FALSE(out.trace.warnings.empty());
  CHECK(out.trace.warnings[0].find("degenerate") != std::string::npos);
}

TEST_CASE("non-finite loss aborts with the iteration") {
  BrokenEncoder enc;
  std::mt19937_64 rng(8);
  OptimizeConfig cfg;
  cfg.iterations = 10;
  try {
    optimize(random_sketch(rng, 3, {224, 224}), target_image(9), enc, RasterConfig{}, cfg);
    FAIL("expected OptimizationError");
  } catch (const OptimizationError& e) {
    CHECK(e.iteration() == 2);
    CHECK(std::string(e.what()).find("2") != std::string::npos);
  }
}

TEST_CASE("encoders without gradients are refused") {
  class EmbedOnly final : public Encoder {
   public:
    const EncoderDescriptor& descriptor() const override { return d_; }

   private:
    EncoderDescriptor d_{"embed-only", EncoderKind::bridge, 4, 1};
  } enc;
  std::mt19937_64 rng(9);
  CHECK_THROWS_AS(optimize(random_sketch(rng, 1, {224, 224}), target_image(1), enc, RasterConfig{}, OptimizeConfig{}),
                  CapabilityError);
}

TEST_CASE("more strokes are not much worse") {
  BuiltinEncoder enc(EncoderKind::builtin_semantic);
  int ok = 0;
  for (std::uint64_t i = 0; i < 10; ++i) {
    const RasterImage image = target_image(mix_seed(100, i), 4 + static_cast<int>(i % 3) * 4);
    PipelineConfig cfg;
    cfg.optimize.iterations = 100;
    cfg.optimize.seed = i;
    cfg.spec.n_strokes = 4;
    const double four = full_pipeline(image, enc, cfg).trace.losses.back();
    cfg.spec.n_strokes = 16;
    const double sixteen = full_pipeline(image, enc, cfg).trace.losses.back();
    CHECK(sixteen <= four + 0.05);
    ok += sixteen <= four + 0.05;
  }
  CHECK(ok == 10);
}

TEST_CASE("artifacts") {
  BuiltinEncoder enc(EncoderKind::builtin_semantic);
  PipelineConfig cfg;
  cfg.spec.n_strokes = 3;
  cfg.optimize.iterations = 6;
  cfg.optimize.checkpoint_every = 3;
  const auto out = full_pipeline(target_image(10), enc, cfg);
  const auto dir = std::filesystem::temp_directory_path() / "glyphforge_opt_artifacts";
  std::filesystem::remove_all(dir);
  write_pipeline_artifacts(out, cfg.raster, dir);
  for (const char* f : {"init.svg", "sketch.svg", "sketch.png", "trace.txt", "checkpoint_0.svg", "checkpoint_3.svg",
                        "checkpoint_6.svg"}) {
    CHECK(std::filesystem::exists(dir / f));
  }
  CHECK(read_svg(dir / "sketch.svg").strokes.size() == 3);
  const std::string trace = read_file(dir / "trace.txt");
  CHECK(trace.rfind("# iteration loss\n0 ", 0) == 0);
  CHECK(std::count(trace.begin(), trace.end(), '\n') == 8);
  std::filesystem::remove_all(dir);
}
