#include <doctest.h>

#include <fstream>

#include "cgswap/error.hpp"
#include "cgswap/pipeline.hpp"
#include "support.hpp"

using namespace cgswap;
using cgswap::testing::TempDir;
namespace fs = std::filesystem;

namespace {

const Stylizer& stylizer() {
  static const Stylizer s(Encoder::random(0), Decoder::random(1), DecomNet::random(2));
  return s;
}

StylizeConfig small_config(const TempDir& dir) {
  save_image(cgswap::testing::gradient_image(64, 64, 1), dir / "content.png");
  save_image(cgswap::testing::random_image(64, 64, 3, 2), dir / "style.png");
  StylizeConfig c;
  c.content = dir / "content.png";
  c.style = dir / "style.png";
  c.output = dir / "out.png";
  c.encoder_weights = "random";
  c.decoder_weights = "random";
  c.decomnet_weights = "random";
  c.seed = 5;
  return c;
}

std::string stage_of(const StylizeConfig& c) {
  try {
    stylize(c);
  } catch (const StageError& e) {
    return e.stage();
  }
  return "none";
}

}  // namespace

TEST_SUITE("pipeline") {
  TEST_CASE("run produces a valid image and consistent groups") {
    const Image content = cgswap::testing::gradient_image(64, 48, 3);
    const Image style = cgswap::testing::random_image(56, 64, 3, 4);
    StylizeOptions o;
    const StylizeResult r = stylizer().run(content, style, o);
    CHECK(r.output.height() == 64);
    CHECK(r.output.width() == 48);
    CHECK(in_unit_range(r.output));
    CHECK(r.mask.size() == 512);
    CHECK(r.style_mask == r.mask);
    CHECK(r.surface_swap.swapped.channels() == 512);
    CHECK_FALSE(r.surface_image.has_value());
    CHECK(r.timings.total >= r.timings.retinex + r.timings.cgps - 1e-3);
    for (int c = 0; c < 512; ++c) {
      const auto& zeroed = r.mask[c] ? r.texture_swap.swapped : r.surface_swap.swapped;
      for (float v : zeroed.plane(c)) REQUIRE(v == 0.0f);
    }
  }

  TEST_CASE("fusion and part decodes") {
    const Image content = cgswap::testing::gradient_image(48, 48, 5);
    StylizeOptions o;
    o.fuse = true;
    o.scales = {1.0};
    const StylizeResult r = stylizer().run(content, content, o);
    REQUIRE(r.surface_image.has_value());
    REQUIRE(r.texture_image.has_value());
    CHECK(in_unit_range(r.output));
    const WeightMap w = activate_weights(complementary_weights(*r.texture_image), o.fusion);
    CHECK(r.output == fuse(*r.texture_image, *r.surface_image, w));
  }

  TEST_CASE("independent style mask and learned decomposer") {
    const Image content = cgswap::testing::gradient_image(48, 48, 6);
    const Image style = cgswap::testing::random_image(48, 48, 3, 7);
    StylizeOptions o;
    o.style_mask = StyleMaskMode::independent;
    o.decomposer = DecomposerKind::learned;
    const StylizeResult r = stylizer().run(content, style, o);
    CHECK(r.style_mask.size() == 512);
    CHECK(in_unit_range(r.output));
    const Stylizer bare(Encoder::random(0), Decoder::random(1));
    CHECK_THROWS_AS(bare.run(content, style, o), StageError);
  }

  TEST_CASE("stylize from files is deterministic and writes intermediates") {
    TempDir dir("stylize");
    StylizeConfig c = small_config(dir);
    c.emit_intermediates = true;
    const StylizeResult a = stylize(c);
    const Image first = load_image(c.output);
    for (const char* suffix : {"_L", "_R", "_LS", "_RS"}) {
      const fs::path p = dir / (std::string("out") + suffix + ".png");
      REQUIRE(fs::exists(p));
      CHECK(in_unit_range(load_image(p)));
    }
    const StylizeResult b = stylize(c);
    CHECK(a.output == b.output);
    CHECK(load_image(c.output) == first);
  }

  TEST_CASE("stage errors name the failing stage") {
    TempDir dir("stages");
    StylizeConfig c = small_config(dir);
    StylizeConfig missing = c;
    missing.content = dir / "nope.png";
    CHECK(stage_of(missing) == "load");
    StylizeConfig weights = c;
    weights.encoder_weights = dir / "none.wt";
    CHECK(stage_of(weights) == "weights");
    save_image(Image(20, 20, 3, 0.5f), dir / "tiny.png");
    StylizeConfig tiny = c;
    tiny.content = dir / "tiny.png";
    CHECK(stage_of(tiny) == "encode");
    StylizeConfig unwritable = c;
    unwritable.output = dir / "no" / "such" / "dir" / "out.png";
    CHECK(stage_of(unwritable) == "write");
    CHECK_FALSE(fs::exists(unwritable.output));
  }

  TEST_CASE("learned decomposer fallback") {
    TempDir dir("fallback");
    StylizeConfig c = small_config(dir);
    c.options.decomposer = DecomposerKind::learned;
    c.decomnet_weights = dir / "missing.wt";
    CHECK(stage_of(c) == "weights");
    c.decom_fallback = true;
    const StylizeResult r = stylize(c);
    CHECK(r.used_fallback);
    CHECK(fs::exists(c.output));
  }

  TEST_CASE("input preparation") {
    const Image big(1200, 600, 1, 0.5f);
    const Image small = prepare_input(big, true, 1024);
    CHECK(small.height() == 1024);
    CHECK(small.width() == 512);
    CHECK(small.channels() == 3);
    CHECK(prepare_input(big, false, 1024).height() == 1200);
    CHECK(prepare_input(Image(300, 200, 3), true, 1024).height() == 300);
  }

  TEST_CASE("output validation") {
    Image img(4, 4, 3, 0.5f);
    CHECK_NOTHROW(validate_output(img));
    img.at(1, 1, 1) = 1.5f;
    CHECK_THROWS_AS(validate_output(img), Error);
    img.at(1, 1, 1) = std::nanf("");
    CHECK_THROWS_AS(validate_output(img), Error);
  }

  TEST_CASE("config keys and validation") {
    TempDir dir("cfgkeys");
    std::ofstream(dir / "run.cfg") << "content = in/c.png\nstyle = /abs/s.png\noutput = o.png\n"
                                       "scales = 1.0, 0.5\npatch = 5\nfuse = true\nfusion_mode = verbatim\n"
                                       "style_mask = independent\nencoder_weights = random\ndecom_fallback = yes\n";
    StylizeConfig c;
    c.apply(ConfigFile::load(dir / "run.cfg"));
    CHECK(c.content == dir / "in/c.png");
    CHECK(c.style == "/abs/s.png");
    CHECK(c.options.scales == std::vector<double>{1.0, 0.5});
    CHECK(c.options.patch == 5);
    CHECK(c.options.fuse);
    CHECK(c.options.fusion.mode == FusionMode::verbatim);
    CHECK(c.options.style_mask == StyleMaskMode::independent);
    CHECK(c.encoder_weights == "random");
    CHECK(c.decom_fallback);
    CHECK_NOTHROW(c.validate());

    std::ofstream(dir / "bad.cfg") << "contnet = x\n";
    CHECK_THROWS_AS(c.apply(ConfigFile::load(dir / "bad.cfg")), ConfigError);
    StylizeConfig v = c;
    v.options.patch = 0;
    CHECK_THROWS_AS(v.validate(), ConfigError);
    v = c;
    v.options.scales.clear();
    CHECK_THROWS_AS(v.validate(), ConfigError);
    v = c;
    v.output.clear();
    CHECK_THROWS_AS(v.validate(), ConfigError);
    CHECK_THROWS_AS(parse_decomposer("neural"), ConfigError);
    CHECK(to_string(DecomposerKind::learned) == "learned");
  }
}
