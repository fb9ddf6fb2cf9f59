#include <doctest.h>

#include <fstream>
#include <sstream>

#include "fsep/config.hpp"
#include "support.hpp"

using namespace fsep;

namespace {

PipelineConfig parse(const std::string& text, const std::filesystem::path& base = {}) {
  std::istringstream in(text);
  return parse_config(in, base);
}

const std::string kMinimal = "dataset = data/manifest.txt\noutput = out\ntf_index = 4\n";

}  // namespace

TEST_CASE("defaults and full key set") {
  const PipelineConfig d = parse(kMinimal);
  CHECK(d.t0_index == 0);
  CHECK(d.tf_index == 4);
  CHECK(d.tau == 0.0);
  CHECK(d.advection.refinement == 1);
  CHECK(d.advection.substeps == 1);
  CHECK(d.advection.corrector == CorrectorMode::Full);
  CHECK(d.advection.direction == TimeDirection::Forward);
  CHECK(d.partitions == Index3::Ones());
  CHECK_FALSE(d.partitioned());
  CHECK(d.ghost_width == 2);
  CHECK(d.export_options.smooth_iterations == 10);
  CHECK(d.export_options.smooth_lambda == 0.5);

  const PipelineConfig c = parse(
      "# full example\n"
      "dataset = /abs/manifest.txt\n"
      "output = run   # trailing comment\n"
      "t0_index = 2\n"
      "tf_index = 7\n"
      "tau = 0.25\n"
      "refinement = 2\n"
      "substeps = 4\n"
      "trail_stride = 3\n"
      "corrector = stages-2-3\n"
      "direction = forward\n"
      "partitions = 2x3x1\n"
      "ghost_width = 3\n"
      "smooth_iterations = 0\n"
      "smooth_lambda = 0.75\n"
      "min_component_triangles = 12\n",
      "/base");
  CHECK(c.dataset == "/abs/manifest.txt");
  CHECK(c.output == std::filesystem::path("/base") / "run");
  CHECK(c.t0_index == 2);
  CHECK(c.tau == 0.25);
  CHECK(c.advection.refinement == 2);
  CHECK(c.advection.substeps == 4);
  CHECK(c.advection.trail_stride == 3);
  CHECK(c.advection.corrector == CorrectorMode::Stages23);
  CHECK(c.partitions == Index3(2, 3, 1));
  CHECK(c.partitioned());
  CHECK(c.ghost_width == 3);
  CHECK(c.export_options.smooth_iterations == 0);
  CHECK(c.export_options.smooth_lambda == 0.75);
  CHECK(c.export_options.min_component_triangles == 12);
}

TEST_CASE("direction follows the index order") {
  CHECK(parse("dataset = d\noutput = o\nt0_index = 5\ntf_index = 1\n").advection.direction ==
        TimeDirection::Backward);
  CHECK(parse("dataset = d\noutput = o\nt0_index = 3\ntf_index = 3\ndirection = backward\n")
            .advection.direction == TimeDirection::Backward);
  CHECK_THROWS_AS(parse("dataset = d\noutput = o\nt0_index = 5\ntf_index = 1\ndirection = forward\n"),
                  ConfigError);
}

TEST_CASE("malformed input is rejected") {
  for (const std::string extra :
       {"colour = red\n", "tf_index = 5\n", "tau = abc\n", "refinement = 1.5\n",
        "refinement = -1\n", "substeps = 0\n", "corrector = sometimes\n", "direction = up\n",
        "partitions = 2x2\n", "partitions = 0x1x1\n", "ghost_width = 1\n", "smooth_lambda = 0\n",
        "smooth_iterations = -1\n", "min_component_triangles = -2\n", "just words\n"}) {
    CAPTURE(extra);
    CHECK_THROWS_AS(parse(kMinimal + extra), ConfigError);
  }
  CHECK_THROWS_AS(parse("output = o\n"), ConfigError);
  CHECK_THROWS_AS(parse("dataset = d\n"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/fsep.cfg"), ConfigError);
}

TEST_CASE("write_config round-trips and load_config resolves relative paths") {
  fsep::test::TempDir dir;
  const PipelineConfig c = parse(kMinimal + "tau = 0.1\npartitions = 1x2x2\ncorrector = off\n", dir.path());
  std::ostringstream out;
  write_config(c, out);
  {
    std::ofstream f(dir.path() / "fsep.cfg");
    f << out.str();
  }
  const PipelineConfig back = load_config(dir.path() / "fsep.cfg");
  CHECK(back.dataset == c.dataset);
  CHECK(back.output == c.output);
  CHECK(back.tau == c.tau);
  CHECK(back.partitions == c.partitions);
  CHECK(back.advection.corrector == CorrectorMode::Off);
  std::ostringstream again;
  write_config(back, again);
  CHECK(again.str() == out.str());

  {
    std::ofstream f(dir.path() / "rel.cfg");
    f << kMinimal;
  }
  CHECK(load_config(dir.path() / "rel.cfg").dataset == dir.path() / "data/manifest.txt");
}
