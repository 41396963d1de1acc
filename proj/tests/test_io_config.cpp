#include <gtest/gtest.h>

#include <cmath>
#include <string>

#include "helpers.hpp"
#include "ldgl/config.hpp"
#include "ldgl/io.hpp"
#include "ldgl/random.hpp"

using namespace ldgl;

namespace {

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("ldgl_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

const char* kBase = R"(
task = "minimize-ld"
seed = 4
[model]
height = 1.0
wx = 1.0
wy = 1.0
n_layers = 4
h_ex = 5.0
pad = 0.25
[mesh]
nx = 11
ny = 11
sub = 2
)";

}  // namespace

TEST(FieldIo, LayeredRoundTripIsExact) {
  auto d = build_domain(test::small_params(9));
  auto st = random_smooth_layered(d, 5);
  const auto dir = scratch("io_layered");
  save_fields(dir / "s.ldgl", to_field_file(st));
  const auto back = layered_from(load_fields(dir / "s.ldgl"));
  EXPECT_EQ(back.dom->params(), d->params());
  for (int n = 0; n < st.layers(); ++n) EXPECT_EQ(back.u[n].data(), st.u[n].data());
  EXPECT_EQ(back.A.a1.data(), st.A.a1.data());
  EXPECT_EQ(back.A.a2.data(), st.A.a2.data());
  EXPECT_EQ(back.A.a3.data(), st.A.a3.data());
  EXPECT_EQ(ld_energy(back).total, ld_energy(st).total);
}

TEST(FieldIo, ContinuumRoundTripIsExact) {
  auto d = build_domain(test::small_params(9));
  auto st = random_smooth_continuum(d, 6);
  const auto f = decode_fields(encode_fields(to_field_file(st)));
  const auto back = continuum_from(f);
  EXPECT_EQ(back.psi.data(), st.psi.data());
  EXPECT_EQ(agl_energy(back).total, agl_energy(st).total);
  EXPECT_THROW(layered_from(f), IoError);
}

TEST(FieldIo, HeaderIsSelfDescribing) {
  Array2<double> a(3, 2);
  for (int j = 0; j < 2; ++j)
    for (int i = 0; i < 3; ++i) a(i, j) = 10 * j + i;
  FieldFile f;
  f.meta["note"] = "x";
  f.arrays.push_back(named("a", a));
  const std::string bytes = encode_fields(f);
  EXPECT_EQ(bytes.substr(0, 8), "LDGLFLD1");
  const auto g = decode_fields(bytes);
  EXPECT_EQ(g.meta.at("note"), "x");
  EXPECT_EQ(g.get("a").dims, (std::vector<std::uint64_t>{2, 3}));
  EXPECT_EQ(g.get("a").dtype, "f64");
  EXPECT_EQ(g.get("a").data[4], 11.0);
}

TEST(FieldIo, RejectsCorruptFiles) {
  EXPECT_THROW(decode_fields("garbage"), IoError);
  FieldFile f;
  f.arrays.push_back(named("a", Array2<double>(4, 4)));
  std::string b = encode_fields(f);
  EXPECT_THROW(decode_fields(b.substr(0, b.size() - 8)), IoError);
  EXPECT_THROW(decode_fields(b + "x"), IoError);
}

TEST(FieldIo, CsvHasOneRowPerNode) {
  auto d = build_domain(test::small_params(9));
  auto st = random_smooth_layered(d, 5);
  const std::string csv = layers_csv(st);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 5 * 81);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "layer,x,y,re,im,abs");
}

TEST(FieldIo, AtomicWriteReplaces) {
  const auto dir = scratch("io_atomic");
  write_atomic(dir / "f.txt", "one");
  write_atomic(dir / "f.txt", "two");
  EXPECT_EQ(read_file(dir / "f.txt"), "two");
  int files = 0;
  for (const auto& e : fs::directory_iterator(dir)) files += e.is_regular_file();
  EXPECT_EQ(files, 1);
}

TEST(Config, ParsesSweepAndDefaults) {
  const auto c = parse_config_toml(std::string(kBase) + "[sweep]\nepsilon = [0.25, 0.2]\n");
  EXPECT_EQ(c.task, Task::minimize_ld);
  EXPECT_TRUE(c.task_given);
  EXPECT_EQ(c.base.lambda, 1.0);
  const auto pts = c.points();
  ASSERT_EQ(pts.size(), 2u);
  EXPECT_EQ(pts[1].params.epsilon, 0.2);
  EXPECT_EQ(pts[1].seed, 5u);
  EXPECT_EQ(pts[0].params.mesh.nx, 11);
  EXPECT_DOUBLE_EQ(pts[0].params.mesh.dz, 0.125);
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, DocumentedDefaults) {
  const auto c = parse_config_toml(R"(
[model]
epsilon = 0.25
h_ex = 5.0
height = 1.0
n_layers = 4
wx = 1.0
wy = 1.0
)");
  EXPECT_EQ(c.base.lambda, 1.0);
  EXPECT_EQ(c.pad, std::vector<double>{1.0});
  EXPECT_EQ(c.construction.d, 1.0);
  EXPECT_EQ(c.construction.candidates, 8);
  EXPECT_EQ(c.compare_C, 1.0);
  // h <= eps/2 from the default rule
  const auto p = c.points().at(0).params;
  EXPECT_LE(p.hx(), p.epsilon / 2);
  EXPECT_EQ(p.mesh.nx, 9);
}

TEST(Config, EmptyAxisIsNamed) {
  const auto c = parse_config_toml(std::string(kBase) + "[sweep]\nepsilon = []\n");
  try {
    c.validate();
    FAIL() << "no error";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("epsilon"), std::string::npos);
  }
}

TEST(Config, RejectsUnknownKeysAndBadRegime) {
  EXPECT_THROW(parse_config_toml(std::string(kBase) + "[sweep]\nepsilon = [0.25]\nbogus = 1\n"), ConfigError);
  EXPECT_THROW(parse_config_toml("task = \"nope\"\n"), ConfigError);
  EXPECT_THROW(parse_config_toml("[model\n"), ConfigError);
  // eps sqrt(h_ex) >= 1
  auto c = parse_config_toml(std::string(kBase) + "[sweep]\nepsilon = [0.25]\nh_ex = [20.0]\n");
  EXPECT_THROW(c.validate(), ConfigError);
  // mixed regime: h_ex / |ln eps| < 1
  c = parse_config_toml(std::string(kBase) + "[sweep]\nepsilon = [0.25]\nh_ex = [1.0]\nmixed_regime = true\n");
  EXPECT_THROW(c.validate(), ConfigError);
  // mesh too coarse for eps
  c = parse_config_toml(std::string(kBase) + "[sweep]\nepsilon = [0.1]\n");
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Config, LogRuleAndLayerAxis) {
  const auto c = parse_config_toml(std::string(kBase) +
                                   "[sweep]\nepsilon = [0.25, 0.2]\nh_ex_rule = \"log_eps_squared\"\nn_layers = [2, 4]\n");
  const auto pts = c.points();
  ASSERT_EQ(pts.size(), 4u);
  EXPECT_DOUBLE_EQ(pts[0].params.h_ex, std::log(0.25) * std::log(0.25));
  EXPECT_EQ(pts[1].params.n_layers, 4);
  EXPECT_DOUBLE_EQ(pts[0].params.s, 0.5);
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, ConstructionNeedsPad) {
  auto c = parse_config_toml(std::string(kBase) + "[sweep]\nepsilon = [0.25]\n");
  c.task = Task::construct_upper_bound;
  EXPECT_THROW(c.validate(), ConfigError);
  c.construction.d = 0.1;
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, JsonEchoCarriesVersion) {
  const auto c = parse_config_toml(std::string(kBase) + "[sweep]\nepsilon = [0.25]\n");
  const auto j = c.to_json();
  EXPECT_EQ(j.at("schema_version"), kSchemaVersion);
  EXPECT_EQ(j.at("task"), "minimize-ld");
  EXPECT_EQ(j.at("minimize").at("step_rule"), "adaptive-BB");
}
