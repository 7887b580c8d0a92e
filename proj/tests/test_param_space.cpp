#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "deploygate/error.hpp"
#include "deploygate/param_space.hpp"
#include "support.hpp"

using namespace deploygate;

namespace {

ScenarioConfig franka_mid() {
  ScenarioConfig c;
  c.space = "franka-8d";
  c.values = {{"friction", 0.3},   {"mass", 0.5},        {"com_offset", 0.1},
              {"size", 0.05},      {"ik_noise", 0.01},   {"obstacles", std::int64_t{2}},
              {"shape", "sphere"}, {"placement", "edge_90"}};
  return c;
}

}  // namespace

TEST(ParamSpace, FrankaLayout) {
  const ParamSpace s = franka_space();
  ASSERT_EQ(s.dims().size(), 8u);
  EXPECT_EQ(s.dims()[0].name(), "friction");
  EXPECT_EQ(s.dims()[0].kind(), ParamKind::ContinuousLog);
  EXPECT_EQ(s.dims()[0].lo(), 0.05);
  EXPECT_EQ(s.dims()[0].hi(), 1.2);
  EXPECT_EQ(s.at("shape").categories().size(), 4u);
  auto fb = s.fallback("friction");
  ASSERT_TRUE(fb);
  EXPECT_EQ(fb->lo, 0.05);
  EXPECT_EQ(fb->hi, 0.40);
  EXPECT_EQ(s.at("placement").categories(),
            (std::vector<std::string>{"center_0", "center_45", "center_90", "center_135", "edge_0", "edge_45",
                                      "edge_90", "edge_135"}));
}

TEST(ParamSpace, Ur5eLayout) {
  const ParamSpace s = ur5e_space();
  EXPECT_EQ(s.dims().size(), 5u);
  EXPECT_EQ(s.at("mass").kind(), ParamKind::ContinuousLog);
  EXPECT_EQ(s.at("mass").range(), (Range{0.05, 3.0}));
  EXPECT_EQ(s.at("obstacles").kind(), ParamKind::Integer);
  EXPECT_EQ(s.at("obstacles").range(), (Range{0.0, 3.0}));
  EXPECT_TRUE(s.fallback_ranges().empty());
  EXPECT_EQ(s.find("friction"), nullptr);
}

TEST(ParamSpace, BuiltinLookup) {
  EXPECT_EQ(builtin_space("franka-8d"), franka_space());
  EXPECT_EQ(builtin_space("ur5e-5d"), ur5e_space());
  EXPECT_THROW(builtin_space("kuka"), DomainError);
}

TEST(ParamSpace, FactoryPreconditions) {
  EXPECT_THROW(ParamDef::linear("a", 1.0, 1.0), DomainError);
  EXPECT_THROW(ParamDef::log("a", 0.0, 1.0), DomainError);
  EXPECT_THROW(ParamDef::integer("a", 3, 2), DomainError);
  EXPECT_THROW(ParamDef::categorical("a", {}), DomainError);
  EXPECT_THROW(ParamDef::categorical("a", {"x", "x"}), DomainError);
  EXPECT_THROW(ParamSpace("s", {ParamDef::linear("a", 0, 1), ParamDef::linear("a", 0, 2)}), DomainError);
  EXPECT_THROW(ParamSpace("s", {ParamDef::linear("a", 0, 1)}, {{"a", {0.5, 2.0}}}), DomainError);
}

TEST(ScaleToValue, LogEndpointsAndMidpoint) {
  const ParamDef f = franka_space().at("friction");
  EXPECT_EQ(std::get<double>(scale_to_value(f, 0.0)), 0.05);
  EXPECT_EQ(std::get<double>(scale_to_value(f, 1.0)), 1.2);
  const double mid = std::get<double>(scale_to_value(f, 0.5));
  EXPECT_NEAR(mid, 0.244949, 1e-6);
  EXPECT_NEAR(mid * mid / (0.05 * 1.2), 1.0, 1e-12);
  EXPECT_THROW(scale_to_value(f, 1.0000001), DomainError);
  EXPECT_THROW(scale_to_value(f, -0.1), DomainError);
}

TEST(ScaleToValue, IntegerAndCategoricalPartitions) {
  const ParamDef obs = franka_space().at("obstacles");
  EXPECT_EQ(std::get<std::int64_t>(scale_to_value(obs, 0.0)), 0);
  EXPECT_EQ(std::get<std::int64_t>(scale_to_value(obs, 1.0 / 6.0 - 1e-12)), 0);
  EXPECT_EQ(std::get<std::int64_t>(scale_to_value(obs, 0.5)), 3);
  EXPECT_EQ(std::get<std::int64_t>(scale_to_value(obs, 1.0)), 5);
  const ParamDef shape = franka_space().at("shape");
  EXPECT_EQ(std::get<std::string>(scale_to_value(shape, 0.0)), "box");
  EXPECT_EQ(std::get<std::string>(scale_to_value(shape, 0.26)), "cylinder");
  EXPECT_EQ(std::get<std::string>(scale_to_value(shape, 1.0)), "irregular");
}

// Monotone in u and every produced value validates, for every dimension kind.
TEST(ScaleToValue, MonotoneAndSelfValidating) {
  std::mt19937_64 g(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const ParamSpace& s : {franka_space(), ur5e_space()}) {
    for (const ParamDef& d : s.dims()) {
      std::vector<double> us(200);
      for (auto& x : us) x = u(g);
      us.push_back(0.0);
      us.push_back(1.0);
      std::sort(us.begin(), us.end());
      double prev_num = -1e300;
      std::size_t prev_cat = 0;
      for (double x : us) {
        const ParamValue v = scale_to_value(d, x);
        ScenarioConfig c;
        c.values[d.name()] = v;
        const ParamSpace single(s.name(), {d});
        EXPECT_TRUE(validate_config(single, c).empty()) << d.name() << " u=" << x;
        if (d.kind() == ParamKind::Categorical) {
          const auto& cats = d.categories();
          const auto k = static_cast<std::size_t>(
              std::find(cats.begin(), cats.end(), std::get<std::string>(v)) - cats.begin());
          EXPECT_GE(k, prev_cat);
          prev_cat = k;
        } else {
          const double num = std::holds_alternative<double>(v) ? std::get<double>(v)
                                                               : static_cast<double>(std::get<std::int64_t>(v));
          EXPECT_GE(num, prev_num);
          prev_num = num;
        }
      }
    }
  }
}

TEST(ValidateConfig, Examples) {
  const ParamSpace s = franka_space();
  EXPECT_TRUE(validate_config(s, franka_mid()).empty());

  auto c = franka_mid();
  c.values["friction"] = 1.5;
  auto v = validate_config(s, c);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0], "friction out of [0.05,1.2]");

  c = franka_mid();
  c.values["shape"] = std::string("cone");
  v = validate_config(s, c);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_NE(v[0].find("unknown category"), std::string::npos);

  c = franka_mid();
  c.values.erase("mass");
  c.values["colour"] = std::string("red");
  EXPECT_EQ(validate_config(s, c).size(), 2u);
}

TEST(ScenarioConfig, NumericView) {
  const auto c = franka_mid();
  EXPECT_EQ(c.number("friction"), 0.3);
  EXPECT_EQ(c.number("obstacles"), 2.0);
  EXPECT_EQ(c.label("shape"), "sphere");
  EXPECT_THROW(c.number("shape"), DomainError);
  EXPECT_THROW(c.number("nothing"), DomainError);
}

TEST(UniformMoments, MatchClosedForms) {
  const ParamSpace s = franka_space();
  const auto f = uniform_moments(s.at("friction"));
  EXPECT_NEAR(f.mean, ref::kFric.mean, 1e-14);
  EXPECT_NEAR(f.sd, ref::kFric.sd, 1e-14);
  const auto m = uniform_moments(s.at("mass"));
  EXPECT_NEAR(m.mean, ref::kMass.mean, 1e-14);
  EXPECT_NEAR(m.sd, ref::kMass.sd, 1e-14);
  const auto o = uniform_moments(s.at("obstacles"));
  EXPECT_NEAR(o.mean, 2.5, 1e-15);
  EXPECT_NEAR(o.sd, ref::kObs.sd, 1e-14);
  EXPECT_NEAR(uniform_moments(s.at("size")).sd, ref::kSize.sd, 1e-15);
  EXPECT_THROW(uniform_moments(s.at("shape")), DomainError);
}

TEST(SpaceText, RoundTrip) {
  for (const ParamSpace& s : {franka_space(), ur5e_space()}) {
    const std::string text = format_space(s);
    EXPECT_EQ(parse_space(text), s);
    EXPECT_EQ(format_space(parse_space(text)), text);
  }
  EXPECT_THROW(parse_space("paramspace 9\nname x\n"), SchemaError);
}

TEST(FormatNumber, ShortestRoundTrip) {
  std::mt19937_64 g(3);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 2000; ++i) {
    const double v = u(g) / (1 + i);
    EXPECT_EQ(parse_number(format_number(v)), v);
  }
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(15.0), "15");
}
