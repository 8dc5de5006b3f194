#include <gtest/gtest.h>

#include <cstdlib>

#include "field_econ/core.hpp"

using namespace field_econ;

namespace {

nlohmann::json valid_config() {
  return {{"A", 1.0},        {"A_bar", 20.0},   {"alpha", 0.3},         {"gamma", 0.2},
          {"delta", 0.05},   {"kappa", 0.5},    {"d", 1.0},             {"sigma", 0.05},
          {"sigma_X", 0.1},  {"vartheta", 0.2}, {"kappa0", 0.05},       {"kappa1", 0.0},
          {"kappa2", 0.0},   {"chi1", 0.0},     {"chi2", 0.0},          {"alpha_laplace", 0.0},
          {"theta_horizon", 1000.0}};
}

std::vector<ParamIssue> issues_of(const nlohmann::json& cfg) {
  try {
    validate_params(cfg);
  } catch (const ParamError& e) {
    return e.issues();
  }
  return {};
}

}  // namespace

TEST(ValidateParams, AcceptsInRangeInput) {
  const ValidatedParams v = validate_params(valid_config());
  EXPECT_DOUBLE_EQ(v.params.alpha, 0.3);
  EXPECT_DOUBLE_EQ(v.params.A_bar, 20.0);
  EXPECT_TRUE(v.warnings.empty());
  EXPECT_EQ(v.params.normalization, Normalization::kSum);
}

TEST(ValidateParams, RejectsOutOfRangeAlpha) {
  auto cfg = valid_config();
  cfg["alpha"] = 1.5;
  const auto issues = issues_of(cfg);
  ASSERT_EQ(issues.size(), 1u);
  EXPECT_EQ(issues[0].kind, ParamIssue::Kind::kRangeViolation);
  EXPECT_EQ(issues[0].name, "alpha");
  EXPECT_DOUBLE_EQ(issues[0].value, 1.5);
  EXPECT_EQ(issues[0].allowed, "(0, 1)");
}

TEST(ValidateParams, ListsEveryViolation) {
  auto cfg = valid_config();
  cfg["alpha"] = 1.5;
  cfg["d"] = 3.0;
  cfg.erase("kappa");
  cfg["sigma"] = "x";
  const auto issues = issues_of(cfg);
  ASSERT_EQ(issues.size(), 4u);
  int missing = 0, range = 0, type = 0;
  for (const auto& i : issues) {
    missing += i.kind == ParamIssue::Kind::kMissingField;
    range += i.kind == ParamIssue::Kind::kRangeViolation;
    type += i.kind == ParamIssue::Kind::kTypeError;
  }
  EXPECT_EQ(missing, 1);
  EXPECT_EQ(range, 2);
  EXPECT_EQ(type, 1);
}

TEST(ValidateParams, MissingFieldNamed) {
  auto cfg = valid_config();
  cfg.erase("chi2");
  const auto issues = issues_of(cfg);
  ASSERT_EQ(issues.size(), 1u);
  EXPECT_EQ(issues[0].kind, ParamIssue::Kind::kMissingField);
  EXPECT_EQ(issues[0].describe(), "MissingField(\"chi2\")");
}

TEST(ValidateParams, NearSingularGammaWarns) {
  auto cfg = valid_config();
  cfg["gamma"] = 0.999;
  const ValidatedParams v = validate_params(cfg);
  ASSERT_EQ(v.warnings.size(), 1u);
  EXPECT_NE(v.warnings[0].find("near-singular"), std::string::npos);
  // 1/(1-0.999) = 1000
  EXPECT_NE(v.warnings[0].find("1000"), std::string::npos);
}

TEST(ValidateParams, StiffnessRatioEnforced) {
  auto cfg = valid_config();
  cfg["A_bar"] = 5.0;
  const auto issues = issues_of(cfg);
  ASSERT_EQ(issues.size(), 1u);
  EXPECT_EQ(issues[0].name, "A_bar/A");
}

TEST(ValidateParams, NormalizationKey) {
  auto cfg = valid_config();
  cfg["interaction_normalization"] = "mean";
  EXPECT_EQ(validate_params(cfg).params.normalization, Normalization::kMean);
  cfg["interaction_normalization"] = "median";
  EXPECT_EQ(issues_of(cfg).size(), 1u);
}

TEST(ValidateParams, IgnoresRunKeys) {
  auto cfg = valid_config();
  cfg["n_agents"] = 10;
  EXPECT_NO_THROW(validate_params(cfg));
}

TEST(ValidateParams, RoundTripsThroughJson) {
  auto cfg = valid_config();
  cfg["kappa1"] = 0.25;
  const ModelParams p = validate_params(cfg).params;
  const ModelParams q = validate_params(params_to_json(p)).params;
  for (const auto& k : model_keys()) EXPECT_EQ(get_param(p, k), get_param(q, k)) << k;
}

TEST(Params, GetSetByName) {
  ModelParams p;
  set_param(p, "kappa2", 0.7);
  EXPECT_DOUBLE_EQ(p.kappa2, 0.7);
  EXPECT_DOUBLE_EQ(get_param(p, "kappa2"), 0.7);
  EXPECT_THROW(get_param(p, "nope"), std::out_of_range);
  EXPECT_EQ(model_keys().size(), 17u);
}

// Known-answer vectors of Philox4x32-10 published with the Random123 library.
TEST(Philox, KnownAnswers) {
  const auto a = philox4x32({0, 0, 0, 0}, {0, 0});
  EXPECT_EQ(a, (std::array<std::uint32_t, 4>{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
  const auto b = philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff},
                            {0xffffffff, 0xffffffff});
  EXPECT_EQ(b, (std::array<std::uint32_t, 4>{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
  const auto c = philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344},
                            {0xa4093822, 0x299f31d0});
  EXPECT_EQ(c, (std::array<std::uint32_t, 4>{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(Streams, ReplayIsIdentical) {
  const RngStreams a = make_streams(42, 3);
  const RngStreams b = make_streams(42, 3);
  Substream sa = a.stream(1), sb = b.stream(1);
  const double a1 = sa.normal(), a2 = sa.normal();
  EXPECT_EQ(a1, sb.normal());
  EXPECT_EQ(a2, sb.normal());
}

TEST(Streams, SeedSensitivity) {
  Substream a = make_streams(42, 3).stream(0);
  Substream b = make_streams(43, 3).stream(0);
  EXPECT_NE(a.normal(), b.normal());
}

TEST(Streams, SubstreamIndependentOfCount) {
  Substream a = make_streams(42, 3).stream(0);
  Substream b = make_streams(42, 5).stream(0);
  for (int k = 0; k < 10; ++k) EXPECT_EQ(a.normal(), b.normal());
  EXPECT_EQ(make_streams(42, 3).stream(2).normal_pair_at(7, 0).first,
            make_streams(42, 5).stream(2).normal_pair_at(7, 0).first);
}

TEST(Streams, DistinctAgentsDiffer) {
  const RngStreams r = make_streams(1, 4);
  EXPECT_NE(r.stream(0).normal_pair_at(0, 0).first, r.stream(1).normal_pair_at(0, 0).first);
}

TEST(Streams, NormalMoments) {
  Substream s = make_streams(7, 1).stream(0);
  const int n = 200000;
  double m = 0.0, v = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = s.normal();
    m += z;
    v += z * z;
  }
  m /= n;
  v = v / n - m * m;
  // standard errors: 1/sqrt(n) = 0.0022 for the mean, sqrt(2/n) = 0.0032 for the variance
  EXPECT_NEAR(m, 0.0, 0.011);
  EXPECT_NEAR(v, 1.0, 0.016);
}

TEST(Streams, UniformInUnitInterval) {
  Substream s = make_streams(3, 1).stream(0);
  for (int i = 0; i < 10000; ++i) {
    const double u = s.uniform();
    EXPECT_GT(u, 0.0);
    EXPECT_LE(u, 1.0);
  }
}

TEST(Threads, Precedence) {
  ::setenv("FIELD_ECON_THREADS", "3", 1);
  EXPECT_EQ(resolve_threads(std::nullopt), 3);
  EXPECT_EQ(resolve_threads(5), 5);
  ::unsetenv("FIELD_ECON_THREADS");
  EXPECT_GE(resolve_threads(std::nullopt), 1);
}

TEST(Ensemble, Accessors) {
  Ensemble e;
  e.agents = {{1.0, -0.5, 2.0}, {3.0, 0.5, 4.0}};
  EXPECT_EQ(e.capitals(), (std::vector<double>{1.0, 3.0}));
  EXPECT_EQ(e.positions(), (std::vector<double>{-0.5, 0.5}));
  EXPECT_EQ(e.prices(), (std::vector<double>{2.0, 4.0}));
}
