#include <gtest/gtest.h>

#include "gffforge/experiments.hpp"

using namespace gffforge;
using nlohmann::json;

TEST(Config, DefaultsAreMergedUnderUserValues) {
  const auto c = make_config({{"experiment", "wick-fourth"}, {"n_samples", 2000}});
  EXPECT_EQ(c.n_samples, 2000u);
  EXPECT_EQ(c.lattice_size, 64);
  EXPECT_EQ(c.seed, 9u);
  EXPECT_DOUBLE_EQ(c.tol("wick"), 0.15);
  const auto d = make_config({{"experiment", "wick-fourth"}, {"tolerances", {{"wick", 0.2}}}});
  EXPECT_DOUBLE_EQ(d.tol("wick"), 0.2);
}

TEST(Config, EveryExperimentHasValidDefaults) {
  for (const auto &[name, spec] : experiments()) {
    const auto c = make_config({{"experiment", name}});
    EXPECT_EQ(c.experiment, name);
    const auto j = config_json(c);
    EXPECT_EQ(j["experiment"], name);
    EXPECT_EQ(config_json(make_config(j)), j) << name;
  }
}

TEST(Config, RejectsInvalidInput) {
  const std::vector<json> bad = {
      json::array(),
      {{"n_samples", 10}},
      {{"experiment", "no-such-experiment"}},
      {{"experiment", "wick-fourth"}, {"latice_size", 64}},
      {{"experiment", "wick-fourth"}, {"n_samples", -5}},
      {{"experiment", "wick-fourth"}, {"n_samples", 2.5}},
      {{"experiment", "wick-fourth"}, {"seed", -1}},
      {{"experiment", "wick-fourth"}, {"seed", "abc"}},
      {{"experiment", "wick-fourth"}, {"tolerances", {{"mass_rel", 0.1}}}},
      {{"experiment", "wick-fourth"}, {"tolerances", {{"wick", -0.1}}}},
      {{"experiment", "wick-fourth"}, {"tolerances", 3}},
      {{"experiment", "calibrate"}, {"t_grid", {1.0, 0.5}}},
      {{"experiment", "calibrate"}, {"t_grid", json::array()}},
      {{"experiment", "excursion-mass"}, {"eps", 0.0}},
      {{"experiment", "wick-fourth"}, {"output_dir", 5}},
  };
  for (const auto &j : bad)
    EXPECT_THROW(make_config(j), ConfigError) << j.dump();
}

TEST(Experiments, HarmonicSinesAreExact) {
  const auto out = run_experiment(make_config({{"experiment", "harmonic-sines"}}));
  ASSERT_FALSE(out.reports.empty());
  EXPECT_TRUE(out.passed());
  for (const auto &r : out.reports)
    EXPECT_LE(std::abs(r.statistic), 1e-10) << r.name;
}

TEST(Experiments, ReportsAreReproducible) {
  const auto c = make_config({{"experiment", "wick-fourth"}, {"n_samples", 2000}, {"lattice_size", 32}});
  const auto a = run_experiment(c), b = run_experiment(c);
  EXPECT_EQ(a.report_json().dump(), b.report_json().dump());
  EXPECT_EQ(a.experiment, "wick-fourth");
}

TEST(Experiments, ExcursionErrorsSurfaceAsDomainErrors) {
  const auto c = make_config({{"experiment", "excursion-mass"}, {"eps", 0.5}, {"n_samples", 10}});
  EXPECT_THROW(run_experiment(c), DomainError);
}

TEST(Experiments, CoarseLatticeIsAResolutionError) {
  const auto c = make_config({{"experiment", "char-bm-stable"}, {"lattice_size", 16}});
  EXPECT_THROW(run_experiment(c), ResolutionError);
}

TEST(Experiments, SineCovarianceModelConstant) {
  const auto out = run_experiment(
      make_config({{"experiment", "sine-covariance"}, {"n_samples", 2000}}));
  EXPECT_TRUE(out.passed()) << out.report_json().dump(2);
}
