#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <string>

#include "abm/config.hpp"
#include "abm/manifest.hpp"

using namespace abm;

namespace {

std::string replace_line(std::string doc, const std::string& key, const std::string& line) {
    const auto pos = doc.find("\n" + key + " =");
    EXPECT_NE(pos, std::string::npos) << key;
    const auto end = doc.find('\n', pos + 1);
    return doc.replace(pos + 1, end - pos - 1, line);
}

LoadedConfig parse(const std::string& doc) {
    std::istringstream in(doc);
    return parse_config(in, "test");
}

}  // namespace

TEST(Config, AnnualRatesScaledByDt) {
    const auto cfg = default_config();
    EXPECT_NEAR(cfg.params.g, 0.005, 1e-15);
    EXPECT_NEAR(cfg.params.gamma_Z, 0.025, 1e-15);
    EXPECT_NEAR(cfg.params.delta, 0.0175, 1e-15);
    EXPECT_NEAR(cfg.params.r_M, 0.00025, 1e-15);
    EXPECT_NEAR(cfg.params.r_N, 0.005, 1e-15);
    EXPECT_NEAR(cfg.params.c, 0.1, 1e-15);
}

TEST(Config, DeviationsScaledBySqrtDt) {
    const auto cfg = default_config();
    EXPECT_NEAR(cfg.params.sigma_a, 0.015, 1e-15);
    EXPECT_NEAR(cfg.params.sigma_P, 0.015, 1e-15);
    EXPECT_NEAR(cfg.params.sigma_w, 0.015, 1e-15);
    EXPECT_NEAR(cfg.params.sigma_r, 0.015, 1e-15);
}

TEST(Config, StepCountAndRepayment) {
    const auto cfg = default_config();
    EXPECT_EQ(cfg.params.steps(), 400);
    EXPECT_EQ(cfg.params.n_repay, 40);
    EXPECT_DOUBLE_EQ(cfg.params.rho * cfg.params.n_repay, 1.0);
}

TEST(Config, DimensionlessValuesUnscaled) {
    const auto& p = default_config().params;
    EXPECT_EQ(p.nu, 3.0);
    EXPECT_EQ(p.xi, 0.1);
    EXPECT_EQ(p.kappa1, 0.06);
    EXPECT_EQ(p.kappa2, 1.0);
    EXPECT_EQ(p.d0, 0.5);
    EXPECT_EQ(p.n_households, 2000);
    EXPECT_EQ(p.n_cfirms, 200);
    EXPECT_EQ(p.n_kfirms, 50);
    EXPECT_EQ(p.n_banks, 10);
    EXPECT_EQ(p.n_B_visits, 1);
}

TEST(Config, CanonicalScenariosDifferOnlyInGrowthAndDebt) {
    const auto cfg = default_config();
    ASSERT_EQ(cfg.scenarios.size(), 4u);
    const auto* g1 = cfg.find("growth_s1");
    const auto* g2 = cfg.find("growth_s2");
    const auto* z1 = cfg.find("zero_growth_s1");
    const auto* z2 = cfg.find("zero_growth_s2");
    ASSERT_TRUE(g1 && g2 && z1 && z2);
    EXPECT_EQ(g1->g_override, 0.02);
    EXPECT_EQ(z1->g_override, 0.0);
    EXPECT_EQ(g1->d1_override, 3.0);
    EXPECT_EQ(g1->d2_override, 2.0);
    EXPECT_EQ(g2->d1_override, 5.0);
    EXPECT_EQ(g2->d2_override, 3.0);
    EXPECT_EQ(z2->d1_override, 5.0);
    for (const auto* s : {g1, g2, z1, z2}) {
        EXPECT_EQ(s->burn_in_steps, 200);
        EXPECT_EQ(s->recorded_steps, 400);
        EXPECT_EQ(s->n_mc_runs, 50);
        EXPECT_EQ(s->master_seed, 42u);
    }
    const Params a = apply_scenario(cfg.params, *g2), b = apply_scenario(cfg.params, *z2);
    EXPECT_NEAR(a.g, 0.005, 1e-15);
    EXPECT_EQ(b.g, 0.0);
    EXPECT_EQ(a.d1, 5.0);
    EXPECT_EQ(a.sigma_a, b.sigma_a);
    EXPECT_EQ(cfg.find("nope"), nullptr);
}

TEST(Config, MissingKeyNamed) {
    std::string doc = kDefaultConfig;
    doc = replace_line(doc, "kappa2", "");
    try {
        parse(doc);
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.key(), "kappa2");
    }
}

TEST(Config, OutOfRangeNamed) {
    try {
        parse(replace_line(kDefaultConfig, "c", "c = 4.2"));
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.key(), "c");
    }
    EXPECT_THROW(parse(replace_line(kDefaultConfig, "xi", "xi = 1")), ConfigError);
    EXPECT_THROW(parse(replace_line(kDefaultConfig, "gamma_P", "gamma_P = 0")), ConfigError);
    EXPECT_THROW(parse(replace_line(kDefaultConfig, "sigma_a", "sigma_a = -0.1")), ConfigError);
}

TEST(Config, ParseErrors) {
    EXPECT_THROW(parse(replace_line(kDefaultConfig, "nu", "nu = three")), ConfigError);
    EXPECT_THROW(parse(replace_line(kDefaultConfig, "nu", "nu 3")), std::exception);
    EXPECT_THROW(parse(std::string(kDefaultConfig) + "\nbogus = 1\n"), ConfigError);
    EXPECT_THROW(parse(std::string(kDefaultConfig) + "\n[scenario.extra]\nnu = 4\n"), ConfigError);
    EXPECT_THROW(parse("[run]\nruns = 3\n"), ConfigError);
}

TEST(Config, StepCountMustBeInteger) {
    EXPECT_THROW(parse(replace_line(kDefaultConfig, "years", "years = 100.1")), ConfigError);
    EXPECT_THROW(parse(replace_line(kDefaultConfig, "n_repay_years", "n_repay_years = 10.1")), ConfigError);
}

TEST(Config, CustomDtRescales) {
    std::string doc = replace_line(kDefaultConfig, "dt", "dt = 1");
    const auto cfg = parse(doc);
    EXPECT_NEAR(cfg.params.g, 0.02, 1e-15);
    EXPECT_NEAR(cfg.params.sigma_a, 0.03, 1e-15);
    EXPECT_EQ(cfg.params.steps(), 100);
    EXPECT_EQ(cfg.params.n_repay, 10);
}

TEST(Config, MissingFileReported) {
    EXPECT_THROW(load_config("/nonexistent/config.toml"), ConfigError);
}

TEST(Config, ShippedFileMatchesBuiltIn) {
    const auto file = load_config(std::string(ABM_SOURCE_DIR) + "/configs/paper.toml");
    const auto builtin = default_config();
    EXPECT_EQ(params_hash(file.params), params_hash(builtin.params));
    ASSERT_EQ(file.scenarios.size(), builtin.scenarios.size());
    for (const auto& s : builtin.scenarios) {
        const auto* f = file.find(s.name);
        ASSERT_NE(f, nullptr) << s.name;
        EXPECT_EQ(params_hash(apply_scenario(file.params, *f)), params_hash(apply_scenario(builtin.params, s)));
        EXPECT_EQ(f->n_mc_runs, s.n_mc_runs);
        EXPECT_EQ(f->master_seed, s.master_seed);
    }
}
