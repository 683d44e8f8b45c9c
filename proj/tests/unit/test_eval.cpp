#include <gtest/gtest.h>

#include <set>

#include "gesture/eval.hpp"
#include "gesture/rng.hpp"
#include "json.hpp"
#include "oracles.hpp"

using namespace gesture;

namespace {

std::vector<BaselineItem> random_pool(std::uint64_t seed, int n, int datasets) {
  Rng rng(seed);
  std::vector<BaselineItem> pool;
  for (int i = 0; i < n; ++i) {
    BaselineItem it;
    it.stroke_id = "s" + std::to_string(i);
    it.dataset_id = "d" + std::to_string(i % datasets);
    it.value = {rng.uniform(0.0, 2.0), rng.uniform(-1.0, 1.0)};
    it.path_length = {rng.uniform(0.1, 1.0) * (1 + i % datasets), rng.uniform(0.1, 0.8)};
    pool.push_back(it);
  }
  return pool;
}

}  // namespace

TEST(Stats, MedianMeanMad) {
  EXPECT_DOUBLE_EQ(median({3.0, 1.0, 2.0}), 2.0);
  EXPECT_DOUBLE_EQ(median({4.0, 1.0, 3.0, 2.0}), 2.5);
  const std::vector<double> v{1.0, 2.0, 3.0, 6.0};
  EXPECT_DOUBLE_EQ(mean(v), 3.0);
  EXPECT_DOUBLE_EQ(mad(v), 1.5);
  EXPECT_THROW(median({}), Error);
  const ErrorStats s = summarize_errors(std::vector<double>{1.0, 2.0, 5.0}, std::vector<double>{1.5, 1.0, 1.0});
  EXPECT_DOUBLE_EQ(s.mean, 5.5 / 3.0);
  EXPECT_DOUBLE_EQ(s.median, 1.0);
}

TEST(Stats, ReductionRounding) {
  EXPECT_EQ(reduction(0.38, 0.31), 18);
  EXPECT_EQ(reduction(0.28, 0.11), 61);
  EXPECT_EQ(reduction(200.0, 199.0), 1);  // 0.5 rounds away from zero
  EXPECT_EQ(reduction(200.0, 201.0), -1);
  EXPECT_EQ(reduction(1.0, 1.5), -50);
  try {
    reduction(0.0, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ZeroBaseline);
  }
}

TEST(Wilcoxon, AllPositiveFive) {
  const std::vector<double> a{1, 2, 3, 4, 5}, b(5, 0.0);
  const WilcoxonResult r = wilcoxon_paired(a, b);
  EXPECT_TRUE(r.exact);
  EXPECT_NEAR(r.p, 0.0625, 1e-15);
  EXPECT_EQ(r.w_plus, 15.0);
  EXPECT_EQ(r.w_minus, 0.0);
  EXPECT_EQ(r.effect, 1);
}

TEST(Wilcoxon, ExactMatchesEnumerationWithTies) {
  Rng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(12));
    std::vector<double> a, b;
    for (int i = 0; i < n; ++i) {
      a.push_back(std::round(rng.uniform(-4.0, 4.0)));  // coarse grid: ties and zeros
      b.push_back(0.0);
    }
    if (std::all_of(a.begin(), a.end(), [](double x) { return x == 0.0; })) a[0] = 1.0;
    const WilcoxonResult r = wilcoxon_paired(a, b, WilcoxonMethod::Exact);
    EXPECT_NEAR(r.p, oracle::wilcoxon_enumerate(a, b), 1e-12);
  }
}

TEST(Wilcoxon, DropsZerosAndRejectsAllZero) {
  const WilcoxonResult r = wilcoxon_paired(std::vector<double>{1, 2, 2, 5}, std::vector<double>{1, 1, 3, 2});
  EXPECT_EQ(r.n, 3);
  try {
    wilcoxon_paired(std::vector<double>{1, 2}, std::vector<double>{1, 2});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoNonzeroDifferences);
  }
  EXPECT_THROW(wilcoxon_paired(std::vector<double>{1}, std::vector<double>{1, 2}), Error);
}

TEST(Wilcoxon, NormalPathNearExactForModerateN) {
  Rng rng(8);
  for (int n = 16; n <= 20; ++n) {
    std::vector<double> a, b(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) a.push_back(rng.normal() + 0.3);
    const double exact = wilcoxon_paired(a, b, WilcoxonMethod::Exact).p;
    const WilcoxonResult approx = wilcoxon_paired(a, b, WilcoxonMethod::Normal);
    EXPECT_FALSE(approx.exact);
    EXPECT_NEAR(approx.p, exact, 0.02);
  }
}

TEST(Wilcoxon, AutoSwitchesAboveTwenty) {
  std::vector<double> a, b(21, 0.0);
  for (int i = 0; i < 21; ++i) a.push_back(i + 1.0);
  EXPECT_FALSE(wilcoxon_paired(a, b).exact);
  a.pop_back();
  b.pop_back();
  EXPECT_TRUE(wilcoxon_paired(a, b).exact);
}

TEST(Bonferroni, SixteenTests) {
  const BonferroniDecision d = bonferroni(0.003);
  EXPECT_DOUBLE_EQ(d.threshold, 0.05 / 16);
  EXPECT_TRUE(d.significant);
  EXPECT_FALSE(bonferroni(0.0032).significant);
}

TEST(Baseline, DrawsRespectBandDatasetAndSelf) {
  const auto pool = random_pool(3, 200, 2);
  const std::vector<BaselineItem> targets(pool.begin(), pool.begin() + 60);
  const BaselineResult r = random_baseline(targets, pool, Restriction::PathLength, 3, 99);
  std::map<std::string, const BaselineItem*> by_id;
  for (const auto& p : pool) by_id[p.stroke_id] = &p;
  ASSERT_EQ(r.draws.size(), 60U * 3 * 2);
  for (const BaselineDraw& d : r.draws) {
    const BaselineItem& t = *by_id.at(d.target);
    const BaselineItem& donor = *by_id.at(d.donor);
    EXPECT_NE(d.target, d.donor);
    EXPECT_EQ(t.dataset_id, donor.dataset_id);
    EXPECT_LT(d.pl_true - d.pl_std / 4, d.pl_donor);
    EXPECT_LT(d.pl_donor, d.pl_true + d.pl_std / 4);
    EXPECT_DOUBLE_EQ(d.error, std::abs(donor.value[static_cast<std::size_t>(d.hand)] - t.value[static_cast<std::size_t>(d.hand)]));
  }
  const auto want = oracle::eligible_fractions(targets, pool);
  for (std::size_t h = 0; h < 2; ++h) {
    EXPECT_EQ(r.eligible_fraction_mean[h], want.mean[h]);
    EXPECT_EQ(r.eligible_fraction_pooled[h], want.pooled[h]);
  }
}

TEST(Baseline, StatsAverageRepeats) {
  const auto pool = random_pool(4, 80, 1);
  const std::vector<BaselineItem> targets(pool.begin(), pool.begin() + 20);
  const BaselineResult r = random_baseline(targets, pool, Restriction::None, 3, 5);
  for (std::size_t h = 0; h < 2; ++h) {
    double mean_sum = 0.0, median_sum = 0.0;
    for (int rep = 0; rep < 3; ++rep) {
      std::vector<double> e;
      for (const auto& d : r.draws) {
        if (d.repeat == rep && d.hand == static_cast<int>(h)) e.push_back(d.error);
      }
      mean_sum += mean(e);
      median_sum += median(e);
    }
    EXPECT_NEAR(r.stats[h].mean, mean_sum / 3, 1e-12);
    EXPECT_NEAR(r.stats[h].median, median_sum / 3, 1e-12);
    EXPECT_EQ(r.eligible_fraction_pooled[h], 1.0);
  }
  const BaselineResult again = random_baseline(targets, pool, Restriction::None, 3, 5);
  EXPECT_EQ(again.target_errors, r.target_errors);
}

TEST(Baseline, NoEligibleDonorNamesTheStroke) {
  std::vector<BaselineItem> pool = random_pool(5, 30, 1);
  pool[7].path_length[1] = 50.0;  // far outside everyone's band
  try {
    random_baseline(std::vector<BaselineItem>{pool[7]}, pool, Restriction::PathLength, 3, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoEligibleDonor);
    EXPECT_NE(std::string(e.what()).find("s7"), std::string::npos);
  }
}

TEST(Baseline, BandIsStrict) {
  EXPECT_FALSE(in_path_length_band(1.0, 1.25, 1.0));
  EXPECT_TRUE(in_path_length_band(1.0, 1.2499, 1.0));
  EXPECT_FALSE(in_path_length_band(1.0, 0.75, 1.0));
}

TEST(Table, CellsAndRoundTrip) {
  EXPECT_EQ(format_error_cell(0.31, 0.38), "0.31 (0.38)");
  EXPECT_EQ(format_reduction_cell(-4), "-4%");
  EXPECT_EQ(format_mad_cell(0.34, 0.37), "0.34/ 0.37");
  ErrorReport r;
  r.param = ParamKind::HandOpening;
  r.hands[0] = {0.0391, {0.0164, 0.0114}, {0.0229, 0.0139}};
  r.hands[1] = {0.0373, {0.0123, 0.0097}, {0.0185, 0.0119}};
  r.length_only = std::array<ErrorStats, 2>{ErrorStats{0.02, 0.01}, ErrorStats{0.03, 0.02}};
  r.compute_reductions();
  EXPECT_EQ(r.hands[0].reduction_mean, 28);
  ErrorReport v;
  v.param = ParamKind::Velocity;
  v.hands[0] = {0.34, {0.31, 0.24}, {0.38, 0.27}};
  v.hands[1] = {0.37, {0.35, 0.28}, {0.43, 0.31}};
  v.compute_reductions();
  const std::vector<ErrorReport> reports{r, v};
  const auto parsed = parse_table_csv(emit_table_csv(reports));
  ASSERT_EQ(parsed.size(), 2U);
  EXPECT_EQ(parsed[0], v);  // canonical parameter order
  EXPECT_EQ(parsed[1], r);
  const std::string text = emit_table_text(reports);
  EXPECT_NE(text.find("1.64 (2.29)"), std::string::npos) << text;
  EXPECT_NE(text.find("3.91/ 3.73"), std::string::npos) << text;
  EXPECT_NE(text.find("0.31 (0.38)"), std::string::npos) << text;
  EXPECT_LT(text.find("velocity"), text.find("hand_opening"));
}

TEST(Table, DisplayUnits) {
  EXPECT_EQ(display_unit(ParamKind::HandOpening), "cm");
  EXPECT_EQ(display_scale(ParamKind::HandOpening), 100.0);
  EXPECT_EQ(display_unit(ParamKind::ArmSwivel), "deg");
  EXPECT_EQ(display_scale(ParamKind::PathLength), 1.0);
}

TEST(StatsJson, CarriesDecision) {
  Comparison c;
  c.name = "velocity_L_vs_random";
  c.test = wilcoxon_paired(std::vector<double>{1, 2, 3, 4, 5}, std::vector<double>(5, 0.0));
  c.decision = bonferroni(c.test.p);
  const auto j = nlohmann::json::parse(stats_json(std::vector<Comparison>{c}));
  const auto& row = j.at("comparisons").at(0);
  EXPECT_EQ(row.at("name"), "velocity_L_vs_random");
  EXPECT_EQ(row.at("method"), "exact");
  EXPECT_DOUBLE_EQ(row.at("p").get<double>(), 0.0625);
  EXPECT_FALSE(row.at("significant").get<bool>());
}
