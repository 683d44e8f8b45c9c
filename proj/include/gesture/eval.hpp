#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gesture/common.hpp"
#include "gesture/constants.hpp"

namespace gesture {

struct ErrorStats {
  double mean = 0.0;
  double median = 0.0;
  bool operator==(const ErrorStats&) const = default;
};

/// Median of an even-length set is the mean of the two middle values.
double median(std::vector<double> v);
double mean(std::span<const double> v);
/// Mean absolute deviation about the mean.
double mad(std::span<const double> v);

std::vector<double> abs_errors(std::span<const double> predictions, std::span<const double> truths);
ErrorStats summarize_errors(std::span<const double> predictions, std::span<const double> truths);
ErrorStats summarize(std::span<const double> errors);

/// round(100 (baseline - model) / baseline), halves away from zero.
int reduction(double baseline, double model);

// ---- random sampling baseline ----

struct BaselineItem {
  std::string stroke_id;
  std::string dataset_id;
  std::array<double, 2> value{};        // parameter value per hand
  std::array<double, 2> path_length{};  // per hand
};

enum class Restriction { None, PathLength };

struct BaselineDraw {
  int repeat = 0;
  int hand = 0;
  std::string target;
  std::string donor;
  double pl_true = 0.0;
  double pl_donor = 0.0;
  double pl_std = 0.0;
  double error = 0.0;
};

struct BaselineResult {
  std::array<ErrorStats, 2> stats;                    // average over repeats of per-repeat mean and median
  std::array<std::vector<double>, 2> target_errors;   // per target, averaged over repeats
  std::vector<BaselineDraw> draws;
  // eligible donors / same-dataset donors, averaged over targets and pooled
  std::array<double, 2> eligible_fraction_mean{};
  std::array<double, 2> eligible_fraction_pooled{};
};

/// Population std of donor path lengths per dataset and hand.
std::array<double, 2> dataset_path_length_std(std::span<const BaselineItem> pool, std::string_view dataset_id);

/// pl_true - std/4 < pl_donor < pl_true + std/4.
bool in_path_length_band(double pl_true, double pl_donor, double pl_std);

/// For each target and repeat, substitute a uniformly drawn donor of the same
/// dataset (never the target itself). Throws NoEligibleDonor naming the stroke.
BaselineResult random_baseline(std::span<const BaselineItem> targets, std::span<const BaselineItem> pool,
                               Restriction restriction, int repeats = constants::kBaselineRepeats,
                               std::uint64_t seed = 0);

// ---- significance ----

enum class WilcoxonMethod { Auto, Exact, Normal };

struct WilcoxonResult {
  double w_plus = 0.0;
  double w_minus = 0.0;
  double w = 0.0;  // min(w_plus, w_minus)
  int n = 0;       // nonzero differences
  double p = 1.0;  // two-sided
  double z = 0.0;  // normal statistic, 0 for the exact path
  bool exact = false;
  int effect = 0;  // sign of w_plus - w_minus, a - b
};

/// Paired signed-rank test on a - b. Zero differences are dropped; tied
/// magnitudes share their average rank. Auto is exact for n <= 20.
WilcoxonResult wilcoxon_paired(std::span<const double> a, std::span<const double> b,
                               WilcoxonMethod method = WilcoxonMethod::Auto);

struct BonferroniDecision {
  double p = 1.0;
  double threshold = 0.0;
  bool significant = false;
};
BonferroniDecision bonferroni(double p, int n_tests = constants::kBonferroniTests,
                              double alpha = constants::kSignificanceLevel);

// ---- reports ----

struct HandReport {
  double mad = 0.0;
  ErrorStats model;
  ErrorStats baseline;
  int reduction_mean = 0;
  int reduction_median = 0;
  bool operator==(const HandReport&) const = default;
};

struct ErrorReport {
  ParamKind param = ParamKind::Velocity;
  std::array<HandReport, 2> hands;
  std::optional<std::array<ErrorStats, 2>> length_only;

  /// Fills both reductions from the model and baseline values.
  void compute_reductions();
  bool operator==(const ErrorReport&) const = default;
};

/// Physical unit used in the rendered table, and the factor from SI.
std::string_view display_unit(ParamKind p);
double display_scale(ParamKind p);

/// CSV in SI units at full precision; rows in canonical parameter order.
std::string emit_table_csv(std::span<const ErrorReport> reports);
std::vector<ErrorReport> parse_table_csv(std::string_view text);
/// Aligned text rendering in display units with two decimals.
std::string emit_table_text(std::span<const ErrorReport> reports);

/// Individual rendered cells, as the text table prints them.
std::string format_error_cell(double model, double baseline);  // "0.31 (0.38)"
std::string format_reduction_cell(int percent);                 // "19%"
std::string format_mad_cell(double left, double right);         // "0.34/ 0.37"

struct Comparison {
  std::string name;
  ParamKind param = ParamKind::Velocity;
  Hand hand = Hand::Left;
  std::string against;  // "random_baseline" or "length_only"
  WilcoxonResult test;
  BonferroniDecision decision;
};

std::string stats_json(std::span<const Comparison> comparisons);

}  // namespace gesture
