#include "gesture/eval.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>

#include "gesture/csv.hpp"
#include "gesture/rng.hpp"
#include "json.hpp"

namespace gesture {

double mean(std::span<const double> v) {
  if (v.empty()) throw Error(ErrorCode::EmptySet, "mean of an empty set");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double median(std::vector<double> v) {
  if (v.empty()) throw Error(ErrorCode::EmptySet, "median of an empty set");
  const std::size_t n = v.size();
  std::sort(v.begin(), v.end());
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mad(std::span<const double> v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += std::abs(x - m);
  return s / static_cast<double>(v.size());
}

std::vector<double> abs_errors(std::span<const double> predictions, std::span<const double> truths) {
  if (predictions.size() != truths.size()) {
    throw Error(ErrorCode::ShapeMismatch, "prediction and truth counts differ");
  }
  std::vector<double> e(predictions.size());
  for (std::size_t i = 0; i < e.size(); ++i) e[i] = std::abs(predictions[i] - truths[i]);
  return e;
}

ErrorStats summarize(std::span<const double> errors) {
  return {mean(errors), median(std::vector<double>(errors.begin(), errors.end()))};
}

ErrorStats summarize_errors(std::span<const double> predictions, std::span<const double> truths) {
  const auto e = abs_errors(predictions, truths);
  return summarize(e);
}

int reduction(double baseline, double model) {
  if (baseline == 0.0) throw Error(ErrorCode::ZeroBaseline, "reduction against a zero baseline is undefined");
  return static_cast<int>(std::lround(100.0 * (baseline - model) / baseline));
}

// ---- random sampling baseline ----

std::array<double, 2> dataset_path_length_std(std::span<const BaselineItem> pool, std::string_view dataset_id) {
  std::array<double, 2> out{};
  for (int h = 0; h < 2; ++h) {
    std::vector<double> pl;
    for (const auto& it : pool) {
      if (it.dataset_id == dataset_id) pl.push_back(it.path_length[static_cast<std::size_t>(h)]);
    }
    if (pl.empty()) throw Error(ErrorCode::EmptySet, "dataset '" + std::string(dataset_id) + "' has no strokes");
    const double m = mean(pl);
    double ss = 0.0;
    for (double x : pl) ss += (x - m) * (x - m);
    out[static_cast<std::size_t>(h)] = std::sqrt(ss / static_cast<double>(pl.size()));
  }
  return out;
}

bool in_path_length_band(double pl_true, double pl_donor, double pl_std) {
  const double half = pl_std / constants::kPathLengthBandDivisor;
  return pl_true - half < pl_donor && pl_donor < pl_true + half;
}

BaselineResult random_baseline(std::span<const BaselineItem> targets, std::span<const BaselineItem> pool,
                               Restriction restriction, int repeats, std::uint64_t seed) {
  if (targets.empty()) throw Error(ErrorCode::EmptySet, "random baseline needs at least one target");
  if (repeats < 1) throw Error(ErrorCode::ConfigInvalid, "baseline repeats must be >= 1");

  std::map<std::string, std::array<double, 2>, std::less<>> stds;
  std::map<std::string, std::vector<std::size_t>, std::less<>> by_dataset;
  for (std::size_t i = 0; i < pool.size(); ++i) by_dataset[pool[i].dataset_id].push_back(i);
  for (const auto& [ds, _] : by_dataset) stds[ds] = dataset_path_length_std(pool, ds);

  BaselineResult r;
  const std::size_t n = targets.size();
  // eligible[target][hand] -> pool indices
  std::vector<std::array<std::vector<std::size_t>, 2>> eligible(n);
  std::array<double, 2> frac_sum{}, elig_total{}, pool_total{};
  for (std::size_t i = 0; i < n; ++i) {
    const BaselineItem& t = targets[i];
    const auto ds = by_dataset.find(t.dataset_id);
    std::vector<std::size_t> same;
    if (ds != by_dataset.end()) {
      for (std::size_t k : ds->second) {
        if (pool[k].stroke_id != t.stroke_id) same.push_back(k);
      }
    }
    for (int h = 0; h < 2; ++h) {
      const auto hs = static_cast<std::size_t>(h);
      if (same.empty()) {
        throw Error(ErrorCode::NoEligibleDonor, "stroke '" + t.stroke_id + "' has no other stroke in dataset '" +
                                                    t.dataset_id + "' to draw from");
      }
      const double sd = stds.at(t.dataset_id)[hs];
      for (std::size_t k : same) {
        if (restriction == Restriction::None || in_path_length_band(t.path_length[hs], pool[k].path_length[hs], sd)) {
          eligible[i][hs].push_back(k);
        }
      }
      if (eligible[i][hs].empty()) {
        throw Error(ErrorCode::NoEligibleDonor, "stroke '" + t.stroke_id + "' (" + hand_suffix(static_cast<Hand>(h)) +
                                                    " hand) has no donor within the path-length band of dataset '" +
                                                    t.dataset_id + "'");
      }
      frac_sum[hs] += static_cast<double>(eligible[i][hs].size()) / static_cast<double>(same.size());
      elig_total[hs] += static_cast<double>(eligible[i][hs].size());
      pool_total[hs] += static_cast<double>(same.size());
    }
  }
  for (std::size_t h = 0; h < 2; ++h) {
    r.eligible_fraction_mean[h] = frac_sum[h] / static_cast<double>(n);
    r.eligible_fraction_pooled[h] = elig_total[h] / pool_total[h];
    r.target_errors[h].assign(n, 0.0);
  }

  std::array<ErrorStats, 2> acc{};
  for (int rep = 0; rep < repeats; ++rep) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(rep)));
    std::array<std::vector<double>, 2> errs{std::vector<double>(n), std::vector<double>(n)};
    for (std::size_t i = 0; i < n; ++i) {
      const BaselineItem& t = targets[i];
      for (int h = 0; h < 2; ++h) {
        const auto hs = static_cast<std::size_t>(h);
        const auto& el = eligible[i][hs];
        const BaselineItem& d = pool[el[static_cast<std::size_t>(rng.below(el.size()))]];
        BaselineDraw draw;
        draw.repeat = rep;
        draw.hand = h;
        draw.target = t.stroke_id;
        draw.donor = d.stroke_id;
        draw.pl_true = t.path_length[hs];
        draw.pl_donor = d.path_length[hs];
        draw.pl_std = stds.at(t.dataset_id)[hs];
        draw.error = std::abs(d.value[hs] - t.value[hs]);
        errs[hs][i] = draw.error;
        r.target_errors[hs][i] += draw.error / repeats;
        r.draws.push_back(std::move(draw));
      }
    }
    for (std::size_t h = 0; h < 2; ++h) {
      const ErrorStats s = summarize(errs[h]);
      acc[h].mean += s.mean;
      acc[h].median += s.median;
    }
  }
  for (std::size_t h = 0; h < 2; ++h) r.stats[h] = {acc[h].mean / repeats, acc[h].median / repeats};
  return r;
}

// ---- significance ----

WilcoxonResult wilcoxon_paired(std::span<const double> a, std::span<const double> b, WilcoxonMethod method) {
  if (a.size() != b.size()) throw Error(ErrorCode::ShapeMismatch, "paired samples differ in length");
  if (a.empty()) throw Error(ErrorCode::EmptySet, "paired test on empty samples");
  std::vector<double> d;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] - b[i] != 0.0) d.push_back(a[i] - b[i]);
  }
  if (d.empty()) throw Error(ErrorCode::NoNonzeroDifferences, "all paired differences are zero");
  const int n = static_cast<int>(d.size());

  std::vector<int> order(d.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int x, int y) { return std::abs(d[x]) < std::abs(d[y]); });
  // doubled ranks keep tied averages integral
  std::vector<long> rank2(d.size());
  double tie_term = 0.0;
  for (int i = 0; i < n;) {
    int j = i;
    while (j + 1 < n && std::abs(d[order[j + 1]]) == std::abs(d[order[i]])) ++j;
    for (int k = i; k <= j; ++k) rank2[static_cast<std::size_t>(order[k])] = (i + 1) + (j + 1);
    const double t = j - i + 1;
    tie_term += t * t * t - t;
    i = j + 1;
  }
  long wp2 = 0, total2 = 0;
  for (int i = 0; i < n; ++i) {
    total2 += rank2[static_cast<std::size_t>(i)];
    if (d[static_cast<std::size_t>(i)] > 0) wp2 += rank2[static_cast<std::size_t>(i)];
  }
  WilcoxonResult r;
  r.n = n;
  r.w_plus = wp2 / 2.0;
  r.w_minus = (total2 - wp2) / 2.0;
  r.w = std::min(r.w_plus, r.w_minus);
  r.effect = r.w_plus > r.w_minus ? 1 : (r.w_plus < r.w_minus ? -1 : 0);

  const bool exact = method == WilcoxonMethod::Exact || (method == WilcoxonMethod::Auto && n <= constants::kExactWilcoxonMaxN);
  if (exact) {
    if (n > 50) throw Error(ErrorCode::OutOfRange, "exact signed-rank distribution limited to n <= 50");
    // distribution of the doubled positive-rank sum over all 2^n sign assignments
    std::vector<double> count(static_cast<std::size_t>(total2) + 1, 0.0);
    count[0] = 1.0;
    long reach = 0;
    for (int i = 0; i < n; ++i) {
      const long rk = rank2[static_cast<std::size_t>(i)];
      for (long s = reach; s >= 0; --s) count[static_cast<std::size_t>(s + rk)] += count[static_cast<std::size_t>(s)];
      reach += rk;
    }
    const long obs = std::labs(2 * wp2 - total2);
    double hits = 0.0;
    for (long s = 0; s <= total2; ++s) {
      if (std::labs(2 * s - total2) >= obs) hits += count[static_cast<std::size_t>(s)];
    }
    r.p = std::min(1.0, hits / std::ldexp(1.0, n));
    r.exact = true;
  } else {
    const double nn = n;
    const double mu = nn * (nn + 1.0) / 4.0;
    const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
    const double diff = r.w_plus - mu;
    const double cc = std::max(std::abs(diff) - 0.5, 0.0);
    r.z = var > 0.0 ? std::copysign(cc / std::sqrt(var), diff) : 0.0;
    r.p = std::min(1.0, std::erfc(std::abs(r.z) / std::sqrt(2.0)));
  }
  return r;
}

BonferroniDecision bonferroni(double p, int n_tests, double alpha) {
  if (n_tests < 1) throw Error(ErrorCode::ConfigInvalid, "Bonferroni correction needs at least one test");
  BonferroniDecision d;
  d.p = p;
  d.threshold = alpha / n_tests;
  d.significant = p < d.threshold;
  return d;
}

// ---- reports ----

void ErrorReport::compute_reductions() {
  for (HandReport& h : hands) {
    h.reduction_mean = reduction(h.baseline.mean, h.model.mean);
    h.reduction_median = reduction(h.baseline.median, h.model.median);
  }
}

std::string_view display_unit(ParamKind p) {
  switch (p) {
    case ParamKind::Velocity: return "m/s";
    case ParamKind::InitialAcceleration: return "m/s^2";
    case ParamKind::PathLength:
    case ParamKind::MajorAxisLength: return "m";
    case ParamKind::ArmSwivel: return "deg";
    case ParamKind::HandOpening: return "cm";
  }
  return "";
}

double display_scale(ParamKind p) { return p == ParamKind::HandOpening ? 100.0 : 1.0; }

namespace {

std::vector<const ErrorReport*> ordered(std::span<const ErrorReport> reports) {
  if (reports.empty()) throw Error(ErrorCode::EmptySet, "no reports to emit");
  std::vector<const ErrorReport*> out;
  for (ParamKind p : kAllParams) {
    const ErrorReport* found = nullptr;
    for (const auto& r : reports) {
      if (r.param != p) continue;
      if (found) throw Error(ErrorCode::MissingRows, "duplicate report for '" + std::string(param_name(p)) + "'");
      found = &r;
    }
    if (found) out.push_back(found);
  }
  return out;
}

std::string fixed2(double v) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(2) << v;
  std::string out = s.str();
  return out == "-0.00" ? "0.00" : out;
}

const std::vector<std::string>& table_columns() {
  static const std::vector<std::string> cols = [] {
    std::vector<std::string> c{"parameter", "mad_L", "mad_R"};
    for (const char* stat : {"mean", "median"}) {
      for (const char* h : {"L", "R"}) {
        c.push_back(std::string(stat) + "_" + h);
        c.push_back(std::string(stat) + "_random_" + h);
        c.push_back(std::string(stat) + "_red_" + h);
      }
    }
    for (const char* stat : {"mean", "median"}) {
      for (const char* h : {"L", "R"}) c.push_back(std::string("length_only_") + stat + "_" + h);
    }
    return c;
  }();
  return cols;
}

}  // namespace

std::string format_error_cell(double model, double baseline) { return fixed2(model) + " (" + fixed2(baseline) + ")"; }
std::string format_reduction_cell(int percent) { return std::to_string(percent) + "%"; }
std::string format_mad_cell(double left, double right) { return fixed2(left) + "/ " + fixed2(right); }

std::string emit_table_csv(std::span<const ErrorReport> reports) {
  const auto rows = ordered(reports);
  std::ostringstream out;
  const auto& cols = table_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << "\n";
  for (const ErrorReport* r : rows) {
    out << param_name(r->param) << "," << csv::format_double(r->hands[0].mad) << ","
        << csv::format_double(r->hands[1].mad);
    for (bool use_mean : {true, false}) {
      for (const HandReport& h : r->hands) {
        out << "," << csv::format_double(use_mean ? h.model.mean : h.model.median) << ","
            << csv::format_double(use_mean ? h.baseline.mean : h.baseline.median) << ","
            << (use_mean ? h.reduction_mean : h.reduction_median);
      }
    }
    for (bool use_mean : {true, false}) {
      for (int h = 0; h < 2; ++h) {
        out << ",";
        if (r->length_only) {
          const ErrorStats& s = (*r->length_only)[static_cast<std::size_t>(h)];
          out << csv::format_double(use_mean ? s.mean : s.median);
        }
      }
    }
    out << "\n";
  }
  return out.str();
}

std::vector<ErrorReport> parse_table_csv(std::string_view text) {
  const csv::Table t = csv::parse(text);
  if (t.header != table_columns()) throw Error(ErrorCode::Io, "report CSV has unexpected columns");
  std::vector<ErrorReport> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& row = t.rows[i];
    const int line = t.lines[i];
    if (row.size() != t.header.size()) {
      throw Error(ErrorCode::Io, "report CSV line " + std::to_string(line) + ": wrong column count");
    }
    auto num = [&](std::size_t c) { return csv::to_double(row[c], line, t.header[c]); };
    auto integer = [&](std::size_t c) { return static_cast<int>(std::lround(num(c))); };
    ErrorReport r;
    r.param = parse_param(row[0]);
    r.hands[0].mad = num(1);
    r.hands[1].mad = num(2);
    std::size_t c = 3;
    for (bool use_mean : {true, false}) {
      for (HandReport& h : r.hands) {
        (use_mean ? h.model.mean : h.model.median) = num(c);
        (use_mean ? h.baseline.mean : h.baseline.median) = num(c + 1);
        (use_mean ? h.reduction_mean : h.reduction_median) = integer(c + 2);
        c += 3;
      }
    }
    if (!row[c].empty()) {
      std::array<ErrorStats, 2> lo{};
      lo[0].mean = num(c);
      lo[1].mean = num(c + 1);
      lo[0].median = num(c + 2);
      lo[1].median = num(c + 3);
      r.length_only = lo;
    }
    out.push_back(r);
  }
  return out;
}

std::string emit_table_text(std::span<const ErrorReport> reports) {
  const auto rows = ordered(reports);
  std::vector<std::vector<std::string>> cells;
  cells.push_back({"parameter", "MAD L/R", "mean L (random)", "red.", "mean R (random)", "red.", "median L (random)",
                   "red.", "median R (random)", "red."});
  for (const ErrorReport* r : rows) {
    const double k = display_scale(r->param);
    std::vector<std::string> line{std::string(param_name(r->param)) + " (" + std::string(display_unit(r->param)) + ")",
                                  format_mad_cell(r->hands[0].mad * k, r->hands[1].mad * k)};
    for (bool use_mean : {true, false}) {
      for (const HandReport& h : r->hands) {
        line.push_back(use_mean ? format_error_cell(h.model.mean * k, h.baseline.mean * k)
                                : format_error_cell(h.model.median * k, h.baseline.median * k));
        line.push_back(format_reduction_cell(use_mean ? h.reduction_mean : h.reduction_median));
      }
    }
    cells.push_back(std::move(line));
  }
  std::vector<std::size_t> width(cells[0].size(), 0);
  for (const auto& line : cells) {
    for (std::size_t c = 0; c < line.size(); ++c) width[c] = std::max(width[c], line[c].size());
  }
  std::ostringstream out;
  for (const auto& line : cells) {
    for (std::size_t c = 0; c < line.size(); ++c) {
      if (c) out << " | ";
      out << (c == 0 ? std::left : std::right) << std::setw(static_cast<int>(width[c])) << line[c];
    }
    out << "\n";
  }
  bool any_length = false;
  for (const ErrorReport* r : rows) any_length = any_length || r->length_only.has_value();
  if (any_length) {
    out << "\nlength-only model, mean L / mean R / median L / median R\n";
    for (const ErrorReport* r : rows) {
      if (!r->length_only) continue;
      const double k = display_scale(r->param);
      const auto& lo = *r->length_only;
      out << param_name(r->param) << ": " << fixed2(lo[0].mean * k) << " / " << fixed2(lo[1].mean * k) << " / "
          << fixed2(lo[0].median * k) << " / " << fixed2(lo[1].median * k) << "\n";
    }
  }
  return out.str();
}

std::string stats_json(std::span<const Comparison> comparisons) {
  nlohmann::json arr = nlohmann::json::array();
  for (const Comparison& c : comparisons) {
    arr.push_back({{"name", c.name},
                   {"parameter", param_name(c.param)},
                   {"hand", std::string(1, hand_suffix(c.hand))},
                   {"against", c.against},
                   {"n", c.test.n},
                   {"W", c.test.w},
                   {"W_plus", c.test.w_plus},
                   {"W_minus", c.test.w_minus},
                   {"p", c.test.p},
                   {"method", c.test.exact ? "exact" : "normal"},
                   {"z", c.test.z},
                   {"effect", c.test.effect},
                   {"threshold", c.decision.threshold},
                   {"significant", c.decision.significant}});
  }
  return nlohmann::json{{"comparisons", arr}}.dump(2) + "\n";
}

}  // namespace gesture
