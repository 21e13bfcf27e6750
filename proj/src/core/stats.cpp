#include "core/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include <Eigen/Dense>

#include "core/errors.hpp"
#include "core/rng.hpp"

namespace sa {

namespace {

double mean_of(std::span<const double> xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double sample_variance(std::span<const double> xs, double mean) {
  if (xs.size() < 2) return 0.0;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(xs.size() - 1);
}

}  // namespace

double quantile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) fail(ErrorKind::Usage, "quantile of empty sample");
  if (sorted.size() == 1) return sorted.front();
  double h = p * static_cast<double>(sorted.size() - 1);
  auto lo = static_cast<std::size_t>(std::floor(h));
  auto hi = std::min(lo + 1, sorted.size() - 1);
  double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

BootstrapCi bootstrap_percentile_ci(std::span<const double> sample, double level,
                                    int resamples, std::uint64_t seed) {
  if (sample.empty()) fail(ErrorKind::Usage, "bootstrap over an empty sample");
  if (resamples < 1) fail(ErrorKind::Usage, "bootstrap requires >= 1 resamples");
  const std::size_t n = sample.size();
  std::vector<double> stats(resamples);
  for (int b = 0; b < resamples; ++b) {
    CounterRng rng(CounterRng::derive_labeled(seed, "mean-boot", {std::uint64_t(b)}));
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += sample[rng.next_below(n)];
    stats[b] = sum / static_cast<double>(n);
  }
  std::sort(stats.begin(), stats.end());
  double alpha = 1.0 - level;
  return {quantile_sorted(stats, alpha / 2.0), quantile_sorted(stats, 1.0 - alpha / 2.0),
          level, resamples};
}

// ---------------------------------------------------------------------------
// AUROC
// ---------------------------------------------------------------------------

double auroc_point(std::span<const double> safe, std::span<const double> unsafe,
                   long long* tie_count) {
  if (safe.empty() || unsafe.empty())
    fail(ErrorKind::Usage, "AUROC requires both groups nonempty");

  struct Tagged {
    double value;
    bool is_safe;
  };
  std::vector<Tagged> all;
  all.reserve(safe.size() + unsafe.size());
  for (double v : safe) all.push_back({v, true});
  for (double v : unsafe) all.push_back({v, false});
  std::sort(all.begin(), all.end(),
            [](const Tagged& a, const Tagged& b) { return a.value < b.value; });

  // Midranks: rank sum of the safe group gives U with 0.5 tie credit.
  double safe_rank_sum = 0.0;
  long long ties = 0;
  std::size_t i = 0;
  while (i < all.size()) {
    std::size_t j = i;
    while (j < all.size() && all[j].value == all[i].value) ++j;
    double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    long long group_safe = 0;
    for (std::size_t k = i; k < j; ++k)
      if (all[k].is_safe) ++group_safe;
    safe_rank_sum += midrank * static_cast<double>(group_safe);
    ties += group_safe * static_cast<long long>(j - i - group_safe);
    i = j;
  }
  if (tie_count) *tie_count = ties;
  double n1 = static_cast<double>(safe.size());
  double n2 = static_cast<double>(unsafe.size());
  double u = safe_rank_sum - n1 * (n1 + 1.0) / 2.0;
  return u / (n1 * n2);
}

AurocResult mann_whitney_auroc(std::span<const double> safe,
                               std::span<const double> unsafe, int resamples,
                               std::uint64_t seed, double level) {
  AurocResult result;
  result.auroc = auroc_point(safe, unsafe, &result.tie_count);
  result.n_safe = safe.size();
  result.n_unsafe = unsafe.size();

  std::vector<double> stats(resamples);
  std::vector<double> rs(safe.size()), ru(unsafe.size());
  for (int b = 0; b < resamples; ++b) {
    CounterRng rng(CounterRng::derive_labeled(seed, "auroc-boot", {std::uint64_t(b)}));
    for (auto& v : rs) v = safe[rng.next_below(safe.size())];
    for (auto& v : ru) v = unsafe[rng.next_below(unsafe.size())];
    stats[b] = auroc_point(rs, ru);
  }
  std::sort(stats.begin(), stats.end());
  double alpha = 1.0 - level;
  result.ci = {quantile_sorted(stats, alpha / 2.0),
               quantile_sorted(stats, 1.0 - alpha / 2.0), level, resamples};
  return result;
}

// ---------------------------------------------------------------------------
// Type II eta^2
// ---------------------------------------------------------------------------

namespace {

constexpr double kRankTolerance = 1e-10;

struct FactorLayout {
  std::string name;
  std::vector<std::string> levels;  // sorted; levels[0] is the reference
  bool included = false;            // false when only one level is present
};

std::vector<FactorLayout> layout_factors(std::span<const VarianceRow> rows) {
  std::vector<FactorLayout> factors(3);
  factors[0].name = "target";
  factors[1].name = "auditor";
  factors[2].name = "judge";
  std::set<std::string> levels[3];
  for (const VarianceRow& r : rows) {
    levels[0].insert(r.target);
    levels[1].insert(r.auditor);
    levels[2].insert(r.judge);
  }
  for (int f = 0; f < 3; ++f) {
    factors[f].levels.assign(levels[f].begin(), levels[f].end());
    factors[f].included = factors[f].levels.size() >= 2;
  }
  return factors;
}

const std::string& row_level(const VarianceRow& r, int factor) {
  switch (factor) {
    case 0: return r.target;
    case 1: return r.auditor;
    default: return r.judge;
  }
}

// Builds the reference-coded indicator design over the listed rows, skipping
// the factor `omit` (-1 for the full model).
Eigen::MatrixXd build_design(std::span<const VarianceRow> rows,
                             const std::vector<std::size_t>& idx,
                             const std::vector<FactorLayout>& factors, int omit) {
  std::size_t cols = 1;
  for (int f = 0; f < 3; ++f)
    if (factors[f].included && f != omit) cols += factors[f].levels.size() - 1;

  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(idx.size()),
                                            static_cast<Eigen::Index>(cols));
  x.col(0).setOnes();
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const VarianceRow& row = rows[idx[static_cast<std::size_t>(r)]];
    std::size_t col = 1;
    for (int f = 0; f < 3; ++f) {
      if (!factors[f].included || f == omit) continue;
      const auto& levels = factors[f].levels;
      auto it = std::lower_bound(levels.begin(), levels.end(), row_level(row, f));
      auto li = static_cast<std::size_t>(it - levels.begin());
      if (li > 0) x(r, static_cast<Eigen::Index>(col + li - 1)) = 1.0;
      col += levels.size() - 1;
    }
  }
  return x;
}

struct FitResult {
  double rss = 0.0;
  bool full_rank = true;
};

FitResult fit_rss(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  qr.setThreshold(kRankTolerance);
  FitResult fr;
  fr.full_rank = qr.rank() == x.cols();
  Eigen::VectorXd beta = qr.solve(y);
  fr.rss = (y - x * beta).squaredNorm();
  return fr;
}

struct EtaPoint {
  double ss[3] = {0, 0, 0};
  double eta[3] = {0, 0, 0};
  double rss_full = 0.0;
  bool valid = false;
};

EtaPoint eta_for_rows(std::span<const VarianceRow> rows,
                      const std::vector<std::size_t>& idx,
                      const std::vector<FactorLayout>& global_factors,
                      bool require_rank) {
  EtaPoint pt;
  // Every included factor must keep >= 2 levels within this row subset.
  std::vector<FactorLayout> factors = global_factors;
  for (int f = 0; f < 3; ++f) {
    if (!factors[f].included) continue;
    std::set<std::string> present;
    for (std::size_t i : idx) present.insert(row_level(rows[i], f));
    if (present.size() < 2) return pt;  // level dropped -> resample invalid
  }

  Eigen::VectorXd y(static_cast<Eigen::Index>(idx.size()));
  for (Eigen::Index i = 0; i < y.size(); ++i)
    y(i) = rows[idx[static_cast<std::size_t>(i)]].score;

  Eigen::MatrixXd full = build_design(rows, idx, factors, -1);
  if (static_cast<Eigen::Index>(idx.size()) <= full.cols()) {
    if (require_rank) fail(ErrorKind::Usage, "too few rows for the model (need > parameters)");
    return pt;
  }
  FitResult full_fit = fit_rss(full, y);
  if (!full_fit.full_rank) {
    if (require_rank) fail(ErrorKind::Usage, "rank-deficient design: factors are confounded");
    return pt;
  }
  pt.rss_full = full_fit.rss;
  for (int f = 0; f < 3; ++f) {
    if (!factors[f].included) continue;
    FitResult reduced = fit_rss(build_design(rows, idx, factors, f), y);
    pt.ss[f] = std::max(0.0, reduced.rss - full_fit.rss);
    double denom = pt.ss[f] + full_fit.rss;
    pt.eta[f] = denom > 0.0 ? pt.ss[f] / denom : 0.0;  // no variance, no effect
  }
  pt.valid = true;
  return pt;
}

}  // namespace

EtaDecomposition type2_eta_squared(std::span<const VarianceRow> rows, int resamples,
                                   std::uint64_t seed, double level) {
  if (rows.empty()) fail(ErrorKind::Usage, "variance decomposition over zero rows");
  std::vector<FactorLayout> factors = layout_factors(rows);
  if (!factors[0].included && !factors[1].included && !factors[2].included)
    fail(ErrorKind::Usage, "no factor has two or more levels");

  std::vector<std::size_t> all(rows.size());
  std::iota(all.begin(), all.end(), 0);
  EtaPoint point = eta_for_rows(rows, all, factors, /*require_rank=*/true);

  EtaDecomposition out;
  out.rows = rows.size();
  out.ss_residual = point.rss_full;

  std::vector<std::vector<double>> boot(3);
  std::vector<std::size_t> idx(rows.size());
  for (int b = 0; b < resamples; ++b) {
    CounterRng rng(CounterRng::derive_labeled(seed, "eta-boot", {std::uint64_t(b)}));
    for (auto& i : idx) i = rng.next_below(rows.size());
    EtaPoint pt = eta_for_rows(rows, idx, factors, /*require_rank=*/false);
    if (!pt.valid) {
      ++out.discarded_resamples;
      continue;
    }
    for (int f = 0; f < 3; ++f)
      if (factors[f].included) boot[f].push_back(pt.eta[f]);
  }

  double alpha = 1.0 - level;
  for (int f = 0; f < 3; ++f) {
    FactorEta fe;
    fe.name = factors[f].name;
    fe.dropped = !factors[f].included;
    fe.ss = point.ss[f];
    fe.eta_sq = point.eta[f];
    if (!boot[f].empty()) {
      std::sort(boot[f].begin(), boot[f].end());
      fe.ci = {quantile_sorted(boot[f], alpha / 2.0),
               quantile_sorted(boot[f], 1.0 - alpha / 2.0), level,
               static_cast<int>(boot[f].size())};
    } else {
      fe.ci = {fe.eta_sq, fe.eta_sq, level, 0};
    }
    out.factors.push_back(std::move(fe));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Stability
// ---------------------------------------------------------------------------

StabilityCurve stability_mad(std::span<const double> run_scores, int subsets,
                             std::uint64_t seed, double lo_percentile,
                             double hi_percentile, bool exhaustive) {
  const std::size_t n = run_scores.size();
  if (n < 2) fail(ErrorKind::Usage, "stability curve requires at least 2 runs");
  StabilityCurve curve;
  curve.reference_mean = mean_of(run_scores);
  curve.subsets = subsets;

  for (int k = 1; k < static_cast<int>(n); ++k) {
    std::vector<double> deviations;
    if (exhaustive) {
      // Enumerate all n^k ordered with-replacement draws.
      std::vector<std::size_t> draw(k, 0);
      while (true) {
        double sum = 0.0;
        for (std::size_t i : draw) sum += run_scores[i];
        deviations.push_back(std::abs(sum / k - curve.reference_mean));
        int pos = k - 1;
        while (pos >= 0 && ++draw[pos] == n) draw[pos--] = 0;
        if (pos < 0) break;
      }
    } else {
      deviations.resize(subsets);
      for (int b = 0; b < subsets; ++b) {
        CounterRng rng(CounterRng::derive_labeled(seed, "stability",
                                                  {std::uint64_t(k), std::uint64_t(b)}));
        double sum = 0.0;
        for (int i = 0; i < k; ++i) sum += run_scores[rng.next_below(n)];
        deviations[b] = std::abs(sum / k - curve.reference_mean);
      }
    }
    StabilityPoint pt;
    pt.k = k;
    pt.mad = mean_of(deviations);
    std::sort(deviations.begin(), deviations.end());
    pt.envelope_lo = quantile_sorted(deviations, lo_percentile / 100.0);
    pt.envelope_hi = quantile_sorted(deviations, hi_percentile / 100.0);
    curve.points.push_back(pt);
  }
  return curve;
}

// ---------------------------------------------------------------------------
// Agreement
// ---------------------------------------------------------------------------

AgreementReport judge_agreement(std::span<const int> reference,
                                std::span<const int> candidate) {
  if (reference.size() != candidate.size())
    fail(ErrorKind::Usage, "agreement requires equal-length severity lists");
  if (reference.empty()) fail(ErrorKind::Usage, "agreement over zero pairs");

  AgreementReport rep;
  rep.total = static_cast<long long>(reference.size());
  for (std::size_t i = 0; i < reference.size(); ++i) {
    int r = reference[i], c = candidate[i];
    if (r < 0 || r > 4 || c < 0 || c > 4)
      fail(ErrorKind::Usage, "severity values must lie in 0..4");
    if (r <= 1) ++rep.reference_critical_or_high;
    if (c == r) ++rep.exact;
    else if (r <= 1 && c >= 3) ++rep.critical_miss;
    else if (std::abs(c - r) == 1) ++rep.off_by_one;
    else ++rep.wrong_non_critical;
  }
  if (rep.reference_critical_or_high > 0)
    rep.critical_miss_rate = static_cast<double>(rep.critical_miss) /
                             static_cast<double>(rep.reference_critical_or_high);
  return rep;
}

// ---------------------------------------------------------------------------
// Welch t-test and contrast classification
// ---------------------------------------------------------------------------

namespace {

// Regularized incomplete beta I_x(a, b) via the Lentz continued fraction.
double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-14;
  constexpr double kTiny = 1e-300;
  double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0, d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

double reg_incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                    a * std::log(x) + b * std::log(1.0 - x);
  double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

}  // namespace

double welch_t_test_p(std::span<const double> a, std::span<const double> b,
                      double* t_stat, double* dof) {
  if (a.size() < 2 || b.size() < 2)
    fail(ErrorKind::Usage, "Welch t-test requires >= 2 points per group");
  double ma = mean_of(a), mb = mean_of(b);
  double va = sample_variance(a, ma), vb = sample_variance(b, mb);
  double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  double se2 = va / na + vb / nb;
  if (se2 == 0.0) {
    if (t_stat) *t_stat = ma == mb ? 0.0 : std::numeric_limits<double>::infinity();
    if (dof) *dof = na + nb - 2.0;
    return ma == mb ? 1.0 : 0.0;
  }
  double t = (ma - mb) / std::sqrt(se2);
  double df = se2 * se2 /
              (va * va / (na * na * (na - 1.0)) + vb * vb / (nb * nb * (nb - 1.0)));
  if (t_stat) *t_stat = t;
  if (dof) *dof = df;
  // Two-sided tail of Student's t with df degrees of freedom.
  return reg_incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
}

std::string activity_bin_name(ActivityBin bin) {
  switch (bin) {
    case ActivityBin::CompletelyInactive: return "completely_inactive";
    case ActivityBin::NearInactive: return "near_inactive";
    case ActivityBin::ActiveUnresponsive: return "active_unresponsive";
    case ActivityBin::ActiveSafetyOnly: return "active_safety_only";
    case ActivityBin::ActiveSizeOnly: return "active_size_only";
    case ActivityBin::ActiveBoth: return "active_both";
  }
  return "unknown";
}

ContrastClassification contrast_classification(
    std::span<const double> safety_safe, std::span<const double> safety_unsafe,
    std::span<const double> size_small, std::span<const double> size_large,
    std::span<const bool> fire_indicator, ContrastThresholds thresholds) {
  if (fire_indicator.empty()) fail(ErrorKind::Usage, "empty fire indicator");

  ContrastClassification result;
  result.thresholds = thresholds;
  long long fires = std::count(fire_indicator.begin(), fire_indicator.end(), true);
  result.fire_rate = static_cast<double>(fires) / static_cast<double>(fire_indicator.size());

  if (fires == 0) {
    result.bin = ActivityBin::CompletelyInactive;
    return result;
  }
  if (result.fire_rate < thresholds.fire_rate) {
    result.bin = ActivityBin::NearInactive;
    return result;
  }

  result.safety_delta = mean_of(safety_unsafe) - mean_of(safety_safe);
  result.safety_p = welch_t_test_p(safety_unsafe, safety_safe);
  result.size_delta = mean_of(size_small) - mean_of(size_large);
  result.size_p = welch_t_test_p(size_small, size_large);

  bool safety_active = std::abs(result.safety_delta) >= thresholds.delta &&
                       result.safety_p < thresholds.p_value;
  bool size_active = std::abs(result.size_delta) >= thresholds.delta &&
                     result.size_p < thresholds.p_value;
  if (safety_active && size_active) result.bin = ActivityBin::ActiveBoth;
  else if (safety_active) result.bin = ActivityBin::ActiveSafetyOnly;
  else if (size_active) result.bin = ActivityBin::ActiveSizeOnly;
  else result.bin = ActivityBin::ActiveUnresponsive;
  return result;
}

}  // namespace sa
