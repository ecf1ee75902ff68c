#pragma once

// Monte Carlo error analysis: jackknife, logarithmic binning, Binder ratios,
// histograms and a bimodality diagnostic.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "rydberg/errors.hpp"

namespace rydberg {

struct Estimate {
  double value = 0.0;
  double error = 0.0;
};

inline double mean(std::span<const double> xs) {
  if (xs.empty()) throw InsufficientDataError("mean of an empty sample");
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

inline double variance(std::span<const double> xs) {
  if (xs.size() < 2) throw InsufficientDataError("variance needs at least two samples");
  const double m = mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(xs.size() - 1);
}

// Jackknife over `blocks` contiguous blocks for a scalar function of the
// column means. All columns must have the same length.
inline Estimate jackknife(const std::vector<std::span<const double>>& columns,
                          const std::function<double(std::span<const double>)>& fn, std::size_t blocks = 32) {
  if (columns.empty()) throw InsufficientDataError("jackknife needs at least one column");
  const std::size_t n = columns.front().size();
  for (const auto& c : columns)
    if (c.size() != n) throw ValidationError("jackknife columns differ in length");
  if (n < 2) throw InsufficientDataError("jackknife needs at least two samples");
  blocks = std::min(blocks, n);
  const std::size_t m = columns.size();

  std::vector<double> totals(m, 0.0);
  std::vector<std::vector<double>> block_sums(blocks, std::vector<double>(m, 0.0));
  std::vector<std::size_t> block_len(blocks, 0);
  for (std::size_t b = 0; b < blocks; ++b) {
    const std::size_t lo = b * n / blocks;
    const std::size_t hi = (b + 1) * n / blocks;
    block_len[b] = hi - lo;
    for (std::size_t c = 0; c < m; ++c)
      for (std::size_t k = lo; k < hi; ++k) block_sums[b][c] += columns[c][k];
    for (std::size_t c = 0; c < m; ++c) totals[c] += block_sums[b][c];
  }

  std::vector<double> means(m);
  for (std::size_t c = 0; c < m; ++c) means[c] = totals[c] / static_cast<double>(n);
  const double full = fn(means);

  std::vector<double> thetas(blocks);
  std::vector<double> loo(m);
  for (std::size_t b = 0; b < blocks; ++b) {
    const double rest = static_cast<double>(n - block_len[b]);
    for (std::size_t c = 0; c < m; ++c) loo[c] = (totals[c] - block_sums[b][c]) / rest;
    thetas[b] = fn(loo);
  }
  const double tbar = std::accumulate(thetas.begin(), thetas.end(), 0.0) / static_cast<double>(blocks);
  double s = 0.0;
  for (double t : thetas) s += (t - tbar) * (t - tbar);
  const double err = std::sqrt(static_cast<double>(blocks - 1) / static_cast<double>(blocks) * s);
  return {full, err};
}

inline double binder_ratio(double m2, double m4) { return 0.5 * (3.0 - m4 / (m2 * m2)); }

// U4 from per-sample estimates of <F²> and <F⁴>.
inline Estimate binder_from_moments(std::span<const double> m2, std::span<const double> m4, std::size_t blocks = 32) {
  if (m2.size() < 2) throw InsufficientDataError("Binder ratio needs at least two samples");
  const double mean_m2 = mean(m2);
  if (!(mean_m2 > 0.0)) throw DomainError("Binder ratio undefined: <F^2> is zero");
  return jackknife({m2, m4}, [](std::span<const double> mu) { return binder_ratio(mu[0], mu[1]); }, blocks);
}

inline Estimate binder(std::span<const double> f_samples, std::size_t blocks = 32) {
  std::vector<double> m2(f_samples.size());
  std::vector<double> m4(f_samples.size());
  for (std::size_t k = 0; k < f_samples.size(); ++k) {
    m2[k] = f_samples[k] * f_samples[k];
    m4[k] = m2[k] * m2[k];
  }
  return binder_from_moments(m2, m4, blocks);
}

struct BinnedError {
  double mean = 0.0;
  double error = 0.0;
  double tau_int = 0.5;
  std::vector<double> level_errors;  // naive error at bin size 2^l
};

// Logarithmic binning analysis. The plateau error is the mean over the last
// three levels that still hold at least 32 bins; tau_int follows from the
// ratio of plateau to naive variance (0.5 for uncorrelated data).
inline BinnedError binned_error(std::span<const double> xs) {
  if (xs.size() < 16)
    throw InsufficientDataError("binning analysis needs at least 16 samples, got " + std::to_string(xs.size()));
  BinnedError out;
  out.mean = mean(xs);
  std::vector<double> bins(xs.begin(), xs.end());
  while (true) {
    const double v = variance(bins);
    out.level_errors.push_back(std::sqrt(v / static_cast<double>(bins.size())));
    if (bins.size() / 2 < 32) break;
    std::vector<double> next(bins.size() / 2);
    for (std::size_t k = 0; k < next.size(); ++k) next[k] = 0.5 * (bins[2 * k] + bins[2 * k + 1]);
    bins = std::move(next);
  }
  const std::size_t levels = out.level_errors.size();
  const std::size_t take = std::min<std::size_t>(3, levels);
  double e = 0.0;
  for (std::size_t l = levels - take; l < levels; ++l) e += out.level_errors[l];
  out.error = e / static_cast<double>(take);
  const double naive = out.level_errors.front();
  out.tau_int = naive > 0.0 ? 0.5 * (out.error * out.error) / (naive * naive) : 0.5;
  return out;
}

struct Histogram {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<std::size_t> counts;

  double width() const { return counts.empty() ? 0.0 : (hi - lo) / static_cast<double>(counts.size()); }
  double left(std::size_t k) const { return lo + width() * static_cast<double>(k); }
  double right(std::size_t k) const { return k + 1 == counts.size() ? hi : left(k + 1); }
};

// Equal-width bins over [min, max]; the maximum falls in the last bin. A
// degenerate range gives one bin holding everything.
inline Histogram histogram(std::span<const double> xs, std::size_t n_bins) {
  if (xs.empty()) throw InsufficientDataError("histogram of an empty sample");
  if (n_bins < 1) throw DomainError("histogram needs at least one bin");
  const auto [mn, mx] = std::minmax_element(xs.begin(), xs.end());
  Histogram h{*mn, *mx, {}};
  if (!(*mx > *mn)) {
    h.counts.assign(1, xs.size());
    return h;
  }
  h.counts.assign(n_bins, 0);
  const double w = (h.hi - h.lo) / static_cast<double>(n_bins);
  for (double x : xs) {
    auto k = static_cast<std::size_t>((x - h.lo) / w);
    if (k >= n_bins) k = n_bins - 1;
    ++h.counts[k];
  }
  return h;
}

struct BimodalityOptions {
  double dip_threshold = 0.2;
  std::size_t smoothing = 3;       // moving-average window (1 disables)
  double min_peak_fraction = 0.1;  // peaks below this fraction of the tallest are ignored
};

struct Bimodality {
  bool is_bimodal = false;
  double dip_score = 0.0;
};

inline Bimodality bimodality(const Histogram& h, BimodalityOptions opts = {}) {
  const std::size_t n = h.counts.size();
  if (n < 3) return {};
  std::vector<double> s(n, 0.0);
  const std::size_t half = opts.smoothing / 2;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t lo = k >= half ? k - half : 0;
    const std::size_t hi = std::min(n - 1, k + half);
    double acc = 0.0;
    for (std::size_t q = lo; q <= hi; ++q) acc += static_cast<double>(h.counts[q]);
    s[k] = acc / static_cast<double>(hi - lo + 1);
  }
  const double top = *std::max_element(s.begin(), s.end());
  if (top <= 0.0) return {};

  // Local maxima, with flat tops collapsed to their first index.
  std::vector<std::size_t> peaks;
  for (std::size_t k = 0; k < n;) {
    std::size_t end = k;
    while (end + 1 < n && s[end + 1] == s[k]) ++end;
    const bool left_ok = k == 0 || s[k - 1] < s[k];
    const bool right_ok = end == n - 1 || s[end + 1] < s[k];
    if (left_ok && right_ok && s[k] >= opts.min_peak_fraction * top) peaks.push_back(k);
    k = end + 1;
  }

  Bimodality out;
  for (std::size_t a = 0; a < peaks.size(); ++a) {
    for (std::size_t b = a + 1; b < peaks.size(); ++b) {
      const double valley = *std::min_element(s.begin() + peaks[a], s.begin() + peaks[b] + 1);
      const double dip = 1.0 - valley / std::min(s[peaks[a]], s[peaks[b]]);
      out.dip_score = std::max(out.dip_score, dip);
    }
  }
  out.is_bimodal = out.dip_score > opts.dip_threshold;
  return out;
}

}  // namespace rydberg
