// stats.hpp
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Rank statistics for the cross-linguistic analysis: Spearman's rho
// with average ranks for ties, a seeded two-sided permutation test for
// significance, sample standard deviation, and ordinary least squares.

#ifndef MTLM_STATS_HPP_
#define MTLM_STATS_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "mtlm/error.hpp"
#include "mtlm/rng.hpp"

namespace mtlm {

// Average ranks, 1-based; tied values share the mean of their ranks.
inline std::vector<double> RankAverage(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return values[a] < values[b];
  });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[idx[j + 1]] == values[idx[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

inline double PearsonR(const std::vector<double>& x,
                       const std::vector<double>& y) {
  const std::size_t n = x.size();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0 || syy == 0) {
    ThrowData("correlation undefined for a constant input vector");
  }
  return sxy / std::sqrt(sxx * syy);
}

inline double SpearmanRho(const std::vector<double>& x,
                          const std::vector<double>& y) {
  if (x.size() != y.size()) ThrowData("spearman inputs differ in length");
  if (x.size() < 3) ThrowData("spearman needs at least 3 points");
  return PearsonR(RankAverage(x), RankAverage(y));
}

// Two-sided Monte Carlo permutation test for Spearman's rho with the
// add-one estimator, so the result lies in [1/(N+1), 1] and is
// reproducible for a fixed seed. Ranks are permuted directly: the ranks
// of a permuted vector are the permuted ranks.
inline double SpearmanPermutationPValue(const std::vector<double>& x,
                                        const std::vector<double>& y,
                                        std::size_t permutations,
                                        std::uint64_t seed) {
  if (permutations == 0) ThrowConfig("permutation count must be positive");
  const double observed = std::abs(SpearmanRho(x, y));
  std::vector<double> rx = RankAverage(x);
  std::vector<double> ry = RankAverage(y);
  Rng rng(seed);
  std::size_t hits = 0;
  for (std::size_t p = 0; p < permutations; ++p) {
    rng.Shuffle(ry);
    if (std::abs(PearsonR(rx, ry)) >= observed - 1e-12) ++hits;
  }
  return static_cast<double>(hits + 1) /
         static_cast<double>(permutations + 1);
}

inline double SampleStdDev(const std::vector<double>& values) {
  const std::size_t n = values.size();
  if (n < 2) ThrowData("standard deviation needs at least 2 values");
  double mean = 0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(n - 1));
}

struct LinReg {
  double slope = 0;
  double intercept = 0;
  double r = 0;
};

inline LinReg LinearRegression(const std::vector<double>& x,
                               const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    ThrowData("regression needs >= 2 paired points");
  }
  const std::size_t n = x.size();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0) ThrowData("regression undefined for constant x");
  LinReg out;
  out.slope = sxy / sxx;
  out.intercept = my - out.slope * mx;
  out.r = syy == 0 ? 0.0 : sxy / std::sqrt(sxx * syy);
  return out;
}

}  // namespace mtlm

#endif  // MTLM_STATS_HPP_
