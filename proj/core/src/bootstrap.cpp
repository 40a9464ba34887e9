// Copyright 2026 The tmsvlab Authors
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

#include "tmsv/bootstrap.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <optional>
#include <ostream>
#include <thread>

#include <fmt/format.h>

#include "tmsv/error.hpp"
#include "tmsv/least_squares.hpp"
#include "tmsv/random.hpp"

namespace tmsv {
namespace {

__extension__ typedef unsigned __int128 uint128;

// Unbiased index in [0, n) from one 64-bit draw (multiply-high).
inline std::size_t draw_index(Rng& rng, std::size_t n) {
  return static_cast<std::size_t>((static_cast<uint128>(rng()) * n) >> 64);
}

struct PairSums {
  double a = 0, b = 0, aa = 0, bb = 0, ab = 0;
  void add(double x, double y) {
    a += x;
    b += y;
    aa += x * x;
    bb += y * y;
    ab += x * y;
  }
};

struct PairMoments {
  double va, vb, cab;
};

PairMoments finish(const PairSums& s, std::size_t n, double offset_a, double offset_b) {
  const double dn = static_cast<double>(n);
  const double inv = 1.0 / (dn - 1.0);
  return {(s.aa - s.a * s.a / dn) * inv - offset_a, (s.bb - s.b * s.b / dn) * inv - offset_b,
          (s.ab - s.a * s.b / dn) * inv};
}

std::optional<double> evaluate(Statistic stat, const PairMoments& x, const PairMoments& p) {
  auto conditional = [](double target, double cond, double cov) -> std::optional<double> {
    if (!(cond > 0.0)) return std::nullopt;
    return target - cov * cov / cond;
  };
  std::optional<double> v;
  switch (stat) {
    case Statistic::kDuan:
      v = x.va + x.vb + 2.0 * x.cab + p.va + p.vb - 2.0 * p.cab;
      break;
    case Statistic::kVarianceXSum:
      v = x.va + x.vb + 2.0 * x.cab;
      break;
    case Statistic::kVariancePDiff:
      v = p.va + p.vb - 2.0 * p.cab;
      break;
    case Statistic::kEprReidAB: {
      const auto gx = conditional(x.va, x.vb, x.cab);
      const auto gp = conditional(p.va, p.vb, p.cab);
      if (gx && gp) v = *gx * *gp;
      break;
    }
    case Statistic::kEprReidBA: {
      const auto gx = conditional(x.vb, x.va, x.cab);
      const auto gp = conditional(p.vb, p.va, p.cab);
      if (gx && gp) v = *gx * *gp;
      break;
    }
  }
  if (v && !std::isfinite(*v)) v.reset();
  return v;
}

struct PairedSeries {
  std::vector<double> interleaved;  // a0 b0 a1 b1 ...
  double offset_a = 0.0;
  double offset_b = 0.0;
  std::size_t size() const { return interleaved.size() / 2; }
};

PairedSeries pack(const QuadratureSettingRecord& rec) {
  rec.validate();
  PairedSeries s;
  s.interleaved.resize(2 * rec.samples_a.size());
  for (std::size_t i = 0; i < rec.samples_a.size(); ++i) {
    s.interleaved[2 * i] = rec.samples_a[i];
    s.interleaved[2 * i + 1] = rec.samples_b[i];
  }
  s.offset_a = rec.variance_offset_a;
  s.offset_b = rec.variance_offset_b;
  return s;
}

template <typename Visit>
void resample(const BootstrapConfig& config, std::size_t n, Rng& rng, Visit&& visit) {
  if (config.resampling == Resampling::kIid) {
    for (std::size_t k = 0; k < config.chunk_len; ++k) visit(draw_index(rng, n));
    return;
  }
  std::size_t taken = 0;
  while (taken < config.chunk_len) {
    std::size_t pos = draw_index(rng, n);
    const std::size_t len = std::min(config.block_len, config.chunk_len - taken);
    for (std::size_t k = 0; k < len; ++k) {
      visit(pos);
      pos = pos + 1 == n ? 0 : pos + 1;
    }
    taken += len;
  }
}

template <typename ChunkFn>
void parallel_chunks(std::size_t n_chunks, unsigned n_threads, ChunkFn&& fn) {
  unsigned threads = n_threads ? n_threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n_chunks));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t c = next++; c < n_chunks; c = next++) fn(c);
  };
  if (threads <= 1) {
    worker();
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
}

const QuadratureSettingRecord& find_record(std::span<const QuadratureSettingRecord> records,
                                           Quadrature qa, Quadrature qb) {
  for (const auto& r : records)
    if (r.setting_a == qa && r.setting_b == qb) return r;
  throw Error(ErrorKind::kIncompleteTomography,
              fmt::format("bootstrap needs the ({},{}) record", to_char(qa), to_char(qb)));
}

double sample_sigma_of(std::span<const double> v, double mean) {
  double acc = 0.0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return v.size() > 1 ? std::sqrt(acc / static_cast<double>(v.size() - 1)) : 0.0;
}

}  // namespace

std::string_view to_string(Statistic s) {
  switch (s) {
    case Statistic::kDuan: return "duan";
    case Statistic::kEprReidAB: return "epr_reid_AB";
    case Statistic::kEprReidBA: return "epr_reid_BA";
    case Statistic::kVarianceXSum: return "variance_x_sum";
    case Statistic::kVariancePDiff: return "variance_p_diff";
  }
  return "unknown";
}

Statistic statistic_from_string(std::string_view name) {
  for (Statistic s : {Statistic::kDuan, Statistic::kEprReidAB, Statistic::kEprReidBA,
                      Statistic::kVarianceXSum, Statistic::kVariancePDiff}) {
    if (to_string(s) == name) return s;
  }
  throw Error(ErrorKind::kInvalidArgument, fmt::format("unknown statistic '{}'", name));
}

void BootstrapConfig::validate() const {
  if (n_chunks < 2) throw Error(ErrorKind::kInvalidArgument, "n_chunks must be >= 2");
  if (chunk_len < 2) throw Error(ErrorKind::kInvalidArgument, "chunk_len must be >= 2");
  if (resampling == Resampling::kBlock && block_len == 0) {
    throw Error(ErrorKind::kInvalidArgument, "block_len must be positive");
  }
}

std::size_t Histogram::total() const {
  std::size_t t = 0;
  for (auto c : counts) t += c;
  return t;
}

Histogram make_histogram(std::span<const double> values, std::size_t bins) {
  if (values.empty()) throw Error(ErrorKind::kDegenerateDistribution, "no values to histogram");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double lo = sorted.front();
  const double hi = sorted.back();
  if (!(hi > lo)) {
    throw Error(ErrorKind::kDegenerateDistribution,
                fmt::format("all {} values equal {}", values.size(), lo));
  }
  const auto n = static_cast<double>(sorted.size());
  if (bins == 0) {
    auto quantile = [&](double q) {
      const double pos = q * (n - 1.0);
      const auto i = static_cast<std::size_t>(pos);
      const double f = pos - static_cast<double>(i);
      return i + 1 < sorted.size() ? sorted[i] * (1.0 - f) + sorted[i + 1] * f : sorted[i];
    };
    const double iqr = quantile(0.75) - quantile(0.25);
    if (iqr > 0.0) {
      const double width = 2.0 * iqr / std::cbrt(n);
      bins = static_cast<std::size_t>(std::ceil((hi - lo) / width));
    } else {
      bins = static_cast<std::size_t>(std::ceil(std::log2(n))) + 1;
    }
    bins = std::clamp<std::size_t>(bins, 1, 10000);
  }
  Histogram h;
  h.bin_edges.resize(bins + 1);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t i = 0; i <= bins; ++i) h.bin_edges[i] = lo + width * static_cast<double>(i);
  h.bin_edges.back() = hi;
  h.counts.assign(bins, 0);
  for (double v : sorted) {
    auto i = static_cast<std::size_t>((v - lo) / width);
    h.counts[std::min(i, bins - 1)]++;
  }
  return h;
}

GaussianFit gaussian_fit(const Histogram& histogram) {
  const std::size_t bins = histogram.counts.size();
  if (histogram.bin_edges.size() != bins + 1) {
    throw Error(ErrorKind::kInvalidArgument, "histogram needs one more edge than bins");
  }
  double total = 0.0, m1 = 0.0, peak = 0.0;
  std::size_t nonempty = 0;
  for (std::size_t i = 0; i < bins; ++i) {
    const auto c = static_cast<double>(histogram.counts[i]);
    total += c;
    m1 += c * histogram.bin_center(i);
    peak = std::max(peak, c);
    if (histogram.counts[i] > 0) ++nonempty;
  }
  const double mean0 = total > 0 ? m1 / total : 0.0;
  double m2 = 0.0;
  for (std::size_t i = 0; i < bins; ++i) {
    const double d = histogram.bin_center(i) - mean0;
    m2 += static_cast<double>(histogram.counts[i]) * d * d;
  }
  const double sigma0 = total > 1 ? std::sqrt(m2 / total) : 0.0;
  if (nonempty < 5 || !(sigma0 > 0.0)) {
    throw FitFailure(fmt::format("gaussian fit needs >= 5 nonempty bins, got {}", nonempty),
                     mean0, sigma0, peak);
  }

  // Fit in standardized coordinates u = (x - mean0) / sigma0, counts / peak.
  Eigen::VectorXd u(static_cast<Eigen::Index>(bins)), y(static_cast<Eigen::Index>(bins));
  for (std::size_t i = 0; i < bins; ++i) {
    u(static_cast<Eigen::Index>(i)) = (histogram.bin_center(i) - mean0) / sigma0;
    y(static_cast<Eigen::Index>(i)) = static_cast<double>(histogram.counts[i]) / peak;
  }
  auto residual = [&](const Eigen::VectorXd& p) -> Eigen::VectorXd {
    const double s = p(2);
    return (p(0) * (-(u.array() - p(1)).square() / (2.0 * s * s)).exp() - y.array()).matrix();
  };
  const auto lm = levenberg_marquardt(residual, Eigen::Vector3d(1.0, 0.0, 1.0));
  const double sigma = std::abs(lm.params(2)) * sigma0;
  if (!lm.converged || !std::isfinite(sigma) || !(sigma > 0.0) || !(lm.params(0) > 0.0)) {
    throw FitFailure(fmt::format("gaussian fit did not converge after {} iterations",
                                 lm.iterations),
                     mean0, sigma0, peak);
  }
  GaussianFit fit;
  fit.mean = mean0 + lm.params(1) * sigma0;
  fit.sigma = sigma;
  fit.amplitude = lm.params(0) * peak;
  fit.residual = lm.cost * peak * peak;
  fit.iterations = lm.iterations;
  return fit;
}

namespace {

void finalize(BootstrapResult& result, const BootstrapConfig& config) {
  if (result.values.size() < 2) {
    throw Error(ErrorKind::kDegenerateDistribution,
                fmt::format("only {} of {} chunks produced a defined statistic",
                            result.values.size(), config.n_chunks));
  }
  double sum = 0.0;
  for (double v : result.values) sum += v;
  result.sample_mean = sum / static_cast<double>(result.values.size());
  result.sample_sigma = sample_sigma_of(result.values, result.sample_mean);
  result.histogram = make_histogram(result.values, config.histogram_bins);
  try {
    const GaussianFit fit = gaussian_fit(result.histogram);
    result.fit_mean = fit.mean;
    result.fit_sigma = fit.sigma;
    result.fit_amplitude = fit.amplitude;
  } catch (const FitFailure& e) {
    result.fit_fallback = true;
    result.fit_mean = e.fallback_mean();
    result.fit_sigma = e.fallback_sigma();
    result.fit_amplitude = e.fallback_amplitude();
  }
}

}  // namespace

std::vector<BootstrapResult> bootstrap_statistics(std::span<const QuadratureSettingRecord> records,
                                                  const BootstrapConfig& config,
                                                  std::span<const Statistic> statistics) {
  config.validate();
  if (statistics.empty()) throw Error(ErrorKind::kInvalidArgument, "no statistics requested");
  const PairedSeries xx = pack(find_record(records, Quadrature::kX, Quadrature::kX));
  const PairedSeries pp = pack(find_record(records, Quadrature::kP, Quadrature::kP));
  if (xx.size() < config.chunk_len || pp.size() < config.chunk_len) {
    throw Error(ErrorKind::kInvalidArgument,
                fmt::format("records ({} and {} points) shorter than chunk_len {}", xx.size(),
                            pp.size(), config.chunk_len));
  }

  const std::size_t n_stats = statistics.size();
  std::vector<double> values(config.n_chunks * n_stats);
  std::vector<char> defined(config.n_chunks * n_stats, 0);
  parallel_chunks(config.n_chunks, config.n_threads, [&](std::size_t c) {
    Rng rng(derive_seed(config.seed, c));
    PairSums sx, sp;
    const double* dx = xx.interleaved.data();
    const double* dp = pp.interleaved.data();
    resample(config, xx.size(), rng, [&](std::size_t i) { sx.add(dx[2 * i], dx[2 * i + 1]); });
    resample(config, pp.size(), rng, [&](std::size_t i) { sp.add(dp[2 * i], dp[2 * i + 1]); });
    const PairMoments mx = finish(sx, config.chunk_len, xx.offset_a, xx.offset_b);
    const PairMoments mp = finish(sp, config.chunk_len, pp.offset_a, pp.offset_b);
    for (std::size_t s = 0; s < n_stats; ++s) {
      if (const auto v = evaluate(statistics[s], mx, mp)) {
        values[c * n_stats + s] = *v;
        defined[c * n_stats + s] = 1;
      }
    }
  });

  std::vector<BootstrapResult> results(n_stats);
  for (std::size_t s = 0; s < n_stats; ++s) {
    for (std::size_t c = 0; c < config.n_chunks; ++c) {
      if (defined[c * n_stats + s]) results[s].values.push_back(values[c * n_stats + s]);
    }
    results[s].excluded_chunks = config.n_chunks - results[s].values.size();
    finalize(results[s], config);
  }
  return results;
}

BootstrapResult bootstrap(std::span<const QuadratureSettingRecord> records,
                          const BootstrapConfig& config) {
  const Statistic stat[] = {config.statistic};
  return std::move(bootstrap_statistics(records, config, stat).front());
}

std::vector<double> bootstrap_values(std::span<const double> data, const BootstrapConfig& config,
                                     const std::function<double(std::span<const double>)>& stat) {
  config.validate();
  if (data.size() < config.chunk_len) {
    throw Error(ErrorKind::kInvalidArgument, "data shorter than chunk_len");
  }
  std::vector<double> values(config.n_chunks);
  parallel_chunks(config.n_chunks, config.n_threads, [&](std::size_t c) {
    Rng rng(derive_seed(config.seed, c));
    std::vector<double> chunk;
    chunk.reserve(config.chunk_len);
    resample(config, data.size(), rng, [&](std::size_t i) { chunk.push_back(data[i]); });
    values[c] = stat(chunk);
  });
  return values;
}

void write_histogram_csv(std::ostream& out, const BootstrapResult& result) {
  out << "bin_center,count,fit_value\n";
  const Histogram& h = result.histogram;
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    const double x = h.bin_center(i);
    const double z = (x - result.fit_mean) / result.fit_sigma;
    out << fmt::format("{:.10g},{},{:.6g}\n", x, h.counts[i],
                       result.fit_amplitude * std::exp(-0.5 * z * z));
  }
  if (!out) throw Error(ErrorKind::kIoError, "CSV write failed");
}

}  // namespace tmsv
