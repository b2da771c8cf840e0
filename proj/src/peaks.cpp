#include "cci/peaks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

namespace cci {

PeakList find_peaks(const Eigen::Ref<const Eigen::VectorXd>& channel, int max_peaks,
                    double rel_floor) {
  if (max_peaks < 1)
    throw_error(ErrorCode::invalid_argument, "max_peaks must be >= 1");
  if (rel_floor < 0.0 || rel_floor >= 1.0)
    throw_error(ErrorCode::invalid_argument, "rel_floor must be in [0, 1)");

  const Eigen::Index n = channel.size();
  PeakList all;
  // Scan plateaus: a run of equal values is a peak at its leftmost index when
  // it exceeds both flanking values (missing flanks count as -inf).
  Eigen::Index i = 0;
  while (i < n) {
    Eigen::Index j = i;
    while (j + 1 < n && channel(j + 1) == channel(i)) ++j;
    const double v = channel(i);
    const double left = i > 0 ? channel(i - 1) : -std::numeric_limits<double>::infinity();
    const double right = j + 1 < n ? channel(j + 1) : -std::numeric_limits<double>::infinity();
    if (v > 0.0 && v > left && v > right) {
      all.positions.push_back(i);
      all.amplitudes.push_back(v);
    }
    i = j + 1;
  }
  if (all.positions.empty()) return all;

  const double floor_amp = rel_floor * channel.maxCoeff();
  std::vector<std::size_t> idx;
  for (std::size_t k = 0; k < all.size(); ++k)
    if (all.amplitudes[k] >= floor_amp) idx.push_back(k);

  // Keep the max_peaks largest (ties to the earlier position), then restore
  // position order.
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (all.amplitudes[a] != all.amplitudes[b]) return all.amplitudes[a] > all.amplitudes[b];
    return all.positions[a] < all.positions[b];
  });
  if (idx.size() > static_cast<std::size_t>(max_peaks)) idx.resize(max_peaks);
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return all.positions[a] < all.positions[b]; });

  PeakList out;
  for (std::size_t k : idx) {
    out.positions.push_back(all.positions[k]);
    out.amplitudes.push_back(all.amplitudes[k]);
  }
  return out;
}

PeakList tap_train(const Eigen::Ref<const Eigen::VectorXd>& channel, int max_peaks) {
  PeakList all;
  for (Eigen::Index k = 0; k < channel.size(); ++k)
    if (channel(k) > 0.0) {
      all.positions.push_back(k);
      all.amplitudes.push_back(channel(k));
    }
  if (max_peaks < 0 || all.size() <= static_cast<std::size_t>(max_peaks)) return all;

  std::vector<std::size_t> idx(all.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (all.amplitudes[a] != all.amplitudes[b]) return all.amplitudes[a] > all.amplitudes[b];
    return all.positions[a] < all.positions[b];
  });
  idx.resize(static_cast<std::size_t>(max_peaks));
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return all.positions[a] < all.positions[b]; });
  PeakList out;
  for (std::size_t k : idx) {
    out.positions.push_back(all.positions[k]);
    out.amplitudes.push_back(all.amplitudes[k]);
  }
  return out;
}

MatchReport match_peaks(const PeakList& truth, const PeakList& estimate,
                        double threshold) {
  if (threshold < 0.0)
    throw_error(ErrorCode::invalid_argument, "threshold must be non-negative");

  struct Candidate {
    double offset;
    Eigen::Index truth_pos, est_pos;
    std::size_t ti, ei;
  };
  std::vector<Candidate> candidates;
  for (std::size_t t = 0; t < truth.size(); ++t)
    for (std::size_t e = 0; e < estimate.size(); ++e) {
      const double d = std::abs(static_cast<double>(truth.positions[t]) -
                                static_cast<double>(estimate.positions[e]));
      if (d <= threshold)
        candidates.push_back({d, truth.positions[t], estimate.positions[e], t, e});
    }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    return std::tie(a.offset, a.truth_pos, a.est_pos) <
           std::tie(b.offset, b.truth_pos, b.est_pos);
  });

  MatchReport report;
  report.threshold = threshold;
  std::vector<bool> truth_used(truth.size(), false), est_used(estimate.size(), false);
  for (const auto& c : candidates) {
    if (truth_used[c.ti] || est_used[c.ei]) continue;
    truth_used[c.ti] = true;
    est_used[c.ei] = true;
    report.matched_pairs.push_back({c.truth_pos, c.est_pos, c.offset});
  }
  report.unmatched_truth_count =
      static_cast<int>(truth.size()) - static_cast<int>(report.matched_pairs.size());
  return report;
}

MetricPair compute_metrics(const std::vector<std::vector<MatchReport>>& per_trial_reports,
                           int truth_peak_count) {
  if (per_trial_reports.empty())
    throw_error(ErrorCode::invalid_argument, "need at least one trial");
  if (truth_peak_count < 1)
    throw_error(ErrorCode::invalid_argument, "truth peak count must be >= 1");

  const double Z = static_cast<double>(per_trial_reports.size());
  double ppm = 0.0, pup = 0.0;
  for (const auto& trial : per_trial_reports) {
    double offsets = 0.0;
    int matched = 0;
    for (const auto& rep : trial) {
      matched += static_cast<int>(rep.matched_pairs.size());
      for (const auto& m : rep.matched_pairs) offsets += m.offset;
    }
    if (matched > truth_peak_count)
      throw_error(ErrorCode::invalid_argument,
                  "more matches than ground-truth peaks in a trial");
    if (matched > 0) ppm += offsets / static_cast<double>(matched);
    pup += static_cast<double>(truth_peak_count - matched) /
           static_cast<double>(truth_peak_count);
  }
  return {ppm / Z, pup / Z};
}

Eigen::MatrixXd estimate_tdoas(const AirSet& airs, int max_peaks, double rel_floor) {
  const Eigen::Index N = airs.n_mics();
  const double six_db = std::pow(10.0, -6.0 / 20.0);
  Eigen::VectorXd direct(N);
  std::vector<bool> ok(static_cast<std::size_t>(N), false);
  for (Eigen::Index n = 0; n < N; ++n) {
    const PeakList peaks = find_peaks(airs.channels.col(n), max_peaks, rel_floor);
    if (peaks.size() == 0) continue;
    const double top = *std::max_element(peaks.amplitudes.begin(), peaks.amplitudes.end());
    for (std::size_t k = 0; k < peaks.size(); ++k)
      if (peaks.amplitudes[k] >= six_db * top) {
        direct(n) = static_cast<double>(peaks.positions[k]);
        ok[static_cast<std::size_t>(n)] = true;
        break;
      }
  }
  Eigen::MatrixXd tdoa(N, N);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (Eigen::Index m = 0; m < N; ++m)
    for (Eigen::Index n = 0; n < N; ++n) {
      if (m == n)
        tdoa(m, n) = 0.0;
      else if (ok[static_cast<std::size_t>(m)] && ok[static_cast<std::size_t>(n)])
        tdoa(m, n) = direct(m) - direct(n);
      else
        tdoa(m, n) = nan;
    }
  return tdoa;
}

}  // namespace cci
