// Peak extraction from impulse responses, greedy truth/estimate matching at a
// sample threshold, and the two benchmark error metrics: average peak
// position mismatch and average fraction of unmatched peaks.
#ifndef CCI_PEAKS_HPP_
#define CCI_PEAKS_HPP_

#include <vector>

#include "cci/types.hpp"

namespace cci {

struct PeakList {
  std::vector<Eigen::Index> positions;  // strictly increasing
  std::vector<double> amplitudes;       // positive, same length
  std::size_t size() const { return positions.size(); }
};

// Strictly positive local maxima (plateaus take the leftmost index) with
// amplitude >= rel_floor * channel max, keeping the max_peaks largest,
// reported in position order. An all-zero channel yields an empty list.
PeakList find_peaks(const Eigen::Ref<const Eigen::VectorXd>& channel, int max_peaks,
                    double rel_floor);

// The strictly positive taps of a simulated sparse response, as a peak list
// (the ground-truth arrival train). max_peaks < 0 keeps every tap; otherwise
// the largest max_peaks survive, reported in position order.
PeakList tap_train(const Eigen::Ref<const Eigen::VectorXd>& channel,
                   int max_peaks = -1);

struct MatchedPair {
  Eigen::Index truth_position = 0;
  Eigen::Index estimate_position = 0;
  double offset = 0.0;  // |truth - estimate| in samples
};

struct MatchReport {
  std::vector<MatchedPair> matched_pairs;
  int unmatched_truth_count = 0;
  double threshold = 0.0;
};

// Greedy one-to-one matching over all truth x estimate pairs with
// |offset| <= threshold, by ascending offset; ties prefer the smaller truth
// position, then the smaller estimate position.
MatchReport match_peaks(const PeakList& truth, const PeakList& estimate,
                        double threshold);

struct MetricPair {
  double a_ppm = 0.0;  // samples
  double a_pup = 0.0;  // in [0, 1]
};

// Trials pool their channels: per trial, matched counts and offsets aggregate
// over all channels. A trial with no matches contributes 0 to the mismatch
// sum and 1 to the unmatched fraction.
MetricPair compute_metrics(const std::vector<std::vector<MatchReport>>& per_trial_reports,
                           int truth_peak_count);

// Per channel, the direct path is the earliest peak within 6 dB of that
// channel's largest peak; entry (m, n) = direct(m) - direct(n). Channels
// without peaks poison their pairs with NaN.
Eigen::MatrixXd estimate_tdoas(const AirSet& airs, int max_peaks,
                               double rel_floor = 0.05);

}  // namespace cci

#endif  // CCI_PEAKS_HPP_
