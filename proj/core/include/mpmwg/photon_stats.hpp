#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace mpmwg {

// direct: signal to channel 0, idler to channel 1 (no splitter).
// two_detector: both photons through one 50:50 splitter onto channels 0 and 1.
// three_detector: signal to channel 0, idler split 50:50 onto channels 1 and 2.
enum class SplitterLayout { direct, two_detector, three_detector };

std::string to_string(SplitterLayout layout);
SplitterLayout splitter_layout_from_string(const std::string& name);
int channel_count(SplitterLayout layout);
std::vector<std::string> channel_labels(SplitterLayout layout);

struct SourceDetectionSpec {
  double pair_rate_hz = 0.0;
  double duration_s = 1.0;
  // Per detector; a single entry is broadcast to all channels.
  std::vector<double> channel_efficiencies{1.0};
  std::vector<double> dark_rates_hz{0.0};
  std::vector<double> timing_jitter_sigma_ps{0.0};
  double coincidence_window_ps = 1000.0;
  double histogram_bin_ps = 100.0;
  double dead_time_ps = 0.0;
  SplitterLayout layout = SplitterLayout::two_detector;
  std::uint64_t rng_seed = 0;

  int channels() const { return channel_count(layout); }
  double efficiency(int channel) const;
  double dark_rate(int channel) const;
  double jitter(int channel) const;
  // Throws Errc::invalid_argument.
  void validate() const;
};

struct TimeTag {
  std::uint8_t channel = 0;
  std::uint64_t timestamp_ps = 0;

  friend bool operator==(const TimeTag&, const TimeTag&) = default;
};

struct TimeTagStream {
  std::vector<TimeTag> tags;
  double duration_s = 0.0;
  std::vector<std::string> labels;

  std::uint64_t count(int channel) const;
  std::vector<std::uint64_t> timestamps(int channel) const;
  // Throws Errc::invalid_argument on unsorted tags or undeclared channels.
  void validate() const;
};

// Deterministic in rng_seed and independent of `threads`.
TimeTagStream simulate_timetags(const SourceDetectionSpec& spec, int threads = 1);

struct Measurement {
  double value = 0.0;
  double sigma = 0.0;
};

// A raw count over an acquisition time; sigma follows sqrt(N).
struct Rate {
  std::uint64_t count = 0;
  double duration_s = 1.0;

  double hz() const { return static_cast<double>(count) / duration_s; }
  double sigma_hz() const;
};

struct CoincidenceHistogram {
  double bin_ps = 0.0;
  double span_ps = 0.0;
  std::vector<double> delay_ps;  // bin centres
  std::vector<std::uint64_t> counts;
  std::vector<double> g2;
  double far_mean = 0.0;  // mean counts per bin with |t| >= 0.8 span
  std::uint64_t far_counts = 0;
  std::size_t far_bins = 0;
  bool insufficient_far_statistics = false;
};

// Histogram of t_b - t_a over [-span, span] with bins centred on zero delay.
// Throws Errc::invalid_argument unless span >= 50 bin. Thin far-delay
// statistics (< 100 counts) set insufficient_far_statistics; when the far
// region is empty g2 is left at zero.
CoincidenceHistogram coincidence_histogram(const TimeTagStream& stream, int channel_a, int channel_b,
                                           double bin_ps, double span_ps);

// max g2 - 1, with sigma from the peak and far-region counts.
Measurement compute_car(const CoincidenceHistogram& histogram);
double compute_car(std::span<const double> g2);

// Pairs with |t_b - t_a - offset| <= window / 2.
std::uint64_t count_coincidences(const TimeTagStream& stream, int channel_a, int channel_b,
                                 double window_ps, double offset_ps = 0.0);

// Heralds on `herald` with at least one tag on each of `a` and `b` inside the window.
std::uint64_t count_triples(const TimeTagStream& stream, int herald, int channel_a, int channel_b,
                            double window_ps);

// C_s C_i / (2 C_si). Throws Errc::zero_coincidence.
Measurement estimate_pgr(const Rate& c_s, const Rate& c_i, const Rate& c_si);
double estimate_pgr(double c_s_hz, double c_i_hz, double c_si_hz);

struct HeraldedG2 {
  Measurement primary;       // C_si1i2 C_s / (2 C_si1 C_si2)
  Measurement conventional;  // C_si1i2 C_s / (C_si1 C_si2)
  double heralded_rate_hz = 0.0;  // C_si1 + C_si2
};

// Throws Errc::zero_heralded_coincidence.
HeraldedG2 heralded_g2(const Rate& c_s, const Rate& c_si1, const Rate& c_si2, const Rate& c_si1i2);
HeraldedG2 heralded_g2(double c_s_hz, double c_si1_hz, double c_si2_hz, double c_si1i2_hz);

struct CoincidenceReport {
  std::vector<std::string> labels;
  std::vector<Measurement> singles_hz;
  Measurement coincidences_hz;  // channels 0 and 1
  Measurement triples_hz;       // three-detector layout only
  Measurement pgr_hz;
  Measurement car;
  HeraldedG2 g2_heralded;       // three-detector layout only
  bool has_triples = false;
  bool insufficient_far_statistics = false;
};

CoincidenceReport analyze_stream(const TimeTagStream& stream, double window_ps, double bin_ps,
                                 double span_ps);

struct AnalyticStatistics {
  std::vector<double> singles_hz;
  double true_coincidences_hz = 0.0;  // channels 0 and 1
  double accidental_coincidences_hz = 0.0;
  double car = 0.0;
  double pgr_estimate_hz = 0.0;
  // Three-detector layout only.
  double g2_heralded_primary = 0.0;
  double g2_heralded_conventional = 0.0;
};

// Small-mu closed forms over the coincidence window. Throws
// Errc::regime_violation when pair_rate * window > 0.1.
AnalyticStatistics analytic_statistics(const SourceDetectionSpec& spec);

}  // namespace mpmwg
