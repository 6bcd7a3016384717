#include "mpmwg/photon_stats.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "mpmwg/errors.hpp"
#include "mpmwg/parallel.hpp"

namespace mpmwg {

namespace {

constexpr double kPsPerSecond = 1e12;
// Fixed block length so the random stream does not depend on thread count.
constexpr double kBlockSeconds = 0.01;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double per_channel(const std::vector<double>& values, int channel) {
  if (values.size() == 1) return values.front();
  return values.at(static_cast<std::size_t>(channel));
}

bool tag_less(const TimeTag& a, const TimeTag& b) {
  return a.timestamp_ps != b.timestamp_ps ? a.timestamp_ps < b.timestamp_ps : a.channel < b.channel;
}

void check_channel(const TimeTagStream& stream, int channel) {
  if (channel < 0 || static_cast<std::size_t>(channel) >= stream.labels.size()) {
    throw Error(Errc::invalid_argument, "channel " + std::to_string(channel) + " not declared");
  }
}

Measurement product_ratio(double value, std::initializer_list<std::uint64_t> counts) {
  double rel2 = 0.0;
  for (auto n : counts) {
    if (n > 0) rel2 += 1.0 / static_cast<double>(n);
  }
  return {value, std::abs(value) * std::sqrt(rel2)};
}

}  // namespace

std::string to_string(SplitterLayout layout) {
  switch (layout) {
    case SplitterLayout::direct: return "direct";
    case SplitterLayout::two_detector: return "two_detector";
    case SplitterLayout::three_detector: return "three_detector";
  }
  return "unknown";
}

SplitterLayout splitter_layout_from_string(const std::string& name) {
  if (name == "direct") return SplitterLayout::direct;
  if (name == "two_detector") return SplitterLayout::two_detector;
  if (name == "three_detector") return SplitterLayout::three_detector;
  throw Error(Errc::invalid_argument, "unknown splitter layout '" + name + "'");
}

int channel_count(SplitterLayout layout) { return layout == SplitterLayout::three_detector ? 3 : 2; }

std::vector<std::string> channel_labels(SplitterLayout layout) {
  switch (layout) {
    case SplitterLayout::direct: return {"signal", "idler"};
    case SplitterLayout::two_detector: return {"a", "b"};
    case SplitterLayout::three_detector: return {"s", "i1", "i2"};
  }
  return {};
}

double SourceDetectionSpec::efficiency(int channel) const { return per_channel(channel_efficiencies, channel); }
double SourceDetectionSpec::dark_rate(int channel) const { return per_channel(dark_rates_hz, channel); }
double SourceDetectionSpec::jitter(int channel) const { return per_channel(timing_jitter_sigma_ps, channel); }

void SourceDetectionSpec::validate() const {
  auto fail = [](const std::string& what) { throw Error(Errc::invalid_argument, what); };
  if (!(pair_rate_hz >= 0.0) || !std::isfinite(pair_rate_hz)) fail("pair rate must be finite and >= 0");
  if (!(duration_s > 0.0) || !std::isfinite(duration_s)) fail("duration must be positive");
  if (!(histogram_bin_ps > 0.0)) fail("histogram bin must be positive");
  if (!(coincidence_window_ps >= histogram_bin_ps)) fail("coincidence window must be >= histogram bin");
  if (!(dead_time_ps >= 0.0)) fail("dead time must be >= 0");
  const auto n = static_cast<std::size_t>(channels());
  auto check_size = [&](const std::vector<double>& v, const char* name) {
    if (v.size() != 1 && v.size() != n) {
      fail(std::string(name) + " needs 1 or " + std::to_string(n) + " entries");
    }
  };
  check_size(channel_efficiencies, "channel_efficiencies");
  check_size(dark_rates_hz, "dark_rates");
  check_size(timing_jitter_sigma_ps, "timing_jitter_sigma");
  for (double e : channel_efficiencies) {
    if (!(e >= 0.0 && e <= 1.0)) fail("efficiencies must lie in [0, 1]");
  }
  for (double d : dark_rates_hz) {
    if (!(d >= 0.0)) fail("dark rates must be >= 0");
  }
  for (double j : timing_jitter_sigma_ps) {
    if (!(j >= 0.0)) fail("timing jitter must be >= 0");
  }
}

std::uint64_t TimeTagStream::count(int channel) const {
  return static_cast<std::uint64_t>(std::count_if(
      tags.begin(), tags.end(), [&](const TimeTag& t) { return t.channel == channel; }));
}

std::vector<std::uint64_t> TimeTagStream::timestamps(int channel) const {
  std::vector<std::uint64_t> out;
  for (const auto& t : tags) {
    if (t.channel == channel) out.push_back(t.timestamp_ps);
  }
  return out;
}

void TimeTagStream::validate() const {
  for (std::size_t k = 0; k < tags.size(); ++k) {
    if (tags[k].channel >= labels.size()) {
      throw Error(Errc::invalid_argument, "tag " + std::to_string(k) + " has undeclared channel " +
                                              std::to_string(tags[k].channel));
    }
    if (k > 0 && tags[k].timestamp_ps < tags[k - 1].timestamp_ps) {
      throw Error(Errc::invalid_argument, "timestamps decrease at tag " + std::to_string(k));
    }
  }
}

TimeTagStream simulate_timetags(const SourceDetectionSpec& spec, int threads) {
  spec.validate();
  const int nch = spec.channels();
  const double end_ps = spec.duration_s * kPsPerSecond;
  const auto blocks = static_cast<std::size_t>(std::ceil(spec.duration_s / kBlockSeconds));
  std::vector<std::vector<TimeTag>> parts(blocks);

  parallel_for(blocks, threads, [&](std::size_t b) {
    std::mt19937_64 rng(splitmix64(spec.rng_seed ^ splitmix64(b + 1)));
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    std::bernoulli_distribution coin(0.5);
    std::normal_distribution<double> gauss(0.0, 1.0);

    const double t0 = static_cast<double>(b) * kBlockSeconds * kPsPerSecond;
    const double t1 = std::min(end_ps, t0 + kBlockSeconds * kPsPerSecond);
    const double length_s = (t1 - t0) / kPsPerSecond;
    auto& out = parts[b];

    auto detect = [&](int channel, double t) {
      if (uniform(rng) >= spec.efficiency(channel)) return;
      const double sigma = spec.jitter(channel);
      if (sigma > 0.0) t += sigma * gauss(rng);
      if (t < 0.0 || t >= end_ps) return;
      out.push_back({static_cast<std::uint8_t>(channel), static_cast<std::uint64_t>(std::llround(t))});
    };

    if (spec.pair_rate_hz > 0.0) {
      std::poisson_distribution<std::uint64_t> pairs(spec.pair_rate_hz * length_s);
      const std::uint64_t n = pairs(rng);
      for (std::uint64_t k = 0; k < n; ++k) {
        const double t = t0 + (t1 - t0) * uniform(rng);
        switch (spec.layout) {
          case SplitterLayout::direct:
            detect(0, t);
            detect(1, t);
            break;
          case SplitterLayout::two_detector:
            detect(coin(rng) ? 1 : 0, t);
            detect(coin(rng) ? 1 : 0, t);
            break;
          case SplitterLayout::three_detector:
            detect(0, t);
            detect(coin(rng) ? 2 : 1, t);
            break;
        }
      }
    }
    for (int c = 0; c < nch; ++c) {
      const double dark = spec.dark_rate(c);
      if (dark <= 0.0) continue;
      std::poisson_distribution<std::uint64_t> darks(dark * length_s);
      const std::uint64_t n = darks(rng);
      for (std::uint64_t k = 0; k < n; ++k) {
        const double t = t0 + (t1 - t0) * uniform(rng);
        out.push_back({static_cast<std::uint8_t>(c), static_cast<std::uint64_t>(std::llround(t))});
      }
    }
  });

  TimeTagStream stream;
  stream.duration_s = spec.duration_s;
  stream.labels = channel_labels(spec.layout);
  std::size_t total = 0;
  for (const auto& p : parts) total += p.size();
  stream.tags.reserve(total);
  for (auto& p : parts) {
    stream.tags.insert(stream.tags.end(), p.begin(), p.end());
    std::vector<TimeTag>().swap(p);
  }
  std::sort(stream.tags.begin(), stream.tags.end(), tag_less);

  if (spec.dead_time_ps > 0.0) {
    const auto dead = static_cast<std::uint64_t>(std::llround(spec.dead_time_ps));
    std::vector<std::uint64_t> last(static_cast<std::size_t>(nch), 0);
    std::vector<bool> seen(static_cast<std::size_t>(nch), false);
    std::erase_if(stream.tags, [&](const TimeTag& t) {
      if (seen[t.channel] && t.timestamp_ps - last[t.channel] < dead) return true;
      seen[t.channel] = true;
      last[t.channel] = t.timestamp_ps;
      return false;
    });
  }
  return stream;
}

double Rate::sigma_hz() const { return std::sqrt(static_cast<double>(count)) / duration_s; }

CoincidenceHistogram coincidence_histogram(const TimeTagStream& stream, int channel_a, int channel_b,
                                           double bin_ps, double span_ps) {
  check_channel(stream, channel_a);
  check_channel(stream, channel_b);
  if (!(bin_ps > 0.0) || !(span_ps >= 50.0 * bin_ps)) {
    throw Error(Errc::invalid_argument, "histogram span must be at least 50 bins");
  }
  const auto half = static_cast<std::int64_t>(std::floor(span_ps / bin_ps));
  const auto nbins = static_cast<std::size_t>(2 * half + 1);
  const double edge = (static_cast<double>(half) + 0.5) * bin_ps;

  CoincidenceHistogram h;
  h.bin_ps = bin_ps;
  h.span_ps = span_ps;
  h.counts.assign(nbins, 0);
  h.delay_ps.resize(nbins);
  for (std::size_t k = 0; k < nbins; ++k) {
    h.delay_ps[k] = static_cast<double>(static_cast<std::int64_t>(k) - half) * bin_ps;
  }

  const auto ta = stream.timestamps(channel_a);
  const auto tb = stream.timestamps(channel_b);
  std::size_t lo = 0;
  for (std::uint64_t a : ta) {
    const double lower = static_cast<double>(a) - edge;
    while (lo < tb.size() && static_cast<double>(tb[lo]) < lower) ++lo;
    for (std::size_t j = lo; j < tb.size(); ++j) {
      const double dt = static_cast<double>(tb[j]) - static_cast<double>(a);
      if (dt >= edge) break;
      const auto idx = static_cast<std::int64_t>(std::floor(dt / bin_ps + 0.5)) + half;
      if (idx >= 0 && idx < static_cast<std::int64_t>(nbins)) ++h.counts[static_cast<std::size_t>(idx)];
    }
  }

  for (std::size_t k = 0; k < nbins; ++k) {
    if (std::abs(h.delay_ps[k]) >= 0.8 * span_ps) {
      h.far_counts += h.counts[k];
      ++h.far_bins;
    }
  }
  h.insufficient_far_statistics = h.far_counts < 100;
  h.g2.assign(nbins, 0.0);
  if (h.far_counts > 0) {
    h.far_mean = static_cast<double>(h.far_counts) / static_cast<double>(h.far_bins);
    for (std::size_t k = 0; k < nbins; ++k) h.g2[k] = static_cast<double>(h.counts[k]) / h.far_mean;
  }
  return h;
}

Measurement compute_car(const CoincidenceHistogram& histogram) {
  if (histogram.g2.empty()) return {};
  const auto peak = std::max_element(histogram.g2.begin(), histogram.g2.end());
  const auto k = static_cast<std::size_t>(peak - histogram.g2.begin());
  const double g = *peak;
  double rel2 = 0.0;
  if (histogram.counts[k] > 0) rel2 += 1.0 / static_cast<double>(histogram.counts[k]);
  if (histogram.far_counts > 0) rel2 += 1.0 / static_cast<double>(histogram.far_counts);
  return {g - 1.0, g * std::sqrt(rel2)};
}

double compute_car(std::span<const double> g2) {
  if (g2.empty()) return 0.0;
  return *std::max_element(g2.begin(), g2.end()) - 1.0;
}

std::uint64_t count_coincidences(const TimeTagStream& stream, int channel_a, int channel_b,
                                 double window_ps, double offset_ps) {
  check_channel(stream, channel_a);
  check_channel(stream, channel_b);
  const double half = 0.5 * window_ps;
  const auto ta = stream.timestamps(channel_a);
  const auto tb = stream.timestamps(channel_b);
  std::uint64_t n = 0;
  std::size_t lo = 0;
  for (std::uint64_t a : ta) {
    const double centre = static_cast<double>(a) + offset_ps;
    while (lo < tb.size() && static_cast<double>(tb[lo]) < centre - half) ++lo;
    for (std::size_t j = lo; j < tb.size() && static_cast<double>(tb[j]) <= centre + half; ++j) ++n;
  }
  return n;
}

std::uint64_t count_triples(const TimeTagStream& stream, int herald, int channel_a, int channel_b,
                            double window_ps) {
  check_channel(stream, herald);
  check_channel(stream, channel_a);
  check_channel(stream, channel_b);
  const double half = 0.5 * window_ps;
  const auto ts = stream.timestamps(herald);
  const auto t1 = stream.timestamps(channel_a);
  const auto t2 = stream.timestamps(channel_b);
  auto any_within = [half](const std::vector<std::uint64_t>& t, std::size_t& lo, double centre) {
    while (lo < t.size() && static_cast<double>(t[lo]) < centre - half) ++lo;
    return lo < t.size() && static_cast<double>(t[lo]) <= centre + half;
  };
  std::uint64_t n = 0;
  std::size_t lo1 = 0;
  std::size_t lo2 = 0;
  for (std::uint64_t s : ts) {
    const auto centre = static_cast<double>(s);
    const bool hit1 = any_within(t1, lo1, centre);
    const bool hit2 = any_within(t2, lo2, centre);
    if (hit1 && hit2) ++n;
  }
  return n;
}

Measurement estimate_pgr(const Rate& c_s, const Rate& c_i, const Rate& c_si) {
  if (c_si.count == 0) throw Error(Errc::zero_coincidence, "no coincidences recorded");
  return product_ratio(c_s.hz() * c_i.hz() / (2.0 * c_si.hz()), {c_s.count, c_i.count, c_si.count});
}

double estimate_pgr(double c_s_hz, double c_i_hz, double c_si_hz) {
  if (!(c_si_hz > 0.0)) throw Error(Errc::zero_coincidence, "coincidence rate must be positive");
  return c_s_hz * c_i_hz / (2.0 * c_si_hz);
}

HeraldedG2 heralded_g2(const Rate& c_s, const Rate& c_si1, const Rate& c_si2, const Rate& c_si1i2) {
  if (c_si1.count == 0 || c_si2.count == 0) {
    throw Error(Errc::zero_heralded_coincidence, "a heralded coincidence count is zero");
  }
  const double conv = c_si1i2.hz() * c_s.hz() / (c_si1.hz() * c_si2.hz());
  HeraldedG2 g;
  g.conventional = product_ratio(conv, {c_si1i2.count, c_s.count, c_si1.count, c_si2.count});
  if (c_si1i2.count == 0) g.conventional.sigma = 0.0;
  g.primary = {0.5 * g.conventional.value, 0.5 * g.conventional.sigma};
  g.heralded_rate_hz = c_si1.hz() + c_si2.hz();
  return g;
}

HeraldedG2 heralded_g2(double c_s_hz, double c_si1_hz, double c_si2_hz, double c_si1i2_hz) {
  if (!(c_si1_hz > 0.0) || !(c_si2_hz > 0.0)) {
    throw Error(Errc::zero_heralded_coincidence, "heralded coincidence rates must be positive");
  }
  HeraldedG2 g;
  g.conventional.value = c_si1i2_hz * c_s_hz / (c_si1_hz * c_si2_hz);
  g.primary.value = 0.5 * g.conventional.value;
  g.heralded_rate_hz = c_si1_hz + c_si2_hz;
  return g;
}

CoincidenceReport analyze_stream(const TimeTagStream& stream, double window_ps, double bin_ps,
                                 double span_ps) {
  stream.validate();
  if (stream.labels.size() < 2) throw Error(Errc::invalid_argument, "need at least two channels");
  if (!(stream.duration_s > 0.0)) throw Error(Errc::invalid_argument, "stream duration must be positive");
  const double T = stream.duration_s;
  auto as_measurement = [](const Rate& r) { return Measurement{r.hz(), r.sigma_hz()}; };

  CoincidenceReport rep;
  rep.labels = stream.labels;
  std::vector<Rate> singles;
  for (std::size_t c = 0; c < stream.labels.size(); ++c) {
    singles.push_back({stream.count(static_cast<int>(c)), T});
    rep.singles_hz.push_back(as_measurement(singles.back()));
  }
  const Rate c01{count_coincidences(stream, 0, 1, window_ps), T};
  rep.coincidences_hz = as_measurement(c01);
  if (c01.count > 0) rep.pgr_hz = estimate_pgr(singles[0], singles[1], c01);

  const auto hist = coincidence_histogram(stream, 0, 1, bin_ps, span_ps);
  rep.car = compute_car(hist);
  rep.insufficient_far_statistics = hist.insufficient_far_statistics;

  if (stream.labels.size() >= 3) {
    const Rate c02{count_coincidences(stream, 0, 2, window_ps), T};
    const Rate c012{count_triples(stream, 0, 1, 2, window_ps), T};
    rep.has_triples = true;
    rep.triples_hz = as_measurement(c012);
    if (c01.count > 0 && c02.count > 0) rep.g2_heralded = heralded_g2(singles[0], c01, c02, c012);
  }
  return rep;
}

AnalyticStatistics analytic_statistics(const SourceDetectionSpec& spec) {
  spec.validate();
  const double R = spec.pair_rate_hz;
  const double tau = spec.coincidence_window_ps / kPsPerSecond;
  if (R * tau > 0.1) {
    throw Error(Errc::regime_violation, "pair_rate * window = " + std::to_string(R * tau) + " exceeds 0.1");
  }
  AnalyticStatistics a;
  const int n = spec.channels();
  std::vector<double> true_singles(static_cast<std::size_t>(n));
  double true01 = 0.0;
  switch (spec.layout) {
    case SplitterLayout::direct:
      true_singles = {R * spec.efficiency(0), R * spec.efficiency(1)};
      true01 = R * spec.efficiency(0) * spec.efficiency(1);
      break;
    case SplitterLayout::two_detector:
      true_singles = {R * spec.efficiency(0), R * spec.efficiency(1)};
      true01 = 0.5 * R * spec.efficiency(0) * spec.efficiency(1);
      break;
    case SplitterLayout::three_detector:
      true_singles = {R * spec.efficiency(0), 0.5 * R * spec.efficiency(1), 0.5 * R * spec.efficiency(2)};
      true01 = 0.5 * R * spec.efficiency(0) * spec.efficiency(1);
      break;
  }
  for (int c = 0; c < n; ++c) a.singles_hz.push_back(true_singles[static_cast<std::size_t>(c)] + spec.dark_rate(c));
  a.true_coincidences_hz = true01;
  a.accidental_coincidences_hz = a.singles_hz[0] * a.singles_hz[1] * tau;
  a.car = a.accidental_coincidences_hz > 0.0 ? true01 / a.accidental_coincidences_hz : 0.0;
  const double c01 = true01 + a.accidental_coincidences_hz;
  a.pgr_estimate_hz = c01 > 0.0 ? a.singles_hz[0] * a.singles_hz[1] / (2.0 * c01) : 0.0;

  if (spec.layout == SplitterLayout::three_detector) {
    const double s = a.singles_hz[0];
    const double c1 = c01;
    const double c2 = 0.5 * R * spec.efficiency(0) * spec.efficiency(2) + s * a.singles_hz[2] * tau;
    // A herald correlated with one arm plus an uncorrelated tag on the other,
    // or uncorrelated tags on both.
    const double triples = tau * (c1 * a.singles_hz[2] + c2 * a.singles_hz[1]) +
                           s * a.singles_hz[1] * a.singles_hz[2] * tau * tau;
    if (c1 > 0.0 && c2 > 0.0) {
      a.g2_heralded_conventional = triples * s / (c1 * c2);
      a.g2_heralded_primary = 0.5 * a.g2_heralded_conventional;
    }
  }
  return a;
}

}  // namespace mpmwg
