#include <doctest.h>

#include <cmath>
#include <numeric>

#include "mpmwg/photon_stats.hpp"
#include "test_support.hpp"

using namespace mpmwg;

namespace {

SourceDetectionSpec pair_source(double rate_hz, double efficiency, double duration_s,
                                SplitterLayout layout = SplitterLayout::two_detector) {
  SourceDetectionSpec s;
  s.pair_rate_hz = rate_hz;
  s.duration_s = duration_s;
  s.channel_efficiencies = {efficiency};
  s.layout = layout;
  s.rng_seed = 7;
  return s;
}

std::size_t centre_bin(const CoincidenceHistogram& h) { return h.counts.size() / 2; }

}  // namespace

TEST_CASE("layout helpers") {
  CHECK(channel_count(SplitterLayout::direct) == 2);
  CHECK(channel_count(SplitterLayout::two_detector) == 2);
  CHECK(channel_count(SplitterLayout::three_detector) == 3);
  CHECK(channel_labels(SplitterLayout::three_detector) == std::vector<std::string>{"s", "i1", "i2"});
  for (auto l : {SplitterLayout::direct, SplitterLayout::two_detector, SplitterLayout::three_detector}) {
    CHECK(splitter_layout_from_string(to_string(l)) == l);
  }
  CHECK_ERRC(splitter_layout_from_string("four_detector"), Errc::invalid_argument);
}

TEST_CASE("spec validation") {
  auto s = pair_source(1e5, 0.5, 0.01);
  s.channel_efficiencies = {0.5, 0.5, 0.5};
  CHECK_ERRC(simulate_timetags(s), Errc::invalid_argument);
  s = pair_source(1e5, 1.5, 0.01);
  CHECK_ERRC(simulate_timetags(s), Errc::invalid_argument);
  s = pair_source(-1.0, 0.5, 0.01);
  CHECK_ERRC(simulate_timetags(s), Errc::invalid_argument);
  s = pair_source(1e5, 0.5, 0.0);
  CHECK_ERRC(simulate_timetags(s), Errc::invalid_argument);
  s = pair_source(1e5, 0.5, 0.01);
  s.coincidence_window_ps = 50.0;
  CHECK_ERRC(simulate_timetags(s), Errc::invalid_argument);
}

TEST_CASE("no source and no dark counts gives an empty stream") {
  auto s = pair_source(0.0, 0.5, 0.1);
  const auto stream = simulate_timetags(s);
  CHECK(stream.tags.empty());
  CHECK(stream.labels.size() == 2);
  const auto h = coincidence_histogram(stream, 0, 1, 100.0, 1e5);
  CHECK(std::accumulate(h.counts.begin(), h.counts.end(), std::uint64_t{0}) == 0);
  CHECK(h.insufficient_far_statistics);
  CHECK(compute_car(h).value == doctest::Approx(-1.0));
  const auto rep = analyze_stream(stream, 1000.0, 100.0, 1e5);
  CHECK(rep.coincidences_hz.value == 0.0);
  CHECK(rep.pgr_hz.value == 0.0);
}

TEST_CASE("singles are Poisson in the direct layout") {
  const double rate = 1e4, eta = 0.5, t = 1.0;
  const double mean = rate * eta * t;
  double sum0 = 0.0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    auto s = pair_source(rate, eta, t, SplitterLayout::direct);
    s.rng_seed = seed;
    const auto stream = simulate_timetags(s);
    for (int c = 0; c < 2; ++c) {
      CHECK(std::abs(static_cast<double>(stream.count(c)) - mean) < 5.0 * std::sqrt(mean));
    }
    sum0 += static_cast<double>(stream.count(0));
  }
  CHECK(std::abs(sum0 / 100.0 - mean) < 5.0 * std::sqrt(mean / 100.0));
}

TEST_CASE("tags are sorted, in range and jitter-free when asked") {
  auto s = pair_source(1e5, 1.0, 0.05, SplitterLayout::direct);
  const auto stream = simulate_timetags(s);
  stream.validate();
  for (const auto& t : stream.tags) CHECK_LT(t.timestamp_ps, std::uint64_t{50'000'000'000});
  // With unit efficiency and no jitter every signal tag has an idler twin.
  CHECK(stream.count(0) == stream.count(1));
  CHECK(count_coincidences(stream, 0, 1, 1.0) >= stream.count(0));
}

TEST_CASE("dark counts alone give a flat histogram") {
  auto s = pair_source(0.0, 1.0, 1.0);
  s.dark_rates_hz = {1e5};
  const auto stream = simulate_timetags(s);
  const auto h = coincidence_histogram(stream, 0, 1, 1000.0, 1e6);
  CHECK(!h.insufficient_far_statistics);
  const double mean_g2 = std::accumulate(h.g2.begin(), h.g2.end(), 0.0) / static_cast<double>(h.g2.size());
  CHECK(mean_g2 == doctest::Approx(1.0).epsilon(0.02));
  // Expected S_a S_b bin T = 10 counts per bin.
  CHECK(h.far_mean == doctest::Approx(10.0).epsilon(0.05));
  const double c = static_cast<double>(h.counts[centre_bin(h)]);
  CHECK(std::abs(c - h.far_mean) < 5.0 * std::sqrt(h.far_mean));
}

TEST_CASE("zero jitter puts every pair in the zero-delay bin") {
  auto s = pair_source(1e5, 1.0, 1.0, SplitterLayout::direct);
  const auto stream = simulate_timetags(s);
  const auto h = coincidence_histogram(stream, 0, 1, 100.0, 1e6);
  const auto k = centre_bin(h);
  CHECK(h.delay_ps[k] == 0.0);
  CHECK(h.counts[k] >= stream.count(0));
  // Neighbours hold only accidentals (about one per bin).
  CHECK(h.counts[k - 1] < 20);
  CHECK(h.counts[k + 1] < 20);
  const auto car = compute_car(h);
  CHECK(car.value > 1e4);
  CHECK(car.sigma > 0.0);
}

TEST_CASE("histogram arguments") {
  const auto stream = simulate_timetags(pair_source(1e3, 1.0, 0.01));
  CHECK_ERRC(coincidence_histogram(stream, 0, 1, 100.0, 4000.0), Errc::invalid_argument);
  CHECK_ERRC(coincidence_histogram(stream, 0, 5, 100.0, 1e5), Errc::invalid_argument);
  const auto h = coincidence_histogram(stream, 0, 1, 100.0, 5000.0);
  CHECK(h.counts.size() == 101);
  CHECK(h.delay_ps.front() == doctest::Approx(-5000.0));
}

TEST_CASE("estimator arithmetic") {
  CHECK(estimate_pgr(1000.0, 1000.0, 50.0) == doctest::Approx(10000.0));
  CHECK_ERRC(estimate_pgr(1000.0, 1000.0, 0.0), Errc::zero_coincidence);
  CHECK_ERRC(estimate_pgr(Rate{1000, 1.0}, Rate{1000, 1.0}, Rate{0, 1.0}), Errc::zero_coincidence);
  const auto m = estimate_pgr(Rate{1000, 1.0}, Rate{1000, 1.0}, Rate{50, 1.0});
  CHECK(m.value == doctest::Approx(10000.0));
  // Relative error sqrt(1/1000 + 1/1000 + 1/50).
  CHECK(m.sigma == doctest::Approx(10000.0 * std::sqrt(0.022)).epsilon(1e-9));

  const std::vector<double> g2{1.0, 1.1, 5.0, 0.9};
  CHECK(compute_car(g2) == doctest::Approx(4.0));
  CHECK(compute_car(std::vector<double>{}) == 0.0);

  const auto g = heralded_g2(1e5, 100.0, 100.0, 0.0);
  CHECK(g.primary.value == 0.0);
  CHECK(g.conventional.value == 0.0);
  CHECK(g.heralded_rate_hz == doctest::Approx(200.0));
  const auto g1 = heralded_g2(1e5, 100.0, 100.0, 0.2);
  CHECK(g1.conventional.value == doctest::Approx(2.0));
  CHECK(g1.primary.value == doctest::Approx(1.0));
  CHECK_ERRC(heralded_g2(1e5, 0.0, 100.0, 0.0), Errc::zero_heralded_coincidence);
  CHECK_ERRC(heralded_g2(Rate{100000, 1.0}, Rate{100, 1.0}, Rate{0, 1.0}, Rate{0, 1.0}),
             Errc::zero_heralded_coincidence);
}

TEST_CASE("Monte Carlo pair rate estimate") {
  auto s = pair_source(1e6, 0.2, 1.0);
  s.timing_jitter_sigma_ps = {40.0};
  const auto rep = analyze_stream(simulate_timetags(s), 1000.0, 100.0, 1e6);
  CHECK(rep.pgr_hz.value == doctest::Approx(1e6).epsilon(0.05));
  CHECK(std::abs(rep.pgr_hz.value - 1e6) < 5.0 * rep.pgr_hz.sigma);
  CHECK(!rep.has_triples);
}

TEST_CASE("PGR uncertainty shrinks as 1/sqrt(T)") {
  auto s = pair_source(2e5, 0.2, 0.25);
  const auto a = analyze_stream(simulate_timetags(s), 1000.0, 100.0, 1e5);
  s.duration_s = 1.0;
  const auto b = analyze_stream(simulate_timetags(s), 1000.0, 100.0, 1e5);
  CHECK(a.pgr_hz.sigma / b.pgr_hz.sigma == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("simulation is deterministic and thread-count independent") {
  auto s = pair_source(5e5, 0.3, 0.05, SplitterLayout::three_detector);
  s.dark_rates_hz = {200.0};
  s.timing_jitter_sigma_ps = {40.0};
  s.dead_time_ps = 20000.0;
  const auto a = simulate_timetags(s, 1);
  const auto b = simulate_timetags(s, 1);
  const auto c = simulate_timetags(s, 3);
  CHECK(a.tags == b.tags);
  CHECK(a.tags == c.tags);
  s.rng_seed += 1;
  CHECK(simulate_timetags(s).tags != a.tags);
}

TEST_CASE("dead time separates tags on a channel") {
  auto s = pair_source(2e6, 1.0, 0.01, SplitterLayout::direct);
  s.dead_time_ps = 1e6;
  const auto stream = simulate_timetags(s);
  for (int c = 0; c < 2; ++c) {
    const auto ts = stream.timestamps(c);
    for (std::size_t k = 1; k < ts.size(); ++k) REQUIRE(ts[k] - ts[k - 1] >= 1'000'000);
  }
  // Detected rate saturates below 1 / dead time.
  CHECK(static_cast<double>(stream.count(0)) / s.duration_s < 1e6);
}

TEST_CASE("analytic statistics") {
  auto s = pair_source(1e6, 0.2, 1.0);
  s.dark_rates_hz = {100.0};
  const auto a = analytic_statistics(s);
  CHECK(a.singles_hz[0] == doctest::Approx(2e5 + 100.0));
  CHECK(a.true_coincidences_hz == doctest::Approx(0.5 * 1e6 * 0.04));
  CHECK(a.accidental_coincidences_hz == doctest::Approx(a.singles_hz[0] * a.singles_hz[1] * 1e-9));
  CHECK(a.pgr_estimate_hz == doctest::Approx(1e6).epsilon(0.01));

  SUBCASE("CAR times PGR is nearly independent of pump") {
    auto lo = s;
    lo.pair_rate_hz = 2.5e5;
    const auto b = analytic_statistics(lo);
    CHECK(a.car * a.pgr_estimate_hz == doctest::Approx(b.car * b.pgr_estimate_hz).epsilon(0.01));
    CHECK(b.car > a.car);
  }
  SUBCASE("doubling the window halves CAR") {
    auto wide = s;
    wide.coincidence_window_ps *= 2.0;
    CHECK(analytic_statistics(wide).car == doctest::Approx(0.5 * a.car).epsilon(1e-12));
  }
  SUBCASE("regime") {
    auto bright = s;
    bright.pair_rate_hz = 2e8;
    CHECK_ERRC(analytic_statistics(bright), Errc::regime_violation);
  }
}

TEST_CASE("analytic and Monte Carlo coincidences agree") {
  auto s = pair_source(5e5, 0.25, 1.0);
  s.dark_rates_hz = {1000.0};
  const auto a = analytic_statistics(s);
  const auto stream = simulate_timetags(s);
  for (int c = 0; c < 2; ++c) {
    const double n = static_cast<double>(stream.count(c));
    CHECK(std::abs(n - a.singles_hz[static_cast<std::size_t>(c)]) < 3.0 * std::sqrt(n));
  }
  const double expected = a.true_coincidences_hz + a.accidental_coincidences_hz;
  const double got = static_cast<double>(count_coincidences(stream, 0, 1, s.coincidence_window_ps));
  CHECK(std::abs(got - expected) < 3.0 * std::sqrt(expected));
}

TEST_CASE("heralded g2 grows with pump") {
  double last = -1.0;
  for (double rate : {2e5, 1e6, 4e6}) {
    auto s = pair_source(rate, 0.3, 0.2, SplitterLayout::three_detector);
    s.timing_jitter_sigma_ps = {40.0};
    const auto rep = analyze_stream(simulate_timetags(s), 1000.0, 100.0, 1e5);
    const auto a = analytic_statistics(s);
    REQUIRE(rep.has_triples);
    CHECK(rep.g2_heralded.primary.value > last);
    CHECK(rep.g2_heralded.conventional.value == doctest::Approx(2.0 * rep.g2_heralded.primary.value));
    CHECK(std::abs(rep.g2_heralded.primary.value - a.g2_heralded_primary) <
          3.0 * rep.g2_heralded.primary.sigma + 1e-3);
    last = rep.g2_heralded.primary.value;
  }
}
