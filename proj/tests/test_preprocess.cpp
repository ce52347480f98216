#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <set>

#include "doctest.h"
#include "fixrocket/error.hpp"
#include "fixrocket/preprocess.hpp"
#include "fixrocket/rng.hpp"
#include "test_util.hpp"

using namespace fixrocket;

namespace {

// Squared magnitude of an order-n digital Butterworth high-pass obtained by
// the bilinear transform with pre-warping.
double oracle_power(double f, double fc, double fs, int order) {
  const double r = std::tan(std::numbers::pi * fc / fs) / std::tan(std::numbers::pi * f / fs);
  return 1.0 / (1.0 + std::pow(r, 2.0 * order));
}

std::vector<double> sine(double f, std::size_t n, double fs = 300.0, double phase = 0.3) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = std::sin(2.0 * std::numbers::pi * f * static_cast<double>(i) / fs + phase);
  return x;
}

// Amplitude of the f component over [lo, hi), by projection on sin and cos.
double amplitude(const std::vector<double>& y, double f, std::size_t lo, std::size_t hi, double fs = 300.0) {
  double s = 0.0, c = 0.0;
  for (std::size_t i = lo; i < hi; ++i) {
    const double w = 2.0 * std::numbers::pi * f * static_cast<double>(i) / fs;
    s += y[i] * std::sin(w);
    c += y[i] * std::cos(w);
  }
  const double n = static_cast<double>(hi - lo);
  return 2.0 * std::hypot(s, c) / n;
}

double measured_gain(double f, const FilterSpec& spec) {
  const auto y = butterworth_highpass(sine(f, 6000), spec);
  return amplitude(y, f, 1500, 4500);
}

SessionSeries series_from(std::vector<double> x) {
  SessionSeries s;
  for (auto& ch : s.channels) ch = x;
  return s;
}

}  // namespace

TEST_SUITE("preprocess") {
  TEST_CASE("angular to positional") {
    const std::vector<double> a{0.0, 45.0, 10.0, -10.0};
    const auto p = angular_to_positional(a, 60.0);
    CHECK(p[0] == 0.0);
    CHECK(p[1] == doctest::Approx(60.0).epsilon(1e-12));
    CHECK(p[2] == doctest::Approx(10.58).epsilon(1e-3));
    CHECK(p[2] == doctest::Approx(60.0 * std::tan(10.0 * std::numbers::pi / 180.0)).epsilon(1e-14));
    CHECK(p[3] == doctest::Approx(-p[2]));
    const std::vector<double> bad{90.0};
    CHECK_THROWS_AS(angular_to_positional(bad, 60.0), Error);
  }

  TEST_CASE("combine and calibrate") {
    auto s = testutil::flat_session(600, {});
    for (std::size_t i = 0; i < 600; ++i) {
      s.left_x[i] = s.right_x[i] = 0.01 * static_cast<double>(i);
      s.left_y[i] = 1.0;
      s.right_y[i] = -1.0;
    }
    const auto p = combine_and_calibrate(s);
    double base = 0.0;
    for (std::size_t i = 0; i < 300; ++i) base += 60.0 * std::tan(0.01 * static_cast<double>(i) * std::numbers::pi / 180.0);
    base /= 300.0;
    for (std::size_t i = 0; i < 600; i += 37) {
      CHECK(p.x[i] == doctest::Approx(60.0 * std::tan(0.01 * static_cast<double>(i) * std::numbers::pi / 180.0) - base));
      CHECK(std::abs(p.y[i]) < 1e-12);
    }

    auto c = testutil::flat_session(400, {});
    std::fill(c.left_x.begin(), c.left_x.end(), 3.0);
    std::fill(c.right_x.begin(), c.right_x.end(), 3.0);
    for (double v : combine_and_calibrate(c).x) CHECK(std::abs(v) < 1e-12);

    auto short_session = testutil::flat_session(299, {});
    CHECK_THROWS_AS(combine_and_calibrate(short_session), Error);
  }

  TEST_CASE("outlier replacement") {
    std::vector<double> clean(50);
    for (std::size_t i = 0; i < clean.size(); ++i) clean[i] = std::sin(0.3 * static_cast<double>(i));
    CHECK(replace_outliers(clean) == clean);

    std::vector<double> spike(21, 0.0);
    spike[3] = 100.0;
    const auto fixed = replace_outliers(spike);
    CHECK(fixed[3] == 0.0);
    CHECK(fixed.size() == spike.size());

    std::vector<double> lead(21, 2.0);
    lead[0] = 100.0;
    CHECK(replace_outliers(lead)[0] == 2.0);

    std::vector<double> interp(41, 0.0);
    for (std::size_t i = 0; i < interp.size(); ++i) interp[i] = static_cast<double>(i % 2);
    interp[20] = 1000.0;
    const auto r = replace_outliers(interp);
    CHECK(r[20] == doctest::Approx((interp[19] + interp[21]) / 2.0));

    const std::vector<double> one{1.0};
    CHECK_THROWS_AS(replace_outliers(one), Error);
  }

  TEST_CASE("differentiate") {
    const std::vector<double> two{0.0, 3.0};
    CHECK(differentiate(two, 300.0) == std::vector<double>{900.0, 900.0});
    std::vector<double> ramp(20);
    for (std::size_t i = 0; i < ramp.size(); ++i) ramp[i] = static_cast<double>(i) / 300.0;
    for (double v : differentiate(ramp, 300.0)) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
    const std::vector<double> flat(10, 4.0);
    for (double v : differentiate(flat, 300.0)) CHECK(v == 0.0);
    const std::vector<double> one{1.0};
    CHECK_THROWS_AS(differentiate(one, 300.0), Error);
  }

  TEST_CASE("filter spec validation") {
    FilterSpec s;
    CHECK_NOTHROW(s.validate());
    s.cutoff_hz = 150.0;
    CHECK_THROWS_AS(s.validate(), Error);
    s.cutoff_hz = 20.0;
    s.order = 7;
    CHECK_THROWS_AS(s.validate(), Error);
    s.order = 0;
    CHECK_THROWS_AS(s.validate(), Error);
    FilterSpec nyq;
    nyq.cutoff_hz = 150.0;
    const auto x = sine(30.0, 600);
    try {
      butterworth_highpass(x, nyq);
      FAIL("expected design error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kDesign);
    }
  }

  TEST_CASE("designed magnitude matches analytic response") {
    for (int order : {2, 4, 8}) {
      for (double fc : {5.0, 20.0, 60.0}) {
        FilterSpec spec;
        spec.order = order;
        spec.cutoff_hz = fc;
        const auto sos = SosFilter::butterworth_highpass(spec);
        CHECK(sos.sections().size() == static_cast<std::size_t>(order / 2));
        for (double f : {1.0, 4.0, 7.0, 8.0, 14.0, 20.0, 25.0, 40.0, 100.0, 149.0}) {
          const double want = std::sqrt(oracle_power(f, fc, 300.0, order));
          CHECK(sos.magnitude(f, 300.0) == doctest::Approx(want).epsilon(1e-9).scale(1e-12));
        }
      }
    }
  }

  TEST_CASE("measured steady-state gains") {
    const FilterSpec spec;
    for (double f : {5.0, 8.0, 14.0, 20.0, 25.0, 40.0, 80.0}) {
      const double want = oracle_power(f, 20.0, 300.0, 8);
      CHECK(measured_gain(f, spec) == doctest::Approx(want).epsilon(1e-4).scale(1e-8));
    }
    CHECK(measured_gain(20.0, spec) == doctest::Approx(0.5).epsilon(0.04));
    CHECK(20.0 * std::log10(measured_gain(5.0, spec)) <= -80.0);
    CHECK(std::abs(20.0 * std::log10(measured_gain(40.0, spec))) < 0.2);

    FilterSpec single = spec;
    single.passes = FilterPasses::kSingle;
    CHECK(measured_gain(20.0, single) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-3));
  }

  TEST_CASE("DC is removed") {
    const std::vector<double> dc(3000, 5.0);
    const auto y = butterworth_highpass(dc, FilterSpec{});
    for (std::size_t i = 300; i < 2700; ++i) CHECK(std::abs(y[i]) < 5e-6);
  }

  TEST_CASE("filter is linear") {
    Rng rng(11);
    std::vector<double> a(1200), b(1200), mix(1200);
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] = rng.normal();
      b[i] = rng.normal();
      mix[i] = 2.5 * a[i] - 0.75 * b[i];
    }
    const FilterSpec spec;
    const auto fa = butterworth_highpass(a, spec), fb = butterworth_highpass(b, spec), fm = butterworth_highpass(mix, spec);
    double scale = 0.0;
    for (double v : fm) scale = std::max(scale, std::abs(v));
    for (std::size_t i = 0; i < fm.size(); ++i) CHECK(std::abs(fm[i] - (2.5 * fa[i] - 0.75 * fb[i])) <= 1e-9 * scale);
  }

  TEST_CASE("forward-backward is zero phase") {
    std::vector<double> x(3000, 0.0);
    for (double f : {45.0, 60.0, 85.0, 110.0}) {
      const auto s = sine(f, x.size(), 300.0, f / 30.0);
      for (std::size_t i = 0; i < x.size(); ++i) x[i] += s[i];
    }
    const auto y = butterworth_highpass(x, FilterSpec{});
    long best_lag = 99;
    double best = -1e300;
    for (long lag = -20; lag <= 20; ++lag) {
      double acc = 0.0;
      for (long i = 500; i < 2500; ++i) acc += x[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(i + lag)];
      if (acc > best) {
        best = acc;
        best_lag = lag;
      }
    }
    CHECK(best_lag == 0);
  }

  TEST_CASE("filter rejects short and non-finite input") {
    const std::vector<double> short_x(24, 1.0);
    CHECK_THROWS_AS(butterworth_highpass(short_x, FilterSpec{}), Error);
    std::vector<double> nan_x(100, 1.0);
    nan_x[10] = std::nan("");
    try {
      butterworth_highpass(nan_x, FilterSpec{});
      FAIL("expected data error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kData);
    }
  }

  TEST_CASE("sanitize median and MAD example") {
    std::vector<SessionStats> stats;
    for (double v : {1.0, 2.0, 2.0, 3.0, 100.0}) stats.push_back({v, 1.0, 1.0, 1.0});
    const auto r = sanitize_sessions(stats);
    CHECK(r.median[0] == 2.0);
    CHECK(r.mad[0] == 1.0);
    CHECK(r.threshold[0] == 5.0);
    REQUIRE(r.exclusions.size() == 1);
    CHECK(r.exclusions[0].session_index == 4);
    CHECK(r.exclusions[0].triggered == std::vector<SessionStatistic>{SessionStatistic::kMaxAbsX});
    CHECK(r.excluded(4));
    CHECK_FALSE(r.excluded(3));
  }

  TEST_CASE("identical sessions are all kept") {
    const std::vector<SessionStats> stats(6, SessionStats{1.0, 2.0, 3.0, 4.0});
    CHECK(sanitize_sessions(stats).exclusions.empty());
  }

  TEST_CASE("sanitize needs three sessions") {
    const std::vector<SessionStats> stats(2, SessionStats{1.0, 2.0, 3.0, 4.0});
    CHECK_THROWS_AS(sanitize_sessions(stats), Error);
  }

  TEST_CASE("sanitize is permutation invariant") {
    Rng rng(5);
    std::vector<SessionStats> stats(25);
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < stats.size(); ++i) {
      for (auto& v : stats[i]) v = std::exp(rng.normal());
      ids.push_back("s" + std::to_string(i));
    }
    const auto base = sanitize_sessions(stats, ids);
    std::set<std::string> excluded;
    for (const auto& e : base.exclusions) excluded.insert(e.session_id);
    CHECK(!excluded.empty());
    for (int rep = 0; rep < 10; ++rep) {
      std::vector<std::size_t> perm(stats.size());
      std::iota(perm.begin(), perm.end(), 0);
      rng.shuffle(perm);
      std::vector<SessionStats> ps;
      std::vector<std::string> pid;
      for (auto p : perm) {
        ps.push_back(stats[p]);
        pid.push_back(ids[p]);
      }
      const auto r = sanitize_sessions(ps, pid);
      std::set<std::string> ex;
      for (const auto& e : r.exclusions) {
        ex.insert(e.session_id);
        CHECK(!e.triggered.empty());
      }
      CHECK(ex == excluded);
      CHECK(r.median == base.median);
      CHECK(r.mad == base.mad);
    }
  }

  TEST_CASE("segmentation eligibility") {
    std::vector<double> x(1500);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = 0.001 * static_cast<double>(i * i % 97);
    const auto series = series_from(x);
    const auto meta = testutil::flat_session(1500, {});

    const std::vector<std::size_t> early{0, 500};
    const auto a = segment_trials(series, early, meta);
    CHECK(a.trials.empty());
    CHECK(a.skipped == 2);

    const std::vector<std::size_t> ok{100, 1000};
    const auto b = segment_trials(series, ok, meta);
    REQUIRE(b.trials.size() == 1);
    CHECK(b.skipped == 1);
    const auto& t = b.trials[0];
    CHECK(t.trial_index == 1);
    for (std::size_t c = 0; c < kTrialChannels; ++c) {
      const auto ch = t.channel(c);
      const double mean = std::accumulate(ch.begin(), ch.end(), 0.0) / 440.0;
      CHECK(std::abs(mean) < 1e-12);
      double src_mean = 0.0;
      for (std::size_t i = 560; i < 1000; ++i) src_mean += x[i];
      src_mean /= 440.0;
      CHECK(ch[0] == doctest::Approx(x[560] - src_mean));
      CHECK(ch[439] == doctest::Approx(x[999] - src_mean));
    }

    const std::vector<std::size_t> past_end{1501};
    CHECK(segment_trials(series, past_end, meta).trials.empty());
  }

  TEST_CASE("segments never overlap an onset") {
    Rng rng(9);
    const std::size_t n = 20000;
    const auto series = series_from(std::vector<double>(n, 1.0));
    const auto meta = testutil::flat_session(n, {});
    for (int rep = 0; rep < 50; ++rep) {
      std::set<std::size_t> set;
      while (set.size() < 25) set.insert(rng.below(n));
      const std::vector<std::size_t> onsets(set.begin(), set.end());
      const auto r = segment_trials(series, onsets, meta);
      CHECK(r.trials.size() + r.skipped == onsets.size());
      for (const auto& t : r.trials) {
        const std::size_t o = onsets[static_cast<std::size_t>(t.trial_index)];
        for (auto other : onsets) CHECK_FALSE((other >= o - 440 && other < o));
      }
    }
  }

  TEST_CASE("pipeline counts and amplitude exclusion") {
    Rng rng(21);
    const std::size_t n = 10000;
    std::vector<std::size_t> onsets;
    for (std::size_t k = 0; k < 12; ++k) onsets.push_back(800 + 800 * k);
    std::vector<double> lx(n), ly(n);
    for (std::size_t i = 0; i < n; ++i) {
      lx[i] = 0.2 * rng.normal();
      ly[i] = 0.2 * rng.normal();
    }
    std::vector<RawSession> sessions;
    for (int s = 0; s < 10; ++s) {
      auto r = testutil::flat_session(n, onsets, "S" + std::to_string(s));
      r.condition = s % 2 ? Condition::kPDOn : Condition::kHC;
      r.left_x = r.right_x = lx;
      r.left_y = r.right_y = ly;
      sessions.push_back(r);
    }
    const auto clean = preprocess_pipeline(sessions);
    CHECK(clean.report.sessions_excluded == 0);
    CHECK(clean.dataset.size() == 120);
    for (const auto& t : clean.dataset.trials()) CHECK(t.values.size() == 4 * 440);

    PreprocessOptions unfiltered;
    unfiltered.filter.reset();
    const auto raw = preprocess_pipeline(sessions, unfiltered);
    CHECK(raw.dataset.size() == 120);
    for (const auto& t : raw.dataset.trials()) {
      for (std::size_t c = 0; c < 4; ++c) {
        const auto ch = t.channel(c);
        CHECK(std::abs(std::accumulate(ch.begin(), ch.end(), 0.0) / 440.0) < 1e-12);
      }
    }

    for (auto& v : sessions[3].left_x) v *= 50.0;
    for (auto& v : sessions[3].right_x) v *= 50.0;
    const auto loud = preprocess_pipeline(sessions);
    CHECK(loud.report.sessions_excluded == 1);
    CHECK(loud.dataset.size() == 108);
    CHECK(loud.dataset.subject_index().count("S3") == 0);
  }
}
