#include "fixtures.hpp"
#include "tiltsmooth/bandwidth.hpp"
#include "tiltsmooth/simulate.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

using namespace tiltsmooth;

namespace {

// scripted leave-one-out oracle, see tests/oracles/derive_expected.py
constexpr double loocv_nw_n3 = 2.6505135914102005;

// first verified run of select_h_rot_io on the seeded sin fixture below
constexpr double rot_snapshot = 0.026408015064655749;

Sample sin_fixture(std::size_t n, double sigma, std::uint64_t seed) {
  Scenario sc;
  sc.fn = RegressionFn::sin;
  sc.design = Design::uniform(0.0, 1.0);
  sc.ise_interval = {0.0, 1.0};
  sc.n = n;
  sc.sigma = sigma;
  return gen_sample(sc, seed);
}

} // namespace

TEST(Bandwidth, LoocvHandFixture) {
  const Sample s({0.0, 1.0, 3.0}, {1.0, 3.0, 2.0});
  EXPECT_NEAR(loocv_score(s, SmootherKind::nw, Kernel::gaussian(), 1.0), loocv_nw_n3, 1e-13);
}

TEST(Bandwidth, LoocvConstantDataScoresZero) {
  std::mt19937_64 rng(3);
  auto s = fixtures::random_sample(rng, 40);
  s = s.with_responses(std::vector<double>(40, 2.5));
  for (auto kind : {SmootherKind::nw, SmootherKind::ll, SmootherKind::io})
    for (double h : {0.05, 0.2, 0.6})
      EXPECT_NEAR(loocv_score(s, kind, Kernel::gaussian(), h), 0.0, 1e-20);
}

TEST(Bandwidth, LoocvPermutationInvariant) {
  std::mt19937_64 rng(4);
  const auto s = fixtures::random_sample(rng, 30);
  std::vector<std::size_t> idx(30);
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  std::vector<double> x, y;
  for (auto i : idx) {
    x.push_back(s.x()[i]);
    y.push_back(s.y()[i]);
  }
  const Sample p(x, y);
  for (auto kind : {SmootherKind::nw, SmootherKind::ll})
    EXPECT_NEAR(loocv_score(s, kind, Kernel::gaussian(), 0.1),
                loocv_score(p, kind, Kernel::gaussian(), 0.1), 1e-12);
}

TEST(Bandwidth, LoocvRefitsWithoutThePoint) {
  std::mt19937_64 rng(5);
  const auto s = fixtures::random_sample(rng, 25);
  const auto terms = loocv_terms(s, SmootherKind::ll, Kernel::gaussian(), 0.2);
  ASSERT_EQ(terms.size(), 25u);
  for (const auto& t : terms) {
    EXPECT_EQ(t.refit_size, 24u);
    EXPECT_FALSE(t.failed);
  }
  // brute force for one index
  const Sample reduced = leave_one_out(s, 7);
  const FittedSmoother f(SmootherKind::ll, Kernel::gaussian(), 0.2, reduced);
  EXPECT_NEAR(terms[7].residual, s.y()[7] - f.predict(s.x()[7]), 1e-14);
}

TEST(Bandwidth, LoocvFailuresPenalized) {
  const Sample s({0.0, 0.1, 0.2, 5.0}, {1.0, 1.0, 1.0, 3.0});
  const auto terms = loocv_terms(s, SmootherKind::nw, Kernel::epanechnikov(), 0.5);
  EXPECT_TRUE(terms[3].failed);
  EXPECT_EQ(terms[3].residual, 3.0);
  EXPECT_NEAR(loocv_score(s, SmootherKind::nw, Kernel::epanechnikov(), 0.5), 9.0 / 4.0, 1e-15);
}

TEST(Bandwidth, LoocvAllFailuresInfeasible) {
  const Sample s({0.0, 2.0, 4.0}, {1.0, 2.0, 3.0});
  EXPECT_THROW(loocv_score(s, SmootherKind::nw, Kernel::epanechnikov(), 0.5),
               BandwidthInfeasible);
  EXPECT_THROW(select_h_cv(s, SmootherKind::nw, Kernel::epanechnikov(), {0.3, 0.5}),
               BandwidthInfeasible);
}

TEST(Bandwidth, LoocvNeedsThreePoints) {
  const Sample s({0.0, 1.0}, {1.0, 2.0});
  EXPECT_THROW(loocv_score(s, SmootherKind::nw, Kernel::gaussian(), 1.0), DomainError);
}

TEST(Bandwidth, LoocvNonnegative) {
  std::mt19937_64 rng(6);
  for (int rep = 0; rep < 20; ++rep) {
    const auto s = fixtures::random_sample(rng, 20);
    for (auto kind : {SmootherKind::nw, SmootherKind::ll, SmootherKind::io})
      EXPECT_GE(loocv_score(s, kind, Kernel::gaussian(), 0.15), 0.0);
  }
}

TEST(Bandwidth, SingleElementGrid) {
  std::mt19937_64 rng(8);
  const auto s = fixtures::random_sample(rng, 20);
  const auto r = select_h_cv(s, SmootherKind::nw, Kernel::gaussian(), std::vector<double>{0.3});
  EXPECT_EQ(r.h_star, 0.3);
  EXPECT_EQ(r.index, 0u);
}

TEST(Bandwidth, SupersetGridNeverWorse) {
  const auto s = sin_fixture(60, 0.3, 17);
  const auto full = default_h_grid(s);
  std::vector<double> sub;
  for (std::size_t i = 0; i < full.size(); i += 3)
    sub.push_back(full[i]);
  const auto a = select_h_cv(s, SmootherKind::ll, Kernel::gaussian(), full);
  const auto b = select_h_cv(s, SmootherKind::ll, Kernel::gaussian(), sub);
  EXPECT_LE(a.scores[a.index], b.scores[b.index]);
}

TEST(Bandwidth, CvResultConsistent) {
  const auto s = sin_fixture(80, 0.3, 21);
  const auto r = select_h_cv(s, SmootherKind::nw, Kernel::gaussian());
  ASSERT_EQ(r.h_grid.size(), r.scores.size());
  EXPECT_EQ(r.h_grid[r.index], r.h_star);
  EXPECT_EQ(r.scores[r.index], loocv_score(s, SmootherKind::nw, Kernel::gaussian(), r.h_star));
  EXPECT_EQ(*std::min_element(r.scores.begin(), r.scores.end()), r.scores[r.index]);
  EXPECT_TRUE(std::is_sorted(r.h_grid.begin(), r.h_grid.end()));
  EXPECT_NE(std::find(r.h_grid.begin(), r.h_grid.end(), r.h_star), r.h_grid.end());
}

TEST(Bandwidth, TiesGoToSmallerBandwidth) {
  const Sample s({0.0, 0.5, 1.0, 1.5}, {0.0, 0.0, 0.0, 0.0});
  const auto r = select_h_cv(s, SmootherKind::nw, Kernel::gaussian(), {0.2, 0.4, 0.8});
  EXPECT_EQ(r.h_star, 0.2);
}

TEST(Bandwidth, ThreadCountDoesNotMatter) {
  const auto s = sin_fixture(70, 0.3, 5);
  const auto a = select_h_cv(s, SmootherKind::ll, Kernel::gaussian(), 1);
  const auto b = select_h_cv(s, SmootherKind::ll, Kernel::gaussian(), 3);
  EXPECT_EQ(a.scores, b.scores);
  EXPECT_EQ(a.h_star, b.h_star);
}

TEST(Bandwidth, GridValidation) {
  std::mt19937_64 rng(9);
  const auto s = fixtures::random_sample(rng, 10);
  EXPECT_THROW(select_h_cv(s, SmootherKind::nw, Kernel::gaussian(), std::vector<double>{}),
               DomainError);
  EXPECT_THROW(select_h_cv(s, SmootherKind::nw, Kernel::gaussian(), {0.3, 0.2}), DomainError);
  EXPECT_THROW(select_h_cv(s, SmootherKind::nw, Kernel::gaussian(), {0.0, 0.2}), DomainError);
}

TEST(Bandwidth, DefaultGrid) {
  const Sample s({0.0, 1.0, 2.0, 4.0}, {0.0, 0.0, 0.0, 0.0});
  const auto g = default_h_grid(s);
  ASSERT_EQ(g.size(), 40u);
  EXPECT_NEAR(g.front(), 0.1 * 4.0 / 3.0, 1e-15);
  EXPECT_EQ(g.back(), 2.0);
  for (std::size_t i = 1; i < g.size(); ++i)
    EXPECT_NEAR(std::log(g[i] / g[i - 1]), std::log(g[1] / g[0]), 1e-12);
}

TEST(Bandwidth, SinFixtureCvBandwidthInRange) {
  const auto s = sin_fixture(100, 0.3, 20240101);
  const double range = s.x_max() - s.x_min();
  for (auto kind : {SmootherKind::nw, SmootherKind::ll}) {
    const double h = select_h_cv(s, kind, Kernel::gaussian()).h_star;
    EXPECT_GE(h, 0.01 * range) << to_string(kind);
    EXPECT_LE(h, 0.2 * range) << to_string(kind);
  }
}

TEST(Bandwidth, RuleOfThumbSnapshot) {
  const auto s = sin_fixture(200, 0.5, 42);
  EXPECT_EQ(select_h_rot_io(s), rot_snapshot);
  EXPECT_EQ(select_h_rot_io(s), select_h_rot_io(s));
}

TEST(Bandwidth, RuleOfThumbScaleEquivariant) {
  const auto s = sin_fixture(200, 0.5, 42);
  for (double c : {0.25, 3.0, 1000.0}) {
    std::vector<double> x(s.x().begin(), s.x().end());
    for (auto& v : x)
      v *= c;
    const Sample t(x, std::vector<double>(s.y().begin(), s.y().end()));
    EXPECT_NEAR(select_h_rot_io(t), c * select_h_rot_io(s), 1e-12 * c);
  }
}

TEST(Bandwidth, RuleOfThumbShiftInvariant) {
  const auto s = sin_fixture(150, 0.4, 7);
  std::vector<double> x(s.x().begin(), s.x().end());
  for (auto& v : x)
    v += 17.0;
  const Sample t(x, std::vector<double>(s.y().begin(), s.y().end()));
  EXPECT_NEAR(select_h_rot_io(t), select_h_rot_io(s), 1e-12);
}

TEST(Bandwidth, RuleOfThumbMinimalSample) {
  std::mt19937_64 rng(10);
  const auto s = fixtures::random_sample(rng, 8);
  const double h = select_h_rot_io(s);
  EXPECT_TRUE(std::isfinite(h));
  EXPECT_GT(h, 0.0);
  EXPECT_THROW(select_h_rot_io(fixtures::random_sample(rng, 7)), InsufficientDesign);
}

TEST(Bandwidth, RuleOfThumbDegenerateDesign) {
  const Sample s(std::vector<double>(10, 1.0), std::vector<double>(10, 0.5), Interval{0.0, 2.0});
  EXPECT_THROW(select_h_rot_io(s), DegenerateDesign);
}

TEST(Bandwidth, RuleOfThumbTracksSignalFrequency) {
  // sin(4πx) on [0, 1] has two cycles over the design range
  const auto s = sin_fixture(500, 0.2, 1);
  const auto rho = trig_coefficient_profile(s);
  EXPECT_EQ(std::max_element(rho.begin(), rho.end()) - rho.begin(), 1);
  const double h = select_h_rot_io(s);
  EXPECT_GT(h, 0.005);
  EXPECT_LT(h, 0.1);
}

TEST(Bandwidth, RuleOfThumbOnReplicatedLattice) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z;
  std::vector<double> x, y;
  for (int rep = 0; rep < 6; ++rep)
    for (int i = 0; i < 8; ++i) {
      x.push_back(0.5 * i);
      y.push_back(std::tanh(0.8 * (0.5 * i - 1.7)) + 0.2 * z(rng));
    }
  const Sample s(x, y);
  EXPECT_EQ(trig_coefficient_profile(s).size(), 4u);
  const double h = select_h_rot_io(s);
  EXPECT_GE(h, 3.5 / (4.0 * std::numbers::pi * 4.0) - 1e-12);
  const FittedSmoother io(SmootherKind::io, Kernel::trapezoidal(), h, s);
  for (double q : fixtures::linspace(0.0, 3.5, 201))
    EXPECT_LT(std::abs(io.predict(q)), 5.0) << q;
}
