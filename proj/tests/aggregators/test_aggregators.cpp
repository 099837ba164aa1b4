#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "byzlab/aggregators/config.hpp"
#include "byzlab/core/stats.hpp"

using namespace byzlab;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

SamplesXd row(std::initializer_list<double> v) {
  SamplesXd s(1, static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) s(0, i++) = x;
  return s;
}

SamplesXd random_samples(RngStream& rng, Eigen::Index r, Eigen::Index n) {
  SamplesXd s(r, n);
  for (Eigen::Index j = 0; j < n; ++j) s.col(j) = rng.normal_vector(r);
  return s;
}

VectorXd run(const std::string& spec, const SamplesXd& s, int byz = 0, Eigen::Index self = 0) {
  RngStream rng(11, 0);
  return aggregate(parse_aggregator_spec(spec), s, AggregationContext{self, VectorXd(), byz, &rng});
}

const std::vector<std::string> kSpecs = {"mean",         "trimmed_mean:alpha=0.2", "median",  "m_huber",
                                         "m_huber:coord=0", "m_tukey",             "m_tukey:coord=0", "m_talwar",
                                         "m_t",          "geomedian",              "scc:tau=1.5", "scc",
                                         "multikrum",    "ios",                    "faba",    "mixtailor"};

}  // namespace

TEST_CASE("mean and trimmed mean examples", "[aggregators]") {
  CHECK(agg_mean(row({1, 2, 3, 10}))(0) == 4.0);
  CHECK(agg_trimmed_mean(row({1, 2, 3, 100}), 0.25)(0) == 2.5);
  SamplesXd s(2, 4);
  s << 1, 2, 3, 4, 100, 2, -50, 3;
  const VectorXd t = agg_trimmed_mean(s, 0.25);
  CHECK(t(0) == 2.5);
  CHECK(t(1) == 2.5);
  CHECK_THAT(agg_trimmed_mean(row({5, -3, 1, 2, 100, 0, -50, 4, 3, 2.5}), 0.2)(0), WithinAbs(2.0833333333333335, 1e-14));
  const SamplesXd r = row({0.3, -1, 7});
  CHECK(agg_trimmed_mean(r, 0.0) == agg_mean(r));
  CHECK_THROWS_AS(agg_trimmed_mean(row({1, 2}), 0.5), InvalidConfig);
}

TEST_CASE("median examples", "[aggregators]") {
  CHECK(agg_median(row({1, 2, 3}))(0) == 2.0);
  CHECK(agg_median(row({1, 2, 3, 4}))(0) == 2.5);
  SamplesXd s(2, 3);
  s << 1, 3, 2, 9, 1, 5;
  CHECK(agg_median(s) == (VectorXd(2) << 2, 5).finished());
  CHECK_THROWS_AS(agg_median(SamplesXd(1, 0)), InvalidInput);
}

TEST_CASE("psi values", "[aggregators][psi]") {
  const Tukey tk{4.685};
  CHECK_THAT(psi<double>(tk, 4.685 * 4.685), WithinAbs(0.0, 1e-15));
  CHECK(psi<double>(tk, 0.0) == 0.5);
  CHECK_THAT(psi<double>(StudentT{3.0, 1}, 0.0), WithinAbs(2.0 / 3.0, 1e-15));
  const Huber h = make_huber(0.8, 1);
  CHECK_THAT(h.c2 / (2 * h.b * h.c2), WithinAbs(psi<double>(h, h.c2), 1e-15));
  CHECK(psi<double>(Talwar{2.0}, 4.0) == 0.5);
  CHECK(psi<double>(Talwar{2.0}, 4.0001) == 0.0);
  CHECK_THROWS_AS(psi<double>(tk, -1.0), InvalidInput);
}

TEST_CASE("Huber tuning constants", "[aggregators][psi]") {
  const Huber h1 = make_huber(0.8, 1);
  CHECK_THAT(std::sqrt(h1.c2), WithinRel(1.281551565544601, 1e-9));
  CHECK_THAT(h1.b, WithinRel(0.6786545589528749, 1e-9));
  CHECK_THAT(make_huber(0.8, 10).b, WithinRel(0.931087321502944, 1e-9));
  CHECK_THAT(make_huber(0.8, 2).b, WithinRel(0.8, 1e-9));
}

TEST_CASE("M-estimators against an independent fixed-point oracle", "[aggregators][m]") {
  const SamplesXd y = row({0.1, -0.4, 1.3, 2.2, -0.7, 0.5, 9.0});
  CHECK_THAT(run("m_huber", y)(0), WithinAbs(0.5577290812986234, 1e-7));
  CHECK_THAT(run("m_tukey", y)(0), WithinAbs(0.4724680214750147, 1e-7));
  CHECK_THAT(run("m_talwar", y)(0), WithinAbs(0.5, 1e-9));
  CHECK_THAT(run("m_t:nu=3", y)(0), WithinAbs(0.5753216131409985, 1e-7));
}

TEST_CASE("M-estimator examples", "[aggregators][m]") {
  CHECK_THAT(run("m_huber", row({2.0, 3.0, 4.0}))(0), WithinAbs(3.0, 1e-12));
  const SamplesXd y = row({0.2, -1.1, 0.7, 1.9, -0.3});
  CHECK_THAT(run("m_talwar:c=1000", y)(0), WithinAbs(agg_mean(y)(0), 1e-12));
  CHECK_THAT(run("m_tukey:c=4.685", row({0.0, 0.1, -0.1, 50.0}))(0), WithinAbs(0.0, 0.05));
}

TEST_CASE("M-estimator total rejection falls back to the median", "[aggregators][m]") {
  FlagSet flags;
  // Talwar with a vanishing cutoff rejects every sample except exact hits
  const VectorXd out = agg_m_estimator(row({-1.0, 0.5, 2.0, 3.5}), Talwar{1e-9}, true, {}, &flags);
  CHECK(flags.has(Flag::DegenerateAggregation));
  CHECK(out(0) == 1.25);
}

TEST_CASE("M-estimator fixed-point residual", "[aggregators][m][property]") {
  RngStream rng(5, 1);
  const FixedPointOptions fp;
  for (int trial = 0; trial < 30; ++trial) {
    const SamplesXd s = random_samples(rng, 3, 12);
    for (const PsiKind& kind : {PsiKind{make_huber(0.8, 3)}, PsiKind{Tukey{4.685}}, PsiKind{StudentT{3.0, 3}}}) {
      FlagSet flags;
      const VectorXd w = agg_m_estimator(s, kind, false, fp, &flags);
      const VectorXd inv = robust_scales(s, nullptr).cwiseInverse();
      VectorXd resid = VectorXd::Zero(3);
      double total = 0.0;
      for (Eigen::Index l = 0; l < s.cols(); ++l) {
        const double p = psi(kind, (s.col(l) - w).cwiseProduct(inv).squaredNorm());
        resid += 2.0 * p * (s.col(l) - w);
        total += 2.0 * p;
      }
      CHECK(resid.norm() <= 10.0 * fp.tol * total * (1.0 + w.norm()));
    }
  }
}

TEST_CASE("geometric median examples", "[aggregators][geomedian]") {
  SamplesXd s(2, 4);
  s << 0, 2, 1, 1, 0, 0, 1, -1;
  const VectorXd g = agg_geometric_median(s);
  CHECK_THAT(g(0), WithinAbs(1.0, 1e-7));
  CHECK_THAT(g(1), WithinAbs(0.0, 1e-7));
  CHECK(agg_geometric_median(SamplesXd::Constant(3, 1, 2.5)) == VectorXd::Constant(3, 2.5));
  CHECK_THAT(agg_geometric_median(row({0, 0, 10}))(0), WithinAbs(0.0, 1e-9));

  SamplesXd p(2, 5);
  p << 0, 1, 0, 3, -1, 0, 0, 1, 4, 2.5;
  const VectorXd m = agg_geometric_median(p);
  CHECK_THAT(m(0), WithinAbs(0.0, 1e-9));
  CHECK_THAT(m(1), WithinAbs(1.0, 1e-9));
}

TEST_CASE("geometric median first-order condition", "[aggregators][geomedian][property]") {
  RngStream rng(9, 2);
  for (int trial = 0; trial < 30; ++trial) {
    const SamplesXd s = random_samples(rng, 4, 9);
    const VectorXd w = agg_geometric_median(s, FixedPointOptions{1e-12, 5000});
    VectorXd grad = VectorXd::Zero(4);
    double at_sample = 0.0;
    for (Eigen::Index l = 0; l < s.cols(); ++l) {
      const double d = (s.col(l) - w).norm();
      if (d == 0.0)
        at_sample += 1.0;
      else
        grad += (s.col(l) - w) / d;
    }
    CHECK(grad.norm() <= at_sample + 1e-6 * static_cast<double>(s.cols()));
  }
}

TEST_CASE("self-centered clipping examples", "[aggregators][scc]") {
  const VectorXd c = clip((VectorXd(2) << 3, 4).finished(), 1.0);
  CHECK_THAT(c(0), WithinAbs(0.6, 1e-15));
  CHECK_THAT(c(1), WithinAbs(0.8, 1e-15));
  const SamplesXd s = row({0, 1, 5});
  const VectorXd u = VectorXd::Constant(3, 1.0 / 3.0);
  CHECK_THAT(agg_scc(s, u, 0, 2.0)(0), WithinAbs(1.0, 1e-15));
  CHECK_THAT(agg_scc(s, u, 0, std::numeric_limits<double>::infinity())(0), WithinAbs(2.0, 1e-15));
  CHECK_THROWS_AS(agg_scc(s, u, 3, 1.0), InvalidInput);
}

TEST_CASE("adaptive clipping radius", "[aggregators][scc]") {
  const SamplesXd s = row({0, 1, 2, 3, 40});
  CHECK(scc_adaptive_tau(s, 0, 0.25) == 3.0);
  CHECK(scc_adaptive_tau(s, 0, 0.0) == 40.0);
}

TEST_CASE("multi-Krum examples", "[aggregators][krum]") {
  const SamplesXd s = row({0, 0.1, 0.25, 0.4, 10});
  const std::vector<double> scores = krum_scores(s, 1);
  CHECK_THAT(scores[0], WithinAbs(0.0725, 1e-12));
  CHECK_THAT(scores[1], WithinAbs(0.0325, 1e-12));
  CHECK_THAT(scores[2], WithinAbs(0.045, 1e-12));
  CHECK_THAT(scores[3], WithinAbs(0.1125, 1e-12));
  CHECK_THAT(agg_multi_krum(s, 1, 1)(0), WithinAbs(0.1, 1e-15));
  CHECK_THAT(agg_multi_krum(s, 1, 2)(0), WithinAbs(0.175, 1e-15));
  CHECK_THAT(agg_multi_krum(s, 0, 5)(0), WithinAbs(agg_mean(s)(0), 1e-15));
  CHECK_THROWS_AS(agg_multi_krum(s, 3, 1), InvalidConfig);
}

TEST_CASE("multi-Krum ties go to the lowest index", "[aggregators][krum]") {
  const SamplesXd s = row({-1, 1, -1, 1});
  CHECK(agg_multi_krum(s, 0, 1)(0) == -1.0);
}

TEST_CASE("IOS examples", "[aggregators][ios]") {
  const SamplesXd a = row({0, 1, 2, 10});
  const VectorXd u4 = VectorXd::Constant(4, 0.25);
  CHECK_THAT(agg_ios(a, u4, 0, 1)(0), WithinAbs(1.0, 1e-15));
  CHECK_THAT(agg_ios(a, u4, 0, 0)(0), WithinAbs(3.25, 1e-15));
  const SamplesXd b = row({0, 1, 2, 10, 11});
  const IosTrace<double> t = ios_trace(b, VectorXd::Constant(5, 0.2), 0, 2);
  CHECK_THAT(t.result(0), WithinAbs(1.0, 1e-15));
  CHECK_THAT(t.averages[0](0), WithinAbs(4.8, 1e-15));
  CHECK_THAT(t.averages[1](0), WithinAbs(3.25, 1e-15));
  CHECK(t.discarded == std::vector<Eigen::Index>{4, 3});
  CHECK_THROWS_AS(agg_ios(a, u4, 0, 3), InvalidConfig);
}

TEST_CASE("IOS never discards the self vector", "[aggregators][ios]") {
  const SamplesXd s = row({100, 1, 2, 3});
  const IosTrace<double> t = ios_trace(s, VectorXd::Constant(4, 0.25), 0, 2);
  for (Eigen::Index d : t.discarded) CHECK(d != 0);
  CHECK_THAT(agg_faba(s, 0, 2)(0), WithinAbs(t.result(0), 1e-15));
}

TEST_CASE("MixTailor menus", "[aggregators][mixtailor]") {
  RngStream rng(3, 0);
  AggregationContext ctx{0, VectorXd(), 0, &rng};
  const SamplesXd s = row({1, 2, 3, 10});
  CHECK(aggregate(parse_aggregator_spec("mixtailor:median"), s, ctx) == agg_median(s));
  CHECK(aggregate(parse_aggregator_spec("mixtailor:mean|mean"), s, ctx) == agg_mean(s));

  const AggregatorConfig mix = parse_aggregator_spec("mixtailor:median|mean");
  RngStream a(8, 1), b(8, 1);
  for (int i = 0; i < 20; ++i) {
    const VectorXd x = aggregate(mix, s, AggregationContext{0, VectorXd(), 0, &a});
    const VectorXd y = aggregate(mix, s, AggregationContext{0, VectorXd(), 0, &b});
    CHECK(x == y);
  }
  CHECK_THROWS_AS(aggregate(mix, s, AggregationContext{}), InvalidConfig);
}

TEST_CASE("translation equivariance of every aggregator", "[aggregators][property]") {
  RngStream rng(21, 0);
  for (const auto& spec : kSpecs) {
    for (int trial = 0; trial < 10; ++trial) {
      const SamplesXd s = random_samples(rng, 3, 11);
      const VectorXd c = 5.0 * rng.normal_vector(3);
      const SamplesXd shifted = s.colwise() + c;
      const VectorXd a = run(spec, s, 2) + c;
      const VectorXd b = run(spec, shifted, 2);
      INFO(spec);
      CHECK((a - b).norm() <= 1e-7 * (1.0 + c.norm()));
    }
  }
}

TEST_CASE("permutation invariance", "[aggregators][property]") {
  RngStream rng(22, 0);
  for (const auto& spec : {"mean", "trimmed_mean:alpha=0.2", "median", "m_huber", "m_tukey:coord=0", "geomedian",
                           "multikrum"}) {
    for (int trial = 0; trial < 10; ++trial) {
      const SamplesXd s = random_samples(rng, 2, 9);
      Eigen::PermutationMatrix<Eigen::Dynamic> perm(9);
      perm.setIdentity();
      std::shuffle(perm.indices().data(), perm.indices().data() + 9, rng.engine());
      const SamplesXd p = s * perm;
      INFO(spec);
      CHECK((run(spec, s, 2) - run(spec, p, 2)).norm() <= 1e-7);
    }
  }
}

TEST_CASE("breakdown behavior with growing outliers", "[aggregators][property]") {
  RngStream rng(23, 0);
  SamplesXd honest(1, 11);
  for (Eigen::Index j = 0; j < 11; ++j) honest(0, j) = rng.uniform();
  auto with = [&](int copies, double z) {
    SamplesXd s(1, 11 + copies);
    s.leftCols(11) = honest;
    s.rightCols(copies).setConstant(z);
    return s;
  };
  for (double z : {1e3, 1e6}) {
    CHECK(std::abs(run("mean", with(1, z))(0)) > z / 20.0);
    for (int p = 1; p <= 5; ++p)
      for (const auto& spec : {"median", "m_tukey", "m_talwar", "geomedian"}) {
        INFO(spec << " P=" << p);
        CHECK(std::abs(run(spec, with(p, z))(0)) <= 1.0);
      }
    for (int p = 1; p <= 2; ++p) CHECK(std::abs(run("trimmed_mean:alpha=0.2", with(p, z))(0)) <= 1.0);
    CHECK(std::abs(run("trimmed_mean:alpha=0.2", with(3, z))(0)) > z / 20.0);
  }
}

TEST_CASE("canonical spellings round-trip", "[aggregators][config]") {
  for (const auto& spec : kSpecs) {
    const AggregatorConfig cfg = parse_aggregator_spec(spec);
    const std::string canonical = to_spec_string(cfg);
    CHECK(to_spec_string(parse_aggregator_spec(canonical)) == canonical);
  }
  CHECK(to_spec_string(parse_aggregator_spec("m_tukey")) == "m_tukey:c=4.685,coord=1,max_iter=200,tol=1e-08");
  CHECK_THROWS_AS(parse_aggregator_spec("m_tukey:bogus=1"), InvalidConfig);
  CHECK_THROWS_AS(parse_aggregator_spec("trimmed_mean:alpha=0.7"), InvalidConfig);
  CHECK_THROWS_WITH(parse_aggregator_spec("nope"), Catch::Matchers::ContainsSubstring("geomedian"));
}
