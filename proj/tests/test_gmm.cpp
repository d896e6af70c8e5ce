#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace mcmarg;
using mcmarg::testing::direct_density;
using mcmarg::testing::ks_distance;
using mcmarg::testing::random_params;
using mcmarg::testing::random_unit;
using mcmarg::testing::TempDir;

namespace {

GmmParams one_d(std::initializer_list<double> means, double log_std = 0.0)
{
  GmmParams p = GmmParams::zeros(means.size(), 1);
  Eigen::Index c = 0;
  for (double m : means) {
    p.means(c++, 0) = m;
  }
  p.log_stds.setConstant(log_std);
  return p;
}

Vector vec(std::initializer_list<double> v)
{
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) {
    out(i++) = x;
  }
  return out;
}

} // namespace

TEST(Weights, Examples)
{
  GmmParams p = GmmParams::zeros(3, 1);
  const Vector w = weights(p);
  for (Eigen::Index k = 0; k < 3; ++k) {
    EXPECT_NEAR(w(k), 1.0 / 3.0, 1e-15);
  }
  for (double c : { -700.0, 0.0, 3.5, 800.0 }) {
    EXPECT_NEAR(softmax(vec({ c, c }))(0), 0.5, 1e-15);
  }
  const Vector w2 = softmax(vec({ std::log(2.0), 0.0 }));
  EXPECT_NEAR(w2(0), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(w2(1), 1.0 / 3.0, 1e-15);
}

TEST(Weights, SumToOneForExtremeLogits)
{
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> wide(-500.0, 500.0);
  for (int trial = 0; trial < 500; ++trial) {
    Vector l(7);
    for (Eigen::Index k = 0; k < l.size(); ++k) {
      l(k) = wide(rng);
    }
    const Vector w = softmax(l);
    EXPECT_NEAR(w.sum(), 1.0, 1e-12);
    EXPECT_TRUE((w.array() >= 0.0).all());
  }
}

TEST(LogDensity, StandardNormalMode)
{
  EXPECT_NEAR(log_density(one_d({ 0.0 }), vec({ 0.0 })), -0.918938533204673, 1e-12);
}

TEST(LogDensity, SymmetricPair)
{
  EXPECT_NEAR(log_density(one_d({ -1.0, 1.0 }), vec({ 0.0 })), -1.418938533204673, 1e-12);
}

TEST(LogDensity, HighDimensionStaysFinite)
{
  const GmmParams p = GmmParams::zeros(1, 512);
  const double v = log_density(p, Vector::Zero(512));
  EXPECT_NEAR(v, -256.0 * std::log(2.0 * std::numbers::pi), 1e-9);
  EXPECT_NEAR(v, -470.4, 0.1);
  // The linear-space constant (2*pi)^(-256) is about 4.6e-205: representable
  // in double precision, zero in single precision.
  const double linear = std::exp(v);
  EXPECT_NEAR(linear / 4.6e-205, 1.0, 0.01);
  float single = 1.0f;
  for (int j = 0; j < 512; ++j) {
    single *= 1.0f / std::sqrt(2.0f * std::numbers::pi_v<float>);
  }
  EXPECT_EQ(single, 0.0f);
  // A query a few standard deviations out in every coordinate has a linear
  // density that is exactly zero, while the log density is finite.
  const Vector far = Vector::Constant(512, 2.0);
  EXPECT_EQ(direct_density(p, far), 0.0);
  EXPECT_TRUE(std::isfinite(log_density(p, far)));
  EXPECT_NEAR(log_density(p, far), -256.0 * std::log(2.0 * std::numbers::pi) - 1024.0, 1e-9);
}

TEST(LogDensity, MatchesDirectEvaluation)
{
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<std::size_t> kk(1, 5);
  std::uniform_int_distribution<std::size_t> dd(1, 8);
  std::normal_distribution<double> normal(0.0, 2.0);
  for (int trial = 0; trial < 300; ++trial) {
    const GmmParams p = random_params(kk(rng), dd(rng), rng, 1.5);
    Vector x(static_cast<Eigen::Index>(p.dim()));
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      x(j) = normal(rng);
    }
    const double direct = direct_density(p, x);
    ASSERT_GT(direct, 0.0);
    EXPECT_NEAR(std::exp(log_density(p, x)) / direct, 1.0, 1e-10) << "trial " << trial;
  }
}

TEST(LogDensity, InvariantUnderLogitShift)
{
  std::mt19937_64 rng(18);
  for (int trial = 0; trial < 50; ++trial) {
    GmmParams p = random_params(4, 6, rng);
    const Vector x = Vector::Random(6);
    const double a = log_density(p, x);
    p.logits.array() += 123.25;
    EXPECT_NEAR(log_density(p, x), a, 1e-12 * std::max(1.0, std::abs(a)));
  }
}

TEST(LogDensity, DimensionMismatch)
{
  EXPECT_THROW(log_density(GmmParams::zeros(2, 3), Vector::Zero(4)), std::invalid_argument);
}

TEST(Sample, SingleComponentLabels)
{
  GmmParams p = GmmParams::zeros(1, 3);
  const auto [x, labels] = sample(p, 50, 1);
  EXPECT_EQ(x.size(), 50u);
  EXPECT_TRUE(std::all_of(labels.begin(), labels.end(), [](Label l) { return l == 0; }));
}

TEST(Sample, MeanMatches)
{
  const auto [x, labels] = sample(one_d({ 3.0 }), 100000, 5);
  EXPECT_NEAR(x.values().col(0).mean(), 3.0, 0.02);
}

TEST(Sample, Deterministic)
{
  std::mt19937_64 rng(2);
  const GmmParams p = random_params(3, 4, rng);
  const auto a = sample(p, 200, 9);
  const auto b = sample(p, 200, 9);
  EXPECT_EQ(a.first, b.first);
  EXPECT_EQ(a.second, b.second);
  EXPECT_FALSE(sample(p, 200, 10).first == a.first);
}

TEST(Sample, ComponentFrequenciesFollowWeights)
{
  GmmParams p = GmmParams::zeros(3, 1);
  p.logits = vec({ std::log(0.5), std::log(0.3), std::log(0.2) });
  const auto [x, labels] = sample(p, 100000, 4);
  std::array<double, 3> freq{};
  for (Label l : labels) {
    freq[static_cast<std::size_t>(l)] += 1.0 / 100000.0;
  }
  EXPECT_NEAR(freq[0], 0.5, 0.01);
  EXPECT_NEAR(freq[1], 0.3, 0.01);
  EXPECT_NEAR(freq[2], 0.2, 0.01);
}

TEST(Marginalize, AxisProjection)
{
  std::mt19937_64 rng(3);
  const GmmParams p = random_params(3, 5, rng);
  Vector e = Vector::Zero(5);
  e(0) = 1.0;
  const Marginal1D m = marginalize(p, e);
  for (Eigen::Index k = 0; k < 3; ++k) {
    EXPECT_DOUBLE_EQ(m.means(k), p.means(k, 0));
    EXPECT_NEAR(m.stds(k), std::exp(p.log_stds(k, 0)), 1e-15);
  }
  EXPECT_NEAR(m.weights.sum(), 1.0, 1e-12);
}

TEST(Marginalize, Diagonal)
{
  GmmParams p = GmmParams::zeros(1, 2);
  p.means(0, 0) = 2.0;
  const Marginal1D m = marginalize(p, vec({ 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0) }));
  EXPECT_NEAR(m.means(0), std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(m.stds(0), 1.0, 1e-12);
}

TEST(Marginalize, RejectsNonUnitAndWrongLength)
{
  const GmmParams p = GmmParams::zeros(1, 2);
  EXPECT_THROW(marginalize(p, vec({ 1.0, 1.0 })), std::invalid_argument);
  EXPECT_THROW(marginalize(p, vec({ 1.0 })), std::invalid_argument);
}

TEST(Marginalize, ProjectedSamplesMatchClosedForm)
{
  std::mt19937_64 rng(21);
  for (std::size_t d : { 2u, 8u, 64u }) {
    const GmmParams p = random_params(3, d, rng);
    const Vector u = random_unit(d, rng);
    const Marginal1D m = marginalize(p, u);
    const auto [x, labels] = sample(p, 100000, d);
    const Vector proj = x.values() * u;
    const std::vector<double> t(proj.data(), proj.data() + proj.size());
    EXPECT_LT(ks_distance(t, [&](double v) { return m.cdf(v); }), 0.02) << "d=" << d;

    double mix_mean = m.weights.dot(m.means);
    double mix_var = 0.0;
    for (Eigen::Index k = 0; k < 3; ++k) {
      mix_var += m.weights(k) * (m.stds(k) * m.stds(k) + m.means(k) * m.means(k));
    }
    mix_var -= mix_mean * mix_mean;
    const double emp_mean = proj.mean();
    const double emp_std = std::sqrt((proj.array() - emp_mean).square().mean());
    const double scale = std::sqrt(mix_var);
    EXPECT_LT(std::abs(emp_mean - mix_mean) / scale, 0.02);
    EXPECT_LT(std::abs(emp_std - scale) / scale, 0.02);
  }
}

TEST(Marginalize, CdfAndPdfAgree)
{
  std::mt19937_64 rng(22);
  const GmmParams p = random_params(4, 3, rng);
  const Marginal1D m = marginalize(p, random_unit(3, rng));
  const double h = 1e-5;
  for (double t = -10.0; t <= 10.0; t += 0.7) {
    EXPECT_NEAR((m.cdf(t + h) - m.cdf(t - h)) / (2 * h), m.pdf(t), 1e-6);
  }
}

TEST(InitParams, SingleComponent)
{
  std::mt19937_64 rng(4);
  const auto [x, labels] = sample(random_params(2, 3, rng), 40, 4);
  for (auto strategy : { InitStrategy::random_points, InitStrategy::kmeanspp }) {
    const GmmParams p = init_params(x, 1, 8, strategy);
    EXPECT_NEAR(weights(p)(0), 1.0, 1e-15);
    bool found = false;
    for (std::size_t i = 0; i < x.size(); ++i) {
      found = found || x.row(i) == p.means.row(0);
    }
    EXPECT_TRUE(found);
  }
}

TEST(InitParams, RandomPointsUsesEveryPointWhenKEqualsN)
{
  std::mt19937_64 rng(5);
  const auto [x, labels] = sample(random_params(2, 2, rng), 25, 1);
  const GmmParams p = init_params(x, 25, 3, InitStrategy::random_points);
  std::vector<char> used(25, 0);
  for (Eigen::Index c = 0; c < 25; ++c) {
    for (std::size_t i = 0; i < 25; ++i) {
      if (!used[i] && x.row(i) == p.means.row(c)) {
        used[i] = 1;
        break;
      }
    }
  }
  EXPECT_EQ(std::count(used.begin(), used.end(), 1), 25);
  EXPECT_TRUE((p.logits.array() == 0.0).all());
}

TEST(InitParams, LogStdsFromPopulationStd)
{
  // Every column is {-2, +2}: population std 2.
  Matrix m(4, 3);
  m << -2, 2, -2, 2, -2, 2, -2, 2, -2, 2, -2, 2;
  const GmmParams p = init_params(Dataset(m), 2, 1);
  EXPECT_TRUE(((p.log_stds.array() - std::log(2.0)).abs() < 1e-15).all());
}

TEST(InitParams, ConstantDataIsClampedAndDistinctSeedsStillPicked)
{
  const Dataset x(Matrix::Constant(6, 2, 3.0));
  const GmmParams p = init_params(x, 4, 1, InitStrategy::kmeanspp);
  EXPECT_TRUE(((p.log_stds.array() - std::log(sigma_floor)).abs() < 1e-12).all());
  EXPECT_THROW(init_params(x, 7, 1), std::invalid_argument);
}

TEST(InitParams, KmeansppPicksDistinctIndices)
{
  std::mt19937_64 rng(6);
  const auto [x, labels] = sample(random_params(5, 4, rng, 10.0), 300, 2);
  Engine e = make_engine(3, "t");
  auto idx = kmeanspp_indices(x, 20, e);
  std::sort(idx.begin(), idx.end());
  EXPECT_EQ(std::unique(idx.begin(), idx.end()), idx.end());
}

TEST(InitStrategyNames, Parse)
{
  EXPECT_EQ(parse_init_strategy("random-points"), InitStrategy::random_points);
  EXPECT_EQ(parse_init_strategy("kmeans++-means"), InitStrategy::kmeanspp);
  EXPECT_THROW(parse_init_strategy("zeros"), std::invalid_argument);
}

TEST(ModelIo, RoundTripIsBitExact)
{
  TempDir dir("model");
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const GmmParams p = random_params(5, 9, rng);
    save_model(p, dir / "m.json");
    const GmmParams q = load_model(dir / "m.json");
    EXPECT_EQ(p, q);
    const Vector x = Vector::Random(9);
    EXPECT_EQ(log_density(p, x), log_density(q, x));
  }
}

TEST(ModelIo, RejectsMalformed)
{
  EXPECT_THROW(model_from_json("{"), IoError);
  EXPECT_THROW(model_from_json(R"({"format":"mcmarg-gmm","version":2})"), IoError);
  EXPECT_THROW(model_from_json(
                 R"({"format":"mcmarg-gmm","version":1,"K":2,"d":1,"logits":[0],"means":[[0]],"log_stds":[[0]]})"),
               IoError);
  EXPECT_NO_THROW(model_from_json(
    R"({"format":"mcmarg-gmm","version":1,"K":1,"d":1,"logits":[0],"means":[[0]],"log_stds":[[0]]})"));
}
