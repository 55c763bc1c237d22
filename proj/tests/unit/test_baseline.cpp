#include <cmath>
#include <random>

#include "cregmm/baseline.hpp"
#include "helpers.hpp"

using namespace cregmm;
using th::error_kind;

namespace {

// Dynamic panel y = a_i + rho y_{t-1} + b x + sd_e e with a random start; periods 1..T.
struct Sim {
  int N, T;
  std::vector<double> y, x, w, a;  // [i*T + t-1]
  PanelDataset panel;
};

Sim simulate(int N, int T, double rho, double b, double sd_a, double sd_e, unsigned seed, bool corr_x = true) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  Sim s{N, T, {}, {}, {}, {}, {}};
  s.y.resize(static_cast<std::size_t>(N * T));
  s.x = s.y;
  s.w = s.y;
  for (int i = 0; i < N; ++i) {
    const double a = sd_a * n01(rng);
    const double wi = n01(rng);
    s.a.push_back(a);
    double prev = a + n01(rng);
    for (int t = 0; t < T; ++t) {
      const std::size_t k = static_cast<std::size_t>(i * T + t);
      s.x[k] = (corr_x ? 0.5 * a : 0.0) + n01(rng);
      s.w[k] = wi;
      s.y[k] = a + rho * prev + b * s.x[k] + 0.3 * wi + sd_e * n01(rng);
      prev = s.y[k];
    }
  }
  s.panel = th::balanced(N, T, {"y", "x", "w"}, [&](int i, std::int64_t t, std::size_t c) {
    const std::size_t k = static_cast<std::size_t>(i * T + t - 1);
    return c == 0 ? s.y[k] : c == 1 ? s.x[k] : s.w[k];
  });
  return s;
}

ModelSpec dyn_spec() {
  ModelSpec m;
  m.x_terms = {{"x", 0, {}}};
  return m;
}

struct Rows {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  std::vector<int> unit;
};

// Rows t >= 2 with columns [1, L.y, x] (plus w when asked).
Rows brute_rows(const Sim& s, bool with_w, bool constant = true) {
  const int n = s.N * (s.T - 1);
  const int K = (constant ? 1 : 0) + 2 + (with_w ? 1 : 0);
  Rows r{Eigen::MatrixXd(n, K), Eigen::VectorXd(n), {}};
  int row = 0;
  for (int i = 0; i < s.N; ++i)
    for (int t = 1; t < s.T; ++t, ++row) {
      const std::size_t k = static_cast<std::size_t>(i * s.T + t);
      int c = 0;
      if (constant) r.X(row, c++) = 1;
      r.X(row, c++) = s.y[k - 1];
      r.X(row, c++) = s.x[k];
      if (with_w) r.X(row, c++) = s.w[k];
      r.y(row) = s.y[k];
      r.unit.push_back(i);
    }
  return r;
}

Eigen::VectorXd normal_equations(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  return (X.transpose() * X).ldlt().solve(X.transpose() * y);
}

}  // namespace

TEST_CASE("POLS recovers a noiseless dynamic model") {
  const Sim s = simulate(20, 6, 0.5, 2.0, 0.0, 0.0, 1);
  ModelSpec m = dyn_spec();
  m.w_terms = {"w"};
  const auto r = pols(s.panel, m);
  CHECK(r.coefficient("L.y") == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(r.coefficient("x") == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(r.coefficient("w") == doctest::Approx(0.3).epsilon(1e-10));
  CHECK(std::abs(r.coefficient("_cons")) < 1e-10);
  CHECK(r.n_obs == 100);
  CHECK(r.n_units == 20);
}

TEST_CASE("POLS equals the normal equations and the cluster sandwich") {
  const Sim s = simulate(40, 5, 0.5, 1.0, 1.0, 1.0, 2);
  const auto r = pols(s.panel, dyn_spec());
  const Rows b = brute_rows(s, false);
  const Eigen::VectorXd beta = normal_equations(b.X, b.y);
  for (int k = 0; k < 3; ++k) CHECK(r.coef(k) == doctest::Approx(beta(k)).epsilon(1e-10));

  const Eigen::VectorXd u = b.y - b.X * beta;
  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(3, 3);
  for (int i = 0; i < s.N; ++i) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(3);
    for (int row = 0; row < b.X.rows(); ++row)
      if (b.unit[static_cast<std::size_t>(row)] == i) g += b.X.row(row).transpose() * u(row);
    meat += g * g.transpose();
  }
  const Eigen::MatrixXd bread = (b.X.transpose() * b.X).inverse();
  const Eigen::MatrixXd V = bread * meat * bread;
  CHECK((r.vcov - V).cwiseAbs().maxCoeff() < 1e-10 * V.cwiseAbs().maxCoeff());
  CHECK(r.se("x") == doctest::Approx(std::sqrt(V(2, 2))).epsilon(1e-10));
  CHECK(r.resid.size() == 160);
}

TEST_CASE("singleton clusters give the heteroskedasticity-robust sandwich") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n01;
  std::vector<PanelRow> rows;
  Eigen::MatrixXd X(60, 2);
  Eigen::VectorXd y(60);
  for (int i = 0; i < 60; ++i) {
    const double x = n01(rng);
    const double v = 1 + 2 * x + (1 + std::abs(x)) * n01(rng);
    X(i, 0) = 1;
    X(i, 1) = x;
    y(i) = v;
    rows.push_back({i + 1, 1, {{"y", v}, {"x", x}}});
  }
  ModelSpec m;
  m.ar_order = 0;
  m.x_terms = {{"x", 0, {}}};
  const auto r = pols(PanelDataset::build(rows), m);
  const Eigen::VectorXd beta = normal_equations(X, y);
  const Eigen::VectorXd u = y - X * beta;
  const Eigen::MatrixXd bread = (X.transpose() * X).inverse();
  const Eigen::MatrixXd V = bread * (X.transpose() * u.cwiseAbs2().asDiagonal() * X) * bread;
  CHECK((r.vcov - V).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("FE is exact on a noiseless model with unit effects") {
  const Sim s = simulate(20, 7, 0.5, 2.0, 1.5, 0.0, 3);
  const auto r = fe_within(s.panel, dyn_spec());
  CHECK(r.coefficient("L.y") == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(r.coefficient("x") == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(r.index_of("_cons") < 0);
}

TEST_CASE("FE equals the dummy-variable regression") {
  const Sim s = simulate(30, 5, 0.4, 1.0, 1.0, 1.0, 4);
  ModelSpec m = dyn_spec();
  m.time_dummies = true;
  const auto r = fe_within(s.panel, m);
  const Rows b = brute_rows(s, false, false);
  const int n = static_cast<int>(b.y.size());
  // L.y, x, period dummies 3..5, unit dummies
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, 2 + 3 + s.N);
  for (int row = 0; row < n; ++row) {
    D(row, 0) = b.X(row, 0);
    D(row, 1) = b.X(row, 1);
    const int t = row % (s.T - 1) + 2;
    if (t >= 3) D(row, 2 + t - 3) = 1;
    D(row, 5 + b.unit[static_cast<std::size_t>(row)]) = 1;
  }
  const Eigen::VectorXd beta = normal_equations(D, b.y);
  CHECK(r.coefficient("L.y") == doctest::Approx(beta(0)).epsilon(1e-9));
  CHECK(r.coefficient("x") == doctest::Approx(beta(1)).epsilon(1e-9));
  CHECK(r.coefficient("T4") == doctest::Approx(beta(3)).epsilon(1e-9));
  CHECK(r.diag.time_dummies.has_value());
}

TEST_CASE("FE rejects time-invariant regressors") {
  const Sim s = simulate(10, 5, 0.5, 1.0, 1.0, 1.0, 6);
  ModelSpec m = dyn_spec();
  m.w_terms = {"w"};
  CHECK(error_kind([&] { fe_within(s.panel, m); }) == ErrorKind::TimeInvariantInFE);
  ModelSpec c = dyn_spec();
  c.x_terms = {{"w", 0, {}}};
  CHECK(error_kind([&] { fe_within(s.panel, c); }) == ErrorKind::TimeInvariantInFE);
}

TEST_CASE("RE equals GLS with the estimated variance components") {
  Sim s = simulate(50, 6, 0.0, 1.0, 1.0, 1.0, 7);
  // unbalance the panel so theta differs across units
  std::vector<PanelRow> rows;
  for (int i = 0; i < s.N; ++i)
    for (int t = 0; t < s.T - (i % 3); ++t) {
      const std::size_t k = static_cast<std::size_t>(i * s.T + t);
      rows.push_back({i + 1, static_cast<double>(t + 1), {{"y", s.y[k]}, {"x", s.x[k]}}});
    }
  ModelSpec m;
  m.ar_order = 0;
  m.x_terms = {{"x", 0, {}}};
  const auto r = re_fgls(PanelDataset::build(rows), m);

  // variance components by hand
  std::vector<std::vector<std::pair<double, double>>> unit(static_cast<std::size_t>(s.N));
  for (const auto& row : rows) unit[static_cast<std::size_t>(row.unit - 1)].push_back({row.values[0].second, row.values[1].second});
  double ssr_w = 0, sxx = 0, sxy = 0;
  Eigen::MatrixXd B(s.N, 2);
  Eigen::VectorXd yb(s.N);
  double inv_t = 0;
  std::size_t n = 0;
  for (int i = 0; i < s.N; ++i) {
    const auto& u = unit[static_cast<std::size_t>(i)];
    double my = 0, mx = 0;
    for (auto [yy, xx] : u) my += yy, mx += xx;
    my /= double(u.size());
    mx /= double(u.size());
    for (auto [yy, xx] : u) sxx += (xx - mx) * (xx - mx), sxy += (xx - mx) * (yy - my);
    B(i, 0) = 1;
    B(i, 1) = mx;
    yb(i) = my;
    inv_t += 1.0 / double(u.size());
    n += u.size();
  }
  const double bw = sxy / sxx;
  for (int i = 0; i < s.N; ++i) {
    const auto& u = unit[static_cast<std::size_t>(i)];
    double my = 0, mx = 0;
    for (auto [yy, xx] : u) my += yy, mx += xx;
    my /= double(u.size());
    mx /= double(u.size());
    for (auto [yy, xx] : u) ssr_w += std::pow((yy - my) - bw * (xx - mx), 2);
  }
  const double se2 = ssr_w / double(n - static_cast<std::size_t>(s.N) - 1);
  const Eigen::VectorXd bb = normal_equations(B, yb);
  const double ssr_b = (yb - B * bb).squaredNorm();
  const double smu2 = std::max(0.0, ssr_b / (s.N - 2) - se2 / (s.N / inv_t));
  CHECK(r.diag.values.at("sigma_e2") == doctest::Approx(se2).epsilon(1e-10));
  CHECK(r.diag.values.at("sigma_mu2") == doctest::Approx(smu2).epsilon(1e-10));

  // GLS with Omega_i = se2 I + smu2 11'
  Eigen::Matrix2d A = Eigen::Matrix2d::Zero();
  Eigen::Vector2d c = Eigen::Vector2d::Zero();
  for (const auto& u : unit) {
    const auto Ti = static_cast<Eigen::Index>(u.size());
    Eigen::MatrixXd Xi(Ti, 2);
    Eigen::VectorXd yi(Ti);
    for (Eigen::Index t = 0; t < Ti; ++t) {
      Xi(t, 0) = 1;
      Xi(t, 1) = u[static_cast<std::size_t>(t)].second;
      yi(t) = u[static_cast<std::size_t>(t)].first;
    }
    const Eigen::MatrixXd Om = se2 * Eigen::MatrixXd::Identity(Ti, Ti) + smu2 * Eigen::MatrixXd::Ones(Ti, Ti);
    const Eigen::MatrixXd Oi = Om.inverse();
    A += Xi.transpose() * Oi * Xi;
    c += Xi.transpose() * Oi * yi;
  }
  const Eigen::Vector2d gls = A.ldlt().solve(c);
  CHECK(r.coefficient("_cons") == doctest::Approx(gls(0)).epsilon(1e-9));
  CHECK(r.coefficient("x") == doctest::Approx(gls(1)).epsilon(1e-9));
  CHECK(r.diag.values.at("theta_min") < r.diag.values.at("theta_max"));
}

TEST_CASE("RE reduces to POLS when the unit variance is zero") {
  // error with zero unit means and an exact between fit
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n01;
  std::vector<PanelRow> rows;
  for (int i = 0; i < 30; ++i) {
    std::vector<double> e(5), x(5);
    double me = 0;
    for (int t = 0; t < 5; ++t) e[t] = n01(rng), x[t] = n01(rng), me += e[t] / 5;
    for (int t = 0; t < 5; ++t) rows.push_back({i + 1, double(t + 1), {{"y", 1 + 2 * x[t] + e[t] - me}, {"x", x[t]}}});
  }
  ModelSpec m;
  m.ar_order = 0;
  m.x_terms = {{"x", 0, {}}};
  const auto p = PanelDataset::build(rows);
  const auto re = re_fgls(p, m);
  const auto ols = pols(p, m);
  CHECK(re.diag.values.at("sigma_mu2") == 0.0);
  CHECK((re.coef - ols.coef).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("full-sample Mundlak CRE reproduces FE") {
  const Sim s = simulate(40, 6, 0.5, 1.0, 1.0, 1.0, 9);
  const auto fe = fe_within(s.panel, dyn_spec());
  for (auto backend : {CreBackend::POLS, CreBackend::RE}) {
    BaselineOptions o;
    o.cre_backend = backend;
    const auto r = cre(s.panel, dyn_spec(), CreVariant::CRE2, MeansSource::FullSample, o);
    CHECK(r.coefficient("L.y") == doctest::Approx(fe.coefficient("L.y")).epsilon(1e-8));
    CHECK(r.coefficient("x") == doctest::Approx(fe.coefficient("x")).epsilon(1e-8));
    CHECK(r.index_of("fsavg:x") >= 0);
    CHECK(r.diag.hausman.has_value());
  }
}

TEST_CASE("pre-sample CRE") {
  const Sim s = simulate(60, 8, 0.5, 1.0, 1.0, 1.0, 10);
  ModelSpec m = dyn_spec();
  CHECK(error_kind([&] { cre(s.panel, m, CreVariant::CRE1, MeansSource::Presample); }) == ErrorKind::InvalidArgument);
  m.presample_end = 3;
  const auto c1 = cre(s.panel, m, CreVariant::CRE1, MeansSource::Presample);
  CHECK(c1.index_of("psavg:L.y") >= 0);
  CHECK(c1.index_of("psavg:x") < 0);
  CHECK(c1.n_obs == 60 * 5);
  CHECK_FALSE(c1.diag.hausman.has_value());
  const auto c2 = cre(s.panel, m, CreVariant::CRE2, MeansSource::Presample);
  CHECK(c2.index_of("psavg:x") >= 0);
  CHECK(c2.diag.hausman.has_value());
  CHECK(c2.diag.hausman->df == 1);
}

TEST_CASE("constant pre-sample average is collinear with the constant") {
  Sim s = simulate(30, 6, 0.5, 1.0, 1.0, 1.0, 11);
  std::vector<PanelRow> rows;
  for (int i = 0; i < s.N; ++i)
    for (int t = 0; t < s.T; ++t) {
      const std::size_t k = static_cast<std::size_t>(i * s.T + t);
      rows.push_back({i + 1, double(t + 1), {{"y", s.y[k]}, {"x", t < 2 ? double(t) : s.x[k]}}});
    }
  const auto p = PanelDataset::build(rows);
  ModelSpec m;
  m.ar_order = 0;
  m.x_terms = {{"x", 0, {}}};
  m.presample_end = 2;
  CHECK(error_kind([&] { cre(p, m, CreVariant::CRE2, MeansSource::Presample); }) == ErrorKind::RankDeficient);
  BaselineOptions o;
  o.drop_collinear = true;
  const auto r = cre(p, m, CreVariant::CRE2, MeansSource::Presample, o);
  REQUIRE(r.diag.dropped_terms.size() == 1);
  CHECK(r.names.size() == 2);
}

TEST_CASE("average requests") {
  ModelSpec m = dyn_spec();
  m.x_terms.push_back({"x", 1, {}});
  const auto a = average_requests(m, true, true);
  REQUIRE(a.size() == 3);
  CHECK(a[0].var == "y");
  CHECK(a[0].lag == 1);
  CHECK(a[2].lag == 1);
  m.ar_order = 0;
  CHECK(average_requests(m, true, false).empty());
}
