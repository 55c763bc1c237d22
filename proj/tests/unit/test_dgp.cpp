#include <cmath>
#include <random>

#include "cregmm/baseline.hpp"
#include "cregmm/dgp.hpp"
#include "helpers.hpp"

using namespace cregmm;
using th::error_kind;

TEST_CASE("calibration examples") {
  DgpConfig c;
  c.gamma3 = 0.8;
  CHECK(calibrate_variances(c).sigma_eps == doctest::Approx(0.6).epsilon(1e-12));
  c.gamma3 = 0.0;
  c.sigma_e = 1.7;
  CHECK(calibrate_variances(c).sigma_eps == doctest::Approx(1.7).epsilon(1e-12));

  DgpConfig x;
  x.mode.regressor = RegressorVarianceMode::FixVx;
  x.theta_x = 0.5;
  x.sigma_x = 1.0;
  CHECK(calibrate_variances(x).sigma_xi == doctest::Approx(std::sqrt(0.75)).epsilon(1e-12));
  CHECK(calibrate_variances(x).sigma_xi == doctest::Approx(0.866025).epsilon(1e-6));
}

TEST_CASE("implied variances follow the fixed-innovation formulas") {
  DgpConfig c;
  c.mode = {ErrorVarianceMode::FixVeps, RegressorVarianceMode::FixVxi};
  c.gamma1 = 0.25;
  c.gamma2 = 0.5;
  c.gamma3 = 0.8;
  c.sigma_eps = 1.2;
  c.sigma_xi = 0.7;
  const auto s = calibrate_variances(c);
  CHECK(s.implied_Ve == doctest::Approx(0.64 + 1.44));
  CHECK(s.implied_Vx == doctest::Approx((0.0625 + 0.25 * 1.44 + 0.49) / 0.75));
}

TEST_CASE("infeasible calibrations raise and feasible ones are finite") {
  DgpConfig c;
  c.gamma3 = 1.2;
  CHECK(error_kind([&] { calibrate_variances(c); }) == ErrorKind::CalibrationInfeasible);
  DgpConfig x;
  x.mode.regressor = RegressorVarianceMode::FixVx;
  x.gamma1 = 0.8;
  x.gamma2 = 0.8;
  CHECK(error_kind([&] { calibrate_variances(x); }) == ErrorKind::CalibrationInfeasible);

  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> g(-1.5, 1.5), th(-0.95, 0.95), sd(0.1, 2.0);
  int raised = 0;
  for (int k = 0; k < 2000; ++k) {
    DgpConfig r;
    r.mode.error = k % 2 ? ErrorVarianceMode::FixVe : ErrorVarianceMode::FixVeps;
    r.mode.regressor = (k / 2) % 2 ? RegressorVarianceMode::FixVx : RegressorVarianceMode::FixVxi;
    r.gamma1 = g(rng);
    r.gamma2 = g(rng);
    r.gamma3 = g(rng);
    r.theta_x = th(rng);
    r.sigma_mu = sd(rng);
    r.sigma_e = sd(rng);
    r.sigma_x = sd(rng);
    try {
      const auto s = calibrate_variances(r);
      CHECK(std::isfinite(s.sigma_eps));
      CHECK(std::isfinite(s.sigma_xi));
      CHECK(s.sigma_eps > 0);
      CHECK(s.sigma_xi > 0);
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::CalibrationInfeasible);
      ++raised;
    }
  }
  CHECK(raised > 0);
}

TEST_CASE("config validation") {
  DgpConfig c;
  c.rho = 1.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c.rho = 0.5;
  c.theta_x = -1.0;
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("simulation is deterministic and policy independent") {
  DgpConfig c;
  c.N = 300;
  c.T = 8;
  c.gamma1 = 0.25;
  c.gamma3 = 0.8;
  c.seed = 42;
  const auto a = simulate_panel(c, true, ExecPolicy::Serial);
  const auto b = simulate_panel(c, true, ExecPolicy::Serial);
  const auto p = simulate_panel(c, true, ExecPolicy::Parallel);
  for (const char* v : {"y", "x", "mu", "eps", "e"}) {
    CHECK(a.column(v) == b.column(v));
    CHECK(a.column(v) == p.column(v));
  }
  CHECK(a.is_latent("mu"));
  CHECK_FALSE(a.is_latent("y"));
  CHECK(a.n_units() == 300);
  CHECK(a.first_period() == 1);
  CHECK(a.last_period() == 8);

  c.seed = 43;
  CHECK(simulate_panel(c).column("y") != a.column("y"));
}

TEST_CASE("growing N keeps earlier units") {
  DgpConfig c;
  c.N = 5;
  c.T = 6;
  const auto small = simulate_panel(c, false);
  c.N = 9;
  const auto big = simulate_panel(c, false);
  const Column& ys = small.column("y");
  const Column& yb = big.column("y");
  for (std::size_t k = 0; k < ys.size(); ++k) CHECK(ys[k] == yb[k]);
}

TEST_CASE("latents can be dropped") {
  DgpConfig c;
  c.N = 10;
  const auto p = simulate_panel(c, false);
  CHECK_FALSE(p.has_column("mu"));
  CHECK(error_kind([&] { empirical_moments(p, 1); }) == ErrorKind::MissingLatents);
}

TEST_CASE("static independent DGP: variance of y") {
  DgpConfig c;
  c.rho = 0;
  c.N = 5000;
  c.T = 10;
  c.seed = 17;
  const auto p = simulate_panel(c, false);
  const Column& y = p.column("y");
  double m = 0;
  for (double v : y) m += v;
  m /= static_cast<double>(y.size());
  double var = 0;
  for (double v : y) var += (v - m) * (v - m);
  var /= static_cast<double>(y.size() - 1);
  const auto s = calibrate_variances(c);
  const double want = c.sigma_mu * c.sigma_mu + s.sigma_eps * s.sigma_eps + s.implied_Vx;
  CHECK(std::abs(var / want - 1) < 0.05);
}

TEST_CASE("empirical moments") {
  DgpConfig c;
  c.N = 5000;
  c.T = 10;
  c.gamma1 = 0.8;
  c.seed = 3;
  auto m = empirical_moments(simulate_panel(c), 1);
  CHECK(m.corr_x_mu > 0.3);
  CHECK(std::abs(m.corr_x_eps) < 0.05);
  CHECK(m.n == 50000);

  DgpConfig v;
  v.N = 2000;
  v.T = 10;
  v.mode.regressor = RegressorVarianceMode::FixVx;
  v.seed = 4;
  m = empirical_moments(simulate_panel(v), 1);
  CHECK(m.var_x >= 0.95);
  CHECK(m.var_x <= 1.05);

  DgpConfig e;
  e.N = 2000;
  e.T = 10;
  e.mode.error = ErrorVarianceMode::FixVeps;
  e.gamma3 = 0.8;
  e.seed = 5;
  m = empirical_moments(simulate_panel(e), 1);
  CHECK(std::abs(m.var_e / 1.64 - 1) < 0.05);
}

TEST_CASE("moment match in every variance mode") {
  // gamma1 = 0: with a persistent mu the AR(1) variance formula for x is not exact
  for (auto em : {ErrorVarianceMode::FixVe, ErrorVarianceMode::FixVeps})
    for (auto rm : {RegressorVarianceMode::FixVx, RegressorVarianceMode::FixVxi}) {
      DgpConfig c;
      c.mode = {em, rm};
      c.gamma2 = 0.25;
      c.gamma3 = 0.8;
      c.N = 5000;
      c.T = 10;
      c.seed = 100 + static_cast<int>(em) * 2 + static_cast<int>(rm);
      const auto s = calibrate_variances(c);
      const auto m = empirical_moments(simulate_panel(c), 1);
      INFO(error_mode_name(em), " ", regressor_mode_name(rm));
      CHECK(std::abs(m.var_x / s.implied_Vx - 1) < 0.05);
      CHECK(std::abs(m.var_e / s.implied_Ve - 1) < 0.05);
    }
}

TEST_CASE("bias oracle examples") {
  CHECK(ols_bias_oracle(0, 0, 0.8, 0.5, 1.0, RegressorVarianceMode::FixVxi) == 0.0);
  CHECK(ols_bias_oracle(0, 0, 0.0, 0.5, 1.0, RegressorVarianceMode::FixVx) == 0.0);
  CHECK(ols_bias_oracle(0.25, 0, 0, 0.5, 1.0, RegressorVarianceMode::FixVxi) == doctest::Approx(0.352941).epsilon(1e-6));
  CHECK(ols_bias_oracle(0.25, 0, 0, 0.5, 1.0, RegressorVarianceMode::FixVxi) ==
        doctest::Approx(1.5 * 0.25 / 1.0625).epsilon(1e-14));
  CHECK(ols_bias_oracle(0, 0.25, 0, 0.5, 1.0, RegressorVarianceMode::FixVx) == doctest::Approx(0.375).epsilon(1e-14));
}

TEST_CASE("exact static POLS bias agrees with simulation") {
  const double g1 = 0.25, g2 = 0.25, g3 = 0.8;
  DgpConfig c;
  c.rho = 0;
  c.gamma1 = g1;
  c.gamma2 = g2;
  c.gamma3 = g3;
  c.N = 500;
  c.T = 20;
  const auto s = calibrate_variances(c);
  const double want = ols_bias_exact(g1, g2, g3, c.theta_x, c.sigma_mu, s.sigma_eps, s.sigma_xi);
  ModelSpec m;
  m.ar_order = 0;
  m.x_terms = {{"x", 0, {}}};
  BaselineOptions o;
  o.point_only = true;
  const int R = 100;
  double sum = 0, ss = 0;
  for (int r = 0; r < R; ++r) {
    c.seed = 1000 + static_cast<std::uint64_t>(r);
    const double b = pols(simulate_panel(c, false), m, o).coefficient("x") - 1.0;
    sum += b;
    ss += b * b;
  }
  const double mean = sum / R, sd = std::sqrt((ss - R * mean * mean) / (R - 1));
  CHECK(std::abs(mean - want) <= 3 * sd / std::sqrt(double(R)));
}

TEST_CASE("seed mixing") {
  CHECK(mix_seed(1, 2) == mix_seed(1, 2));
  CHECK(mix_seed(1, 2) != mix_seed(2, 1));
  CHECK(mix_seed(0, 0) != 0);
  CHECK(parse_error_mode(error_mode_name(ErrorVarianceMode::FixVeps)) == ErrorVarianceMode::FixVeps);
  CHECK(parse_regressor_mode(regressor_mode_name(RegressorVarianceMode::FixVx)) == RegressorVarianceMode::FixVx);
  CHECK_THROWS_AS(parse_error_mode("fix-V(q)"), Error);
}
