#include "cregmm/dgp.hpp"

#include <omp.h>

#include <cmath>
#include <cstdlib>
#include <random>

#include "cregmm/errors.hpp"

namespace cregmm {

int max_threads() {
  int n = omp_get_max_threads();
  if (const char* env = std::getenv("CREGMM_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0 && cap < n) n = cap;
  }
  return n < 1 ? 1 : n;
}

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) { return splitmix64(a ^ splitmix64(b)); }

const char* error_mode_name(ErrorVarianceMode m) { return m == ErrorVarianceMode::FixVe ? "fix-V(e)" : "fix-V(eps)"; }
const char* regressor_mode_name(RegressorVarianceMode m) {
  return m == RegressorVarianceMode::FixVx ? "fix-V(x)" : "fix-V(xi)";
}

ErrorVarianceMode parse_error_mode(const std::string& s) {
  if (s == "fix-V(e)") return ErrorVarianceMode::FixVe;
  if (s == "fix-V(eps)") return ErrorVarianceMode::FixVeps;
  throw Error(ErrorKind::TypeMismatch, "error variance mode must be fix-V(e) or fix-V(eps), got '" + s + "'");
}

RegressorVarianceMode parse_regressor_mode(const std::string& s) {
  if (s == "fix-V(x)") return RegressorVarianceMode::FixVx;
  if (s == "fix-V(xi)") return RegressorVarianceMode::FixVxi;
  throw Error(ErrorKind::TypeMismatch, "regressor variance mode must be fix-V(x) or fix-V(xi), got '" + s + "'");
}

void DgpConfig::validate() const {
  if (!(std::abs(rho) < 1)) throw Error(ErrorKind::InvalidArgument, "|rho| must be < 1");
  if (!(std::abs(theta_x) < 1)) throw Error(ErrorKind::InvalidArgument, "|theta_x| must be < 1");
  if (N < 1 || T < 1) throw Error(ErrorKind::InvalidArgument, "N and T must be positive");
  if (S < 0 || S >= T) throw Error(ErrorKind::InvalidArgument, "pre-sample length S must satisfy 0 <= S < T");
  if (burn_in < 0) throw Error(ErrorKind::InvalidArgument, "burn_in must be >= 0");
  for (double s : {sigma_mu, sigma_e, sigma_eps, sigma_x, sigma_xi})
    if (!(s >= 0) || !std::isfinite(s)) throw Error(ErrorKind::InvalidArgument, "standard deviations must be >= 0");
}

CalibratedSigmas calibrate_variances(const DgpConfig& c) {
  c.validate();
  CalibratedSigmas r;
  const double vmu = c.sigma_mu * c.sigma_mu;
  if (c.mode.error == ErrorVarianceMode::FixVe) {
    const double v = c.sigma_e * c.sigma_e - c.gamma3 * c.gamma3 * vmu;
    if (!(v > 0))
      throw Error(ErrorKind::CalibrationInfeasible, "sigma_e^2 - gamma3^2 sigma_mu^2 = " + std::to_string(v) + " <= 0");
    r.sigma_eps = std::sqrt(v);
    r.implied_Ve = c.sigma_e * c.sigma_e;
  } else {
    r.sigma_eps = c.sigma_eps;
    r.implied_Ve = c.gamma3 * c.gamma3 * vmu + c.sigma_eps * c.sigma_eps;
  }
  const double veps = r.sigma_eps * r.sigma_eps;
  const double th2 = c.theta_x * c.theta_x;
  if (c.mode.regressor == RegressorVarianceMode::FixVx) {
    const double v = (1 - th2) * c.sigma_x * c.sigma_x - c.gamma1 * c.gamma1 * vmu - c.gamma2 * c.gamma2 * veps;
    if (!(v > 0))
      throw Error(ErrorKind::CalibrationInfeasible,
                  "(1-theta^2) sigma_x^2 - gamma1^2 sigma_mu^2 - gamma2^2 sigma_eps^2 = " + std::to_string(v) + " <= 0");
    r.sigma_xi = std::sqrt(v);
    r.implied_Vx = c.sigma_x * c.sigma_x;
  } else {
    r.sigma_xi = c.sigma_xi;
    r.implied_Vx = (c.gamma1 * c.gamma1 * vmu + c.gamma2 * c.gamma2 * veps + c.sigma_xi * c.sigma_xi) / (1 - th2);
  }
  return r;
}

PanelDataset simulate_panel(const DgpConfig& c, bool keep_latents, ExecPolicy policy) {
  const CalibratedSigmas cs = calibrate_variances(c);
  const std::size_t N = static_cast<std::size_t>(c.N), T = static_cast<std::size_t>(c.T);
  std::vector<std::int64_t> ids(N);
  for (std::size_t i = 0; i < N; ++i) ids[i] = static_cast<std::int64_t>(i + 1);
  PanelDataset panel = PanelDataset::balanced(ids, 1, c.T);

  Column y(N * T), x(N * T), mu(N * T), eps(N * T), e(N * T);
  auto unit = [&](std::size_t i) {
    std::mt19937_64 rng(mix_seed(c.seed, i + 1));
    std::normal_distribution<double> z(0.0, 1.0);
    const double m = c.sigma_mu * z(rng);
    double xt = 0, yt = 0;
    const std::size_t total = static_cast<std::size_t>(c.burn_in) + T;
    for (std::size_t q = 0; q < total; ++q) {
      const double xi = cs.sigma_xi * z(rng);
      const double ep = cs.sigma_eps * z(rng);
      const double xprev = xt;
      xt = c.gamma1 * m + c.theta_x * xprev + c.gamma2 * ep + xi;
      yt = c.beta0 + c.rho * yt + c.beta1 * xt + c.beta2 * xprev + (1 + c.gamma3) * m + ep;
      if (q >= static_cast<std::size_t>(c.burn_in)) {
        const std::size_t cell = i * T + (q - static_cast<std::size_t>(c.burn_in));
        y[cell] = yt;
        x[cell] = xt;
        mu[cell] = m;
        eps[cell] = ep;
        e[cell] = c.gamma3 * m + ep;
      }
    }
  };
  if (policy == ExecPolicy::Parallel) {
    const long n = static_cast<long>(N);
#pragma omp parallel for schedule(static) num_threads(max_threads())
    for (long i = 0; i < n; ++i) unit(static_cast<std::size_t>(i));
  } else {
    for (std::size_t i = 0; i < N; ++i) unit(i);
  }

  panel = panel.with_column("y", std::move(y)).with_column("x", std::move(x));
  if (keep_latents)
    panel = panel.with_column("mu", std::move(mu), true).with_column("eps", std::move(eps), true).with_column("e", std::move(e), true);
  return panel;
}

double ols_bias_oracle(double g1, double g2, double g3, double th, double V_xi, RegressorVarianceMode mode) {
  const double scale = (1 - th * th) / (1 - th);
  const double num = g1 * (1 + g3) + g2;
  if (mode == RegressorVarianceMode::FixVx) return scale * num;
  return scale * num / (g1 * g1 + g2 * g2 + V_xi);
}

double ols_bias_exact(double g1, double g2, double g3, double th, double s_mu, double s_eps, double s_xi) {
  const double vmu = s_mu * s_mu, veps = s_eps * s_eps;
  const double cov = g1 * (1 + g3) * vmu / (1 - th) + g2 * veps;
  const double var = g1 * g1 * vmu / ((1 - th) * (1 - th)) + (g2 * g2 * veps + s_xi * s_xi) / (1 - th * th);
  return cov / var;
}

MomentReport empirical_moments(const PanelDataset& panel, std::int64_t first_period, const std::string& xname) {
  for (const char* v : {"mu", "eps", "e"})
    if (!panel.has_column(v)) throw Error(ErrorKind::MissingLatents, std::string("latent column '") + v + "' absent");
  const Column &x = panel.column(xname), &mu = panel.column("mu"), &eps = panel.column("eps"), &e = panel.column("e");
  double sx = 0, se = 0, sm = 0, sp = 0, n = 0;
  auto each = [&](auto&& f) {
    for (std::size_t i = 0; i < panel.n_units(); ++i)
      for (std::int64_t t = std::max(first_period, panel.first_period()); t <= panel.last_period(); ++t) {
        if (!panel.observed(i, t)) continue;
        const std::size_t c = panel.cell(i, t);
        if (is_missing(x[c])) continue;
        f(c);
      }
  };
  each([&](std::size_t c) {
    sx += x[c];
    se += e[c];
    sm += mu[c];
    sp += eps[c];
    n += 1;
  });
  if (n < 2) throw Error(ErrorKind::EmptySample, "fewer than two cells for moments");
  const double mx = sx / n, me = se / n, mm = sm / n, mp = sp / n;
  double vx = 0, ve = 0, vm = 0, vp = 0, cxm = 0, cxp = 0;
  each([&](std::size_t c) {
    const double dx = x[c] - mx, de = e[c] - me, dm = mu[c] - mm, dp = eps[c] - mp;
    vx += dx * dx;
    ve += de * de;
    vm += dm * dm;
    vp += dp * dp;
    cxm += dx * dm;
    cxp += dx * dp;
  });
  MomentReport r;
  r.n = static_cast<std::size_t>(n);
  r.var_x = vx / (n - 1);
  r.var_e = ve / (n - 1);
  r.corr_x_mu = cxm / std::sqrt(vx * vm);
  r.corr_x_eps = cxp / std::sqrt(vx * vp);
  return r;
}

}  // namespace cregmm
