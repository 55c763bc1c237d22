#include "cregmm/panel.hpp"

#include <algorithm>
#include <numeric>
#include <tuple>

#include "cregmm/errors.hpp"

namespace cregmm {

PanelDataset PanelDataset::balanced(std::vector<std::int64_t> units, std::int64_t first_period,
                                    std::int64_t n_periods) {
  PanelDataset p;
  p.units_ = std::move(units);
  p.p0_ = first_period;
  p.n_grid_ = n_periods;
  const std::size_t n = p.units_.size();
  p.present_.assign(n * static_cast<std::size_t>(n_periods), 1);
  p.first_.assign(n, first_period);
  p.last_.assign(n, first_period + n_periods - 1);
  p.count_.assign(n, static_cast<std::size_t>(n_periods));
  return p;
}

PanelDataset PanelDataset::build(std::span<const PanelRow> rows) {
  if (rows.empty()) throw Error(ErrorKind::EmptySample, "no rows");

  std::vector<std::tuple<std::int64_t, std::int64_t, std::size_t>> keys;
  keys.reserve(rows.size());
  std::set<std::string> names;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const double p = rows[r].period;
    if (!std::isfinite(p) || std::floor(p) != p)
      throw Error(ErrorKind::BadPeriod, "row " + std::to_string(r + 1) + ": period is not an integer");
    keys.emplace_back(rows[r].unit, static_cast<std::int64_t>(p), r);
    for (const auto& kv : rows[r].values) names.insert(kv.first);
  }
  std::sort(keys.begin(), keys.end());
  for (std::size_t k = 1; k < keys.size(); ++k) {
    if (std::get<0>(keys[k]) == std::get<0>(keys[k - 1]) && std::get<1>(keys[k]) == std::get<1>(keys[k - 1]))
      throw Error(ErrorKind::DuplicateKey, "unit " + std::to_string(std::get<0>(keys[k])) + ", period " +
                                               std::to_string(std::get<1>(keys[k])) + " (rows " +
                                               std::to_string(std::get<2>(keys[k - 1]) + 1) + " and " +
                                               std::to_string(std::get<2>(keys[k]) + 1) + ")");
  }

  PanelDataset p;
  std::int64_t pmin = std::get<1>(keys.front()), pmax = pmin;
  for (const auto& k : keys) {
    pmin = std::min(pmin, std::get<1>(k));
    pmax = std::max(pmax, std::get<1>(k));
    if (p.units_.empty() || p.units_.back() != std::get<0>(k)) p.units_.push_back(std::get<0>(k));
  }
  p.p0_ = pmin;
  p.n_grid_ = pmax - pmin + 1;
  const std::size_t n = p.units_.size();
  const std::size_t cells = n * static_cast<std::size_t>(p.n_grid_);
  p.present_.assign(cells, 0);
  p.first_.assign(n, 0);
  p.last_.assign(n, 0);
  p.count_.assign(n, 0);

  std::map<std::string, Column> cols;
  for (const auto& name : names) cols[name].assign(cells, kMissing);

  std::size_t ui = 0;
  for (std::size_t k = 0; k < keys.size(); ++k) {
    const auto [unit, period, r] = keys[k];
    if (k > 0 && std::get<0>(keys[k - 1]) != unit) ++ui;
    const std::size_t c = p.cell(ui, period);
    p.present_[c] = 1;
    if (p.count_[ui] == 0) p.first_[ui] = period;
    p.last_[ui] = period;
    ++p.count_[ui];
    for (const auto& kv : rows[r].values) cols[kv.first][c] = kv.second;
  }
  for (auto& [name, col] : cols) p.columns_[name] = std::make_shared<const Column>(std::move(col));
  return p;
}

std::vector<std::int64_t> PanelDataset::periods() const {
  std::vector<std::int64_t> out;
  for (std::int64_t t = p0_; t < p0_ + n_grid_; ++t) {
    for (std::size_t i = 0; i < units_.size(); ++i) {
      if (present_[cell(i, t)]) {
        out.push_back(t);
        break;
      }
    }
  }
  return out;
}

std::size_t PanelDataset::n_observations() const { return std::accumulate(count_.begin(), count_.end(), std::size_t{0}); }

const Column& PanelDataset::column(const std::string& name) const {
  auto it = columns_.find(name);
  if (it == columns_.end()) throw Error(ErrorKind::UnknownVariable, name);
  return *it->second;
}

double PanelDataset::value(const std::string& name, std::size_t unit_index, std::int64_t period) const {
  if (!observed(unit_index, period)) return kMissing;
  return column(name)[cell(unit_index, period)];
}

std::vector<std::string> PanelDataset::column_names() const {
  std::vector<std::string> out;
  for (const auto& kv : columns_) out.push_back(kv.first);
  return out;
}

PanelDataset PanelDataset::with_column(const std::string& name, Column values, bool latent) const {
  if (values.size() != present_.size())
    throw Error(ErrorKind::InvalidArgument, "column '" + name + "' has wrong length");
  for (std::size_t c = 0; c < values.size(); ++c)
    if (!present_[c]) values[c] = kMissing;
  PanelDataset p = *this;
  p.columns_[name] = std::make_shared<const Column>(std::move(values));
  if (latent)
    p.latent_.insert(name);
  else
    p.latent_.erase(name);
  return p;
}

PanelDataset PanelDataset::without_latents() const {
  PanelDataset p = *this;
  for (const auto& name : latent_) p.columns_.erase(name);
  p.latent_.clear();
  return p;
}

Column lag(const PanelDataset& panel, const Column& values, int k) {
  if (k < 1) throw Error(ErrorKind::InvalidArgument, "lag order must be >= 1");
  Column out(values.size(), kMissing);
  const std::int64_t p0 = panel.first_period(), p1 = panel.last_period();
  for (std::size_t i = 0; i < panel.n_units(); ++i) {
    // run = consecutive observed periods ending at t; a gap inside the lag span gives missing
    std::int64_t run = 0;
    for (std::int64_t t = p0; t <= p1; ++t) {
      run = panel.observed(i, t) ? run + 1 : 0;
      if (run > k) out[panel.cell(i, t)] = values[panel.cell(i, t - k)];
    }
  }
  return out;
}

Column lag(const PanelDataset& panel, const std::string& var, int k) { return lag(panel, panel.column(var), k); }

Column first_difference(const PanelDataset& panel, const Column& values) {
  Column l = lag(panel, values, 1);
  for (std::size_t c = 0; c < l.size(); ++c) l[c] = values[c] - l[c];
  return l;
}

Column first_difference(const PanelDataset& panel, const std::string& var) {
  return first_difference(panel, panel.column(var));
}

SampleSplit split_presample(const PanelDataset& panel, std::int64_t S) {
  if (S >= panel.last_period())
    throw Error(ErrorKind::EmptyEstimationSample,
                "pre-sample end " + std::to_string(S) + " leaves no period after it (last period " +
                    std::to_string(panel.last_period()) + ")");
  SampleSplit s;
  s.presample_end = S;
  const std::size_t n = panel.n_units(), cells = n * panel.n_periods();
  s.presample.assign(cells, 0);
  s.estimation.assign(cells, 0);
  s.no_presample.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    bool any_pre = false;
    for (std::int64_t t = panel.first_period(); t <= panel.last_period(); ++t) {
      if (!panel.observed(i, t)) continue;
      if (t <= S) {
        s.presample[panel.cell(i, t)] = 1;
        any_pre = true;
      } else {
        s.estimation[panel.cell(i, t)] = 1;
      }
    }
    if (!any_pre) {
      s.no_presample[i] = 1;
      ++s.n_flagged;
    }
  }
  return s;
}

std::string average_name(const std::string& var, int lag) {
  if (lag == 0) return "psavg:" + var;
  if (lag == 1) return "psavg:L." + var;
  return "psavg:L" + std::to_string(lag) + "." + var;
}

MundlakAverages mundlak_averages(const PanelDataset& panel, std::int64_t S, std::span<const AverageRequest> requests) {
  const std::size_t n = panel.n_units(), cells = n * panel.n_periods();
  MundlakAverages out;
  out.dropped.assign(n, 0);
  std::vector<Column> per_unit;  // unit-level means, NaN when unusable
  for (const auto& req : requests) {
    if (req.lag < 0) throw Error(ErrorKind::InvalidArgument, "negative lag in average request");
    const Column& v = panel.column(req.var);
    Column means(n, kMissing);
    for (std::size_t i = 0; i < n; ++i) {
      double sum = 0;
      std::size_t cnt = 0;
      for (std::int64_t s = panel.first_period(); s <= std::min(S, panel.last_period()); ++s) {
        if (!panel.observed(i, s) || !panel.observed(i, s - req.lag)) continue;
        const double val = v[panel.cell(i, s - req.lag)];
        if (is_missing(val)) continue;
        sum += val;
        ++cnt;
      }
      if (cnt > 0) means[i] = sum / static_cast<double>(cnt);
    }
    out.names.push_back(average_name(req.var, req.lag));
    per_unit.push_back(std::move(means));
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& m : per_unit) {
      if (is_missing(m[i])) {
        out.dropped[i] = 1;
        break;
      }
    }
    if (out.dropped[i]) {
      ++out.n_dropped;
      out.warnings.push_back("unit " + std::to_string(panel.units()[i]) + " has no usable pre-sample data; dropped");
    }
  }
  for (const auto& m : per_unit) {
    Column col(cells, kMissing);
    for (std::size_t i = 0; i < n; ++i) {
      if (out.dropped[i]) continue;
      for (std::int64_t t = S + 1; t <= panel.last_period(); ++t)
        if (panel.observed(i, t)) col[panel.cell(i, t)] = m[i];
    }
    out.columns.push_back(std::move(col));
  }
  return out;
}

MundlakAverages mundlak_averages(const PanelDataset& panel, std::int64_t S, std::span<const std::string> vars,
                                 bool include_lagged_y, const std::string& dependent) {
  std::vector<AverageRequest> req;
  if (include_lagged_y) req.push_back({dependent, 1});
  for (const auto& v : vars) req.push_back({v, 0});
  return mundlak_averages(panel, S, req);
}

std::vector<Column> full_sample_means(const PanelDataset& panel, std::span<const std::string> vars,
                                      std::optional<std::int64_t> S) {
  const std::size_t n = panel.n_units(), cells = n * panel.n_periods();
  const std::int64_t lo = S ? *S + 1 : panel.first_period();
  std::vector<Column> out;
  for (const auto& var : vars) {
    const Column& v = panel.column(var);
    Column col(cells, kMissing);
    for (std::size_t i = 0; i < n; ++i) {
      double sum = 0;
      std::size_t cnt = 0;
      for (std::int64_t t = lo; t <= panel.last_period(); ++t) {
        if (!panel.observed(i, t)) continue;
        const double val = v[panel.cell(i, t)];
        if (is_missing(val)) continue;
        sum += val;
        ++cnt;
      }
      if (cnt == 0) continue;
      const double m = sum / static_cast<double>(cnt);
      for (std::int64_t t = lo; t <= panel.last_period(); ++t)
        if (panel.observed(i, t)) col[panel.cell(i, t)] = m;
    }
    out.push_back(std::move(col));
  }
  return out;
}

DecompositionReport variance_decomposition(const PanelDataset& panel, const std::string& var, std::int64_t lo,
                                           std::int64_t hi) {
  const Column& v = panel.column(var);
  lo = std::max(lo, panel.first_period());
  hi = std::min(hi, panel.last_period());
  const std::size_t n = panel.n_units();

  std::vector<double> unit_sum(n, 0), unit_cnt(n, 0);
  double total = 0, cnt = 0;
  std::set<std::int64_t> used_periods;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::int64_t t = lo; t <= hi; ++t) {
      const double val = panel.value(var, i, t);
      if (is_missing(val)) continue;
      unit_sum[i] += val;
      unit_cnt[i] += 1;
      total += val;
      cnt += 1;
      used_periods.insert(t);
    }
  }
  const auto units_used = std::count_if(unit_cnt.begin(), unit_cnt.end(), [](double c) { return c > 0; });
  if (units_used < 2 || used_periods.size() < 2)
    throw Error(ErrorKind::InvalidArgument, "decomposition needs at least 2 units and 2 periods in range");

  const double grand = total / cnt;
  const std::size_t np = static_cast<std::size_t>(hi - lo + 1);
  std::vector<double> dev_sum(np, 0), dev_cnt(np, 0);
  double ss_total = 0, ss_between = 0, ss_within = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (unit_cnt[i] == 0) continue;
    const double ui = unit_sum[i] / unit_cnt[i];
    ss_between += unit_cnt[i] * (ui - grand) * (ui - grand);
    for (std::int64_t t = lo; t <= hi; ++t) {
      const double val = v[panel.cell(i, t)];
      if (!panel.observed(i, t) || is_missing(val)) continue;
      ss_total += (val - grand) * (val - grand);
      const double d = val - ui;
      ss_within += d * d;
      dev_sum[static_cast<std::size_t>(t - lo)] += d;
      dev_cnt[static_cast<std::size_t>(t - lo)] += 1;
    }
  }
  if (!(ss_total > 0)) throw Error(ErrorKind::ZeroVariance, "variable '" + var + "' has zero variance in range");
  double common = 0;
  for (std::size_t k = 0; k < np; ++k)
    if (dev_cnt[k] > 0) common += dev_sum[k] * dev_sum[k] / dev_cnt[k];

  DecompositionReport r;
  r.n_obs = static_cast<std::size_t>(cnt);
  r.between_share = ss_between / ss_total;
  r.within_share = ss_within / ss_total;
  // between + within == total up to rounding
  const double s = r.between_share + r.within_share;
  r.between_share /= s;
  r.within_share /= s;
  r.within_common_share = common / ss_total / s;
  r.within_unitspecific_share = r.within_share - r.within_common_share;
  return r;
}

DecompositionReport variance_decomposition(const PanelDataset& panel, const std::string& var) {
  return variance_decomposition(panel, var, panel.first_period(), panel.last_period());
}

}  // namespace cregmm
