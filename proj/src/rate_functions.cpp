#include "hbm/rate_functions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "hbm/errors.hpp"

namespace hbm {

namespace {

std::string format_double(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) {
    throw PreconditionError(std::string(what) + " must be finite");
  }
}

// Linear interpolation of log g in log t over the knot table; the end
// segments are extended beyond the table.
double interpolate_log_log(std::span<const TabulatedPoint> table, double u) {
  auto it = std::upper_bound(
      table.begin(), table.end(), u,
      [](double v, const TabulatedPoint& p) { return v < std::log(p.t); });
  std::size_t hi = static_cast<std::size_t>(it - table.begin());
  hi = std::clamp<std::size_t>(hi, 1, table.size() - 1);
  const auto& a = table[hi - 1];
  const auto& b = table[hi];
  const double ua = std::log(a.t);
  const double ub = std::log(b.t);
  const double la = std::log(a.g);
  const double lb = std::log(b.g);
  return std::exp(la + (lb - la) * (u - ua) / (ub - ua));
}

}  // namespace

std::string_view family_name(Family family) {
  switch (family) {
    case Family::Constant:
      return "constant";
    case Family::SqrtLogLog:
      return "sqrt_loglog";
    case Family::KolmogorovErdos:
      return "kolmogorov_erdos";
    case Family::Custom:
      return "custom";
  }
  return "unknown";
}

Family parse_family(std::string_view name) {
  for (Family f : {Family::Constant, Family::SqrtLogLog,
                   Family::KolmogorovErdos, Family::Custom}) {
    if (family_name(f) == name) return f;
  }
  throw ConfigError("unknown rate-function family '" + std::string(name) +
                    "' (expected constant, sqrt_loglog, kolmogorov_erdos or "
                    "custom)");
}

RateFunctionSpec::RateFunctionSpec(Family family, double param, double t0,
                                   std::vector<TabulatedPoint> table)
    : family_(family), param_(param), t0_(t0), table_(std::move(table)) {
  require_finite(param_, "family parameter");
  if (!(t0_ > 0.0) || !std::isfinite(t0_)) {
    throw PreconditionError("t0 must be positive and finite, got " +
                            format_double(t0_));
  }
}

RateFunctionSpec RateFunctionSpec::constant(double a, double t0) {
  if (!(a > 0.0)) {
    throw PreconditionError("Constant family requires a > 0, got " +
                            format_double(a));
  }
  return {Family::Constant, a, t0, {}};
}

RateFunctionSpec RateFunctionSpec::sqrt_loglog(double c, double t0) {
  if (!(c > 0.0)) {
    throw PreconditionError("SqrtLogLog family requires c > 0, got " +
                            format_double(c));
  }
  return {Family::SqrtLogLog, c, t0, {}};
}

RateFunctionSpec RateFunctionSpec::kolmogorov_erdos(double a, double t0) {
  return {Family::KolmogorovErdos, a, t0, {}};
}

RateFunctionSpec RateFunctionSpec::custom(std::vector<TabulatedPoint> table,
                                          std::optional<double> t0) {
  if (table.size() < 2) {
    throw PreconditionError("Custom family needs at least two knots");
  }
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto& p = table[i];
    if (!(p.t > 0.0) || !std::isfinite(p.t) || !(p.g > 0.0) ||
        !std::isfinite(p.g)) {
      throw PreconditionError("Custom knots need positive finite t and g");
    }
    if (i > 0 && !(p.t > table[i - 1].t)) {
      throw PreconditionError("Custom knot times must be strictly increasing");
    }
  }
  const double first = table.front().t;
  const double start = t0.value_or(first);
  if (start < first) {
    throw PreconditionError("Custom t0 precedes the first knot");
  }
  return {Family::Custom, 0.0, start, std::move(table)};
}

RateFunctionSpec RateFunctionSpec::make(Family family, double param,
                                        double t0) {
  switch (family) {
    case Family::Constant:
      return constant(param, t0);
    case Family::SqrtLogLog:
      return sqrt_loglog(param, t0);
    case Family::KolmogorovErdos:
      return kolmogorov_erdos(param, t0);
    case Family::Custom:
      break;
  }
  throw PreconditionError("Custom family must be built from a knot table");
}

RateFunctionSpec RateFunctionSpec::with_t0(double t0) const {
  if (family_ == Family::Custom) return custom(table_, t0);
  return {family_, param_, t0, table_};
}

double RateFunctionSpec::g_at_log(double u) const noexcept {
  switch (family_) {
    case Family::Constant:
      return param_;
    case Family::SqrtLogLog:
      return param_ * std::sqrt(std::log(u));
    case Family::KolmogorovErdos: {
      const double ll = std::log(u);
      return std::sqrt(2.0 * ll + param_ * std::log(ll));
    }
    case Family::Custom:
      return interpolate_log_log(table_, u);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

bool operator==(const RateFunctionSpec& a, const RateFunctionSpec& b) {
  if (a.family() != b.family() || a.param() != b.param() ||
      a.t0() != b.t0() || a.table().size() != b.table().size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.table().size(); ++i) {
    if (a.table()[i].t != b.table()[i].t || a.table()[i].g != b.table()[i].g) {
      return false;
    }
  }
  return true;
}

double eval_g(const RateFunctionSpec& spec, double t) {
  if (!(t >= spec.t0())) {
    throw DomainError("g(t) evaluated at t=" + format_double(t) +
                      " below t0=" + format_double(spec.t0()));
  }
  const double g = spec.g_at_log(std::log(t));
  if (!std::isfinite(g) || !(g > 0.0)) {
    throw EvaluationError(std::string(family_name(spec.family())) +
                          " boundary undefined or nonpositive at t=" +
                          format_double(t));
  }
  return g;
}

RateBand rate_band(const RateFunctionSpec& spec, int d, double t) {
  if (d < 2) throw PreconditionError("dimension d must be >= 2");
  const double g = eval_g(spec, t);
  return {0.5 * (d - 1) * t, std::sqrt(t) * g};
}

double rate_upper(const RateFunctionSpec& spec, int d, double t) {
  return rate_band(spec, d, t).upper();
}

double rate_lower(const RateFunctionSpec& spec, int d, double t) {
  return rate_band(spec, d, t).lower();
}

std::string_view shift_name(ShiftDirection direction) {
  return direction == ShiftDirection::Minus ? "minus" : "plus";
}

ShiftDirection parse_shift(std::string_view name) {
  if (name == "minus") return ShiftDirection::Minus;
  if (name == "plus") return ShiftDirection::Plus;
  throw ConfigError("shift must be 'plus' or 'minus', got '" +
                    std::string(name) + "'");
}

ShiftedRateFunction::ShiftedRateFunction(RateFunctionSpec base, int n,
                                         ShiftDirection direction)
    : base_(std::move(base)), n_(n), direction_(direction) {
  if (n_ < 1) throw PreconditionError("shift index n must be >= 1");
}

double ShiftedRateFunction::at_log(double u) const noexcept {
  const double shift = n_ * std::exp(-0.5 * u);
  const double g = base_.g_at_log(u);
  return direction_ == ShiftDirection::Minus ? g - shift : g + shift;
}

double ShiftedRateFunction::operator()(double t) const {
  const double g = eval_g(base_, t);
  const double shift = n_ / std::sqrt(t);
  if (direction_ == ShiftDirection::Plus) return g + shift;
  const double h = g - shift;
  if (!(h > 0.0)) {
    throw DomainError("shifted boundary g - n/sqrt(t) is nonpositive at t=" +
                      format_double(t));
  }
  return h;
}

AdmissibilityReport check_admissibility(const RateFunctionSpec& spec,
                                        const ProbeOptions& probe) {
  AdmissibilityReport report;
  const double t0 = spec.t0();
  const double t_end = std::max(probe.t_end, 100.0 * t0);
  const std::size_t m = std::max<std::size_t>(probe.points, 3);
  const double log_t0 = std::log(t0);
  const double log_span = std::log(t_end) - log_t0;

  auto fail = [&](std::string message, double ta, double tb) {
    if (!report.first_violation) report.first_violation = {ta, tb};
    report.admissible = false;
    report.violations.push_back(std::move(message));
  };

  std::vector<double> ts(m);
  std::vector<double> gs(m);
  for (std::size_t k = 0; k < m; ++k) {
    ts[k] = k + 1 == m ? t_end
                       : std::exp(log_t0 + log_span * static_cast<double>(k) /
                                               static_cast<double>(m - 1));
    if (k == 0) ts[k] = t0;
    gs[k] = spec.g_at_log(std::log(ts[k]));
    if (!std::isfinite(gs[k]) || !(gs[k] > 0.0)) {
      fail("g is undefined or nonpositive at t=" + format_double(ts[k]),
           ts[k], ts[k]);
      return report;
    }
  }

  for (std::size_t k = 1; k < m; ++k) {
    const double prev = std::sqrt(ts[k - 1]) * gs[k - 1];
    const double cur = std::sqrt(ts[k]) * gs[k];
    if (cur < prev * (1.0 - 1e-12)) {
      fail("sqrt(t) g(t) decreases between t=" + format_double(ts[k - 1]) +
               " and t=" + format_double(ts[k]),
           ts[k - 1], ts[k]);
      break;
    }
  }

  // g/sqrt(t) growing like a power over the last decade signals unboundedness.
  const double t_tail = t_end / 10.0;
  const double q_tail = spec.g_at_log(std::log(t_tail)) / std::sqrt(t_tail);
  const double q_end = gs.back() / std::sqrt(t_end);
  const double slope = std::log(q_end / q_tail) / std::log(10.0);
  if (!(slope <= 1e-6)) {
    fail("g(t)/sqrt(t) grows like t^" + format_double(slope) +
             " over the final probe decade",
         t_tail, t_end);
  }
  return report;
}

void to_json(nlohmann::json& j, const RateFunctionSpec& spec) {
  j = nlohmann::json{{"family", family_name(spec.family())},
                     {"param", spec.param()},
                     {"t0", spec.t0()}};
  if (spec.family() == Family::Custom) {
    auto table = nlohmann::json::array();
    for (const auto& p : spec.table()) table.push_back({p.t, p.g});
    j["table"] = std::move(table);
  }
}

RateFunctionSpec rate_spec_from_json(const nlohmann::json& j) {
  try {
    const Family family = parse_family(j.at("family").get<std::string>());
    if (family == Family::Custom) {
      std::vector<TabulatedPoint> table;
      for (const auto& row : j.at("table")) {
        table.push_back({row.at(0).get<double>(), row.at(1).get<double>()});
      }
      std::optional<double> t0;
      if (j.contains("t0")) t0 = j["t0"].get<double>();
      return RateFunctionSpec::custom(std::move(table), t0);
    }
    return RateFunctionSpec::make(family, j.at("param").get<double>(),
                                  j.value("t0", kDefaultT0));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed rate-function block: ") +
                      e.what());
  } catch (const PreconditionError& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace hbm
