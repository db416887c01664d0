#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace hbm {

/// Built-in boundary-function families g(t).
///
///   Constant(a)         g(t) = a
///   SqrtLogLog(c)       g(t) = c * sqrt(log log t)
///   KolmogorovErdos(a)  g(t) = sqrt(2 log log t + a log log log t)
///   Custom              tabulated (t, g) knots, interpolated linearly in
///                       (log t, log g) and extrapolated with the end segments
enum class Family { Constant, SqrtLogLog, KolmogorovErdos, Custom };

std::string_view family_name(Family family);
Family parse_family(std::string_view name);

/// Default threshold time. 16 > e^e, so log log t > 0 on [t0, inf) and every
/// built-in family is defined and positive there.
inline constexpr double kDefaultT0 = 16.0;

struct TabulatedPoint {
  double t;
  double g;
};

/// Parameterized boundary function g together with the threshold t0 beyond
/// which the growth hypotheses are required to hold. Immutable.
class RateFunctionSpec {
 public:
  static RateFunctionSpec constant(double a, double t0 = kDefaultT0);
  static RateFunctionSpec sqrt_loglog(double c, double t0 = kDefaultT0);
  static RateFunctionSpec kolmogorov_erdos(double a, double t0 = kDefaultT0);
  /// t0 defaults to the first knot time and may not precede it.
  static RateFunctionSpec custom(std::vector<TabulatedPoint> table,
                                 std::optional<double> t0 = std::nullopt);
  static RateFunctionSpec make(Family family, double param,
                               double t0 = kDefaultT0);

  Family family() const noexcept { return family_; }
  double param() const noexcept { return param_; }
  double t0() const noexcept { return t0_; }
  std::span<const TabulatedPoint> table() const noexcept { return table_; }

  RateFunctionSpec with_t0(double t0) const;

  /// g evaluated at t = exp(u). No domain check and no positivity check;
  /// may return NaN where the family formula is undefined.
  double g_at_log(double u) const noexcept;

 private:
  RateFunctionSpec(Family family, double param, double t0,
                   std::vector<TabulatedPoint> table);

  Family family_;
  double param_;
  double t0_;
  std::vector<TabulatedPoint> table_;
};

bool operator==(const RateFunctionSpec& a, const RateFunctionSpec& b);

/// g(t) for t >= t0. Throws DomainError for t < t0 and EvaluationError if the
/// family yields a nonpositive or non-finite value.
double eval_g(const RateFunctionSpec& spec, double t);

/// The pair r1 = linear + spread, r2 = linear - spread with
/// linear = (d-1)t/2 and spread = sqrt(t) g(t), computed once.
struct RateBand {
  double linear;
  double spread;

  double upper() const noexcept { return linear + spread; }
  double lower() const noexcept { return linear - spread; }
};

RateBand rate_band(const RateFunctionSpec& spec, int d, double t);
double rate_upper(const RateFunctionSpec& spec, int d, double t);
double rate_lower(const RateFunctionSpec& spec, int d, double t);

enum class ShiftDirection { Minus, Plus };

std::string_view shift_name(ShiftDirection direction);
ShiftDirection parse_shift(std::string_view name);

/// h(t) = g(t) - n/sqrt(t) (Minus) or g(t) + n/sqrt(t) (Plus).
class ShiftedRateFunction {
 public:
  ShiftedRateFunction(RateFunctionSpec base, int n, ShiftDirection direction);

  const RateFunctionSpec& base() const noexcept { return base_; }
  int n() const noexcept { return n_; }
  ShiftDirection direction() const noexcept { return direction_; }

  /// Throws DomainError for t < base.t0() and, for Minus, where h(t) <= 0.
  double operator()(double t) const;

  /// Unchecked evaluation at t = exp(u).
  double at_log(double u) const noexcept;

 private:
  RateFunctionSpec base_;
  int n_;
  ShiftDirection direction_;
};

struct ProbeOptions {
  double t_end = 1e12;
  std::size_t points = 10001;
};

struct AdmissibilityReport {
  bool admissible = true;
  std::vector<std::string> violations;
  /// First offending probe pair (t_a, t_b), if any.
  std::optional<std::pair<double, double>> first_violation;
};

/// Probes g > 0, monotonicity of sqrt(t) g(t) and boundedness of g(t)/sqrt(t)
/// on a geometric grid over [t0, t_end]. Boundedness is judged from the
/// log-log slope of g/sqrt(t) over the final decade of the grid.
AdmissibilityReport check_admissibility(const RateFunctionSpec& spec,
                                        const ProbeOptions& probe = {});

void to_json(nlohmann::json& j, const RateFunctionSpec& spec);
RateFunctionSpec rate_spec_from_json(const nlohmann::json& j);

}  // namespace hbm
