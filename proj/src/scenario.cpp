#include "sundman/scenario.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "sundman/expr.hpp"
#include "sundman/kepler.hpp"
#include "sundman/linstruct.hpp"
#include "sundman/mechanics.hpp"

namespace sundman {

using nlohmann::json;
using nlohmann::ordered_json;

std::string format_double(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

namespace {

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

// CSV with header param,q1..qn[,v1..vn]; n_pos is the configuration
// dimension, states of size 2*n_pos carry velocity columns.
std::string trajectory_csv(const Trajectory& traj, int n_pos) {
  const int sd = traj.state_dim();
  std::ostringstream out;
  out << "param";
  for (int i = 1; i <= n_pos; ++i) out << ",q" << i;
  if (sd == 2 * n_pos) {
    for (int i = 1; i <= n_pos; ++i) out << ",v" << i;
  }
  out << "\n";
  for (std::size_t i = 0; i < traj.size(); ++i) {
    out << format_double(traj.param(i));
    const Vec& s = traj.state(i);
    for (int j = 0; j < sd; ++j) out << "," << format_double(s[j]);
    out << "\n";
  }
  return out.str();
}

// ---- json extraction helpers -------------------------------------------

const json& req(const json& j, const std::string& key) {
  auto it = j.find(key);
  if (it == j.end()) {
    throw DomainError("scenario: missing required key '" + key + "'");
  }
  return *it;
}

double num(const json& j, const std::string& key) {
  const json& v = req(j, key);
  if (!v.is_number()) {
    throw DomainError("scenario: key '" + key + "' must be a number");
  }
  return v.get<double>();
}

std::string str(const json& j, const std::string& key) {
  const json& v = req(j, key);
  if (!v.is_string()) {
    throw DomainError("scenario: key '" + key + "' must be a string");
  }
  return v.get<std::string>();
}

std::vector<std::string> coord_list(const json& j) {
  const json& v = req(j, "coordinates");
  if (!v.is_array() || v.empty()) {
    throw DomainError("scenario: 'coordinates' must be a nonempty array");
  }
  std::vector<std::string> out;
  for (const json& c : v) {
    if (!c.is_string()) {
      throw DomainError("scenario: coordinate names must be strings");
    }
    out.push_back(c.get<std::string>());
  }
  return out;
}

Vec vec_of(const json& j, const std::string& key, int n) {
  const json& v = req(j, key);
  if (!v.is_array() || static_cast<int>(v.size()) != n) {
    throw DimensionError("scenario: '" + key + "' must have " +
                         std::to_string(n) + " entries");
  }
  Vec out(n);
  for (int i = 0; i < n; ++i) out[i] = v[i].get<double>();
  return out;
}

std::vector<std::string> str_list(const json& v, const std::string& what) {
  if (!v.is_array()) {
    throw DomainError("scenario: '" + what + "' must be an array");
  }
  std::vector<std::string> out;
  for (const json& c : v) out.push_back(c.get<std::string>());
  return out;
}

VectorField field_of(const json& j, const std::string& key,
                     const std::vector<std::string>& coords) {
  return make_vector_field(str_list(req(j, key), key), coords);
}

ScalarField scalar_of(const json& j, const std::string& key,
                      const std::vector<std::string>& coords) {
  return make_scalar_field(str(j, key), coords);
}

MetricField metric_of(const json& j, const std::string& key,
                      const std::vector<std::string>& coords) {
  const json& v = req(j, key);
  if (!v.is_array()) {
    throw DomainError("scenario: '" + key + "' must be a matrix of expressions");
  }
  std::vector<std::vector<std::string>> entries;
  for (const json& row : v) entries.push_back(str_list(row, key + " row"));
  return make_metric_field(entries, coords);
}

double tol_of(const json& checks, const std::string& key) {
  const double t = num(checks, key);
  if (!(t > 0.0)) {
    throw DomainError("scenario: tolerance '" + key + "' must be positive");
  }
  return t;
}

void add_check(Report& rep, const std::string& name, double residual,
               double tolerance) {
  const bool pass = residual <= tolerance;
  rep.checks.push_back({name, residual, tolerance, pass});
  rep.pass = rep.pass && pass;
}

void accumulate(IntegrateStats& into, const IntegrateStats& s) {
  into.steps += s.steps;
  into.rejected += s.rejected;
  into.rhs_evals += s.rhs_evals;
}

std::vector<Vec> box_samples(const json& box, int dim, int count,
                             unsigned seed) {
  if (!box.is_array() || static_cast<int>(box.size()) != dim) {
    throw DimensionError("scenario: 'sample_box' must list one [lo, hi] per coordinate");
  }
  HaltonSampler sampler(seed);
  std::vector<Vec> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    Vec q = sampler.next(dim);
    for (int k = 0; k < dim; ++k) {
      const double lo = box[k][0].get<double>();
      const double hi = box[k][1].get<double>();
      q[k] = lo + (hi - lo) * q[k];
    }
    out.push_back(q);
  }
  return out;
}

std::vector<Vec> case_samples(const json& j, int dim, int count,
                              unsigned seed) {
  if (j.contains("sample_box")) {
    return box_samples(j["sample_box"], dim, count, seed);
  }
  return annulus_samples(dim, count, seed);
}

ScalarField constant_field(int dim, double value) {
  ScalarField f;
  f.dim = dim;
  f.eval = [value](const Vec&) { return value; };
  f.gradient = [dim](const Vec&) { return Vec::Zero(dim); };
  f.positive = value > 0.0;
  return f;
}

using FileSink = std::vector<std::pair<std::string, std::string>>;

// ---- kind runners ------------------------------------------------------

void run_flow(const json& j, Report& rep, unsigned, FileSink& files) {
  const auto coords = coord_list(j);
  const int n = static_cast<int>(coords.size());
  VectorField X = field_of(j, "field", coords);
  const Vec q0 = vec_of(j, "initial", n);
  const double T = num(j, "horizon");

  IntegrateStats stats;
  Trajectory traj = integrate_flow(X, q0, T, {}, &stats);
  accumulate(rep.stats, stats);

  if (j.contains("first_integral")) {
    ScalarField F = make_scalar_field(j["first_integral"].get<std::string>(), coords);
    const double f0 = F(q0);
    double drift = 0.0;
    for (std::size_t i = 0; i < traj.size(); ++i) {
      drift = std::max(drift, std::abs(F(traj.state(i)) - f0));
    }
    const json& checks = req(j, "checks");
    add_check(rep, "integral_drift", drift, tol_of(checks, "integral_drift"));
  }
  files.push_back({"trajectory.csv", trajectory_csv(traj, n)});
}

void run_sundman(const json& j, Report& rep, unsigned, FileSink& files) {
  const json& checks = req(j, "checks");
  const double orbit_tol = tol_of(checks, "orbit_distance");
  const double drift_tol = tol_of(checks, "integral_drift");

  for (const json& c : req(j, "cases")) {
    const std::string cname = str(c, "name");
    const auto coords = coord_list(c);
    const int n = static_cast<int>(coords.size());
    VectorField X = field_of(c, "field", coords);
    ScalarField f = scalar_of(c, "factor", coords);
    f.positive = true;
    const Vec q0 = vec_of(c, "initial", n);
    const double T = num(c, "horizon");
    ScalarField F = scalar_of(c, "first_integral", coords);

    IntegrateStats s1, s2;
    Trajectory base = integrate_flow(X, q0, T, {}, &s1);
    const double tau_span = time_map(base, f).back();
    Trajectory scaled = integrate_flow(scale_field(X, f), q0, tau_span, {}, &s2);
    accumulate(rep.stats, s1);
    accumulate(rep.stats, s2);

    add_check(rep, cname + ".orbit_distance", orbit_distance(base, scaled),
              orbit_tol);

    const double f0 = F(q0);
    double drift = 0.0;
    for (std::size_t i = 0; i < base.size(); ++i) {
      drift = std::max(drift, std::abs(F(base.state(i)) - f0));
    }
    for (std::size_t i = 0; i < scaled.size(); ++i) {
      drift = std::max(drift, std::abs(F(scaled.state(i)) - f0));
    }
    add_check(rep, cname + ".integral_drift", drift, drift_tol);

    files.push_back({cname + "-base.csv", trajectory_csv(base, n)});
    files.push_back({cname + "-scaled.csv", trajectory_csv(scaled, n)});
  }
}

void run_kepler(const json& j, Report& rep, unsigned, FileSink& files) {
  kepler::KeplerParams p;
  p.k = num(j, "k");
  p.l = num(j, "l");
  p.E = num(j, "E");
  const double r0 = num(j, "r0");
  const double rdot0 = num(j, "rdot0");
  const double periods = num(j, "periods");
  const json& checks = req(j, "checks");

  kepler::LinearizationReport lr =
      kepler::linearization_check(p, r0, rdot0, periods);

  if (checks.contains("linear_deviation")) {
    add_check(rep, "linear_deviation", lr.max_dev_linear,
              tol_of(checks, "linear_deviation"));
  }
  if (checks.contains("analytic_deviation")) {
    add_check(rep, "analytic_deviation", lr.max_dev_analytic,
              tol_of(checks, "analytic_deviation"));
  }
  if (checks.contains("time_map_deviation")) {
    add_check(rep, "time_map_deviation", lr.max_dev_time,
              tol_of(checks, "time_map_deviation"));
  }
  if (checks.contains("tau_period_rel")) {
    const double expected = 2.0 * M_PI / std::sqrt(2.0 * std::abs(p.E));
    add_check(rep, "tau_period_rel",
              std::abs(lr.tau_period - expected) / expected,
              tol_of(checks, "tau_period_rel"));
  }
  if (checks.contains("energy_drift")) {
    add_check(rep, "energy_drift", lr.max_energy_drift,
              tol_of(checks, "energy_drift"));
  }
  if (checks.contains("fixed_energy")) {
    add_check(rep, "fixed_energy", lr.fixed_energy_residual,
              tol_of(checks, "fixed_energy"));
  }

  files.push_back({"radial.csv", trajectory_csv(lr.radial, 1)});
  files.push_back({"sundman.csv", trajectory_csv(lr.sundman, 1)});
  files.push_back({"linear.csv", trajectory_csv(lr.linear, 1)});
}

void run_linstruct(const json& j, Report& rep, unsigned seed, FileSink&) {
  for (const json& c : req(j, "cases")) {
    const std::string cname = str(c, "name");
    const auto coords = coord_list(c);
    const int n = static_cast<int>(coords.size());
    VectorField X = field_of(c, "field", coords);
    const std::string kind = str(c, "check");
    const std::vector<Vec> samples = case_samples(c, n, 200, seed);

    if (kind == "linearity") {
      add_check(rep, cname + ".linearity", linearity_residual(X, samples),
                tol_of(c, "tolerance"));
    } else if (kind == "nonlinearity") {
      const double threshold = num(c, "threshold");
      const double res = linearity_residual(X, samples);
      add_check(rep, cname + ".nonlinearity_defect",
                std::max(0.0, threshold - res), 1e-12);
    } else if (kind == "affinity") {
      add_check(rep, cname + ".affinity", affinity_residual(X, samples),
                tol_of(c, "tolerance"));
    } else if (kind == "linearizing_factor") {
      const EigenFactorEstimate est = conformal_eigen_factor(X, samples);
      double h_mean = 0.0;
      for (double v : est.values) h_mean += v;
      h_mean /= static_cast<double>(est.values.size());
      // linearizing_factor solves Delta(log f) = h with [X, Delta] = h X,
      // the sign-flipped eigenfactor of [Delta, X] = h X.
      ScalarField f = linearizing_factor(X, constant_field(n, -h_mean));
      VectorField fX = scale_field(X, f);
      VectorField delta = liouville_field(n);
      double res = 0.0;
      for (const Vec& q : samples) {
        res = std::max(res, lie_bracket(fX, delta, q).norm());
      }
      add_check(rep, cname + ".linearized_bracket", res, tol_of(c, "tolerance"));
    } else {
      throw DomainError("scenario: unknown linstruct check '" + kind + "'");
    }
  }
}

void christoffel_case(const json& c, Report& rep) {
  const std::string cname = str(c, "name");
  const auto coords = coord_list(c);
  const int n = static_cast<int>(coords.size());
  MetricField g = metric_of(c, "metric", coords);
  MetricField g_fd = g;
  g_fd.partials = nullptr;

  const json& expected = req(c, "expected");
  std::vector<std::vector<std::vector<Expression>>> exp_gamma(n);
  for (int i = 0; i < n; ++i) {
    exp_gamma[i].resize(n);
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) {
        exp_gamma[i][a].push_back(parse_expression(
            expected[i][a][b].get<std::string>(), coords));
      }
    }
  }

  double res_an = 0.0, res_fd = 0.0;
  for (const json& pt : req(c, "points")) {
    Vec q(n);
    for (int i = 0; i < n; ++i) q[i] = pt[i].get<double>();
    const Christoffel an = christoffel(g, q);
    const Christoffel fd = christoffel(g_fd, q);
    for (int i = 0; i < n; ++i) {
      for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
          const double want = exp_gamma[i][a][b].eval(q);
          res_an = std::max(res_an, std::abs(an[i](a, b) - want));
          res_fd = std::max(res_fd, std::abs(fd[i](a, b) - want));
        }
      }
    }
  }
  add_check(rep, cname + ".analytic", res_an, tol_of(c, "analytic_tolerance"));
  add_check(rep, cname + ".finite_difference", res_fd,
            tol_of(c, "fd_tolerance"));
}

void field_case(const json& c, Report& rep, unsigned seed,
                IntegrateStats& stats) {
  const std::string cname = str(c, "name");
  const auto coords = coord_list(c);
  const int n = static_cast<int>(coords.size());
  MetricField g = metric_of(c, "metric", coords);
  VectorField X = field_of(c, "field", coords);
  const std::string kind = str(c, "check");
  const std::vector<Vec> samples = case_samples(c, n, 100, seed);
  const double tol = tol_of(c, "tolerance");

  if (kind == "killing") {
    double res = 0.0;
    for (const Vec& q : samples) {
      res = std::max(res, killing_residual(g, X, q));
    }
    add_check(rep, cname + ".killing", res, tol);
  } else if (kind == "autoparallel") {
    double res = 0.0;
    for (const Vec& q : samples) {
      res = std::max(res, autoparallel_residual(g, X, q));
    }
    add_check(rep, cname + ".autoparallel", res, tol);
  } else if (kind == "pregeodesic_unit") {
    const PregeodesicEstimate est = pregeodesic_factor(g, X, samples);
    double res = est.residual;
    for (double f : est.values) res = std::max(res, std::abs(f - 1.0));
    add_check(rep, cname + ".pregeodesic_unit", res, tol);
  } else if (kind == "rescaling") {
    ScalarField f = scalar_of(c, "factor", coords);
    const Vec q0 = vec_of(c, "initial", n);
    const double T = num(c, "horizon");
    const GeodesicRescaling gr = geodesic_rescaling(g, X, f, q0, T);
    accumulate(stats, IntegrateStats{});
    double res = gr.autoparallel_residual;
    if (!gr.single_valued) res = std::max(res, 1.0);
    add_check(rep, cname + ".rescaled_autoparallel", res, tol);
  } else {
    throw DomainError("scenario: unknown field check '" + kind + "'");
  }
}

void dynamic_case(const json& d, Report& rep, IntegrateStats& stats,
                  FileSink& files) {
  const auto coords = coord_list(d);
  const int n = static_cast<int>(coords.size());
  MetricField g = metric_of(d, "metric", coords);
  const Vec q0 = vec_of(d, "initial_q", n);
  const Vec v0 = vec_of(d, "initial_v", n);
  const double T = num(d, "horizon");
  const json& checks = req(d, "checks");

  IntegrateStats s;
  // Dense nodes keep the interpolation error under the stencil checks below.
  IntegrateOptions opts;
  opts.max_step = 0.005;
  Trajectory traj = integrate_sode(geodesic_field(g), q0, v0, T, opts, &s);
  accumulate(stats, s);

  // Conserved g-speed along the geodesic.
  const double speed0 = v0.dot(g(q0) * v0);
  double drift = 0.0;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const Vec q = traj.state(i).head(n);
    const Vec v = traj.state(i).tail(n);
    drift = std::max(drift, std::abs(v.dot(g(q) * v) - speed0));
  }
  add_check(rep, "speed_drift", drift / speed0, tol_of(checks, "speed_drift"));

  if (checks.contains("affine_lambda")) {
    // Affine rescale t -> tau = t/xi; lambda = d/dtau log(ds/dtau) must
    // vanish. Differenced over wide node spacing to stay below the
    // integrator noise floor.
    const double xi = num(d, "xi");
    std::vector<double> tau(traj.size()), speed(traj.size());
    for (std::size_t i = 0; i < traj.size(); ++i) {
      tau[i] = traj.param(i) / xi;
      const Vec q = traj.state(i).head(n);
      const Vec v = traj.state(i).tail(n);
      speed[i] = xi * std::sqrt(v.dot(g(q) * v));
    }
    double lam_max = 0.0;
    const double spacing = 0.5;
    for (std::size_t i = 0; i < traj.size(); ++i) {
      std::size_t a = i, b = i;
      while (a > 0 && tau[i] - tau[a] < spacing) --a;
      while (b + 1 < traj.size() && tau[b] - tau[i] < spacing) ++b;
      if (tau[b] - tau[a] < spacing) continue;
      const double lam =
          (std::log(speed[b]) - std::log(speed[a])) / (tau[b] - tau[a]);
      lam_max = std::max(lam_max, std::abs(lam));
    }
    add_check(rep, "affine_lambda", lam_max, tol_of(checks, "affine_lambda"));
  }

  if (checks.contains("sundman_residual")) {
    ScalarField f = scalar_of(d, "factor", coords);
    f.positive = true;
    Trajectory repar = reparametrize(traj, f);
    Trajectory pos = repar.positions(n);
    const double h = 0.015;
    const double lo = pos.param_front() + 2.5 * h;
    const double hi = pos.param_back() - 2.5 * h;
    double res = 0.0;
    const int m = 100;
    for (int i = 0; i < m; ++i) {
      const double p = lo + (hi - lo) * i / (m - 1);
      const Vec q = pos.at(p);
      const Vec qp = curve_first_derivative(pos, p, h);
      const Vec qpp = curve_second_derivative(pos, p, h);
      const Christoffel gamma = christoffel(g, q);
      const double lam = f.grad(q).dot(qp) / f(q);
      Vec defect = qpp - lam * qp;
      for (int k = 0; k < n; ++k) defect[k] += qp.dot(gamma[k] * qp);
      res = std::max(res, defect.norm());
    }
    add_check(rep, "sundman_residual", res, tol_of(checks, "sundman_residual"));
    files.push_back({"geodesic-tau.csv", trajectory_csv(repar, n)});
  }

  files.push_back({"geodesic.csv", trajectory_csv(traj, n)});
}

void run_geodesic(const json& j, Report& rep, unsigned seed, FileSink& files) {
  if (j.contains("cases")) {
    for (const json& c : j["cases"]) christoffel_case(c, rep);
  }
  if (j.contains("field_cases")) {
    for (const json& c : j["field_cases"]) {
      field_case(c, rep, seed, rep.stats);
    }
  }
  if (j.contains("dynamic")) dynamic_case(j["dynamic"], rep, rep.stats, files);
}

void run_conformal(const json& j, Report& rep, unsigned seed, FileSink&) {
  const json& checks = req(j, "checks");
  const double chris_tol = tol_of(checks, "christoffel");
  const double nabla_tol = tol_of(checks, "nabla");
  const int n_chris = checks.contains("christoffel_points")
                          ? checks["christoffel_points"].get<int>()
                          : 100;
  const int n_nabla =
      checks.contains("nabla_points") ? checks["nabla_points"].get<int>() : 50;

  for (const json& c : req(j, "cases")) {
    const std::string cname = str(c, "name");
    const auto coords = coord_list(c);
    const int n = static_cast<int>(coords.size());
    MetricField g = metric_of(c, "metric", coords);
    ScalarField phi = scalar_of(c, "phi", coords);
    VectorField X = field_of(c, "X", coords);
    VectorField Y = field_of(c, "Y", coords);

    const MetricField gbar = conformal_rescale(g, phi);
    double chris_res = 0.0;
    for (const Vec& q : case_samples(c, n, n_chris, seed)) {
      const Christoffel direct = christoffel(gbar, q);
      const Christoffel composed = conformal_christoffel(g, phi, q);
      for (int i = 0; i < n; ++i) {
        chris_res = std::max(
            chris_res, (direct[i] - composed[i]).cwiseAbs().maxCoeff());
      }
    }
    add_check(rep, cname + ".christoffel", chris_res, chris_tol);

    const double nabla_res = conformal_nabla_residual(
        g, phi, X, Y, case_samples(c, n, n_nabla, seed));
    add_check(rep, cname + ".nabla", nabla_res, nabla_tol);
  }
}

void run_mechanical(const json& j, Report& rep, unsigned, FileSink& files) {
  const auto coords = coord_list(j);
  const int n = static_cast<int>(coords.size());
  MechanicalSystem sys{metric_of(j, "metric", coords),
                       scalar_of(j, "potential", coords)};
  const Vec q0 = vec_of(j, "initial_q", n);
  const Vec v0 = vec_of(j, "initial_v", n);
  const double T = num(j, "horizon");

  IntegrateStats s;
  Trajectory traj = integrate_sode(mechanical_sode(sys), q0, v0, T, {}, &s);
  accumulate(rep.stats, s);

  const double e0 = energy(sys, q0, v0);
  double drift = 0.0;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const Vec& st = traj.state(i);
    drift = std::max(drift,
                     std::abs(energy(sys, st.head(n), st.tail(n)) - e0));
  }
  const json& checks = req(j, "checks");
  add_check(rep, "energy_drift", drift, tol_of(checks, "energy_drift"));
  files.push_back({"trajectory.csv", trajectory_csv(traj, n)});
}

void run_newtonian(const json& j, Report& rep, unsigned seed, FileSink&) {
  const auto coords = coord_list(j);
  const int n = static_cast<int>(coords.size());
  MetricField g = metric_of(j, "metric", coords);
  VectorField X = field_of(j, "field", coords);
  VectorField Zf = field_of(j, "force", coords);
  ScalarField h = scalar_of(j, "factor", coords);
  h.positive = true;

  ForceField Z;
  Z.dim = n;
  Z.eval = [Zf](const Vec& q, const Vec&) { return Zf(q); };
  Z.basic = true;

  const std::vector<Vec> samples = case_samples(j, n, 200, seed);
  const json& checks = req(j, "checks");
  if (checks.contains("nabla_force")) {
    add_check(rep, "nabla_force", nabla_force_residual(g, X, Z, samples),
              tol_of(checks, "nabla_force"));
  }
  add_check(rep, "sundman_newton",
            sundman_newton_residual(g, scale_field(X, h), Z, h, samples),
            tol_of(checks, "sundman_newton"));
}

void run_jacobi(const json& j, Report& rep, unsigned, FileSink& files) {
  const auto coords = coord_list(j);
  const int n = static_cast<int>(coords.size());
  MechanicalSystem sys{metric_of(j, "metric", coords),
                       scalar_of(j, "potential", coords)};
  const double E0 = num(j, "E0");
  const Vec q0 = vec_of(j, "initial_q", n);
  Vec v0 = vec_of(j, "initial_v", n);
  const double T = num(j, "horizon");

  // Rescale the velocity direction onto the energy shell.
  const double gap0 = E0 - sys.V(q0);
  if (!(gap0 > 0.0)) {
    throw DomainError("scenario: E0 does not exceed V at the initial point");
  }
  const double vnorm2 = v0.dot(sys.g(q0) * v0);
  if (!(vnorm2 > 0.0)) {
    throw DomainError("scenario: zero initial velocity direction");
  }
  v0 *= std::sqrt(2.0 * gap0 / vnorm2);

  const JacobiEquivalenceReport jr = jacobi_equivalence(sys, E0, q0, v0, T);
  const json& checks = req(j, "checks");
  add_check(rep, "orbit_distance", jr.orbit_dist,
            tol_of(checks, "orbit_distance"));
  add_check(rep, "energy_drift", jr.energy_drift,
            tol_of(checks, "energy_drift"));

  if (checks.contains("gradient_identity")) {
    const JacobiMetric jm = jacobi_metric(sys, E0);
    ScalarField phi_fd = jm.phi;
    phi_fd.gradient = nullptr;
    double res = 0.0;
    const std::size_t stride =
        std::max<std::size_t>(1, jr.mechanical.size() / 50);
    for (std::size_t i = 0; i < jr.mechanical.size(); i += stride) {
      const Vec q = jr.mechanical.state(i).head(n);
      const Vec want = -sys.V.grad(q) / (2.0 * (E0 - sys.V(q)));
      res = std::max(res, (phi_fd.grad(q) - want).norm());
    }
    add_check(rep, "gradient_identity", res,
              tol_of(checks, "gradient_identity"));
  }

  files.push_back({"mechanical.csv", trajectory_csv(jr.mechanical, n)});
  files.push_back(
      {"jacobi-geodesic.csv", trajectory_csv(jr.jacobi_geodesic, n)});
}

using Runner = void (*)(const json&, Report&, unsigned, FileSink&);

const std::map<std::string, Runner>& runners() {
  static const std::map<std::string, Runner> table = {
      {"flow", run_flow},         {"sundman", run_sundman},
      {"geodesic", run_geodesic}, {"conformal", run_conformal},
      {"mechanical", run_mechanical}, {"newtonian", run_newtonian},
      {"jacobi", run_jacobi},     {"kepler", run_kepler},
      {"linstruct", run_linstruct}};
  return table;
}

// ---- validation --------------------------------------------------------

void validate_tols(const json& checks) {
  for (auto it = checks.begin(); it != checks.end(); ++it) {
    if (it.key().ends_with("_points")) continue;
    if (!it->is_number() || !(it->get<double>() > 0.0)) {
      throw DomainError("scenario: tolerance '" + it.key() +
                        "' must be positive");
    }
  }
}

void validate(const json& j, const std::string& kind) {
  if (j.contains("checks")) validate_tols(j["checks"]);

  auto compile_common = [](const json& c) {
    const auto coords = coord_list(c);
    const int n = static_cast<int>(coords.size());
    if (c.contains("metric")) metric_of(c, "metric", coords);
    if (c.contains("field")) field_of(c, "field", coords);
    if (c.contains("force")) field_of(c, "force", coords);
    if (c.contains("factor")) scalar_of(c, "factor", coords);
    if (c.contains("phi")) scalar_of(c, "phi", coords);
    if (c.contains("X")) field_of(c, "X", coords);
    if (c.contains("Y")) field_of(c, "Y", coords);
    if (c.contains("potential")) scalar_of(c, "potential", coords);
    if (c.contains("first_integral")) scalar_of(c, "first_integral", coords);
    if (c.contains("initial")) vec_of(c, "initial", n);
    if (c.contains("initial_q")) vec_of(c, "initial_q", n);
    if (c.contains("initial_v")) vec_of(c, "initial_v", n);
    if (c.contains("checks")) validate_tols(c["checks"]);
    if (c.contains("horizon") && !(num(c, "horizon") > 0.0)) {
      throw DomainError("scenario: 'horizon' must be positive");
    }
  };

  if (kind == "kepler") {
    num(j, "k");
    num(j, "l");
    num(j, "E");
    num(j, "r0");
    num(j, "rdot0");
    num(j, "periods");
    req(j, "checks");
    return;
  }
  if (j.contains("cases")) {
    for (const json& c : j["cases"]) {
      if (kind == "geodesic") {
        const auto coords = coord_list(c);
        metric_of(c, "metric", coords);
        req(c, "expected");
        req(c, "points");
      } else {
        compile_common(c);
      }
    }
  }
  if (j.contains("field_cases")) {
    for (const json& c : j["field_cases"]) compile_common(c);
  }
  if (j.contains("dynamic")) compile_common(j["dynamic"]);
  if (j.contains("coordinates")) compile_common(j);
  if (kind == "sundman") req(j, "cases");
  if (kind == "linstruct") req(j, "cases");
  if (kind == "flow" || kind == "mechanical" || kind == "newtonian" ||
      kind == "jacobi") {
    req(j, "coordinates");
  }
}

}  // namespace

std::string Report::to_json() const {
  ordered_json out;
  out["scenario"] = scenario;
  out["pass"] = pass;
  out["checks"] = ordered_json::array();
  for (const CheckResult& c : checks) {
    ordered_json jc;
    jc["name"] = c.name;
    jc["residual"] = c.residual;
    jc["tolerance"] = c.tolerance;
    jc["pass"] = c.pass;
    out["checks"].push_back(jc);
  }
  out["integrator"] = {{"steps", stats.steps},
                       {"rejected", stats.rejected},
                       {"rhs_evals", stats.rhs_evals}};
  out["files"] = ordered_json::array();
  for (const EmittedFile& f : files) {
    out["files"].push_back({{"path", f.path}, {"digest", f.digest}});
  }
  return out.dump(2) + "\n";
}

Scenario parse_scenario(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DomainError(std::string("scenario: ") + e.what());
  }
  if (!j.is_object()) throw DomainError("scenario: top level must be an object");
  Scenario sc;
  sc.name = str(j, "name");
  sc.kind = str(j, "kind");
  if (runners().find(sc.kind) == runners().end()) {
    throw DomainError("scenario: unknown kind '" + sc.kind + "'");
  }
  validate(j, sc.kind);
  sc.text = text;
  return sc;
}

Scenario parse_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("scenario: cannot open file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

Report run_scenario(const Scenario& sc, const std::string& out_dir,
                    unsigned seed) {
  const json j = json::parse(sc.text);
  Report rep;
  rep.scenario = sc.name;

  FileSink files;
  runners().at(sc.kind)(j, rep, seed, files);

  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    for (const auto& [name, content] : files) {
      const std::string rel = sc.name + "-" + name;
      std::ofstream out(std::filesystem::path(out_dir) / rel,
                        std::ios::binary);
      out << content;
      rep.files.push_back({rel, hex64(fnv1a(content))});
    }
  } else {
    for (const auto& [name, content] : files) {
      rep.files.push_back({sc.name + "-" + name, hex64(fnv1a(content))});
    }
  }
  return rep;
}

namespace {

const std::map<std::string, std::string>& builtins() {
  static const std::map<std::string, std::string> table = {
      {"kepler-elliptic", R"json({
  "name": "kepler-elliptic",
  "kind": "kepler",
  "k": 1.0, "l": 1.0, "E": -0.125,
  "r0": 0.5358983848622456, "rdot0": 0.0, "periods": 1.0,
  "checks": {
    "linear_deviation": 1e-6,
    "analytic_deviation": 1e-6,
    "tau_period_rel": 1e-6,
    "energy_drift": 1e-7,
    "fixed_energy": 1e-6
  }
})json"},
      {"kepler-timemap", R"json({
  "name": "kepler-timemap",
  "kind": "kepler",
  "k": 1.0, "l": 1.0, "E": -0.125,
  "r0": 0.5358983848622456, "rdot0": 0.0, "periods": 1.0,
  "checks": { "time_map_deviation": 1e-6 }
})json"},
      {"sundman-pairs", R"json({
  "name": "sundman-pairs",
  "kind": "sundman",
  "cases": [
    { "name": "rotation", "coordinates": ["x", "y"],
      "field": ["-y", "x"], "factor": "1+x^2/2",
      "initial": [1.0, 0.0], "horizon": 6.283185307179586,
      "first_integral": "x^2+y^2" },
    { "name": "kepler-radial", "coordinates": ["r", "w"],
      "field": ["w", "1/r^3-1/r^2"], "factor": "r",
      "initial": [0.5358983848622456, 0.0], "horizon": 50.26548245743669,
      "first_integral": "w^2/2+1/(2*r^2)-1/r" },
    { "name": "oscillator", "coordinates": ["q", "v"],
      "field": ["v", "-q"], "factor": "2+sin(q)",
      "initial": [1.0, 0.0], "horizon": 6.283185307179586,
      "first_integral": "q^2+v^2" }
  ],
  "checks": { "orbit_distance": 1e-6, "integral_drift": 1e-7 }
})json"},
      {"linstruct-criteria", R"json({
  "name": "linstruct-criteria",
  "kind": "linstruct",
  "cases": [
    { "name": "rotation-linear", "coordinates": ["x", "y"],
      "field": ["-y", "x"], "check": "linearity", "tolerance": 1e-8 },
    { "name": "shear-linear", "coordinates": ["x", "y"],
      "field": ["x+2*y", "3*x-y"], "check": "linearity", "tolerance": 1e-8 },
    { "name": "quadratic-nonlinear", "coordinates": ["x"],
      "field": ["x^2"], "check": "nonlinearity", "threshold": 0.1 },
    { "name": "affine-shift", "coordinates": ["x", "y"],
      "field": ["2*x-y+1", "x+3"], "check": "affinity", "tolerance": 1e-8 },
    { "name": "quadratic-factor", "coordinates": ["x"],
      "field": ["x^2"], "check": "linearizing_factor", "tolerance": 1e-8 }
  ]
})json"},
      {"christoffel-closed-forms", R"json({
  "name": "christoffel-closed-forms",
  "kind": "geodesic",
  "cases": [
    { "name": "polar", "coordinates": ["r", "th"],
      "metric": [["1", "0"], ["0", "r^2"]],
      "points": [[1.0, 0.7], [1.3, 2.1], [0.8, 0.4]],
      "expected": [[["0", "0"], ["0", "-r"]],
                   [["0", "1/r"], ["1/r", "0"]]],
      "analytic_tolerance": 1e-8, "fd_tolerance": 1e-5 },
    { "name": "sphere", "coordinates": ["th", "ph"],
      "metric": [["1", "0"], ["0", "sin(th)^2"]],
      "points": [[0.9, 0.3], [1.2, 2.0], [2.1, 1.1]],
      "expected": [[["0", "0"], ["0", "-sin(th)*cos(th)"]],
                   [["0", "cos(th)/sin(th)"], ["cos(th)/sin(th)", "0"]]],
      "analytic_tolerance": 1e-8, "fd_tolerance": 1e-5 }
  ]
})json"},
      {"conformal-identities", R"json({
  "name": "conformal-identities",
  "kind": "conformal",
  "cases": [
    { "name": "euclidean-exp", "coordinates": ["x", "y"],
      "metric": [["1", "0"], ["0", "1"]], "phi": "x",
      "X": ["-y", "x"], "Y": ["x", "y^2"] },
    { "name": "polar-log", "coordinates": ["r", "th"],
      "metric": [["1", "0"], ["0", "r^2"]], "phi": "log(r)",
      "X": ["0.3*r", "1"], "Y": ["1", "0.2*th"],
      "sample_box": [[0.5, 2.0], [0.0, 3.0]] }
  ],
  "checks": { "christoffel": 1e-6, "christoffel_points": 100,
              "nabla": 1e-5, "nabla_points": 50 }
})json"},
      {"geodesic-reparam", R"json({
  "name": "geodesic-reparam",
  "kind": "geodesic",
  "dynamic": {
    "coordinates": ["th", "ph"],
    "metric": [["1", "0"], ["0", "sin(th)^2"]],
    "initial_q": [1.0, 0.2], "initial_v": [0.3, 0.8],
    "horizon": 10.0, "xi": 2.0, "factor": "2+sin(th)",
    "checks": { "speed_drift": 1e-7, "affine_lambda": 1e-8,
                "sundman_residual": 1e-5 }
  }
})json"},
      {"killing-pregeodesic", R"json({
  "name": "killing-pregeodesic",
  "kind": "geodesic",
  "field_cases": [
    { "name": "rotation-killing", "coordinates": ["x", "y"],
      "metric": [["1", "0"], ["0", "1"]], "field": ["-y", "x"],
      "check": "killing", "tolerance": 1e-8 },
    { "name": "constant-killing", "coordinates": ["x", "y"],
      "metric": [["2", "0.3"], ["0.3", "1"]], "field": ["1", "0"],
      "check": "autoparallel", "tolerance": 1e-6 },
    { "name": "radial-pregeodesic", "coordinates": ["x", "y"],
      "metric": [["1", "0"], ["0", "1"]], "field": ["x", "y"],
      "check": "pregeodesic_unit", "tolerance": 1e-6 },
    { "name": "radial-rescaling", "coordinates": ["x", "y"],
      "metric": [["1", "0"], ["0", "1"]], "field": ["x", "y"],
      "factor": "1", "initial": [1.0, 0.0], "horizon": 1.0,
      "check": "rescaling", "tolerance": 1e-6 }
  ]
})json"},
      {"newton-reparam", R"json({
  "name": "newton-reparam",
  "kind": "newtonian",
  "coordinates": ["x", "y"],
  "metric": [["1", "0"], ["0", "1"]],
  "field": ["-y", "x"],
  "force": ["-x", "-y"],
  "factor": "1+(x^2+y^2)/4",
  "checks": { "nabla_force": 1e-8, "sundman_newton": 1e-5 }
})json"},
      {"jacobi-harmonic", R"json({
  "name": "jacobi-harmonic",
  "kind": "jacobi",
  "coordinates": ["x", "y"],
  "metric": [["1", "0"], ["0", "1"]],
  "potential": "(x^2+y^2)/2",
  "E0": 1.0,
  "initial_q": [0.5, 0.0], "initial_v": [0.3, 1.0],
  "horizon": 6.283185307179586,
  "checks": { "orbit_distance": 1e-5, "gradient_identity": 1e-6,
              "energy_drift": 1e-7 }
})json"},
      {"jacobi-kepler", R"json({
  "name": "jacobi-kepler",
  "kind": "jacobi",
  "coordinates": ["x", "y"],
  "metric": [["1", "0"], ["0", "1"]],
  "potential": "-1/sqrt(x^2+y^2)",
  "E0": -0.125,
  "initial_q": [0.5358983848622456, 0.0], "initial_v": [0.0, 1.0],
  "horizon": 50.26548245743669,
  "checks": { "orbit_distance": 1e-5, "gradient_identity": 1e-6,
              "energy_drift": 1e-7 }
})json"}};
  return table;
}

}  // namespace

std::vector<std::string> builtin_names() {
  std::vector<std::string> names;
  for (const auto& [k, v] : builtins()) names.push_back(k);
  return names;
}

std::string builtin_scenario(const std::string& name) {
  auto it = builtins().find(name);
  if (it == builtins().end()) {
    throw DomainError("unknown builtin scenario '" + name + "'");
  }
  return it->second;
}

}  // namespace sundman
