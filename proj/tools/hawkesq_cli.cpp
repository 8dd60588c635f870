// Command-line front end: parse a JSON model config, dispatch to the
// analytic, simulation, and control routines, and emit CSV or JSON.
//
// Exit codes: 0 success, 1 config error, 2 numeric error, 3 non-convergence.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "hawkesq/applications.hpp"
#include "hawkesq/control.hpp"
#include "hawkesq/det_queue.hpp"
#include "hawkesq/generating.hpp"
#include "hawkesq/queue_moments.hpp"
#include "hawkesq/selftest.hpp"
#include "hawkesq/simulate.hpp"

using json = nlohmann::json;
using namespace hawkesq;

namespace {

// Rates may be written as exact decimal strings ("0.75") or plain numbers.
double num(const json& j, const char* what) {
  if (j.is_string()) {
    const std::string& s = j.get_ref<const std::string&>();
    size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw ConfigError(std::string("bad number: ") + s);
    return v;
  }
  if (j.is_number()) return j.get<double>();
  throw ConfigError(std::string(what) + ": expected number or decimal string");
}

double field(const json& j, const char* key) {
  if (!j.contains(key))
    throw ConfigError(std::string("missing field: ") + key);
  return num(j.at(key), key);
}

Vector vec(const json& j, const char* what) {
  if (!j.is_array()) throw ConfigError(std::string(what) + ": expected array");
  Vector v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v(i) = num(j[i], what);
  return v;
}

HawkesParams parse_arrivals(const json& cfg) {
  if (!cfg.contains("arrivals")) throw ConfigError("missing arrivals block");
  const json& a = cfg.at("arrivals");
  double l0 = a.contains("initial_intensity")
                  ? num(a.at("initial_intensity"), "initial_intensity")
                  : -1.0;  // defaults to the baseline
  return HawkesParams(field(a, "baseline"), field(a, "jump"),
                      field(a, "decay"), l0);
}

PhaseTypeDist parse_service(const json& s) {
  std::string type = s.value("type", "exponential");
  if (type == "exponential") return exponential_dist(field(s, "mu"));
  if (type == "erlang")
    return erlang(static_cast<int>(field(s, "n")), field(s, "mu"));
  if (type == "hyperexp")
    return hyperexp(vec(s.at("theta"), "theta"), vec(s.at("mus"), "mus"));
  if (type == "ph") {
    const json& rows = s.at("S");
    if (!rows.is_array() || rows.empty())
      throw ConfigError("S: expected matrix");
    Matrix S(rows.size(), rows.size());
    for (size_t i = 0; i < rows.size(); ++i) {
      Vector r = vec(rows[i], "S row");
      if (r.size() != S.cols()) throw ConfigError("S: not square");
      S.row(i) = r;
    }
    return PhaseTypeDist(S, vec(s.at("theta"), "theta"));
  }
  throw ConfigError("unknown service type: " + type);
}

std::vector<double> parse_times(const json& cfg, const char* key = "times") {
  if (!cfg.contains(key))
    throw ConfigError(std::string("missing field: ") + key);
  const json& t = cfg.at(key);
  std::vector<double> out;
  if (t.is_array()) {
    for (const auto& x : t) out.push_back(num(x, key));
  } else if (t.is_object()) {
    double start = field(t, "start"), stop = field(t, "stop");
    int pts = static_cast<int>(field(t, "points"));
    if (pts < 1) throw ConfigError("times.points must be >= 1");
    for (int i = 0; i < pts; ++i)
      out.push_back(pts == 1 ? start
                             : start + (stop - start) * i / (pts - 1));
  } else {
    throw ConfigError("times: expected array or {start, stop, points}");
  }
  if (out.empty()) throw ConfigError("times: empty grid");
  for (size_t i = 1; i < out.size(); ++i)
    if (out[i] < out[i - 1]) throw ConfigError("times: grid not sorted");
  return out;
}

json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse: ") + e.what());
  }
}

struct Out {
  std::ofstream file;
  std::ostream* os = &std::cout;
  explicit Out(const std::string& path) {
    if (path != "-") {
      file.open(path);
      if (!file) throw ConfigError("cannot open output: " + path);
      os = &file;
    }
  }
  std::ostream& stream() { return *os; }
};

std::string d2s(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct CommonOpts {
  std::string config_path;
  std::string out_path = "-";
  std::string format = "csv";
  std::string compare;
  std::uint64_t seed = 1;
  std::uint64_t reps = 10000;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool need_config = true) {
  auto* c = cmd->add_option("--config", o.config_path, "JSON config path");
  if (need_config) c->required();
  cmd->add_option("--out", o.out_path, "output path, - for stdout");
  cmd->add_option("--format", o.format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--seed", o.seed, "simulation seed");
  cmd->add_option("--reps", o.reps, "replication count");
  cmd->add_option("--compare", o.compare,
                  "sim:<n> appends simulation columns");
}

std::optional<std::size_t> compare_reps(const std::string& s) {
  if (s.empty()) return std::nullopt;
  if (s.rfind("sim:", 0) != 0)
    throw ConfigError("--compare expects sim:<n>");
  return std::stoull(s.substr(4));
}

void emit_table(Out& out, const std::string& format,
                const std::vector<std::string>& header,
                const std::vector<std::vector<double>>& rows) {
  std::ostream& os = out.stream();
  if (format == "csv") {
    for (size_t i = 0; i < header.size(); ++i)
      os << (i ? "," : "") << header[i];
    os << "\n";
    for (const auto& r : rows) {
      for (size_t i = 0; i < r.size(); ++i)
        os << (i ? "," : "") << d2s(r[i]);
      os << "\n";
    }
  } else {
    json j = json::array();
    for (const auto& r : rows) {
      json o;
      for (size_t i = 0; i < header.size(); ++i) o[header[i]] = r[i];
      j.push_back(o);
    }
    os << j.dump(2) << "\n";
  }
}

int cmd_moments(const CommonOpts& o) {
  json cfg = load_config(o.config_path);
  QueueModel m{parse_arrivals(cfg), parse_service(cfg.at("service"))};
  std::vector<double> times = parse_times(cfg);
  auto sim_n = compare_reps(o.compare);
  const int n = m.service.phases();

  std::vector<std::string> header = {"t"};
  for (int i = 0; i < n; ++i) header.push_back("mean_" + std::to_string(i));
  header.push_back("mean_total");
  for (int i = 0; i < n; ++i) header.push_back("var_" + std::to_string(i));
  header.push_back("var_total");
  for (int i = 0; i < n; ++i)
    header.push_back("cov_lq_" + std::to_string(i));
  header.push_back("fallback");
  if (sim_n)
    for (const char* c : {"sim_mean", "sim_mean_se", "z_mean", "sim_var",
                          "sim_var_se", "z_var"})
      header.push_back(c);

  Eigen::MatrixXd tab;
  if (sim_n) {
    double horizon = times.back();
    tab = selftest_detail::ph_queue_table(m, horizon, times, *sim_n, o.seed);
  }
  std::vector<std::vector<double>> rows;
  for (size_t j = 0; j < times.size(); ++j) {
    QueueMoments qm = m.arrivals.is_stable()
                          ? queue_moments(m, times[j])
                          : ode_reference(m, times[j]);
    std::vector<double> r = {times[j]};
    for (int i = 0; i < n; ++i) r.push_back(qm.mean(i));
    r.push_back(qm.mean.sum());
    for (int i = 0; i < n; ++i) r.push_back(qm.cov_qq(i, i));
    r.push_back(qm.cov_qq.sum());
    for (int i = 0; i < n; ++i) r.push_back(qm.cov_lq(i));
    r.push_back(qm.fallback_used ? 1.0 : 0.0);
    if (sim_n) {
      int c = static_cast<int>(2 * j + 1);
      EstimateReport em = mean_se(tab, c), ev = cov_se(tab, c, c);
      r.insert(r.end(), {em.point, em.std_error, em.z_score(qm.mean.sum()),
                         ev.point, ev.std_error,
                         ev.z_score(qm.cov_qq.sum())});
    }
    rows.push_back(std::move(r));
  }
  Out out(o.out_path);
  emit_table(out, o.format, header, rows);
  return 0;
}

int cmd_autocov(const CommonOpts& o) {
  json cfg = load_config(o.config_path);
  HawkesParams p = parse_arrivals(cfg);
  std::vector<double> times = parse_times(cfg);
  std::vector<double> lags = parse_times(cfg, "lags");
  std::string kind = "count";
  std::optional<PhaseTypeDist> service;
  double D = 0;
  if (cfg.contains("service")) {
    const json& s = cfg.at("service");
    if (s.value("type", "") == "deterministic") {
      kind = "deterministic";
      D = field(s, "D");
    } else {
      kind = "queue";
      service = parse_service(s);
    }
  }
  std::vector<std::vector<double>> rows;
  for (double t : times)
    for (double tau : lags) {
      double v;
      if (kind == "count") {
        v = autocov_count(p, t, tau);
      } else if (kind == "deterministic") {
        v = det_autocov({p, D}, t, tau);
      } else if (service->phases() == 1) {
        v = minf_autocov(p, -service->S(0, 0), t, tau);
      } else {
        v = autocov_q({p, *service}, t, tau).sum();
      }
      rows.push_back({t, tau, v});
    }
  Out out(o.out_path);
  emit_table(out, o.format, {"t", "tau", "value"}, rows);
  return 0;
}

int cmd_simulate(const CommonOpts& o) {
  json cfg = load_config(o.config_path);
  HawkesParams p = parse_arrivals(cfg);
  double horizon = field(cfg, "horizon");
  std::optional<PhaseTypeDist> service;
  if (cfg.contains("service")) service = parse_service(cfg.at("service"));
  const int n = service ? service->phases() : 0;

  std::vector<std::string> header = {"rep", "n_events", "last_arrival",
                                     "intensity_at_T"};
  for (int i = 0; i < n; ++i) header.push_back("q_" + std::to_string(i));
  if (service) header.push_back("q_total");

  std::vector<std::vector<double>> rows;
  for (std::uint64_t r = 0; r < o.reps; ++r) {
    std::vector<double> row = {static_cast<double>(r)};
    if (service) {
      QueuePathPH qp = simulate_queue_ph(p, *service, horizon, o.seed, r);
      row.insert(row.end(),
                 {static_cast<double>(qp.arrivals.times.size()),
                  qp.arrivals.times.empty() ? 0.0 : qp.arrivals.times.back(),
                  qp.arrivals.intensity_at(p, horizon)});
      Vector q = qp.occupancy(horizon, n);
      for (int i = 0; i < n; ++i) row.push_back(q(i));
      row.push_back(q.sum());
    } else {
      HawkesPath path = simulate_hawkes(p, horizon, o.seed, r);
      row.insert(row.end(),
                 {static_cast<double>(path.times.size()),
                  path.times.empty() ? 0.0 : path.times.back(),
                  path.intensity_at(p, horizon)});
    }
    rows.push_back(std::move(row));
  }
  Out out(o.out_path);
  emit_table(out, o.format, header, rows);
  std::cerr << json{{"command", "simulate"},
                    {"seed", o.seed},
                    {"reps", o.reps},
                    {"horizon", horizon}}
                   .dump()
            << "\n";
  return 0;
}

int cmd_cgf(const CommonOpts& o) {
  json cfg = load_config(o.config_path);
  QueueModel m{parse_arrivals(cfg), parse_service(cfg.at("service"))};
  std::vector<double> times = parse_times(cfg);
  if (!cfg.contains("delta")) throw ConfigError("missing field: delta");
  const json& dl = cfg.at("delta");
  std::vector<Vector> deltas;
  if (dl.is_array() && !dl.empty() && dl[0].is_array())
    for (const auto& d : dl) deltas.push_back(vec(d, "delta"));
  else
    deltas.push_back(vec(dl, "delta"));

  std::vector<std::string> header;
  for (int i = 0; i <= m.service.phases(); ++i)
    header.push_back("delta_" + std::to_string(i));
  header.insert(header.end(), {"t", "G", "blowup"});
  std::vector<std::vector<double>> rows;
  for (const Vector& d : deltas)
    for (double t : times) {
      std::vector<double> r(d.data(), d.data() + d.size());
      r.push_back(t);
      try {
        r.push_back(cgf(m, {d, t}));
        r.push_back(0.0);
      } catch (const CgfBlowup&) {
        r.push_back(std::numeric_limits<double>::quiet_NaN());
        r.push_back(1.0);
      }
      rows.push_back(std::move(r));
    }
  Out out(o.out_path);
  emit_table(out, o.format, header, rows);
  return 0;
}

int cmd_control(const CommonOpts& o) {
  json cfg = load_config(o.config_path);
  HawkesParams p = parse_arrivals(cfg);
  if (!cfg.contains("control")) throw ConfigError("missing control block");
  const json& c = cfg.at("control");
  ControlProblem prob(
      p, field(c, "mu_I"), field(c, "r_O"), field(c, "r_I"), field(c, "c"),
      field(c, "k"), field(c, "w"), field(c, "horizon"),
      c.contains("grid_points") ? static_cast<int>(field(c, "grid_points"))
                                : 2001);
  ControlSolution sol = solve_control(prob);
  std::vector<std::vector<double>> rows;
  for (size_t i = 0; i < sol.grid.size(); ++i)
    rows.push_back({sol.grid[i], sol.mu_star[i], sol.mean_intensity[i],
                    sol.mean_outside[i], sol.mean_inside[i], sol.gamma1[i],
                    sol.gamma2[i], sol.gamma3[i]});
  Out out(o.out_path);
  emit_table(out, o.format,
             {"t", "mu_star", "mean_intensity", "mean_outside",
              "mean_inside", "gamma1", "gamma2", "gamma3"},
             rows);
  std::cerr << json{{"command", "control"},
                    {"objective", sol.objective},
                    {"converged", sol.converged},
                    {"iterations", sol.iterations},
                    {"stationarity_residual", sol.stationarity_residual}}
                   .dump()
            << "\n";
  return sol.converged ? 0 : 3;
}

int cmd_click(const CommonOpts& o) {
  json cfg = load_config(o.config_path);
  HawkesParams p = parse_arrivals(cfg);
  if (!cfg.contains("click")) throw ConfigError("missing click block");
  const json& c = cfg.at("click");
  double mu = field(c, "mu"), mrev = field(c, "m");
  std::vector<double> times = parse_times(cfg);
  double asym = p.decay / p.gap();
  std::vector<std::vector<double>> rows;
  for (double t : times) {
    ClickImpactQuery q(p, mu, mrev, t);
    rows.push_back({t, count_gap(p, t), asym, dwell_time(q), ad_revenue(q),
                    revenue_gap(q)});
  }
  Out out(o.out_path);
  emit_table(out, o.format,
             {"t", "count_gap", "count_gap_limit", "dwell_time",
              "ad_revenue", "revenue_gap"},
             rows);
  return 0;
}

int cmd_selftest(const CommonOpts& o) {
  auto results = run_acceptance(o.seed, o.reps);
  return print_report(results) == 0 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hawkes-driven infinite-server queue analytics"};
  app.require_subcommand(1);

  CommonOpts o;
  o.seed = 90210;
  o.reps = 100000;
  auto* moments = app.add_subcommand("moments", "transient queue moments");
  auto* autocov = app.add_subcommand("autocov", "auto-covariances");
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo paths");
  auto* cgf_cmd = app.add_subcommand("cgf", "cumulant generating function");
  auto* control = app.add_subcommand("control", "admission-rate control");
  auto* click = app.add_subcommand("click-impact", "impact of one click");
  auto* selftest = app.add_subcommand("selftest", "acceptance suite");
  for (auto* c : {moments, autocov, simulate, cgf_cmd, control, click})
    add_common(c, o);
  add_common(selftest, o, false);

  CLI11_PARSE(app, argc, argv);
  try {
    if (moments->parsed()) return cmd_moments(o);
    if (autocov->parsed()) return cmd_autocov(o);
    if (simulate->parsed()) return cmd_simulate(o);
    if (cgf_cmd->parsed()) return cmd_cgf(o);
    if (control->parsed()) return cmd_control(o);
    if (click->parsed()) return cmd_click(o);
    if (selftest->parsed()) return cmd_selftest(o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const NoConvergence& e) {
    std::cerr << "no convergence: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
