// Acceptance audit: eight go/no-go checks covering gradient fidelity, gate
// algebra, oracle equivalence, graph invariants, the planted benchmark,
// reproducibility, metric consistency, and the access computation. Prints one
// PASS/FAIL line per criterion and exits nonzero when any criterion fails.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include <stationcast/stationcast.hpp>

#include "support/oracles.hpp"

namespace fs = std::filesystem;
using namespace stationcast;
using nlohmann::json;

namespace {

int g_failures = 0;

void report(int id, const char* name, bool pass, const std::string& detail) {
  std::printf("%s: criterion %d  %-24s %s\n", pass ? "PASS" : "FAIL", id, name,
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct CliResult {
  int code = -1;
  std::string out;
};

CliResult run_cli(const std::vector<std::string>& args) {
  std::string cmd = "'" STATIONCAST_CLI_PATH "'";
  for (const auto& a : args) cmd += " '" + a + "'";
  cmd += " 2>&1";
  CliResult r;
  FILE* p = ::popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[512];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof(buf), p)) > 0) r.out.append(buf, n);
  const int status = ::pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

oracles::Mat to_mat(const Tensor& t) {
  oracles::Mat m(t.rows(), t.cols());
  for (std::size_t i = 0; i < t.size(); ++i) m.v[i] = t[i];
  return m;
}

std::vector<double> to_vec(const Tensor& t) {
  std::vector<double> v(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) v[i] = t[i];
  return v;
}

oracles::GruWeights weights_of(const nn::GruCell& cell) {
  oracles::GruWeights w;
  w.w_ir = to_mat(cell.w_ir->value);
  w.w_iz = to_mat(cell.w_iz->value);
  w.w_in = to_mat(cell.w_in->value);
  w.w_hr = to_mat(cell.w_hr->value);
  w.w_hz = to_mat(cell.w_hz->value);
  w.w_hn = to_mat(cell.w_hn->value);
  w.b_ir = to_vec(cell.b_ir->value);
  w.b_iz = to_vec(cell.b_iz->value);
  w.b_in = to_vec(cell.b_in->value);
  w.b_hr = to_vec(cell.b_hr->value);
  w.b_hz = to_vec(cell.b_hz->value);
  w.b_hn = to_vec(cell.b_hn->value);
  return w;
}

// Scalar GRU replay that also records the gate range and candidate state.
struct GruProbe {
  oracles::Mat out, cand;
  double gate_min = 1.0, gate_max = 0.0;
};

GruProbe gru_probe(const oracles::GruWeights& w, const oracles::Mat& x,
                   const oracles::Mat& h) {
  const std::size_t rows = x.rows, hidden = h.cols;
  auto affine = [&](const oracles::Mat& in, const oracles::Mat& weight,
                    const std::vector<double>& bias, std::size_t r, std::size_t u) {
    double s = bias[u];
    for (std::size_t k = 0; k < in.cols; ++k) s += in.at(r, k) * weight.at(k, u);
    return s;
  };
  GruProbe p;
  p.out = oracles::Mat(rows, hidden);
  p.cand = oracles::Mat(rows, hidden);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t u = 0; u < hidden; ++u) {
      const double rg = 1.0 / (1.0 + std::exp(-(affine(x, w.w_ir, w.b_ir, r, u) +
                                                affine(h, w.w_hr, w.b_hr, r, u))));
      const double zg = 1.0 / (1.0 + std::exp(-(affine(x, w.w_iz, w.b_iz, r, u) +
                                                affine(h, w.w_hz, w.b_hz, r, u))));
      const double ng = std::tanh(affine(x, w.w_in, w.b_in, r, u) +
                                  rg * affine(h, w.w_hn, w.b_hn, r, u));
      p.gate_min = std::min({p.gate_min, rg, zg});
      p.gate_max = std::max({p.gate_max, rg, zg});
      p.cand.at(r, u) = ng;
      p.out.at(r, u) = ng + zg * (h.at(r, u) - ng);
    }
  }
  return p;
}

Tensor random_matrix(std::size_t r, std::size_t c, Rng& rng, double lo, double hi) {
  Tensor t(r, c);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

// -------------------------------------------------------------------------
// criterion 1: analytic gradients of the full two-layer gated model agree
// with central finite differences on a 4-station instance in under a minute

void criterion_1() {
  const auto t0 = std::chrono::steady_clock::now();

  nn::GgcnnConfig cfg;
  cfg.features = 8;
  cfg.hidden1 = 8;
  cfg.hidden2 = 8;
  cfg.readout_hidden = {8};
  cfg.steps1 = 4;
  cfg.steps2 = 3;
  Rng rng(42);
  nn::GgcnnModel model(cfg, rng);

  const std::size_t n = 4;
  Tensor adj(n, n);
  for (std::size_t i = 0; i < n; ++i) adj(i, i) = 1.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double w = rng.uniform();
      adj(i, j) = w;
      adj(j, i) = w;
    }

  train::Sample sample;
  sample.op = graph::propagation_operator(adj);
  sample.x = random_matrix(n, cfg.features, rng, 0.0, 1.0);
  sample.y = random_matrix(n, 2, rng, 0.0, 1.0);

  train::GradCheckReport rep = train::grad_check(model, sample);
  const double secs = seconds_since(t0);

  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "worst rel err %.3e (limit 1e-4), %.1f s (limit 60 s)", rep.worst,
                secs);
  report(1, "gradient fidelity", rep.pass() && secs < 60.0, buf);
}

// -------------------------------------------------------------------------
// criterion 2: zeroed gates halve the previous state exactly, and with random
// weights the update stays a convex blend of candidate and previous state

void criterion_2() {
  const int instances = 1000;
  double worst_zero = 0.0, worst_match = 0.0, worst_hull = 0.0;
  double gate_lo = 1.0, gate_hi = 0.0;
  bool ok = true;

  for (int i = 0; i < instances && ok; ++i) {
    Rng rng(5000 + i);
    const std::size_t rows = 1 + rng.index(3);
    const std::size_t hidden = 2 + rng.index(7);
    const std::size_t feat = 1 + rng.index(hidden);

    Tensor x = random_matrix(rows, feat, rng, -2.0, 2.0);
    Tensor h = random_matrix(rows, hidden, rng, -2.0, 2.0);

    nn::GruCell zeroed(feat, hidden, rng);
    nn::NamedParams zp;
    zeroed.collect(zp, "z");
    for (auto& [name, p] : zp) p->value.fill(0.0);
    Tensor hz = zeroed.forward(ad::constant(x), ad::constant(h))->value;
    for (std::size_t k = 0; k < hz.size(); ++k)
      worst_zero = std::max(worst_zero, std::fabs(hz[k] - 0.5 * h[k]));

    nn::GruCell cell(feat, hidden, rng);
    nn::NamedParams cp;
    cell.collect(cp, "c");
    for (auto& [name, p] : cp)
      for (std::size_t k = 0; k < p->value.size(); ++k)
        p->value[k] = rng.uniform(-0.8, 0.8);

    GruProbe probe = gru_probe(weights_of(cell), to_mat(x), to_mat(h));
    gate_lo = std::min(gate_lo, probe.gate_min);
    gate_hi = std::max(gate_hi, probe.gate_max);

    Tensor hl = cell.forward(ad::constant(x), ad::constant(h))->value;
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t u = 0; u < hidden; ++u) {
        worst_match = std::max(
            worst_match, std::fabs(hl(r, u) - probe.out.at(r, u)));
        const double lo = std::min(probe.cand.at(r, u), h(r, u));
        const double hi = std::max(probe.cand.at(r, u), h(r, u));
        const double excess =
            std::max(lo - hl(r, u), hl(r, u) - hi);
        worst_hull = std::max(worst_hull, excess);
      }
    }
    ok = worst_zero <= 1e-12 && worst_match <= 1e-12 && worst_hull <= 1e-12 &&
         gate_lo > 0.0 && gate_hi < 1.0;
  }

  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "%d instances; halving dev %.2e, oracle dev %.2e, hull excess "
                "%.2e, gates in (%.3f, %.3f)",
                instances, worst_zero, worst_match, worst_hull, gate_lo, gate_hi);
  report(2, "gate algebra", ok, buf);
}

// -------------------------------------------------------------------------
// criterion 3: metrics, correlation, and least squares agree with
// independently written reference implementations

void criterion_3() {
  const int instances = 120;
  double worst_metric = 0.0, worst_pcc = 0.0, worst_ols = 0.0;
  bool ok = true;

  for (int i = 0; i < instances && ok; ++i) {
    Rng rng(9000 + i);

    const std::size_t n = 2 + rng.index(120);
    std::vector<double> pred(n), actual(n);
    for (std::size_t k = 0; k < n; ++k) {
      actual[k] = rng.uniform(-4.0, 4.0);
      pred[k] = actual[k] + rng.uniform(-1.0, 1.0);
    }
    metrics::SeriesMetrics m = metrics::series_metrics(pred, actual);
    worst_metric = std::max(worst_metric,
                            std::fabs(m.mse - oracles::mse_flat(pred, actual)));
    worst_metric = std::max(worst_metric,
                            std::fabs(m.rmse - oracles::rmse_flat(pred, actual)));
    auto r2o = oracles::r2_flat(pred, actual);
    if (m.r2.has_value() != r2o.has_value()) ok = false;
    if (m.r2 && r2o) worst_metric = std::max(worst_metric, std::fabs(*m.r2 - *r2o));

    const std::size_t len = 2 + rng.index(200);
    std::vector<double> xs(len), ys(len);
    for (std::size_t k = 0; k < len; ++k) {
      xs[k] = rng.uniform(0.0, 10.0);
      ys[k] = 0.3 * xs[k] + rng.uniform(0.0, 10.0);
    }
    auto rl = graph::pearson(xs, ys);
    auto ro = oracles::pearson_moments(xs, ys);
    if (rl.has_value() != ro.has_value()) ok = false;
    if (rl && ro) worst_pcc = std::max(worst_pcc, std::fabs(*rl - *ro));

    const std::size_t f = 1 + rng.index(6);
    const std::size_t rows = f + 5 + rng.index(40);
    const std::size_t outs = 1 + rng.index(3);
    Tensor x = random_matrix(rows, f, rng, -3.0, 3.0);
    Tensor y(rows, outs);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < outs; ++c)
        y(r, c) = rng.uniform(-2.0, 2.0) + 0.5 * x(r, 0);
    baselines::OlsModel lib = baselines::ols_fit(x, y);
    if (lib.ridged) ok = false;
    oracles::Mat ref = oracles::least_squares(to_mat(x), to_mat(y));
    for (std::size_t k = 0; k < f; ++k)
      for (std::size_t c = 0; c < outs; ++c)
        worst_ols = std::max(worst_ols,
                             std::fabs(lib.coef(k, c) - ref.at(k, c)));
    for (std::size_t c = 0; c < outs; ++c)
      worst_ols = std::max(worst_ols, std::fabs(lib.intercept[c] - ref.at(f, c)));

    ok = ok && worst_metric <= 1e-12 && worst_pcc <= 1e-12 && worst_ols <= 1e-8;
  }

  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "%d instances; metrics dev %.2e (limit 1e-12), pcc dev %.2e "
                "(limit 1e-12), ols dev %.2e (limit 1e-8)",
                instances, worst_metric, worst_pcc, worst_ols);
  report(3, "oracle equivalence", ok, buf);
}

// -------------------------------------------------------------------------
// criterion 4: adjacency symmetry, operator spectrum inside [-1, 1],
// permutation equivariance, and the dynamic-to-static reduction

void criterion_4() {
  const int cases = 200;
  double worst_eig = 0.0, worst_perm = 0.0, worst_reduce = 0.0;
  bool ok = true;

  for (int i = 0; i < cases && ok; ++i) {
    Rng rng(13000 + i);
    const std::size_t n = 3 + rng.index(6);
    const std::size_t t_slots = 20 + rng.index(41);

    ingest::DemandTensor demand;
    demand.start_ts = 0;
    demand.values = Tensor({t_slots, n, 2});
    for (std::size_t k = 0; k < demand.values.size(); ++k)
      demand.values[k] = std::floor(rng.uniform() * 12.0);

    Tensor adj = graph::static_adjacency(demand);
    for (std::size_t r = 0; r < n && ok; ++r) {
      if (std::fabs(adj(r, r) - 1.0) > 0.0) ok = false;
      for (std::size_t c = 0; c < n; ++c) {
        if (adj(r, c) != adj(c, r)) ok = false;
        if (adj(r, c) < 0.0 || adj(r, c) > 1.0 + 1e-12) ok = false;
      }
    }

    Tensor op = graph::propagation_operator(adj);
    for (std::size_t r = 0; r < n && ok; ++r)
      for (std::size_t c = 0; c < n; ++c)
        if (op(r, c) != op(c, r)) ok = false;
    for (double ev : oracles::symmetric_eigenvalues(to_mat(op)))
      worst_eig = std::max(worst_eig, std::fabs(ev) - 1.0);

    std::vector<std::size_t> perm(n);
    for (std::size_t k = 0; k < n; ++k) perm[k] = k;
    for (std::size_t k = n; k > 1; --k)
      std::swap(perm[k - 1], perm[rng.index(k)]);
    Tensor adj_p(n, n);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c) adj_p(perm[r], perm[c]) = adj(r, c);
    Tensor op_p = graph::propagation_operator(adj_p);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c)
        worst_perm = std::max(
            worst_perm, std::fabs(op_p(perm[r], perm[c]) - op(r, c)));

    graph::AdjacencySeries dyn = graph::dynamic_adjacency(demand, t_slots);
    const Tensor& last = dyn.matrices.back();
    for (std::size_t k = 0; k < last.size(); ++k)
      worst_reduce = std::max(worst_reduce, std::fabs(last[k] - adj[k]));
    for (std::size_t k = 0; k < last.size(); ++k)
      if (dyn.matrices[0][k] != dyn.matrices[t_slots - 1][k]) ok = false;

    ok = ok && worst_eig <= 1e-6 && worst_perm <= 1e-12 && worst_reduce <= 1e-9;
  }

  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "%d cases; eig excess %.2e (limit 1e-6), perm dev %.2e (limit "
                "1e-12), reduction dev %.2e (limit 1e-9)",
                cases, worst_eig, worst_perm, worst_reduce);
  report(4, "graph invariants", ok, buf);
}

// -------------------------------------------------------------------------
// criterion 5: the planted benchmark at its published settings orders the
// model ladder correctly and the gated model reaches 0.6 aggregate R^2

std::map<std::string, double> scaled_r2_by_model(const fs::path& report_path) {
  std::map<std::string, double> out;
  std::ifstream in(report_path);
  if (!in) return out;
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) return out;
  for (const auto& rep : doc.at("reports")) {
    if (rep.at("space").get<std::string>() != "scaled") continue;
    const auto& r2 = rep.at("aggregate").at("r2");
    if (!r2.is_null()) out[rep.at("model").get<std::string>()] = r2.get<double>();
  }
  return out;
}

void criterion_5(const fs::path& wd) {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  std::string note;

  for (const char* stage : {"synth", "graph", "train", "eval"}) {
    CliResult r = run_cli({"--workdir", wd.string(), stage});
    if (r.code != 0) {
      ok = false;
      note = std::string(stage) + " exited " + std::to_string(r.code);
      break;
    }
  }
  const double secs = seconds_since(t0);

  char buf[240];
  if (ok) {
    std::map<std::string, double> r2 = scaled_r2_by_model(wd / "eval_report.json");
    const std::vector<std::string> ladder = {"persistence", "ols", "mlp", "gcn",
                                             "ggcnn"};
    for (const auto& name : ladder)
      if (!r2.count(name)) {
        ok = false;
        note = "missing " + name + " report";
      }
    if (ok) {
      for (std::size_t i = 1; i < ladder.size(); ++i)
        if (r2[ladder[i]] < r2[ladder[i - 1]] - 0.02) ok = false;
      if (r2["ggcnn"] < 0.6) ok = false;
      if (secs >= 900.0) ok = false;
      std::snprintf(buf, sizeof(buf),
                    "persistence %.4f <= ols %.4f <= mlp %.4f <= gcn %.4f <= "
                    "ggcnn %.4f (tol -0.02, floor 0.6), %.0f s (limit 900 s)",
                    r2["persistence"], r2["ols"], r2["mlp"], r2["gcn"],
                    r2["ggcnn"], secs);
    }
  }
  if (!note.empty())
    std::snprintf(buf, sizeof(buf), "%s after %.0f s", note.c_str(), secs);
  report(5, "planted benchmark", ok, buf);
}

// -------------------------------------------------------------------------
// criterion 6: two fresh end-to-end runs with the same seed produce byte
// identical checkpoints, logs, and reports

void criterion_6(const fs::path& a, const fs::path& b) {
  const std::vector<std::string> overrides = {
      "--set", "synth.stations=8",
      "--set", "synth.slots=400",
      "--set", "graph.window_slots=72",
      "--set", "model.hidden1=16",
      "--set", "model.hidden2=16",
      "--set", "model.readout_hidden=16",
      "--set", "train.epochs=8",
      "--set", "eval.models=persistence,ols,ggcnn",
  };

  bool ok = true;
  std::string note;
  for (const fs::path& wd : {a, b}) {
    for (const char* stage : {"synth", "graph", "train", "eval"}) {
      std::vector<std::string> args = {"--workdir", wd.string()};
      args.insert(args.end(), overrides.begin(), overrides.end());
      args.push_back(stage);
      CliResult r = run_cli(args);
      if (r.code != 0) {
        ok = false;
        note = std::string(stage) + " exited " + std::to_string(r.code);
        break;
      }
    }
    if (!ok) break;
  }

  const std::vector<std::string> files = {
      "demand.bin",        "features.bin",   "registry.csv",
      "scaler.json",       "planted_graph.bin", "adjacency.bin",
      "checkpoint.bin",    "train_log.csv",  "train_summary.json",
      "eval_report.json",  "eval_report.txt"};
  std::size_t compared = 0;
  if (ok) {
    for (const std::string& f : files) {
      const std::string ba = serialize::read_file_bytes((a / f).string());
      const std::string bb = serialize::read_file_bytes((b / f).string());
      if (ba != bb) {
        ok = false;
        note = f + " differs between runs";
        break;
      }
      ++compared;
    }
  }

  char buf[200];
  if (ok)
    std::snprintf(buf, sizeof(buf), "%zu artifacts byte-identical across runs",
                  compared);
  else
    std::snprintf(buf, sizeof(buf), "%s", note.c_str());
  report(6, "reproducibility", ok, buf);
}

// -------------------------------------------------------------------------
// criterion 7: every published report keeps rmse^2 equal to mse

void criterion_7(const std::vector<fs::path>& report_paths) {
  bool ok = true;
  double worst = 0.0;
  std::size_t reports = 0;
  std::string note;

  auto check_series = [&](const json& s) {
    const double mse = s.at("mse").get<double>();
    const double rmse = s.at("rmse").get<double>();
    worst = std::max(worst, std::fabs(rmse * rmse - mse));
  };

  for (const fs::path& p : report_paths) {
    std::ifstream in(p);
    if (!in) {
      ok = false;
      note = p.filename().string() + " missing";
      continue;
    }
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded()) {
      ok = false;
      note = p.filename().string() + " unparseable";
      continue;
    }
    for (const auto& rep : doc.at("reports")) {
      check_series(rep.at("aggregate"));
      for (const auto& s : rep.at("per_station")) check_series(s);
      ++reports;
    }
  }
  ok = ok && reports > 0 && worst <= 1e-9;

  char buf[200];
  if (note.empty())
    std::snprintf(buf, sizeof(buf),
                  "%zu reports; max |rmse^2 - mse| %.2e (limit 1e-9)", reports,
                  worst);
  else
    std::snprintf(buf, sizeof(buf), "%s", note.c_str());
  report(7, "metric consistency", ok, buf);
}

// -------------------------------------------------------------------------
// criterion 8: the access computation matches a flat-scan reference and
// keeps its monotonicity, additivity, and inclusive-boundary behavior

void criterion_8() {
  const int configs = 500;
  double worst = 0.0;
  bool ok = true;

  for (int i = 0; i < configs && ok; ++i) {
    Rng rng(21000 + i);
    const double lat = rng.uniform(-60.0, 60.0);
    const double lon = rng.uniform(-179.0, 179.0);
    const std::size_t n_sites = rng.index(41);

    std::vector<access::OpportunitySite> sites;
    std::vector<oracles::Site> ref_sites;
    for (std::size_t s = 0; s < n_sites; ++s) {
      access::OpportunitySite o;
      o.lat = lat + rng.uniform(-0.03, 0.03);
      o.lon = lon + rng.uniform(-0.03, 0.03);
      o.weight = rng.uniform(0.0, 100.0);
      sites.push_back(o);
      ref_sites.push_back({o.lat, o.lon, o.weight});
    }

    access::AccessOptions opts;
    opts.walking_speed_kmh = 2.0 + rng.uniform() * 4.0;
    opts.budget_minutes = (rng.index(10) == 0) ? 0.0 : rng.uniform(0.0, 30.0);
    const double reach = opts.walking_speed_kmh * opts.budget_minutes / 60.0;

    const double lib = access::cumulative_access(lat, lon, sites, opts);
    const double ref = oracles::access_flat_scan(lat, lon, ref_sites, reach);
    worst = std::max(worst, std::fabs(lib - ref));

    access::AccessOptions wider = opts;
    wider.budget_minutes += rng.uniform(0.0, 10.0);
    if (access::cumulative_access(lat, lon, sites, wider) < lib) ok = false;

    const std::size_t half = n_sites / 2;
    std::vector<access::OpportunitySite> first(sites.begin(), sites.begin() + half);
    std::vector<access::OpportunitySite> second(sites.begin() + half, sites.end());
    const double split = access::cumulative_access(lat, lon, first, opts) +
                         access::cumulative_access(lat, lon, second, opts);
    worst = std::max(worst, std::fabs(split - lib));

    ok = ok && worst <= 1e-9;
  }

  // exact-boundary construction: pick a budget whose derived reach equals the
  // site distance bit for bit, then shrink it by one ulp to flip the outcome
  bool boundary_ok = false;
  {
    const double lat = 0.0, lon = 10.0;
    // reach = (speed * budget) / 60 with speed 2 and budget x/2 evaluates to
    // x / 60 exactly, so hunt for a double x whose quotient hits the site
    // distance bit for bit; when the quotient skips it, nudge the site
    for (int attempt = 0; attempt < 50 && !boundary_ok; ++attempt) {
      access::OpportunitySite site;
      site.lat = 0.0;
      site.lon = 10.01 + static_cast<double>(attempt) * 3e-13;
      site.weight = 5.0;
      const double d = access::haversine_km(lat, lon, site.lat, site.lon);

      double x = 60.0 * d;
      while (x / 60.0 > d) x = std::nextafter(x, 0.0);
      while (x / 60.0 < d) x = std::nextafter(x, HUGE_VAL);
      if (x / 60.0 != d) continue;  // quotient skipped d for this distance

      access::AccessOptions exact;
      exact.walking_speed_kmh = 2.0;
      exact.budget_minutes = x / 2.0;
      access::AccessOptions below = exact;
      below.budget_minutes = std::nextafter(exact.budget_minutes, 0.0);
      boundary_ok =
          access::cumulative_access(lat, lon, {site}, exact) == site.weight &&
          access::cumulative_access(lat, lon, {site}, below) == 0.0;
    }

    access::AccessOptions zero;
    zero.budget_minutes = 0.0;
    access::OpportunitySite colocated{lat, lon, 3.0};
    if (access::cumulative_access(lat, lon, {colocated}, zero) != 3.0)
      boundary_ok = false;
  }
  ok = ok && boundary_ok;

  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "%d configs; flat-scan dev %.2e (limit 1e-9), boundary %s",
                configs, worst, boundary_ok ? "inclusive" : "VIOLATED");
  report(8, "access computation", ok, buf);
}

}  // namespace

int main() {
  const fs::path root =
      fs::temp_directory_path() / ("stct_accept_" + std::to_string(::getpid()));
  fs::remove_all(root);
  fs::create_directories(root);

  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5(root / "bench");
  criterion_6(root / "rep_a", root / "rep_b");
  criterion_7({root / "bench" / "eval_report.json",
               root / "rep_a" / "eval_report.json"});
  criterion_8();

  fs::remove_all(root);
  std::printf("%d/8 criteria passed\n", 8 - g_failures);
  return g_failures;
}
