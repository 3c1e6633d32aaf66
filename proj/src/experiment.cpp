#include "bvi/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "bvi/divergences.hpp"
#include "bvi/error.hpp"
#include "bvi/metrics.hpp"
#include "bvi/serialization.hpp"

namespace bvi {

using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw ConfigError(path + ": " + msg);
}

double get_number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

int get_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  return j.get<int>();
}

bool get_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) fail(path, "expected true or false");
  return j.get<bool>();
}

std::string get_string(const json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

template <class T, class F>
std::vector<T> get_list(const json& j, const std::string& path, F&& item) {
  std::vector<T> out;
  if (j.is_array()) {
    if (j.empty()) fail(path, "grid must not be empty");
    for (std::size_t i = 0; i < j.size(); ++i) {
      out.push_back(item(j[i], path + "[" + std::to_string(i) + "]"));
    }
  } else {
    out.push_back(item(j, path));
  }
  return out;
}

void check_keys(const json& j, const std::string& path, const std::set<std::string>& allowed) {
  if (!j.is_object()) fail(path.empty() ? "config" : path, "expected an object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) fail(path.empty() ? key : path + "." + key, "unknown field");
  }
}

ExperimentKind experiment_from_string(const std::string& s, const std::string& path) {
  if (s == "single_run") return ExperimentKind::SingleRun;
  if (s == "gaussian_sweep") return ExperimentKind::GaussianSweep;
  if (s == "sensitivity") return ExperimentKind::Sensitivity;
  if (s == "regression") return ExperimentKind::Regression;
  fail(path, "unknown experiment '" + s +
                 "' (expected single_run, gaussian_sweep, sensitivity or regression)");
}

AlgorithmKind algorithm_from_string(const std::string& s, const std::string& path) {
  if (s == "prmm_exact") return AlgorithmKind::PrmmExact;
  if (s == "mc_prmm") return AlgorithmKind::McPrmm;
  if (s == "rmm") return AlgorithmKind::Rmm;
  if (s == "vrb") return AlgorithmKind::Vrb;
  fail(path, "unknown algorithm '" + s + "' (expected prmm_exact, mc_prmm, rmm or vrb)");
}

RegularizerSpec parse_regularizer(const json& j, const std::string& path) {
  check_keys(j, path, {"kind", "b1", "b2", "eta", "skip_index_0"});
  RegularizerSpec r;
  if (j.contains("kind")) r.kind = get_string(j["kind"], path + ".kind");
  if (r.kind == "null") return r;
  if (r.kind == "eigen_box") {
    if (j.contains("b1")) r.b1 = get_number(j["b1"], path + ".b1");
    if (j.contains("b2")) r.b2 = get_number(j["b2"], path + ".b2");
    if (!(r.b1 > 0.0 && r.b1 <= r.b2)) fail(path, "eigen_box needs 0 < b1 <= b2");
    return r;
  }
  if (r.kind == "sparse_mean_l1") {
    if (j.contains("eta")) {
      r.eta = get_list<double>(j["eta"], path + ".eta",
                               [](const json& v, const std::string& p) { return get_number(v, p); });
    }
    for (double e : r.eta) {
      if (!(e >= 0.0)) fail(path + ".eta", "weights must be >= 0");
    }
    if (j.contains("skip_index_0")) r.skip_index_0 = get_bool(j["skip_index_0"], path + ".skip_index_0");
    return r;
  }
  fail(path + ".kind", "unknown regularizer '" + r.kind + "' (expected null, eigen_box or sparse_mean_l1)");
}

json regularizer_json(const RegularizerSpec& r) {
  json j;
  j["kind"] = r.kind;
  if (r.kind == "eigen_box") {
    j["b1"] = r.b1;
    j["b2"] = r.b2;
  } else if (r.kind == "sparse_mean_l1") {
    j["eta"] = r.eta;
    j["skip_index_0"] = r.skip_index_0;
  }
  return j;
}

MethodSpec method(std::string label, AlgorithmKind alg, std::optional<double> alpha = {},
                  std::optional<double> tau = {}, RegularizerSpec reg = {}) {
  return MethodSpec{std::move(label), alg, alpha, tau, std::move(reg)};
}

void apply_defaults(ExperimentConfig& c) {
  switch (c.experiment) {
    case ExperimentKind::SingleRun:
      c.methods = {method("mc_prmm", AlgorithmKind::McPrmm)};
      c.alphas = {0.5};
      c.taus = {0.5};
      c.dims = {2};
      c.kappas = {10.0};
      c.n_replicates = 1;
      break;
    case ExperimentKind::GaussianSweep:
      c.methods = {method("mc_prmm", AlgorithmKind::McPrmm)};
      c.alphas = {0.25, 0.5, 1.0};
      c.taus = {0.1, 0.5, 1.0};
      c.dims = {2, 5};
      c.kappas = {1.0, 10.0};
      c.n_replicates = 10;
      break;
    case ExperimentKind::Sensitivity:
      c.methods = {method("mc_prmm", AlgorithmKind::McPrmm), method("vrb", AlgorithmKind::Vrb)};
      c.alphas = {0.5};
      c.taus = {1e-4, 1e-3, 1e-2, 1e-1, 0.5, 1.0};
      c.dims = {5};
      c.kappas = {10.0};
      c.n_replicates = 20;
      break;
    case ExperimentKind::Regression: {
      c.family = FamilyKind::DiagGaussian;
      c.target = "regression";
      RegularizerSpec l1;
      l1.kind = "sparse_mean_l1";
      l1.eta = {1.0};
      l1.skip_index_0 = true;
      c.methods = {method("prmm", AlgorithmKind::McPrmm, {}, 0.1, l1),
                   method("rmm", AlgorithmKind::Rmm, {}, 0.1),
                   method("vrb", AlgorithmKind::Vrb, {}, 1e-3)};
      c.alphas = {1.0};
      c.taus = {0.1};
      c.dims = {5};
      c.kappas = {1.0};
      c.n_replicates = 20;
      break;
    }
  }
}

bool is_prmm(AlgorithmKind a) { return a != AlgorithmKind::Vrb; }

void validate(const ExperimentConfig& c) {
  if (c.methods.empty()) fail("methods", "at least one method is required");
  if (c.n_replicates < 1) fail("n_replicates", "must be >= 1");
  if (c.N < 2) fail("N", "must be >= 2");
  if (c.K < 0) fail("K", "must be >= 0");
  if (c.n_beta < 1) fail("n_beta", "must be >= 1");
  if (!(c.stop_tol >= 0.0)) fail("stop_tol", "must be >= 0");
  if (!(c.sigma0 > 0.0)) fail("init.sigma0", "must be > 0");
  if (!std::isfinite(c.mu0)) fail("init.mu0", "must be finite");
  if (c.family == FamilyKind::CenteredGaussian1D) {
    fail("family", "experiments use full_gaussian or diag_gaussian");
  }
  for (std::size_t i = 0; i < c.alphas.size(); ++i) {
    if (!(c.alphas[i] > 0.0)) fail("alphas[" + std::to_string(i) + "]", "alpha must be > 0");
  }
  for (std::size_t i = 0; i < c.dims.size(); ++i) {
    if (c.dims[i] < 1) fail("dims[" + std::to_string(i) + "]", "must be >= 1");
  }
  for (std::size_t i = 0; i < c.kappas.size(); ++i) {
    if (!(c.kappas[i] >= 1.0)) fail("kappas[" + std::to_string(i) + "]", "kappa must be >= 1");
  }
  for (int r : c.replicates) {
    if (r < 0) fail("replicates", "indices must be >= 0");
  }
  if (c.target == "regression") {
    const RegressionSpec& s = c.regression;
    if (s.d < 1 || s.J < 1 || s.J_test < 1) fail("target", "d, J and J_test must be >= 1");
    if (!(s.sigma2 > 0.0)) fail("target.sigma2", "must be > 0");
    if (!(s.s > 0.0)) fail("target.s", "must be > 0");
    if (!(s.rho > 0.0 && s.rho < 1.0)) fail("target.rho", "must lie strictly between 0 and 1");
  } else if (c.target != "gaussian") {
    fail("target.kind", "expected gaussian or regression");
  }
  for (std::size_t m = 0; m < c.methods.size(); ++m) {
    const MethodSpec& ms = c.methods[m];
    const std::string path = "methods[" + std::to_string(m) + "]";
    for (std::size_t i = 0; i < c.methods.size(); ++i) {
      if (i != m && c.methods[i].label == ms.label) fail(path + ".label", "labels must be unique");
    }
    if (ms.tau) {
      if (!(*ms.tau > 0.0)) fail(path + ".tau", "step size must be > 0");
      if (is_prmm(ms.algorithm) && *ms.tau > 1.0) {
        fail(path + ".tau", "PRMM step sizes must lie in (0, 1]");
      }
    } else {
      for (std::size_t i = 0; i < c.taus.size(); ++i) {
        const std::string tp = "taus[" + std::to_string(i) + "]";
        if (!(c.taus[i] > 0.0)) fail(tp, "step size must be > 0");
        if (is_prmm(ms.algorithm) && c.taus[i] > 1.0) {
          fail(tp, "PRMM step sizes must lie in (0, 1] (used by " + path + ")");
        }
      }
    }
    if (ms.alpha && !(*ms.alpha > 0.0)) fail(path + ".alpha", "alpha must be > 0");
    if (ms.algorithm == AlgorithmKind::PrmmExact) {
      if (c.target != "gaussian" || c.family != FamilyKind::FullGaussian) {
        fail(path + ".algorithm", "prmm_exact needs a gaussian target and the full_gaussian family");
      }
      const std::vector<double> as = ms.alpha ? std::vector<double>{*ms.alpha} : c.alphas;
      for (double a : as) {
        if (a > 1.0) fail(ms.alpha ? path + ".alpha" : "alphas", "prmm_exact needs alpha <= 1");
      }
    }
    const std::string& rk = ms.regularizer.kind;
    if (rk != "null" && !is_prmm(ms.algorithm)) {
      fail(path + ".regularizer", "vrb takes no regularizer");
    }
    if (rk != "null" && ms.algorithm == AlgorithmKind::Rmm) {
      fail(path + ".regularizer", "rmm takes no regularizer (use mc_prmm)");
    }
    if (rk == "eigen_box" && c.family != FamilyKind::FullGaussian) {
      fail(path + ".regularizer", "eigen_box needs the full_gaussian family");
    }
    if (rk == "sparse_mean_l1" && c.family != FamilyKind::DiagGaussian) {
      fail(path + ".regularizer", "sparse_mean_l1 needs the diag_gaussian family");
    }
  }
}

std::string short_number(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::SingleRun:
      return "single_run";
    case ExperimentKind::GaussianSweep:
      return "gaussian_sweep";
    case ExperimentKind::Sensitivity:
      return "sensitivity";
    case ExperimentKind::Regression:
      return "regression";
  }
  return "unknown";
}

std::string to_string(AlgorithmKind kind) {
  switch (kind) {
    case AlgorithmKind::PrmmExact:
      return "prmm_exact";
    case AlgorithmKind::McPrmm:
      return "mc_prmm";
    case AlgorithmKind::Rmm:
      return "rmm";
    case AlgorithmKind::Vrb:
      return "vrb";
  }
  return "unknown";
}

std::vector<int> ExperimentConfig::replicate_ids() const {
  if (!replicates.empty()) return replicates;
  std::vector<int> ids(n_replicates);
  for (int r = 0; r < n_replicates; ++r) ids[r] = r;
  return ids;
}

ExperimentConfig parse_config(const json& j) {
  check_keys(j, "", {"experiment", "family", "target", "methods", "alphas", "taus", "dims",
                     "kappas", "N", "K", "n_replicates", "seed", "replicates", "init",
                     "stop_tol", "strict", "n_beta", "write_traces", "output_dir"});
  if (!j.contains("experiment")) fail("experiment", "required field is missing");
  ExperimentConfig c;
  c.experiment = experiment_from_string(get_string(j["experiment"], "experiment"), "experiment");
  apply_defaults(c);

  auto num = [](const json& v, const std::string& p) { return get_number(v, p); };
  auto integer = [](const json& v, const std::string& p) { return get_int(v, p); };

  if (j.contains("family")) {
    const std::string f = get_string(j["family"], "family");
    try {
      c.family = family_kind_from_string(f);
    } catch (const InvalidInput&) {
      fail("family", "unknown family '" + f + "'");
    }
  }
  if (j.contains("target")) {
    const json& t = j["target"];
    check_keys(t, "target",
               {"kind", "d", "kappa", "mean_box", "J", "J_test", "sigma2", "s", "rho"});
    if (t.contains("kind")) c.target = get_string(t["kind"], "target.kind");
    if (c.target == "regression") {
      c.family = j.contains("family") ? c.family : FamilyKind::DiagGaussian;
      if (t.contains("d")) c.regression.d = get_int(t["d"], "target.d");
      if (t.contains("J")) c.regression.J = get_int(t["J"], "target.J");
      if (t.contains("J_test")) c.regression.J_test = get_int(t["J_test"], "target.J_test");
      if (t.contains("sigma2")) c.regression.sigma2 = get_number(t["sigma2"], "target.sigma2");
      if (t.contains("s")) c.regression.s = get_number(t["s"], "target.s");
      if (t.contains("rho")) c.regression.rho = get_number(t["rho"], "target.rho");
      if (t.contains("kappa") || t.contains("mean_box")) {
        fail("target", "kappa and mean_box apply to gaussian targets only");
      }
    } else {
      if (t.contains("d")) c.dims = get_list<int>(t["d"], "target.d", integer);
      if (t.contains("kappa")) c.kappas = get_list<double>(t["kappa"], "target.kappa", num);
      if (t.contains("mean_box")) c.mean_box = get_number(t["mean_box"], "target.mean_box");
      for (const char* k : {"J", "J_test", "sigma2", "s", "rho"}) {
        if (t.contains(k)) fail(std::string("target.") + k, "applies to regression targets only");
      }
    }
  }
  if (j.contains("methods")) {
    const json& ms = j["methods"];
    if (!ms.is_array() || ms.empty()) fail("methods", "expected a non-empty array");
    c.methods.clear();
    for (std::size_t i = 0; i < ms.size(); ++i) {
      const std::string path = "methods[" + std::to_string(i) + "]";
      check_keys(ms[i], path, {"label", "algorithm", "alpha", "tau", "regularizer"});
      MethodSpec m;
      if (!ms[i].contains("algorithm")) fail(path + ".algorithm", "required field is missing");
      m.algorithm = algorithm_from_string(get_string(ms[i]["algorithm"], path + ".algorithm"),
                                          path + ".algorithm");
      m.label = ms[i].contains("label") ? get_string(ms[i]["label"], path + ".label")
                                        : to_string(m.algorithm);
      if (ms[i].contains("alpha")) m.alpha = get_number(ms[i]["alpha"], path + ".alpha");
      if (ms[i].contains("tau")) m.tau = get_number(ms[i]["tau"], path + ".tau");
      if (ms[i].contains("regularizer")) {
        m.regularizer = parse_regularizer(ms[i]["regularizer"], path + ".regularizer");
      }
      c.methods.push_back(std::move(m));
    }
  }
  if (j.contains("alphas")) c.alphas = get_list<double>(j["alphas"], "alphas", num);
  if (j.contains("taus")) c.taus = get_list<double>(j["taus"], "taus", num);
  if (j.contains("dims")) c.dims = get_list<int>(j["dims"], "dims", integer);
  if (j.contains("kappas")) c.kappas = get_list<double>(j["kappas"], "kappas", num);
  if (j.contains("N")) c.N = get_int(j["N"], "N");
  if (j.contains("K")) c.K = get_int(j["K"], "K");
  if (j.contains("n_replicates")) c.n_replicates = get_int(j["n_replicates"], "n_replicates");
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !(j["seed"].is_number_integer() && j["seed"].get<long long>() >= 0)) {
      fail("seed", "expected a nonnegative integer");
    }
    c.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("replicates")) {
    c.replicates = get_list<int>(j["replicates"], "replicates", integer);
    if (!j.contains("n_replicates")) c.n_replicates = static_cast<int>(c.replicates.size());
  }
  if (j.contains("init")) {
    check_keys(j["init"], "init", {"mu0", "sigma0"});
    if (j["init"].contains("mu0")) c.mu0 = get_number(j["init"]["mu0"], "init.mu0");
    if (j["init"].contains("sigma0")) c.sigma0 = get_number(j["init"]["sigma0"], "init.sigma0");
  }
  if (j.contains("stop_tol")) c.stop_tol = get_number(j["stop_tol"], "stop_tol");
  if (j.contains("strict")) c.strict = get_bool(j["strict"], "strict");
  if (j.contains("n_beta")) c.n_beta = get_int(j["n_beta"], "n_beta");
  if (j.contains("write_traces")) c.write_traces = get_bool(j["write_traces"], "write_traces");
  if (j.contains("output_dir")) c.output_dir = get_string(j["output_dir"], "output_dir");
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open config file");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": invalid JSON (" + e.what() + ")");
  }
  return parse_config(j);
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["experiment"] = to_string(c.experiment);
  j["family"] = to_string(c.family);
  json t;
  t["kind"] = c.target;
  if (c.target == "regression") {
    t["d"] = c.regression.d;
    t["J"] = c.regression.J;
    t["J_test"] = c.regression.J_test;
    t["sigma2"] = c.regression.sigma2;
    t["s"] = c.regression.s;
    t["rho"] = c.regression.rho;
  } else {
    t["mean_box"] = c.mean_box;
  }
  j["target"] = t;
  json ms = json::array();
  for (const MethodSpec& m : c.methods) {
    json mj;
    mj["label"] = m.label;
    mj["algorithm"] = to_string(m.algorithm);
    if (m.alpha) mj["alpha"] = *m.alpha;
    if (m.tau) mj["tau"] = *m.tau;
    mj["regularizer"] = regularizer_json(m.regularizer);
    ms.push_back(std::move(mj));
  }
  j["methods"] = ms;
  j["alphas"] = c.alphas;
  j["taus"] = c.taus;
  if (c.target == "gaussian") {
    j["dims"] = c.dims;
    j["kappas"] = c.kappas;
  }
  j["N"] = c.N;
  j["K"] = c.K;
  j["n_replicates"] = c.n_replicates;
  j["seed"] = c.seed;
  if (!c.replicates.empty()) j["replicates"] = c.replicates;
  j["init"] = {{"mu0", c.mu0}, {"sigma0", c.sigma0}};
  j["stop_tol"] = c.stop_tol;
  j["strict"] = c.strict;
  j["n_beta"] = c.n_beta;
  j["write_traces"] = c.write_traces;
  j["output_dir"] = c.output_dir;
  return j;
}

std::vector<std::string> demo_names() {
  return {"single_run", "gaussian_sweep", "sensitivity", "regression"};
}

json demo_config(const std::string& name) {
  json j;
  if (name == "single_run") {
    j = {{"experiment", "single_run"},
         {"target", {{"kind", "gaussian"}, {"d", 2}, {"kappa", 10}}},
         {"methods", json::array({{{"label", "prmm_exact"}, {"algorithm", "prmm_exact"},
                                   {"alpha", 1.0}, {"tau", 1.0}}})},
         {"K", 10},
         {"seed", 1},
         {"output_dir", "out/single_run"}};
  } else if (name == "gaussian_sweep") {
    j = {{"experiment", "gaussian_sweep"},
         {"alphas", {0.5, 1.0}},
         {"taus", {0.5, 1.0}},
         {"dims", {2, 5}},
         {"kappas", {10}},
         {"n_replicates", 5},
         {"seed", 7},
         {"output_dir", "out/gaussian_sweep"}};
  } else if (name == "sensitivity") {
    j = {{"experiment", "sensitivity"},
         {"n_replicates", 20},
         {"seed", 11},
         {"output_dir", "out/sensitivity"}};
  } else if (name == "regression") {
    j = {{"experiment", "regression"},
         {"target", {{"kind", "regression"}, {"d", 5}, {"J", 100}, {"J_test", 50},
                     {"sigma2", 0.5}, {"s", 5.0}, {"rho", 0.5}}},
         {"n_replicates", 20},
         {"seed", 3},
         {"output_dir", "out/regression"}};
  } else {
    std::string names;
    for (const auto& n : demo_names()) names += (names.empty() ? "" : ", ") + n;
    throw ConfigError("demo: unknown experiment '" + name + "' (expected " + names + ")");
  }
  return j;
}

std::vector<Setting> expand_settings(const ExperimentConfig& c) {
  std::vector<Setting> out;
  const bool gaussian = c.target == "gaussian";
  const std::vector<int> dims = gaussian ? c.dims : std::vector<int>{c.regression.d};
  const std::vector<double> kappas = gaussian ? c.kappas : std::vector<double>{1.0};
  for (const MethodSpec& m : c.methods) {
    const std::vector<double> as = m.alpha ? std::vector<double>{*m.alpha} : c.alphas;
    const std::vector<double> ts = m.tau ? std::vector<double>{*m.tau} : c.taus;
    for (double a : as) {
      for (double t : ts) {
        for (int d : dims) {
          for (double kappa : kappas) {
            Setting s;
            s.method = m;
            s.alpha = a;
            s.tau = t;
            s.d = d;
            s.kappa = kappa;
            s.label = m.label + "_a" + short_number(a) + "_t" + short_number(t);
            if (gaussian) s.label += "_d" + std::to_string(d) + "_k" + short_number(kappa);
            out.push_back(std::move(s));
          }
        }
      }
    }
  }
  return out;
}

Summary summarize(std::vector<double> values) {
  values.erase(std::remove_if(values.begin(), values.end(), [](double v) { return std::isnan(v); }),
               values.end());
  Summary s;
  s.count = static_cast<int>(values.size());
  if (values.empty()) {
    s.mean = s.median = s.q1 = s.q3 = kNaN;
    return s;
  }
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  auto quantile = [&](double p) {
    const double pos = p * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const double frac = pos - static_cast<double>(lo);
    if (frac == 0.0 || values[lo] == values[lo + 1]) return values[lo];
    return values[lo] + frac * (values[lo + 1] - values[lo]);
  };
  s.q1 = quantile(0.25);
  s.median = quantile(0.5);
  s.q3 = quantile(0.75);
  return s;
}

namespace {

struct Problem {
  ExponentialFamily fam;
  Target target;
  std::optional<RegressionDataset> data;
};

Problem make_problem(const ExperimentConfig& c, const Setting& s, RngStream& rng) {
  if (c.target == "regression") {
    RegressionDataset data = make_regression_dataset(c.regression, rng);
    const int dim = data.d() + 1;
    ExponentialFamily fam = c.family == FamilyKind::FullGaussian
                                ? ExponentialFamily::full_gaussian(dim)
                                : ExponentialFamily::diag_gaussian(dim);
    Target t = regression_target(data);
    return {fam, std::move(t), std::move(data)};
  }
  ExponentialFamily fam = c.family == FamilyKind::FullGaussian
                              ? ExponentialFamily::full_gaussian(s.d)
                              : ExponentialFamily::diag_gaussian(s.d);
  GaussianTargetSpec spec;
  spec.d = s.d;
  spec.kappa = s.kappa;
  spec.mean_box = c.mean_box;
  return {fam, make_gaussian_target(spec, rng), std::nullopt};
}

Regularizer make_regularizer(const RegularizerSpec& r, const ExponentialFamily& fam) {
  if (r.kind == "eigen_box") return EigenBox{r.b1, r.b2};
  if (r.kind == "sparse_mean_l1") {
    SparseMeanL1 l1;
    if (r.eta.size() == 1) {
      l1.eta = Eigen::VectorXd::Constant(fam.dim(), r.eta[0]);
    } else if (static_cast<int>(r.eta.size()) == fam.dim()) {
      l1.eta = Eigen::Map<const Eigen::VectorXd>(r.eta.data(), fam.dim());
    } else {
      throw ConfigError("regularizer.eta: expected 1 or " + std::to_string(fam.dim()) + " weights");
    }
    l1.skip_index_0 = r.skip_index_0;
    return l1;
  }
  return NullRegularizer{};
}

std::vector<std::string> metric_names(const ExperimentConfig& c) {
  if (c.target == "regression") return {"f1", "objective", "renyi_bound", "ess"};
  return {"mse_mean", "mse_cov", "objective", "renyi_bound", "ess"};
}

double worst_value(const std::string& name) {
  if (name == "f1") return 0.0;
  if (name == "renyi_bound") return -kInf;
  if (name == "ess") return kNaN;
  return kInf;
}

RunResult run_one(const ExperimentConfig& c, const std::vector<Setting>& settings, int si,
                  int replicate) {
  const Setting& s = settings[si];
  RunResult res;
  res.setting = si;
  res.replicate = replicate;
  res.metric_names = metric_names(c);
  const auto start = std::chrono::steady_clock::now();

  const auto rep = static_cast<std::uint64_t>(replicate);
  RngStream target_rng(c.seed, 2 * rep);
  RngStream alg_rng(c.seed, 2 * rep + 1);
  Problem p = make_problem(c, s, target_rng);
  const ExponentialFamily& fam = p.fam;
  const int dim = fam.dim();
  const NaturalParams theta0 = fam.natural_from_gaussian(
      Eigen::VectorXd::Constant(dim, c.mu0), c.sigma0 * Eigen::MatrixXd::Identity(dim, dim));
  Schedule sched = Schedule::constant(s.tau, c.K, c.N, c.stop_tol);

  std::function<double(const NaturalParams&)> exact;
  if (p.target.gaussian && fam.kind() == FamilyKind::FullGaussian) {
    const NaturalParams theta_pi = p.target.gaussian->theta_pi;
    const double alpha = s.alpha;
    exact = [fam, alpha, theta_pi](const NaturalParams& th) {
      try {
        return renyi_in_family(fam, alpha, theta_pi, th);
      } catch (const DomainViolation&) {
        return kNaN;
      }
    };
  }
  McOptions opts;
  opts.strict = c.strict;
  opts.objective = exact;

  try {
    const Regularizer reg = make_regularizer(s.method.regularizer, fam);
    switch (s.method.algorithm) {
      case AlgorithmKind::PrmmExact:
        res.trace = prmm_exact(fam, exact_in_family(fam, s.alpha, p.target.gaussian->theta_pi), reg,
                               s.alpha, sched, theta0);
        break;
      case AlgorithmKind::McPrmm:
        res.trace = mc_prmm(fam, p.target, reg, s.alpha, sched, theta0, alg_rng, opts);
        break;
      case AlgorithmKind::Rmm:
        res.trace = mc_prmm(fam, p.target, NullRegularizer{}, s.alpha, sched, theta0, alg_rng, opts);
        break;
      case AlgorithmKind::Vrb:
        res.trace = vrb(fam, p.target, s.alpha, sched, theta0, alg_rng, opts);
        break;
    }
    res.status = res.trace.status;
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    res.status = RunStatus::Diverged;
    res.error = e.what();
  }
  if (res.trace.records.empty()) {
    IterationRecord r;
    r.theta = theta0;
    r.theta_norm = theta0.norm();
    res.trace.records.push_back(std::move(r));
  }
  res.iterations = static_cast<int>(res.trace.records.size()) - 1;
  res.repairs = res.trace.total_repairs();

  const std::size_t len = static_cast<std::size_t>(c.K) + 1;
  res.metrics.assign(res.metric_names.size(), std::vector<double>(len, kNaN));
  for (std::size_t r = 0; r < res.trace.records.size() && r < len; ++r) {
    const IterationRecord& rec = res.trace.records[r];
    for (std::size_t m = 0; m < res.metric_names.size(); ++m) {
      const std::string& name = res.metric_names[m];
      double v = kNaN;
      if (name == "objective") {
        v = rec.objective;
      } else if (name == "renyi_bound") {
        v = rec.renyi_bound;
      } else if (name == "ess") {
        v = rec.ess;
      } else if (name == "f1") {
        v = f1_zero_pattern(fam.gaussian(rec.theta).mean, *p.target.beta_bar, 0.0);
      } else if (name == "mse_mean" || name == "mse_cov") {
        const ParamMse e = param_mse(fam, rec.theta, p.target.gaussian->mean,
                                     p.target.gaussian->covariance);
        v = name == "mse_mean" ? e.mse_mean : e.mse_cov;
      }
      res.metrics[m][r] = v;
    }
  }
  const std::size_t have = std::min(res.trace.records.size(), len);
  for (std::size_t m = 0; m < res.metric_names.size(); ++m) {
    const double pad = res.status == RunStatus::Diverged ? worst_value(res.metric_names[m])
                                                         : res.metrics[m][have - 1];
    for (std::size_t r = have; r < len; ++r) res.metrics[m][r] = pad;
  }
  if (p.data) {
    res.test_mse = test_mse_distribution(fam, res.trace.final_theta(), *p.data, c.n_beta, alg_rng);
    if (si == 0) res.dataset = std::move(p.data);
  }
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

}  // namespace

double ExperimentResult::median(int setting, const std::string& name, int k) const {
  std::vector<double> vals;
  for (const RunResult& r : runs) {
    if (r.setting != setting) continue;
    const auto it = std::find(r.metric_names.begin(), r.metric_names.end(), name);
    if (it == r.metric_names.end()) throw InvalidInput("unknown metric '" + name + "'");
    vals.push_back(r.metrics[static_cast<std::size_t>(it - r.metric_names.begin())].at(
        static_cast<std::size_t>(k)));
  }
  return summarize(std::move(vals)).median;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, int jobs) {
  const auto start = std::chrono::steady_clock::now();
  ExperimentResult out;
  out.config = cfg;
  out.settings = expand_settings(cfg);
  const std::vector<int> reps = cfg.replicate_ids();
  std::vector<std::pair<int, int>> tasks;
  for (int s = 0; s < static_cast<int>(out.settings.size()); ++s) {
    for (int r : reps) tasks.emplace_back(s, r);
  }
  out.runs.resize(tasks.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      try {
        out.runs[i] = run_one(cfg, out.settings, tasks[i].first, tasks[i].second);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        next = tasks.size();
        return;
      }
    }
  };
  const int n_threads =
      std::max(1, std::min<int>(jobs, static_cast<int>(std::max<std::size_t>(tasks.size(), 1))));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);
  std::sort(out.runs.begin(), out.runs.end(), [](const RunResult& a, const RunResult& b) {
    return std::tie(a.setting, a.replicate) < std::tie(b.setting, b.replicate);
  });
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

namespace {

void setting_columns(std::ostream& os, const ExperimentResult& res, int si) {
  const Setting& s = res.settings[si];
  os << si << "," << s.label << "," << to_string(s.method.algorithm) << ","
     << format_double(s.alpha) << "," << format_double(s.tau) << "," << s.d << ","
     << format_double(s.kappa) << "," << s.method.regularizer.kind;
}

const char* kSettingHeader = "setting,label,algorithm,alpha,tau,d,kappa,regularizer";

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw std::runtime_error(p.string() + ": cannot open for writing");
  return os;
}

}  // namespace

void write_aggregate_csv(std::ostream& os, const ExperimentResult& res) {
  os << kSettingHeader << ",k,metric,count,mean,median,q1,q3\n";
  const std::size_t len = static_cast<std::size_t>(res.config.K) + 1;
  for (int si = 0; si < static_cast<int>(res.settings.size()); ++si) {
    std::vector<const RunResult*> runs;
    for (const RunResult& r : res.runs) {
      if (r.setting == si) runs.push_back(&r);
    }
    if (runs.empty()) continue;
    const auto& names = runs.front()->metric_names;
    for (std::size_t k = 0; k < len; ++k) {
      for (std::size_t m = 0; m < names.size(); ++m) {
        std::vector<double> vals;
        for (const RunResult* r : runs) vals.push_back(r->metrics[m][k]);
        const Summary s = summarize(std::move(vals));
        setting_columns(os, res, si);
        os << "," << k << "," << names[m] << "," << s.count << "," << format_double(s.mean) << ","
           << format_double(s.median) << "," << format_double(s.q1) << ","
           << format_double(s.q3) << "\n";
      }
    }
  }
}

void write_outputs(const ExperimentResult& res, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw std::runtime_error(dir.string() + ": cannot create output directory");
  }
  json files = json::array();
  const ExperimentConfig& c = res.config;
  const bool regression = c.target == "regression";

  if (c.write_traces) {
    fs::create_directories(dir / "traces", ec);
    if (ec) throw std::runtime_error((dir / "traces").string() + ": cannot create directory");
    for (const RunResult& r : res.runs) {
      const std::string name =
          "traces/" + res.settings[r.setting].label + "_r" + std::to_string(r.replicate) + ".csv";
      TraceColumns extra;
      for (std::size_t m = 0; m < r.metric_names.size(); ++m) {
        const std::string& n = r.metric_names[m];
        if (n == "mse_mean" || n == "mse_cov" || n == "f1") extra.names.push_back(n);
      }
      for (std::size_t k = 0; k < r.trace.records.size(); ++k) {
        std::vector<double> row;
        for (const std::string& n : extra.names) {
          const auto idx = static_cast<std::size_t>(
              std::find(r.metric_names.begin(), r.metric_names.end(), n) - r.metric_names.begin());
          row.push_back(k < r.metrics[idx].size() ? r.metrics[idx][k] : kNaN);
        }
        extra.rows.push_back(std::move(row));
      }
      std::ofstream os = open_out(dir / name);
      write_trace_csv(os, r.trace, extra);
    }
    files.push_back({{"path", "traces/<label>_r<replicate>.csv"}, {"kind", "trace"}});
  }

  {
    std::ofstream os = open_out(dir / "aggregate.csv");
    write_aggregate_csv(os, res);
    files.push_back({{"path", "aggregate.csv"}, {"kind", "aggregate"}});
  }
  {
    std::ofstream os = open_out(dir / "final.csv");
    os << kSettingHeader << ",replicate,status,iterations,repairs";
    const auto names = res.runs.empty() ? std::vector<std::string>{} : res.runs.front().metric_names;
    for (const auto& n : names) os << "," << n << "_init," << n << "_final";
    os << ",error\n";
    for (const RunResult& r : res.runs) {
      setting_columns(os, res, r.setting);
      os << "," << r.replicate << "," << to_string(r.status) << "," << r.iterations << ","
         << r.repairs;
      for (const auto& series : r.metrics) {
        os << "," << format_double(series.front()) << "," << format_double(series.back());
      }
      std::string err = r.error;
      std::replace(err.begin(), err.end(), '"', '\'');
      os << ",\"" << err << "\"\n";
    }
    files.push_back({{"path", "final.csv"}, {"kind", "final"}});
  }
  if (regression) {
    std::ofstream os = open_out(dir / "test_mse.csv");
    os << kSettingHeader << ",replicate,index,test_mse\n";
    for (const RunResult& r : res.runs) {
      for (Eigen::Index i = 0; i < r.test_mse.size(); ++i) {
        setting_columns(os, res, r.setting);
        os << "," << r.replicate << "," << i << "," << format_double(r.test_mse(i)) << "\n";
      }
    }
    files.push_back({{"path", "test_mse.csv"}, {"kind", "test_mse"}});
    fs::create_directories(dir / "datasets", ec);
    for (const RunResult& r : res.runs) {
      if (!r.dataset) continue;
      const std::string base = "datasets/r" + std::to_string(r.replicate);
      std::ofstream js = open_out(dir / (base + ".json"));
      js << dataset_to_json(*r.dataset).dump(1) << "\n";
      std::ofstream cs = open_out(dir / (base + ".csv"));
      write_dataset_csv(cs, *r.dataset);
    }
    files.push_back({{"path", "datasets/r<replicate>.json"}, {"kind", "dataset"}});
  }

  json manifest;
  manifest["schema"] = kTraceSchema;
  manifest["config"] = config_to_json(c);
  json trace_cols = trace_csv_columns();
  json metric_cols = res.runs.empty() ? json::array() : json(res.runs.front().metric_names);
  manifest["columns"] = {
      {"trace", trace_cols},
      {"trace_extra", regression ? json({"f1"}) : json({"mse_mean", "mse_cov"})},
      {"aggregate", {"setting", "label", "algorithm", "alpha", "tau", "d", "kappa", "regularizer",
                     "k", "metric", "count", "mean", "median", "q1", "q3"}},
      {"metrics", metric_cols}};
  json settings = json::array();
  for (std::size_t i = 0; i < res.settings.size(); ++i) {
    const Setting& s = res.settings[i];
    settings.push_back({{"index", i},
                        {"label", s.label},
                        {"algorithm", to_string(s.method.algorithm)},
                        {"alpha", s.alpha},
                        {"tau", s.tau},
                        {"d", s.d},
                        {"kappa", s.kappa},
                        {"regularizer", regularizer_json(s.method.regularizer)}});
  }
  manifest["settings"] = settings;
  json seeds = json::array();
  for (int r : c.replicate_ids()) {
    seeds.push_back({{"replicate", r},
                     {"seed", c.seed},
                     {"target_stream", 2 * static_cast<std::uint64_t>(r)},
                     {"algorithm_stream", 2 * static_cast<std::uint64_t>(r) + 1}});
  }
  manifest["replicates"] = seeds;
  std::map<std::string, int> counts;
  double cpu = 0.0;
  for (const RunResult& r : res.runs) {
    ++counts[to_string(r.status)];
    cpu += r.seconds;
  }
  manifest["status_counts"] = counts;
  manifest["build"] = {{"compiler", __VERSION__},
                       {"cplusplus", static_cast<long>(__cplusplus)},
                       {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                     std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                     std::to_string(EIGEN_MINOR_VERSION)},
                       {"rng", "mt19937_64 seeded by seed_seq(seed, stream); Box-Muller normals"}};
  manifest["wall_seconds"] = res.seconds;
  manifest["run_seconds_total"] = cpu;
  manifest["files"] = files;
  std::ofstream os = open_out(dir / "manifest.json");
  os << manifest.dump(2) << "\n";
}

}  // namespace bvi
