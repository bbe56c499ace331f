// Copyright 2026 The sbspec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "sbspec/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "sbspec/ensembles.hpp"

namespace sbspec {

using json = nlohmann::ordered_json;

const char* to_string(Command c) noexcept {
  switch (c) {
    case Command::kSpectrum: return "spectrum";
    case Command::kSimulate: return "simulate";
    case Command::kOracle: return "oracle";
    case Command::kCompare: return "compare";
    case Command::kDiagnose: return "diagnose";
  }
  return "unknown";
}

const char* to_string(EnsembleType e) noexcept {
  switch (e) {
    case EnsembleType::kWigner: return "wigner";
    case EnsembleType::kInhomogeneous: return "inhomogeneous";
    case EnsembleType::kHaar: return "haar";
    case EnsembleType::kQssep: return "qssep";
    case EnsembleType::kCustom: return "custom";
  }
  return "unknown";
}

std::optional<Command> parse_command(const std::string& name) {
  for (auto c : {Command::kSpectrum, Command::kSimulate, Command::kOracle, Command::kCompare,
                 Command::kDiagnose})
    if (name == to_string(c)) return c;
  return std::nullopt;
}

double Profile::operator()(double x) const {
  if (kind == "table") return table[cell_of(x, table.size())];
  if (kind == "power") return c0 + c1 * std::pow(x, p);
  return c0 + c1 * x;
}

double HConfig::length() const {
  double l = 0.0;
  for (auto [c, d] : intervals) l += d - c;
  return l;
}

namespace {

[[noreturn]] void bad(const std::string& path, const std::string& what) {
  fail(ErrorCode::kConfig, path + ": " + what);
}

// Reads the keys of one JSON object and rejects whatever was not read.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) bad(path_, "expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json* get(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  double number(const std::string& key, double fallback) {
    const json* v = get(key);
    if (!v) return fallback;
    if (!v->is_number()) bad(at(key), "expected a number");
    const double x = v->get<double>();
    if (!std::isfinite(x)) bad(at(key), "expected a finite number");
    return x;
  }

  std::uint64_t count(const std::string& key, std::uint64_t fallback) {
    const json* v = get(key);
    if (!v) return fallback;
    if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<std::int64_t>() >= 0))
      bad(at(key), "expected a nonnegative integer");
    return v->get<std::uint64_t>();
  }

  bool flag(const std::string& key, bool fallback) {
    const json* v = get(key);
    if (!v) return fallback;
    if (!v->is_boolean()) bad(at(key), "expected true or false");
    return v->get<bool>();
  }

  std::string text(const std::string& key, const std::string& fallback) {
    const json* v = get(key);
    if (!v) return fallback;
    if (!v->is_string()) bad(at(key), "expected a string");
    return v->get<std::string>();
  }

  std::string at(const std::string& key) const { return path_ + "." + key; }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!seen_.count(key)) bad(at(key), "unknown key");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::vector<double> number_list(const json& v, const std::string& path) {
  if (!v.is_array()) bad(path, "expected an array of numbers");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) bad(path, "expected an array of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

Profile parse_profile(const json& j, const std::string& path, json& resolved) {
  Section s(j, path);
  Profile p;
  if (const json* t = s.get("table")) {
    p.kind = "table";
    p.table = number_list(*t, s.at("table"));
    if (p.table.empty()) bad(s.at("table"), "must not be empty");
    resolved = {{"table", p.table}};
  } else {
    p.kind = s.text("profile", "affine");
    if (p.kind != "affine" && p.kind != "power") bad(s.at("profile"), "expected affine or power");
    p.c0 = s.number("c0", 1.0);
    p.c1 = s.number("c1", 0.0);
    if (p.kind == "power") p.p = s.number("p", 1.0);
    resolved = {{"profile", p.kind}, {"c0", p.c0}, {"c1", p.c1}};
    if (p.kind == "power") resolved["p"] = p.p;
  }
  s.finish();
  return p;
}

void check_nonnegative_profile(const Profile& p, const std::string& path, bool strictly) {
  const auto bad_value = [&](double v) { return strictly ? !(v > 0.0) : !(v >= 0.0); };
  if (p.kind == "table") {
    for (double v : p.table)
      if (bad_value(v)) bad(path, strictly ? "values must be positive" : "values must be nonnegative");
    return;
  }
  for (int k = 0; k <= 1000; ++k)
    if (bad_value(p(k / 1000.0)))
      bad(path, strictly ? "profile must be positive on [0,1]" : "profile must be nonnegative on [0,1]");
}

Measure1D parse_spectrum(const json& j, const std::string& path, json& resolved) {
  Section s(j, path);
  std::optional<Measure1D> m;
  try {
    if (const json* a = s.get("atoms")) {
      if (!a->is_array() || a->empty()) bad(s.at("atoms"), "expected [[location, weight], ..]");
      std::vector<std::pair<double, double>> atoms;
      for (const auto& pair : *a) {
        const auto v = number_list(pair, s.at("atoms"));
        if (v.size() != 2 || !(v[1] > 0.0)) bad(s.at("atoms"), "expected [[location, weight], ..]");
        atoms.emplace_back(v[0], v[1]);
      }
      m = Measure1D::atoms(atoms);
      resolved = {{"atoms", *a}};
    } else if (const json* b = s.get("bernoulli")) {
      if (!b->is_number()) bad(s.at("bernoulli"), "expected a number in (0,1)");
      m = bernoulli_measure(b->get<double>());
      resolved = {{"bernoulli", b->get<double>()}};
    } else if (const json* u = s.get("uniform")) {
      const auto v = number_list(*u, s.at("uniform"));
      if (v.size() != 2 || !(v[0] < v[1])) bad(s.at("uniform"), "expected [lo, hi] with lo < hi");
      m = Measure1D::density(v[0], v[1], std::vector<double>(64, 1.0));
      resolved = {{"uniform", v}};
    } else {
      bad(path, "expected one of atoms, bernoulli, uniform");
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kConfig) throw;
    bad(path, e.what());
  }
  s.finish();
  return *m;
}

void parse_ensemble(const json& j, RunConfig& cfg) {
  Section s(j, "ensemble");
  json out;
  const std::string type = s.text("type", "wigner");
  auto& e = cfg.ensemble;
  out["type"] = type;
  if (type == "wigner") {
    e.type = EnsembleType::kWigner;
    e.s = s.number("s", 1.0);
    if (!(e.s > 0.0)) bad("ensemble.s", "must be positive");
    out["s"] = e.s;
  } else if (type == "inhomogeneous") {
    e.type = EnsembleType::kInhomogeneous;
    json r;
    if (const json* p = s.get("s2")) e.s2 = parse_profile(*p, "ensemble.s2", r);
    else r = {{"profile", "affine"}, {"c0", 1.0}, {"c1", 0.0}};
    check_nonnegative_profile(e.s2, "ensemble.s2", true);
    out["s2"] = r;
  } else if (type == "haar") {
    e.type = EnsembleType::kHaar;
    const json* sp = s.get("spectrum");
    if (!sp) bad("ensemble.spectrum", "required for the haar ensemble");
    json r;
    e.spectrum = parse_spectrum(*sp, "ensemble.spectrum", r);
    e.cumulant_order = static_cast<int>(s.count("cumulant_order", 8));
    if (e.cumulant_order < 1) bad("ensemble.cumulant_order", "must be positive");
    out["spectrum"] = r;
    out["cumulant_order"] = e.cumulant_order;
  } else if (type == "qssep") {
    e.type = EnsembleType::kQssep;
  } else if (type == "custom") {
    e.type = EnsembleType::kCustom;
    if (const json* g = s.get("g1")) e.g1 = number_list(*g, "ensemble.g1");
    if (const json* g = s.get("g2")) {
      if (!g->is_array()) bad("ensemble.g2", "expected a coefficient matrix");
      for (const auto& row : *g) e.g2.push_back(number_list(row, "ensemble.g2"));
    }
    if (const json* g = s.get("g3")) {
      if (!g->is_array()) bad("ensemble.g3", "expected a coefficient tensor");
      for (const auto& slab : *g) {
        if (!slab.is_array()) bad("ensemble.g3", "expected a coefficient tensor");
        std::vector<std::vector<double>> rows;
        for (const auto& row : slab) rows.push_back(number_list(row, "ensemble.g3"));
        e.g3.push_back(std::move(rows));
      }
    }
    if (e.g1.empty() && e.g2.empty() && e.g3.empty()) bad("ensemble", "custom kernel needs g1, g2 or g3");
    out["g1"] = e.g1;
    out["g2"] = e.g2;
    out["g3"] = e.g3;
  } else {
    bad("ensemble.type", "expected wigner, inhomogeneous, haar, qssep or custom");
  }
  s.finish();
  cfg.resolved["ensemble"] = out;
}

void parse_h(const json& j, RunConfig& cfg) {
  Section s(j, "h");
  if (const json* iv = s.get("intervals")) {
    if (!iv->is_array() || iv->empty()) bad("h.intervals", "expected [[c, d], ..]");
    for (const auto& pair : *iv) {
      const auto v = number_list(pair, "h.intervals");
      if (v.size() != 2 || !(v[0] >= 0.0 && v[0] < v[1] && v[1] <= 1.0))
        bad("h.intervals", "each interval must satisfy 0 <= c < d <= 1");
      cfg.h.intervals.emplace_back(v[0], v[1]);
    }
    auto sorted = cfg.h.intervals;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t k = 1; k < sorted.size(); ++k)
      if (sorted[k].first < sorted[k - 1].second) bad("h.intervals", "intervals overlap");
    cfg.resolved["h"] = {{"intervals", *iv}};
  } else {
    // Remaining keys describe a profile.
    json rest = j;
    for (const auto& key : {"table", "profile", "c0", "c1", "p"}) s.get(key);
    json r;
    cfg.h.profile = parse_profile(rest, "h", r);
    if (cfg.h.profile.kind != "table") {
      for (int k = 0; k <= 1000; ++k)
        if (!(cfg.h.profile(k / 1000.0) >= 0.0 && cfg.h.profile(k / 1000.0) <= 1.0))
          bad("h", "profile values must lie in [0,1]");
    } else {
      for (double v : cfg.h.profile.table)
        if (!(v >= 0.0 && v <= 1.0)) bad("h.table", "values must lie in [0,1]");
    }
    cfg.resolved["h"] = r;
  }
  s.finish();
}

void parse_mc(const json& j, RunConfig& cfg) {
  Section s(j, "mc");
  auto& mc = cfg.mc;
  auto& q = mc.qssep;
  mc.N = s.count("N", 100);
  mc.samples = s.count("samples", 50);
  mc.realizations = s.count("realizations", 1);
  mc.seed = s.count("seed", 1);
  mc.bins = s.count("bins", 60);
  const std::string draw = s.text("diagonal_draw", "quantile");
  if (draw == "quantile") mc.draw = DiagonalDraw::kQuantile;
  else if (draw == "iid") mc.draw = DiagonalDraw::kIid;
  else bad("mc.diagonal_draw", "expected quantile or iid");
  q.dt = s.number("dt", 0.1);
  q.t_end = s.number("t_end", 0.4);
  if (const json* ts = s.get("t_stat"); ts && !ts->is_null()) {
    if (!ts->is_number()) bad("mc.t_stat", "expected a number or null");
    q.t_stat = ts->get<double>();
    if (!(q.t_stat >= 0.0)) bad("mc.t_stat", "must be nonnegative (null: detect)");
  } else {
    q.t_stat = -1.0;
  }
  q.sample_every = s.number("sample_every", 0.001);
  if (const json* r = s.get("rates")) {
    const auto v = number_list(*r, "mc.rates");
    if (v.size() != 4) bad("mc.rates", "expected [alpha_1, beta_1, alpha_N, beta_N]");
    q.alpha1 = v[0], q.beta1 = v[1], q.alphaN = v[2], q.betaN = v[3];
  }
  q.noise = s.flag("noise", true);
  const std::string integ = s.text("integrator", "euler");
  if (integ == "euler") q.integrator = QssepIntegrator::kEuler;
  else if (integ == "unitary") q.integrator = QssepIntegrator::kUnitary;
  else bad("mc.integrator", "expected euler or unitary");
  s.finish();

  if (mc.N < 2) bad("mc.N", "must be at least 2");
  if (mc.realizations == 0) bad("mc.realizations", "must be at least 1");
  if (mc.samples == 0) bad("mc.samples", "must be at least 1");
  if (mc.bins == 0) bad("mc.bins", "must be at least 1");
  q.N = mc.N;
  try {
    q.validate();
  } catch (const Error& e) {
    bad("mc", e.what());
  }
  cfg.resolved["mc"] = {{"N", mc.N},
                        {"samples", mc.samples},
                        {"realizations", mc.realizations},
                        {"seed", mc.seed},
                        {"bins", mc.bins},
                        {"diagonal_draw", draw},
                        {"dt", q.dt},
                        {"t_end", q.t_end},
                        {"t_stat", q.t_stat < 0.0 ? json(nullptr) : json(q.t_stat)},
                        {"sample_every", q.sample_every},
                        {"rates", {q.alpha1, q.beta1, q.alphaN, q.betaN}},
                        {"noise", q.noise},
                        {"integrator", integ}};
}

void parse_solver(const json& j, RunConfig& cfg) {
  Section s(j, "solver");
  auto& o = cfg.solver;
  o.tol = s.number("tol", o.tol);
  o.max_iter = static_cast<int>(s.count("max_iter", static_cast<std::uint64_t>(o.max_iter)));
  o.damping = s.number("damping", o.damping);
  o.anderson = static_cast<int>(s.count("anderson", static_cast<std::uint64_t>(o.anderson)));
  s.finish();
  if (!(o.tol > 0.0)) bad("solver.tol", "must be positive");
  if (o.max_iter < 1) bad("solver.max_iter", "must be positive");
  if (!(o.damping > 0.0 && o.damping <= 1.0)) bad("solver.damping", "must lie in (0,1]");
  cfg.resolved["solver"] = {{"tol", o.tol}, {"max_iter", o.max_iter}, {"damping", o.damping},
                            {"anderson", o.anderson}};
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::kConfig, std::string("malformed JSON: ") + e.what());
  }
  RunConfig cfg;
  Section s(root, "config");
  cfg.resolved = json::object();
  if (const json* c = s.get("command")) {
    if (!c->is_string() || !parse_command(c->get<std::string>()))
      bad("config.command", "expected spectrum, simulate, oracle, compare or diagnose");
    cfg.command = parse_command(c->get<std::string>());
    cfg.resolved["command"] = *c;
  }
  parse_ensemble(s.has("ensemble") ? *s.get("ensemble") : json::object(), cfg);
  if (s.has("h")) {
    parse_h(*s.get("h"), cfg);
  } else {
    cfg.h.intervals = {{0.0, 1.0}};
    cfg.resolved["h"] = {{"intervals", {{0.0, 1.0}}}};
  }
  cfg.grid = s.count("grid", 400);
  if (cfg.grid < 1 || cfg.grid > 1000000) bad("config.grid", "must lie in 1..1000000");
  cfg.resolved["grid"] = cfg.grid;

  if (const json* l = s.get("lambda")) {
    Section ls(*l, "lambda");
    cfg.lambda_lo = ls.number("lo", 0.0);
    cfg.lambda_hi = ls.number("hi", 0.0);
    cfg.lambda_points = ls.count("points", 501);
    ls.finish();
    if (!(cfg.lambda_lo < cfg.lambda_hi)) bad("lambda", "needs lo < hi");
  }
  if (cfg.lambda_points < 2) bad("lambda.points", "must be at least 2");

  cfg.eps = s.number("eps", 1e-3);
  if (!(cfg.eps > 0.0)) bad("config.eps", "must be positive");
  cfg.extrapolate = s.flag("extrapolate", false);
  cfg.closed_form = s.flag("closed_form", true);
  cfg.support_threshold = s.number("support_threshold", 1e-2);
  cfg.resolved["eps"] = cfg.eps;
  cfg.resolved["extrapolate"] = cfg.extrapolate;
  cfg.resolved["closed_form"] = cfg.closed_form;
  cfg.resolved["support_threshold"] = cfg.support_threshold;

  parse_solver(s.has("solver") ? *s.get("solver") : json::object(), cfg);

  if (const json* o = s.get("oracle")) {
    Section os(*o, "oracle");
    cfg.oracle_n_max = static_cast<int>(os.count("n_max", 6));
    os.finish();
  }
  if (cfg.oracle_n_max < 1) bad("oracle.n_max", "must be positive");
  cfg.resolved["oracle"] = {{"n_max", cfg.oracle_n_max}};

  if (const json* d = s.get("diagnose")) {
    Section ds(*d, "diagnose");
    cfg.diagnose_order = static_cast<int>(ds.count("order", 2));
    ds.finish();
  }
  if (cfg.diagnose_order < 1 || cfg.diagnose_order > 2) bad("diagnose.order", "must be 1 or 2");
  cfg.resolved["diagnose"] = {{"order", cfg.diagnose_order}};

  parse_mc(s.has("mc") ? *s.get("mc") : json::object(), cfg);
  cfg.reference = s.text("reference", "");
  if (!cfg.reference.empty()) cfg.resolved["reference"] = cfg.reference;
  s.finish();
  return cfg;
}

namespace {

double poly1(const std::vector<double>& c, double x) {
  double v = 0.0;
  for (std::size_t k = c.size(); k-- > 0;) v = v * x + c[k];
  return v;
}

double poly2(const std::vector<std::vector<double>>& c, double x, double y) {
  double v = 0.0, xp = 1.0;
  for (const auto& row : c) {
    v += xp * poly1(row, y);
    xp *= x;
  }
  return v;
}

double poly3(const std::vector<std::vector<std::vector<double>>>& c, double x, double y, double z) {
  double v = 0.0, xp = 1.0;
  for (const auto& slab : c) {
    v += xp * poly2(slab, y, z);
    xp *= x;
  }
  return v;
}

}  // namespace

KernelPtr build_kernel(const RunConfig& cfg) {
  const auto& e = cfg.ensemble;
  switch (e.type) {
    case EnsembleType::kWigner:
      return wigner_kernel(e.s);
    case EnsembleType::kInhomogeneous: {
      Profile s2 = e.s2;
      return inhomogeneous_wigner_kernel([s2](double x) { return std::sqrt(s2(x)); });
    }
    case EnsembleType::kHaar:
      return haar_kernel(e.spectrum->cumulants(e.cumulant_order), e.spectrum);
    case EnsembleType::kQssep:
      return qssep_kernel();
    case EnsembleType::kCustom: {
      GenericKernelSpec spec;
      spec.name = "custom";
      // Missing lower orders are zero; the generic kernel needs them present.
      spec.g1 = [c = e.g1](double x) { return poly1(c, x); };
      if (!e.g2.empty() || !e.g3.empty())
        spec.g2 = [c = e.g2](double x, double y) { return 0.5 * (poly2(c, x, y) + poly2(c, y, x)); };
      if (!e.g3.empty())
        spec.g3 = [c = e.g3](double x, double y, double z) {
          return (poly3(c, x, y, z) + poly3(c, y, z, x) + poly3(c, z, x, y)) / 3.0;
        };
      return make_generic_kernel(std::move(spec));
    }
  }
  fail(ErrorCode::kConfig, "unknown ensemble");
}

RealGrid build_h(const RunConfig& cfg, std::size_t cells) {
  if (cfg.h.is_indicator()) return indicator_grid(cfg.h.intervals, cells);
  const Profile& p = cfg.h.profile;
  return RealGrid::sample(cells, [&p](double x) { return p(x); });
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace sbspec
