#include "hlob/config.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace hlob {

namespace {

std::string join(const std::vector<std::string>& msgs) {
  std::string s = "invalid configuration:";
  for (const auto& m : msgs) s += "\n  " + m;
  return s;
}

class Reader {
 public:
  std::vector<std::string> errors;

  std::string at(const YAML::Node& n) const {
    const auto mark = n.Mark();
    if (mark.is_null()) return "";
    return "line " + std::to_string(mark.line + 1) + ": ";
  }

  void fail(const YAML::Node& n, const std::string& msg) { errors.push_back(at(n) + msg); }

  bool is_map(const YAML::Node& n, const std::string& what) {
    if (n.IsMap()) return true;
    fail(n, what + " must be a mapping");
    return false;
  }

  void allow(const YAML::Node& n, const std::string& what, std::initializer_list<const char*> keys) {
    if (!n.IsMap()) return;
    std::set<std::string> ok(keys.begin(), keys.end());
    for (const auto& kv : n) {
      const auto key = kv.first.as<std::string>();
      if (!ok.count(key)) fail(kv.first, "unknown key '" + key + "' in " + what);
    }
  }

  template <class T>
  T get(const YAML::Node& parent, const std::string& key, const T& fallback, bool required = false,
        const std::string& what = "") {
    const auto n = parent[key];
    if (!n) {
      if (required) fail(parent, "missing required key '" + key + "'" + (what.empty() ? "" : " in " + what));
      return fallback;
    }
    try {
      return n.as<T>();
    } catch (const YAML::Exception&) {
      fail(n, "'" + key + "' has the wrong type");
      return fallback;
    }
  }

  std::string family(const YAML::Node& n, const std::string& what) {
    return get<std::string>(n, "family", "", true, what);
  }

  SpatialProfile profile(const YAML::Node& n, const std::string& what) {
    if (!n) return SpatialProfile::one();
    if (!is_map(n, what)) return {};
    const auto fam = family(n, what);
    if (fam == "one") {
      allow(n, what, {"family"});
      return SpatialProfile::one();
    }
    if (fam == "gaussian") {
      allow(n, what, {"family", "amplitude", "center", "width"});
      const auto p = SpatialProfile::gaussian(get(n, "amplitude", 1.0), get(n, "center", 0.0),
                                              get(n, "width", 1.0, true, what));
      if (!(p.width > 0.0)) fail(n, what + ": width must be positive");
      return p;
    }
    if (!fam.empty()) fail(n, "unknown profile family '" + fam + "' in " + what);
    return {};
  }

  ProfileFn profile_fn(const YAML::Node& n, const std::string& what) {
    ProfileFn f{1.0, {}};
    if (!n) return f;
    if (!is_map(n, what)) return f;
    allow(n, what, {"base", "bumps"});
    f.base = get(n, "base", 1.0);
    if (const auto b = n["bumps"]) {
      if (!b.IsSequence()) {
        fail(b, what + ".bumps must be a list");
      } else {
        for (const auto& e : b) f.bumps.push_back(profile(e, what + ".bumps"));
      }
    }
    return f;
  }

  RateFamily rate(const YAML::Node& n, const std::string& what) {
    if (!n) return RateFamily::constant(0.0);
    if (!is_map(n, what)) return {};
    const auto fam = family(n, what);
    const double inf = std::numeric_limits<double>::infinity();
    if (fam == "constant") {
      allow(n, what, {"family", "value"});
      return RateFamily::constant(get(n, "value", 0.0, true, what));
    }
    if (fam == "spread") {
      allow(n, what, {"family", "cap"});
      return RateFamily::spread(get(n, "cap", inf));
    }
    if (fam == "price_squared") {
      allow(n, what, {"family", "scale", "cap"});
      return RateFamily::price_squared(get(n, "scale", 1.0), get(n, "cap", inf));
    }
    if (!fam.empty()) fail(n, "unknown rate family '" + fam + "' in " + what);
    return {};
  }

  SizeMeasure size(const YAML::Node& n, const std::string& what) {
    if (!n) return SizeMeasure::dirac(0.0);
    if (!is_map(n, what)) return {};
    const auto fam = family(n, what);
    if (fam == "dirac") {
      allow(n, what, {"family", "z"});
      return SizeMeasure::dirac(get(n, "z", 0.0, true, what));
    }
    if (fam == "exponential") {
      allow(n, what, {"family", "rate"});
      return SizeMeasure::exponential(get(n, "rate", 0.0, true, what));
    }
    if (fam == "lognormal") {
      allow(n, what, {"family", "m", "s"});
      return SizeMeasure::lognormal(get(n, "m", 0.0, true, what), get(n, "s", 0.0, true, what));
    }
    if (!fam.empty()) fail(n, "unknown size family '" + fam + "' in " + what);
    return {};
  }

  TemporalTerm term(const YAML::Node& n, const std::string& what) {
    if (!is_map(n, what)) return {};
    allow(n, what, {"c", "power", "kappa"});
    return {get(n, "c", 0.0, true, what), get(n, "power", 0), get(n, "kappa", 0.0)};
  }

  KernelTime time(const YAML::Node& n, const std::string& what, double horizon) {
    KernelTime k;
    if (!n) {
      fail(n, "missing 'time' in " + what);
      return k;
    }
    if (!is_map(n, what)) return k;
    k.family = family(n, what);
    if (k.family == "constant") {
      allow(n, what, {"family", "c"});
      k.c = get(n, "c", 0.0, true, what);
    } else if (k.family == "exponential" || k.family == "gamma") {
      allow(n, what, {"family", "c", "kappa"});
      k.c = get(n, "c", 0.0, true, what);
      k.kappa = get(n, "kappa", 0.0, true, what);
      if (k.kappa < 0.0) fail(n, what + ": kappa must be nonnegative");
    } else if (k.family == "custom") {
      allow(n, what, {"family", "terms", "envelope"});
      const auto t = n["terms"];
      if (!t || !t.IsSequence() || t.size() == 0) {
        fail(n, what + ": custom kernels need a nonempty 'terms' list");
      } else {
        for (const auto& e : t) {
          const auto tt = term(e, what + ".terms");
          if (tt.power != 0 && tt.power != 1) fail(e, what + ": term power must be 0 or 1");
          if (tt.kappa < 0.0) fail(e, what + ": term kappa must be nonnegative");
          k.terms.push_back(tt);
        }
      }
      const auto env = n["envelope"];
      if (!env) {
        fail(n, what + ": custom kernels must declare an envelope {c, kappa}");
      } else if (is_map(env, what + ".envelope")) {
        allow(env, what + ".envelope", {"c", "kappa"});
        k.envelope = TemporalTerm{get(env, "c", 0.0, true, what + ".envelope"), 0,
                                  get(env, "kappa", 0.0, true, what + ".envelope")};
        const double upto = std::max(horizon, 1.0) * 10.0;
        for (int i = 0; i <= 2000; ++i) {
          const double s = upto * i / 2000.0;
          double sum = 0.0;
          for (const auto& tt : k.terms) sum += std::abs(tt(s));
          if (sum > (*k.envelope)(s) * (1.0 + 1e-12) + 1e-300) {
            fail(env, what + ": envelope does not dominate the kernel at t = " + std::to_string(s));
            break;
          }
        }
      }
    } else if (!k.family.empty()) {
      fail(n, "unknown kernel family '" + k.family + "' in " + what);
    }
    return k;
  }

  SideModel side(const YAML::Node& n, const std::string& what) {
    SideModel s;
    if (!n) return s;
    if (!is_map(n, what)) return s;
    allow(n, what, {"rho", "varrho", "mu_hat", "beta_hat", "placement", "cancellation", "placement_size",
                    "cancellation_size"});
    s.rho = rate(n["rho"], what + ".rho");
    s.varrho = rate(n["varrho"], what + ".varrho");
    s.mu_hat = rate(n["mu_hat"], what + ".mu_hat");
    s.beta_hat = rate(n["beta_hat"], what + ".beta_hat");
    const char* names[2] = {"placement", "cancellation"};
    for (int k = 0; k < 2; ++k) {
      const auto e = n[names[k]];
      const std::string w = what + "." + names[k];
      if (!e) continue;
      if (!is_map(e, w)) continue;
      allow(e, w, {"multiplier", "profile"});
      s.lambda_hat[static_cast<std::size_t>(k)] = {rate(e["multiplier"], w + ".multiplier"),
                                                   profile(e["profile"], w + ".profile")};
    }
    s.sizes[0] = size(n["placement_size"], what + ".placement_size");
    s.sizes[1] = size(n["cancellation_size"], what + ".cancellation_size");
    return s;
  }
};

bool is_side(const std::string& s) { return s == "a" || s == "b"; }

void check_kernel_slots(Reader& r, const YAML::Node& n, const KernelDecl& d) {
  auto active = [&](const std::string& s) {
    try {
      parse_active(s);
    } catch (const std::invalid_argument&) {
      r.fail(n, "kernel " + d.kind + ": '" + s + "' is not an active type (aM, aL, bM, bL)");
    }
  };
  auto passive = [&](const std::string& s) {
    try {
      parse_passive(s);
    } catch (const std::invalid_argument&) {
      r.fail(n, "kernel " + d.kind + ": '" + s + "' is not a passive type (aL, aC, bL, bC)");
    }
  };
  auto side = [&](const std::string& s) {
    if (!is_side(s)) r.fail(n, "kernel " + d.kind + ": target must be 'a' or 'b'");
  };
  if (d.kind == "phi" || d.kind == "theta") {
    side(d.target);
    active(d.source);
  } else if (d.kind == "Phi" || d.kind == "Theta") {
    side(d.target);
    passive(d.source);
  } else if (d.kind == "psi") {
    passive(d.target);
    active(d.source);
  } else if (d.kind == "Psi") {
    passive(d.target);
    passive(d.source);
  } else {
    r.fail(n, "unknown kernel kind '" + d.kind + "' (phi, theta, Phi, Theta, psi, Psi)");
  }
}

void emit_profile(YAML::Emitter& e, const SpatialProfile& p) {
  e << YAML::Flow << YAML::BeginMap;
  if (p.kind == SpatialProfile::Kind::One) {
    e << YAML::Key << "family" << YAML::Value << "one";
  } else {
    e << YAML::Key << "family" << YAML::Value << "gaussian" << YAML::Key << "amplitude" << YAML::Value << p.amplitude
      << YAML::Key << "center" << YAML::Value << p.center << YAML::Key << "width" << YAML::Value << p.width;
  }
  e << YAML::EndMap;
}

void emit_profile_fn(YAML::Emitter& e, const ProfileFn& f) {
  e << YAML::BeginMap << YAML::Key << "base" << YAML::Value << f.base << YAML::Key << "bumps" << YAML::Value
    << YAML::BeginSeq;
  for (const auto& b : f.bumps) emit_profile(e, b);
  e << YAML::EndSeq << YAML::EndMap;
}

void emit_rate(YAML::Emitter& e, const RateFamily& r) {
  e << YAML::Flow << YAML::BeginMap;
  switch (r.kind) {
    case RateFamily::Kind::Constant:
      e << YAML::Key << "family" << YAML::Value << "constant" << YAML::Key << "value" << YAML::Value << r.value;
      break;
    case RateFamily::Kind::Spread:
      e << YAML::Key << "family" << YAML::Value << "spread" << YAML::Key << "cap" << YAML::Value << r.cap;
      break;
    case RateFamily::Kind::PriceSquared:
      e << YAML::Key << "family" << YAML::Value << "price_squared" << YAML::Key << "scale" << YAML::Value << r.value
        << YAML::Key << "cap" << YAML::Value << r.cap;
      break;
  }
  e << YAML::EndMap;
}

void emit_size(YAML::Emitter& e, const SizeMeasure& s) {
  e << YAML::Flow << YAML::BeginMap;
  switch (s.kind) {
    case SizeMeasure::Kind::Dirac:
      e << YAML::Key << "family" << YAML::Value << "dirac" << YAML::Key << "z" << YAML::Value << s.p1;
      break;
    case SizeMeasure::Kind::Exponential:
      e << YAML::Key << "family" << YAML::Value << "exponential" << YAML::Key << "rate" << YAML::Value << s.p1;
      break;
    case SizeMeasure::Kind::LogNormal:
      e << YAML::Key << "family" << YAML::Value << "lognormal" << YAML::Key << "m" << YAML::Value << s.p1
        << YAML::Key << "s" << YAML::Value << s.p2;
      break;
  }
  e << YAML::EndMap;
}

void emit_time(YAML::Emitter& e, const KernelTime& k) {
  e << YAML::Flow << YAML::BeginMap << YAML::Key << "family" << YAML::Value << k.family;
  if (k.family == "custom") {
    e << YAML::Key << "terms" << YAML::Value << YAML::BeginSeq;
    for (const auto& t : k.terms)
      e << YAML::BeginMap << YAML::Key << "c" << YAML::Value << t.c << YAML::Key << "power" << YAML::Value << t.power
        << YAML::Key << "kappa" << YAML::Value << t.kappa << YAML::EndMap;
    e << YAML::EndSeq;
    if (k.envelope)
      e << YAML::Key << "envelope" << YAML::Value << YAML::BeginMap << YAML::Key << "c" << YAML::Value
        << k.envelope->c << YAML::Key << "kappa" << YAML::Value << k.envelope->kappa << YAML::EndMap;
  } else {
    e << YAML::Key << "c" << YAML::Value << k.c;
    if (k.family != "constant") e << YAML::Key << "kappa" << YAML::Value << k.kappa;
  }
  e << YAML::EndMap;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> messages)
    : std::invalid_argument(join(messages)), messages_(std::move(messages)) {}

std::vector<TemporalTerm> KernelTime::expand() const {
  if (family == "constant") return {{c, 0, 0.0}};
  if (family == "exponential") return {{c, 0, kappa}};
  if (family == "gamma") return {{c, 1, kappa}};
  if (family == "custom") return terms;
  throw std::invalid_argument("unknown kernel family '" + family + "'");
}

LimitModel RunConfig::limit_model() const {
  LimitModel m;
  m.side = sides;
  auto side_index = [](const std::string& s) { return static_cast<std::size_t>(s == "b" ? 1 : 0); };
  for (const auto& d : kernels) {
    SpaceTimeKernel k;
    for (const auto& t : d.time.expand()) k.terms.push_back({t, d.target_profile, d.source_profile});
    if (d.kind == "phi") {
      m.phi[side_index(d.target)][static_cast<std::size_t>(parse_active(d.source))] += k;
    } else if (d.kind == "theta") {
      m.theta[side_index(d.target)][static_cast<std::size_t>(parse_active(d.source))] += k;
    } else if (d.kind == "Phi") {
      m.Phi[side_index(d.target)][static_cast<std::size_t>(parse_passive(d.source))] += k;
    } else if (d.kind == "Theta") {
      m.Theta[side_index(d.target)][static_cast<std::size_t>(parse_passive(d.source))] += k;
    } else if (d.kind == "psi") {
      m.psi[static_cast<std::size_t>(parse_passive(d.target))][static_cast<std::size_t>(parse_active(d.source))] += k;
    } else if (d.kind == "Psi") {
      m.Psi[static_cast<std::size_t>(parse_passive(d.target))][static_cast<std::size_t>(parse_passive(d.source))] += k;
    } else {
      throw std::invalid_argument("unknown kernel kind '" + d.kind + "'");
    }
  }
  return m;
}

RunConfig parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError({"line " + std::to_string(e.mark.line + 1) + ": " + e.msg});
  }
  Reader r;
  RunConfig c;
  if (!root.IsMap()) throw ConfigError({"configuration must be a mapping"});
  r.allow(root, "configuration",
          {"schema_version", "model", "bounds", "grid", "initial", "sides", "kernels", "experiment", "oracle",
           "resolvent", "output"});

  c.schema_version = r.get(root, "schema_version", 0, true);
  if (root["schema_version"] && c.schema_version != kSchemaVersion)
    r.fail(root["schema_version"], "unsupported schema_version " + std::to_string(c.schema_version) +
                                       " (expected " + std::to_string(kSchemaVersion) + ")");
  c.model = r.get<std::string>(root, "model", "limit", true);
  if (c.model != "micro" && c.model != "limit" && c.model != "oracle" && c.model != "converge")
    r.fail(root["model"], "model must be one of micro, limit, oracle, converge");

  const auto b = root["bounds"];
  if (!b) {
    r.fail(root, "missing bound declarations: 'bounds' with c0 and lipschitz is required");
  } else if (r.is_map(b, "bounds")) {
    r.allow(b, "bounds", {"c0", "lipschitz"});
    c.bounds.c0 = r.get(b, "c0", 0.0, true, "bounds");
    c.bounds.lipschitz = r.get(b, "lipschitz", 0.0, true, "bounds");
    if (c.bounds.c0 < 0.0 || c.bounds.lipschitz < 0.0) r.fail(b, "bounds must be nonnegative");
  }

  if (const auto g = root["grid"]) {
    if (r.is_map(g, "grid")) {
      r.allow(g, "grid", {"delta_x", "delta_v", "half_width", "nodes", "dt", "horizon"});
      auto& G = c.grid;
      G.delta_x = r.get(g, "delta_x", G.delta_x);
      G.delta_v = r.get(g, "delta_v", G.delta_v);
      G.half_width = r.get(g, "half_width", G.half_width);
      G.nodes = r.get(g, "nodes", G.nodes);
      G.dt = r.get(g, "dt", G.dt);
      G.horizon = r.get(g, "horizon", G.horizon);
      if (!(G.delta_x > 0.0) || !(G.delta_v > 0.0)) r.fail(g, "grid.delta_x and grid.delta_v must be positive");
      if (G.delta_v > G.delta_x)
        r.fail(g, "grid.delta_v must not exceed grid.delta_x: a cancellation scales tick volume by "
                  "1 + (delta_v/delta_x)(e^{-z} - 1), which stays nonnegative only when delta_v <= delta_x");
      if (!(G.half_width > 0.0)) r.fail(g, "grid.half_width must be positive");
      if (G.nodes < 3 || G.nodes % 2 == 0) r.fail(g, "grid.nodes must be odd and at least 3");
      if (!(G.dt > 0.0) || !(G.horizon > 0.0)) r.fail(g, "grid.dt and grid.horizon must be positive");
      else if (std::abs(G.horizon / G.dt - std::round(G.horizon / G.dt)) > 1e-6)
        r.fail(g, "grid.horizon must be an integer multiple of grid.dt");
    }
  }

  if (const auto i = root["initial"]) {
    if (r.is_map(i, "initial")) {
      r.allow(i, "initial", {"ask", "bid", "ask_profile", "bid_profile"});
      c.initial.ask = r.get(i, "ask", c.initial.ask);
      c.initial.bid = r.get(i, "bid", c.initial.bid);
      c.initial.ask_profile = r.profile_fn(i["ask_profile"], "initial.ask_profile");
      c.initial.bid_profile = r.profile_fn(i["bid_profile"], "initial.bid_profile");
      if (c.initial.ask < c.initial.bid) r.fail(i, "initial.ask must not be below initial.bid");
    }
  }

  if (const auto s = root["sides"]) {
    if (r.is_map(s, "sides")) {
      r.allow(s, "sides", {"ask", "bid"});
      c.sides[0] = r.side(s["ask"], "sides.ask");
      c.sides[1] = r.side(s["bid"], "sides.bid");
    }
  }

  if (const auto ks = root["kernels"]) {
    if (!ks.IsSequence()) {
      r.fail(ks, "kernels must be a list");
    } else {
      for (const auto& k : ks) {
        if (!r.is_map(k, "kernel")) continue;
        r.allow(k, "kernel", {"kind", "target", "source", "time", "target_profile", "source_profile"});
        KernelDecl d;
        d.kind = r.get<std::string>(k, "kind", "", true, "kernel");
        d.target = r.get<std::string>(k, "target", "", true, "kernel");
        d.source = r.get<std::string>(k, "source", "", true, "kernel");
        d.time = r.time(k["time"], "kernel " + d.kind, c.grid.horizon);
        d.target_profile = r.profile(k["target_profile"], "kernel target_profile");
        d.source_profile = r.profile(k["source_profile"], "kernel source_profile");
        check_kernel_slots(r, k, d);
        c.kernels.push_back(d);
      }
    }
  }

  if (const auto e = root["experiment"]) {
    if (r.is_map(e, "experiment")) {
      r.allow(e, "experiment", {"levels", "replicates", "limit_replicates", "seed", "threads", "level", "bootstrap",
                                "tolerance_factor", "tests"});
      auto& E = c.experiment;
      E.levels = r.get(e, "levels", E.levels);
      E.replicates = r.get(e, "replicates", E.replicates);
      E.limit_replicates = r.get(e, "limit_replicates", E.limit_replicates);
      E.seed = r.get(e, "seed", E.seed);
      E.threads = r.get(e, "threads", E.threads);
      E.level = r.get(e, "level", E.level);
      E.bootstrap = r.get(e, "bootstrap", E.bootstrap);
      E.tolerance_factor = r.get(e, "tolerance_factor", E.tolerance_factor);
      if (const auto t = e["tests"]) {
        if (!t.IsSequence()) r.fail(t, "experiment.tests must be a list");
        else
          for (const auto& p : t) E.tests.push_back(r.profile(p, "experiment.tests"));
      }
      if (E.level < 0 || E.levels < 0) r.fail(e, "experiment levels must be nonnegative");
      if (E.threads == 0) r.fail(e, "experiment.threads must be at least 1");
    }
  }

  if (const auto o = root["oracle"]) {
    if (r.is_map(o, "oracle")) {
      r.allow(o, "oracle", {"checks", "cir", "clustering"});
      auto& O = c.oracle;
      if (const auto ch = o["checks"]) {
        if (!ch.IsSequence()) {
          r.fail(ch, "oracle.checks must be a list");
        } else {
          for (const auto& x : ch) {
            const auto name = x.as<std::string>();
            if (name != "cir" && name != "spread" && name != "clustering" && name != "book" && name != "intensity")
              r.fail(x, "unknown oracle check '" + name + "' (cir, spread, clustering, book, intensity)");
            O.checks.push_back(name);
          }
        }
      }
      if (const auto ci = o["cir"]) {
        r.allow(ci, "oracle.cir", {"x0", "a", "b", "c", "paths", "steps"});
        O.cir_x0 = r.get(ci, "x0", O.cir_x0);
        O.cir_a = r.get(ci, "a", O.cir_a);
        O.cir_b = r.get(ci, "b", O.cir_b);
        O.cir_c = r.get(ci, "c", O.cir_c);
        O.cir_paths = r.get(ci, "paths", O.cir_paths);
        O.cir_steps = r.get(ci, "steps", O.cir_steps);
        if (!(O.cir_x0 > 0.0)) r.fail(ci, "oracle.cir.x0 must be positive");
      }
      if (const auto cl = o["clustering"]) {
        r.allow(cl, "oracle.clustering", {"sigma2", "c", "kappa", "price_cap", "t", "eps", "lag", "dt", "replicates"});
        O.sigma2 = r.get(cl, "sigma2", O.sigma2);
        O.phi_c = r.get(cl, "c", O.phi_c);
        O.phi_kappa = r.get(cl, "kappa", O.phi_kappa);
        O.price_cap = r.get(cl, "price_cap", O.price_cap);
        O.clustering_t = r.get(cl, "t", O.clustering_t);
        O.clustering_eps = r.get(cl, "eps", O.clustering_eps);
        O.clustering_lag = r.get(cl, "lag", O.clustering_lag);
        O.clustering_dt = r.get(cl, "dt", O.clustering_dt);
        if (!(O.clustering_dt > 0.0)) r.fail(cl, "oracle.clustering.dt must be positive");
        O.clustering_replicates = r.get(cl, "replicates", O.clustering_replicates);
      }
    }
  }

  if (const auto rv = root["resolvent"]) {
    if (r.is_map(rv, "resolvent")) {
      r.allow(rv, "resolvent", {"kernels", "dt", "steps"});
      c.resolvent.dt = r.get(rv, "dt", c.resolvent.dt);
      c.resolvent.steps = r.get(rv, "steps", c.resolvent.steps);
      if (const auto ks = rv["kernels"]) {
        if (!ks.IsSequence()) r.fail(ks, "resolvent.kernels must be a list");
        else
          for (const auto& k : ks) c.resolvent.kernels.push_back(r.time(k, "resolvent kernel", c.grid.horizon));
      }
    }
  }

  if (const auto o = root["output"]) {
    if (r.is_map(o, "output")) {
      r.allow(o, "output", {"cadence", "paths"});
      c.output.cadence = r.get(o, "cadence", c.output.cadence);
      c.output.paths = r.get(o, "paths", c.output.paths);
      if (c.output.cadence == 0) r.fail(o, "output.cadence must be at least 1");
    }
  }

  if (r.errors.empty()) {
    try {
      c.limit_model().validate();
    } catch (const std::invalid_argument& e) {
      r.errors.push_back(std::string("model: ") + e.what());
    }
  }
  if (!r.errors.empty()) throw ConfigError(r.errors);
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open configuration file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& c) {
  YAML::Emitter e;
  e.SetDoublePrecision(17);
  e << YAML::BeginMap;
  e << YAML::Key << "schema_version" << YAML::Value << c.schema_version;
  e << YAML::Key << "model" << YAML::Value << c.model;
  e << YAML::Key << "bounds" << YAML::Value << YAML::Flow << YAML::BeginMap << YAML::Key << "c0" << YAML::Value
    << c.bounds.c0 << YAML::Key << "lipschitz" << YAML::Value << c.bounds.lipschitz << YAML::EndMap;
  const auto& G = c.grid;
  e << YAML::Key << "grid" << YAML::Value << YAML::BeginMap << YAML::Key << "delta_x" << YAML::Value << G.delta_x
    << YAML::Key << "delta_v" << YAML::Value << G.delta_v << YAML::Key << "half_width" << YAML::Value << G.half_width
    << YAML::Key << "nodes" << YAML::Value << G.nodes << YAML::Key << "dt" << YAML::Value << G.dt << YAML::Key
    << "horizon" << YAML::Value << G.horizon << YAML::EndMap;
  e << YAML::Key << "initial" << YAML::Value << YAML::BeginMap << YAML::Key << "ask" << YAML::Value << c.initial.ask
    << YAML::Key << "bid" << YAML::Value << c.initial.bid << YAML::Key << "ask_profile" << YAML::Value;
  emit_profile_fn(e, c.initial.ask_profile);
  e << YAML::Key << "bid_profile" << YAML::Value;
  emit_profile_fn(e, c.initial.bid_profile);
  e << YAML::EndMap;

  e << YAML::Key << "sides" << YAML::Value << YAML::BeginMap;
  const char* side_names[2] = {"ask", "bid"};
  for (int I = 0; I < 2; ++I) {
    const auto& s = c.sides[static_cast<std::size_t>(I)];
    e << YAML::Key << side_names[I] << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "rho" << YAML::Value;
    emit_rate(e, s.rho);
    e << YAML::Key << "varrho" << YAML::Value;
    emit_rate(e, s.varrho);
    e << YAML::Key << "mu_hat" << YAML::Value;
    emit_rate(e, s.mu_hat);
    e << YAML::Key << "beta_hat" << YAML::Value;
    emit_rate(e, s.beta_hat);
    const char* names[2] = {"placement", "cancellation"};
    for (int k = 0; k < 2; ++k) {
      const auto& lh = s.lambda_hat[static_cast<std::size_t>(k)];
      e << YAML::Key << names[k] << YAML::Value << YAML::BeginMap << YAML::Key << "multiplier" << YAML::Value;
      emit_rate(e, lh.multiplier);
      e << YAML::Key << "profile" << YAML::Value;
      emit_profile(e, lh.profile);
      e << YAML::EndMap;
    }
    e << YAML::Key << "placement_size" << YAML::Value;
    emit_size(e, s.sizes[0]);
    e << YAML::Key << "cancellation_size" << YAML::Value;
    emit_size(e, s.sizes[1]);
    e << YAML::EndMap;
  }
  e << YAML::EndMap;

  e << YAML::Key << "kernels" << YAML::Value << YAML::BeginSeq;
  for (const auto& d : c.kernels) {
    e << YAML::BeginMap << YAML::Key << "kind" << YAML::Value << d.kind << YAML::Key << "target" << YAML::Value
      << d.target << YAML::Key << "source" << YAML::Value << d.source << YAML::Key << "time" << YAML::Value;
    emit_time(e, d.time);
    e << YAML::Key << "target_profile" << YAML::Value;
    emit_profile(e, d.target_profile);
    e << YAML::Key << "source_profile" << YAML::Value;
    emit_profile(e, d.source_profile);
    e << YAML::EndMap;
  }
  e << YAML::EndSeq;

  const auto& E = c.experiment;
  e << YAML::Key << "experiment" << YAML::Value << YAML::BeginMap << YAML::Key << "levels" << YAML::Value << E.levels
    << YAML::Key << "replicates" << YAML::Value << E.replicates << YAML::Key << "limit_replicates" << YAML::Value
    << E.limit_replicates << YAML::Key << "seed" << YAML::Value << E.seed << YAML::Key << "threads" << YAML::Value
    << E.threads << YAML::Key << "level" << YAML::Value << E.level << YAML::Key << "bootstrap" << YAML::Value
    << E.bootstrap << YAML::Key << "tolerance_factor" << YAML::Value << E.tolerance_factor << YAML::Key << "tests"
    << YAML::Value << YAML::BeginSeq;
  for (const auto& t : E.tests) emit_profile(e, t);
  e << YAML::EndSeq << YAML::EndMap;

  const auto& O = c.oracle;
  e << YAML::Key << "oracle" << YAML::Value << YAML::BeginMap << YAML::Key << "checks" << YAML::Value << YAML::Flow
    << O.checks;
  e << YAML::Key << "cir" << YAML::Value << YAML::Flow << YAML::BeginMap << YAML::Key << "x0" << YAML::Value
    << O.cir_x0 << YAML::Key << "a" << YAML::Value << O.cir_a << YAML::Key << "b" << YAML::Value << O.cir_b
    << YAML::Key << "c" << YAML::Value << O.cir_c << YAML::Key << "paths" << YAML::Value << O.cir_paths << YAML::Key
    << "steps" << YAML::Value << O.cir_steps << YAML::EndMap;
  e << YAML::Key << "clustering" << YAML::Value << YAML::Flow << YAML::BeginMap << YAML::Key << "sigma2"
    << YAML::Value << O.sigma2 << YAML::Key << "c" << YAML::Value << O.phi_c << YAML::Key << "kappa" << YAML::Value
    << O.phi_kappa << YAML::Key << "price_cap" << YAML::Value << O.price_cap << YAML::Key << "t" << YAML::Value
    << O.clustering_t << YAML::Key << "eps" << YAML::Value << O.clustering_eps << YAML::Key << "lag" << YAML::Value
    << O.clustering_lag << YAML::Key << "dt" << YAML::Value << O.clustering_dt << YAML::Key << "replicates" << YAML::Value << O.clustering_replicates << YAML::EndMap;
  e << YAML::EndMap;

  e << YAML::Key << "resolvent" << YAML::Value << YAML::BeginMap << YAML::Key << "dt" << YAML::Value
    << c.resolvent.dt << YAML::Key << "steps" << YAML::Value << c.resolvent.steps << YAML::Key << "kernels"
    << YAML::Value << YAML::BeginSeq;
  for (const auto& k : c.resolvent.kernels) emit_time(e, k);
  e << YAML::EndSeq << YAML::EndMap;

  e << YAML::Key << "output" << YAML::Value << YAML::Flow << YAML::BeginMap << YAML::Key << "cadence" << YAML::Value
    << c.output.cadence << YAML::Key << "paths" << YAML::Value << c.output.paths << YAML::EndMap;
  e << YAML::EndMap;
  return std::string(e.c_str()) + "\n";
}

}  // namespace hlob
