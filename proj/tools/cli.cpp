#include "kdilate/cli.hpp"

#include "kdilate/construct.hpp"
#include "kdilate/dilation.hpp"
#include "kdilate/error.hpp"
#include "kdilate/hopf.hpp"
#include "kdilate/ledger.hpp"

#include <CLI11.hpp>

#include <cctype>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <unistd.h>

namespace kdilate::cli {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// RunConfig

json RunConfig::to_json() const {
  json j;
  j["seed"] = seed;
  j["budget"] = budget;
  j["epsilon_grid"] = epsilon_grid;
  j["k"] = k;
  j["construction"] = json{{"m", m}, {"n", n}, {"p", p}, {"f1", f1}, {"f2", f2}};
  j["output_dir"] = output_dir;
  j["format"] = format;
  return j;
}

RunConfig RunConfig::from_json(const json& j) {
  if (!j.is_object()) throw DomainError("config: expected a JSON object");
  RunConfig c;
  for (const auto& [key, v] : j.items()) {
    if (key == "seed") c.seed = v.get<std::uint64_t>();
    else if (key == "budget") c.budget = v.get<std::uint64_t>();
    else if (key == "k") c.k = v.get<int>();
    else if (key == "output_dir") c.output_dir = v.get<std::string>();
    else if (key == "format") c.format = v.get<std::string>();
    else if (key == "epsilon_grid") {
      c.epsilon_grid.clear();
      for (const auto& e : v) c.epsilon_grid.push_back(e.is_string() ? e.get<std::string>() : format_double(e.get<double>()));
    } else if (key == "construction") {
      for (const auto& [ck, cv] : v.items()) {
        if (ck == "m") c.m = cv.get<int>();
        else if (ck == "n") c.n = cv.get<int>();
        else if (ck == "p") c.p = cv.get<int>();
        else if (ck == "f1") c.f1 = cv.get<std::string>();
        else if (ck == "f2") c.f2 = cv.get<std::string>();
        else throw DomainError("config: unknown construction key '" + ck + "'");
      }
    } else {
      throw DomainError("config: unknown key '" + key + "'");
    }
  }
  return c;
}

// ---------------------------------------------------------------------------
// Parsing helpers

double parse_rational(const std::string& raw) {
  std::string s;
  for (char ch : raw)
    if (!std::isspace(static_cast<unsigned char>(ch))) s += ch;
  auto num = [&](const std::string& t) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(t, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (t.empty() || used != t.size() || !std::isfinite(v)) throw DomainError("not a number: '" + raw + "'");
    return v;
  };
  if (auto pos = s.find('/'); pos != std::string::npos) {
    const double d = num(s.substr(pos + 1));
    if (d == 0.0) throw DomainError("zero denominator in '" + raw + "'");
    return num(s.substr(0, pos)) / d;
  }
  if (auto pos = s.find('^'); pos != std::string::npos) return std::pow(num(s.substr(0, pos)), num(s.substr(pos + 1)));
  return num(s);
}

namespace {

class SpecParser {
 public:
  explicit SpecParser(const std::string& s) : s_(s) {}

  MapExpr parse() {
    MapExpr e = expr();
    skip();
    if (i_ != s_.size()) fail("unexpected '" + s_.substr(i_) + "'");
    return e;
  }

 private:
  const std::string& s_;
  std::size_t i_ = 0;

  [[noreturn]] void fail(const std::string& what) const {
    throw DomainError("map spec '" + s_ + "': " + what);
  }
  void skip() {
    while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
  }
  bool eat(const std::string& tok) {
    skip();
    if (s_.compare(i_, tok.size(), tok) == 0) {
      i_ += tok.size();
      return true;
    }
    return false;
  }

  MapExpr expr() {
    std::vector<MapExpr> parts{term()};
    while (eat("\xE2\x88\x98") || eat("@")) parts.push_back(term());
    MapExpr e = parts.back();
    for (std::size_t j = parts.size() - 1; j-- > 0;) e = compose(parts[j], e);
    return e;
  }

  int integer() {
    skip();
    const std::size_t start = i_;
    if (i_ < s_.size() && (s_[i_] == '-' || s_[i_] == '+')) ++i_;
    while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) ++i_;
    if (i_ == start) fail("expected an integer");
    try {
      return std::stoi(s_.substr(start, i_ - start));
    } catch (const std::exception&) {
      fail("bad integer");
    }
  }

  std::vector<int> int_args() {
    std::vector<int> out;
    if (!eat("(")) return out;
    if (eat(")")) return out;
    do {
      out.push_back(integer());
    } while (eat(","));
    if (!eat(")")) fail("expected ')'");
    return out;
  }

  MapExpr term() {
    skip();
    if (eat("(")) {
      MapExpr e = expr();
      if (!eat(")")) fail("expected ')'");
      return e;
    }
    const std::size_t start = i_;
    while (i_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[i_])) || s_[i_] == '_')) ++i_;
    const std::string name = s_.substr(start, i_ - start);
    if (name.empty()) fail("expected a map name");

    if (name == "suspend") {
      if (!eat("(")) fail("suspend needs an argument");
      MapExpr inner = expr();
      if (!eat(")")) fail("expected ')'");
      return kdilate::suspend(inner);
    }
    const std::vector<int> a = int_args();
    auto want = [&](std::size_t lo, std::size_t hi) {
      if (a.size() < lo || a.size() > hi) fail(name + " takes " + std::to_string(lo) + ".." + std::to_string(hi) + " arguments");
    };
    if (name == "hopf") {
      want(0, 0);
      return kdilate::hopf();
    }
    if (name == "wrap" || name == "degree_wrap") {
      want(1, 4);
      return degree_wrap(a[0], a.size() > 1 ? a[1] : 0, a.size() > 2 ? a[2] : 1, a.size() > 3 ? a[3] : 3);
    }
    if (name == "id" || name == "identity") {
      want(1, 1);
      return identity(a[0]);
    }
    if (name == "reflect" || name == "reflection") {
      want(1, 1);
      return reflection(a[0]);
    }
    if (name == "constant") {
      if (a.empty()) return kdilate::constant(Space::sphere(3), Space::sphere(2));
      want(2, 2);
      return kdilate::constant(Space::sphere(a[0]), Space::sphere(a[1]));
    }
    if (name == "collapse" || name == "cube_collapse") {
      want(1, 1);
      return cube_collapse(a[0]);
    }
    if (name == "smash") {
      want(2, 2);
      return kdilate::smash(a[0], a[1]);
    }
    fail("unknown map '" + name + "'");
  }
};

}  // namespace

MapExpr parse_map_spec(const std::string& spec) {
  std::size_t first = spec.find_first_not_of(" \t\n");
  if (first == std::string::npos) throw DomainError("empty map spec");
  if (spec[first] == '{') {
    try {
      return map_from_json(json::parse(spec));
    } catch (const json::exception& e) {
      throw DomainError(std::string("map spec JSON: ") + e.what());
    }
  }
  return SpecParser(spec).parse();
}

void write_atomic(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + tmp.string());
    f << contents;
    f.flush();
    if (!f) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// Commands

namespace {

struct Outcome {
  json payload;
  std::string csv;   // empty when the command has no table form
  std::string text;  // empty when the command has no text form
  int code = exit_ok;
};

std::string status_name(ledger::LevelSummary::Status s) {
  switch (s) {
    case ledger::LevelSummary::Status::zero: return "zero";
    case ledger::LevelSummary::Status::whole: return "whole";
    case ledger::LevelSummary::Status::exact: return "exact";
    case ledger::LevelSummary::Status::bounded: return "bounded";
  }
  return "bounded";
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

std::string verdict_tag(ledger::Verdict v) {
  switch (v) {
    case ledger::Verdict::member: return "in V_k";
    case ledger::Verdict::non_member: return "not in V_k";
    case ledger::Verdict::unknown: return "?? UNKNOWN";
  }
  return "";
}

Outcome cmd_filtration(int m, int n, std::optional<int> only_k) {
  const ledger::FiltrationTable t = ledger::filtration_table(m, n);
  const ledger::CertificateGraph graph(ledger::builtin_facts());
  Outcome o;
  json& j = o.payload;
  j["m"] = m;
  j["n"] = n;
  j["group"] = t.group.describe();
  j["group_orders"] = t.group.orders;
  j["group_citation"] = t.group.citation;
  if (only_k) j["k_filter"] = *only_k;
  json levels = json::array();
  std::ostringstream txt;
  txt << "pi_" << m << "(S^" << n << ") = " << t.group.describe() << "\n\n";
  for (const auto& l : t.levels) {
    if (only_k && l.k != *only_k) continue;
    levels.push_back(json{{"k", l.k},
                          {"status", status_name(l.status)},
                          {"text", l.text},
                          {"contains", l.lower_generators},
                          {"upper", l.upper},
                          {"open_questions", l.open_questions}});
    txt << "  k=" << l.k << "  [" << status_name(l.status) << "]  " << l.text << "\n";
    for (const auto& q : l.open_questions) txt << "        open: " << q << "\n";
  }
  j["levels"] = levels;
  json certs = json::array();
  std::ostringstream csv;
  csv << "id,k,verdict,rule,premises,valid,label\n";
  txt << "\ncertificates:\n";
  for (const auto& c : t.certificates) {
    if (only_k && c.k != *only_k) continue;
    json cj = ledger::to_json(c);
    const auto r = graph.check(c);
    cj["valid"] = r.valid;
    certs.push_back(std::move(cj));
    std::string prem;
    for (const auto& p : c.premises) prem += (prem.empty() ? "" : ";") + p;
    csv << csv_field(c.id) << ',' << c.k << ',' << ledger::to_string(c.verdict) << ',' << ledger::to_string(c.rule)
        << ',' << csv_field(prem) << ',' << (r.valid ? "true" : "false") << ',' << csv_field(c.cls.label) << '\n';
    txt << "  " << c.id << "  k=" << c.k << "  " << verdict_tag(c.verdict) << "  via " << ledger::to_string(c.rule);
    if (!prem.empty()) txt << " <- " << prem;
    txt << "\n";
  }
  j["certificates"] = certs;
  json axioms = json::array();
  for (const auto& a : t.axioms)
    axioms.push_back(json{{"id", a.id}, {"statement", a.statement}, {"citation", a.citation}});
  j["axioms"] = axioms;
  j["provenance"] = "homotopy-ledger/filtration_table";
  o.csv = csv.str();
  o.text = txt.str();
  return o;
}

Outcome cmd_targets(int N, int count, int M_for_rank) {
  if (N < 2) throw DomainError("targets: N must be >= 2");
  Outcome o;
  json& j = o.payload;
  j["N"] = N;
  std::ostringstream csv, txt;
  if (N == 2) {
    const auto c = ledger::target_sphere_rank_certificate(M_for_rank, 2);
    j["certificate"] = ledger::to_json(c);
    j["note"] = "every map into S^2 has 3-dilation zero";
    csv << "M,k,rule,verdict\n" << M_for_rank << ',' << c.k << ',' << ledger::to_string(c.rule) << ','
        << ledger::to_string(c.verdict) << '\n';
    txt << "N=2: " << c.note << " (" << c.id << ", " << ledger::to_string(c.rule) << ")\n";
  } else {
    const auto ts = ledger::theorem1_certificates(N, count);
    json targets = json::array(), certs = json::array();
    csv << "M,i,k,rule,verdict\n";
    txt << "N=" << N << ": M =";
    for (const auto& t : ts) {
      targets.push_back(t.M);
      json c = ledger::to_json(t.certificate);
      c["M"] = t.M;
      certs.push_back(std::move(c));
      csv << t.M << ',' << t.i << ',' << t.certificate.k << ',' << ledger::to_string(t.certificate.rule) << ','
          << ledger::to_string(t.certificate.verdict) << '\n';
      txt << ' ' << t.M;
    }
    txt << "\n";
    j["targets"] = targets;
    j["certificates"] = certs;
  }
  j["provenance"] = "homotopy-ledger/theorem1_targets";
  o.csv = csv.str();
  o.text = txt.str();
  return o;
}

ledger::HomotopyClassDescriptor descriptor(const RunConfig& c) {
  ledger::HomotopyClassDescriptor a;
  a.m = c.m;
  a.n = c.n;
  a.p = c.p;
  a.label = c.f1;
  a.validate();
  return a;
}

MapExpr base_map(const RunConfig& c, const ledger::HomotopyClassDescriptor& a) {
  if (c.f2 != "collapse" && c.f2 != "collapse(" + std::to_string(c.p) + ")")
    throw DomainError("construction: only f2 = collapse(p) is supported");
  if (c.f1 == "auto") {
    auto b = realize_base(a);
    if (!b) throw DomainError("construction: no built-in base map S^" + std::to_string(a.m) + " -> S^" +
                              std::to_string(a.n) + "; pass --f1");
    return *b;
  }
  MapExpr b = parse_map_spec(c.f1);
  if (!(b->domain() == Space::sphere(a.m)) || !(b->codomain() == Space::sphere(a.n)))
    throw DomainError("construction: f1 must map S^" + std::to_string(a.m) + " -> S^" + std::to_string(a.n));
  return b;
}

std::vector<double> epsilons(const RunConfig& c) {
  std::vector<double> out;
  for (const auto& s : c.epsilon_grid) out.push_back(parse_rational(s));
  return out;
}

json suspension_json(const SuspensionMap& sm, int k) {
  json j;
  j["m"] = sm.m;
  j["n"] = sm.n;
  j["p"] = sm.p;
  j["epsilon"] = sm.epsilon;
  j["lipschitz"] = sm.lipschitz;
  j["smash_lipschitz"] = sm.smash_lipschitz;
  j["chart_distortion"] = sm.distortion;
  j["fold_count"] = sm.chart->fold_count();
  j["k"] = k;
  j["predicted_bound"] = sm.predicted_bound(k);
  j["epsilon_exponent"] = sm.epsilon_exponent(k);
  return j;
}

Outcome cmd_construct(const RunConfig& c) {
  const auto a = descriptor(c);
  const auto eps = epsilons(c);
  if (eps.empty()) throw DomainError("construct: empty epsilon grid");
  const SuspensionMap sm = rectangle_suspension(a, base_map(c, a), eps.front());
  Outcome o;
  o.payload = suspension_json(sm, c.k);
  o.payload["map"] = kdilate::to_json(sm.map);
  o.payload["provenance"] = "map-forge/rectangle_suspension";
  return o;
}

DilationOptions dilation_options(const RunConfig& c, unsigned threads) {
  DilationOptions d;
  d.seed = c.seed;
  d.threads = threads;
  return d;
}

Outcome cmd_dilation(const RunConfig& c, const std::string& map_spec, JacobianMode mode, unsigned threads) {
  DilationOptions d = dilation_options(c, threads);
  d.mode = mode;
  Outcome o;
  if (!map_spec.empty()) {
    const MapExpr e = parse_map_spec(map_spec);
    o.payload["map"] = kdilate::to_json(e);
    o.payload["report"] = kdilation(e, c.k, c.budget, d).to_json();
  } else {
    const auto a = descriptor(c);
    const auto eps = epsilons(c);
    if (eps.empty()) throw DomainError("dilation: empty epsilon grid");
    const SuspensionMap sm = rectangle_suspension(a, base_map(c, a), eps.front());
    d.predicted_bound = sm.predicted_bound(c.k);
    o.payload["construction"] = suspension_json(sm, c.k);
    o.payload["report"] = kdilation(sm.map, c.k, c.budget, d).to_json();
  }
  return o;
}

Outcome cmd_sweep(const RunConfig& c, unsigned threads, const json& envelope_head, std::ostream& err) {
  const auto a = descriptor(c);
  const auto eps = epsilons(c);
  if (eps.empty()) throw DomainError("sweep: empty epsilon grid");
  const SweepResult r = scaling_sweep(a, base_map(c, a), c.k, eps, c.budget, dilation_options(c, threads));
  Outcome o;
  o.payload = r.summary();
  o.csv = r.csv();

  const fs::path dir = c.output_dir.empty() ? fs::path(".") : fs::path(c.output_dir);
  const std::string stem =
      "sweep_m" + std::to_string(c.m) + "_n" + std::to_string(c.n) + "_p" + std::to_string(c.p) + "_k" + std::to_string(c.k);
  json env = envelope_head;
  env["payload"] = o.payload;
  write_atomic(dir / (stem + ".csv"), o.csv);
  write_atomic(dir / (stem + ".json"), env.dump(2) + "\n");
  err << "wrote " << (dir / (stem + ".csv")).string() << " and " << (dir / (stem + ".json")).string() << "\n";

  if (r.degenerate) {
    err << "sweep: " << r.note << "\n";
    o.code = exit_numerical;
  } else if (!r.slope_within(0.15)) {
    err << "sweep: fitted slope " << format_double(r.slope) << " is more than 0.15 away from "
        << format_double(r.predicted_exponent) << "\n";
    o.code = exit_threshold;
  }
  return o;
}

HopfOptions hopf_options(const RunConfig& c, int pair, unsigned threads) {
  HopfOptions h;
  h.trace.seed = c.seed;
  h.pair = pair;
  h.threads = threads;
  return h;
}

Outcome cmd_hopf(const RunConfig& c, const std::string& map_spec, int pair, std::optional<double> fitted_c,
                 bool with_vertices, unsigned threads) {
  const MapExpr e = parse_map_spec(map_spec);
  if (!(e->domain() == Space::sphere(3)) || !(e->codomain() == Space::sphere(2)))
    throw DomainError("hopf: map spec must describe a map S^3 -> S^2");
  const HopfOptions h = hopf_options(c, pair, threads);
  const DilationOptions d = dilation_options(c, threads);
  Outcome o;
  HopfComputation comp;
  try {
    comp = hopf_invariant(e, h);
  } catch (const NumericalError& ex) {
    throw NumericalError(std::string("hopf stage 'fiber tracing/linking': ") + ex.what());
  }
  double cfit = 0.0;
  if (fitted_c) {
    cfit = *fitted_c;
    o.payload["fitted_C_source"] = "command line";
  } else {
    try {
      cfit = calibrate_gromov_constant(c.budget, h, d);
    } catch (const NumericalError& ex) {
      throw NumericalError(std::string("hopf stage 'calibration': ") + ex.what());
    }
    o.payload["fitted_C_source"] = "calibrated on hopf∘wrap(d), d = 1..3, budget " + std::to_string(c.budget);
  }
  const DilationReport d2 = kdilation(e, 2, c.budget, d);
  const double hv = std::abs(static_cast<double>(comp.invariant));
  const double dd = d2.estimate * d2.estimate;
  GromovAudit audit;
  audit.hopf_invariant = comp.invariant;
  audit.dilation2 = d2;
  audit.fitted_c = cfit;
  audit.ratio = hv == 0.0 ? 0.0 : (dd > 0.0 ? hv / dd : std::numeric_limits<double>::infinity());
  audit.pass = hv <= cfit * dd * (1.0 + 1e-12);
  o.payload["map"] = kdilate::to_json(e);
  o.payload["H"] = comp.invariant;
  o.payload["D"] = d2.estimate;
  o.payload["ratio"] = audit.ratio;
  o.payload["fitted_C"] = cfit;
  o.payload["pass"] = audit.pass;
  o.payload["hopf"] = comp.to_json(with_vertices);
  o.payload["audit"] = audit.to_json();
  if (!audit.pass) o.code = exit_threshold;
  return o;
}

Outcome cmd_audit(const RunConfig& c, int dmax, unsigned threads) {
  if (dmax < 1) throw DomainError("audit: --dmax must be >= 1");
  const HopfOptions h = hopf_options(c, 0, threads);
  const DilationOptions d = dilation_options(c, threads);
  const double cfit = calibrate_gromov_constant(c.budget, h, d);
  Outcome o;
  json rows = json::array();
  std::ostringstream csv;
  csv << "d,H,D,ratio,fitted_C,pass\n";
  bool all = true;
  for (int deg = 1; deg <= dmax; ++deg) {
    const GromovAudit a = gromov_audit(compose(hopf(), degree_wrap(deg)), c.budget, cfit, h, d);
    json r = a.to_json();
    r["d"] = deg;
    rows.push_back(std::move(r));
    csv << deg << ',' << a.hopf_invariant << ',' << format_double(a.dilation2.estimate) << ','
        << format_double(a.ratio) << ',' << format_double(cfit) << ',' << (a.pass ? "true" : "false") << '\n';
    all = all && a.pass;
  }
  o.payload["family"] = "hopf∘wrap(d)";
  o.payload["fitted_C"] = cfit;
  o.payload["rows"] = rows;
  o.payload["pass"] = all;
  o.csv = csv.str();
  if (!all) o.code = exit_threshold;
  return o;
}

std::optional<std::string> prescan_config(int argc, const char* const* argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--config" && i + 1 < argc) return std::string(argv[i + 1]);
    if (a.rfind("--config=", 0) == 0) return a.substr(9);
  }
  return std::nullopt;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  try {
    if (auto path = prescan_config(argc, argv)) {
      std::ifstream f(*path);
      if (!f) throw DomainError("cannot read config file " + *path);
      cfg = RunConfig::from_json(json::parse(f));
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_usage;
  }

  CLI::App app{"Experiments on k-dilation of maps between spheres", "kdilate"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", kVersion);
  std::string config_path;
  unsigned threads = 0;
  app.add_option("--config", config_path, "JSON file with RunConfig fields; flags override it");
  app.add_option("--seed", cfg.seed, "random seed")->capture_default_str();
  app.add_option("--budget", cfg.budget, "samples per dilation estimate")->capture_default_str();
  app.add_option("--out", cfg.output_dir, "output directory for report files");
  app.add_option("--format", cfg.format, "json, csv or text")
      ->check(CLI::IsMember({"json", "csv", "text"}))
      ->capture_default_str();
  app.add_option("--threads", threads, "worker threads (0: all cores); does not change results");

  auto add_construction = [&](CLI::App* s) {
    s->add_option("--m", cfg.m, "source dimension of the base class")->capture_default_str();
    s->add_option("--n", cfg.n, "target dimension of the base class")->capture_default_str();
    s->add_option("--p", cfg.p, "number of suspensions")->capture_default_str();
    s->add_option("--f1", cfg.f1, "base map spec S^m -> S^n, or auto")->capture_default_str();
    s->add_option("--f2", cfg.f2, "cube map on [0,1]^p (collapse only)")->capture_default_str();
    s->add_option("--eps", cfg.epsilon_grid, "epsilon values, e.g. 1/2,1/4")->delimiter(',');
  };

  auto* filt = app.add_subcommand("filtration", "the filtration V_k of pi_m(S^n) from the fact ledger");
  int fm = 0, fn = 0;
  filt->add_option("--m", fm, "m")->required();
  filt->add_option("--n", fn, "n")->required();
  auto* fk = filt->add_option("--k", cfg.k, "only this k");

  auto* tgt = app.add_subcommand("targets", "dimensions M with a k = 3 non-trivial suspension into S^N");
  int tN = 3, tcount = 5, tM = 3;
  tgt->add_option("--N", tN, "target sphere dimension")->required();
  tgt->add_option("--count", tcount, "how many M")->capture_default_str();
  tgt->add_option("--M", tM, "source dimension for the N = 2 certificate")->capture_default_str();

  auto* con = app.add_subcommand("construct", "emit the rectangle suspension map as MapExpr JSON");
  add_construction(con);
  con->add_option("--k", cfg.k, "k for the predicted bound")->capture_default_str();

  auto* dil = app.add_subcommand("dilation", "estimate the k-dilation of a map or of the construction");
  add_construction(dil);
  std::string dmap, dmode = "analytic";
  dil->add_option("--map", dmap, "map spec; without it the construction is used");
  dil->add_option("--k", cfg.k, "k")->capture_default_str();
  dil->add_option("--mode", dmode, "analytic or fd")->check(CLI::IsMember({"analytic", "fd"}))->capture_default_str();

  auto* swp = app.add_subcommand("sweep", "k-dilation of the construction against epsilon, with a log-log fit");
  add_construction(swp);
  swp->add_option("--k", cfg.k, "k")->capture_default_str();

  auto* hop = app.add_subcommand("hopf", "Hopf invariant, 2-dilation and the |H| <= C D^2 check");
  std::string hmap = "hopf";
  int hpair = 0;
  std::optional<double> hc;
  bool hverts = false;
  hop->add_option("--map", hmap, "map spec S^3 -> S^2")->capture_default_str();
  hop->add_option("--pair", hpair, "which regular-value pair to use")->capture_default_str();
  hop->add_option("--fitted-c", hc, "use this C instead of calibrating");
  hop->add_flag("--vertices", hverts, "include fiber vertices in the report");

  auto* aud = app.add_subcommand("audit", "Gromov audit over hopf∘wrap(d)");
  int dmax = 3;
  aud->add_option("--dmax", dmax, "largest degree")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_usage;
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string command = sub->get_name();
  json head;
  head["tool"] = "kdilate";
  head["version"] = kVersion;
  head["command"] = command;
  head["config"] = cfg.to_json();
  json args = json::object();

  Outcome o;
  try {
    if (sub == filt) {
      args = json{{"m", fm}, {"n", fn}};
      std::optional<int> only;
      if (fk->count() > 0) {
        only = cfg.k;
        args["k"] = cfg.k;
      }
      o = cmd_filtration(fm, fn, only);
    } else if (sub == tgt) {
      args = json{{"N", tN}, {"count", tcount}};
      if (tN == 2) args["M"] = tM;
      o = cmd_targets(tN, tcount, tM);
    } else if (sub == con) {
      o = cmd_construct(cfg);
    } else if (sub == dil) {
      if (!dmap.empty()) args["map"] = dmap;
      args["mode"] = dmode;
      o = cmd_dilation(cfg, dmap, dmode == "fd" ? JacobianMode::finite_difference : JacobianMode::analytic, threads);
    } else if (sub == swp) {
      head["args"] = args;
      o = cmd_sweep(cfg, threads, head, err);
    } else if (sub == hop) {
      args = json{{"map", hmap}, {"pair", hpair}};
      if (hc) args["fitted_C"] = *hc;
      o = cmd_hopf(cfg, hmap, hpair, hc, hverts, threads);
    } else if (sub == aud) {
      args = json{{"dmax", dmax}};
      o = cmd_audit(cfg, dmax, threads);
    }
  } catch (const LedgerError& e) {
    err << "ledger: " << e.what() << "\n";
    return exit_ledger_miss;
  } catch (const NumericalError& e) {
    err << "numerical: " << e.what() << "\n";
    return exit_numerical;
  } catch (const DomainError& e) {
    err << "usage: " << e.what() << "\n";
    return exit_usage;
  } catch (const json::exception& e) {
    err << "usage: " << e.what() << "\n";
    return exit_usage;
  } catch (const fs::filesystem_error& e) {
    err << "io: " << e.what() << "\n";
    return exit_usage;
  }

  head["args"] = args;
  head["payload"] = o.payload;
  std::string body;
  if (cfg.format == "csv" && !o.csv.empty()) body = o.csv;
  else if (cfg.format == "text" && !o.text.empty()) body = o.text;
  else body = head.dump(2) + "\n";
  out << body;
  if (!cfg.output_dir.empty() && sub != swp) {
    const std::string ext = cfg.format == "csv" && !o.csv.empty() ? ".csv" : (cfg.format == "text" && !o.text.empty() ? ".txt" : ".json");
    try {
      write_atomic(fs::path(cfg.output_dir) / (command + ext), body);
    } catch (const std::exception& e) {
      err << "io: " << e.what() << "\n";
      return exit_usage;
    }
  }
  return o.code;
}

}  // namespace kdilate::cli
