#include "kdilate/ledger.hpp"

#include "kdilate/error.hpp"

#include <algorithm>
#include <cstdlib>
#include <sstream>

namespace kdilate::ledger {

using json = nlohmann::ordered_json;

namespace {

const std::pair<Rule, const char*> kRuleNames[] = {
    {Rule::suspension_construction, "prop1-suspension"},
    {Rule::target_dim_rank, "target-dim-rank"},
    {Rule::hopf_obstruction, "hopf-obstruction"},
    {Rule::degree_obstruction, "degree-obstruction"},
    {Rule::tsui_wang, "tsui-wang"},
    {Rule::subgroup_closure, "subgroup-closure"},
    {Rule::nesting, "nesting"},
    {Rule::axiom_fact, "axiom-fact"},
};

const std::pair<Scope, const char*> kScopeNames[] = {
    {Scope::single, "single"},
    {Scope::every, "every"},
    {Scope::every_nonzero, "every-nonzero"},
    {Scope::nonzero_hopf, "nonzero-hopf"},
    {Scope::zero_hopf, "zero-hopf"},
};

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

Element reduce(const std::vector<std::int64_t>& orders, Element e) {
  for (std::size_t i = 0; i < e.size() && i < orders.size(); ++i) {
    if (orders[i] > 0) {
      e[i] %= orders[i];
      if (e[i] < 0) e[i] += orders[i];
    }
  }
  return e;
}

bool is_zero(const Element& e) {
  return std::all_of(e.begin(), e.end(), [](std::int64_t v) { return v == 0; });
}

Element unit(std::size_t d, std::size_t i) {
  Element e(d, 0);
  e[i] = 1;
  return e;
}

std::string element_text(const Element& e) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < e.size(); ++i) os << (i ? "," : "") << e[i];
  os << ')';
  return os.str();
}

CheckResult ok() { return {true, {}}; }
CheckResult fail(std::string why) { return {false, std::move(why)}; }

bool nonzero_class(const HomotopyClassDescriptor& d, const GroupFact* g) {
  if (d.scope == Scope::every_nonzero || d.scope == Scope::nonzero_hopf) return true;
  if (d.scope != Scope::single || !d.element) return false;
  return !is_zero(g ? reduce(g->orders, *d.element) : *d.element);
}

bool same_class(const HomotopyClassDescriptor& a, const HomotopyClassDescriptor& b, const GroupFact* g) {
  if (a.total_m() != b.total_m() || a.total_n() != b.total_n()) return false;
  if (a.scope != b.scope) return false;
  if (a.scope != Scope::single) return true;
  if (a.element && b.element) {
    if (g) return reduce(g->orders, *a.element) == reduce(g->orders, *b.element);
    return *a.element == *b.element;
  }
  return !a.label.empty() && a.label == b.label;
}

// Elements that every class in the scope of `d` can be written in terms of;
// empty optional when the scope is not expressible as generators.
std::optional<std::vector<Element>> scope_generators(const HomotopyClassDescriptor& d, const GroupFact& g) {
  const std::size_t dim = g.orders.size();
  std::vector<Element> gens;
  switch (d.scope) {
    case Scope::single:
      if (!d.element) return std::nullopt;
      gens.push_back(*d.element);
      return gens;
    case Scope::zero_hopf:
      if (!g.has_hopf_coordinate()) return std::nullopt;
      for (std::size_t i = 1; i < dim; ++i) gens.push_back(unit(dim, i));
      return gens;
    case Scope::every:
    case Scope::every_nonzero:
    case Scope::nonzero_hopf:
      for (std::size_t i = 0; i < dim; ++i) gens.push_back(unit(dim, i));
      return gens;
  }
  return std::nullopt;
}

}  // namespace

void HomotopyClassDescriptor::validate() const {
  if (n < 1) throw DomainError("class descriptor: n must be >= 1");
  if (m < n) throw DomainError("class descriptor: m must be >= n");
  if (p < 0) throw DomainError("class descriptor: p must be >= 0");
  if (torsion_order && *torsion_order < 1) throw DomainError("class descriptor: torsion order must be positive");
}

bool GroupFact::has_hopf_coordinate() const {
  return n % 2 == 0 && m == 2 * n - 1 && !orders.empty() && orders[0] == 0;
}

std::string GroupFact::describe() const {
  if (orders.empty()) return "0";
  std::string out;
  for (std::size_t i = 0; i < orders.size(); ++i) {
    if (i) out += " + ";
    out += orders[i] == 0 ? std::string("Z") : "Z" + std::to_string(orders[i]);
  }
  return out;
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::member: return "member";
    case Verdict::non_member: return "non-member";
    case Verdict::unknown: return "unknown";
  }
  return "unknown";
}

std::string to_string(Rule r) {
  for (const auto& [rule, name] : kRuleNames)
    if (rule == r) return name;
  return "axiom-fact";
}

std::string to_string(Scope s) {
  for (const auto& [scope, name] : kScopeNames)
    if (scope == s) return name;
  return "single";
}

Verdict verdict_from_string(const std::string& s) {
  if (s == "member") return Verdict::member;
  if (s == "non-member") return Verdict::non_member;
  if (s == "unknown") return Verdict::unknown;
  throw LedgerError("unknown verdict '" + s + "'");
}

Rule rule_from_string(const std::string& s) {
  for (const auto& [rule, name] : kRuleNames)
    if (s == name) return rule;
  throw LedgerError("unknown rule '" + s + "'");
}

Scope scope_from_string(const std::string& s) {
  for (const auto& [scope, name] : kScopeNames)
    if (s == name) return scope;
  throw LedgerError("unknown scope '" + s + "'");
}

Rational suspension_threshold(int m, int n, int p) {
  if (m < 1 || n < 1) throw DomainError("suspension threshold: dimensions must be positive");
  return Rational(n) + Rational(n, m) * Rational(p);
}

int min_k_for_suspension(int m, int n, int p) {
  if (n < 1) throw DomainError("min_k_for_suspension: n must be >= 1");
  if (m < n) throw DomainError("min_k_for_suspension: requires m >= n");
  if (p < 1) throw DomainError("min_k_for_suspension: requires p >= 1 (the rectangle construction divides by p)");
  const Rational t = suspension_threshold(m, n, p);
  // floor of a positive rational, plus one: the least integer strictly above.
  return static_cast<int>(t.numerator() / t.denominator()) + 1;
}

Rational suspension_epsilon_exponent(int m, int n, int p, int k) {
  if (p < 1) throw DomainError("epsilon exponent: requires p >= 1");
  return Rational(m, p) * (Rational(k) - suspension_threshold(m, n, p));
}

std::vector<int> theorem1_targets(int N, int count) {
  if (N < 3) throw DomainError("theorem1_targets: requires N >= 3 (N = 2 uses the target-dim-rank rule)");
  if (count < 1) throw DomainError("theorem1_targets: count must be positive");
  std::vector<int> out;
  for (int j = 0; static_cast<int>(out.size()) < count; ++j) {
    const int i = 8 * j + 1;
    if (i > 2 * N - 6) out.push_back(N + i);
  }
  return out;
}

std::vector<StableTarget> theorem1_certificates(int N, int count) {
  std::vector<StableTarget> out;
  for (int M : theorem1_targets(N, count)) {
    StableTarget t;
    t.M = M;
    t.i = M - N;
    FiltrationCertificate& c = t.certificate;
    c.id = "stable:N=" + std::to_string(N) + ":M=" + std::to_string(M);
    c.cls.m = t.i + 2;
    c.cls.n = 2;
    c.cls.p = N - 2;
    c.cls.label = "a_" + std::to_string(t.i) + " (desuspended image of J)";
    c.cls.torsion_order = 2;
    c.k = 3;
    c.verdict = Verdict::member;
    c.rule = Rule::suspension_construction;
    c.citation =
        "Adams, On the groups J(X) IV: stable J injective on pi_{8j+1}(SO) = Z2; the image desuspends to "
        "pi_{i+2}(S^2) (Davis-Mahowald; Curtis)";
    c.note = "Sigma^" + std::to_string(N - 2) + " a_i is non-trivial; rectangle construction with (m,n,p) = (" +
             std::to_string(c.cls.m) + ",2," + std::to_string(N - 2) + ")";
    if (min_k_for_suspension(c.cls.m, 2, N - 2) != 3) {
      throw LedgerError("internal: stable target M=" + std::to_string(M) + " fails the k = 3 threshold");
    }
    out.push_back(std::move(t));
  }
  return out;
}

FiltrationCertificate target_sphere_rank_certificate(int M, int N) {
  if (N < 1 || M < N) throw DomainError("target-dim-rank certificate: requires M >= N >= 1");
  FiltrationCertificate c;
  c.id = "rank:M=" + std::to_string(M) + ":N=" + std::to_string(N);
  c.cls.m = M;
  c.cls.n = N;
  c.cls.p = 0;
  c.cls.label = "all classes";
  c.cls.scope = Scope::every;
  c.k = N + 1;
  c.verdict = Verdict::member;
  c.rule = Rule::target_dim_rank;
  c.citation = "rank of df is at most N, so every map into S^N has (N+1)-dilation zero";
  if (N == 2) c.note = "3-dilation zero into S^2";
  return c;
}

// ---------------------------------------------------------------------------
// Subgroup membership

bool subgroup_contains(const std::vector<std::int64_t>& orders, const std::vector<Element>& generators,
                       const Element& x) {
  const std::size_t d = orders.size();
  if (x.size() != d) throw DomainError("subgroup_contains: element has wrong length");
  std::vector<Element> rows;
  for (const auto& g : generators) {
    if (g.size() != d) throw DomainError("subgroup_contains: generator has wrong length");
    rows.push_back(g);
  }
  for (std::size_t i = 0; i < d; ++i)
    if (orders[i] > 0) {
      Element r(d, 0);
      r[i] = orders[i];
      rows.push_back(r);
    }

  // Integer row echelon form by repeated Euclidean reduction per column.
  std::vector<std::pair<std::size_t, Element>> pivots;
  std::size_t top = 0;
  for (std::size_t col = 0; col < d; ++col) {
    while (true) {
      std::size_t best = rows.size();
      for (std::size_t i = top; i < rows.size(); ++i)
        if (rows[i][col] != 0 && (best == rows.size() || std::llabs(rows[i][col]) < std::llabs(rows[best][col])))
          best = i;
      if (best == rows.size()) break;
      std::swap(rows[top], rows[best]);
      bool clean = true;
      for (std::size_t i = top + 1; i < rows.size(); ++i) {
        if (rows[i][col] == 0) continue;
        const std::int64_t q = floor_div(rows[i][col], rows[top][col]);
        for (std::size_t c = 0; c < d; ++c) rows[i][c] -= q * rows[top][c];
        if (rows[i][col] != 0) clean = false;
      }
      if (clean) {
        pivots.emplace_back(col, rows[top]);
        ++top;
        break;
      }
    }
  }

  Element r = x;
  for (const auto& [col, row] : pivots) {
    if (r[col] % row[col] != 0) return false;
    const std::int64_t q = r[col] / row[col];
    for (std::size_t c = 0; c < d; ++c) r[c] -= q * row[c];
  }
  return is_zero(r);
}

// ---------------------------------------------------------------------------
// Certificate graph

CertificateGraph::CertificateGraph(const FactTable& facts) {
  for (const auto& g : facts.groups) add_group(g);
  for (const auto& a : facts.axioms) add_axiom(a);
  for (const auto& c : facts.certificates) add(c);
}

void CertificateGraph::add(FiltrationCertificate cert) {
  if (cert.id.empty()) throw LedgerError("certificate without id");
  const std::string id = cert.id;
  certs_[id] = std::move(cert);
}

void CertificateGraph::add_group(GroupFact group) {
  const auto key = std::make_pair(group.m, group.n);
  groups_[key] = std::move(group);
}

void CertificateGraph::add_axiom(AxiomFact axiom) {
  const std::string id = axiom.id;
  axioms_[id] = std::move(axiom);
}

const FiltrationCertificate* CertificateGraph::find(const std::string& id) const {
  const auto it = certs_.find(id);
  return it == certs_.end() ? nullptr : &it->second;
}

const GroupFact* CertificateGraph::group(int m, int n) const {
  const auto it = groups_.find({m, n});
  return it == groups_.end() ? nullptr : &it->second;
}

CheckResult CertificateGraph::check(const std::string& id) const {
  const FiltrationCertificate* c = find(id);
  if (!c) return fail("unresolved certificate '" + id + "'");
  return check(*c);
}

CheckResult CertificateGraph::check(const FiltrationCertificate& cert) const {
  std::vector<std::string> stack;
  std::map<std::string, CheckResult> memo;
  return check_impl(cert, stack, memo);
}

CheckResult CertificateGraph::check_impl(const FiltrationCertificate& cert, std::vector<std::string>& stack,
                                         std::map<std::string, CheckResult>& memo) const {
  if (!cert.id.empty()) {
    if (const auto it = memo.find(cert.id); it != memo.end()) return it->second;
    if (std::find(stack.begin(), stack.end(), cert.id) != stack.end()) {
      std::string cycle;
      for (const auto& s : stack) cycle += s + " -> ";
      throw LedgerError("cyclic premise graph: " + cycle + cert.id);
    }
  }
  stack.push_back(cert.id);
  std::vector<const FiltrationCertificate*> premises;
  CheckResult result = ok();
  for (const auto& pid : cert.premises) {
    if (const auto ax = axioms_.find(pid); ax != axioms_.end()) {
      if (ax->second.citation.empty()) {
        result = fail("axiom premise '" + pid + "' has no citation");
        break;
      }
      continue;
    }
    const FiltrationCertificate* p = find(pid);
    if (!p) {
      result = fail("unresolved premise '" + pid + "'");
      break;
    }
    const CheckResult sub = check_impl(*p, stack, memo);
    if (!sub.valid) {
      result = fail("premise '" + pid + "' invalid: " + sub.violated);
      break;
    }
    premises.push_back(p);
  }
  if (result.valid) result = side_conditions(cert, premises);
  stack.pop_back();
  if (!cert.id.empty()) memo[cert.id] = result;
  return result;
}

CheckResult CertificateGraph::side_conditions(const FiltrationCertificate& cert,
                                              const std::vector<const FiltrationCertificate*>& premises) const {
  const HomotopyClassDescriptor& d = cert.cls;
  try {
    d.validate();
  } catch (const DomainError& e) {
    return fail(e.what());
  }
  if (cert.k < 1) return fail("k must be a positive integer");
  const int M = d.total_m();
  const int N = d.total_n();
  const GroupFact* g = group(M, N);

  if (cert.verdict == Verdict::unknown && cert.rule != Rule::axiom_fact)
    return fail("only axiom-fact records may carry verdict unknown");

  switch (cert.rule) {
    case Rule::axiom_fact:
      if (cert.citation.empty()) return fail("axiom-fact requires a citation");
      return ok();

    case Rule::suspension_construction: {
      if (cert.verdict != Verdict::member) return fail("prop1-suspension certifies membership only");
      if (d.scope != Scope::single) return fail("prop1-suspension applies to a single suspended class");
      if (d.p < 1) return fail("prop1-suspension requires p >= 1");
      const Rational threshold = suspension_threshold(d.m, d.n, d.p);
      if (!(Rational(cert.k) > threshold)) {
        std::ostringstream os;
        os << "k = " << cert.k << " is not > n + (n/m)p = " << threshold.numerator() << "/" << threshold.denominator();
        return fail(os.str());
      }
      return ok();
    }

    case Rule::target_dim_rank:
      if (cert.verdict != Verdict::member) return fail("target-dim-rank certifies membership only");
      if (cert.k <= std::min(M, N))
        return fail("target-dim-rank requires k > min(m, n) = " + std::to_string(std::min(M, N)));
      return ok();

    case Rule::hopf_obstruction: {
      if (cert.verdict != Verdict::non_member) return fail("hopf-obstruction certifies non-membership only");
      if (N % 2 != 0 || M != 2 * N - 1) return fail("hopf-obstruction requires a group pi_{4j-1}(S^{2j})");
      if (cert.k > N) return fail("hopf-obstruction requires k <= " + std::to_string(N));
      if (d.scope == Scope::nonzero_hopf) return ok();
      if (d.scope != Scope::single) return fail("hopf-obstruction applies to classes with non-zero Hopf invariant");
      if (!d.hopf_invariant || *d.hopf_invariant == 0) return fail("hopf-obstruction requires a recorded non-zero Hopf invariant");
      if (g && g->has_hopf_coordinate() && d.element && (*d.element)[0] != *d.hopf_invariant)
        return fail("recorded Hopf invariant disagrees with the element's Hopf coordinate");
      return ok();
    }

    case Rule::degree_obstruction:
      if (cert.verdict != Verdict::non_member) return fail("degree-obstruction certifies non-membership only");
      if (M != N) return fail("degree-obstruction requires a group pi_n(S^n)");
      if (cert.k > N) return fail("degree-obstruction requires k <= n");
      if (!nonzero_class(d, g)) return fail("degree-obstruction requires a non-trivial class");
      return ok();

    case Rule::tsui_wang:
      if (cert.verdict != Verdict::non_member) return fail("tsui-wang certifies non-membership only");
      if (cert.k > 2) return fail("tsui-wang requires k <= 2");
      if (M < 2) return fail("tsui-wang requires m >= 2");
      if (!nonzero_class(d, g)) return fail("tsui-wang requires a non-trivial class");
      return ok();

    case Rule::subgroup_closure: {
      if (cert.verdict != Verdict::member) return fail("subgroup-closure certifies membership only");
      if (!g) return fail("subgroup-closure needs the group structure of pi_" + std::to_string(M) + "(S^" + std::to_string(N) + ")");
      std::vector<Element> gens;
      for (const FiltrationCertificate* p : premises) {
        if (p->verdict != Verdict::member) continue;
        if (p->k > cert.k) continue;
        if (p->cls.total_m() != M || p->cls.total_n() != N) continue;
        const auto pg = scope_generators(p->cls, *g);
        if (!pg) continue;
        gens.insert(gens.end(), pg->begin(), pg->end());
      }
      const auto targets = scope_generators(d, *g);
      if (!targets) return fail("subgroup-closure target class has no element coordinates");
      for (const auto& t : *targets) {
        if (t.size() != g->orders.size()) return fail("element length does not match the group");
        if (!subgroup_contains(g->orders, gens, t))
          return fail("element " + element_text(t) + " is not generated by the member premises at k <= " + std::to_string(cert.k));
      }
      return ok();
    }

    case Rule::nesting: {
      if (cert.verdict == Verdict::unknown) return fail("nesting cannot certify unknown");
      for (const FiltrationCertificate* p : premises) {
        if (p->verdict != cert.verdict) continue;
        const bool covers = same_class(d, p->cls, g) ||
                            (cert.verdict == Verdict::member && p->cls.scope == Scope::every &&
                             p->cls.total_m() == M && p->cls.total_n() == N);
        if (!covers) continue;
        if (cert.verdict == Verdict::member && p->k <= cert.k) return ok();
        if (cert.verdict == Verdict::non_member && p->k >= cert.k) return ok();
      }
      return fail(cert.verdict == Verdict::member
                      ? "nesting needs a member premise for the same class at some k' <= k"
                      : "nesting needs a non-member premise for the same class at some k' >= k");
    }
  }
  return fail("unhandled rule");
}

CheckResult certificate_check(const FiltrationCertificate& cert, const std::vector<FiltrationCertificate>& premises) {
  CertificateGraph graph;
  for (const auto& g : builtin_facts().groups) graph.add_group(g);
  for (const auto& a : builtin_facts().axioms) graph.add_axiom(a);
  for (const auto& p : premises) graph.add(p);
  return graph.check(cert);
}

// ---------------------------------------------------------------------------
// Serialization

json to_json(const HomotopyClassDescriptor& d) {
  json j;
  j["m"] = d.m;
  j["n"] = d.n;
  j["p"] = d.p;
  j["label"] = d.label;
  j["scope"] = to_string(d.scope);
  if (d.element) j["element"] = *d.element;
  if (d.torsion_order) j["torsion_order"] = *d.torsion_order;
  if (d.hopf_invariant) j["hopf_invariant"] = *d.hopf_invariant;
  return j;
}

json to_json(const FiltrationCertificate& c) {
  json j;
  j["id"] = c.id;
  j["m"] = c.cls.total_m();
  j["n"] = c.cls.total_n();
  j["k"] = c.k;
  j["verdict"] = to_string(c.verdict);
  j["rule"] = to_string(c.rule);
  j["citation"] = c.citation;
  j["class"] = to_json(c.cls);
  j["premises"] = c.premises;
  if (!c.note.empty()) j["note"] = c.note;
  return j;
}

HomotopyClassDescriptor descriptor_from_json(const json& j) {
  HomotopyClassDescriptor d;
  d.m = j.at("m").get<int>();
  d.n = j.at("n").get<int>();
  d.p = j.at("p").get<int>();
  d.label = j.at("label").get<std::string>();
  d.scope = scope_from_string(j.at("scope").get<std::string>());
  if (j.contains("element")) d.element = j.at("element").get<Element>();
  if (j.contains("torsion_order")) d.torsion_order = j.at("torsion_order").get<std::int64_t>();
  if (j.contains("hopf_invariant")) d.hopf_invariant = j.at("hopf_invariant").get<std::int64_t>();
  return d;
}

FiltrationCertificate certificate_from_json(const json& j) {
  FiltrationCertificate c;
  c.id = j.at("id").get<std::string>();
  c.k = j.at("k").get<int>();
  c.verdict = verdict_from_string(j.at("verdict").get<std::string>());
  c.rule = rule_from_string(j.at("rule").get<std::string>());
  c.citation = j.at("citation").get<std::string>();
  c.cls = descriptor_from_json(j.at("class"));
  c.premises = j.at("premises").get<std::vector<std::string>>();
  if (j.contains("note")) c.note = j.at("note").get<std::string>();
  if (j.at("m").get<int>() != c.cls.total_m() || j.at("n").get<int>() != c.cls.total_n())
    throw LedgerError("certificate '" + c.id + "': record dimensions disagree with its class");
  return c;
}

FactTable FactTable::parse(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw LedgerError(std::string("fact table is not valid JSON: ") + e.what());
  }
  FactTable t;
  try {
    for (const auto& g : root.at("groups")) {
      GroupFact f;
      f.m = g.at("m").get<int>();
      f.n = g.at("n").get<int>();
      f.orders = g.at("orders").get<std::vector<std::int64_t>>();
      f.citation = g.at("citation").get<std::string>();
      t.groups.push_back(std::move(f));
    }
    for (const auto& a : root.at("axioms")) {
      AxiomFact f;
      f.id = a.at("id").get<std::string>();
      f.m = a.at("m").get<int>();
      f.n = a.at("n").get<int>();
      f.statement = a.at("statement").get<std::string>();
      f.citation = a.at("citation").get<std::string>();
      t.axioms.push_back(std::move(f));
    }
    for (const auto& c : root.at("certificates")) t.certificates.push_back(certificate_from_json(c));
  } catch (const json::exception& e) {
    throw LedgerError(std::string("malformed fact table: ") + e.what());
  }
  return t;
}

std::string FactTable::serialize() const {
  json root;
  root["format"] = "kdilate-filtration-facts/1";
  root["groups"] = json::array();
  for (const auto& g : groups) {
    json j;
    j["m"] = g.m;
    j["n"] = g.n;
    j["orders"] = g.orders;
    j["citation"] = g.citation;
    root["groups"].push_back(std::move(j));
  }
  root["axioms"] = json::array();
  for (const auto& a : axioms) {
    json j;
    j["id"] = a.id;
    j["m"] = a.m;
    j["n"] = a.n;
    j["statement"] = a.statement;
    j["citation"] = a.citation;
    root["axioms"].push_back(std::move(j));
  }
  root["certificates"] = json::array();
  for (const auto& c : certificates) root["certificates"].push_back(to_json(c));
  return root.dump(2) + "\n";
}

const GroupFact* FactTable::group(int m, int n) const {
  for (const auto& g : groups)
    if (g.m == m && g.n == n) return &g;
  return nullptr;
}

std::vector<FiltrationCertificate> FactTable::certificates_for(int m, int n) const {
  std::vector<FiltrationCertificate> out;
  for (const auto& c : certificates)
    if (c.cls.total_m() == m && c.cls.total_n() == n) out.push_back(c);
  return out;
}

const FactTable& builtin_facts() {
  static const FactTable table = FactTable::parse(builtin_facts_text());
  return table;
}

// ---------------------------------------------------------------------------
// Filtration tables

namespace {

std::string level_text(int k, const LevelSummary& s, const GroupFact& g) {
  std::ostringstream os;
  os << "V_" << k << " pi_" << g.m << "(S^" << g.n << ") ";
  switch (s.status) {
    case LevelSummary::Status::zero: os << "= 0"; break;
    case LevelSummary::Status::whole: os << "= whole group " << g.describe(); break;
    case LevelSummary::Status::exact:
      os << "= kernel of the Hopf invariant";
      if (g.orders.size() > 1) {
        GroupFact torsion = g;
        torsion.orders.erase(torsion.orders.begin());
        os << " = " << torsion.describe();
      }
      break;
    case LevelSummary::Status::bounded:
      if (s.lower_generators.empty()) {
        os << "contains 0";
      } else {
        os << "contains <";
        for (std::size_t i = 0; i < s.lower_generators.size(); ++i)
          os << (i ? ", " : "") << element_text(s.lower_generators[i]);
        os << ">";
      }
      if (s.upper == "ker H") os << ", inside the kernel of the Hopf invariant";
      break;
  }
  if (!s.open_questions.empty()) os << " (open: " << s.open_questions.size() << ")";
  return os.str();
}

}  // namespace

FiltrationTable filtration_table(int m, int n) { return filtration_table(builtin_facts(), m, n); }

FiltrationTable filtration_table(const FactTable& facts, int m, int n) {
  const GroupFact* g = facts.group(m, n);
  if (!g) {
    throw LedgerError("no encoded facts for pi_" + std::to_string(m) + "(S^" + std::to_string(n) + ")");
  }
  FiltrationTable table;
  table.m = m;
  table.n = n;
  table.group = *g;
  table.certificates = facts.certificates_for(m, n);
  for (const auto& a : facts.axioms)
    if (a.m == m && a.n == n) table.axioms.push_back(a);

  const CertificateGraph graph(facts);
  std::vector<const FiltrationCertificate*> valid;
  for (const auto& c : table.certificates) {
    const CheckResult r = graph.check(c);
    if (!r.valid) throw LedgerError("encoded certificate '" + c.id + "' fails its check: " + r.violated);
    valid.push_back(&c);
  }

  const std::size_t dim = g->orders.size();
  const int top = std::min(m, n) + 1;
  for (int k = 1; k <= top; ++k) {
    LevelSummary s;
    s.k = k;
    bool lower_whole = false;
    bool lower_kernel = false;
    std::string upper = "whole";
    for (const FiltrationCertificate* c : valid) {
      if (c->verdict == Verdict::member && c->k <= k) {
        switch (c->cls.scope) {
          case Scope::every:
          case Scope::every_nonzero:
          case Scope::nonzero_hopf: lower_whole = true; break;
          case Scope::zero_hopf: lower_kernel = true; break;
          case Scope::single:
            if (c->cls.element) s.lower_generators.push_back(reduce(g->orders, *c->cls.element));
            break;
        }
      } else if (c->verdict == Verdict::non_member && c->k >= k) {
        if (c->cls.scope == Scope::every_nonzero) upper = "0";
        else if (c->cls.scope == Scope::nonzero_hopf && upper != "0") upper = "ker H";
      } else if (c->verdict == Verdict::unknown && c->k == k) {
        s.open_questions.push_back(c->note.empty() ? c->id : c->note);
      }
    }
    std::vector<Element> gens = s.lower_generators;
    if (lower_whole || lower_kernel)
      for (std::size_t i = (lower_whole ? 0 : 1); i < dim; ++i) gens.push_back(unit(dim, i));
    auto contains_all = [&](std::size_t from) {
      for (std::size_t i = from; i < dim; ++i)
        if (!subgroup_contains(g->orders, gens, unit(dim, i))) return false;
      return true;
    };
    s.upper = upper;
    if (upper == "0") {
      s.status = LevelSummary::Status::zero;
    } else if (contains_all(0)) {
      s.status = LevelSummary::Status::whole;
    } else if (upper == "ker H" && g->has_hopf_coordinate() && contains_all(1)) {
      s.status = LevelSummary::Status::exact;
    } else {
      s.status = LevelSummary::Status::bounded;
    }
    if (lower_kernel) {
      s.lower_generators.clear();
      for (std::size_t i = 1; i < dim; ++i) s.lower_generators.push_back(unit(dim, i));
    }
    s.text = level_text(k, s, *g);
    table.levels.push_back(std::move(s));
  }
  return table;
}

}  // namespace kdilate::ledger
