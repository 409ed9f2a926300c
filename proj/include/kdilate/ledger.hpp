#pragma once

// Exact bookkeeping for suspension classes and the filtration V_k pi_m(S^n)
// of homotopy groups by k-dilation. All threshold comparisons are done over
// the rationals; nothing in this header touches floating point.

#include <boost/rational.hpp>
#include <json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace kdilate::ledger {

using Rational = boost::rational<std::int64_t>;
using Element = std::vector<std::int64_t>;

// Which classes of pi_{m+p}(S^{n+p}) a descriptor speaks about.
enum class Scope {
  single,        // one class, given by `element` (or by label alone)
  every,         // every class of the group
  every_nonzero, // every non-trivial class
  nonzero_hopf,  // every class with non-zero Hopf invariant
  zero_hopf,     // the kernel of the Hopf invariant
};

// A class a in pi_m(S^n) together with a suspension count p; the suspended
// class lives in pi_{m+p}(S^{n+p}).
struct HomotopyClassDescriptor {
  int m = 1;
  int n = 1;
  int p = 0;
  std::string label;
  std::optional<std::int64_t> torsion_order;
  std::optional<std::int64_t> hopf_invariant;
  // Coordinates of the suspended class in the cyclic decomposition of
  // pi_{m+p}(S^{n+p}) recorded in the fact table.
  std::optional<Element> element;
  Scope scope = Scope::single;

  int total_m() const { return m + p; }
  int total_n() const { return n + p; }
  void validate() const;
};

enum class Verdict { member, non_member, unknown };

enum class Rule {
  suspension_construction,  // "prop1-suspension"
  target_dim_rank,
  hopf_obstruction,
  degree_obstruction,
  tsui_wang,
  subgroup_closure,
  nesting,
  axiom_fact,
};

struct FiltrationCertificate {
  std::string id;
  HomotopyClassDescriptor cls;
  int k = 1;
  Verdict verdict = Verdict::unknown;
  Rule rule = Rule::axiom_fact;
  std::vector<std::string> premises;
  std::string citation;
  std::string note;
};

// pi_m(S^n) as a direct sum of cyclic groups; order 0 stands for Z. For the
// groups pi_{4j-1}(S^{2j}) coordinate 0 is the Hopf invariant.
struct GroupFact {
  int m = 0;
  int n = 0;
  std::vector<std::int64_t> orders;
  std::string citation;

  bool has_hopf_coordinate() const;
  std::string describe() const;  // e.g. "Z + Z12"
};

std::string to_string(Verdict v);
std::string to_string(Rule r);
std::string to_string(Scope s);
Verdict verdict_from_string(const std::string& s);
Rule rule_from_string(const std::string& s);
Scope scope_from_string(const std::string& s);

// n + (n/m) p, exactly.
Rational suspension_threshold(int m, int n, int p);

// Smallest integer k with k > n + (n/m) p.
int min_k_for_suspension(int m, int n, int p);

// Exponent of epsilon in the predicted k-dilation bound of the rectangle
// construction: (m/p) (k - n - (n/m) p).
Rational suspension_epsilon_exponent(int m, int n, int p, int k);

// Values M = N + i, i = 8j + 1 > 2N - 6, in increasing order.
std::vector<int> theorem1_targets(int N, int count);

struct StableTarget {
  int M = 0;
  int i = 0;
  FiltrationCertificate certificate;
};
// Targets with their k = 3 membership certificates. N = 2 is routed to the
// target-dim-rank rule instead (see target_sphere_rank_certificate).
std::vector<StableTarget> theorem1_certificates(int N, int count);

// Every map into S^N has (N+1)-dilation zero: membership of every class of
// pi_M(S^N) in V_{N+1}.
FiltrationCertificate target_sphere_rank_certificate(int M, int N);

class FactTable;

// A structural input fact (isomorphism types, suspension identities) that
// certificates may cite as a premise. Not itself a filtration statement.
struct AxiomFact {
  std::string id;
  int m = 0;
  int n = 0;
  std::string statement;
  std::string citation;
};

struct CheckResult {
  bool valid = false;
  std::string violated;  // empty when valid
};

// Certificates addressable by id; premises are resolved here. Group facts
// are used to reduce elements modulo the cyclic orders.
class CertificateGraph {
 public:
  CertificateGraph() = default;
  explicit CertificateGraph(const FactTable& facts);

  void add(FiltrationCertificate cert);
  void add_group(GroupFact group);
  void add_axiom(AxiomFact axiom);
  const FiltrationCertificate* find(const std::string& id) const;
  const GroupFact* group(int m, int n) const;

  // Throws LedgerError on a cyclic premise graph.
  CheckResult check(const std::string& id) const;
  CheckResult check(const FiltrationCertificate& cert) const;

 private:
  CheckResult check_impl(const FiltrationCertificate& cert, std::vector<std::string>& stack,
                         std::map<std::string, CheckResult>& memo) const;
  CheckResult side_conditions(const FiltrationCertificate& cert,
                              const std::vector<const FiltrationCertificate*>& premises) const;

  std::map<std::string, FiltrationCertificate> certs_;
  std::map<std::pair<int, int>, GroupFact> groups_;
  std::map<std::string, AxiomFact> axioms_;
};

// Convenience: check one certificate against a list of premise certificates.
CheckResult certificate_check(const FiltrationCertificate& cert,
                              const std::vector<FiltrationCertificate>& premises = {});

class FactTable {
 public:
  std::vector<GroupFact> groups;
  std::vector<AxiomFact> axioms;
  std::vector<FiltrationCertificate> certificates;

  static FactTable parse(const std::string& text);
  std::string serialize() const;

  const GroupFact* group(int m, int n) const;
  std::vector<FiltrationCertificate> certificates_for(int m, int n) const;
};

// The table shipped in data/filtration_facts.json, compiled into the library.
const FactTable& builtin_facts();
const std::string& builtin_facts_text();

nlohmann::ordered_json to_json(const HomotopyClassDescriptor& d);
nlohmann::ordered_json to_json(const FiltrationCertificate& c);
HomotopyClassDescriptor descriptor_from_json(const nlohmann::ordered_json& j);
FiltrationCertificate certificate_from_json(const nlohmann::ordered_json& j);

// What the certificates pin down about V_k for one k.
struct LevelSummary {
  enum class Status { zero, whole, exact, bounded };
  int k = 1;
  Status status = Status::bounded;
  std::vector<Element> lower_generators;  // V_k contains these
  std::string upper;                      // "whole", "ker H" or "0"
  std::vector<std::string> open_questions;
  std::string text;
};

struct FiltrationTable {
  int m = 0;
  int n = 0;
  GroupFact group;
  std::vector<AxiomFact> axioms;
  std::vector<FiltrationCertificate> certificates;
  std::vector<LevelSummary> levels;  // k = 1 .. min(m, n) + 1
};

// Throws LedgerError ("no encoded facts ...") outside the table.
FiltrationTable filtration_table(int m, int n);
FiltrationTable filtration_table(const FactTable& facts, int m, int n);

// Subgroup membership in Z^a + sum Z/n_i (Hermite reduction of the
// generators together with the relation vectors n_i e_i).
bool subgroup_contains(const std::vector<std::int64_t>& orders, const std::vector<Element>& generators,
                       const Element& x);

}  // namespace kdilate::ledger
