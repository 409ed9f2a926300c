#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "kdilate/error.hpp"
#include "kdilate/ledger.hpp"

#include <fstream>
#include <set>
#include <sstream>

using namespace kdilate;
using namespace kdilate::ledger;

namespace {

// smallest integer k with k m > n m + n p, by scanning
int scan_min_k(int m, int n, int p) {
  for (int k = 1;; ++k)
    if (static_cast<long>(k) * m > static_cast<long>(n) * m + static_cast<long>(n) * p) return k;
}

std::vector<int> scan_targets(int N, int count) {
  std::vector<int> out;
  for (int M = N + 1; static_cast<int>(out.size()) < count; ++M) {
    const int i = M - N;
    if (i % 8 == 1 && i > 2 * N - 6) out.push_back(M);
  }
  return out;
}

FiltrationCertificate susp_cert(int m, int n, int p, int k) {
  FiltrationCertificate c;
  c.id = "t";
  c.cls.m = m;
  c.cls.n = n;
  c.cls.p = p;
  c.cls.label = "a";
  c.k = k;
  c.verdict = Verdict::member;
  c.rule = Rule::suspension_construction;
  c.citation = "construction";
  return c;
}

// all elements of Z_{o1} + ... reachable from the generators
std::set<Element> span(const std::vector<std::int64_t>& orders, const std::vector<Element>& gens) {
  std::set<Element> seen{Element(orders.size(), 0)};
  std::vector<Element> frontier(seen.begin(), seen.end());
  while (!frontier.empty()) {
    std::vector<Element> next;
    for (const auto& x : frontier)
      for (const auto& g : gens) {
        Element y = x;
        for (std::size_t i = 0; i < y.size(); ++i) y[i] = (y[i] + g[i]) % orders[i];
        if (seen.insert(y).second) next.push_back(y);
      }
    frontier = std::move(next);
  }
  return seen;
}

}  // namespace

TEST_CASE("threshold for the suspended Hopf map") {
  CHECK(suspension_threshold(3, 2, 1) == Rational(8, 3));
  CHECK(min_k_for_suspension(3, 2, 1) == 3);
  CHECK(suspension_epsilon_exponent(3, 2, 1, 3) == Rational(1));
  CHECK(suspension_epsilon_exponent(3, 2, 1, 4) == Rational(4));
  CHECK(suspension_epsilon_exponent(3, 2, 1, 2) == Rational(-2));
}

TEST_CASE("min_k agrees with an integer scan") {
  for (int m = 1; m <= 14; ++m)
    for (int n = 1; n <= m; ++n)
      for (int p = 1; p <= 12; ++p) {
        CAPTURE(m);
        CAPTURE(n);
        CAPTURE(p);
        CHECK(min_k_for_suspension(m, n, p) == scan_min_k(m, n, p));
        // k exceeds the threshold exactly when k >= min_k
        const int k0 = min_k_for_suspension(m, n, p);
        CHECK(Rational(k0) > suspension_threshold(m, n, p));
        CHECK(!(Rational(k0 - 1) > suspension_threshold(m, n, p)));
      }
}

TEST_CASE("min_k is monotone in p and m") {
  for (int m = 1; m <= 10; ++m)
    for (int n = 1; n <= m; ++n)
      for (int p = 1; p < 10; ++p) {
        CHECK(min_k_for_suspension(m, n, p) <= min_k_for_suspension(m, n, p + 1));
        CHECK(min_k_for_suspension(m + 1, n, p) <= min_k_for_suspension(m, n, p));
      }
}

TEST_CASE("stable targets") {
  CHECK(theorem1_targets(3, 5) == std::vector<int>{4, 12, 20, 28, 36});
  CHECK(theorem1_targets(4, 4) == std::vector<int>{13, 21, 29, 37});
  for (int N = 3; N <= 12; ++N) CHECK(theorem1_targets(N, 6) == scan_targets(N, 6));
  CHECK_THROWS_AS(theorem1_targets(2, 3), DomainError);
  for (const auto& t : theorem1_certificates(5, 4)) {
    CHECK(t.certificate.k == 3);
    CHECK(certificate_check(t.certificate).valid);
  }
  const auto r = target_sphere_rank_certificate(9, 2);
  CHECK(r.k == 3);
  CHECK(r.rule == Rule::target_dim_rank);
  CHECK(certificate_check(r).valid);
}

TEST_CASE("wire names") {
  CHECK(to_string(Rule::suspension_construction) == "prop1-suspension");
  for (Rule r : {Rule::suspension_construction, Rule::target_dim_rank, Rule::hopf_obstruction,
                 Rule::degree_obstruction, Rule::tsui_wang, Rule::subgroup_closure, Rule::nesting,
                 Rule::axiom_fact})
    CHECK(rule_from_string(to_string(r)) == r);
  for (Verdict v : {Verdict::member, Verdict::non_member, Verdict::unknown})
    CHECK(verdict_from_string(to_string(v)) == v);
  CHECK_THROWS_AS(rule_from_string("bogus"), LedgerError);
}

TEST_CASE("fact table round trip is byte exact") {
  const std::string& text = builtin_facts_text();
  CHECK(FactTable::parse(text).serialize() == text);
  std::ifstream f(KDILATE_FACTS_PATH, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  CHECK(ss.str() == text);
}

TEST_CASE("every shipped certificate checks") {
  const CertificateGraph g(builtin_facts());
  for (const auto& c : builtin_facts().certificates) {
    CAPTURE(c.id);
    const auto r = g.check(c.id);
    CHECK_MESSAGE(r.valid, r.violated);
    // single-certificate JSON round trip
    CHECK(to_json(certificate_from_json(to_json(c))) == to_json(c));
  }
}

TEST_CASE("filtration of pi_7(S^4)") {
  const auto t = filtration_table(7, 4);
  CHECK(t.group.orders == std::vector<std::int64_t>{0, 12});
  const auto& v4 = t.levels.at(3);
  CHECK(v4.k == 4);
  CHECK(v4.status == LevelSummary::Status::exact);
  CHECK(v4.text.find("Z12") != std::string::npos);
  const FiltrationCertificate* ker = nullptr;
  bool hopf_obstruction = false;
  for (const auto& c : t.certificates) {
    if (c.id == "ker:7:4") ker = &c;
    if (c.rule == Rule::hopf_obstruction && c.k == 4) hopf_obstruction = true;
  }
  REQUIRE(ker != nullptr);
  CHECK(ker->rule == Rule::subgroup_closure);
  CHECK(hopf_obstruction);
  // the chain bottoms out in a construction certificate resting on the suspension axiom
  const CertificateGraph g(builtin_facts());
  bool construction = false;
  for (const auto& id : ker->premises)
    if (const auto* p = g.find(id); p && p->rule == Rule::suspension_construction) {
      construction = true;
      CHECK(std::find(p->premises.begin(), p->premises.end(), "susp-iso:7:4") != p->premises.end());
    }
  CHECK(construction);
  CHECK(std::any_of(t.axioms.begin(), t.axioms.end(), [](const AxiomFact& a) { return a.id == "susp-iso:7:4"; }));
  // V_k is nested
  for (std::size_t i = 1; i < t.levels.size(); ++i)
    if (t.levels[i - 1].status == LevelSummary::Status::whole) CHECK(t.levels[i].status == LevelSummary::Status::whole);
}

TEST_CASE("filtration of pi_4(S^3)") {
  const auto t = filtration_table(4, 3);
  CHECK(t.levels.at(2).k == 3);
  CHECK(t.levels.at(2).status == LevelSummary::Status::whole);
  CHECK(t.levels.at(1).status == LevelSummary::Status::zero);
}

TEST_CASE("outside the table") {
  CHECK_THROWS_AS(filtration_table(100, 50), LedgerError);
  try {
    filtration_table(100, 50);
  } catch (const LedgerError& e) {
    CHECK(std::string(e.what()).find("no encoded facts") != std::string::npos);
  }
}

TEST_CASE("side conditions reject bad certificates") {
  CHECK(certificate_check(susp_cert(3, 2, 1, 3)).valid);
  CHECK_FALSE(certificate_check(susp_cert(3, 2, 1, 2)).valid);
  CHECK_FALSE(certificate_check(susp_cert(3, 2, 0, 3)).valid);

  auto rank = target_sphere_rank_certificate(7, 4);
  rank.k = 4;
  CHECK_FALSE(certificate_check(rank).valid);

  FiltrationCertificate ax;
  ax.id = "ax";
  ax.cls.m = 6;
  ax.cls.n = 3;
  ax.k = 3;
  ax.verdict = Verdict::unknown;
  ax.rule = Rule::axiom_fact;
  CHECK_FALSE(certificate_check(ax).valid);
  ax.citation = "somewhere";
  CHECK(certificate_check(ax).valid);

  auto u = susp_cert(3, 2, 1, 3);
  u.verdict = Verdict::unknown;
  CHECK_FALSE(certificate_check(u).valid);
}

TEST_CASE("cyclic premises are an error") {
  CertificateGraph g;
  auto a = susp_cert(3, 2, 1, 3);
  auto b = susp_cert(3, 2, 1, 4);
  a.id = "a";
  b.id = "b";
  a.rule = b.rule = Rule::nesting;
  a.premises = {"b"};
  b.premises = {"a"};
  g.add(a);
  g.add(b);
  CHECK_THROWS_AS(g.check("a"), LedgerError);
}

TEST_CASE("subgroup membership agrees with enumeration") {
  const std::vector<std::vector<std::int64_t>> groups{{12}, {2, 2}, {4, 6}, {2, 12}, {3, 9}};
  std::uint64_t state = 12345;
  auto next = [&](std::int64_t mod) {
    state = state * 6364136223846793005ULL + 1442695040888963407ULL;
    return static_cast<std::int64_t>((state >> 33) % static_cast<std::uint64_t>(mod));
  };
  for (const auto& orders : groups) {
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<Element> gens;
      const int ng = 1 + static_cast<int>(next(2));
      for (int g = 0; g < ng; ++g) {
        Element e;
        for (auto o : orders) e.push_back(next(o));
        gens.push_back(e);
      }
      const auto s = span(orders, gens);
      // every element of the group
      Element x(orders.size(), 0);
      while (true) {
        CHECK(subgroup_contains(orders, gens, x) == (s.count(x) > 0));
        std::size_t i = 0;
        while (i < x.size() && ++x[i] == orders[i]) x[i++] = 0;
        if (i == x.size()) break;
      }
    }
  }
  // a free coordinate
  CHECK(subgroup_contains({0, 12}, {{0, 6}}, {0, 6}));
  CHECK_FALSE(subgroup_contains({0, 12}, {{0, 6}}, {0, 3}));
  CHECK_FALSE(subgroup_contains({0, 12}, {{2, 0}}, {1, 0}));
  CHECK(subgroup_contains({0, 12}, {{2, 0}}, {-4, 0}));
}
