#pragma once

// Command-line front end. `run` is the whole program; tools/kdilate.cpp only
// forwards argv to it so the tests can drive every subcommand in-process.

#include "kdilate/mapexpr.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace kdilate::cli {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int {
  exit_ok = 0,
  exit_usage = 1,
  exit_ledger_miss = 2,
  exit_numerical = 3,
  exit_threshold = 4,
};

// Everything that determines a run. Two runs with equal configs write the
// same bytes.
struct RunConfig {
  std::uint64_t seed = 0x6b64696c61746531ULL;
  std::uint64_t budget = 100000;
  std::vector<std::string> epsilon_grid{"1/2", "1/4", "1/8", "1/16"};
  int k = 3;
  int m = 3, n = 2, p = 1;
  std::string f1 = "auto";  // base map S^m -> S^n, precomposed with collapse(m)
  std::string f2 = "collapse";
  std::string output_dir;   // empty: stdout only (sweep falls back to ".")
  std::string format = "json";

  json to_json() const;
  // Keys that are present override the defaults; unknown keys are an error.
  static RunConfig from_json(const json& j);
};

// "1/8", "0.125", "2^-3"
double parse_rational(const std::string& s);

// Prefix grammar over node names, composed right to left with '∘' or '@':
//   hopf | wrap(d[,i,j[,dim]]) | id(d) | reflect(d) | constant[(din,dout)]
//   | collapse(m) | smash(n,p) | suspend(<expr>)
// Long names from the JSON form (degree_wrap, identity, reflection,
// cube_collapse) are accepted too, and a spec starting with '{' is read as
// MapExpr JSON.
MapExpr parse_map_spec(const std::string& spec);

// Write to a temporary sibling, then rename over the target.
void write_atomic(const std::filesystem::path& path, const std::string& contents);

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace kdilate::cli
