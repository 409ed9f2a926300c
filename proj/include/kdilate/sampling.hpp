#pragma once

#include "kdilate/mapexpr.hpp"

#include <cstdint>
#include <vector>

namespace kdilate {

// Radical inverse of i in the given base (van der Corput).
double radical_inverse(std::uint64_t i, unsigned base);

// First n primes.
std::vector<unsigned> first_primes(std::size_t n);

// Halton points with a seeded Cranley-Patterson rotation, mapped onto a
// space: uniform on cubes, Gaussian-normalized on sphere factors.
class DomainSampler {
 public:
  DomainSampler(const Space& space, std::uint64_t seed);
  Vec point(std::uint64_t index) const;
  int halton_dims() const { return static_cast<int>(primes_.size()); }

 private:
  Space space_;
  std::vector<unsigned> primes_;
  std::vector<double> shift_;
};

}  // namespace kdilate
