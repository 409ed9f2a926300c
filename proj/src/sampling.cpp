#include "kdilate/sampling.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <random>

namespace kdilate {

double radical_inverse(std::uint64_t i, unsigned base) {
  const double inv = 1.0 / base;
  double f = inv;
  double r = 0.0;
  while (i > 0) {
    r += f * static_cast<double>(i % base);
    i /= base;
    f *= inv;
  }
  return r;
}

std::vector<unsigned> first_primes(std::size_t n) {
  std::vector<unsigned> out;
  for (unsigned c = 2; out.size() < n; ++c) {
    bool prime = true;
    for (unsigned p : out) {
      if (p * p > c) break;
      if (c % p == 0) {
        prime = false;
        break;
      }
    }
    if (prime) out.push_back(c);
  }
  return out;
}

DomainSampler::DomainSampler(const Space& space, std::uint64_t seed) : space_(space) {
  const int dims = space.kind == Space::Kind::cube ? space.dim : space.ambient();
  primes_ = first_primes(static_cast<std::size_t>(dims));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < dims; ++i) shift_.push_back(u(rng));
}

Vec DomainSampler::point(std::uint64_t index) const {
  static const boost::math::normal_distribution<double> normal;
  const int dims = static_cast<int>(primes_.size());
  Vec h(dims);
  for (int i = 0; i < dims; ++i) {
    double v = radical_inverse(index + 1, primes_[static_cast<std::size_t>(i)]) + shift_[static_cast<std::size_t>(i)];
    h(i) = v - std::floor(v);
  }
  switch (space_.kind) {
    case Space::Kind::cube: {
      Vec x(dims);
      for (int i = 0; i < dims; ++i) x(i) = h(i) * space_.edges[static_cast<std::size_t>(i)];
      return x;
    }
    case Space::Kind::sphere:
    case Space::Kind::sphere_product: {
      Vec g(dims);
      for (int i = 0; i < dims; ++i) g(i) = boost::math::quantile(normal, std::clamp(h(i), 1e-15, 1.0 - 1e-15));
      return space_.retract(g);
    }
  }
  return h;
}

}  // namespace kdilate
