#include "polopt/rng.hpp"

#include <cmath>
#include <numbers>

namespace polopt {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t hash_name(std::string_view name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t child) {
  return mix64(mix64(seed) ^ mix64(child + 0x51ed270b0f3ULL));
}

RandomStream::RandomStream(std::uint64_t seed, std::string_view stream_name)
    : seed_(seed), stream_(hash_name(stream_name)) {}

namespace {
std::uint64_t word(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
  return mix64(mix64(seed ^ stream) + mix64(counter));
}

double to_unit(std::uint64_t w) {
  // 53-bit mantissa in [0, 1).
  return static_cast<double>(w >> 11) * 0x1.0p-53;
}
}  // namespace

double RandomStream::uniform(std::uint64_t index) const {
  return to_unit(word(seed_, stream_, 2 * index));
}

double RandomStream::normal(std::uint64_t index) const {
  double u1 = to_unit(word(seed_, stream_, 2 * index));
  double u2 = to_unit(word(seed_, stream_, 2 * index + 1));
  if (u1 <= 0.0) u1 = 0x1.0p-53;  // guard log(0)
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

bool RandomStream::bernoulli(std::uint64_t index, double p) const {
  return uniform(index) < p;
}

std::uint64_t RandomStream::uniform_int(std::uint64_t index, std::uint64_t bound) const {
  // 53-bit scaling; bias is negligible for the bounds used here.
  return static_cast<std::uint64_t>(uniform(index) * static_cast<double>(bound));
}

}  // namespace polopt
