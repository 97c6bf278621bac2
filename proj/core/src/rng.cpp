#include "mixmemb/rng.hpp"

namespace mixmemb {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t child_seed(std::uint64_t master, std::uint64_t point,
                         std::uint64_t replicate) {
  std::uint64_t s = mix64(master);
  s = mix64(s ^ (point + 0x5851f42d4c957f2dULL));
  s = mix64(s ^ (replicate + 0x14057b7ef767814fULL));
  return s;
}

}  // namespace mixmemb
