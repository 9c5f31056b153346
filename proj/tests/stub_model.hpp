#pragma once

// The deterministic "model" served by the stub bridge. Tests recompute the
// same values locally to check what came back over the pipe.

#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

namespace lexd::testing {

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline double stub_logprob(const std::vector<std::string>& context, const std::string& target) {
  const double ctx = static_cast<double>(context.size() < 4 ? context.size() : 4);
  return -(0.5 + static_cast<double>(fnv1a(target) % 997) / 100.0 + 0.125 * ctx);
}

inline std::vector<double> stub_embedding(const std::string& sentence, std::uint32_t dim) {
  std::vector<double> v(dim, 0.0);
  v[dim - 1] = 0.25;
  std::istringstream in(sentence);
  std::string w;
  while (in >> w) {
    const auto h = fnv1a(w);
    v[h % dim] += (h >> 32) & 1 ? 1.0 : -1.0;
  }
  return v;
}

}  // namespace lexd::testing
