#pragma once

#include <cstdint>

namespace cmf {

/// Per-tracker arithmetic tally.
///
/// Counting convention: real add/sub = 1 addition; real mul/div = 1
/// multiplication; complex*complex = 4 multiplications + 2 additions;
/// real*complex = 2 multiplications; complex add = 2 additions. sqrt, acos,
/// cos and sin count as one multiplication. Arctangent (arg/atan2) is not
/// counted. Storage is 8 bytes per real and 16 per complex value.
struct OpCounters {
  std::uint64_t additions = 0;
  std::uint64_t multiplications = 0;
  std::uint64_t static_storage_bytes = 0;
};

namespace ops {

constexpr std::uint64_t kRealBytes = 8;
constexpr std::uint64_t kComplexBytes = 16;

inline void add(OpCounters* c, std::uint64_t n = 1) {
  if (c) c->additions += n;
}
inline void mul(OpCounters* c, std::uint64_t n = 1) {
  if (c) c->multiplications += n;
}
inline void cmul(OpCounters* c, std::uint64_t n = 1) {
  if (c) {
    c->multiplications += 4 * n;
    c->additions += 2 * n;
  }
}
inline void rcmul(OpCounters* c, std::uint64_t n = 1) {
  if (c) c->multiplications += 2 * n;
}
inline void cadd(OpCounters* c, std::uint64_t n = 1) {
  if (c) c->additions += 2 * n;
}
// |z|^2
inline void norm(OpCounters* c, std::uint64_t n = 1) {
  if (c) {
    c->multiplications += 2 * n;
    c->additions += n;
  }
}
inline void transcendental(OpCounters* c, std::uint64_t n = 1) { mul(c, n); }

}  // namespace ops
}  // namespace cmf
