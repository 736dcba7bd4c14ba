#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace mm {

// Simplex identifiers. Vertices and facets have stable 64-bit ids within a
// mesh; intermediate simplices are identified by their sorted vertex sets.
using Index = std::int64_t;
inline constexpr Index invalid_index = -1;

// Highest supported facet dimension (tetrahedra).
inline constexpr int max_dim = 3;

// Structural misuse (bad ids, malformed input, wrong dimensions). Predictable
// rejections (link condition, invariants) are reported through return values,
// never through exceptions.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool cond, const char* what)
{
    if (!cond) throw Error(what);
}

inline void require(bool cond, const std::string& what)
{
    if (!cond) throw Error(what);
}

inline std::uint64_t hash_mix(std::uint64_t h, std::uint64_t v)
{
    // splitmix64 step; good enough for vertex tuples.
    v += 0x9e3779b97f4a7c15ULL + h;
    v = (v ^ (v >> 30)) * 0xbf58476d1ce4e5b9ULL;
    v = (v ^ (v >> 27)) * 0x94d049bb133111ebULL;
    return v ^ (v >> 31);
}

} // namespace mm
