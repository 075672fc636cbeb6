#pragma once

#include <cstdint>
#include <initializer_list>
#include <string_view>
#include <vector>

namespace lcep {

/// SplitMix64 generator. Chosen over std::mt19937 so that pinned seeds
/// reproduce bit-identically across standard libraries and platforms;
/// every draw in the project flows through this type.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64();

    /// Uniform on the open interval (0,1).
    double uniform();

    /// Standard normal via the inverse CDF.
    double normal();

    /// Uniform integer in [0, n).
    std::uint64_t uniform_below(std::uint64_t n);

    void shuffle(std::vector<int>& v);

  private:
    std::uint64_t state_;
};

/// Deterministic seed splitting: hashes a tag and index list into a base
/// seed so concurrent runs own disjoint streams.
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag,
                          std::initializer_list<std::uint64_t> indices = {});

}  // namespace lcep
