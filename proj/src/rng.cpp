#include "lcep/rng.hpp"

#include "lcep/normal.hpp"

namespace lcep {

namespace {

std::uint64_t splitmix_step(std::uint64_t& s) {
    std::uint64_t z = (s += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

std::uint64_t Rng::next_u64() { return splitmix_step(state_); }

double Rng::uniform() {
    // 53 random bits, offset by half a step: never exactly 0 or 1.
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::normal() { return normal_quantile(uniform()); }

std::uint64_t Rng::uniform_below(std::uint64_t n) { return n == 0 ? 0 : next_u64() % n; }

void Rng::shuffle(std::vector<int>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(uniform_below(i));
        std::swap(v[i - 1], v[j]);
    }
}

std::uint64_t derive_seed(std::uint64_t base, std::string_view tag,
                          std::initializer_list<std::uint64_t> indices) {
    std::uint64_t s = base ^ fnv1a(tag);
    std::uint64_t h = splitmix_step(s);
    for (std::uint64_t ix : indices) {
        s = h ^ (ix + 0x9e3779b97f4a7c15ULL);
        h = splitmix_step(s);
    }
    return h;
}

}  // namespace lcep
