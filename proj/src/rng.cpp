#include "symreg/rng.hpp"

namespace symreg {

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

RngStream substream(std::uint64_t seed, std::uint64_t index) {
    return RngStream(mix64(mix64(seed) ^ mix64(index + 0x51ed270b900dd1efULL)));
}

RngStream substream(std::uint64_t seed, std::uint64_t index, std::uint64_t subindex) {
    return RngStream(mix64(mix64(seed) ^ mix64(index + 0x51ed270b900dd1efULL)) ^
                     mix64(subindex + 0x63a9f0ea7bb98050ULL));
}

}  // namespace symreg
