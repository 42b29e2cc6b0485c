#pragma once

#include <cstdint>
#include <random>

namespace symreg {

using RngStream = std::mt19937_64;

/// SplitMix64 finalizer; used to spread seed material.
std::uint64_t mix64(std::uint64_t x);

/// Deterministic per-task stream: independent of thread assignment, so
/// replicate r always sees the same draws no matter how work is scheduled.
RngStream substream(std::uint64_t seed, std::uint64_t index);

/// Two-level derivation for nested loops (e.g. bootstrap inside a Monte
/// Carlo replicate).
RngStream substream(std::uint64_t seed, std::uint64_t index, std::uint64_t subindex);

}  // namespace symreg
