#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace scca_net {

using Engine = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);

// Counter-based seed split: each (stream, index) pair gets an independent
// seed from one root. Streams separate the purposes a seed is used for.
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream, std::uint64_t index);

// 64-bit FNV-1a. Stable across platforms; used for gene keys and digests.
std::uint64_t fnv1a64(std::string_view text);

namespace streams {
inline constexpr std::uint64_t kReplicateDraw = 1;
inline constexpr std::uint64_t kSubsample = 2;
inline constexpr std::uint64_t kPartition = 3;
inline constexpr std::uint64_t kSolver = 4;
inline constexpr std::uint64_t kSpectral = 5;
inline constexpr std::uint64_t kSimulation = 6;
}  // namespace streams

}  // namespace scca_net
