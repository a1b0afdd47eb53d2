#pragma once

#include <cstdint>
#include <random>

namespace plcert {

using Rng = std::mt19937_64;

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed splitting rule used everywhere a run needs independent streams:
//   child = mix64(parent ^ mix64(stream * 0x9e3779b97f4a7c15 + index))
// `stream` names the purpose (data, test set, trial, ...) and `index` the
// position within it, so streams never collide for distinct (stream, index).
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t stream,
                                    std::uint64_t index = 0) noexcept {
  return mix64(parent ^ mix64(stream * 0x9e3779b97f4a7c15ULL + index));
}

namespace stream {
inline constexpr std::uint64_t kUnlabeled = 1;
inline constexpr std::uint64_t kTest = 2;
inline constexpr std::uint64_t kRandomize = 3;
inline constexpr std::uint64_t kBootstrap = 4;
inline constexpr std::uint64_t kAudit = 5;
inline constexpr std::uint64_t kTrial = 6;
inline constexpr std::uint64_t kLearner = 7;
inline constexpr std::uint64_t kMislabel = 8;
}  // namespace stream

}  // namespace plcert
