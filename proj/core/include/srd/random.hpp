#pragma once

#include <cstdint>
#include <random>

namespace srd {

using Rng = std::mt19937_64;

/// Independent stream `stream` derived from `seed`. Same (seed, stream) gives
/// the same sequence in every process.
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    return Rng(seq);
}

// Stream ids for the places that draw randomness.
namespace stream {
inline constexpr std::uint64_t kTeacherInit = 1;
inline constexpr std::uint64_t kStudentInit = 2;
inline constexpr std::uint64_t kAdaptorInit = 3;
inline constexpr std::uint64_t kDetectorInit = 4;
inline constexpr std::uint64_t kTeacherSampler = 5;
inline constexpr std::uint64_t kStudentSampler = 6;
inline constexpr std::uint64_t kAugment = 7;
inline constexpr std::uint64_t kSelection = 8;
inline constexpr std::uint64_t kDetectorNegatives = 9;
inline constexpr std::uint64_t kDacViews = 10;
}  // namespace stream

}  // namespace srd
