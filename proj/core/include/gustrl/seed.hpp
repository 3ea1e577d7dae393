#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>

namespace gustrl {

/// Every stochastic component draws from its own engine.
using Rng = std::mt19937_64;

/// Derives an independent child seed from a parent seed and a path of labels.
/// Pure function of its arguments, so worker scheduling never changes results.
std::uint64_t derive_seed(std::uint64_t parent, std::string_view label);
std::uint64_t derive_seed(std::uint64_t parent, std::string_view label, std::uint64_t index);

std::array<std::uint8_t, 32> sha256(std::span<const std::uint8_t> bytes);
std::string sha256_hex(std::string_view text);
std::string to_hex(std::span<const std::uint8_t> bytes);

}  // namespace gustrl
