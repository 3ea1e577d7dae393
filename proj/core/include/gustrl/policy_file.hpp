#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gustrl/nn.hpp"

namespace gustrl {

// Binary layout (all integers and doubles little-endian):
//   "GRLP" | u32 version | u64 payload_bytes | payload | sha256(header + payload)
// payload:
//   u32 hash_len | hash bytes | u32 network_count |
//   per network: i32 x6 spec | u64 n | f64[n] params |
//                f64 lr, beta1, beta2, eps | u64 step | f64[n] m | f64[n] v

inline constexpr std::uint32_t kPolicyFormatVersion = 1;

struct TrainedNetwork {
  Network network;
  AdamState optimizer;
};

struct NetworkArchive {
  std::vector<TrainedNetwork> networks;
  std::string config_hash;
};

std::vector<std::uint8_t> save_networks(const NetworkArchive& archive);

/// Throws PolicyVersionError, PolicyTruncatedError, PolicyChecksumError or
/// PolicyFormatError depending on what is wrong with `bytes`.
NetworkArchive load_networks(std::span<const std::uint8_t> bytes);

/// Single-network convenience wrappers.
std::vector<std::uint8_t> save_network(const Network& network, const AdamState& optimizer,
                                       const std::string& config_hash = {});
TrainedNetwork load_network(std::span<const std::uint8_t> bytes,
                            std::optional<NetworkSpec> expected = std::nullopt);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
/// Writes to a sibling temporary file then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_file_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace gustrl
