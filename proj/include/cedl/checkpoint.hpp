#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "cedl/detector.hpp"
#include "cedl/optimizer.hpp"

namespace cedl {

inline constexpr std::string_view kCheckpointMagic = "CEDL1";

struct Provenance {
  std::uint64_t seed = 0;
  double best_loss = 0.0;
  std::size_t best_epoch = 0;
  double learning_rate = 0.0;
  AdamConstants adam;
};

struct Checkpoint {
  Detector detector;
  Provenance provenance;
};

/// File layout:
///   line 1   "CEDL1"
///   line 2   one-line JSON header: layer specs, objective kind, alpha,
///            w0, w1, centre mode, optimizer constants, seed, best loss,
///            payload length and FNV-1a-64 of the payload
///   payload  little-endian IEEE-754 doubles: centre (D), then for BCE the
///            head weights (D) and bias, then the encoder parameters
///            (per layer: row-major weights, then biases)
std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(std::string_view bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::uint64_t fnv1a64(std::string_view bytes) noexcept;

}  // namespace cedl
