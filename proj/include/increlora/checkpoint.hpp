#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "increlora/allocator.hpp"
#include "increlora/netgraph.hpp"

namespace increlora {

// Binary layout, all integers and reals little-endian:
//   magic "IRLC" | u32 version | u64 config_hash | u64 step | u8 phase | u32 modules
//   per module: u32 id | u32 in | u32 out | u32 active
//               active x (f64 lambda | f64[in] a | f64[out] b)
//               u8 has_reserve | [f64 lambda | f64[in] a | f64[out] b]
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct ComponentRecord {
  double lambda = 0.0;
  std::vector<double> a;
  std::vector<double> b;

  friend bool operator==(const ComponentRecord&, const ComponentRecord&) = default;
};

struct ModuleRecord {
  std::uint32_t id = 0;
  std::uint32_t in = 0;
  std::uint32_t out = 0;
  std::vector<ComponentRecord> active;
  std::optional<ComponentRecord> reserve;

  friend bool operator==(const ModuleRecord&, const ModuleRecord&) = default;
};

struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  std::uint64_t config_hash = 0;
  std::uint64_t step = 0;
  Phase phase = Phase::Allocating;
  std::vector<ModuleRecord> modules;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

// Captures active components and any held reserve of every adapter.
Checkpoint capture(const Backbone& net, std::uint64_t config_hash, std::uint64_t step, Phase phase);
// Replaces the adapters of `net`. Throws on a shape mismatch.
void restore_adapters(const Checkpoint& ckpt, Backbone& net, double adapter_scale = 1.0);

std::vector<std::uint8_t> encode(const Checkpoint& ckpt);
Checkpoint decode(std::span<const std::uint8_t> bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace increlora
