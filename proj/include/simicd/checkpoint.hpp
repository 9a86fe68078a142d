#pragma once

#include <cstdint>
#include <string>

#include "simicd/solver.hpp"
#include "simicd/tissue.hpp"

namespace simicd {

/// Full solver snapshot; restoring one reproduces the continuation
/// bit-for-bit. config_hash ties a checkpoint to the run configuration that
/// produced it so stale snapshots are rejected on load.
struct Checkpoint {
    std::uint32_t version = 1;
    std::uint64_t config_hash = 0;
    double t_ms = 0;
    std::int64_t step_count = 0;
    std::uint32_t nx = 0, ny = 0;
    std::vector<double> vm, h;

    bool operator==(const Checkpoint&) const = default;
};

Checkpoint make_checkpoint(const Tissue& tissue, std::uint64_t config_hash);

/// Replace the tissue state from a checkpoint; dimension or hash mismatch
/// raises SimulationError.
void restore_checkpoint(Tissue& tissue, const Checkpoint& cp, std::uint64_t expected_hash);

void save_checkpoint(const Checkpoint& cp, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

/// FNV-1a over a canonical serialization of the run configuration.
std::uint64_t fnv1a64(const std::string& data);

}  // namespace simicd
