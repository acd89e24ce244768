#pragma once

// Binary snapshot of a SimState plus the bookkeeping a resumed run needs.
// All integers and doubles are little-endian; see docs/snapshot_format.md
// for the byte layout.

#include <cstdint>
#include <string>

#include "nsv/coupling.hpp"
#include "nsv/diagnostics.hpp"

namespace nsv {

inline constexpr char kSnapshotMagic[8] = {'N', 'S', 'V', 'S', 'N', 'A', 'P', '1'};
inline constexpr std::uint32_t kSnapshotVersion = 1;

/// Run bookkeeping stored next to the fields.
struct RunLedger {
  std::uint64_t windows = 0;  ///< accepted windows since t = 0
  EnergyTracker energy;
  ConservationReference reference;
};

struct Snapshot {
  SimState state;
  std::string config_text;  ///< rendered RunConfig, empty when unknown
  RunLedger ledger;
};

void write_snapshot(const std::string& path, const Snapshot& snap);
/// Throws Error(format) on wrong magic, version skew, truncation or a
/// checksum mismatch, Error(io) when the file cannot be opened.
Snapshot read_snapshot(const std::string& path);

}  // namespace nsv
