#pragma once

#include "nmkl/grid.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>

namespace nmkl {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Layout, little-endian: "NMKL", u32 version, f64 L, u32 N, f64 t, N^3 f64 values.
struct Checkpoint {
  double t = 0.0;
  Field u;
};

std::string encode_checkpoint(const Field& u, double t);
Checkpoint decode_checkpoint(const std::string& bytes);

// Written to a temporary sibling and renamed into place.
void save_checkpoint(const Field& u, double t, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// Write-temp-then-rename for any text or binary payload.
void write_file_atomic(const std::string& path, const std::string& bytes);

}  // namespace nmkl
