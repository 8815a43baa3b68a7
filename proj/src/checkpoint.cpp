#include "nmkl/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace nmkl {

namespace {

constexpr char kMagic[4] = {'N', 'M', 'K', 'L'};
constexpr std::size_t kHeaderBytes = 4 + 4 + 8 + 4 + 8;

template <typename T>
void put(std::string& out, T x) {
  std::uint64_t bits = 0;
  if constexpr (sizeof(T) == 8)
    bits = std::bit_cast<std::uint64_t>(x);
  else
    bits = std::uint64_t(x);
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(char((bits >> (8 * i)) & 0xff));
}

template <typename T>
T get(const std::string& in, std::size_t& pos) {
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) bits |= std::uint64_t(std::uint8_t(in[pos + i])) << (8 * i);
  pos += sizeof(T);
  if constexpr (std::is_same_v<T, double>)
    return std::bit_cast<double>(bits);
  else
    return T(bits);
}

}  // namespace

std::string encode_checkpoint(const Field& u, double t) {
  const VelocityGrid& g = u.grid();
  std::string out(kMagic, 4);
  out.reserve(kHeaderBytes + 8 * g.size());
  put<std::uint32_t>(out, kCheckpointVersion);
  put<double>(out, g.half_width());
  put<std::uint32_t>(out, std::uint32_t(g.points_per_axis()));
  put<double>(out, t);
  for (std::size_t i = 0; i < g.size(); ++i) put<double>(out, u[i]);
  return out;
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  if (bytes.size() < kHeaderBytes) throw CheckpointError("checkpoint: truncated header");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw CheckpointError("checkpoint: bad magic");
  std::size_t pos = 4;
  const auto version = get<std::uint32_t>(bytes, pos);
  if (version != kCheckpointVersion)
    throw CheckpointError("checkpoint: unsupported version " + std::to_string(version));
  const double L = get<double>(bytes, pos);
  const auto N = get<std::uint32_t>(bytes, pos);
  const double t = get<double>(bytes, pos);
  if (!(L > 0.0) || N < 2 || N > 4096) throw CheckpointError("checkpoint: bad grid metadata");
  const VelocityGrid g(L, int(N));
  const std::size_t expected = kHeaderBytes + 8 * g.size();
  if (bytes.size() < expected) throw CheckpointError("checkpoint: truncated payload");
  if (bytes.size() > expected) throw CheckpointError("checkpoint: trailing bytes after payload");
  Field u(g);
  for (std::size_t i = 0; i < g.size(); ++i) u[i] = get<double>(bytes, pos);
  return {t, std::move(u)};
}

void write_file_atomic(const std::string& path, const std::string& bytes) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    f.write(bytes.data(), std::streamsize(bytes.size()));
    if (!f) throw std::runtime_error("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, target);
}

void save_checkpoint(const Field& u, double t, const std::string& path) {
  write_file_atomic(path, encode_checkpoint(u, t));
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CheckpointError("checkpoint: cannot open '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return decode_checkpoint(ss.str());
}

}  // namespace nmkl
