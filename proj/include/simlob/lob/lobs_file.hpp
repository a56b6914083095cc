#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "simlob/lob/snapshot.hpp"

namespace simlob::lob {

// "LOBS1" snapshot stream, little-endian:
//   magic "LOBS", u32 version=1, u32 depth, u32 count, u32 tick_size,
//   then count records of u32 time followed by depth x (i64 p_b, i64 v_b, i64 p_a, i64 v_a).
inline constexpr std::uint32_t kLobsVersion = 1;

struct LobsFile {
    std::uint32_t depth = static_cast<std::uint32_t>(kDefaultDepth);
    Price tick_size = 1;
    std::vector<LobSnapshot> snapshots;
};

void write_lobs(std::ostream& out, std::span<const LobSnapshot> snaps, Price tick_size);
void write_lobs(const std::filesystem::path& path, std::span<const LobSnapshot> snaps, Price tick_size);

LobsFile read_lobs(std::istream& in);
LobsFile read_lobs(const std::filesystem::path& path);

// CSV with header time,pb1,vb1,pa1,va1,...,pbN,vbN,paN,vaN.
void write_lobs_csv(std::ostream& out, std::span<const LobSnapshot> snaps);
void write_lobs_csv(const std::filesystem::path& path, std::span<const LobSnapshot> snaps);

} // namespace simlob::lob
