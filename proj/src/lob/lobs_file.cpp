#include "simlob/lob/lobs_file.hpp"

#include <array>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>

#include "simlob/error.hpp"

namespace simlob::lob {
namespace {

template <class U>
void put_le(std::ostream& out, U value) {
    std::array<char, sizeof(U)> bytes{};
    auto raw = static_cast<std::make_unsigned_t<U>>(value);
    for (std::size_t i = 0; i < sizeof(U); ++i) {
        bytes[i] = static_cast<char>((raw >> (8 * i)) & 0xFF);
    }
    out.write(bytes.data(), bytes.size());
}

template <class U>
U get_le(std::istream& in) {
    std::array<unsigned char, sizeof(U)> bytes{};
    in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
    if (!in) throw IoError("LOBS1: unexpected end of stream");
    std::make_unsigned_t<U> raw = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
        raw |= static_cast<std::make_unsigned_t<U>>(bytes[i]) << (8 * i);
    }
    return static_cast<U>(raw);
}

constexpr std::array<char, 4> kMagic{'L', 'O', 'B', 'S'};

} // namespace

void write_lobs(std::ostream& out, std::span<const LobSnapshot> snaps, Price tick_size) {
    const std::size_t depth = snaps.empty() ? kDefaultDepth : snaps.front().depth();
    if (snaps.size() > std::numeric_limits<std::uint32_t>::max()) throw IoError("LOBS1: too many records");
    out.write(kMagic.data(), kMagic.size());
    put_le<std::uint32_t>(out, kLobsVersion);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(depth));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(snaps.size()));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(tick_size));
    for (const LobSnapshot& s : snaps) {
        if (s.depth() != depth) throw IoError("LOBS1: mixed snapshot depths in one stream");
        if (s.time < 0 || s.time > std::numeric_limits<std::uint32_t>::max()) {
            throw IoError("LOBS1: time does not fit u32");
        }
        put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.time));
        for (const Level& l : s.levels) {
            put_le<std::int64_t>(out, l.bid_price);
            put_le<std::int64_t>(out, l.bid_volume);
            put_le<std::int64_t>(out, l.ask_price);
            put_le<std::int64_t>(out, l.ask_volume);
        }
    }
    if (!out) throw IoError("LOBS1: write failed");
}

void write_lobs(const std::filesystem::path& path, std::span<const LobSnapshot> snaps, Price tick_size) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    write_lobs(out, snaps, tick_size);
}

LobsFile read_lobs(std::istream& in) {
    std::array<char, 4> magic{};
    in.read(magic.data(), magic.size());
    if (!in || magic != kMagic) throw IoError("LOBS1: bad magic");
    const auto version = get_le<std::uint32_t>(in);
    if (version != kLobsVersion) throw IoError("LOBS1: unsupported version " + std::to_string(version));
    LobsFile file;
    file.depth = get_le<std::uint32_t>(in);
    const auto count = get_le<std::uint32_t>(in);
    file.tick_size = get_le<std::uint32_t>(in);
    if (file.depth == 0) throw IoError("LOBS1: zero depth");
    file.snapshots.resize(count);
    for (LobSnapshot& s : file.snapshots) {
        s.time = get_le<std::uint32_t>(in);
        s.levels.resize(file.depth);
        for (Level& l : s.levels) {
            l.bid_price = get_le<std::int64_t>(in);
            l.bid_volume = get_le<std::int64_t>(in);
            l.ask_price = get_le<std::int64_t>(in);
            l.ask_volume = get_le<std::int64_t>(in);
        }
    }
    return file;
}

LobsFile read_lobs(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return read_lobs(in);
}

void write_lobs_csv(std::ostream& out, std::span<const LobSnapshot> snaps) {
    const std::size_t depth = snaps.empty() ? kDefaultDepth : snaps.front().depth();
    out << "time";
    for (std::size_t i = 1; i <= depth; ++i) {
        out << ",pb" << i << ",vb" << i << ",pa" << i << ",va" << i;
    }
    out << '\n';
    for (const LobSnapshot& s : snaps) {
        out << s.time;
        for (const Level& l : s.levels) {
            out << ',' << l.bid_price << ',' << l.bid_volume << ',' << l.ask_price << ',' << l.ask_volume;
        }
        out << '\n';
    }
}

void write_lobs_csv(const std::filesystem::path& path, std::span<const LobSnapshot> snaps) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    write_lobs_csv(out, snaps);
}

} // namespace simlob::lob
