#include "vkg/archive.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

namespace vkg {
namespace {

constexpr std::uint32_t kLocalHeaderSig = 0x04034b50;
constexpr std::uint32_t kCentralHeaderSig = 0x02014b50;
constexpr std::uint32_t kEndOfCentralDirSig = 0x06054b50;

std::uint16_t le16(const unsigned char* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }
std::uint32_t le32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

struct ZipMember {
  std::string name;
  std::uint16_t method = 0;
  std::uint32_t compressed_size = 0;
  std::uint32_t local_offset = 0;
};

std::vector<ZipMember> read_central_directory(std::ifstream& in) {
  in.seekg(0, std::ios::end);
  const auto file_size = static_cast<std::uint64_t>(in.tellg());
  // EOCD is 22 bytes plus an optional comment of up to 64 KiB.
  const std::uint64_t tail = std::min<std::uint64_t>(file_size, 22 + 65535);
  std::vector<unsigned char> buf(tail);
  in.seekg(static_cast<std::streamoff>(file_size - tail));
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(tail));
  if (!in) throw ArchiveError("zip: cannot read tail");

  std::int64_t eocd = -1;
  for (std::int64_t i = static_cast<std::int64_t>(tail) - 22; i >= 0; --i) {
    if (le32(&buf[static_cast<std::size_t>(i)]) == kEndOfCentralDirSig) {
      eocd = i;
      break;
    }
  }
  if (eocd < 0) throw ArchiveError("zip: end of central directory not found");
  const unsigned char* e = &buf[static_cast<std::size_t>(eocd)];
  const std::uint16_t entries = le16(e + 10);
  const std::uint32_t cd_size = le32(e + 12);
  const std::uint32_t cd_offset = le32(e + 16);
  if (entries == 0xFFFF || cd_offset == 0xFFFFFFFF) throw ArchiveError("zip64 archives unsupported");

  std::vector<unsigned char> cd(cd_size);
  in.seekg(cd_offset);
  in.read(reinterpret_cast<char*>(cd.data()), cd_size);
  if (!in) throw ArchiveError("zip: truncated central directory");

  std::vector<ZipMember> members;
  std::size_t pos = 0;
  for (std::uint16_t k = 0; k < entries; ++k) {
    if (pos + 46 > cd.size() || le32(&cd[pos]) != kCentralHeaderSig)
      throw ArchiveError("zip: corrupt central directory");
    const unsigned char* h = &cd[pos];
    ZipMember m;
    m.method = le16(h + 10);
    m.compressed_size = le32(h + 20);
    const std::uint16_t name_len = le16(h + 28);
    const std::uint16_t extra_len = le16(h + 30);
    const std::uint16_t comment_len = le16(h + 32);
    m.local_offset = le32(h + 42);
    if (pos + 46 + name_len > cd.size()) throw ArchiveError("zip: corrupt member name");
    m.name.assign(reinterpret_cast<const char*>(h + 46), name_len);
    if (m.compressed_size == 0xFFFFFFFF || m.local_offset == 0xFFFFFFFF)
      throw ArchiveError("zip64 archives unsupported");
    members.push_back(std::move(m));
    pos += 46u + name_len + extra_len + comment_len;
  }
  return members;
}

bool has_suffix(const std::string& s, std::string_view suffix) {
  if (s.size() < suffix.size()) return false;
  return std::equal(suffix.rbegin(), suffix.rend(), s.rbegin(), [](char a, char b) {
    return a == std::tolower(static_cast<unsigned char>(b));
  });
}

}  // namespace

ArchiveKind detect_archive(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::array<unsigned char, 4> magic{};
  in.read(reinterpret_cast<char*>(magic.data()), 4);
  if (in.gcount() >= 2 && magic[0] == 0x1f && magic[1] == 0x8b) return ArchiveKind::gzip;
  if (in.gcount() == 4 && le32(magic.data()) == kLocalHeaderSig) return ArchiveKind::zip;
  return ArchiveKind::none;
}

void gunzip_file(const std::filesystem::path& in, const std::filesystem::path& out) {
  gzFile gz = gzopen(in.string().c_str(), "rb");
  if (!gz) throw ArchiveError("gzip: cannot open " + in.string());
  // zlib reads non-gzip input transparently; refuse it instead.
  if (gzgetc(gz) == -1 || gzdirect(gz)) {
    gzclose(gz);
    throw ArchiveError("gzip: " + in.string() + " is not gzip data");
  }
  gzrewind(gz);
  std::ofstream os(out, std::ios::binary | std::ios::trunc);
  std::vector<char> buf(1 << 16);
  int n = 0;
  while ((n = gzread(gz, buf.data(), static_cast<unsigned>(buf.size()))) > 0)
    os.write(buf.data(), n);
  int err = 0;
  const char* msg = gzerror(gz, &err);
  gzclose(gz);
  if (n < 0 || err < 0) throw ArchiveError(std::string("gzip: ") + msg);
  if (!os) throw ArchiveError("gzip: cannot write " + out.string());
}

void unzip_first_delimited(const std::filesystem::path& in_path, const std::filesystem::path& out) {
  std::ifstream in(in_path, std::ios::binary);
  if (!in) throw ArchiveError("zip: cannot open " + in_path.string());
  const auto members = read_central_directory(in);

  const ZipMember* pick = nullptr;
  for (const auto& m : members) {
    if (m.name.empty() || m.name.back() == '/') continue;
    if (has_suffix(m.name, ".csv") || has_suffix(m.name, ".txt") || has_suffix(m.name, ".tsv")) {
      pick = &m;
      break;
    }
    if (!pick) pick = &m;
  }
  if (!pick) throw ArchiveError("zip: no file members");
  if (pick->method != 0 && pick->method != 8)
    throw ArchiveError("zip: unsupported compression method " + std::to_string(pick->method));

  unsigned char lh[30];
  in.seekg(pick->local_offset);
  in.read(reinterpret_cast<char*>(lh), 30);
  if (!in || le32(lh) != kLocalHeaderSig) throw ArchiveError("zip: bad local header");
  const std::uint64_t data_offset =
      std::uint64_t{pick->local_offset} + 30 + le16(lh + 26) + le16(lh + 28);
  in.seekg(static_cast<std::streamoff>(data_offset));

  std::ofstream os(out, std::ios::binary | std::ios::trunc);
  std::vector<char> ibuf(1 << 16);
  std::vector<char> obuf(1 << 16);
  std::uint64_t remaining = pick->compressed_size;

  if (pick->method == 0) {
    while (remaining > 0) {
      const auto chunk = static_cast<std::streamsize>(std::min<std::uint64_t>(remaining, ibuf.size()));
      in.read(ibuf.data(), chunk);
      if (in.gcount() != chunk) throw ArchiveError("zip: truncated member");
      os.write(ibuf.data(), chunk);
      remaining -= static_cast<std::uint64_t>(chunk);
    }
  } else {
    z_stream zs{};
    if (inflateInit2(&zs, -MAX_WBITS) != Z_OK) throw ArchiveError("zip: inflateInit failed");
    int rc = Z_OK;
    while (rc != Z_STREAM_END) {
      if (zs.avail_in == 0) {
        if (remaining == 0) break;
        const auto chunk =
            static_cast<std::streamsize>(std::min<std::uint64_t>(remaining, ibuf.size()));
        in.read(ibuf.data(), chunk);
        if (in.gcount() != chunk) {
          inflateEnd(&zs);
          throw ArchiveError("zip: truncated member");
        }
        remaining -= static_cast<std::uint64_t>(chunk);
        zs.next_in = reinterpret_cast<Bytef*>(ibuf.data());
        zs.avail_in = static_cast<uInt>(chunk);
      }
      zs.next_out = reinterpret_cast<Bytef*>(obuf.data());
      zs.avail_out = static_cast<uInt>(obuf.size());
      rc = inflate(&zs, Z_NO_FLUSH);
      if (rc != Z_OK && rc != Z_STREAM_END) {
        inflateEnd(&zs);
        throw ArchiveError("zip: corrupt deflate stream");
      }
      os.write(obuf.data(), static_cast<std::streamsize>(obuf.size() - zs.avail_out));
    }
    inflateEnd(&zs);
    if (rc != Z_STREAM_END) throw ArchiveError("zip: truncated deflate stream");
  }
  if (!os) throw ArchiveError("zip: cannot write " + out.string());
}

}  // namespace vkg
