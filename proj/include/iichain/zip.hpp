//------------------------------------------------------------------------------
//
//   Copyright 2026 The iichain Authors
//
//   Licensed under the Apache License, Version 2.0 (the "License");
//   you may not use this file except in compliance with the License.
//   You may obtain a copy of the License at
//
//       http://www.apache.org/licenses/LICENSE-2.0
//
//   Unless required by applicable law or agreed to in writing, software
//   distributed under the License is distributed on an "AS IS" BASIS,
//   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//   See the License for the specific language governing permissions and
//   limitations under the License.
//
//------------------------------------------------------------------------------

#pragma once

#include <zlib.h>

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "iichain/chain.hpp"  // detail::read_file_bytes / write_file_bytes
#include "iichain/types.hpp"

namespace iichain {

// Minimal ZIP support: exactly what chain archives need. Deflate-compressed
// entries, CRC-checked reads, no zip64, no encryption, comments ignored.

struct ZipEntry {
  std::string name;
  std::string data;
};

namespace zipdetail {

constexpr std::uint32_t kLocalHeaderSig = 0x04034b50;
constexpr std::uint32_t kCentralDirSig = 0x02014b50;
constexpr std::uint32_t kEndOfCentralDirSig = 0x06054b50;
constexpr std::uint16_t kMethodStored = 0;
constexpr std::uint16_t kMethodDeflated = 8;
constexpr std::uint16_t kVersionNeeded = 20;

inline void put16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

inline void put32(std::string& out, std::uint32_t v) {
  put16(out, static_cast<std::uint16_t>(v & 0xffff));
  put16(out, static_cast<std::uint16_t>(v >> 16));
}

inline std::uint16_t get16(std::string_view in, std::size_t off) {
  if (off + 2 > in.size()) throw ZipError("truncated zip structure");
  return static_cast<std::uint16_t>(static_cast<unsigned char>(in[off]) |
                                    (static_cast<unsigned char>(in[off + 1]) << 8));
}

inline std::uint32_t get32(std::string_view in, std::size_t off) {
  return static_cast<std::uint32_t>(get16(in, off)) |
         (static_cast<std::uint32_t>(get16(in, off + 2)) << 16);
}

inline std::uint32_t crc(std::string_view data) {
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(data.data()),
            static_cast<uInt>(data.size())));
}

// Raw deflate (no zlib header), the stream format ZIP expects.
inline std::string deflate_raw(std::string_view data) {
  z_stream zs{};
  if (deflateInit2(&zs, Z_DEFAULT_COMPRESSION, Z_DEFLATED, -MAX_WBITS, 8,
                   Z_DEFAULT_STRATEGY) != Z_OK)
    throw ZipError("deflateInit2 failed");
  std::string out(deflateBound(&zs, static_cast<uLong>(data.size())), '\0');
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data()));
  zs.avail_in = static_cast<uInt>(data.size());
  zs.next_out = reinterpret_cast<Bytef*>(out.data());
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = deflate(&zs, Z_FINISH);
  deflateEnd(&zs);
  if (rc != Z_STREAM_END) throw ZipError("deflate failed");
  out.resize(zs.total_out);
  return out;
}

inline std::string inflate_raw(std::string_view data, std::size_t expected_size) {
  z_stream zs{};
  if (inflateInit2(&zs, -MAX_WBITS) != Z_OK)
    throw ZipError("inflateInit2 failed");
  std::string out(expected_size, '\0');
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data()));
  zs.avail_in = static_cast<uInt>(data.size());
  zs.next_out = reinterpret_cast<Bytef*>(out.data());
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = inflate(&zs, Z_FINISH);
  const auto produced = zs.total_out;
  inflateEnd(&zs);
  if (rc != Z_STREAM_END || produced != expected_size)
    throw ZipError("inflate failed: corrupted entry data");
  return out;
}

// MS-DOS date/time pair used by zip headers; the epoch floor is 1980.
inline std::pair<std::uint16_t, std::uint16_t> dos_datetime(Timestamp ts) {
  std::time_t t = static_cast<std::time_t>(ts.secs);
  std::tm tm{};
  gmtime_r(&t, &tm);
  int year = tm.tm_year + 1900;
  if (year < 1980) return {0x0021, 0};  // 1980-01-01 00:00:00
  const std::uint16_t date = static_cast<std::uint16_t>(
      ((year - 1980) << 9) | ((tm.tm_mon + 1) << 5) | tm.tm_mday);
  const std::uint16_t time = static_cast<std::uint16_t>(
      (tm.tm_hour << 11) | (tm.tm_min << 5) | (tm.tm_sec / 2));
  return {date, time};
}

}  // namespace zipdetail

inline std::string zip_pack(const std::vector<ZipEntry>& entries,
                            Timestamp mtime) {
  using namespace zipdetail;
  std::string out;
  std::string central;
  const auto [dos_date, dos_time] = dos_datetime(mtime);

  for (const ZipEntry& e : entries) {
    if (e.data.size() > 0xfffffffful || e.name.size() > 0xffff)
      throw ZipError("entry too large for zip32: " + e.name);
    const std::uint32_t entry_crc = crc(e.data);
    std::string packed = deflate_raw(e.data);
    std::uint16_t method = kMethodDeflated;
    if (packed.size() >= e.data.size()) {
      packed = e.data;
      method = kMethodStored;
    }
    const auto offset = static_cast<std::uint32_t>(out.size());

    put32(out, kLocalHeaderSig);
    put16(out, kVersionNeeded);
    put16(out, 0);  // flags
    put16(out, method);
    put16(out, dos_time);
    put16(out, dos_date);
    put32(out, entry_crc);
    put32(out, static_cast<std::uint32_t>(packed.size()));
    put32(out, static_cast<std::uint32_t>(e.data.size()));
    put16(out, static_cast<std::uint16_t>(e.name.size()));
    put16(out, 0);  // extra length
    out += e.name;
    out += packed;

    put32(central, kCentralDirSig);
    put16(central, kVersionNeeded);  // version made by
    put16(central, kVersionNeeded);
    put16(central, 0);  // flags
    put16(central, method);
    put16(central, dos_time);
    put16(central, dos_date);
    put32(central, entry_crc);
    put32(central, static_cast<std::uint32_t>(packed.size()));
    put32(central, static_cast<std::uint32_t>(e.data.size()));
    put16(central, static_cast<std::uint16_t>(e.name.size()));
    put16(central, 0);  // extra length
    put16(central, 0);  // comment length
    put16(central, 0);  // disk number start
    put16(central, 0);  // internal attributes
    put32(central, 0);  // external attributes
    put32(central, offset);
    central += e.name;
  }

  const auto central_offset = static_cast<std::uint32_t>(out.size());
  out += central;
  put32(out, kEndOfCentralDirSig);
  put16(out, 0);  // this disk
  put16(out, 0);  // central dir start disk
  put16(out, static_cast<std::uint16_t>(entries.size()));
  put16(out, static_cast<std::uint16_t>(entries.size()));
  put32(out, static_cast<std::uint32_t>(central.size()));
  put32(out, central_offset);
  put16(out, 0);  // comment length
  return out;
}

inline std::vector<ZipEntry> zip_unpack(std::string_view bytes) {
  using namespace zipdetail;
  // End-of-central-directory record: fixed 22 bytes plus an optional comment,
  // found by scanning backwards for its signature.
  if (bytes.size() < 22) throw ZipError("file too small to be a zip archive");
  std::size_t eocd = std::string_view::npos;
  const std::size_t scan_floor =
      bytes.size() > (22 + 0xffff) ? bytes.size() - 22 - 0xffff : 0;
  for (std::size_t i = bytes.size() - 22 + 1; i-- > scan_floor;) {
    if (get32(bytes, i) == kEndOfCentralDirSig) {
      eocd = i;
      break;
    }
  }
  if (eocd == std::string_view::npos)
    throw ZipError("end-of-central-directory record not found");

  const std::uint16_t entry_count = get16(bytes, eocd + 10);
  const std::uint32_t central_size = get32(bytes, eocd + 12);
  const std::uint32_t central_offset = get32(bytes, eocd + 16);
  if (central_offset + central_size > bytes.size())
    throw ZipError("central directory out of bounds");

  std::vector<ZipEntry> entries;
  std::size_t pos = central_offset;
  for (std::uint16_t n = 0; n < entry_count; ++n) {
    if (get32(bytes, pos) != kCentralDirSig)
      throw ZipError("bad central directory signature");
    const std::uint16_t method = get16(bytes, pos + 10);
    const std::uint32_t entry_crc = get32(bytes, pos + 16);
    const std::uint32_t csize = get32(bytes, pos + 20);
    const std::uint32_t usize = get32(bytes, pos + 24);
    const std::uint16_t name_len = get16(bytes, pos + 28);
    const std::uint16_t extra_len = get16(bytes, pos + 30);
    const std::uint16_t comment_len = get16(bytes, pos + 32);
    const std::uint32_t local_offset = get32(bytes, pos + 42);
    if (pos + 46 + name_len > bytes.size()) throw ZipError("truncated central entry");
    std::string name(bytes.substr(pos + 46, name_len));

    if (get32(bytes, local_offset) != kLocalHeaderSig)
      throw ZipError("bad local header for entry " + name);
    const std::uint16_t local_name_len = get16(bytes, local_offset + 26);
    const std::uint16_t local_extra_len = get16(bytes, local_offset + 28);
    const std::size_t data_off =
        local_offset + 30 + local_name_len + local_extra_len;
    if (data_off + csize > bytes.size())
      throw ZipError("truncated entry data for " + name);
    const auto packed = bytes.substr(data_off, csize);

    std::string data;
    if (method == kMethodDeflated) {
      data = inflate_raw(packed, usize);
    } else if (method == kMethodStored) {
      if (csize != usize) throw ZipError("stored entry size mismatch for " + name);
      data.assign(packed);
    } else {
      throw ZipError("unsupported compression method in entry " + name);
    }
    if (crc(data) != entry_crc)
      throw ZipError("crc mismatch in entry " + name);

    entries.push_back({std::move(name), std::move(data)});
    pos += 46u + name_len + extra_len + comment_len;
  }
  return entries;
}

inline void zip_write_file(const std::filesystem::path& path,
                           const std::vector<ZipEntry>& entries,
                           Timestamp mtime) {
  detail::write_file_bytes(path, zip_pack(entries, mtime));
}

inline std::vector<ZipEntry> zip_read_file(const std::filesystem::path& path) {
  return zip_unpack(detail::read_file_bytes(path));
}

}  // namespace iichain
