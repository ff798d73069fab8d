// On-disk tensor archive ("TNSA"): bit-exact storage for f64/c128/u8 tensors.
//
// Layout:
//   bytes 0..3   magic "TNSA"
//   bytes 4..5   version, u16 little-endian
//   bytes 6..9   header byte length H, u32 little-endian
//   H bytes      UTF-8 header, one line per entry: "<name> <kind> <d0> <d1> ...\n"
//   payload      entries concatenated in header order, row-major little-endian;
//                complex elements stored as (real, imag) pairs of f64
#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "diasep/tensor.hpp"

namespace diasep {

static_assert(std::endian::native == std::endian::little,
              "tensor archive assumes a little-endian host");

struct ArchiveEntry {
  std::string name;
  std::variant<Tensor<double>, Tensor<cdouble>, Tensor<std::uint8_t>> value;

  const std::vector<std::size_t>& shape() const {
    return std::visit([](const auto& t) -> const std::vector<std::size_t>& { return t.shape(); }, value);
  }
  std::size_t element_size() const {
    if (std::holds_alternative<Tensor<double>>(value)) return 8;
    if (std::holds_alternative<Tensor<cdouble>>(value)) return 16;
    return 1;
  }
  const char* kind() const {
    if (std::holds_alternative<Tensor<double>>(value)) return "f64";
    if (std::holds_alternative<Tensor<cdouble>>(value)) return "c128";
    return "u8";
  }
};

namespace detail {

inline const void* entry_data(const ArchiveEntry& e) {
  return std::visit([](const auto& t) -> const void* { return t.data(); }, e.value);
}

inline std::size_t entry_count(const ArchiveEntry& e) {
  return std::visit([](const auto& t) { return t.size(); }, e.value);
}

}  // namespace detail

inline void write_archive(const std::string& path, const std::vector<ArchiveEntry>& entries) {
  for (std::size_t i = 0; i < entries.size(); ++i) {
    check(!entries[i].name.empty(), "write_archive: entry name must not be empty");
    check(entries[i].name.find_first_of(" \n") == std::string::npos,
          "write_archive: entry name must not contain spaces or newlines: " + entries[i].name);
    for (std::size_t j = i + 1; j < entries.size(); ++j)
      check(entries[i].name != entries[j].name,
            "write_archive: duplicate entry name: " + entries[i].name);
  }

  std::ostringstream header;
  for (const auto& e : entries) {
    header << e.name << ' ' << e.kind();
    for (std::size_t d : e.shape()) header << ' ' << d;
    header << '\n';
  }
  const std::string htext = header.str();
  check(htext.size() <= 0xFFFFFFFFull, "write_archive: header too large");

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  check(out.good(), "write_archive: cannot open " + path);
  out.write("TNSA", 4);
  const std::uint16_t version = 1;
  out.write(reinterpret_cast<const char*>(&version), 2);
  const std::uint32_t hlen = static_cast<std::uint32_t>(htext.size());
  out.write(reinterpret_cast<const char*>(&hlen), 4);
  out.write(htext.data(), static_cast<std::streamsize>(htext.size()));
  for (const auto& e : entries) {
    const std::size_t bytes = detail::entry_count(e) * e.element_size();
    out.write(reinterpret_cast<const char*>(detail::entry_data(e)),
              static_cast<std::streamsize>(bytes));
  }
  out.flush();
  check(out.good(), "write_archive: I/O failure writing " + path);
}

inline std::vector<ArchiveEntry> read_archive(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  check(in.good(), "read_archive: cannot open " + path);

  char magic[4] = {};
  in.read(magic, 4);
  check(in.gcount() == 4 && std::memcmp(magic, "TNSA", 4) == 0,
        "read_archive: bad magic in " + path);
  std::uint16_t version = 0;
  in.read(reinterpret_cast<char*>(&version), 2);
  check(in.gcount() == 2 && version == 1, "read_archive: unsupported version");
  std::uint32_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), 4);
  check(in.gcount() == 4, "read_archive: truncated header length");
  std::string htext(hlen, '\0');
  in.read(htext.data(), hlen);
  check(static_cast<std::uint32_t>(in.gcount()) == hlen, "read_archive: truncated header");

  std::vector<ArchiveEntry> entries;
  std::istringstream hs(htext);
  std::string line;
  while (std::getline(hs, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string name, kind;
    ls >> name >> kind;
    check(!name.empty() && !kind.empty(), "read_archive: malformed header line: " + line);
    std::vector<std::size_t> shape;
    std::size_t d;
    while (ls >> d) shape.push_back(d);

    ArchiveEntry e;
    e.name = name;
    if (kind == "f64") {
      e.value = Tensor<double>(shape);
    } else if (kind == "c128") {
      e.value = Tensor<cdouble>(shape);
    } else if (kind == "u8") {
      e.value = Tensor<std::uint8_t>(shape);
    } else {
      fail("read_archive: unknown element kind '" + kind + "' for entry " + name);
    }
    const std::size_t bytes = detail::entry_count(e) * e.element_size();
    void* dst = std::visit([](auto& t) -> void* { return t.data(); }, e.value);
    in.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(bytes));
    check(static_cast<std::size_t>(in.gcount()) == bytes,
          "read_archive: truncated payload for entry " + name);
    entries.push_back(std::move(e));
  }
  return entries;
}

inline const ArchiveEntry* find_entry(const std::vector<ArchiveEntry>& entries,
                                      const std::string& name) {
  for (const auto& e : entries)
    if (e.name == name) return &e;
  return nullptr;
}

template <typename T>
const Tensor<T>& require_entry(const std::vector<ArchiveEntry>& entries,
                               const std::string& name) {
  const ArchiveEntry* e = find_entry(entries, name);
  check(e != nullptr, "archive: missing entry '" + name + "'");
  const Tensor<T>* t = std::get_if<Tensor<T>>(&e->value);
  check(t != nullptr, "archive: entry '" + name + "' has unexpected element kind");
  return *t;
}

}  // namespace diasep
