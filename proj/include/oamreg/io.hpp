#pragma once

// On-disk containers.
//
// Array file: 8-byte magic ("OAMF32\0\0", "OAMF64\0\0" or "OAMI64\0\0"),
// uint64 rank, rank x uint64 extents, then row-major little-endian data.
//
// Manifest: UTF-8 text, one "key = value" per line, '#' comments, keys in
// insertion order.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "oamreg/error.hpp"

namespace oamreg {

static_assert(std::endian::native == std::endian::little,
              "array containers are written in native little-endian order");

enum class ArrayType { f32, f64, i64 };

struct ArrayHeader {
  ArrayType type = ArrayType::f64;
  std::vector<std::uint64_t> shape;

  std::uint64_t count() const {
    std::uint64_t n = 1;
    for (auto s : shape) n *= s;
    return n;
  }
};

namespace detail {

inline std::array<char, 8> magic_for(ArrayType t) {
  switch (t) {
    case ArrayType::f32: return {'O', 'A', 'M', 'F', '3', '2', '\0', '\0'};
    case ArrayType::f64: return {'O', 'A', 'M', 'F', '6', '4', '\0', '\0'};
    case ArrayType::i64: return {'O', 'A', 'M', 'I', '6', '4', '\0', '\0'};
  }
  return {};
}

template <class T>
constexpr ArrayType array_type_of() {
  if constexpr (std::is_same_v<T, float>) return ArrayType::f32;
  else if constexpr (std::is_same_v<T, double>) return ArrayType::f64;
  else {
    static_assert(std::is_same_v<T, std::int64_t>);
    return ArrayType::i64;
  }
}

}  // namespace detail

template <class T>
void write_array(const std::filesystem::path& path, const std::vector<std::uint64_t>& shape,
                 const T* data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCategory::io, "cannot write " + path.string());
  const auto magic = detail::magic_for(detail::array_type_of<T>());
  out.write(magic.data(), 8);
  const std::uint64_t rank = shape.size();
  out.write(reinterpret_cast<const char*>(&rank), sizeof rank);
  std::uint64_t count = 1;
  for (std::uint64_t s : shape) {
    out.write(reinterpret_cast<const char*>(&s), sizeof s);
    count *= s;
  }
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * sizeof(T)));
  require(static_cast<bool>(out), ErrorCategory::io, "failed writing " + path.string());
}

template <class T>
std::vector<T> read_array(const std::filesystem::path& path, std::vector<std::uint64_t>* shape_out = nullptr) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCategory::io, "cannot read " + path.string());
  std::array<char, 8> magic{};
  in.read(magic.data(), 8);
  require(static_cast<bool>(in) && magic == detail::magic_for(detail::array_type_of<T>()),
          ErrorCategory::format, "bad array magic or element type in " + path.string());
  std::uint64_t rank = 0;
  in.read(reinterpret_cast<char*>(&rank), sizeof rank);
  require(static_cast<bool>(in) && rank <= 8, ErrorCategory::format,
          "bad array rank in " + path.string());
  std::vector<std::uint64_t> shape(rank);
  std::uint64_t count = 1;
  for (auto& s : shape) {
    in.read(reinterpret_cast<char*>(&s), sizeof s);
    count *= s;
  }
  require(static_cast<bool>(in), ErrorCategory::format, "truncated header in " + path.string());
  std::vector<T> data(count);
  in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(count * sizeof(T)));
  require(static_cast<bool>(in) && in.gcount() == static_cast<std::streamsize>(count * sizeof(T)),
          ErrorCategory::format, "truncated data in " + path.string());
  in.peek();
  require(in.eof(), ErrorCategory::format, "trailing bytes in " + path.string());
  if (shape_out) *shape_out = std::move(shape);
  return data;
}

// Ordered key-value text.
class Manifest {
 public:
  void set(const std::string& key, const std::string& value) {
    for (auto& [k, v] : entries_) {
      if (k == key) {
        v = value;
        return;
      }
    }
    entries_.emplace_back(key, value);
  }

  template <class T>
  void set(const std::string& key, const T& value) {
    std::ostringstream os;
    os.precision(17);
    os << value;
    set(key, os.str());
  }

  bool has(const std::string& key) const {
    for (const auto& e : entries_) {
      if (e.first == key) return true;
    }
    return false;
  }

  const std::string& get(const std::string& key) const {
    for (const auto& e : entries_) {
      if (e.first == key) return e.second;
    }
    fail(ErrorCategory::format, "manifest is missing key '" + key + "'");
  }

  std::string get_or(const std::string& key, const std::string& fallback) const {
    return has(key) ? get(key) : fallback;
  }

  long long get_int(const std::string& key) const {
    try {
      std::size_t pos = 0;
      const long long v = std::stoll(get(key), &pos);
      if (pos == get(key).size()) return v;
    } catch (const std::exception&) {
    }
    fail(ErrorCategory::format, "manifest key '" + key + "' is not an integer");
  }

  double get_double(const std::string& key) const {
    try {
      std::size_t pos = 0;
      const double v = std::stod(get(key), &pos);
      if (pos == get(key).size()) return v;
    } catch (const std::exception&) {
    }
    fail(ErrorCategory::format, "manifest key '" + key + "' is not a number");
  }

  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

  std::string str(std::string_view header = {}) const {
    std::string out;
    if (!header.empty()) {
      out += "# ";
      out += header;
      out += '\n';
    }
    for (const auto& [k, v] : entries_) out += k + " = " + v + "\n";
    return out;
  }

  void write(const std::filesystem::path& path, std::string_view header = {}) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorCategory::io, "cannot write " + path.string());
    out << str(header);
    require(static_cast<bool>(out), ErrorCategory::io, "failed writing " + path.string());
  }

  static Manifest parse(std::istream& in, const std::string& origin) {
    Manifest m;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const auto first = line.find_first_not_of(" \t");
      if (first == std::string::npos || line[first] == '#') continue;
      const auto eq = line.find('=');
      require(eq != std::string::npos, ErrorCategory::format,
              origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
      m.entries_.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return m;
  }

  static Manifest read(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorCategory::io, "cannot read " + path.string());
    return parse(in, path.string());
  }

  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
  }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

inline void ensure_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  require(!ec && std::filesystem::is_directory(dir), ErrorCategory::io,
          "cannot create directory " + dir.string());
}

}  // namespace oamreg
