#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <vector>

#include "feint/errors.hpp"
#include "feint/nn/tensor.hpp"

namespace feint::nn {

// Binary parameter file, all integers and floats little-endian:
//   magic "FEINTNN\0", u32 version, u32 header count, i64 header values,
//   u32 tensor count, per tensor u32 rank + i64 dims, then every tensor's f64 values.
struct ParamFile {
  std::vector<std::int64_t> header;  // model kind and architecture
  std::vector<Shape> shapes;
  std::vector<Eigen::VectorXd> values;
};

inline constexpr std::array<char, 8> kParamMagic{'F', 'E', 'I', 'N', 'T', 'N', 'N', '\0'};
inline constexpr std::uint32_t kParamVersion = 1;

namespace detail {

template <typename T>
void put_le(std::ostream& out, T v) {
  std::uint64_t bits = 0;
  std::memcpy(&bits, &v, sizeof(T));
  char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
  out.write(buf, sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
  unsigned char buf[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(buf), sizeof(T))) throw FormatError("parameter file truncated");
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) bits |= std::uint64_t{buf[i]} << (8 * i);
  T v;
  std::memcpy(&v, &bits, sizeof(T));
  return v;
}

}  // namespace detail

inline void write_param_file(std::ostream& out, const ParamFile& f) {
  if (f.shapes.size() != f.values.size()) throw ArgumentError("parameter file: shapes and values differ in count");
  out.write(kParamMagic.data(), kParamMagic.size());
  detail::put_le<std::uint32_t>(out, kParamVersion);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(f.header.size()));
  for (auto h : f.header) detail::put_le<std::int64_t>(out, h);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(f.shapes.size()));
  for (std::size_t i = 0; i < f.shapes.size(); ++i) {
    if (shape_count(f.shapes[i]) != f.values[i].size()) throw ShapeError("parameter file: tensor size mismatch");
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(f.shapes[i].size()));
    for (auto d : f.shapes[i]) detail::put_le<std::int64_t>(out, d);
  }
  for (const auto& v : f.values) {
    for (Index i = 0; i < v.size(); ++i) detail::put_le<double>(out, v[i]);
  }
}

inline ParamFile read_param_file(std::istream& in) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kParamMagic) throw FormatError("not a parameter file");
  const auto version = detail::get_le<std::uint32_t>(in);
  if (version != kParamVersion) throw FormatError("unsupported parameter file version " + std::to_string(version));
  ParamFile f;
  f.header.resize(detail::get_le<std::uint32_t>(in));
  for (auto& h : f.header) h = detail::get_le<std::int64_t>(in);
  const auto n = detail::get_le<std::uint32_t>(in);
  f.shapes.resize(n);
  for (auto& s : f.shapes) {
    s.resize(detail::get_le<std::uint32_t>(in));
    for (auto& d : s) {
      d = detail::get_le<std::int64_t>(in);
      if (d < 0) throw FormatError("parameter file: negative dimension");
    }
  }
  for (const auto& s : f.shapes) {
    Eigen::VectorXd v(shape_count(s));
    for (Index i = 0; i < v.size(); ++i) v[i] = detail::get_le<double>(in);
    f.values.push_back(std::move(v));
  }
  return f;
}

inline void save_param_file(const std::filesystem::path& path, const ParamFile& f) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  write_param_file(out, f);
}

inline ParamFile load_param_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  return read_param_file(in);
}

}  // namespace feint::nn
