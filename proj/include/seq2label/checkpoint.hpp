#pragma once

// Parameter checkpoint: a flat binary archive of name -> (shape, row-major
// values), little-endian, with a header recording the format version and the
// scalar width. Loading is strict: names, order, shapes, and precision must
// match the receiving model.

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "seq2label/tensor.hpp"

namespace seq2label {

namespace detail {
inline constexpr char kCheckpointMagic[8] = {'S', '2', 'L', 'C', 'K', 'P', 'T', '\0'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

template <typename V>
void write_pod(std::ostream& out, const V& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename V>
V read_pod(std::istream& in, const std::string& path) {
  V v;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw std::runtime_error("checkpoint: truncated file " + path);
  return v;
}
}  // namespace detail

template <typename T>
void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, Tensor<T>>>& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot write " + path);
  out.write(detail::kCheckpointMagic, sizeof detail::kCheckpointMagic);
  detail::write_pod(out, detail::kCheckpointVersion);
  detail::write_pod(out, static_cast<std::uint32_t>(sizeof(T)));
  detail::write_pod(out, static_cast<std::uint64_t>(params.size()));
  for (const auto& [name, p] : params) {
    detail::write_pod(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    detail::write_pod(out, static_cast<std::uint32_t>(p.shape().size()));
    for (Dim d : p.shape()) detail::write_pod(out, static_cast<std::uint64_t>(d));
    out.write(reinterpret_cast<const char*>(p.data()),
              static_cast<std::streamsize>(p.numel() * static_cast<Dim>(sizeof(T))));
  }
  if (!out) throw std::runtime_error("checkpoint: write failed for " + path);
}

template <typename T>
void load_checkpoint(const std::string& path,
                     std::vector<std::pair<std::string, Tensor<T>>>& params) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, detail::kCheckpointMagic, sizeof magic) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path);
  const auto version = detail::read_pod<std::uint32_t>(in, path);
  if (version != detail::kCheckpointVersion)
    throw std::runtime_error("checkpoint: unsupported format version " +
                             std::to_string(version) + " in " + path);
  const auto scalar = detail::read_pod<std::uint32_t>(in, path);
  if (scalar != sizeof(T))
    throw std::runtime_error("checkpoint: precision mismatch, file has " +
                             std::to_string(scalar * 8) + "-bit scalars");
  const auto count = detail::read_pod<std::uint64_t>(in, path);
  if (count != params.size())
    throw std::runtime_error("checkpoint: file has " + std::to_string(count) +
                             " parameters, model expects " + std::to_string(params.size()));
  for (auto& [name, p] : params) {
    const auto name_len = detail::read_pod<std::uint32_t>(in, path);
    std::string file_name(name_len, '\0');
    in.read(file_name.data(), name_len);
    if (!in || file_name != name)
      throw std::runtime_error("checkpoint: expected parameter '" + name + "', file has '" +
                               file_name + "'");
    const auto ndim = detail::read_pod<std::uint32_t>(in, path);
    Shape shape(ndim);
    for (auto& d : shape)
      d = static_cast<Dim>(detail::read_pod<std::uint64_t>(in, path));
    if (shape != p.shape())
      throw std::runtime_error("checkpoint: shape mismatch for '" + name + "': file " +
                               shape_str(shape) + ", model " + shape_str(p.shape()));
    in.read(reinterpret_cast<char*>(p.data()),
            static_cast<std::streamsize>(p.numel() * static_cast<Dim>(sizeof(T))));
    if (!in) throw std::runtime_error("checkpoint: truncated file " + path);
  }
}

}  // namespace seq2label
