#pragma once

// Named-tensor container file. Layout (little endian):
//   "TMTS"  u32 format_version
//   u64 meta_len, meta bytes (JSON, UTF-8)
//   u64 tensor_count
//   per tensor: u64 name_len, name, u64 rank, u64 dims[rank], f64 data[numel]
// Used for checkpoints and feature-cache records; byte-identical for identical
// contents, so file fingerprints are stable.

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "temotts/core/nn.hpp"

namespace temotts {

inline constexpr std::uint32_t kTensorStoreVersion = 1;

struct TensorStore {
  nlohmann::json meta;
  std::vector<std::pair<std::string, nn::Tensor>> tensors;

  void add(const std::string& name, const nn::Tensor& t) { tensors.emplace_back(name, t); }

  const nn::Tensor* find(const std::string& name) const {
    for (const auto& [n, t] : tensors)
      if (n == name) return &t;
    return nullptr;
  }
};

namespace detail {

template <typename T>
void write_pod(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw Error("tensor store: unexpected end of file");
  return v;
}

}  // namespace detail

inline void save_tensor_store(const std::filesystem::path& path, const TensorStore& store) {
  std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot open for writing: " + path.string());
  os.write("TMTS", 4);
  detail::write_pod<std::uint32_t>(os, kTensorStoreVersion);
  const std::string meta = store.meta.dump();
  detail::write_pod<std::uint64_t>(os, meta.size());
  os.write(meta.data(), static_cast<std::streamsize>(meta.size()));
  detail::write_pod<std::uint64_t>(os, store.tensors.size());
  for (const auto& [name, t] : store.tensors) {
    detail::write_pod<std::uint64_t>(os, name.size());
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    detail::write_pod<std::uint64_t>(os, t.rank());
    for (std::size_t i = 0; i < t.rank(); ++i)
      detail::write_pod<std::uint64_t>(os, t.shape()[i]);
    os.write(reinterpret_cast<const char*>(t.data().data()),
             static_cast<std::streamsize>(t.numel() * sizeof(double)));
  }
  if (!os) throw Error("write failed: " + path.string());
}

inline TensorStore load_tensor_store(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw MissingArtifactError(path.string());
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "TMTS", 4) != 0)
    throw Error("not a tensor store file: " + path.string());
  const auto version = detail::read_pod<std::uint32_t>(is);
  if (version != kTensorStoreVersion)
    throw Error("unsupported tensor store version " + std::to_string(version) + " in " +
                path.string());
  TensorStore store;
  const auto meta_len = detail::read_pod<std::uint64_t>(is);
  std::string meta(meta_len, '\0');
  is.read(meta.data(), static_cast<std::streamsize>(meta_len));
  if (!is) throw Error("tensor store: truncated metadata");
  store.meta = nlohmann::json::parse(meta);
  const auto count = detail::read_pod<std::uint64_t>(is);
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto name_len = detail::read_pod<std::uint64_t>(is);
    std::string name(name_len, '\0');
    is.read(name.data(), static_cast<std::streamsize>(name_len));
    const auto rank = detail::read_pod<std::uint64_t>(is);
    nn::Shape shape(rank);
    for (auto& d : shape) d = detail::read_pod<std::uint64_t>(is);
    std::vector<double> data(nn::shape_numel(shape));
    is.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(double)));
    if (!is) throw Error("tensor store: truncated tensor " + name);
    store.add(name, nn::Tensor::make(std::move(shape), std::move(data)));
  }
  return store;
}

// Copies stored values into an existing parameter map; every parameter must be
// present with a matching shape.
inline void load_params(const TensorStore& store, nn::ParamMap& params) {
  for (auto& [name, t] : params.items) {
    const nn::Tensor* src = store.find(name);
    if (!src) throw Error("checkpoint missing parameter: " + name);
    if (src->shape() != t.shape())
      throw Error("checkpoint shape mismatch for " + name + ": " + nn::shape_str(src->shape()) +
                  " vs " + nn::shape_str(t.shape()));
    t.data() = src->data();
  }
}

inline void save_params(TensorStore& store, const nn::ParamMap& params) {
  for (const auto& [name, t] : params.items) store.add(name, t);
}

}  // namespace temotts
