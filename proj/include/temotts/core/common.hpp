#pragma once

#include <atomic>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace temotts {

// Base error for all library failures.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// A required artifact (checkpoint, cache record, manifest, ...) is absent.
class MissingArtifactError : public Error {
 public:
  explicit MissingArtifactError(const std::string& path, const std::string& hint = "")
      : Error("missing artifact: " + path + (hint.empty() ? "" : " (" + hint + ")")),
        path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

namespace log {

inline std::mutex& mutex() {
  static std::mutex m;
  return m;
}

inline void emit(const char* level, const std::string& msg) {
  std::lock_guard<std::mutex> lock(mutex());
  std::fprintf(stderr, "[%s] %s\n", level, msg.c_str());
}

inline void info(const std::string& msg) { emit("info", msg); }
inline void warn(const std::string& msg) { emit("warn", msg); }
inline void error(const std::string& msg) { emit("error", msg); }

}  // namespace log

// FNV-1a 64-bit. Used for config hashes and artifact fingerprints; not cryptographic.
inline std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t seed = 0xcbf29ce484222325ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t fnv1a64(const std::string& s) { return fnv1a64(s.data(), s.size()); }

inline std::string to_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

// Fingerprint of a file's bytes. Throws MissingArtifactError if absent.
inline std::string file_fingerprint(const std::filesystem::path& path) {
  std::FILE* f = std::fopen(path.string().c_str(), "rb");
  if (!f) throw MissingArtifactError(path.string());
  std::uint64_t h = 0xcbf29ce484222325ull;
  char buf[1 << 16];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof(buf), f)) > 0) h = fnv1a64(buf, n, h);
  std::fclose(f);
  return to_hex(h);
}

// Applies fn(i) for i in [0, n) across worker threads and stores results in
// input order. fn must not touch shared mutable state.
template <typename Fn>
auto parallel_map(std::size_t n, Fn&& fn, std::size_t max_threads = 0)
    -> std::vector<decltype(fn(std::size_t{0}))> {
  using R = decltype(fn(std::size_t{0}));
  std::vector<R> out(n);
  if (n == 0) return out;
  std::size_t workers = max_threads ? max_threads : std::thread::hardware_concurrency();
  if (workers == 0) workers = 1;
  workers = std::min(workers, n);
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
    return out;
  }
  std::vector<std::thread> pool;
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) out[i] = fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

inline std::string lowercase(std::string s) {
  for (auto& c : s)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return s;
}

inline std::vector<std::string> split_whitespace(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream iss(s);
  std::string tok;
  while (iss >> tok) out.push_back(tok);
  return out;
}

}  // namespace temotts
