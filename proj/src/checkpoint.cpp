#include "elp/checkpoint.hpp"

#include <array>
#include <cstring>
#include <fstream>

#include "elp/mat.hpp"

namespace elp::checkpoint {

namespace {

constexpr char kMagic[8] = {'E', 'L', 'P', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kDigestLen = 16;  // fnv1a hex

void put_u32(std::ostream& out, std::uint32_t v) {
  std::array<char, 4> b;
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b.data(), 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  std::array<char, 8> b;
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b.data(), 8);
}

std::uint32_t get_u32(std::istream& in) {
  std::array<unsigned char, 4> b;
  in.read(reinterpret_cast<char*>(b.data()), 4);
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

std::uint64_t get_u64(std::istream& in) {
  std::array<unsigned char, 8> b;
  in.read(reinterpret_cast<char*>(b.data()), 8);
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

}  // namespace

void save(const std::string& path, const std::string& model_digest,
          const nets::ParamStore& params) {
  require(model_digest.size() == kDigestLen, "checkpoint: digest must be 16 hex chars");
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "checkpoint: cannot write " + path);
  out.write(kMagic, sizeof(kMagic));
  put_u32(out, kVersion);
  out.write(model_digest.data(), kDigestLen);
  put_u64(out, params.total_count());
  for (const auto& e : params.entries()) {
    for (double v : e.tensor.values()) {
      std::uint64_t bits;
      std::memcpy(&bits, &v, 8);
      put_u64(out, bits);
    }
  }
  require(out.good(), "checkpoint: write failed for " + path);
}

void load(const std::string& path, const std::string& expected_digest,
          nets::ParamStore& params) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "checkpoint: missing file " + path);
  char magic[8];
  in.read(magic, 8);
  require(in.good() && std::memcmp(magic, kMagic, 8) == 0,
          "checkpoint: bad magic in " + path);
  std::uint32_t version = get_u32(in);
  require(version == kVersion,
          "checkpoint: unsupported format version " + std::to_string(version));
  std::string digest(kDigestLen, '\0');
  in.read(digest.data(), kDigestLen);
  require(digest == expected_digest,
          "checkpoint: config digest mismatch (file " + digest + ", expected " +
              expected_digest + ")");
  std::uint64_t count = get_u64(in);
  require(count == params.total_count(),
          "checkpoint: parameter count mismatch (file " + std::to_string(count) + ", model " +
              std::to_string(params.total_count()) + ")");
  for (const auto& e : params.entries()) {
    nets::ParamStore::Entry entry = e;  // handle copy shares the storage
    auto& vals = entry.tensor.mutable_values();
    for (double& v : vals) {
      std::uint64_t bits = get_u64(in);
      std::memcpy(&v, &bits, 8);
    }
  }
  require(in.good(), "checkpoint: truncated file " + path);
}

}  // namespace elp::checkpoint
