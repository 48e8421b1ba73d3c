// Copyright 2026 The SRS Authors
// SPDX-License-Identifier: Apache-2.0

#include "srs/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace srs {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr std::size_t kMagicSize = 8;
constexpr std::size_t kChecksumSize = 8;

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_bytes(std::vector<std::uint8_t>& out, const void* data, std::size_t n) {
  const auto* p = static_cast<const std::uint8_t*>(data);
  out.insert(out.end(), p, p + n);
}

class Reader {
 public:
  Reader(const std::vector<std::uint8_t>& bytes, std::size_t end) : bytes_(bytes), end_(end) {}

  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  void bytes(void* dst, std::size_t n) {
    need(n);
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }
  bool done() const { return pos_ == end_; }

 private:
  void need(std::size_t n) const {
    require(n <= end_ - pos_, ErrorKind::kChecksumMismatch, "checkpoint payload ends mid-record");
  }
  const std::vector<std::uint8_t>& bytes_;
  std::size_t end_;
  std::size_t pos_ = kMagicSize;
};

}  // namespace

const Tensor* Checkpoint::find(const std::string& name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return &t;
  }
  return nullptr;
}

std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t size) {
  std::uint64_t h = 1469598103934665603ULL;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= data[i];
    h *= 1099511628211ULL;
  }
  return h;
}

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt) {
  std::vector<std::uint8_t> out;
  put_bytes(out, kCheckpointMagic, kMagicSize);
  put_u64(out, ckpt.config.size());
  put_bytes(out, ckpt.config.data(), ckpt.config.size());
  for (const auto& [name, t] : ckpt.tensors) {
    require(t.defined(), ErrorKind::kInvalidArgument, "checkpoint tensor " + name + " is undefined");
    put_u64(out, name.size());
    put_bytes(out, name.data(), name.size());
    put_u64(out, t.rank());
    for (auto d : t.shape()) put_u64(out, static_cast<std::uint64_t>(d));
    put_bytes(out, t.ptr(), sizeof(float) * static_cast<std::size_t>(t.numel()));
  }
  put_u64(out, fnv1a64(out.data(), out.size()));
  return out;
}

Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() >= kMagicSize && std::memcmp(bytes.data(), kCheckpointMagic, kMagicSize - 1) == 0 &&
      bytes[kMagicSize - 1] != static_cast<std::uint8_t>(kCheckpointMagic[kMagicSize - 1])) {
    fail(ErrorKind::kVersionMismatch, std::string("checkpoint container version '") +
                                          static_cast<char>(bytes[kMagicSize - 1]) + "' is not supported");
  }
  require(bytes.size() >= kMagicSize + 8 + kChecksumSize, ErrorKind::kChecksumMismatch, "checkpoint is truncated");
  require(std::memcmp(bytes.data(), kCheckpointMagic, kMagicSize) == 0, ErrorKind::kIoError,
          "not a checkpoint file (bad magic)");
  const std::size_t body = bytes.size() - kChecksumSize;
  std::uint64_t stored = 0;
  for (int i = 0; i < 8; ++i) stored |= static_cast<std::uint64_t>(bytes[body + i]) << (8 * i);
  require(stored == fnv1a64(bytes.data(), body), ErrorKind::kChecksumMismatch,
          "checkpoint checksum does not match its contents");

  Reader r(bytes, body);
  Checkpoint ckpt;
  const std::uint64_t len = r.u64();
  require(len <= body, ErrorKind::kChecksumMismatch, "config length exceeds the file");
  ckpt.config.resize(len);
  r.bytes(ckpt.config.data(), len);
  while (!r.done()) {
    const std::uint64_t name_len = r.u64();
    require(name_len <= body, ErrorKind::kChecksumMismatch, "tensor name length exceeds the file");
    std::string name(name_len, '\0');
    r.bytes(name.data(), name_len);
    const std::uint64_t rank = r.u64();
    require(rank >= 1 && rank <= 8, ErrorKind::kChecksumMismatch, "implausible tensor rank in checkpoint");
    Shape shape(rank);
    std::uint64_t numel = 1;
    for (auto& d : shape) {
      const std::uint64_t v = r.u64();
      require(v >= 1 && v <= body, ErrorKind::kChecksumMismatch, "implausible tensor extent in checkpoint");
      numel *= v;
      require(numel <= body / sizeof(float), ErrorKind::kChecksumMismatch, "tensor payload exceeds the file");
      d = static_cast<std::int64_t>(v);
    }
    Tensor t(shape);
    r.bytes(t.ptr(), sizeof(float) * static_cast<std::size_t>(t.numel()));
    ckpt.tensors.emplace_back(std::move(name), std::move(t));
  }
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  const auto bytes = serialize_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), ErrorKind::kIoError, "cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  require(out.good(), ErrorKind::kIoError, "failed writing " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::kIoError, "cannot open checkpoint " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace srs
