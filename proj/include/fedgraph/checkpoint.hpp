// Copyright 2026 The fedgraph Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#ifndef FEDGRAPH_CHECKPOINT_HPP_
#define FEDGRAPH_CHECKPOINT_HPP_

// Binary snapshot of all client states plus the server's uploaded tables.
//
// Layout (host byte order):
//   char[8]  magic "FGSNAP01"
//   u32      format version
//   u32      sizeof(Scalar)
//   u64      num_users, num_items, embed_dim, round, num_layers
//   u64[num_layers] layer output widths
//   per user: u64 byte length, then u8 tier, user vector, item table,
//             and weight/bias of every layer
//   server:   u64 byte length, then uploaded tables (users x items x dim)
//             followed by the global table (items x dim)

#include <cstdint>
#include <cstring>
#include <fstream>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "fedgraph/common.hpp"
#include "fedgraph/graph.hpp"
#include "fedgraph/model.hpp"

namespace fedgraph {

inline constexpr char kSnapshotMagic[8] = {'F', 'G', 'S', 'N', 'A', 'P', '0', '1'};
inline constexpr std::uint32_t kSnapshotVersion = 1;

template <typename Scalar>
struct Snapshot {
  std::size_t round = 0;
  std::vector<ClientState<Scalar>> clients;
  ServerState<Scalar> server;
};

namespace detail {

class ByteWriter {
 public:
  template <typename T>
  void put(const T& v) {
    const auto* p = reinterpret_cast<const char*>(&v);
    bytes_.insert(bytes_.end(), p, p + sizeof(T));
  }
  template <typename T>
  void put_span(std::span<const T> v) {
    const auto* p = reinterpret_cast<const char*>(v.data());
    bytes_.insert(bytes_.end(), p, p + v.size_bytes());
  }
  const std::vector<char>& bytes() const { return bytes_; }
  void clear() { bytes_.clear(); }

 private:
  std::vector<char> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const char> bytes) : bytes_(bytes) {}
  template <typename T>
  T get() {
    T v;
    take(&v, sizeof(T));
    return v;
  }
  template <typename T>
  void get_span(std::span<T> out) {
    take(out.data(), out.size_bytes());
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void take(void* dst, std::size_t n) {
    if (pos_ + n > bytes_.size()) throw DataError("snapshot is truncated");
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }
  std::span<const char> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace detail

template <typename Scalar>
void write_snapshot(const std::string& path, std::span<const ClientState<Scalar>> clients,
                    const ServerState<Scalar>& server) {
  if (clients.empty()) throw ConfigError("snapshot needs at least one client");
  const auto& first = clients.front();
  detail::ByteWriter w;
  w.put_span(std::span<const char>(kSnapshotMagic, 8));
  w.put(kSnapshotVersion);
  w.put(static_cast<std::uint32_t>(sizeof(Scalar)));
  w.put(static_cast<std::uint64_t>(clients.size()));
  w.put(static_cast<std::uint64_t>(first.num_items()));
  w.put(static_cast<std::uint64_t>(first.embed_dim()));
  w.put(static_cast<std::uint64_t>(server.round));
  w.put(static_cast<std::uint64_t>(first.layers.size()));
  for (const auto& layer : first.layers) w.put(static_cast<std::uint64_t>(layer.outputs()));

  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write snapshot '" + tmp + "'");
    out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
    detail::ByteWriter block;
    for (const auto& c : clients) {
      block.clear();
      block.put(static_cast<std::uint8_t>(c.tier));
      block.put_span(std::span<const Scalar>(c.user_vec));
      block.put_span(c.item_table.values());
      for (const auto& layer : c.layers) {
        block.put_span(layer.weight.values());
        block.put_span(std::span<const Scalar>(layer.bias));
      }
      const auto len = static_cast<std::uint64_t>(block.bytes().size());
      out.write(reinterpret_cast<const char*>(&len), sizeof(len));
      out.write(block.bytes().data(), static_cast<std::streamsize>(len));
    }
    // Either server table may be empty (no distribution yet, or disabled).
    const std::size_t upload_count = server.uploads.num_users() * server.uploads.block_size();
    const std::uint64_t shape[2] = {server.uploads.num_users(), server.global.rows()};
    const auto len = static_cast<std::uint64_t>(sizeof(shape) + (upload_count + server.global.size()) * sizeof(Scalar));
    out.write(reinterpret_cast<const char*>(&len), sizeof(len));
    out.write(reinterpret_cast<const char*>(shape), sizeof(shape));
    out.write(reinterpret_cast<const char*>(server.uploads.data()),
              static_cast<std::streamsize>(upload_count * sizeof(Scalar)));
    out.write(reinterpret_cast<const char*>(server.global.data()),
              static_cast<std::streamsize>(server.global.size() * sizeof(Scalar)));
    if (!out) throw DataError("failed writing snapshot '" + tmp + "'");
  }
  std::filesystem::rename(tmp, path);
}

template <typename Scalar>
Snapshot<Scalar> read_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open snapshot '" + path + "'");
  const std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  detail::ByteReader r(bytes);
  char magic[8];
  r.get_span(std::span<char>(magic, 8));
  if (std::memcmp(magic, kSnapshotMagic, 8) != 0) throw DataError("'" + path + "' is not a snapshot");
  if (r.get<std::uint32_t>() != kSnapshotVersion) throw DataError("unsupported snapshot version");
  if (r.get<std::uint32_t>() != sizeof(Scalar)) throw DataError("snapshot scalar width mismatch");
  const auto n = r.get<std::uint64_t>();
  const auto items = r.get<std::uint64_t>();
  const auto dim = r.get<std::uint64_t>();
  Snapshot<Scalar> snap;
  snap.round = r.get<std::uint64_t>();
  std::vector<std::size_t> widths(r.get<std::uint64_t>());
  for (auto& w : widths) w = r.get<std::uint64_t>();

  for (std::uint64_t u = 0; u < n; ++u) {
    const auto len = r.get<std::uint64_t>();
    (void)len;
    ClientState<Scalar> c;
    c.tier = static_cast<Tier>(r.get<std::uint8_t>());
    c.user_vec.resize(dim);
    r.get_span(std::span<Scalar>(c.user_vec));
    c.item_table = Matrix<Scalar>(items, dim);
    r.get_span(c.item_table.values());
    std::size_t fan_in = 2 * dim;
    for (std::size_t width : widths) {
      DenseLayer<Scalar> layer{Matrix<Scalar>(width, fan_in), AlignedVector<Scalar>(width)};
      r.get_span(layer.weight.values());
      r.get_span(std::span<Scalar>(layer.bias));
      c.layers.push_back(std::move(layer));
      fan_in = width;
    }
    snap.clients.push_back(std::move(c));
  }
  r.get<std::uint64_t>();
  snap.server.round = snap.round;
  const auto upload_users = r.get<std::uint64_t>();
  const auto global_rows = r.get<std::uint64_t>();
  if ((upload_users != 0 && upload_users != n) || (global_rows != 0 && global_rows != items)) {
    throw DataError("snapshot server tables have inconsistent shapes");
  }
  if (upload_users > 0) {
    snap.server.uploads = EmbeddingStack<Scalar>(n, items, dim);
    r.get_span(std::span<Scalar>(snap.server.uploads.data(), n * items * dim));
  }
  if (global_rows > 0) {
    snap.server.global = Matrix<Scalar>(items, dim);
    r.get_span(snap.server.global.values());
  }
  if (!r.done()) throw DataError("snapshot has trailing bytes");
  return snap;
}

}  // namespace fedgraph

#endif  // FEDGRAPH_CHECKPOINT_HPP_
