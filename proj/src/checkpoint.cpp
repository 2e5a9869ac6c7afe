#include <bit>
#include <cstring>
#include <fstream>

#include "feclab/config.hpp"
#include "feclab/pipeline.hpp"

// Checkpoint container, little-endian throughout:
//   magic "CMU1"
//   u32   format version
//   u32   config text length, then that many UTF-8 bytes (key = value lines:
//         the train config plus grid.side, checkpoint.step and
//         checkpoint.param_count)
//   u32   tensor count
//   per tensor: u32 name length + name bytes, u32 rank, i64 dims[rank],
//               f32 values (row-major)
// Model parameters are named "param/<layer>", Adam moments "adam.m/<layer>"
// and "adam.v/<layer>".

static_assert(std::endian::native == std::endian::little,
              "checkpoint writer assumes a little-endian host");

namespace feclab {

namespace {

constexpr char kMagic[4] = {'C', 'M', 'U', '1'};

template <typename T>
void write_pod(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <typename T>
T read_pod(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!is) throw CheckpointError("truncated checkpoint");
  return v;
}

void write_string(std::ostream& os, const std::string& s) {
  write_pod<uint32_t>(os, static_cast<uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& is) {
  const uint32_t len = read_pod<uint32_t>(is);
  if (len > (64u << 20)) throw CheckpointError("corrupt checkpoint: oversized string");
  std::string s(len, '\0');
  is.read(s.data(), len);
  if (!is) throw CheckpointError("truncated checkpoint");
  return s;
}

void write_tensor(std::ostream& os, const NamedTensorF& t) {
  write_string(os, t.name);
  write_pod<uint32_t>(os, static_cast<uint32_t>(t.dims.size()));
  for (int64_t d : t.dims) write_pod<int64_t>(os, d);
  os.write(reinterpret_cast<const char*>(t.data.data()),
           static_cast<std::streamsize>(t.data.size() * sizeof(float)));
}

NamedTensorF read_tensor(std::istream& is) {
  NamedTensorF t;
  t.name = read_string(is);
  const uint32_t rank = read_pod<uint32_t>(is);
  if (rank > 8) throw CheckpointError("corrupt checkpoint: tensor rank too large");
  int64_t count = 1;
  for (uint32_t i = 0; i < rank; ++i) {
    const int64_t d = read_pod<int64_t>(is);
    if (d < 1 || d > (1 << 30)) throw CheckpointError("corrupt checkpoint: bad tensor dim");
    t.dims.push_back(d);
    count *= d;
  }
  if (count > (1ll << 31)) throw CheckpointError("corrupt checkpoint: tensor too large");
  t.data.resize(static_cast<size_t>(count));
  is.read(reinterpret_cast<char*>(t.data.data()),
          static_cast<std::streamsize>(t.data.size() * sizeof(float)));
  if (!is) throw CheckpointError("truncated checkpoint");
  return t;
}

}  // namespace

int64_t Checkpoint::param_count() const {
  int64_t total = 0;
  for (const auto& t : params) total += static_cast<int64_t>(t.data.size());
  return total;
}

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw CheckpointError("cannot open '" + path + "' for writing");

  std::string text = serialize_train_config(ck.config);
  text += "grid.side = " + std::to_string(ck.grid.side) + "\n";
  text += "checkpoint.step = " + std::to_string(ck.step) + "\n";
  text += "checkpoint.param_count = " + std::to_string(ck.param_count()) + "\n";

  os.write(kMagic, 4);
  write_pod<uint32_t>(os, Checkpoint::kFormatVersion);
  write_string(os, text);
  write_pod<uint32_t>(os,
                      static_cast<uint32_t>(ck.params.size() + ck.adam_m.size() + ck.adam_v.size()));
  for (const auto& t : ck.params) {
    NamedTensorF named = t;
    named.name = "param/" + t.name;
    write_tensor(os, named);
  }
  for (const auto& t : ck.adam_m) {
    NamedTensorF named = t;
    named.name = "adam.m/" + t.name;
    write_tensor(os, named);
  }
  for (const auto& t : ck.adam_v) {
    NamedTensorF named = t;
    named.name = "adam.v/" + t.name;
    write_tensor(os, named);
  }
  if (!os) throw CheckpointError("write failed for '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointError("cannot open '" + path + "'");

  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) throw CheckpointError("bad magic");
  const uint32_t version = read_pod<uint32_t>(is);
  if (version != Checkpoint::kFormatVersion)
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));

  Checkpoint ck;
  KvConfig kv = KvConfig::from_string(read_string(is), path);
  ck.config = train_config_from(kv);
  ck.grid = ck.config.grid();
  const int64_t stored_side = kv.get_int("grid.side");
  if (stored_side != ck.grid.side)
    throw CheckpointError("corrupt checkpoint: grid.side disagrees with config");
  ck.step = kv.get_int("checkpoint.step");
  const int64_t stored_count = kv.get_int("checkpoint.param_count");
  kv.require_all_consumed();

  const uint32_t tensors = read_pod<uint32_t>(is);
  for (uint32_t i = 0; i < tensors; ++i) {
    NamedTensorF t = read_tensor(is);
    if (t.name.starts_with("param/")) {
      t.name = t.name.substr(6);
      ck.params.push_back(std::move(t));
    } else if (t.name.starts_with("adam.m/")) {
      t.name = t.name.substr(7);
      ck.adam_m.push_back(std::move(t));
    } else if (t.name.starts_with("adam.v/")) {
      t.name = t.name.substr(7);
      ck.adam_v.push_back(std::move(t));
    } else {
      throw CheckpointError("corrupt checkpoint: unexpected tensor '" + t.name + "'");
    }
  }
  if (ck.param_count() != stored_count)
    throw CheckpointError("corrupt checkpoint: parameter count mismatch");
  return ck;
}

}  // namespace feclab
