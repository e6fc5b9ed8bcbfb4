#include "edgepaint/nets/params.hpp"

#include <cstring>
#include <fstream>
#include <unordered_map>

namespace ep {

ag::Var NetworkParams::add(const std::string& name, Tensor init, bool trainable,
                           std::string init_desc) {
  if (has(name)) throw ConfigError("duplicate parameter name: " + name);
  Entry e;
  e.name = name;
  e.var = trainable ? ag::leaf(std::move(init)) : ag::constant(std::move(init));
  e.trainable = trainable;
  e.init_desc = std::move(init_desc);
  entries_.push_back(std::move(e));
  return entries_.back().var;
}

const ag::Var& NetworkParams::get(const std::string& name) const {
  for (const auto& e : entries_)
    if (e.name == name) return e.var;
  throw ConfigError("unknown parameter: " + name);
}

bool NetworkParams::has(const std::string& name) const {
  for (const auto& e : entries_)
    if (e.name == name) return true;
  return false;
}

NetworkParams::Entry& NetworkParams::entry(const std::string& name) {
  for (auto& e : entries_)
    if (e.name == name) return e;
  throw ConfigError("unknown parameter: " + name);
}

std::int64_t NetworkParams::value_count() const {
  std::int64_t n = 0;
  for (const auto& e : entries_) n += e.var->val.shape.size();
  return n;
}

std::vector<ag::Var> NetworkParams::trainable_vars() const {
  std::vector<ag::Var> out;
  for (const auto& e : entries_)
    if (e.trainable) out.push_back(e.var);
  return out;
}

void NetworkParams::zero_grads() {
  for (auto& e : entries_) e.var->zero_grad();
}

void NetworkParams::copy_values_from(const NetworkParams& other) {
  if (other.entries_.size() != entries_.size())
    throw CheckpointError("parameter layout mismatch");
  for (size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].name != other.entries_[i].name ||
        !(entries_[i].var->val.shape == other.entries_[i].var->val.shape))
      throw CheckpointError("parameter layout mismatch at " + entries_[i].name);
    entries_[i].var->val.v = other.entries_[i].var->val.v;
  }
}

namespace {

constexpr char kMagic[8] = {'E', 'P', 'C', 'K', 'P', 'T', '0', '1'};

void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = (v >> (8 * i)) & 0xff;
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(b[i]) << (8 * i);
  return v;
}

void put_f32(std::ostream& out, float f) {
  std::uint32_t v;
  std::memcpy(&v, &f, 4);
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = (v >> (8 * i)) & 0xff;
  out.write(reinterpret_cast<const char*>(b), 4);
}

float get_f32(const unsigned char* b) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t(b[i]) << (8 * i);
  float f;
  std::memcpy(&f, &v, 4);
  return f;
}

}  // namespace

void write_container(const Container& c, const std::string& path) {
  nlohmann::json header;
  header["meta"] = c.meta;
  auto& tensors = header["tensors"] = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& t : c.tensors) {
    tensors.push_back({{"name", t.name},
                       {"shape", {t.shape.n, t.shape.c, t.shape.h, t.shape.w}},
                       {"trainable", t.trainable},
                       {"offset", offset},
                       {"count", t.data.size()}});
    offset += t.data.size();
  }
  const std::string hdr = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint: " + path);
  out.write(kMagic, 8);
  put_u64(out, hdr.size());
  out.write(hdr.data(), std::streamsize(hdr.size()));
  for (const auto& t : c.tensors)
    for (float f : t.data) put_f32(out, f);
  if (!out) throw IoError("short write on checkpoint: " + path);
}

Container read_container(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("missing checkpoint: " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0)
    throw CheckpointError("not a checkpoint file: " + path);
  const std::uint64_t hdr_len = get_u64(in);
  std::string hdr(hdr_len, '\0');
  in.read(hdr.data(), std::streamsize(hdr_len));
  if (!in) throw CheckpointError("truncated checkpoint header: " + path);

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(hdr);
  } catch (const std::exception& e) {
    throw CheckpointError("bad checkpoint header: " + std::string(e.what()));
  }

  Container c;
  c.meta = header.value("meta", nlohmann::json::object());
  std::vector<unsigned char> payload{std::istreambuf_iterator<char>(in),
                                     std::istreambuf_iterator<char>()};
  for (const auto& jt : header["tensors"]) {
    TensorRecord t;
    t.name = jt.at("name").get<std::string>();
    const auto sh = jt.at("shape");
    t.shape = Shape{sh[0], sh[1], sh[2], sh[3]};
    t.trainable = jt.at("trainable").get<bool>();
    const auto offset = jt.at("offset").get<std::uint64_t>();
    const auto count = jt.at("count").get<std::uint64_t>();
    if ((offset + count) * 4 > payload.size())
      throw CheckpointError("truncated checkpoint payload: " + path);
    t.data.resize(count);
    for (std::uint64_t i = 0; i < count; ++i)
      t.data[i] = get_f32(payload.data() + (offset + i) * 4);
    c.tensors.push_back(std::move(t));
  }
  return c;
}

void append_records(const NetworkParams& p, const std::string& prefix,
                    std::vector<TensorRecord>& out) {
  for (const auto& e : p.entries()) {
    TensorRecord t;
    t.name = prefix + e.name;
    t.shape = e.var->val.shape;
    t.trainable = e.trainable;
    t.data.reserve(e.var->val.size());
    for (double v : e.var->val.v) t.data.push_back(float(v));
    out.push_back(std::move(t));
  }
}

void load_records(NetworkParams& p, const std::string& prefix,
                  const std::vector<TensorRecord>& records) {
  std::unordered_map<std::string, const TensorRecord*> by_name;
  for (const auto& r : records)
    if (r.name.rfind(prefix, 0) == 0) by_name[r.name.substr(prefix.size())] = &r;
  for (const auto& e : p.entries()) {
    const auto it = by_name.find(e.name);
    if (it == by_name.end())
      throw CheckpointError("checkpoint lacks tensor " + prefix + e.name);
    const TensorRecord& r = *it->second;
    if (!(r.shape == e.var->val.shape))
      throw CheckpointError("checkpoint shape mismatch for " + prefix + e.name +
                            ": " + r.shape.str() + " vs " +
                            e.var->val.shape.str());
    for (size_t i = 0; i < r.data.size(); ++i)
      e.var->val[i] = double(r.data[i]);
  }
}

}  // namespace ep
