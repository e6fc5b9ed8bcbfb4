#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "edgepaint/core/autodiff.hpp"
#include "edgepaint/core/errors.hpp"

namespace ep {

// Ordered, named collection of weight tensors for one network. Names are
// unique and shapes are fixed after registration. Non-trainable entries are
// persistent buffers (e.g. spectral-norm power-iteration vectors).
class NetworkParams {
 public:
  struct Entry {
    std::string name;
    ag::Var var;
    bool trainable = true;
    std::string init_desc;
  };

  ag::Var add(const std::string& name, Tensor init, bool trainable = true,
              std::string init_desc = "");
  const ag::Var& get(const std::string& name) const;
  bool has(const std::string& name) const;
  Entry& entry(const std::string& name);

  const std::vector<Entry>& entries() const { return entries_; }
  size_t count() const { return entries_.size(); }
  std::int64_t value_count() const;

  std::vector<ag::Var> trainable_vars() const;
  void zero_grads();

  // Copies values from another instance with identical layout.
  void copy_values_from(const NetworkParams& other);

 private:
  std::vector<Entry> entries_;
};

// Checkpoint container: a json header plus raw little-endian float32 data.
// Round-trips values bit-exactly at float32 precision.
struct TensorRecord {
  std::string name;
  Shape shape;
  bool trainable = true;
  std::vector<float> data;
};

struct Container {
  nlohmann::json meta;
  std::vector<TensorRecord> tensors;
};

void write_container(const Container& c, const std::string& path);
Container read_container(const std::string& path);

// Flattens params into records under `prefix` ("g1/" etc.).
void append_records(const NetworkParams& p, const std::string& prefix,
                    std::vector<TensorRecord>& out);
// Loads every record whose name starts with `prefix` into matching entries.
// Throws CheckpointError on missing names or shape mismatches.
void load_records(NetworkParams& p, const std::string& prefix,
                  const std::vector<TensorRecord>& records);

}  // namespace ep
