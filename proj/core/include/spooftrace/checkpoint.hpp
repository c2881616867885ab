#pragma once

#include <map>
#include <string>
#include <variant>
#include <vector>

#include "spooftrace/tensor.hpp"

namespace spooftrace {

/// Single-file archive of named tensors plus a JSON metadata blob. Used for
/// model checkpoints and per-sample ground-truth trace bundles. The format
/// ("STAR", version 1) is documented in docs/file_formats.md; floats round-trip
/// bit-exactly.
class TensorArchive {
 public:
  using Entry = std::variant<Tensor<float>, Tensor<double>>;

  std::string meta = "{}";

  void put(const std::string& name, Tensor<float> t) { insert(name, Entry(std::move(t))); }
  void put(const std::string& name, Tensor<double> t) { insert(name, Entry(std::move(t))); }

  bool has(const std::string& name) const { return index_.count(name) > 0; }
  const std::vector<std::string>& names() const { return order_; }

  const Tensor<float>& get_f32(const std::string& name) const;
  const Tensor<double>& get_f64(const std::string& name) const;

  void save(const std::string& path) const;
  static TensorArchive load(const std::string& path);

 private:
  void insert(const std::string& name, Entry e);

  std::vector<std::string> order_;
  std::map<std::string, Entry> index_;
};

}  // namespace spooftrace
