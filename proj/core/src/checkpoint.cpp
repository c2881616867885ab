#include "spooftrace/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace spooftrace {

namespace {

constexpr char kMagic[4] = {'S', 'T', 'A', 'R'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("tensor archive: truncated file");
  return v;
}

template <typename S>
void write_tensor(std::ostream& out, const Tensor<S>& t, std::uint8_t dtype) {
  write_pod(out, dtype);
  write_pod(out, static_cast<std::uint8_t>(t.rank()));
  for (int i = 0; i < t.rank(); ++i) write_pod(out, static_cast<std::uint32_t>(t.dim(i)));
  out.write(reinterpret_cast<const char*>(t.data()),
            static_cast<std::streamsize>(t.size() * sizeof(S)));
}

template <typename S>
Tensor<S> read_tensor(std::istream& in, std::uint8_t rank) {
  std::vector<int> dims(rank);
  for (auto& d : dims) d = static_cast<int>(read_pod<std::uint32_t>(in));
  Tensor<S> t(dims);
  in.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(S)));
  if (!in) throw std::runtime_error("tensor archive: truncated tensor data");
  return t;
}

}  // namespace

void TensorArchive::insert(const std::string& name, Entry e) {
  auto [it, fresh] = index_.insert_or_assign(name, std::move(e));
  (void)it;
  if (fresh) order_.push_back(name);
}

const Tensor<float>& TensorArchive::get_f32(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("tensor archive: missing entry " + name);
  return std::get<Tensor<float>>(it->second);
}

const Tensor<double>& TensorArchive::get_f64(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("tensor archive: missing entry " + name);
  return std::get<Tensor<double>>(it->second);
}

void TensorArchive::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write tensor archive: " + path);
  out.write(kMagic, 4);
  write_pod(out, kVersion);
  write_pod(out, static_cast<std::uint32_t>(meta.size()));
  out.write(meta.data(), static_cast<std::streamsize>(meta.size()));
  write_pod(out, static_cast<std::uint32_t>(order_.size()));
  for (const auto& name : order_) {
    write_pod(out, static_cast<std::uint16_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    const Entry& e = index_.at(name);
    if (std::holds_alternative<Tensor<float>>(e))
      write_tensor(out, std::get<Tensor<float>>(e), 0);
    else
      write_tensor(out, std::get<Tensor<double>>(e), 1);
  }
  if (!out) throw std::runtime_error("write failure on tensor archive: " + path);
}

TensorArchive TensorArchive::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open tensor archive: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("not a tensor archive: " + path);
  const auto version = read_pod<std::uint32_t>(in);
  if (version != kVersion)
    throw std::runtime_error("unsupported tensor archive version in " + path);
  TensorArchive ar;
  const auto meta_len = read_pod<std::uint32_t>(in);
  ar.meta.resize(meta_len);
  in.read(ar.meta.data(), meta_len);
  const auto count = read_pod<std::uint32_t>(in);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = read_pod<std::uint16_t>(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const auto dtype = read_pod<std::uint8_t>(in);
    const auto rank = read_pod<std::uint8_t>(in);
    if (dtype == 0)
      ar.insert(name, Entry(read_tensor<float>(in, rank)));
    else if (dtype == 1)
      ar.insert(name, Entry(read_tensor<double>(in, rank)));
    else
      throw std::runtime_error("tensor archive: unknown dtype in " + path);
  }
  return ar;
}

}  // namespace spooftrace
