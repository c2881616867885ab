#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace spooftrace {

/// Dense row-major tensor, rank 1..4. Images and feature maps use
/// channel-last layout: [H,W,C] for a single image, [B,H,W,C] batched.
template <typename T>
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<int> dims) : dims_(std::move(dims)) {
    data_.assign(count(dims_), T(0));
  }

  Tensor(std::initializer_list<int> dims) : Tensor(std::vector<int>(dims)) {}

  static Tensor zeros(std::vector<int> dims) { return Tensor(std::move(dims)); }

  static Tensor full(std::vector<int> dims, T v) {
    Tensor t(std::move(dims));
    std::fill(t.data_.begin(), t.data_.end(), v);
    return t;
  }

  static Tensor ones(std::vector<int> dims) { return full(std::move(dims), T(1)); }

  static Tensor scalar(T v) { return full({1}, v); }

  const std::vector<int>& dims() const { return dims_; }
  int rank() const { return static_cast<int>(dims_.size()); }
  int dim(int i) const { return dims_.at(static_cast<size_t>(i)); }
  std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  T& operator[](std::int64_t i) { return data_[static_cast<size_t>(i)]; }
  const T& operator[](std::int64_t i) const { return data_[static_cast<size_t>(i)]; }

  /// Element access for [H,W,C] tensors.
  T& at(int y, int x, int c) {
    return data_[static_cast<size_t>((static_cast<std::int64_t>(y) * dims_[1] + x) * dims_[2] + c)];
  }
  const T& at(int y, int x, int c) const {
    return data_[static_cast<size_t>((static_cast<std::int64_t>(y) * dims_[1] + x) * dims_[2] + c)];
  }

  bool same_dims(const Tensor& o) const { return dims_ == o.dims_; }

  static std::int64_t count(const std::vector<int>& dims) {
    std::int64_t n = 1;
    for (int d : dims) {
      if (d < 0) throw std::invalid_argument("tensor: negative dimension");
      n *= d;
    }
    return n;
  }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out(dims_);
    for (std::int64_t i = 0; i < size(); ++i) out[i] = static_cast<U>(data_[static_cast<size_t>(i)]);
    return out;
  }

 private:
  std::vector<int> dims_;
  std::vector<T> data_;
};

/// View of a tensor's dims as [B,H,W,C]; rank-3 is a single image, rank-2 a
/// single-channel map.
struct Shape4 {
  int b = 1, h = 1, w = 1, c = 1;
  std::int64_t plane() const { return static_cast<std::int64_t>(h) * w * c; }
};

template <typename T>
inline Shape4 as4(const Tensor<T>& t) {
  const auto& d = t.dims();
  switch (d.size()) {
    case 2: return {1, d[0], d[1], 1};
    case 3: return {1, d[0], d[1], d[2]};
    case 4: return {d[0], d[1], d[2], d[3]};
    default: throw std::invalid_argument("tensor: expected rank 2..4");
  }
}

template <typename T>
inline void check_same_dims(const Tensor<T>& a, const Tensor<T>& b, const char* what) {
  if (!a.same_dims(b)) throw std::invalid_argument(std::string(what) + ": shape mismatch");
}

// ---- elementwise helpers on plain tensors ----

template <typename T, typename F>
Tensor<T> map(const Tensor<T>& a, F f) {
  Tensor<T> out(a.dims());
  for (std::int64_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
  return out;
}

template <typename T, typename F>
Tensor<T> zip(const Tensor<T>& a, const Tensor<T>& b, F f, const char* what = "zip") {
  check_same_dims(a, b, what);
  Tensor<T> out(a.dims());
  for (std::int64_t i = 0; i < a.size(); ++i) out[i] = f(a[i], b[i]);
  return out;
}

template <typename T>
Tensor<T> operator+(const Tensor<T>& a, const Tensor<T>& b) {
  return zip(a, b, [](T x, T y) { return x + y; }, "add");
}

template <typename T>
Tensor<T> operator-(const Tensor<T>& a, const Tensor<T>& b) {
  return zip(a, b, [](T x, T y) { return x - y; }, "sub");
}

template <typename T>
Tensor<T> operator*(const Tensor<T>& a, std::type_identity_t<T> s) {
  return map(a, [s](T x) { return x * s; });
}

template <typename T>
Tensor<T> operator*(std::type_identity_t<T> s, const Tensor<T>& a) { return a * s; }

/// Elementwise product. If one operand has a single channel and the other k
/// channels (same B,H,W), the single channel broadcasts; used for masks.
template <typename T>
Tensor<T> hadamard(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.same_dims(b)) return zip(a, b, [](T x, T y) { return x * y; }, "hadamard");
  Shape4 sa = as4(a), sb = as4(b);
  const bool a_mask = sa.c == 1 && sb.c > 1;
  const bool b_mask = sb.c == 1 && sa.c > 1;
  if (!(a_mask || b_mask) || sa.b != sb.b || sa.h != sb.h || sa.w != sb.w)
    throw std::invalid_argument("hadamard: incompatible shapes");
  const Tensor<T>& full = a_mask ? b : a;
  const Tensor<T>& mask = a_mask ? a : b;
  const int c = a_mask ? sb.c : sa.c;
  Tensor<T> out(full.dims());
  const std::int64_t pixels = full.size() / c;
  for (std::int64_t p = 0; p < pixels; ++p) {
    const T m = mask[p];
    for (int k = 0; k < c; ++k) out[p * c + k] = full[p * c + k] * m;
  }
  return out;
}

/// Stacks same-shaped [H,W,C] or [B,H,W,C] tensors along the batch axis.
template <typename T>
Tensor<T> stack_batch(const std::vector<const Tensor<T>*>& parts) {
  if (parts.empty()) throw std::invalid_argument("stack_batch: no inputs");
  const Shape4 s0 = as4(*parts[0]);
  int btot = 0;
  for (const auto* p : parts) {
    const Shape4 s = as4(*p);
    if (s.h != s0.h || s.w != s0.w || s.c != s0.c)
      throw std::invalid_argument("stack_batch: shape mismatch");
    btot += s.b;
  }
  Tensor<T> out({btot, s0.h, s0.w, s0.c});
  std::int64_t off = 0;
  for (const auto* p : parts) {
    std::copy(p->data(), p->data() + p->size(), out.data() + off);
    off += p->size();
  }
  return out;
}

/// Rows [b0, b1) of a batched tensor.
template <typename T>
Tensor<T> slice_batch(const Tensor<T>& t, int b0, int b1) {
  const Shape4 s = as4(t);
  if (t.rank() != 4 || b0 < 0 || b1 > s.b || b0 >= b1)
    throw std::invalid_argument("slice_batch: bad range");
  Tensor<T> out({b1 - b0, s.h, s.w, s.c});
  std::copy(t.data() + b0 * s.plane(), t.data() + b1 * s.plane(), out.data());
  return out;
}

template <typename T>
T max_abs_diff(const Tensor<T>& a, const Tensor<T>& b) {
  check_same_dims(a, b, "max_abs_diff");
  T m = 0;
  for (std::int64_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

template <typename T>
T sum_all(const Tensor<T>& a) {
  T s = 0;
  for (std::int64_t i = 0; i < a.size(); ++i) s += a[i];
  return s;
}

template <typename T>
T mean_all(const Tensor<T>& a) {
  return a.size() ? sum_all(a) / static_cast<T>(a.size()) : T(0);
}

template <typename T>
bool all_finite(const Tensor<T>& a) {
  for (std::int64_t i = 0; i < a.size(); ++i)
    if (!std::isfinite(a[i])) return false;
  return true;
}

template <typename T>
Tensor<T> clamp01(const Tensor<T>& a) {
  return map(a, [](T x) { return std::min(T(1), std::max(T(0), x)); });
}

}  // namespace spooftrace
