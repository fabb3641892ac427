#pragma once

// Dense row-major tensors with reverse-mode automatic differentiation.
//
// A Graph records every primitive applied while it is active on the current
// thread. Graph::backward walks the tape in reverse, accumulating gradients
// into every requires_grad tensor reachable from the loss, then frees the
// tape. One backward per recording; recording or re-running backward on a
// spent graph throws. With no graph active, primitives are plain forward
// evaluation (inference and finite-difference probes).
//
// Shapes must match exactly except for the single bias-add broadcast
// ([m,n] + [n]). Forward evaluation is sequential and deterministic:
// identical inputs give bit-identical outputs.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "seq2label/common.hpp"

namespace seq2label {

using Shape = std::vector<Dim>;

inline std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) os << ',';
    os << s[i];
  }
  os << ']';
  return os.str();
}

inline Dim shape_numel(const Shape& s) {
  Dim n = 1;
  for (Dim d : s) n *= d;
  return n;
}

[[noreturn]] inline void shape_error(const std::string& op, const Shape& a,
                                     const Shape& b) {
  throw std::invalid_argument(op + ": incompatible shapes " + shape_str(a) +
                              " and " + shape_str(b));
}

template <typename T>
class Graph;

template <typename T>
struct TensorImpl {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;  // allocated on demand during backward
  bool requires_grad = false;
  std::uint64_t origin = 0;  // id of the graph whose op produced this tensor
};

template <typename T>
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(Shape shape, T fill = T(0))
      : impl_(std::make_shared<TensorImpl<T>>()) {
    validate_shape(shape);
    impl_->shape = std::move(shape);
    impl_->data.assign(static_cast<std::size_t>(shape_numel(impl_->shape)), fill);
  }

  static Tensor from_data(Shape shape, std::vector<T> values) {
    validate_shape(shape);
    if (shape_numel(shape) != static_cast<Dim>(values.size()))
      throw std::invalid_argument("tensor: " + shape_str(shape) + " needs " +
                                  std::to_string(shape_numel(shape)) +
                                  " values, got " + std::to_string(values.size()));
    Tensor t;
    t.impl_ = std::make_shared<TensorImpl<T>>();
    t.impl_->shape = std::move(shape);
    t.impl_->data = std::move(values);
    return t;
  }

  bool valid() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  Dim rank() const { return static_cast<Dim>(impl_->shape.size()); }
  Dim dim(std::size_t i) const { return impl_->shape[i]; }
  Dim numel() const { return static_cast<Dim>(impl_->data.size()); }
  Dim rows() const { return impl_->shape[0]; }
  Dim cols() const { return impl_->shape.size() == 2 ? impl_->shape[1] : Dim(1); }

  T* data() { return impl_->data.data(); }
  const T* data() const { return impl_->data.data(); }

  T at(Dim i) const { return impl_->data[static_cast<std::size_t>(i)]; }
  T at(Dim i, Dim j) const {
    return impl_->data[static_cast<std::size_t>(i * impl_->shape[1] + j)];
  }
  // scalar fetch
  T value() const {
    if (numel() != 1)
      throw std::logic_error("value(): tensor is not scalar, shape " +
                             shape_str(shape()));
    return impl_->data[0];
  }

  bool requires_grad() const { return impl_ && impl_->requires_grad; }
  void set_requires_grad(bool r) { impl_->requires_grad = r; }

  bool has_grad() const { return impl_ && !impl_->grad.empty(); }
  const std::vector<T>& grad() const {
    if (!has_grad())
      throw std::logic_error("grad(): no gradient present on this tensor");
    return impl_->grad;
  }
  std::vector<T>& mutable_grad() {
    if (!has_grad())
      throw std::logic_error("grad(): no gradient present on this tensor");
    return impl_->grad;
  }
  void zero_grad() {
    if (impl_) {
      impl_->grad.clear();
      impl_->grad.shrink_to_fit();
    }
  }

  // deep copy of values; grad and recording state are not copied
  Tensor clone() const {
    Tensor t;
    t.impl_ = std::make_shared<TensorImpl<T>>();
    t.impl_->shape = impl_->shape;
    t.impl_->data = impl_->data;
    t.impl_->requires_grad = impl_->requires_grad;
    return t;
  }

  std::shared_ptr<TensorImpl<T>> impl() const { return impl_; }

 private:
  static void validate_shape(const Shape& s) {
    if (s.empty()) throw std::invalid_argument("tensor: empty shape");
    for (Dim d : s)
      if (d <= 0)
        throw std::invalid_argument("tensor: nonpositive extent in " +
                                    shape_str(s));
  }

  std::shared_ptr<TensorImpl<T>> impl_;
};

namespace detail {
template <typename T>
inline Graph<T>*& active_graph_slot() {
  static thread_local Graph<T>* g = nullptr;
  return g;
}

template <typename T>
inline std::vector<T>& ensure_grad(TensorImpl<T>& t) {
  if (t.grad.empty()) t.grad.assign(t.data.size(), T(0));
  return t.grad;
}
}  // namespace detail

namespace detail {
inline std::uint64_t next_graph_id() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1);
}
}  // namespace detail

template <typename T>
class Graph {
 public:
  Graph() : id_(detail::next_graph_id()) {
    auto& slot = detail::active_graph_slot<T>();
    if (slot)
      throw std::logic_error("graph: another graph is already recording on this thread");
    slot = this;
  }
  ~Graph() {
    auto& slot = detail::active_graph_slot<T>();
    if (slot == this) slot = nullptr;
  }
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  static Graph* active() { return detail::active_graph_slot<T>(); }

  void record(std::shared_ptr<TensorImpl<T>> out,
              std::vector<std::shared_ptr<TensorImpl<T>>> ins,
              std::function<void()> grad_fn) {
    if (spent_)
      throw std::logic_error("graph: recording after backward; one backward per recording");
    nodes_.push_back(Node{std::move(out), std::move(ins), std::move(grad_fn)});
  }

  std::size_t recorded_ops() const { return nodes_.size(); }
  std::uint64_t id() const { return id_; }

  void backward(const Tensor<T>& loss) {
    if (spent_)
      throw std::logic_error("graph: backward already ran on this recording");
    if (!loss.valid() || loss.numel() != 1)
      throw std::invalid_argument("backward: loss must be scalar" +
                                  (loss.valid() ? ", got shape " + shape_str(loss.shape())
                                                : std::string()));
    if (loss.impl()->origin != id_)
      throw std::logic_error("backward: loss was not recorded on this graph");
    spent_ = true;
    loss.impl()->grad.assign(1, T(1));
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
      if (it->out->grad.empty()) continue;  // not reachable from the loss
      it->grad_fn();
    }
    nodes_.clear();
    nodes_.shrink_to_fit();
  }

 private:
  struct Node {
    std::shared_ptr<TensorImpl<T>> out;
    std::vector<std::shared_ptr<TensorImpl<T>>> ins;
    std::function<void()> grad_fn;
  };
  std::vector<Node> nodes_;
  std::uint64_t id_;
  bool spent_ = false;
};

namespace detail {
// Marks the output as differentiable and pushes the node if a graph is
// recording and any input carries gradient.
template <typename T>
inline bool should_record(std::initializer_list<const Tensor<T>*> ins) {
  if (!Graph<T>::active()) return false;
  for (const Tensor<T>* t : ins)
    if ((*t).requires_grad()) return true;
  return false;
}

template <typename T>
inline void push_node(Tensor<T>& out, std::vector<std::shared_ptr<TensorImpl<T>>> ins,
                      std::function<void()> fn) {
  Graph<T>* g = Graph<T>::active();
  out.impl()->requires_grad = true;
  out.impl()->origin = g->id();
  g->record(out.impl(), std::move(ins), std::move(fn));
}
}  // namespace detail

// ---------------------------------------------------------------------------
// primitives

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0))
    shape_error("matmul", a.shape(), b.shape());
  const Dim m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor<T> out(Shape{m, n});
  const T* pa = a.data();
  const T* pb = b.data();
  T* pc = out.data();
  for (Dim i = 0; i < m; ++i) {
    T* crow = pc + i * n;
    const T* arow = pa + i * k;
    for (Dim kk = 0; kk < k; ++kk) {
      const T av = arow[kk];
      const T* brow = pb + kk * n;
      for (Dim j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  if (detail::should_record<T>({&a, &b})) {
    auto ai = a.impl(), bi = b.impl(), oi = out.impl();
    detail::push_node(out, {ai, bi}, [ai, bi, oi, m, k, n]() {
      const T* dc = oi->grad.data();
      if (ai->requires_grad) {
        auto& da = detail::ensure_grad(*ai);
        const T* pb = bi->data.data();
        for (Dim i = 0; i < m; ++i) {
          const T* dcrow = dc + i * n;
          T* darow = da.data() + i * k;
          for (Dim kk = 0; kk < k; ++kk) {
            const T* brow = pb + kk * n;
            T s = 0;
            for (Dim j = 0; j < n; ++j) s += dcrow[j] * brow[j];
            darow[kk] += s;
          }
        }
      }
      if (bi->requires_grad) {
        auto& db = detail::ensure_grad(*bi);
        const T* pa = ai->data.data();
        for (Dim i = 0; i < m; ++i) {
          const T* arow = pa + i * k;
          const T* dcrow = dc + i * n;
          for (Dim kk = 0; kk < k; ++kk) {
            const T av = arow[kk];
            T* dbrow = db.data() + kk * n;
            for (Dim j = 0; j < n; ++j) dbrow[j] += av * dcrow[j];
          }
        }
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& a) {
  if (a.rank() != 2)
    throw std::invalid_argument("transpose: expects a 2-d tensor, got " +
                                shape_str(a.shape()));
  const Dim m = a.dim(0), n = a.dim(1);
  Tensor<T> out(Shape{n, m});
  const T* pa = a.data();
  T* po = out.data();
  for (Dim i = 0; i < m; ++i)
    for (Dim j = 0; j < n; ++j) po[j * m + i] = pa[i * n + j];
  if (detail::should_record<T>({&a})) {
    auto ai = a.impl(), oi = out.impl();
    detail::push_node(out, {ai}, [ai, oi, m, n]() {
      auto& da = detail::ensure_grad(*ai);
      const T* dc = oi->grad.data();
      for (Dim i = 0; i < m; ++i)
        for (Dim j = 0; j < n; ++j) da[i * n + j] += dc[j * m + i];
    });
  }
  return out;
}

// add supports equal shapes and the bias broadcast [m,n] + [n]
template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  const bool bias_add =
      a.rank() == 2 && b.rank() == 1 && b.dim(0) == a.dim(1);
  if (!bias_add && a.shape() != b.shape()) shape_error("add", a.shape(), b.shape());
  Tensor<T> out(a.shape());
  const T* pa = a.data();
  const T* pb = b.data();
  T* po = out.data();
  if (bias_add) {
    const Dim m = a.dim(0), n = a.dim(1);
    for (Dim i = 0; i < m; ++i)
      for (Dim j = 0; j < n; ++j) po[i * n + j] = pa[i * n + j] + pb[j];
  } else {
    for (Dim i = 0; i < a.numel(); ++i) po[i] = pa[i] + pb[i];
  }
  if (detail::should_record<T>({&a, &b})) {
    auto ai = a.impl(), bi = b.impl(), oi = out.impl();
    detail::push_node(out, {ai, bi}, [ai, bi, oi, bias_add]() {
      const T* dc = oi->grad.data();
      const Dim total = static_cast<Dim>(oi->data.size());
      if (ai->requires_grad) {
        auto& da = detail::ensure_grad(*ai);
        for (Dim i = 0; i < total; ++i) da[i] += dc[i];
      }
      if (bi->requires_grad) {
        auto& db = detail::ensure_grad(*bi);
        if (bias_add) {
          const Dim n = static_cast<Dim>(bi->data.size());
          const Dim m = total / n;
          for (Dim i = 0; i < m; ++i)
            for (Dim j = 0; j < n; ++j) db[j] += dc[i * n + j];
        } else {
          for (Dim i = 0; i < total; ++i) db[i] += dc[i];
        }
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) shape_error("sub", a.shape(), b.shape());
  Tensor<T> out(a.shape());
  const T* pa = a.data();
  const T* pb = b.data();
  T* po = out.data();
  for (Dim i = 0; i < a.numel(); ++i) po[i] = pa[i] - pb[i];
  if (detail::should_record<T>({&a, &b})) {
    auto ai = a.impl(), bi = b.impl(), oi = out.impl();
    detail::push_node(out, {ai, bi}, [ai, bi, oi]() {
      const T* dc = oi->grad.data();
      const Dim total = static_cast<Dim>(oi->data.size());
      if (ai->requires_grad) {
        auto& da = detail::ensure_grad(*ai);
        for (Dim i = 0; i < total; ++i) da[i] += dc[i];
      }
      if (bi->requires_grad) {
        auto& db = detail::ensure_grad(*bi);
        for (Dim i = 0; i < total; ++i) db[i] -= dc[i];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) shape_error("mul", a.shape(), b.shape());
  Tensor<T> out(a.shape());
  const T* pa = a.data();
  const T* pb = b.data();
  T* po = out.data();
  for (Dim i = 0; i < a.numel(); ++i) po[i] = pa[i] * pb[i];
  if (detail::should_record<T>({&a, &b})) {
    auto ai = a.impl(), bi = b.impl(), oi = out.impl();
    detail::push_node(out, {ai, bi}, [ai, bi, oi]() {
      const T* dc = oi->grad.data();
      const Dim total = static_cast<Dim>(oi->data.size());
      if (ai->requires_grad) {
        auto& da = detail::ensure_grad(*ai);
        const T* pb = bi->data.data();
        for (Dim i = 0; i < total; ++i) da[i] += dc[i] * pb[i];
      }
      if (bi->requires_grad) {
        auto& db = detail::ensure_grad(*bi);
        const T* pa = ai->data.data();
        for (Dim i = 0; i < total; ++i) db[i] += dc[i] * pa[i];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T c) {
  Tensor<T> out(a.shape());
  const T* pa = a.data();
  T* po = out.data();
  for (Dim i = 0; i < a.numel(); ++i) po[i] = pa[i] * c;
  if (detail::should_record<T>({&a})) {
    auto ai = a.impl(), oi = out.impl();
    detail::push_node(out, {ai}, [ai, oi, c]() {
      auto& da = detail::ensure_grad(*ai);
      const T* dc = oi->grad.data();
      for (std::size_t i = 0; i < da.size(); ++i) da[i] += dc[i] * c;
    });
  }
  return out;
}

template <typename T>
Tensor<T> concat(int axis, const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat: no inputs");
  const Dim rank = parts[0].rank();
  if (axis < 0 || axis >= rank)
    throw std::invalid_argument("concat: axis " + std::to_string(axis) +
                                " out of range for rank " + std::to_string(rank));
  Shape out_shape = parts[0].shape();
  for (std::size_t p = 1; p < parts.size(); ++p) {
    const Shape& s = parts[p].shape();
    if (static_cast<Dim>(s.size()) != rank) shape_error("concat", parts[0].shape(), s);
    for (Dim d = 0; d < rank; ++d)
      if (d != axis && s[d] != out_shape[d]) shape_error("concat", parts[0].shape(), s);
    out_shape[axis] += s[axis];
  }
  Tensor<T> out(out_shape);
  T* po = out.data();
  if (rank == 1 || axis == 0) {
    Dim off = 0;
    for (const auto& p : parts) {
      const Dim n = p.numel();
      const T* src = p.data();
      for (Dim i = 0; i < n; ++i) po[off + i] = src[i];
      off += n;
    }
  } else {  // rank 2, axis 1
    const Dim m = out_shape[0], total_n = out_shape[1];
    Dim coff = 0;
    for (const auto& p : parts) {
      const Dim n = p.dim(1);
      const T* src = p.data();
      for (Dim i = 0; i < m; ++i)
        for (Dim j = 0; j < n; ++j) po[i * total_n + coff + j] = src[i * n + j];
      coff += n;
    }
  }
  bool rec = false;
  if (Graph<T>::active())
    for (const auto& p : parts) rec = rec || p.requires_grad();
  if (rec) {
    std::vector<std::shared_ptr<TensorImpl<T>>> ins;
    ins.reserve(parts.size());
    for (const auto& p : parts) ins.push_back(p.impl());
    auto oi = out.impl();
    const int ax = (rank == 1) ? 0 : axis;
    detail::push_node(out, ins, [ins, oi, ax]() {
      const T* dc = oi->grad.data();
      if (ax == 0) {
        Dim off = 0;
        for (const auto& in : ins) {
          const Dim n = static_cast<Dim>(in->data.size());
          if (in->requires_grad) {
            auto& g = detail::ensure_grad(*in);
            for (Dim i = 0; i < n; ++i) g[i] += dc[off + i];
          }
          off += n;
        }
      } else {
        const Dim total_n = oi->shape[1];
        const Dim m = oi->shape[0];
        Dim coff = 0;
        for (const auto& in : ins) {
          const Dim n = in->shape[1];
          if (in->requires_grad) {
            auto& g = detail::ensure_grad(*in);
            for (Dim i = 0; i < m; ++i)
              for (Dim j = 0; j < n; ++j) g[i * n + j] += dc[i * total_n + coff + j];
          }
          coff += n;
        }
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> concat(int axis, std::initializer_list<Tensor<T>> parts) {
  return concat(axis, std::vector<Tensor<T>>(parts));
}

template <typename T>
Tensor<T> slice(const Tensor<T>& a, int axis, Dim start, Dim len) {
  const Dim rank = a.rank();
  if (axis < 0 || axis >= rank)
    throw std::invalid_argument("slice: axis " + std::to_string(axis) +
                                " out of range for rank " + std::to_string(rank));
  if (start < 0 || len <= 0 || start + len > a.dim(axis))
    throw std::invalid_argument("slice: range [" + std::to_string(start) + "," +
                                std::to_string(start + len) + ") out of bounds for " +
                                shape_str(a.shape()) + " on axis " + std::to_string(axis));
  Shape out_shape = a.shape();
  out_shape[axis] = len;
  Tensor<T> out(out_shape);
  const T* pa = a.data();
  T* po = out.data();
  if (rank == 1) {
    for (Dim i = 0; i < len; ++i) po[i] = pa[start + i];
  } else if (axis == 0) {
    const Dim n = a.dim(1);
    for (Dim i = 0; i < len; ++i)
      for (Dim j = 0; j < n; ++j) po[i * n + j] = pa[(start + i) * n + j];
  } else {
    const Dim m = a.dim(0), n = a.dim(1);
    for (Dim i = 0; i < m; ++i)
      for (Dim j = 0; j < len; ++j) po[i * len + j] = pa[i * n + start + j];
  }
  if (detail::should_record<T>({&a})) {
    auto ai = a.impl(), oi = out.impl();
    detail::push_node(out, {ai}, [ai, oi, axis, start, len]() {
      auto& da = detail::ensure_grad(*ai);
      const T* dc = oi->grad.data();
      if (ai->shape.size() == 1) {
        for (Dim i = 0; i < len; ++i) da[start + i] += dc[i];
      } else if (axis == 0) {
        const Dim n = ai->shape[1];
        for (Dim i = 0; i < len; ++i)
          for (Dim j = 0; j < n; ++j) da[(start + i) * n + j] += dc[i * n + j];
      } else {
        const Dim m = ai->shape[0], n = ai->shape[1];
        for (Dim i = 0; i < m; ++i)
          for (Dim j = 0; j < len; ++j) da[i * n + start + j] += dc[i * len + j];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> tanh(const Tensor<T>& a) {
  Tensor<T> out(a.shape());
  const T* pa = a.data();
  T* po = out.data();
  for (Dim i = 0; i < a.numel(); ++i) po[i] = std::tanh(pa[i]);
  if (detail::should_record<T>({&a})) {
    auto ai = a.impl(), oi = out.impl();
    detail::push_node(out, {ai}, [ai, oi]() {
      auto& da = detail::ensure_grad(*ai);
      const T* y = oi->data.data();
      const T* dc = oi->grad.data();
      for (std::size_t i = 0; i < da.size(); ++i) da[i] += dc[i] * (T(1) - y[i] * y[i]);
    });
  }
  return out;
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& a) {
  Tensor<T> out(a.shape());
  const T* pa = a.data();
  T* po = out.data();
  for (Dim i = 0; i < a.numel(); ++i) po[i] = T(1) / (T(1) + std::exp(-pa[i]));
  if (detail::should_record<T>({&a})) {
    auto ai = a.impl(), oi = out.impl();
    detail::push_node(out, {ai}, [ai, oi]() {
      auto& da = detail::ensure_grad(*ai);
      const T* y = oi->data.data();
      const T* dc = oi->grad.data();
      for (std::size_t i = 0; i < da.size(); ++i) da[i] += dc[i] * y[i] * (T(1) - y[i]);
    });
  }
  return out;
}

template <typename T>
Tensor<T> relu(const Tensor<T>& a) {
  Tensor<T> out(a.shape());
  const T* pa = a.data();
  T* po = out.data();
  for (Dim i = 0; i < a.numel(); ++i) po[i] = pa[i] > T(0) ? pa[i] : T(0);
  if (detail::should_record<T>({&a})) {
    auto ai = a.impl(), oi = out.impl();
    detail::push_node(out, {ai}, [ai, oi]() {
      auto& da = detail::ensure_grad(*ai);
      const T* x = ai->data.data();
      const T* dc = oi->grad.data();
      for (std::size_t i = 0; i < da.size(); ++i)
        if (x[i] > T(0)) da[i] += dc[i];
    });
  }
  return out;
}

// softmax along `axis`; rows of a 2-d tensor for axis=1
template <typename T>
Tensor<T> softmax(const Tensor<T>& a, int axis) {
  const Dim rank = a.rank();
  if (axis < 0 || axis >= rank)
    throw std::invalid_argument("softmax: axis " + std::to_string(axis) +
                                " out of range for rank " + std::to_string(rank));
  Tensor<T> out(a.shape());
  const Dim slices = (rank == 1) ? 1 : (axis == 1 ? a.dim(0) : a.dim(1));
  const Dim width = (rank == 1) ? a.dim(0) : (axis == 1 ? a.dim(1) : a.dim(0));
  const Dim stride = (rank == 1) ? 1 : (axis == 1 ? 1 : a.dim(1));
  const Dim slice_step = (rank == 1) ? 0 : (axis == 1 ? a.dim(1) : 1);
  const T* pa = a.data();
  T* po = out.data();
  for (Dim s = 0; s < slices; ++s) {
    const T* in = pa + s * slice_step;
    T* o = po + s * slice_step;
    T mx = in[0];
    for (Dim i = 1; i < width; ++i) mx = std::max(mx, in[i * stride]);
    T sum = 0;
    for (Dim i = 0; i < width; ++i) {
      const T e = std::exp(in[i * stride] - mx);
      o[i * stride] = e;
      sum += e;
    }
    const T inv = T(1) / sum;
    for (Dim i = 0; i < width; ++i) o[i * stride] *= inv;
  }
  if (detail::should_record<T>({&a})) {
    auto ai = a.impl(), oi = out.impl();
    detail::push_node(out, {ai}, [ai, oi, slices, width, stride, slice_step]() {
      auto& da = detail::ensure_grad(*ai);
      const T* y = oi->data.data();
      const T* dc = oi->grad.data();
      for (Dim s = 0; s < slices; ++s) {
        const T* ys = y + s * slice_step;
        const T* ds = dc + s * slice_step;
        T dot = 0;
        for (Dim i = 0; i < width; ++i) dot += ds[i * stride] * ys[i * stride];
        T* g = da.data() + s * slice_step;
        for (Dim i = 0; i < width; ++i)
          g[i * stride] += ys[i * stride] * (ds[i * stride] - dot);
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> sum(const Tensor<T>& a) {
  Tensor<T> out(Shape{1});
  const T* pa = a.data();
  T s = 0;
  for (Dim i = 0; i < a.numel(); ++i) s += pa[i];
  out.data()[0] = s;
  if (detail::should_record<T>({&a})) {
    auto ai = a.impl(), oi = out.impl();
    detail::push_node(out, {ai}, [ai, oi]() {
      auto& da = detail::ensure_grad(*ai);
      const T g = oi->grad[0];
      for (std::size_t i = 0; i < da.size(); ++i) da[i] += g;
    });
  }
  return out;
}

template <typename T>
Tensor<T> embedding_lookup(const Tensor<T>& table, const std::vector<std::int32_t>& ids) {
  if (table.rank() != 2)
    throw std::invalid_argument("embedding_lookup: table must be 2-d, got " +
                                shape_str(table.shape()));
  if (ids.empty()) throw std::invalid_argument("embedding_lookup: empty id list");
  const Dim v = table.dim(0), d = table.dim(1);
  for (std::int32_t id : ids)
    if (id < 0 || id >= v)
      throw std::invalid_argument("embedding_lookup: id " + std::to_string(id) +
                                  " outside table of " + std::to_string(v) + " rows");
  Tensor<T> out(Shape{static_cast<Dim>(ids.size()), d});
  const T* pt = table.data();
  T* po = out.data();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const T* row = pt + static_cast<Dim>(ids[i]) * d;
    for (Dim j = 0; j < d; ++j) po[i * d + j] = row[j];
  }
  if (detail::should_record<T>({&table})) {
    auto ti = table.impl(), oi = out.impl();
    detail::push_node(out, {ti}, [ti, oi, ids, d]() {
      auto& dt = detail::ensure_grad(*ti);
      const T* dc = oi->grad.data();
      for (std::size_t i = 0; i < ids.size(); ++i) {
        T* row = dt.data() + static_cast<Dim>(ids[i]) * d;
        for (Dim j = 0; j < d; ++j) row[j] += dc[i * d + j];
      }
    });
  }
  return out;
}

// 1-d dilated convolution, no padding. input [L, Cin], kernel [K, Cin, Cout];
// output position j reads input positions j, j+rate, ..., j+(K-1)*rate.
template <typename T>
Tensor<T> dilated_conv1d(const Tensor<T>& input, const Tensor<T>& kernel, Dim rate) {
  if (input.rank() != 2 || kernel.rank() != 3 || input.dim(1) != kernel.dim(1))
    shape_error("dilated_conv1d", input.shape(), kernel.shape());
  if (rate < 1)
    throw std::invalid_argument("dilated_conv1d: rate must be >= 1, got " +
                                std::to_string(rate));
  const Dim len = input.dim(0), cin = input.dim(1);
  const Dim k = kernel.dim(0), cout = kernel.dim(2);
  const Dim span = 1 + (k - 1) * rate;
  if (len < span)
    throw std::invalid_argument(
        "dilated_conv1d: sequence shorter than receptive span (length " +
        std::to_string(len) + ", span " + std::to_string(span) + ")");
  const Dim out_len = len - (k - 1) * rate;
  Tensor<T> out(Shape{out_len, cout});
  const T* pin = input.data();
  const T* pk = kernel.data();
  T* po = out.data();
  for (Dim j = 0; j < out_len; ++j) {
    T* orow = po + j * cout;
    for (Dim t = 0; t < k; ++t) {
      const T* irow = pin + (j + t * rate) * cin;
      const T* kslab = pk + t * cin * cout;
      for (Dim ci = 0; ci < cin; ++ci) {
        const T x = irow[ci];
        const T* krow = kslab + ci * cout;
        for (Dim co = 0; co < cout; ++co) orow[co] += x * krow[co];
      }
    }
  }
  if (detail::should_record<T>({&input, &kernel})) {
    auto ii = input.impl(), ki = kernel.impl(), oi = out.impl();
    detail::push_node(out, {ii, ki}, [ii, ki, oi, out_len, cin, cout, k, rate]() {
      const T* dc = oi->grad.data();
      if (ii->requires_grad) {
        auto& din = detail::ensure_grad(*ii);
        const T* pk = ki->data.data();
        for (Dim j = 0; j < out_len; ++j) {
          const T* dcrow = dc + j * cout;
          for (Dim t = 0; t < k; ++t) {
            T* drow = din.data() + (j + t * rate) * cin;
            const T* kslab = pk + t * cin * cout;
            for (Dim ci = 0; ci < cin; ++ci) {
              const T* krow = kslab + ci * cout;
              T s = 0;
              for (Dim co = 0; co < cout; ++co) s += dcrow[co] * krow[co];
              drow[ci] += s;
            }
          }
        }
      }
      if (ki->requires_grad) {
        auto& dk = detail::ensure_grad(*ki);
        const T* pin = ii->data.data();
        for (Dim j = 0; j < out_len; ++j) {
          const T* dcrow = dc + j * cout;
          for (Dim t = 0; t < k; ++t) {
            const T* irow = pin + (j + t * rate) * cin;
            T* dkslab = dk.data() + t * cin * cout;
            for (Dim ci = 0; ci < cin; ++ci) {
              const T x = irow[ci];
              T* dkrow = dkslab + ci * cout;
              for (Dim co = 0; co < cout; ++co) dkrow[co] += x * dcrow[co];
            }
          }
        }
      }
    });
  }
  return out;
}

// mean negative log softmax probability of the target id; stable via
// log-sum-exp. logits may be [V] or [1,V].
template <typename T>
Tensor<T> cross_entropy(const Tensor<T>& logits, Dim target) {
  if (logits.rank() > 2 || (logits.rank() == 2 && logits.dim(0) != 1))
    throw std::invalid_argument("cross_entropy: logits must be [V] or [1,V], got " +
                                shape_str(logits.shape()));
  const Dim v = logits.numel();
  if (target < 0 || target >= v)
    throw std::invalid_argument("cross_entropy: target " + std::to_string(target) +
                                " outside " + std::to_string(v) + " classes");
  const T* pl = logits.data();
  T mx = pl[0];
  for (Dim i = 1; i < v; ++i) mx = std::max(mx, pl[i]);
  T sum = 0;
  for (Dim i = 0; i < v; ++i) sum += std::exp(pl[i] - mx);
  const T lse = mx + std::log(sum);
  Tensor<T> out(Shape{1});
  out.data()[0] = lse - pl[target];
  if (detail::should_record<T>({&logits})) {
    std::vector<T> probs(static_cast<std::size_t>(v));
    const T inv = T(1) / sum;
    for (Dim i = 0; i < v; ++i) probs[i] = std::exp(pl[i] - mx) * inv;
    auto li = logits.impl(), oi = out.impl();
    detail::push_node(out, {li}, [li, oi, probs = std::move(probs), target]() {
      auto& dl = detail::ensure_grad(*li);
      const T g = oi->grad[0];
      for (std::size_t i = 0; i < dl.size(); ++i) dl[i] += g * probs[i];
      dl[static_cast<std::size_t>(target)] -= g;
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// gradient checking

// Max over coordinates of |analytic - central difference| relative error for a
// scalar-valued f. Non-finite values anywhere report infinity. Run at double
// precision; finite differences are meaningless in single precision.
template <typename T>
double grad_check(const std::function<Tensor<T>(const Tensor<T>&)>& f, Tensor<T> x,
                  T eps) {
  x.set_requires_grad(true);
  x.zero_grad();
  {
    Graph<T> g;
    Tensor<T> y = f(x);
    if (y.numel() != 1)
      throw std::invalid_argument("grad_check: f must be scalar-valued");
    g.backward(y);
  }
  std::vector<T> analytic(static_cast<std::size_t>(x.numel()), T(0));
  if (x.has_grad()) analytic = x.grad();
  const double inf = std::numeric_limits<double>::infinity();
  double worst = 0;
  for (Dim i = 0; i < x.numel(); ++i) {
    const T keep = x.data()[i];
    x.data()[i] = keep + eps;
    const double f_plus = static_cast<double>(f(x).value());
    x.data()[i] = keep - eps;
    const double f_minus = static_cast<double>(f(x).value());
    x.data()[i] = keep;
    const double numeric = (f_plus - f_minus) / (2.0 * static_cast<double>(eps));
    const double ana = static_cast<double>(analytic[static_cast<std::size_t>(i)]);
    if (!std::isfinite(f_plus) || !std::isfinite(f_minus) || !std::isfinite(ana))
      return inf;
    const double denom = std::max({std::fabs(ana), std::fabs(numeric), 1e-8});
    worst = std::max(worst, std::fabs(ana - numeric) / denom);
  }
  return worst;
}

}  // namespace seq2label
