// Copyright (c) 2026 mtlab contributors
// SPDX-License-Identifier: Apache-2.0
//
// Dense tensors with tape-based reverse-mode differentiation. Values are
// row-major Eigen matrices; every differentiable primitive is a free function
// that records one node on the tape. The graph is rebuilt from scratch on
// every step.

#pragma once

#include "mtlab/common.hpp"

#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

namespace mtlab {

// A named dense value with a gradient slot. Long-lived (model parameters,
// test probes); tapes reference it through TapeT::param.
template <typename S>
struct TensorT {
  std::string name;
  MatrixX<S> value;
  MatrixX<S> grad;

  TensorT() = default;
  TensorT(std::string n, MatrixX<S> v)
      : name(std::move(n)), value(std::move(v)),
        grad(MatrixX<S>::Zero(value.rows(), value.cols())) {}

  void zero_grad() { grad.setZero(); }
};

template <typename S>
class TapeT;

// Cheap handle to a tape node.
template <typename S>
struct VarT {
  TapeT<S>* tape = nullptr;
  int id = -1;
};

namespace detail {
[[noreturn]] inline void shape_error(const char* op, Eigen::Index ar, Eigen::Index ac,
                                     Eigen::Index br, Eigen::Index bc) {
  throw std::invalid_argument(std::string(op) + ": incompatible shapes " +
                              shape_str(ar, ac) + " vs " + shape_str(br, bc));
}
}  // namespace detail

// Ordered record of primitive operations. Node i is written before any node
// that consumes it, so a single reverse sweep propagates all adjoints.
// backward() accumulates into persistent grad buffers; running it twice
// without zeroing doubles every gradient.
template <typename S>
class TapeT {
 public:
  using Mat = MatrixX<S>;
  using Var = VarT<S>;

  Var leaf(Mat v) {
    return push(std::move(v), "leaf", {}, nullptr, /*track=*/true, nullptr);
  }

  Var constant(Mat v) {
    return push(std::move(v), "const", {}, nullptr, /*track=*/false, nullptr);
  }

  // Leaf whose adjoint is added to t.grad after backward().
  Var param(TensorT<S>& t) {
    return push(t.value, "param", {}, nullptr, /*track=*/true, &t);
  }

  const Mat& value(Var v) const { return nodes_[v.id].value; }

  // Accumulated gradient of a tracked leaf.
  const Mat& grad(Var v) const { return nodes_[v.id].grad; }

  size_t size() const { return nodes_.size(); }

  const char* op_name(int id) const { return nodes_[id].op; }

  // Reverse sweep from a 1x1 root. Fresh adjoints are used for propagation
  // and then added into the persistent grad buffers, so repeated calls
  // accumulate (and never rescale) earlier gradients.
  void backward(Var root) {
    const Node& r = nodes_[root.id];
    if (r.value.rows() != 1 || r.value.cols() != 1)
      throw std::invalid_argument("backward: root must be 1x1, got " +
                                  shape_str(r.value.rows(), r.value.cols()));
    adj_.assign(nodes_.size(), Mat());
    touched_.assign(nodes_.size(), 0);
    adjoint(root.id)(0, 0) = S(1);
    for (int id = root.id; id >= 0; --id) {
      if (!touched_[id]) continue;
      Node& n = nodes_[id];
      if (n.backward) n.backward(adj_[id]);
    }
    for (size_t id = 0; id < nodes_.size(); ++id) {
      if (!touched_[id]) continue;
      Node& n = nodes_[id];
      if (n.track_grad) n.grad += adj_[id];
      if (n.hook) n.hook->grad += adj_[id];
    }
    adj_.clear();
    touched_.clear();
  }

  // --- used by op implementations ---

  using BackwardFn = std::function<void(const Mat& out_adj)>;

  Var push(Mat v, const char* op, std::vector<int> inputs, BackwardFn fn,
           bool track = false, TensorT<S>* hook = nullptr) {
    Node n;
    n.value = std::move(v);
    n.op = op;
    n.inputs = std::move(inputs);
    n.backward = std::move(fn);
    n.track_grad = track;
    n.hook = hook;
    if (track) n.grad = Mat::Zero(n.value.rows(), n.value.cols());
    nodes_.push_back(std::move(n));
    return Var{this, static_cast<int>(nodes_.size()) - 1};
  }

  // For ops whose backward reads their own output (e.g. softmax): the
  // closure can only be built once the node id exists.
  void set_backward(int id, BackwardFn fn) { nodes_[id].backward = std::move(fn); }

  // Adjoint buffer of a node, zero-initialized on first touch. Only valid
  // while backward() is running.
  Mat& adjoint(int id) {
    if (!touched_[id]) {
      adj_[id] = Mat::Zero(nodes_[id].value.rows(), nodes_[id].value.cols());
      touched_[id] = 1;
    }
    return adj_[id];
  }

 private:
  struct Node {
    Mat value;
    Mat grad;           // persistent accumulator, tracked leaves only
    const char* op = "";
    std::vector<int> inputs;
    BackwardFn backward;
    bool track_grad = false;
    TensorT<S>* hook = nullptr;
  };

  std::vector<Node> nodes_;
  std::vector<Mat> adj_;
  std::vector<char> touched_;
};

using Tensor = TensorT<Scalar>;
using Tape = TapeT<Scalar>;
using Var = VarT<Scalar>;

// ---------------------------------------------------------------------------
// Primitives. Each returns a new node whose backward accumulates into the
// adjoints of its inputs.
// ---------------------------------------------------------------------------

template <typename S>
VarT<S> matmul(VarT<S> a, VarT<S> b) {
  TapeT<S>* t = a.tape;
  const auto& A = t->value(a);
  const auto& B = t->value(b);
  if (A.cols() != B.rows())
    detail::shape_error("matmul", A.rows(), A.cols(), B.rows(), B.cols());
  MatrixX<S> out = A * B;
  return t->push(std::move(out), "matmul", {a.id, b.id},
                 [t, a, b](const MatrixX<S>& g) {
                   t->adjoint(a.id).noalias() += g * t->value(b).transpose();
                   t->adjoint(b.id).noalias() += t->value(a).transpose() * g;
                 });
}

template <typename S>
VarT<S> add(VarT<S> a, VarT<S> b) {
  TapeT<S>* t = a.tape;
  const auto& A = t->value(a);
  const auto& B = t->value(b);
  if (A.rows() != B.rows() || A.cols() != B.cols())
    detail::shape_error("add", A.rows(), A.cols(), B.rows(), B.cols());
  return t->push(A + B, "add", {a.id, b.id}, [t, a, b](const MatrixX<S>& g) {
    t->adjoint(a.id) += g;
    t->adjoint(b.id) += g;
  });
}

template <typename S>
VarT<S> operator+(VarT<S> a, VarT<S> b) {
  return add(a, b);
}

// X (n x d) plus a 1 x d bias broadcast over rows. The only broadcast rule
// in the engine.
template <typename S>
VarT<S> add_rowwise(VarT<S> x, VarT<S> bias) {
  TapeT<S>* t = x.tape;
  const auto& X = t->value(x);
  const auto& B = t->value(bias);
  if (B.rows() != 1 || B.cols() != X.cols())
    detail::shape_error("add_rowwise", X.rows(), X.cols(), B.rows(), B.cols());
  MatrixX<S> out = X.rowwise() + B.row(0);
  return t->push(std::move(out), "add_rowwise", {x.id, bias.id},
                 [t, x, bias](const MatrixX<S>& g) {
                   t->adjoint(x.id) += g;
                   t->adjoint(bias.id).row(0) += g.colwise().sum();
                 });
}

template <typename S>
VarT<S> scale(VarT<S> x, S c) {
  TapeT<S>* t = x.tape;
  return t->push(t->value(x) * c, "scale", {x.id},
                 [t, x, c](const MatrixX<S>& g) { t->adjoint(x.id) += g * c; });
}

template <typename S>
VarT<S> mul(VarT<S> a, VarT<S> b) {
  TapeT<S>* t = a.tape;
  const auto& A = t->value(a);
  const auto& B = t->value(b);
  if (A.rows() != B.rows() || A.cols() != B.cols())
    detail::shape_error("mul", A.rows(), A.cols(), B.rows(), B.cols());
  return t->push(A.cwiseProduct(B), "mul", {a.id, b.id},
                 [t, a, b](const MatrixX<S>& g) {
                   t->adjoint(a.id) += g.cwiseProduct(t->value(b));
                   t->adjoint(b.id) += g.cwiseProduct(t->value(a));
                 });
}

template <typename S>
VarT<S> relu(VarT<S> x) {
  TapeT<S>* t = x.tape;
  MatrixX<S> out = t->value(x).cwiseMax(S(0));
  return t->push(std::move(out), "relu", {x.id}, [t, x](const MatrixX<S>& g) {
    t->adjoint(x.id) +=
        g.cwiseProduct((t->value(x).array() > S(0)).template cast<S>().matrix());
  });
}

template <typename S>
VarT<S> transpose(VarT<S> x) {
  TapeT<S>* t = x.tape;
  MatrixX<S> out = t->value(x).transpose();
  return t->push(std::move(out), "transpose", {x.id},
                 [t, x](const MatrixX<S>& g) { t->adjoint(x.id) += g.transpose(); });
}

// Row-wise softmax, stabilized by max subtraction.
template <typename S>
VarT<S> softmax_rows(VarT<S> x) {
  TapeT<S>* t = x.tape;
  const auto& X = t->value(x);
  MatrixX<S> out(X.rows(), X.cols());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const S m = X.row(i).maxCoeff();
    out.row(i) = (X.row(i).array() - m).exp();
    out.row(i) /= out.row(i).sum();
  }
  VarT<S> v = t->push(std::move(out), "softmax", {x.id}, nullptr);
  const int out_id = v.id;
  // dX_i = (g_i - (g_i . y_i)) * y_i
  t->set_backward(out_id, [t, x, out_id](const MatrixX<S>& g) {
    const MatrixX<S>& Y = t->value(VarT<S>{t, out_id});
    MatrixX<S>& ax = t->adjoint(x.id);
    for (Eigen::Index i = 0; i < Y.rows(); ++i) {
      const S dot = g.row(i).dot(Y.row(i));
      ax.row(i) += (g.row(i).array() - dot).matrix().cwiseProduct(Y.row(i));
    }
  });
  return v;
}

// Layer normalization over the last axis with affine gain/bias (both 1 x d).
template <typename S>
VarT<S> layer_norm_rows(VarT<S> x, VarT<S> gain, VarT<S> bias, S eps) {
  TapeT<S>* t = x.tape;
  const auto& X = t->value(x);
  const auto& G = t->value(gain);
  const auto& B = t->value(bias);
  if (G.rows() != 1 || G.cols() != X.cols())
    detail::shape_error("layer_norm gain", X.rows(), X.cols(), G.rows(), G.cols());
  if (B.rows() != 1 || B.cols() != X.cols())
    detail::shape_error("layer_norm bias", X.rows(), X.cols(), B.rows(), B.cols());
  const Eigen::Index n = X.cols();
  MatrixX<S> xhat(X.rows(), n);
  MatrixX<S> inv_std(X.rows(), 1);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const S mu = X.row(i).mean();
    const S var = (X.row(i).array() - mu).square().sum() / static_cast<S>(n);
    const S is = S(1) / std::sqrt(var + eps);
    inv_std(i, 0) = is;
    xhat.row(i) = (X.row(i).array() - mu) * is;
  }
  MatrixX<S> out = (xhat.array().rowwise() * G.row(0).array()).rowwise() +
                   B.row(0).array();
  return t->push(
      std::move(out), "layer_norm", {x.id, gain.id, bias.id},
      [t, x, gain, bias, xhat, inv_std, n](const MatrixX<S>& g) {
        const auto& G = t->value(gain);
        MatrixX<S>& ax = t->adjoint(x.id);
        MatrixX<S>& ag = t->adjoint(gain.id);
        MatrixX<S>& ab = t->adjoint(bias.id);
        for (Eigen::Index i = 0; i < g.rows(); ++i) {
          auto gy = g.row(i).array();
          auto xh = xhat.row(i).array();
          auto dxhat = gy * G.row(0).array();
          const S m1 = dxhat.sum() / static_cast<S>(n);
          const S m2 = (dxhat * xh).sum() / static_cast<S>(n);
          ax.row(i) += ((dxhat - m1 - xh * m2) * inv_std(i, 0)).matrix();
          ag.row(0) += (gy * xh).matrix();
          ab.row(0) += g.row(i);
        }
      });
}

// Gather rows of an embedding table; backward scatter-adds.
template <typename S>
VarT<S> embedding_rows(VarT<S> table, std::vector<int> ids) {
  TapeT<S>* t = table.tape;
  const auto& T = t->value(table);
  MatrixX<S> out(static_cast<Eigen::Index>(ids.size()), T.cols());
  for (size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= T.rows())
      throw std::invalid_argument("embedding_rows: id " + std::to_string(ids[i]) +
                                  " outside table of " + std::to_string(T.rows()) +
                                  " rows");
    out.row(static_cast<Eigen::Index>(i)) = T.row(ids[i]);
  }
  return t->push(std::move(out), "embedding", {table.id},
                 [t, table, ids = std::move(ids)](const MatrixX<S>& g) {
                   MatrixX<S>& at = t->adjoint(table.id);
                   for (size_t i = 0; i < ids.size(); ++i)
                     at.row(ids[i]) += g.row(static_cast<Eigen::Index>(i));
                 });
}

template <typename S>
VarT<S> concat_rows(const std::vector<VarT<S>>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: empty input");
  TapeT<S>* t = parts.front().tape;
  Eigen::Index rows = 0;
  const Eigen::Index cols = t->value(parts.front()).cols();
  std::vector<int> ids;
  for (const auto& p : parts) {
    const auto& V = t->value(p);
    if (V.cols() != cols)
      detail::shape_error("concat_rows", V.rows(), V.cols(), rows, cols);
    rows += V.rows();
    ids.push_back(p.id);
  }
  MatrixX<S> out(rows, cols);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    const auto& V = t->value(p);
    out.middleRows(at, V.rows()) = V;
    at += V.rows();
  }
  return t->push(std::move(out), "concat_rows", ids,
                 [t, ids](const MatrixX<S>& g) {
                   Eigen::Index at = 0;
                   for (int id : ids) {
                     const Eigen::Index r = t->value(VarT<S>{t, id}).rows();
                     t->adjoint(id) += g.middleRows(at, r);
                     at += r;
                   }
                 });
}

template <typename S>
VarT<S> concat_cols(const std::vector<VarT<S>>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: empty input");
  TapeT<S>* t = parts.front().tape;
  Eigen::Index cols = 0;
  const Eigen::Index rows = t->value(parts.front()).rows();
  std::vector<int> ids;
  for (const auto& p : parts) {
    const auto& V = t->value(p);
    if (V.rows() != rows)
      detail::shape_error("concat_cols", V.rows(), V.cols(), rows, cols);
    cols += V.cols();
    ids.push_back(p.id);
  }
  MatrixX<S> out(rows, cols);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    const auto& V = t->value(p);
    out.middleCols(at, V.cols()) = V;
    at += V.cols();
  }
  return t->push(std::move(out), "concat_cols", ids,
                 [t, ids](const MatrixX<S>& g) {
                   Eigen::Index at = 0;
                   for (int id : ids) {
                     const Eigen::Index c = t->value(VarT<S>{t, id}).cols();
                     t->adjoint(id) += g.middleCols(at, c);
                     at += c;
                   }
                 });
}

template <typename S>
VarT<S> slice_rows(VarT<S> x, Eigen::Index r0, Eigen::Index n) {
  TapeT<S>* t = x.tape;
  const auto& X = t->value(x);
  if (r0 < 0 || n < 0 || r0 + n > X.rows())
    throw std::invalid_argument("slice_rows: [" + std::to_string(r0) + ", " +
                                std::to_string(r0 + n) + ") outside " +
                                shape_str(X.rows(), X.cols()));
  MatrixX<S> out = X.middleRows(r0, n);
  return t->push(std::move(out), "slice_rows", {x.id},
                 [t, x, r0, n](const MatrixX<S>& g) {
                   t->adjoint(x.id).middleRows(r0, n) += g;
                 });
}

template <typename S>
VarT<S> slice_cols(VarT<S> x, Eigen::Index c0, Eigen::Index n) {
  TapeT<S>* t = x.tape;
  const auto& X = t->value(x);
  if (c0 < 0 || n < 0 || c0 + n > X.cols())
    throw std::invalid_argument("slice_cols: [" + std::to_string(c0) + ", " +
                                std::to_string(c0 + n) + ") outside " +
                                shape_str(X.rows(), X.cols()));
  MatrixX<S> out = X.middleCols(c0, n);
  return t->push(std::move(out), "slice_cols", {x.id},
                 [t, x, c0, n](const MatrixX<S>& g) {
                   t->adjoint(x.id).middleCols(c0, n) += g;
                 });
}

// Mean of the rows selected by mask (1 x n output). mask entries are 0 or 1;
// at least one position must be selected.
template <typename S>
VarT<S> masked_mean_rows(VarT<S> x, std::vector<S> mask) {
  TapeT<S>* t = x.tape;
  const auto& X = t->value(x);
  if (static_cast<Eigen::Index>(mask.size()) != X.rows())
    throw std::invalid_argument("masked_mean_rows: mask length " +
                                std::to_string(mask.size()) + " vs " +
                                shape_str(X.rows(), X.cols()));
  S count = std::accumulate(mask.begin(), mask.end(), S(0));
  if (count <= S(0))
    throw std::invalid_argument("masked_mean_rows: empty mask");
  MatrixX<S> out = MatrixX<S>::Zero(1, X.cols());
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    if (mask[i] != S(0)) out.row(0) += X.row(i);
  out /= count;
  return t->push(std::move(out), "masked_mean", {x.id},
                 [t, x, mask = std::move(mask), count](const MatrixX<S>& g) {
                   MatrixX<S>& ax = t->adjoint(x.id);
                   for (Eigen::Index i = 0; i < ax.rows(); ++i)
                     if (mask[i] != S(0)) ax.row(i) += g.row(0) / count;
                 });
}

// Cosine similarity of two 1 x d vectors, as a 1x1 node.
template <typename S>
VarT<S> cosine(VarT<S> a, VarT<S> b) {
  TapeT<S>* t = a.tape;
  const auto& A = t->value(a);
  const auto& B = t->value(b);
  if (A.rows() != 1 || B.rows() != 1 || A.cols() != B.cols())
    detail::shape_error("cosine", A.rows(), A.cols(), B.rows(), B.cols());
  const S na = A.row(0).norm();
  const S nb = B.row(0).norm();
  if (na == S(0) || nb == S(0))
    throw std::invalid_argument("cosine: zero-norm vector");
  const S c = A.row(0).dot(B.row(0)) / (na * nb);
  MatrixX<S> out(1, 1);
  out(0, 0) = c;
  return t->push(std::move(out), "cosine", {a.id, b.id},
                 [t, a, b, na, nb, c](const MatrixX<S>& g) {
                   const S gv = g(0, 0);
                   const auto& A = t->value(a);
                   const auto& B = t->value(b);
                   t->adjoint(a.id).row(0) +=
                       gv * (B.row(0) / (na * nb) - A.row(0) * (c / (na * na)));
                   t->adjoint(b.id).row(0) +=
                       gv * (A.row(0) / (na * nb) - B.row(0) * (c / (nb * nb)));
                 });
}

// Sum over masked rows of -log softmax(logits)[target]; masked-out rows
// contribute zero loss and zero gradient.
template <typename S>
VarT<S> cross_entropy_rows(VarT<S> logits, std::vector<int> targets,
                           std::vector<S> mask) {
  TapeT<S>* t = logits.tape;
  const auto& Z = t->value(logits);
  if (static_cast<Eigen::Index>(targets.size()) != Z.rows() ||
      mask.size() != targets.size())
    throw std::invalid_argument(
        "cross_entropy_rows: " + std::to_string(targets.size()) + " targets, " +
        std::to_string(mask.size()) + " mask entries vs logits " +
        shape_str(Z.rows(), Z.cols()));
  S loss = S(0);
  for (Eigen::Index i = 0; i < Z.rows(); ++i) {
    if (mask[i] == S(0)) continue;
    if (targets[i] < 0 || targets[i] >= Z.cols())
      throw std::invalid_argument("cross_entropy_rows: target " +
                                  std::to_string(targets[i]) + " outside vocab " +
                                  std::to_string(Z.cols()));
    const S m = Z.row(i).maxCoeff();
    const S lse = std::log((Z.row(i).array() - m).exp().sum()) + m;
    loss += lse - Z(i, targets[i]);
  }
  MatrixX<S> out(1, 1);
  out(0, 0) = loss;
  return t->push(std::move(out), "cross_entropy", {logits.id},
                 [t, logits, targets = std::move(targets),
                  mask = std::move(mask)](const MatrixX<S>& g) {
                   const S gv = g(0, 0);
                   const auto& Z = t->value(logits);
                   MatrixX<S>& az = t->adjoint(logits.id);
                   for (Eigen::Index i = 0; i < Z.rows(); ++i) {
                     if (mask[i] == S(0)) continue;
                     const S m = Z.row(i).maxCoeff();
                     Eigen::Array<S, 1, Eigen::Dynamic> p =
                         (Z.row(i).array() - m).exp();
                     p /= p.sum();
                     az.row(i) += gv * p.matrix();
                     az(i, targets[i]) -= gv;
                   }
                 });
}

// Row-wise log(sum(exp(x))), stabilized; output n x 1.
template <typename S>
VarT<S> logsumexp_rows(VarT<S> x) {
  TapeT<S>* t = x.tape;
  const auto& X = t->value(x);
  MatrixX<S> out(X.rows(), 1);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const S m = X.row(i).maxCoeff();
    out(i, 0) = std::log((X.row(i).array() - m).exp().sum()) + m;
  }
  return t->push(std::move(out), "logsumexp", {x.id},
                 [t, x](const MatrixX<S>& g) {
                   const auto& X = t->value(x);
                   MatrixX<S>& ax = t->adjoint(x.id);
                   for (Eigen::Index i = 0; i < X.rows(); ++i) {
                     const S m = X.row(i).maxCoeff();
                     Eigen::Array<S, 1, Eigen::Dynamic> p =
                         (X.row(i).array() - m).exp();
                     p /= p.sum();
                     ax.row(i) += g(i, 0) * p.matrix();
                   }
                 });
}

template <typename S>
VarT<S> sum_all(VarT<S> x) {
  TapeT<S>* t = x.tape;
  MatrixX<S> out(1, 1);
  out(0, 0) = t->value(x).sum();
  return t->push(std::move(out), "sum", {x.id}, [t, x](const MatrixX<S>& g) {
    t->adjoint(x.id).array() += g(0, 0);
  });
}

}  // namespace mtlab
