#include "simple/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <memory>
#include <string>

#include "simple/errors.hpp"

namespace simple {

namespace kernels {

void mm_nn_acc(const double* A, const double* B, double* C, std::size_t m,
               std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* a_row = A + i * k;
    double* c_row = C + i * n;
    for (std::size_t l = 0; l < k; ++l) {
      const double a = a_row[l];
      const double* b_row = B + l * n;
      for (std::size_t j = 0; j < n; ++j) c_row[j] += a * b_row[j];
    }
  }
}

void mm_nt_acc(const double* A, const double* B, double* C, std::size_t m,
               std::size_t n, std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* a_row = A + i * n;
    double* c_row = C + i * k;
    for (std::size_t l = 0; l < k; ++l) {
      const double* b_row = B + l * n;
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += a_row[j] * b_row[j];
      c_row[l] += s;
    }
  }
}

void mm_tn_acc(const double* A, const double* B, double* C, std::size_t m,
               std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* a_row = A + i * k;
    const double* b_row = B + i * n;
    for (std::size_t l = 0; l < k; ++l) {
      const double a = a_row[l];
      double* c_row = C + l * n;
      for (std::size_t j = 0; j < n; ++j) c_row[j] += a * b_row[j];
    }
  }
}

void im2col(const double* img, std::size_t c, std::size_t h, std::size_t w,
            std::size_t kh, std::size_t kw, std::size_t stride,
            std::size_t pad, double* cols) {
  const std::size_t hout = (h + 2 * pad - kh) / stride + 1;
  const std::size_t wout = (w + 2 * pad - kw) / stride + 1;
  const std::size_t area = hout * wout;
  for (std::size_t ch = 0; ch < c; ++ch) {
    const double* plane = img + ch * h * w;
    for (std::size_t ki = 0; ki < kh; ++ki) {
      for (std::size_t kj = 0; kj < kw; ++kj) {
        double* row = cols + ((ch * kh + ki) * kw + kj) * area;
        for (std::size_t oi = 0; oi < hout; ++oi) {
          const std::ptrdiff_t yi = static_cast<std::ptrdiff_t>(oi * stride + ki) -
                                    static_cast<std::ptrdiff_t>(pad);
          double* out = row + oi * wout;
          if (yi < 0 || yi >= static_cast<std::ptrdiff_t>(h)) {
            std::fill(out, out + wout, 0.0);
            continue;
          }
          const double* src = plane + static_cast<std::size_t>(yi) * w;
          for (std::size_t oj = 0; oj < wout; ++oj) {
            const std::ptrdiff_t xj =
                static_cast<std::ptrdiff_t>(oj * stride + kj) -
                static_cast<std::ptrdiff_t>(pad);
            out[oj] = (xj < 0 || xj >= static_cast<std::ptrdiff_t>(w))
                          ? 0.0
                          : src[static_cast<std::size_t>(xj)];
          }
        }
      }
    }
  }
}

void col2im_acc(const double* cols, std::size_t c, std::size_t h,
                std::size_t w, std::size_t kh, std::size_t kw,
                std::size_t stride, std::size_t pad, double* img) {
  const std::size_t hout = (h + 2 * pad - kh) / stride + 1;
  const std::size_t wout = (w + 2 * pad - kw) / stride + 1;
  const std::size_t area = hout * wout;
  for (std::size_t ch = 0; ch < c; ++ch) {
    double* plane = img + ch * h * w;
    for (std::size_t ki = 0; ki < kh; ++ki) {
      for (std::size_t kj = 0; kj < kw; ++kj) {
        const double* row = cols + ((ch * kh + ki) * kw + kj) * area;
        for (std::size_t oi = 0; oi < hout; ++oi) {
          const std::ptrdiff_t yi = static_cast<std::ptrdiff_t>(oi * stride + ki) -
                                    static_cast<std::ptrdiff_t>(pad);
          if (yi < 0 || yi >= static_cast<std::ptrdiff_t>(h)) continue;
          double* dst = plane + static_cast<std::size_t>(yi) * w;
          const double* src = row + oi * wout;
          for (std::size_t oj = 0; oj < wout; ++oj) {
            const std::ptrdiff_t xj =
                static_cast<std::ptrdiff_t>(oj * stride + kj) -
                static_cast<std::ptrdiff_t>(pad);
            if (xj >= 0 && xj < static_cast<std::ptrdiff_t>(w)) {
              dst[static_cast<std::size_t>(xj)] += src[oj];
            }
          }
        }
      }
    }
  }
}

}  // namespace kernels

namespace {

using VecPtr = std::shared_ptr<const std::vector<double>>;

// Tape the result lives on: the single tape shared by all tracked inputs, or
// nullptr if every input is detached.
Tape* result_tape(std::initializer_list<const Tensor*> inputs, const char* op) {
  Tape* tape = nullptr;
  for (const Tensor* t : inputs) {
    if (!t->defined()) throw ContractError(std::string(op) + ": undefined input tensor");
    if (!t->tracked()) continue;
    if (tape && tape != t->tape()) {
      throw ContractError(std::string(op) + ": inputs live on different tapes");
    }
    tape = t->tape();
  }
  return tape;
}

int pnode(const Tensor& t) { return t.tracked() ? t.node() : -1; }

void check_finite_out(const std::vector<double>& v, const char* op) {
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw ValueError(std::string(op) + ": produced non-finite value");
    }
  }
}

// Funnel every op result through one constructor so finiteness is always
// checked and tape recording stays uniform.
Tensor emit(Tape* tape, std::vector<std::size_t> shape,
            std::vector<double> values, std::vector<int> parents,
            BackwardFn fn, const char* op) {
  check_finite_out(values, op);
  if (!tape) return Tensor::from(std::move(shape), std::move(values));
  return tape->record(std::move(shape),
                      std::make_shared<const std::vector<double>>(std::move(values)),
                      std::move(parents), std::move(fn), op);
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                     " vs " + shape_str(b.shape()));
  }
}

}  // namespace

Tensor reshape(const Tensor& a, std::vector<std::size_t> shape) {
  if (shape_size(shape) != a.size()) {
    throw ShapeError("reshape: cannot view " + shape_str(a.shape()) + " as " +
                     shape_str(shape));
  }
  Tape* tape = result_tape({&a}, "reshape");
  if (!tape) return Tensor::from_shared(std::move(shape), a.shared_data());
  const std::size_t n = a.size();
  return tape->record(
      std::move(shape), a.shared_data(), {pnode(a)},
      [n](const double* g, const std::vector<double*>& gp) {
        if (double* ga = gp[0]) {
          for (std::size_t i = 0; i < n; ++i) ga[i] += g[i];
        }
      },
      "reshape");
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  const auto& av = a.data();
  const auto& bv = b.data();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] + bv[i];
  Tape* tape = result_tape({&a, &b}, "add");
  const std::size_t n = av.size();
  return emit(tape, a.shape(), std::move(out), {pnode(a), pnode(b)},
              [n](const double* g, const std::vector<double*>& gp) {
                if (double* ga = gp[0]) {
                  for (std::size_t i = 0; i < n; ++i) ga[i] += g[i];
                }
                if (double* gb = gp[1]) {
                  for (std::size_t i = 0; i < n; ++i) gb[i] += g[i];
                }
              },
              "add");
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  const auto& av = a.data();
  const auto& bv = b.data();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] - bv[i];
  Tape* tape = result_tape({&a, &b}, "sub");
  const std::size_t n = av.size();
  return emit(tape, a.shape(), std::move(out), {pnode(a), pnode(b)},
              [n](const double* g, const std::vector<double*>& gp) {
                if (double* ga = gp[0]) {
                  for (std::size_t i = 0; i < n; ++i) ga[i] += g[i];
                }
                if (double* gb = gp[1]) {
                  for (std::size_t i = 0; i < n; ++i) gb[i] -= g[i];
                }
              },
              "sub");
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  const auto& av = a.data();
  const auto& bv = b.data();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * bv[i];
  Tape* tape = result_tape({&a, &b}, "mul");
  const std::size_t n = av.size();
  VecPtr pa = a.shared_data();
  VecPtr pb = b.shared_data();
  return emit(tape, a.shape(), std::move(out), {pnode(a), pnode(b)},
              [n, pa, pb](const double* g, const std::vector<double*>& gp) {
                if (double* ga = gp[0]) {
                  const double* bv_ = pb->data();
                  for (std::size_t i = 0; i < n; ++i) ga[i] += g[i] * bv_[i];
                }
                if (double* gb = gp[1]) {
                  const double* av_ = pa->data();
                  for (std::size_t i = 0; i < n; ++i) gb[i] += g[i] * av_[i];
                }
              },
              "mul");
}

Tensor scale(const Tensor& a, double s) {
  if (!std::isfinite(s)) throw ValueError("scale: non-finite scalar");
  const auto& av = a.data();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * s;
  Tape* tape = result_tape({&a}, "scale");
  const std::size_t n = av.size();
  return emit(tape, a.shape(), std::move(out), {pnode(a)},
              [n, s](const double* g, const std::vector<double*>& gp) {
                if (double* ga = gp[0]) {
                  for (std::size_t i = 0; i < n; ++i) ga[i] += g[i] * s;
                }
              },
              "scale");
}

Tensor add_scalar(const Tensor& a, double s) {
  if (!std::isfinite(s)) throw ValueError("add_scalar: non-finite scalar");
  const auto& av = a.data();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] + s;
  Tape* tape = result_tape({&a}, "add_scalar");
  const std::size_t n = av.size();
  return emit(tape, a.shape(), std::move(out), {pnode(a)},
              [n](const double* g, const std::vector<double*>& gp) {
                if (double* ga = gp[0]) {
                  for (std::size_t i = 0; i < n; ++i) ga[i] += g[i];
                }
              },
              "add_scalar");
}

Tensor sum(const Tensor& a) {
  const auto& av = a.data();
  double s = 0.0;
  for (double x : av) s += x;
  Tape* tape = result_tape({&a}, "sum");
  const std::size_t n = av.size();
  return emit(tape, {1}, {s}, {pnode(a)},
              [n](const double* g, const std::vector<double*>& gp) {
                if (double* ga = gp[0]) {
                  for (std::size_t i = 0; i < n; ++i) ga[i] += g[0];
                }
              },
              "sum");
}

Tensor mean(const Tensor& a) {
  const auto& av = a.data();
  if (av.empty()) throw ValueError("mean: empty tensor");
  double s = 0.0;
  for (double x : av) s += x;
  const double inv = 1.0 / static_cast<double>(av.size());
  Tape* tape = result_tape({&a}, "mean");
  const std::size_t n = av.size();
  return emit(tape, {1}, {s * inv}, {pnode(a)},
              [n, inv](const double* g, const std::vector<double*>& gp) {
                if (double* ga = gp[0]) {
                  const double gs = g[0] * inv;
                  for (std::size_t i = 0; i < n; ++i) ga[i] += gs;
                }
              },
              "mean");
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.ndim() != 2 || b.ndim() != 2 || a.shape()[1] != b.shape()[0]) {
    throw ShapeError("matmul: incompatible shapes " + shape_str(a.shape()) +
                     " x " + shape_str(b.shape()));
  }
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  std::vector<double> out(m * n, 0.0);
  kernels::mm_nn_acc(a.data().data(), b.data().data(), out.data(), m, k, n);
  Tape* tape = result_tape({&a, &b}, "matmul");
  VecPtr pa = a.shared_data();
  VecPtr pb = b.shared_data();
  return emit(tape, {m, n}, std::move(out), {pnode(a), pnode(b)},
              [m, k, n, pa, pb](const double* g, const std::vector<double*>& gp) {
                if (double* ga = gp[0]) {
                  kernels::mm_nt_acc(g, pb->data(), ga, m, n, k);
                }
                if (double* gb = gp[1]) {
                  kernels::mm_tn_acc(pa->data(), g, gb, m, k, n);
                }
              },
              "matmul");
}

Tensor add_rowvec(const Tensor& a, const Tensor& v) {
  if (a.ndim() != 2 || v.ndim() != 1 || v.shape()[0] != a.shape()[1]) {
    throw ShapeError("add_rowvec: incompatible shapes " + shape_str(a.shape()) +
                     " + " + shape_str(v.shape()));
  }
  const std::size_t n = a.shape()[0], l = a.shape()[1];
  const auto& av = a.data();
  const auto& vv = v.data();
  std::vector<double> out(n * l);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < l; ++j) out[i * l + j] = av[i * l + j] + vv[j];
  }
  Tape* tape = result_tape({&a, &v}, "add_rowvec");
  return emit(tape, a.shape(), std::move(out), {pnode(a), pnode(v)},
              [n, l](const double* g, const std::vector<double*>& gp) {
                if (double* ga = gp[0]) {
                  for (std::size_t i = 0; i < n * l; ++i) ga[i] += g[i];
                }
                if (double* gv = gp[1]) {
                  for (std::size_t i = 0; i < n; ++i) {
                    for (std::size_t j = 0; j < l; ++j) gv[j] += g[i * l + j];
                  }
                }
              },
              "add_rowvec");
}

Tensor relu(const Tensor& a) {
  const auto& av = a.data();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] > 0.0 ? av[i] : 0.0;
  Tape* tape = result_tape({&a}, "relu");
  const std::size_t n = av.size();
  VecPtr pa = a.shared_data();
  return emit(tape, a.shape(), std::move(out), {pnode(a)},
              [n, pa](const double* g, const std::vector<double*>& gp) {
                if (double* ga = gp[0]) {
                  const double* av_ = pa->data();
                  for (std::size_t i = 0; i < n; ++i) {
                    if (av_[i] > 0.0) ga[i] += g[i];
                  }
                }
              },
              "relu");
}

Tensor clamp_min(const Tensor& a, double c) {
  if (!std::isfinite(c)) throw ValueError("clamp_min: non-finite bound");
  const auto& av = a.data();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] > c ? av[i] : c;
  Tape* tape = result_tape({&a}, "clamp_min");
  const std::size_t n = av.size();
  VecPtr pa = a.shared_data();
  return emit(tape, a.shape(), std::move(out), {pnode(a)},
              [n, c, pa](const double* g, const std::vector<double*>& gp) {
                if (double* ga = gp[0]) {
                  const double* av_ = pa->data();
                  for (std::size_t i = 0; i < n; ++i) {
                    if (av_[i] > c) ga[i] += g[i];
                  }
                }
              },
              "clamp_min");
}

Tensor log_t(const Tensor& a) {
  const auto& av = a.data();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) {
    if (av[i] <= 0.0) throw ValueError("log_t: non-positive input");
    out[i] = std::log(av[i]);
  }
  Tape* tape = result_tape({&a}, "log_t");
  const std::size_t n = av.size();
  VecPtr pa = a.shared_data();
  return emit(tape, a.shape(), std::move(out), {pnode(a)},
              [n, pa](const double* g, const std::vector<double*>& gp) {
                if (double* ga = gp[0]) {
                  const double* av_ = pa->data();
                  for (std::size_t i = 0; i < n; ++i) ga[i] += g[i] / av_[i];
                }
              },
              "log_t");
}

Tensor sqrt_t(const Tensor& a) {
  const auto& av = a.data();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) {
    if (av[i] < 0.0) throw ValueError("sqrt_t: negative input");
    out[i] = std::sqrt(av[i]);
  }
  Tape* tape = result_tape({&a}, "sqrt_t");
  const std::size_t n = av.size();
  // Backward reads the forward output: d sqrt(a) = g / (2 sqrt(a)).
  auto pout = std::make_shared<const std::vector<double>>(out);
  return emit(tape, a.shape(), std::move(out), {pnode(a)},
              [n, pout](const double* g, const std::vector<double*>& gp) {
                if (double* ga = gp[0]) {
                  const double* r = pout->data();
                  for (std::size_t i = 0; i < n; ++i) ga[i] += g[i] * 0.5 / r[i];
                }
              },
              "sqrt_t");
}

Tensor softmax_rows(const Tensor& a) {
  if (a.ndim() != 2) {
    throw ShapeError("softmax_rows: want a matrix, got " + shape_str(a.shape()));
  }
  const std::size_t n = a.shape()[0], l = a.shape()[1];
  const auto& av = a.data();
  std::vector<double> out(n * l);
  for (std::size_t i = 0; i < n; ++i) {
    const double* z = av.data() + i * l;
    double* p = out.data() + i * l;
    double zmax = z[0];
    for (std::size_t j = 1; j < l; ++j) zmax = std::max(zmax, z[j]);
    double denom = 0.0;
    for (std::size_t j = 0; j < l; ++j) {
      p[j] = std::exp(z[j] - zmax);
      denom += p[j];
    }
    for (std::size_t j = 0; j < l; ++j) p[j] /= denom;
  }
  Tape* tape = result_tape({&a}, "softmax_rows");
  auto pout = std::make_shared<const std::vector<double>>(out);
  return emit(tape, a.shape(), std::move(out), {pnode(a)},
              [n, l, pout](const double* g, const std::vector<double*>& gp) {
                if (double* ga = gp[0]) {
                  // Per row: ga += p * (g - <g, p>).
                  for (std::size_t i = 0; i < n; ++i) {
                    const double* p = pout->data() + i * l;
                    const double* gr = g + i * l;
                    double dot = 0.0;
                    for (std::size_t j = 0; j < l; ++j) dot += gr[j] * p[j];
                    double* gar = ga + i * l;
                    for (std::size_t j = 0; j < l; ++j) {
                      gar[j] += p[j] * (gr[j] - dot);
                    }
                  }
                }
              },
              "softmax_rows");
}

Tensor conv2d(const Tensor& x, const Tensor& w, std::size_t stride,
              std::size_t pad) {
  if (x.ndim() != 4 || w.ndim() != 4) {
    throw ShapeError("conv2d: want x[b,c,h,w] and w[f,c,kh,kw]; got " +
                     shape_str(x.shape()) + ", " + shape_str(w.shape()));
  }
  if (stride == 0) throw ConfigError("conv2d: stride must be positive");
  const std::size_t b = x.shape()[0], c = x.shape()[1], h = x.shape()[2],
                    wd = x.shape()[3];
  const std::size_t f = w.shape()[0], kh = w.shape()[2], kw = w.shape()[3];
  if (w.shape()[1] != c) {
    throw ShapeError("conv2d: filter channels do not match input: " +
                     shape_str(x.shape()) + " vs " + shape_str(w.shape()));
  }
  if (h + 2 * pad < kh || wd + 2 * pad < kw) {
    throw ShapeError("conv2d: kernel larger than padded input");
  }
  if ((h + 2 * pad - kh) % stride != 0 || (wd + 2 * pad - kw) % stride != 0) {
    throw ConfigError("conv2d: output size is not integral for stride " +
                      std::to_string(stride));
  }
  const std::size_t hout = (h + 2 * pad - kh) / stride + 1;
  const std::size_t wout = (wd + 2 * pad - kw) / stride + 1;
  const std::size_t area = hout * wout;
  const std::size_t ckk = c * kh * kw;

  const double* xd = x.data().data();
  const double* wdat = w.data().data();
  std::vector<double> out(b * f * area, 0.0);
  std::vector<double> cols(ckk * area);
  for (std::size_t img = 0; img < b; ++img) {
    kernels::im2col(xd + img * c * h * wd, c, h, wd, kh, kw, stride, pad,
                    cols.data());
    kernels::mm_nn_acc(wdat, cols.data(), out.data() + img * f * area, f, ckk,
                       area);
  }

  Tape* tape = result_tape({&x, &w}, "conv2d");
  VecPtr px = x.shared_data();
  VecPtr pw = w.shared_data();
  return emit(
      tape, {b, f, hout, wout}, std::move(out), {pnode(x), pnode(w)},
      [=](const double* g, const std::vector<double*>& gp) {
        double* gx = gp[0];
        double* gw = gp[1];
        // Patch columns are rebuilt per image rather than kept from the
        // forward pass; recompute trades time for activation memory.
        std::vector<double> cols2(ckk * area);
        std::vector<double> gcols(ckk * area);
        for (std::size_t img = 0; img < b; ++img) {
          const double* gimg = g + img * f * area;
          if (gw) {
            kernels::im2col(px->data() + img * c * h * wd, c, h, wd, kh, kw,
                            stride, pad, cols2.data());
            kernels::mm_nt_acc(gimg, cols2.data(), gw, f, area, ckk);
          }
          if (gx) {
            std::fill(gcols.begin(), gcols.end(), 0.0);
            kernels::mm_tn_acc(pw->data(), gimg, gcols.data(), f, ckk, area);
            kernels::col2im_acc(gcols.data(), c, h, wd, kh, kw, stride, pad,
                                gx + img * c * h * wd);
          }
        }
      },
      "conv2d");
}

Tensor add_chanvec(const Tensor& x, const Tensor& v) {
  if (x.ndim() != 4 || v.ndim() != 1 || v.shape()[0] != x.shape()[1]) {
    throw ShapeError("add_chanvec: incompatible shapes " + shape_str(x.shape()) +
                     " + " + shape_str(v.shape()));
  }
  const std::size_t b = x.shape()[0], c = x.shape()[1],
                    area = x.shape()[2] * x.shape()[3];
  const auto& xv = x.data();
  const auto& vv = v.data();
  std::vector<double> out(xv.size());
  for (std::size_t img = 0; img < b; ++img) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      const double bias = vv[ch];
      const std::size_t base = (img * c + ch) * area;
      for (std::size_t p = 0; p < area; ++p) out[base + p] = xv[base + p] + bias;
    }
  }
  Tape* tape = result_tape({&x, &v}, "add_chanvec");
  return emit(tape, x.shape(), std::move(out), {pnode(x), pnode(v)},
              [b, c, area](const double* g, const std::vector<double*>& gp) {
                if (double* gx = gp[0]) {
                  for (std::size_t i = 0; i < b * c * area; ++i) gx[i] += g[i];
                }
                if (double* gv = gp[1]) {
                  for (std::size_t img = 0; img < b; ++img) {
                    for (std::size_t ch = 0; ch < c; ++ch) {
                      const double* src = g + (img * c + ch) * area;
                      double s = 0.0;
                      for (std::size_t p = 0; p < area; ++p) s += src[p];
                      gv[ch] += s;
                    }
                  }
                }
              },
              "add_chanvec");
}

Tensor maxpool2x2(const Tensor& x) {
  if (x.ndim() != 4 || x.shape()[2] % 2 != 0 || x.shape()[3] % 2 != 0) {
    throw ShapeError("maxpool2x2: want [b,c,h,w] with even h and w, got " +
                     shape_str(x.shape()));
  }
  const std::size_t b = x.shape()[0], c = x.shape()[1], h = x.shape()[2],
                    w = x.shape()[3];
  const std::size_t ho = h / 2, wo = w / 2;
  const double* xd = x.data().data();
  std::vector<double> out(b * c * ho * wo);
  auto arg = std::make_shared<std::vector<std::uint32_t>>(out.size());
  std::size_t oi = 0;
  for (std::size_t plane = 0; plane < b * c; ++plane) {
    const double* src = xd + plane * h * w;
    for (std::size_t i = 0; i < ho; ++i) {
      for (std::size_t j = 0; j < wo; ++j, ++oi) {
        const std::size_t base = (2 * i) * w + 2 * j;
        const std::size_t cand[4] = {base, base + 1, base + w, base + w + 1};
        std::size_t best = cand[0];
        for (int k = 1; k < 4; ++k) {
          if (src[cand[k]] > src[best]) best = cand[k];
        }
        out[oi] = src[best];
        (*arg)[oi] = static_cast<std::uint32_t>(plane * h * w + best);
      }
    }
  }
  Tape* tape = result_tape({&x}, "maxpool2x2");
  const std::size_t n_out = out.size();
  return emit(tape, {b, c, ho, wo}, std::move(out), {pnode(x)},
              [n_out, arg](const double* g, const std::vector<double*>& gp) {
                if (double* gx = gp[0]) {
                  for (std::size_t i = 0; i < n_out; ++i) gx[(*arg)[i]] += g[i];
                }
              },
              "maxpool2x2");
}

std::vector<std::size_t> argmax_rows(const Tensor& a) {
  if (a.ndim() != 2) {
    throw ShapeError("argmax_rows: want a matrix, got " + shape_str(a.shape()));
  }
  const std::size_t n = a.shape()[0], l = a.shape()[1];
  if (l == 0) throw ShapeError("argmax_rows: zero columns");
  const auto& av = a.data();
  std::vector<std::size_t> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = av.data() + i * l;
    std::size_t best = 0;
    for (std::size_t j = 1; j < l; ++j) {
      if (row[j] > row[best]) best = j;
    }
    out[i] = best;
  }
  return out;
}

}  // namespace simple
