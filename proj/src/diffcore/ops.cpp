#include "smaug/diffcore/ops.hpp"

#include <cmath>
#include <numbers>

#include "smaug/diffcore/mac_counter.hpp"
#include "smaug/diffcore/tape.hpp"

namespace smaug::diff {

namespace {

using Storage = std::shared_ptr<const std::vector<double>>;
using MaybeNode = std::optional<NodeId>;

Tape* tape_of(std::initializer_list<const Tensor*> inputs) {
  Tape* tape = nullptr;
  for (const Tensor* t : inputs) {
    if (!t->defined()) throw std::invalid_argument("op received an undefined tensor");
    if (t->tape()) {
      if (tape && tape != t->tape()) throw std::logic_error("op inputs live on different tapes");
      tape = t->tape();
    }
  }
  return tape;
}

Tensor finish(Tape* tape, Shape shape, std::vector<double> data, BackwardFn fn) {
  if (!tape) return Tensor(std::move(shape), std::move(data));
  return tape->record(std::move(shape), std::move(data), std::move(fn));
}

[[noreturn]] void mismatch(const char* op, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " + shape_str(b));
}

void require_rank2(const char* op, const Tensor& x) {
  if (x.rank() != 2) throw ShapeError(std::string(op) + ": expected rank-2 tensor, got " + shape_str(x.shape()));
}

void accumulate(GradBuffers& g, const MaybeNode& n, std::span<const double> src) {
  if (!n) return;
  auto& dst = g.at(*n);
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] += src[i];
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  Tape* tape = tape_of({&a, &b});
  require_rank2("matmul", a);
  require_rank2("matmul", b);
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) mismatch("matmul", a.shape(), b.shape());
  record_macs(static_cast<std::uint64_t>(m) * k * n);
  std::vector<double> out(m * n, 0.0);
  const double* A = a.data().data();
  const double* B = b.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = A[i * k + p];
      const double* brow = B + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  Storage as = a.storage(), bs = b.storage();
  MaybeNode na = a.node(), nb = b.node();
  return finish(tape, {m, n}, std::move(out), [=](std::span<const double> go, GradBuffers& g) {
    const double* A = as->data();
    const double* B = bs->data();
    if (na) {
      auto& ga = g.at(*na);
      for (std::size_t i = 0; i < m; ++i) {
        const double* grow = go.data() + i * n;
        for (std::size_t p = 0; p < k; ++p) {
          const double* brow = B + p * n;
          double s = 0.0;
          for (std::size_t j = 0; j < n; ++j) s += grow[j] * brow[j];
          ga[i * k + p] += s;
        }
      }
    }
    if (nb) {
      auto& gb = g.at(*nb);
      for (std::size_t i = 0; i < m; ++i) {
        const double* grow = go.data() + i * n;
        for (std::size_t p = 0; p < k; ++p) {
          const double av = A[i * k + p];
          double* gbrow = gb.data() + p * n;
          for (std::size_t j = 0; j < n; ++j) gbrow[j] += av * grow[j];
        }
      }
    }
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  Tape* tape = tape_of({&a, &b});
  if (a.shape() != b.shape()) mismatch("add", a.shape(), b.shape());
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
  MaybeNode na = a.node(), nb = b.node();
  return finish(tape, a.shape(), std::move(out), [=](std::span<const double> go, GradBuffers& g) {
    accumulate(g, na, go);
    accumulate(g, nb, go);
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  Tape* tape = tape_of({&a, &b});
  if (a.shape() != b.shape()) mismatch("sub", a.shape(), b.shape());
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
  MaybeNode na = a.node(), nb = b.node();
  return finish(tape, a.shape(), std::move(out), [=](std::span<const double> go, GradBuffers& g) {
    accumulate(g, na, go);
    if (nb) {
      auto& gb = g.at(*nb);
      for (std::size_t i = 0; i < go.size(); ++i) gb[i] -= go[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  Tape* tape = tape_of({&a, &b});
  if (a.shape() != b.shape()) mismatch("mul", a.shape(), b.shape());
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
  Storage as = a.storage(), bs = b.storage();
  MaybeNode na = a.node(), nb = b.node();
  return finish(tape, a.shape(), std::move(out), [=](std::span<const double> go, GradBuffers& g) {
    if (na) {
      auto& ga = g.at(*na);
      for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * (*bs)[i];
    }
    if (nb) {
      auto& gb = g.at(*nb);
      for (std::size_t i = 0; i < go.size(); ++i) gb[i] += go[i] * (*as)[i];
    }
  });
}

Tensor add_row(const Tensor& x, const Tensor& row) {
  Tape* tape = tape_of({&x, &row});
  require_rank2("add_row", x);
  const std::size_t n = x.dim(0), d = x.dim(1);
  const bool ok = (row.rank() == 1 && row.dim(0) == d) || (row.rank() == 2 && row.dim(0) == 1 && row.dim(1) == d);
  if (!ok) mismatch("add_row", x.shape(), row.shape());
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) out[i * d + j] = x[i * d + j] + row[j];
  MaybeNode nx = x.node(), nr = row.node();
  return finish(tape, x.shape(), std::move(out), [=](std::span<const double> go, GradBuffers& g) {
    accumulate(g, nx, go);
    if (nr) {
      auto& gr = g.at(*nr);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) gr[j] += go[i * d + j];
    }
  });
}

Tensor scale(const Tensor& x, double s) {
  Tape* tape = tape_of({&x});
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * s;
  MaybeNode nx = x.node();
  return finish(tape, x.shape(), std::move(out), [=](std::span<const double> go, GradBuffers& g) {
    if (!nx) return;
    auto& gx = g.at(*nx);
    for (std::size_t i = 0; i < go.size(); ++i) gx[i] += go[i] * s;
  });
}

Tensor scale_by(const Tensor& x, const Tensor& s) {
  Tape* tape = tape_of({&x, &s});
  if (s.size() != 1) throw ShapeError("scale_by: scale must have one element, got " + shape_str(s.shape()));
  const double sv = s[0];
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * sv;
  Storage xs = x.storage();
  MaybeNode nx = x.node(), ns = s.node();
  return finish(tape, x.shape(), std::move(out), [=](std::span<const double> go, GradBuffers& g) {
    if (nx) {
      auto& gx = g.at(*nx);
      for (std::size_t i = 0; i < go.size(); ++i) gx[i] += go[i] * sv;
    }
    if (ns) {
      double acc = 0.0;
      for (std::size_t i = 0; i < go.size(); ++i) acc += go[i] * (*xs)[i];
      g.at(*ns)[0] += acc;
    }
  });
}

Tensor reciprocal(const Tensor& x) {
  Tape* tape = tape_of({&x});
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = 1.0 / x[i];
  MaybeNode nx = x.node();
  auto ys = std::make_shared<const std::vector<double>>(out);
  return finish(tape, x.shape(), std::move(out), [=](std::span<const double> go, GradBuffers& g) {
    if (!nx) return;
    auto& gx = g.at(*nx);
    for (std::size_t i = 0; i < go.size(); ++i) gx[i] -= go[i] * (*ys)[i] * (*ys)[i];
  });
}

Tensor exp(const Tensor& x) {
  Tape* tape = tape_of({&x});
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::exp(x[i]);
  MaybeNode nx = x.node();
  auto ys = std::make_shared<const std::vector<double>>(out);
  return finish(tape, x.shape(), std::move(out), [=](std::span<const double> go, GradBuffers& g) {
    if (!nx) return;
    auto& gx = g.at(*nx);
    for (std::size_t i = 0; i < go.size(); ++i) gx[i] += go[i] * (*ys)[i];
  });
}

Tensor log(const Tensor& x) {
  Tape* tape = tape_of({&x});
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!(x[i] > 0.0)) throw std::domain_error("log: non-positive input " + std::to_string(x[i]));
    out[i] = std::log(x[i]);
  }
  Storage xs = x.storage();
  MaybeNode nx = x.node();
  return finish(tape, x.shape(), std::move(out), [=](std::span<const double> go, GradBuffers& g) {
    if (!nx) return;
    auto& gx = g.at(*nx);
    for (std::size_t i = 0; i < go.size(); ++i) gx[i] += go[i] / (*xs)[i];
  });
}

Tensor transpose(const Tensor& x) {
  Tape* tape = tape_of({&x});
  require_rank2("transpose", x);
  const std::size_t r = x.dim(0), c = x.dim(1);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = x[i * c + j];
  MaybeNode nx = x.node();
  return finish(tape, {c, r}, std::move(out), [=](std::span<const double> go, GradBuffers& g) {
    if (!nx) return;
    auto& gx = g.at(*nx);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) gx[i * c + j] += go[j * r + i];
  });
}

Tensor reshape(const Tensor& x, Shape shape) {
  Tape* tape = tape_of({&x});
  if (shape_numel(shape) != x.size()) mismatch("reshape", x.shape(), shape);
  MaybeNode nx = x.node();
  return finish(tape, std::move(shape), x.to_vector(),
                [=](std::span<const double> go, GradBuffers& g) { accumulate(g, nx, go); });
}

Tensor gather_rows(const Tensor& x, std::span<const std::size_t> idx) {
  Tape* tape = tape_of({&x});
  if (idx.empty()) throw ShapeError("gather_rows: empty index list (zero-extent result)");
  const std::size_t n = x.rows(), w = x.row_size();
  std::vector<double> out(idx.size() * w);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] >= n) {
      throw ShapeError("gather_rows: index " + std::to_string(idx[r]) + " out of range for shape " +
                       shape_str(x.shape()));
    }
    std::copy_n(x.data().data() + idx[r] * w, w, out.data() + r * w);
  }
  Shape shape = x.shape();
  shape[0] = idx.size();
  MaybeNode nx = x.node();
  std::vector<std::size_t> saved(idx.begin(), idx.end());
  return finish(tape, std::move(shape), std::move(out), [=](std::span<const double> go, GradBuffers& g) {
    if (!nx) return;
    auto& gx = g.at(*nx);
    for (std::size_t r = 0; r < saved.size(); ++r)
      for (std::size_t j = 0; j < w; ++j) gx[saved[r] * w + j] += go[r * w + j];
  });
}

Tensor slice_cols(const Tensor& x, std::size_t start, std::size_t len) {
  Tape* tape = tape_of({&x});
  require_rank2("slice_cols", x);
  const std::size_t r = x.dim(0), c = x.dim(1);
  if (len == 0 || start + len > c) {
    throw ShapeError("slice_cols: columns [" + std::to_string(start) + "," + std::to_string(start + len) +
                     ") out of range for shape " + shape_str(x.shape()));
  }
  std::vector<double> out(r * len);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < len; ++j) out[i * len + j] = x[i * c + start + j];
  MaybeNode nx = x.node();
  return finish(tape, {r, len}, std::move(out), [=](std::span<const double> go, GradBuffers& g) {
    if (!nx) return;
    auto& gx = g.at(*nx);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < len; ++j) gx[i * c + start + j] += go[i * len + j];
  });
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  if (axis > 1) throw ShapeError("concat: axis must be 0 or 1");
  Tape* tape = nullptr;
  for (const auto& p : parts) {
    Tape* t = tape_of({&p});
    if (t) {
      if (tape && tape != t) throw std::logic_error("concat: inputs live on different tapes");
      tape = t;
    }
    require_rank2("concat", p);
  }
  const Shape& first = parts.front().shape();
  std::size_t total = 0;
  for (const auto& p : parts) {
    if (p.dim(1 - axis) != first[1 - axis]) mismatch("concat", first, p.shape());
    total += p.dim(axis);
  }
  Shape shape = axis == 0 ? Shape{total, first[1]} : Shape{first[0], total};
  std::vector<double> out(shape_numel(shape));
  std::vector<MaybeNode> nodes;
  std::vector<std::size_t> extents;
  std::size_t offset = 0;
  for (const auto& p : parts) {
    nodes.push_back(p.node());
    extents.push_back(p.dim(axis));
    if (axis == 0) {
      std::copy(p.data().begin(), p.data().end(), out.begin() + offset * shape[1]);
    } else {
      for (std::size_t i = 0; i < shape[0]; ++i)
        for (std::size_t j = 0; j < p.dim(1); ++j) out[i * shape[1] + offset + j] = p[i * p.dim(1) + j];
    }
    offset += p.dim(axis);
  }
  const std::size_t cols = shape[1], rows = shape[0];
  return finish(tape, std::move(shape), std::move(out), [=](std::span<const double> go, GradBuffers& g) {
    std::size_t off = 0;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      const std::size_t e = extents[k];
      if (nodes[k]) {
        auto& gp = g.at(*nodes[k]);
        if (axis == 0) {
          for (std::size_t i = 0; i < e * cols; ++i) gp[i] += go[off * cols + i];
        } else {
          for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < e; ++j) gp[i * e + j] += go[i * cols + off + j];
        }
      }
      off += e;
    }
  });
}

Tensor sum(const Tensor& x, std::size_t axis) {
  Tape* tape = tape_of({&x});
  require_rank2("sum", x);
  if (axis > 1) throw ShapeError("sum: axis must be 0 or 1");
  const std::size_t r = x.dim(0), c = x.dim(1);
  Shape shape = axis == 0 ? Shape{1, c} : Shape{r, 1};
  std::vector<double> out(axis == 0 ? c : r, 0.0);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[axis == 0 ? j : i] += x[i * c + j];
  MaybeNode nx = x.node();
  return finish(tape, std::move(shape), std::move(out), [=](std::span<const double> go, GradBuffers& g) {
    if (!nx) return;
    auto& gx = g.at(*nx);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) gx[i * c + j] += go[axis == 0 ? j : i];
  });
}

Tensor mean(const Tensor& x, std::size_t axis) {
  require_rank2("mean", x);
  if (axis > 1) throw ShapeError("mean: axis must be 0 or 1");
  return scale(sum(x, axis), 1.0 / static_cast<double>(x.dim(axis)));
}

Tensor sum_all(const Tensor& x) {
  Tape* tape = tape_of({&x});
  double s = 0.0;
  for (double v : x.data()) s += v;
  MaybeNode nx = x.node();
  const std::size_t n = x.size();
  return finish(tape, {1}, {s}, [=](std::span<const double> go, GradBuffers& g) {
    if (!nx) return;
    auto& gx = g.at(*nx);
    for (std::size_t i = 0; i < n; ++i) gx[i] += go[0];
  });
}

Tensor mean_all(const Tensor& x) { return scale(sum_all(x), 1.0 / static_cast<double>(x.size())); }

Tensor softmax(const Tensor& x) {
  Tape* tape = tape_of({&x});
  const std::size_t c = x.shape().back();
  const std::size_t r = x.size() / c;
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < r; ++i) {
    const double* xr = x.data().data() + i * c;
    double* yr = out.data() + i * c;
    double mx = xr[0];
    for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, xr[j]);
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      yr[j] = std::exp(xr[j] - mx);
      z += yr[j];
    }
    for (std::size_t j = 0; j < c; ++j) yr[j] /= z;
  }
  MaybeNode nx = x.node();
  auto ys = std::make_shared<const std::vector<double>>(out);
  return finish(tape, x.shape(), std::move(out), [=](std::span<const double> go, GradBuffers& g) {
    if (!nx) return;
    auto& gx = g.at(*nx);
    for (std::size_t i = 0; i < r; ++i) {
      const double* yr = ys->data() + i * c;
      const double* gr = go.data() + i * c;
      double dot = 0.0;
      for (std::size_t j = 0; j < c; ++j) dot += gr[j] * yr[j];
      for (std::size_t j = 0; j < c; ++j) gx[i * c + j] += yr[j] * (gr[j] - dot);
    }
  });
}

Tensor layernorm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  Tape* tape = tape_of({&x, &gamma, &beta});
  const std::size_t d = x.shape().back();
  if (gamma.size() != d) mismatch("layernorm(gamma)", x.shape(), gamma.shape());
  if (beta.size() != d) mismatch("layernorm(beta)", x.shape(), beta.shape());
  const std::size_t r = x.size() / d;
  std::vector<double> out(x.size());
  std::vector<double> xhat(x.size());
  std::vector<double> inv_std(r);
  for (std::size_t i = 0; i < r; ++i) {
    const double* xr = x.data().data() + i * d;
    double mu = 0.0;
    for (std::size_t j = 0; j < d; ++j) mu += xr[j];
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) var += (xr[j] - mu) * (xr[j] - mu);
    var /= static_cast<double>(d);
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std[i] = is;
    for (std::size_t j = 0; j < d; ++j) {
      xhat[i * d + j] = (xr[j] - mu) * is;
      out[i * d + j] = xhat[i * d + j] * gamma[j] + beta[j];
    }
  }
  Storage gs = gamma.storage();
  MaybeNode nx = x.node(), ng = gamma.node(), nb = beta.node();
  auto xh = std::make_shared<const std::vector<double>>(std::move(xhat));
  auto isd = std::make_shared<const std::vector<double>>(std::move(inv_std));
  return finish(tape, x.shape(), std::move(out), [=](std::span<const double> go, GradBuffers& g) {
    if (ng) {
      auto& gg = g.at(*ng);
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < d; ++j) gg[j] += go[i * d + j] * (*xh)[i * d + j];
    }
    if (nb) {
      auto& gb = g.at(*nb);
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < d; ++j) gb[j] += go[i * d + j];
    }
    if (nx) {
      auto& gx = g.at(*nx);
      std::vector<double> dxhat(d);
      for (std::size_t i = 0; i < r; ++i) {
        double m1 = 0.0, m2 = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          dxhat[j] = go[i * d + j] * (*gs)[j];
          m1 += dxhat[j];
          m2 += dxhat[j] * (*xh)[i * d + j];
        }
        m1 /= static_cast<double>(d);
        m2 /= static_cast<double>(d);
        for (std::size_t j = 0; j < d; ++j) gx[i * d + j] += (*isd)[i] * (dxhat[j] - m1 - (*xh)[i * d + j] * m2);
      }
    }
  });
}

Tensor gelu(const Tensor& x) {
  Tape* tape = tape_of({&x});
  constexpr double c = 0.7978845608028654;  // sqrt(2/pi)
  constexpr double k = 0.044715;
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = x[i];
    out[i] = 0.5 * v * (1.0 + std::tanh(c * (v + k * v * v * v)));
  }
  Storage xs = x.storage();
  MaybeNode nx = x.node();
  return finish(tape, x.shape(), std::move(out), [=](std::span<const double> go, GradBuffers& g) {
    if (!nx) return;
    auto& gx = g.at(*nx);
    for (std::size_t i = 0; i < go.size(); ++i) {
      const double v = (*xs)[i];
      const double t = std::tanh(c * (v + k * v * v * v));
      const double dt = (1.0 - t * t) * c * (1.0 + 3.0 * k * v * v);
      gx[i] += go[i] * (0.5 * (1.0 + t) + 0.5 * v * dt);
    }
  });
}

Tensor l2_normalize_rows(const Tensor& x) {
  Tape* tape = tape_of({&x});
  require_rank2("l2_normalize_rows", x);
  const std::size_t r = x.dim(0), c = x.dim(1);
  std::vector<double> out(x.size());
  std::vector<double> norms(r);
  for (std::size_t i = 0; i < r; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < c; ++j) s += x[i * c + j] * x[i * c + j];
    const double nrm = std::max(std::sqrt(s), 1e-12);
    norms[i] = nrm;
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] = x[i * c + j] / nrm;
  }
  MaybeNode nx = x.node();
  auto ys = std::make_shared<const std::vector<double>>(out);
  auto ns = std::make_shared<const std::vector<double>>(std::move(norms));
  return finish(tape, x.shape(), std::move(out), [=](std::span<const double> go, GradBuffers& g) {
    if (!nx) return;
    auto& gx = g.at(*nx);
    for (std::size_t i = 0; i < r; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < c; ++j) dot += (*ys)[i * c + j] * go[i * c + j];
      for (std::size_t j = 0; j < c; ++j) gx[i * c + j] += (go[i * c + j] - (*ys)[i * c + j] * dot) / (*ns)[i];
    }
  });
}

Tensor embedding(const Tensor& table, std::span<const std::size_t> ids) {
  require_rank2("embedding", table);
  for (auto id : ids) {
    if (id >= table.dim(0)) {
      throw std::out_of_range("embedding: id " + std::to_string(id) + " >= vocabulary size " +
                              std::to_string(table.dim(0)));
    }
  }
  return gather_rows(table, ids);
}

Tensor cross_entropy(const Tensor& logits, std::span<const std::size_t> targets) {
  Tape* tape = tape_of({&logits});
  require_rank2("cross_entropy", logits);
  const std::size_t n = logits.dim(0), c = logits.dim(1);
  if (targets.size() != n) {
    throw ShapeError("cross_entropy: " + std::to_string(targets.size()) + " targets for logits " +
                     shape_str(logits.shape()));
  }
  std::vector<double> probs(logits.size());
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (targets[i] >= c) throw std::out_of_range("cross_entropy: target class out of range");
    const double* lr = logits.data().data() + i * c;
    double mx = lr[0];
    for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, lr[j]);
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) z += std::exp(lr[j] - mx);
    const double lse = mx + std::log(z);
    loss += lse - lr[targets[i]];
    for (std::size_t j = 0; j < c; ++j) probs[i * c + j] = std::exp(lr[j] - lse);
  }
  loss /= static_cast<double>(n);
  MaybeNode nl = logits.node();
  std::vector<std::size_t> tg(targets.begin(), targets.end());
  auto ps = std::make_shared<const std::vector<double>>(std::move(probs));
  return finish(tape, {1}, {loss}, [=](std::span<const double> go, GradBuffers& g) {
    if (!nl) return;
    auto& gl = g.at(*nl);
    const double s = go[0] / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < c; ++j) gl[i * c + j] += s * (*ps)[i * c + j];
      gl[i * c + tg[i]] -= s;
    }
  });
}

Tensor mse(const Tensor& pred, const Tensor& target) {
  Tape* tape = tape_of({&pred, &target});
  if (pred.shape() != target.shape()) mismatch("mse", pred.shape(), target.shape());
  const std::size_t n = pred.size();
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += (pred[i] - target[i]) * (pred[i] - target[i]);
  s /= static_cast<double>(n);
  Storage ps = pred.storage(), ts = target.storage();
  MaybeNode np = pred.node(), nt = target.node();
  return finish(tape, {1}, {s}, [=](std::span<const double> go, GradBuffers& g) {
    const double k = 2.0 * go[0] / static_cast<double>(n);
    if (np) {
      auto& gp = g.at(*np);
      for (std::size_t i = 0; i < n; ++i) gp[i] += k * ((*ps)[i] - (*ts)[i]);
    }
    if (nt) {
      auto& gt = g.at(*nt);
      for (std::size_t i = 0; i < n; ++i) gt[i] -= k * ((*ps)[i] - (*ts)[i]);
    }
  });
}

Tensor straight_through(const Tensor& soft, const Tensor& hard) {
  Tape* tape = tape_of({&soft, &hard});
  if (soft.shape() != hard.shape()) mismatch("straight_through", soft.shape(), hard.shape());
  MaybeNode ns = soft.node();
  return finish(tape, hard.shape(), hard.to_vector(),
                [=](std::span<const double> go, GradBuffers& g) { accumulate(g, ns, go); });
}

}  // namespace smaug::diff
