/* Copyright 2026 The sedkit Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "sedkit/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "linalg.hpp"
#include "sedkit/error.hpp"

namespace sedkit::ad {

namespace {

void require_rank(const Tensor& t, std::size_t rank, const char* op,
                  const char* what) {
  if (t.rank() != rank) {
    throw DimensionError(std::string(op) + ": " + what + " must have rank " +
                         std::to_string(rank) + ", got " +
                         shape_to_string(t.shape()));
  }
}

// Adds `src` into the gradient of v if v takes one.
void accumulate(Tape& tape, Var v, std::span<const double> src) {
  if (!tape.requires_grad(v)) return;
  auto g = tape.grad_buffer(v);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += src[i];
}

}  // namespace

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

std::vector<double> log_softmax_temperature(std::span<const double> logits,
                                            double temperature) {
  if (!(temperature > 0.0)) {
    throw ArgumentError("temperature must be positive, got " +
                        std::to_string(temperature));
  }
  if (logits.empty()) throw ArgumentError("softmax of an empty vector");
  std::vector<double> out(logits.size());
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = logits[i] / temperature;
    top = std::max(top, out[i]);
  }
  double total = 0.0;
  for (double& v : out) {
    v -= top;
    total += std::exp(v);
  }
  const double log_total = std::log(total);
  for (double& v : out) v -= log_total;
  return out;
}

std::vector<double> softmax_temperature(std::span<const double> logits,
                                        double temperature) {
  if (!(temperature > 0.0)) {
    throw ArgumentError("temperature must be positive, got " +
                        std::to_string(temperature));
  }
  if (logits.empty()) throw ArgumentError("softmax of an empty vector");
  std::vector<double> out(logits.size());
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = logits[i] / temperature;
    top = std::max(top, out[i]);
  }
  double total = 0.0;
  for (double& v : out) {
    v = std::exp(v - top);
    total += v;
  }
  for (double& v : out) v /= total;
  return out;
}

Var matmul(Tape& tape, Var a, Var b) {
  const Tensor& ta = tape.value(a);
  const Tensor& tb = tape.value(b);
  require_rank(ta, 2, "matmul", "lhs");
  require_rank(tb, 2, "matmul", "rhs");
  if (ta.dim(1) != tb.dim(0)) {
    throw DimensionError("matmul: inner dims differ, " +
                         shape_to_string(ta.shape()) + " x " +
                         shape_to_string(tb.shape()));
  }
  const std::size_t p = ta.dim(0), q = ta.dim(1), r = tb.dim(1);
  Tensor out({p, r});
  linalg::gemm(false, false, p, r, q, ta.data(), tb.data(), out.data(), false);
  return tape.record(std::move(out), {a, b}, [a, b, p, q, r](Tape& t, Var o) {
    const double* g = t.value(o).grad().data();
    if (t.requires_grad(a)) {
      linalg::gemm(false, true, p, q, r, g, t.value(b).data(),
                   t.grad_buffer(a).data(), true);
    }
    if (t.requires_grad(b)) {
      linalg::gemm(true, false, q, r, p, t.value(a).data(), g,
                   t.grad_buffer(b).data(), true);
    }
  });
}

Var dense(Tape& tape, Var x, Var weights, Var bias) {
  const Tensor& tx = tape.value(x);
  const Tensor& tw = tape.value(weights);
  const Tensor& tb = tape.value(bias);
  require_rank(tx, 2, "dense", "input");
  require_rank(tw, 2, "dense", "weights");
  if (tx.dim(1) != tw.dim(0) || tb.size() != tw.dim(1)) {
    throw DimensionError("dense: input " + shape_to_string(tx.shape()) +
                         ", weights " + shape_to_string(tw.shape()) +
                         ", bias " + shape_to_string(tb.shape()));
  }
  const std::size_t n = tx.dim(0), f = tx.dim(1), o = tw.dim(1);
  Tensor out({n, o});
  for (std::size_t i = 0; i < n; ++i) {
    std::copy(tb.values().begin(), tb.values().end(), out.data() + i * o);
  }
  linalg::gemm(false, false, n, o, f, tx.data(), tw.data(), out.data(), true);
  return tape.record(
      std::move(out), {x, weights, bias},
      [x, weights, bias, n, f, o](Tape& t, Var out_var) {
        const double* g = t.value(out_var).grad().data();
        if (t.requires_grad(x)) {
          linalg::gemm(false, true, n, f, o, g, t.value(weights).data(),
                       t.grad_buffer(x).data(), true);
        }
        if (t.requires_grad(weights)) {
          linalg::gemm(true, false, f, o, n, t.value(x).data(), g,
                       t.grad_buffer(weights).data(), true);
        }
        if (t.requires_grad(bias)) {
          auto gb = t.grad_buffer(bias);
          for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < o; ++j) gb[j] += g[i * o + j];
          }
        }
      });
}

namespace {

constexpr std::size_t kKernel = 3;

// Unfolds x [C x H x W] into columns [(C*9) x (H*W)] with zero padding 1.
std::vector<double> im2col(const Tensor& x) {
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  const std::size_t hw = h * w;
  std::vector<double> cols(c * kKernel * kKernel * hw, 0.0);
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t ky = 0; ky < kKernel; ++ky) {
      for (std::size_t kx = 0; kx < kKernel; ++kx) {
        double* row = cols.data() + ((ch * kKernel + ky) * kKernel + kx) * hw;
        for (std::size_t y = 0; y < h; ++y) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(y + ky) - 1;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
          for (std::size_t xx = 0; xx < w; ++xx) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(xx + kx) - 1;
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
            row[y * w + xx] = x.at(ch, static_cast<std::size_t>(iy),
                                   static_cast<std::size_t>(ix));
          }
        }
      }
    }
  }
  return cols;
}

void col2im_add(std::span<const double> cols, std::size_t c, std::size_t h,
                std::size_t w, std::span<double> dx) {
  const std::size_t hw = h * w;
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t ky = 0; ky < kKernel; ++ky) {
      for (std::size_t kx = 0; kx < kKernel; ++kx) {
        const double* row =
            cols.data() + ((ch * kKernel + ky) * kKernel + kx) * hw;
        for (std::size_t y = 0; y < h; ++y) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(y + ky) - 1;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
          for (std::size_t xx = 0; xx < w; ++xx) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(xx + kx) - 1;
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
            dx[(ch * h + static_cast<std::size_t>(iy)) * w +
               static_cast<std::size_t>(ix)] += row[y * w + xx];
          }
        }
      }
    }
  }
}

}  // namespace

Var conv2d(Tape& tape, Var x, Var kernel, Var bias) {
  const Tensor& tx = tape.value(x);
  const Tensor& tk = tape.value(kernel);
  const Tensor& tb = tape.value(bias);
  require_rank(tx, 3, "conv2d", "input");
  require_rank(tk, 4, "conv2d", "kernel");
  if (tk.dim(2) != kKernel || tk.dim(3) != kKernel) {
    throw DimensionError("conv2d: kernel must be 3x3, got " +
                         shape_to_string(tk.shape()));
  }
  if (tk.dim(1) != tx.dim(0)) {
    throw DimensionError("conv2d: kernel " + shape_to_string(tk.shape()) +
                         " expects " + std::to_string(tk.dim(1)) +
                         " input channels, input is " +
                         shape_to_string(tx.shape()));
  }
  if (tb.size() != tk.dim(0)) {
    throw DimensionError("conv2d: bias " + shape_to_string(tb.shape()) +
                         " does not match kernel " +
                         shape_to_string(tk.shape()));
  }
  const std::size_t cin = tx.dim(0), h = tx.dim(1), w = tx.dim(2);
  const std::size_t cout = tk.dim(0);
  const std::size_t hw = h * w;
  const std::size_t kdim = cin * kKernel * kKernel;

  std::vector<double> cols = im2col(tx);
  Tensor out({cout, h, w});
  for (std::size_t o = 0; o < cout; ++o) {
    std::fill_n(out.data() + o * hw, hw, tb[o]);
  }
  linalg::gemm(false, false, cout, hw, kdim, tk.data(), cols.data(),
               out.data(), true);

  return tape.record(
      std::move(out), {x, kernel, bias},
      [x, kernel, bias, cin, cout, h, w, hw, kdim,
       cols = std::move(cols)](Tape& t, Var out_var) {
        const double* g = t.value(out_var).grad().data();
        if (t.requires_grad(kernel)) {
          linalg::gemm(false, true, cout, kdim, hw, g, cols.data(),
                       t.grad_buffer(kernel).data(), true);
        }
        if (t.requires_grad(bias)) {
          auto gb = t.grad_buffer(bias);
          for (std::size_t o = 0; o < cout; ++o) {
            double s = 0.0;
            for (std::size_t i = 0; i < hw; ++i) s += g[o * hw + i];
            gb[o] += s;
          }
        }
        if (t.requires_grad(x)) {
          std::vector<double> dcols(kdim * hw, 0.0);
          linalg::gemm(true, false, kdim, hw, cout, t.value(kernel).data(), g,
                       dcols.data(), false);
          col2im_add(dcols, cin, h, w, t.grad_buffer(x));
        }
      });
}

Var maxpool2d(Tape& tape, Var x, int pool_h, int pool_w) {
  if (pool_h <= 0 || pool_w <= 0) {
    throw ArgumentError("maxpool2d: pool dims must be >= 1, got " +
                        std::to_string(pool_h) + "x" + std::to_string(pool_w));
  }
  const Tensor& tx = tape.value(x);
  require_rank(tx, 3, "maxpool2d", "input");
  const std::size_t c = tx.dim(0), h = tx.dim(1), w = tx.dim(2);
  const auto ph = static_cast<std::size_t>(pool_h);
  const auto pw = static_cast<std::size_t>(pool_w);
  const std::size_t oh = (h + ph - 1) / ph, ow = (w + pw - 1) / pw;

  Tensor out({c, oh, ow});
  std::vector<std::size_t> argmax(out.size());
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        const std::size_t y_end = std::min(h, (oy + 1) * ph);
        const std::size_t x_end = std::min(w, (ox + 1) * pw);
        std::size_t best = (ch * h + oy * ph) * w + ox * pw;
        for (std::size_t y = oy * ph; y < y_end; ++y) {
          for (std::size_t xx = ox * pw; xx < x_end; ++xx) {
            const std::size_t idx = (ch * h + y) * w + xx;
            if (tx[idx] > tx[best]) best = idx;
          }
        }
        const std::size_t o = (ch * oh + oy) * ow + ox;
        out[o] = tx[best];
        argmax[o] = best;
      }
    }
  }
  return tape.record(std::move(out), {x},
                     [x, argmax = std::move(argmax)](Tape& t, Var out_var) {
                       auto g = t.value(out_var).grad();
                       auto gx = t.grad_buffer(x);
                       for (std::size_t o = 0; o < g.size(); ++o) {
                         gx[argmax[o]] += g[o];
                       }
                     });
}

Var global_mean_pool(Tape& tape, Var x) {
  const Tensor& tx = tape.value(x);
  require_rank(tx, 3, "global_mean_pool", "input");
  const std::size_t c = tx.dim(0), hw = tx.dim(1) * tx.dim(2);
  Tensor out({1, c});
  for (std::size_t ch = 0; ch < c; ++ch) {
    double s = 0.0;
    for (std::size_t i = 0; i < hw; ++i) s += tx[ch * hw + i];
    out[ch] = s / static_cast<double>(hw);
  }
  return tape.record(std::move(out), {x}, [x, c, hw](Tape& t, Var out_var) {
    auto g = t.value(out_var).grad();
    auto gx = t.grad_buffer(x);
    const double scale = 1.0 / static_cast<double>(hw);
    for (std::size_t ch = 0; ch < c; ++ch) {
      for (std::size_t i = 0; i < hw; ++i) gx[ch * hw + i] += g[ch] * scale;
    }
  });
}

Var relu(Tape& tape, Var x) {
  const Tensor& tx = tape.value(x);
  Tensor out(tx.shape());
  for (std::size_t i = 0; i < tx.size(); ++i) out[i] = std::max(tx[i], 0.0);
  return tape.record(std::move(out), {x}, [x](Tape& t, Var out_var) {
    auto g = t.value(out_var).grad();
    const Tensor& in = t.value(x);
    auto gx = t.grad_buffer(x);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (in[i] > 0.0) gx[i] += g[i];
    }
  });
}

Var sigmoid(Tape& tape, Var x) {
  const Tensor& tx = tape.value(x);
  Tensor out(tx.shape());
  for (std::size_t i = 0; i < tx.size(); ++i) out[i] = stable_sigmoid(tx[i]);
  return tape.record(std::move(out), {x}, [x](Tape& t, Var out_var) {
    const Tensor& s = t.value(out_var);
    auto g = s.grad();
    auto gx = t.grad_buffer(x);
    for (std::size_t i = 0; i < g.size(); ++i) {
      gx[i] += g[i] * s[i] * (1.0 - s[i]);
    }
  });
}

Var tanh(Tape& tape, Var x) {
  const Tensor& tx = tape.value(x);
  Tensor out(tx.shape());
  for (std::size_t i = 0; i < tx.size(); ++i) out[i] = std::tanh(tx[i]);
  return tape.record(std::move(out), {x}, [x](Tape& t, Var out_var) {
    const Tensor& y = t.value(out_var);
    auto g = y.grad();
    auto gx = t.grad_buffer(x);
    for (std::size_t i = 0; i < g.size(); ++i) {
      gx[i] += g[i] * (1.0 - y[i] * y[i]);
    }
  });
}

Var softmax_temperature(Tape& tape, Var logits, double temperature) {
  const Tensor& tl = tape.value(logits);
  std::vector<double> q = softmax_temperature(tl.values(), temperature);
  Tensor out(tl.shape(), std::move(q));
  return tape.record(
      std::move(out), {logits}, [logits, temperature](Tape& t, Var out_var) {
        const Tensor& q = t.value(out_var);
        auto g = q.grad();
        double dot = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) dot += g[i] * q[i];
        auto gx = t.grad_buffer(logits);
        for (std::size_t i = 0; i < g.size(); ++i) {
          gx[i] += q[i] * (g[i] - dot) / temperature;
        }
      });
}

Var reshape(Tape& tape, Var x, Shape shape) {
  Tensor out = tape.value(x).reshaped(std::move(shape));
  return tape.record(std::move(out), {x}, [x](Tape& t, Var out_var) {
    accumulate(t, x, t.value(out_var).grad());
  });
}

Var transpose(Tape& tape, Var x) {
  const Tensor& tx = tape.value(x);
  require_rank(tx, 2, "transpose", "input");
  const std::size_t r = tx.dim(0), c = tx.dim(1);
  Tensor out({c, r});
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = tx[i * c + j];
  }
  return tape.record(std::move(out), {x}, [x, r, c](Tape& t, Var out_var) {
    auto g = t.value(out_var).grad();
    auto gx = t.grad_buffer(x);
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < c; ++j) gx[i * c + j] += g[j * r + i];
    }
  });
}

Var sum(Tape& tape, Var x) {
  const Tensor& tx = tape.value(x);
  double s = 0.0;
  for (double v : tx.values()) s += v;
  return tape.record(Tensor({1}, {s}), {x}, [x](Tape& t, Var out_var) {
    const double g = t.value(out_var).grad()[0];
    for (double& v : t.grad_buffer(x)) v += g;
  });
}

Var weighted_sum(Tape& tape, Var x, std::span<const double> weights) {
  const Tensor& tx = tape.value(x);
  if (weights.size() != tx.size()) {
    throw DimensionError("weighted_sum: " + std::to_string(weights.size()) +
                         " weights for tensor " + shape_to_string(tx.shape()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < tx.size(); ++i) s += weights[i] * tx[i];
  std::vector<double> w(weights.begin(), weights.end());
  return tape.record(Tensor({1}, {s}), {x},
                     [x, w = std::move(w)](Tape& t, Var out_var) {
                       const double g = t.value(out_var).grad()[0];
                       auto gx = t.grad_buffer(x);
                       for (std::size_t i = 0; i < gx.size(); ++i) {
                         gx[i] += g * w[i];
                       }
                     });
}

Var add_scaled(Tape& tape, Var a, Var b, double weight) {
  const Tensor& ta = tape.value(a);
  const Tensor& tb = tape.value(b);
  if (ta.shape() != tb.shape()) {
    throw DimensionError("add_scaled: shapes differ, " +
                         shape_to_string(ta.shape()) + " vs " +
                         shape_to_string(tb.shape()));
  }
  Tensor out(ta.shape());
  for (std::size_t i = 0; i < ta.size(); ++i) out[i] = ta[i] + weight * tb[i];
  return tape.record(std::move(out), {a, b}, [a, b, weight](Tape& t, Var o) {
    auto g = t.value(o).grad();
    accumulate(t, a, g);
    if (t.requires_grad(b)) {
      auto gb = t.grad_buffer(b);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += weight * g[i];
    }
  });
}

namespace {

// Activations of one GRU direction, kept for the adjoint pass. Step s
// processes frame order[s].
struct GruTrace {
  std::vector<std::size_t> order;
  std::vector<double> h_prev;  // [N x U]
  std::vector<double> z;
  std::vector<double> r;
  std::vector<double> c;
};

struct GruShape {
  std::size_t frames;
  std::size_t features;
  std::size_t units;
};

GruShape check_gru(const Tape& tape, Var x, const GruWeights& w) {
  const Tensor& tx = tape.value(x);
  const Tensor& wx = tape.value(w.input_weights);
  const Tensor& wh = tape.value(w.recurrent_weights);
  const Tensor& b = tape.value(w.bias);
  require_rank(tx, 2, "bigru", "input");
  require_rank(wx, 2, "bigru", "input weights");
  require_rank(wh, 2, "bigru", "recurrent weights");
  const std::size_t u = wh.dim(0);
  if (wh.dim(1) != 3 * u || wx.dim(0) != tx.dim(1) || wx.dim(1) != 3 * u ||
      b.size() != 3 * u) {
    throw DimensionError(
        "bigru: input " + shape_to_string(tx.shape()) + ", input weights " +
        shape_to_string(wx.shape()) + ", recurrent weights " +
        shape_to_string(wh.shape()) + ", bias " + shape_to_string(b.shape()));
  }
  return {tx.dim(0), tx.dim(1), u};
}

GruTrace run_gru(const Tensor& x, const Tensor& wx, const Tensor& wh,
                 const Tensor& b, const GruShape& s, bool reverse,
                 Tensor& out, std::size_t out_offset) {
  const std::size_t n = s.frames, f = s.features, u = s.units, g3 = 3 * u;
  GruTrace tr;
  tr.order.resize(n);
  for (std::size_t i = 0; i < n; ++i) tr.order[i] = reverse ? n - 1 - i : i;
  tr.h_prev.assign(n * u, 0.0);
  tr.z.assign(n * u, 0.0);
  tr.r.assign(n * u, 0.0);
  tr.c.assign(n * u, 0.0);

  std::vector<double> h(u, 0.0), a(g3), rh(u);
  for (std::size_t step = 0; step < n; ++step) {
    const std::size_t t = tr.order[step];
    const double* xt = x.data() + t * f;
    std::copy(b.values().begin(), b.values().end(), a.begin());
    for (std::size_t k = 0; k < f; ++k) {
      const double xv = xt[k];
      if (xv == 0.0) continue;
      const double* row = wx.data() + k * g3;
      for (std::size_t j = 0; j < g3; ++j) a[j] += xv * row[j];
    }
    for (std::size_t i = 0; i < u; ++i) {
      const double* row = wh.data() + i * g3;
      for (std::size_t j = 0; j < 2 * u; ++j) a[j] += h[i] * row[j];
    }
    double* zt = tr.z.data() + step * u;
    double* rt = tr.r.data() + step * u;
    double* ct = tr.c.data() + step * u;
    std::copy(h.begin(), h.end(), tr.h_prev.begin() + step * u);
    for (std::size_t j = 0; j < u; ++j) {
      zt[j] = stable_sigmoid(a[j]);
      rt[j] = stable_sigmoid(a[u + j]);
      rh[j] = rt[j] * h[j];
    }
    for (std::size_t i = 0; i < u; ++i) {
      const double* row = wh.data() + i * g3 + 2 * u;
      for (std::size_t j = 0; j < u; ++j) a[2 * u + j] += rh[i] * row[j];
    }
    for (std::size_t j = 0; j < u; ++j) {
      ct[j] = std::tanh(a[2 * u + j]);
      h[j] = (1.0 - zt[j]) * ct[j] + zt[j] * h[j];
      out[t * 2 * u + out_offset + j] = h[j];
    }
  }
  return tr;
}

void backprop_gru(Tape& tape, Var x, const GruWeights& w, const GruShape& s,
                  const GruTrace& tr, std::span<const double> gout,
                  std::size_t out_offset) {
  const std::size_t n = s.frames, f = s.features, u = s.units, g3 = 3 * u;
  const Tensor& tx = tape.value(x);
  const Tensor& wx = tape.value(w.input_weights);
  const Tensor& wh = tape.value(w.recurrent_weights);
  const bool need_x = tape.requires_grad(x);
  const bool need_wx = tape.requires_grad(w.input_weights);
  const bool need_wh = tape.requires_grad(w.recurrent_weights);
  const bool need_b = tape.requires_grad(w.bias);
  if (!(need_x || need_wx || need_wh || need_b)) return;

  std::vector<double> gwx(f * g3, 0.0), gwh(u * g3, 0.0), gb(g3, 0.0);
  std::vector<double> gx(need_x ? n * f : 0, 0.0);
  std::vector<double> dh(u, 0.0), dhp(u), da(g3), drh(u), rh(u);

  for (std::size_t step = n; step-- > 0;) {
    const std::size_t t = tr.order[step];
    const double* hp = tr.h_prev.data() + step * u;
    const double* zt = tr.z.data() + step * u;
    const double* rt = tr.r.data() + step * u;
    const double* ct = tr.c.data() + step * u;
    for (std::size_t j = 0; j < u; ++j) {
      dh[j] += gout[t * 2 * u + out_offset + j];
    }
    for (std::size_t j = 0; j < u; ++j) {
      const double dc = dh[j] * (1.0 - zt[j]);
      const double dz = dh[j] * (hp[j] - ct[j]);
      dhp[j] = dh[j] * zt[j];
      da[2 * u + j] = dc * (1.0 - ct[j] * ct[j]);
      da[j] = dz * zt[j] * (1.0 - zt[j]);
      rh[j] = rt[j] * hp[j];
    }
    for (std::size_t i = 0; i < u; ++i) {
      const double* row = wh.data() + i * g3 + 2 * u;
      double acc = 0.0;
      for (std::size_t j = 0; j < u; ++j) acc += da[2 * u + j] * row[j];
      drh[i] = acc;
    }
    for (std::size_t i = 0; i < u; ++i) {
      dhp[i] += drh[i] * rt[i];
      da[u + i] = drh[i] * hp[i] * rt[i] * (1.0 - rt[i]);
    }
    for (std::size_t i = 0; i < u; ++i) {
      const double* row = wh.data() + i * g3;
      double* grow = gwh.data() + i * g3;
      double acc = 0.0;
      for (std::size_t j = 0; j < 2 * u; ++j) {
        grow[j] += hp[i] * da[j];
        acc += da[j] * row[j];
      }
      for (std::size_t j = 0; j < u; ++j) grow[2 * u + j] += rh[i] * da[2 * u + j];
      dhp[i] += acc;
    }
    const double* xt = tx.data() + t * f;
    for (std::size_t k = 0; k < f; ++k) {
      const double* row = wx.data() + k * g3;
      double* grow = gwx.data() + k * g3;
      double acc = 0.0;
      for (std::size_t j = 0; j < g3; ++j) {
        grow[j] += xt[k] * da[j];
        acc += da[j] * row[j];
      }
      if (need_x) gx[t * f + k] += acc;
    }
    for (std::size_t j = 0; j < g3; ++j) gb[j] += da[j];
    dh = dhp;
  }
  if (need_x) accumulate(tape, x, gx);
  if (need_wx) accumulate(tape, w.input_weights, gwx);
  if (need_wh) accumulate(tape, w.recurrent_weights, gwh);
  if (need_b) accumulate(tape, w.bias, gb);
}

}  // namespace

Var bigru(Tape& tape, Var x, const GruWeights& forward,
          const GruWeights& backward) {
  const GruShape fs = check_gru(tape, x, forward);
  const GruShape bs = check_gru(tape, x, backward);
  if (fs.units != bs.units) {
    throw DimensionError("bigru: directions have different unit counts");
  }
  if (fs.frames == 0) throw ArgumentError("bigru: empty sequence");
  const std::size_t u = fs.units;
  Tensor out({fs.frames, 2 * u});
  GruTrace ftr = run_gru(tape.value(x), tape.value(forward.input_weights),
                         tape.value(forward.recurrent_weights),
                         tape.value(forward.bias), fs, false, out, 0);
  GruTrace btr = run_gru(tape.value(x), tape.value(backward.input_weights),
                         tape.value(backward.recurrent_weights),
                         tape.value(backward.bias), bs, true, out, u);
  return tape.record(
      std::move(out),
      {x, forward.input_weights, forward.recurrent_weights, forward.bias,
       backward.input_weights, backward.recurrent_weights, backward.bias},
      [x, forward, backward, fs, u, ftr = std::move(ftr),
       btr = std::move(btr)](Tape& t, Var out_var) {
        std::vector<double> g(t.value(out_var).grad().begin(),
                              t.value(out_var).grad().end());
        backprop_gru(t, x, forward, fs, ftr, g, 0);
        backprop_gru(t, x, backward, fs, btr, g, u);
      });
}

}  // namespace sedkit::ad
