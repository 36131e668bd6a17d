#include "core/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace vbp::nn {

namespace {

double init_limit(int fan_in) { return std::sqrt(1.0 / std::max(1, fan_in)); }

void init_uniform(std::vector<double>& v, Rng& rng, double limit) {
  for (double& x : v) x = rng.uniform(-limit, limit);
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

Conv1d::Conv1d(std::string name, int in_ch, int out_ch, int kernel)
    : name_(std::move(name)), in_ch_(in_ch), out_ch_(out_ch), k_(kernel) {
  w.assign(static_cast<std::size_t>(out_ch_) * in_ch_ * k_, 0.0);
  b.assign(out_ch_, 0.0);
  dw.assign(w.size(), 0.0);
  db.assign(b.size(), 0.0);
}

void Conv1d::init(Rng& rng) { init_uniform(w, rng, init_limit(in_ch_ * k_)); }

void Conv1d::forward(const double* x, int length, double* y) const {
  const int pad = k_ / 2;
  for (int o = 0; o < out_ch_; ++o) {
    double* yo = y + static_cast<std::size_t>(o) * length;
    std::fill(yo, yo + length, b[o]);
    for (int i = 0; i < in_ch_; ++i) {
      const double* xi = x + static_cast<std::size_t>(i) * length;
      const double* wk = w.data() + (static_cast<std::size_t>(o) * in_ch_ + i) * k_;
      for (int kk = 0; kk < k_; ++kk) {
        const double wv = wk[kk];
        const int shift = kk - pad;
        const int t0 = std::max(0, -shift);
        const int t1 = std::min(length, length - shift);
        for (int t = t0; t < t1; ++t) yo[t] += wv * xi[t + shift];
      }
    }
  }
}

void Conv1d::backward(const double* x, const double* dy, int length, double* dx) {
  const int pad = k_ / 2;
  if (dx) std::fill(dx, dx + static_cast<std::size_t>(in_ch_) * length, 0.0);
  for (int o = 0; o < out_ch_; ++o) {
    const double* dyo = dy + static_cast<std::size_t>(o) * length;
    for (int t = 0; t < length; ++t) db[o] += dyo[t];
    for (int i = 0; i < in_ch_; ++i) {
      const double* xi = x + static_cast<std::size_t>(i) * length;
      double* dxi = dx ? dx + static_cast<std::size_t>(i) * length : nullptr;
      double* dwk = dw.data() + (static_cast<std::size_t>(o) * in_ch_ + i) * k_;
      const double* wk = w.data() + (static_cast<std::size_t>(o) * in_ch_ + i) * k_;
      for (int kk = 0; kk < k_; ++kk) {
        const int shift = kk - pad;
        const int t0 = std::max(0, -shift);
        const int t1 = std::min(length, length - shift);
        double acc = 0.0;
        for (int t = t0; t < t1; ++t) acc += dyo[t] * xi[t + shift];
        dwk[kk] += acc;
        if (dxi) {
          const double wv = wk[kk];
          for (int t = t0; t < t1; ++t) dxi[t + shift] += wv * dyo[t];
        }
      }
    }
  }
}

void Conv1d::collect(std::vector<ParamView>& out) {
  out.push_back({name_ + ".w", {out_ch_, in_ch_, k_}, &w, &dw});
  out.push_back({name_ + ".b", {out_ch_}, &b, &db});
}

Linear::Linear(std::string name, int in_dim, int out_dim)
    : name_(std::move(name)), in_(in_dim), out_(out_dim) {
  w.assign(static_cast<std::size_t>(out_) * in_, 0.0);
  b.assign(out_, 0.0);
  dw.assign(w.size(), 0.0);
  db.assign(b.size(), 0.0);
}

void Linear::init(Rng& rng) { init_uniform(w, rng, init_limit(in_)); }

void Linear::forward(const double* x, double* y) const {
  for (int o = 0; o < out_; ++o) {
    const double* wo = w.data() + static_cast<std::size_t>(o) * in_;
    double acc = b[o];
    for (int i = 0; i < in_; ++i) acc += wo[i] * x[i];
    y[o] = acc;
  }
}

void Linear::backward(const double* x, const double* dy, double* dx) {
  if (dx) std::fill(dx, dx + in_, 0.0);
  for (int o = 0; o < out_; ++o) {
    const double g = dy[o];
    db[o] += g;
    double* dwo = dw.data() + static_cast<std::size_t>(o) * in_;
    const double* wo = w.data() + static_cast<std::size_t>(o) * in_;
    for (int i = 0; i < in_; ++i) {
      dwo[i] += g * x[i];
      if (dx) dx[i] += g * wo[i];
    }
  }
}

void Linear::collect(std::vector<ParamView>& out) {
  out.push_back({name_ + ".w", {out_, in_}, &w, &dw});
  out.push_back({name_ + ".b", {out_}, &b, &db});
}

Lstm::Lstm(std::string name, int input_dim, int hidden)
    : name_(std::move(name)), input_(input_dim), hidden_(hidden) {
  w.assign(static_cast<std::size_t>(4) * hidden_ * input_, 0.0);
  u.assign(static_cast<std::size_t>(4) * hidden_ * hidden_, 0.0);
  b.assign(static_cast<std::size_t>(4) * hidden_, 0.0);
  dw.assign(w.size(), 0.0);
  du.assign(u.size(), 0.0);
  db.assign(b.size(), 0.0);
}

void Lstm::init(Rng& rng) {
  const double limit = init_limit(input_ + hidden_);
  init_uniform(w, rng, limit);
  init_uniform(u, rng, limit);
  // forget-gate bias starts open
  for (int j = 0; j < hidden_; ++j) b[hidden_ + j] = 1.0;
}

void Lstm::forward(const double* xs, int steps, Cache& cache) const {
  const int H = hidden_;
  const int D = input_;
  cache.steps = steps;
  cache.xs.assign(xs, xs + static_cast<std::size_t>(steps) * D);
  cache.gate_i.assign(static_cast<std::size_t>(steps) * H, 0.0);
  cache.gate_f.assign(static_cast<std::size_t>(steps) * H, 0.0);
  cache.gate_g.assign(static_cast<std::size_t>(steps) * H, 0.0);
  cache.gate_o.assign(static_cast<std::size_t>(steps) * H, 0.0);
  cache.c.assign(static_cast<std::size_t>(steps) * H, 0.0);
  cache.h.assign(static_cast<std::size_t>(steps) * H, 0.0);
  cache.tanh_c.assign(static_cast<std::size_t>(steps) * H, 0.0);

  std::vector<double> pre(static_cast<std::size_t>(4) * H);
  for (int m = 0; m < steps; ++m) {
    const double* x = xs + static_cast<std::size_t>(m) * D;
    const double* h_prev = m > 0 ? cache.h.data() + static_cast<std::size_t>(m - 1) * H : nullptr;
    const double* c_prev = m > 0 ? cache.c.data() + static_cast<std::size_t>(m - 1) * H : nullptr;
    for (int r = 0; r < 4 * H; ++r) {
      double acc = b[r];
      const double* wr = w.data() + static_cast<std::size_t>(r) * D;
      for (int d = 0; d < D; ++d) acc += wr[d] * x[d];
      if (h_prev) {
        const double* ur = u.data() + static_cast<std::size_t>(r) * H;
        for (int j = 0; j < H; ++j) acc += ur[j] * h_prev[j];
      }
      pre[r] = acc;
    }
    for (int j = 0; j < H; ++j) {
      const double gi = sigmoid(pre[j]);
      const double gf = sigmoid(pre[H + j]);
      const double gg = std::tanh(pre[2 * H + j]);
      const double go = sigmoid(pre[3 * H + j]);
      const double cv = (c_prev ? gf * c_prev[j] : 0.0) + gi * gg;
      const double tc = std::tanh(cv);
      const std::size_t idx = static_cast<std::size_t>(m) * H + j;
      cache.gate_i[idx] = gi;
      cache.gate_f[idx] = gf;
      cache.gate_g[idx] = gg;
      cache.gate_o[idx] = go;
      cache.c[idx] = cv;
      cache.tanh_c[idx] = tc;
      cache.h[idx] = go * tc;
    }
  }
}

void Lstm::backward(const Cache& cache, const double* dhs, double* dxs) {
  const int H = hidden_;
  const int D = input_;
  const int steps = cache.steps;
  std::vector<double> dh(H, 0.0), dc(H, 0.0), da(static_cast<std::size_t>(4) * H);

  std::fill(dxs, dxs + static_cast<std::size_t>(steps) * D, 0.0);
  for (int m = steps - 1; m >= 0; --m) {
    const std::size_t base = static_cast<std::size_t>(m) * H;
    const double* x = cache.xs.data() + static_cast<std::size_t>(m) * D;
    const double* h_prev = m > 0 ? cache.h.data() + (base - H) : nullptr;
    const double* c_prev = m > 0 ? cache.c.data() + (base - H) : nullptr;

    for (int j = 0; j < H; ++j) {
      const double go = cache.gate_o[base + j];
      const double tc = cache.tanh_c[base + j];
      const double dh_total = dh[j] + dhs[base + j];
      const double d_o = dh_total * tc;
      const double dcv = dc[j] + dh_total * go * (1.0 - tc * tc);
      const double gi = cache.gate_i[base + j];
      const double gf = cache.gate_f[base + j];
      const double gg = cache.gate_g[base + j];
      const double d_i = dcv * gg;
      const double d_g = dcv * gi;
      const double d_f = c_prev ? dcv * c_prev[j] : 0.0;
      da[j] = d_i * gi * (1.0 - gi);
      da[H + j] = d_f * gf * (1.0 - gf);
      da[2 * H + j] = d_g * (1.0 - gg * gg);
      da[3 * H + j] = d_o * go * (1.0 - go);
      dc[j] = dcv * gf;  // carried to step m-1
    }

    double* dx = dxs + static_cast<std::size_t>(m) * D;
    std::fill(dh.begin(), dh.end(), 0.0);
    for (int r = 0; r < 4 * H; ++r) {
      const double g = da[r];
      if (g == 0.0) continue;
      db[r] += g;
      double* dwr = dw.data() + static_cast<std::size_t>(r) * D;
      const double* wr = w.data() + static_cast<std::size_t>(r) * D;
      for (int d = 0; d < D; ++d) {
        dwr[d] += g * x[d];
        dx[d] += g * wr[d];
      }
      if (h_prev) {
        double* dur = du.data() + static_cast<std::size_t>(r) * H;
        const double* ur = u.data() + static_cast<std::size_t>(r) * H;
        for (int j = 0; j < H; ++j) {
          dur[j] += g * h_prev[j];
          dh[j] += g * ur[j];
        }
      }
    }
  }
}

void Lstm::collect(std::vector<ParamView>& out) {
  out.push_back({name_ + ".w", {4 * hidden_, input_}, &w, &dw});
  out.push_back({name_ + ".u", {4 * hidden_, hidden_}, &u, &du});
  out.push_back({name_ + ".b", {4 * hidden_}, &b, &db});
}

void relu_forward(const double* x, int n, double* y) {
  for (int i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward(const double* y, const double* dy, int n, double* dx) {
  for (int i = 0; i < n; ++i) dx[i] = y[i] > 0.0 ? dy[i] : 0.0;
}

void pool2_forward(const double* x, int channels, int length, double* y) {
  const int out_len = pool2_out_len(length);
  for (int c = 0; c < channels; ++c) {
    const double* xc = x + static_cast<std::size_t>(c) * length;
    double* yc = y + static_cast<std::size_t>(c) * out_len;
    for (int t = 0; t < out_len; ++t) yc[t] = 0.5 * (xc[2 * t] + xc[2 * t + 1]);
  }
}

void pool2_backward(const double* dy, int channels, int length, double* dx) {
  const int out_len = pool2_out_len(length);
  std::fill(dx, dx + static_cast<std::size_t>(channels) * length, 0.0);
  for (int c = 0; c < channels; ++c) {
    const double* dyc = dy + static_cast<std::size_t>(c) * out_len;
    double* dxc = dx + static_cast<std::size_t>(c) * length;
    for (int t = 0; t < out_len; ++t) {
      dxc[2 * t] = 0.5 * dyc[t];
      dxc[2 * t + 1] = 0.5 * dyc[t];
    }
  }
}

void gap_forward(const double* x, int channels, int length, double* y) {
  for (int c = 0; c < channels; ++c) {
    const double* xc = x + static_cast<std::size_t>(c) * length;
    double acc = 0.0;
    for (int t = 0; t < length; ++t) acc += xc[t];
    y[c] = acc / length;
  }
}

void gap_backward(const double* dy, int channels, int length, double* dx) {
  for (int c = 0; c < channels; ++c) {
    const double g = dy[c] / length;
    double* dxc = dx + static_cast<std::size_t>(c) * length;
    for (int t = 0; t < length; ++t) dxc[t] = g;
  }
}

void softmax(const double* logits, int n, double* probs) {
  double mx = logits[0];
  for (int i = 1; i < n; ++i) mx = std::max(mx, logits[i]);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    probs[i] = std::exp(logits[i] - mx);
    sum += probs[i];
  }
  for (int i = 0; i < n; ++i) probs[i] /= sum;
}

}  // namespace vbp::nn
