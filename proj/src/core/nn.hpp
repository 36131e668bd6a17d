#pragma once

#include <string>
#include <vector>

#include "core/rng.hpp"

namespace vbp::nn {

// Minimal layer kit for the estimator. Everything is double precision,
// single-sample, and explicitly backpropagated; activations are cached by the
// caller so one layer instance can be reused across weight-shared clips.

struct ParamView {
  std::string name;
  std::vector<int> shape;
  std::vector<double>* value;
  std::vector<double>* grad;
};

class Conv1d {
 public:
  Conv1d(std::string name, int in_ch, int out_ch, int kernel = 3);

  void init(Rng& rng);
  // x: [in_ch][L], y: [out_ch][L]; 'same' padding, stride 1.
  void forward(const double* x, int length, double* y) const;
  // Accumulates weight/bias gradients; writes dx (may be null for the input layer).
  void backward(const double* x, const double* dy, int length, double* dx);
  void collect(std::vector<ParamView>& out);

  int in_channels() const { return in_ch_; }
  int out_channels() const { return out_ch_; }

  std::vector<double> w, b, dw, db;  // w: [out][in][k]

 private:
  std::string name_;
  int in_ch_;
  int out_ch_;
  int k_;
};

class Linear {
 public:
  Linear(std::string name, int in_dim, int out_dim);

  void init(Rng& rng);
  void forward(const double* x, double* y) const;
  void backward(const double* x, const double* dy, double* dx);
  void collect(std::vector<ParamView>& out);

  int in_dim() const { return in_; }
  int out_dim() const { return out_; }

  std::vector<double> w, b, dw, db;  // w: [out][in]

 private:
  std::string name_;
  int in_;
  int out_;
};

// Single-direction LSTM over a short step sequence. Gate row order: i, f, g, o.
class Lstm {
 public:
  Lstm(std::string name, int input_dim, int hidden);

  void init(Rng& rng);

  struct Cache {
    int steps = 0;
    std::vector<double> xs;      // steps x D
    std::vector<double> gate_i;  // steps x H, post-activation
    std::vector<double> gate_f;
    std::vector<double> gate_g;
    std::vector<double> gate_o;
    std::vector<double> c;       // steps x H
    std::vector<double> h;       // steps x H
    std::vector<double> tanh_c;  // steps x H
  };

  void forward(const double* xs, int steps, Cache& cache) const;
  // dhs: steps x H gradient on the hidden outputs; dxs: steps x D (assigned).
  void backward(const Cache& cache, const double* dhs, double* dxs);
  void collect(std::vector<ParamView>& out);

  int input_dim() const { return input_; }
  int hidden_dim() const { return hidden_; }

  std::vector<double> w, u, b, dw, du, db;  // w: [4H][D], u: [4H][H], b: [4H]

 private:
  std::string name_;
  int input_;
  int hidden_;
};

void relu_forward(const double* x, int n, double* y);
void relu_backward(const double* y, const double* dy, int n, double* dx);

inline int pool2_out_len(int length) { return length / 2; }
void pool2_forward(const double* x, int channels, int length, double* y);
void pool2_backward(const double* dy, int channels, int length, double* dx);

void gap_forward(const double* x, int channels, int length, double* y);
void gap_backward(const double* dy, int channels, int length, double* dx);

// Numerically stable softmax.
void softmax(const double* logits, int n, double* probs);

}  // namespace vbp::nn
