// SPDX-License-Identifier: Apache-2.0
#include "w2v/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>

namespace w2v::ops {

namespace {

// Gradient buffer of input i, or nullptr when that input is constant.
Tensor* input_grad(Node& n, size_t i) {
  Node& in = *n.inputs[i];
  return in.requires_grad ? &in.grad_buffer() : nullptr;
}

void require_same_shape(const Variable& a, const Variable& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                                shape_str(b.shape()));
  }
}

void require_matrix(const Variable& x, const char* op) {
  if (x.value().ndim() != 2) {
    throw std::invalid_argument(std::string(op) + ": expected a 2-d tensor, got " + shape_str(x.shape()));
  }
}

constexpr double kSqrt2OverPi = 0.7978845608028654;  // sqrt(2 / pi)
constexpr double kGeluCubic = 0.044715;

}  // namespace

Variable constant(Tensor t) { return Variable(std::move(t), false); }

Variable add(const Variable& a, const Variable& b) {
  require_same_shape(a, b, "add");
  Tensor out = a.value();
  out += b.value();
  return Variable::make(std::move(out), {a, b}, [](Node& n) {
    if (auto* ga = input_grad(n, 0)) *ga += n.grad;
    if (auto* gb = input_grad(n, 1)) *gb += n.grad;
  });
}

Variable sub(const Variable& a, const Variable& b) {
  require_same_shape(a, b, "sub");
  Tensor out = a.value();
  for (int64_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  return Variable::make(std::move(out), {a, b}, [](Node& n) {
    if (auto* ga = input_grad(n, 0)) *ga += n.grad;
    if (auto* gb = input_grad(n, 1)) {
      for (int64_t i = 0; i < gb->size(); ++i) (*gb)[i] -= n.grad[i];
    }
  });
}

Variable mul(const Variable& a, const Variable& b) {
  require_same_shape(a, b, "mul");
  Tensor out = a.value();
  for (int64_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  return Variable::make(std::move(out), {a, b}, [](Node& n) {
    const Tensor& av = n.inputs[0]->value;
    const Tensor& bv = n.inputs[1]->value;
    if (auto* ga = input_grad(n, 0)) {
      for (int64_t i = 0; i < ga->size(); ++i) (*ga)[i] += n.grad[i] * bv[i];
    }
    if (auto* gb = input_grad(n, 1)) {
      for (int64_t i = 0; i < gb->size(); ++i) (*gb)[i] += n.grad[i] * av[i];
    }
  });
}

Variable scale(const Variable& a, double s) {
  Tensor out = a.value();
  out *= s;
  return Variable::make(std::move(out), {a}, [s](Node& n) {
    if (auto* ga = input_grad(n, 0)) {
      for (int64_t i = 0; i < ga->size(); ++i) (*ga)[i] += s * n.grad[i];
    }
  });
}

Variable add_row(const Variable& x, const Variable& row) {
  const int64_t d = x.value().cols();
  if (row.value().size() != d) {
    throw std::invalid_argument("add_row: row of length " + std::to_string(row.value().size()) +
                                " for matrix " + shape_str(x.shape()));
  }
  Tensor out = x.value();
  out.mat().rowwise() += row.value().mat().row(0);
  return Variable::make(std::move(out), {x, row}, [](Node& n) {
    if (auto* gx = input_grad(n, 0)) *gx += n.grad;
    if (auto* gr = input_grad(n, 1)) gr->mat().row(0) += n.grad.mat().colwise().sum();
  });
}

Variable matmul(const Variable& a, const Variable& b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  if (a.value().cols() != b.value().rows()) {
    throw std::invalid_argument("matmul: inner dimensions differ " + shape_str(a.shape()) + " x " +
                                shape_str(b.shape()));
  }
  Tensor out({a.value().rows(), b.value().cols()});
  out.mat().noalias() = a.value().mat() * b.value().mat();
  return Variable::make(std::move(out), {a, b}, [](Node& n) {
    const Tensor& av = n.inputs[0]->value;
    const Tensor& bv = n.inputs[1]->value;
    if (auto* ga = input_grad(n, 0)) ga->mat().noalias() += n.grad.mat() * bv.mat().transpose();
    if (auto* gb = input_grad(n, 1)) gb->mat().noalias() += av.mat().transpose() * n.grad.mat();
  });
}

Variable linear(const Variable& x, const Variable& w, const Variable& b) { return add_row(matmul(x, w), b); }

Variable reshape(const Variable& x, Shape shape) {
  Tensor out = x.value().reshaped(std::move(shape));
  return Variable::make(std::move(out), {x}, [](Node& n) {
    if (auto* gx = input_grad(n, 0)) {
      for (int64_t i = 0; i < gx->size(); ++i) (*gx)[i] += n.grad[i];
    }
  });
}

double gelu_tanh(double x) {
  const double u = std::clamp(kSqrt2OverPi * (x + kGeluCubic * x * x * x), -20.0, 20.0);
  return 0.5 * x * (1.0 - 2.0 / (std::exp(2.0 * u) + 1.0) + 1.0);
}

Variable gelu_tanh(const Variable& x) {
  Tensor out = x.value();
  const bool keep = grad_enabled() && x.requires_grad();
  auto th = std::make_shared<AlignedVector>(keep ? out.size() : 0);
  // tanh(u) = 1 - 2 / (exp(2u) + 1), with a vectorized exp; u is clamped where
  // tanh is already +-1 to double precision.
  Eigen::Map<Eigen::ArrayXd> v(out.data(), out.size());
  const Eigen::ArrayXd u = (kSqrt2OverPi * (v + kGeluCubic * v.cube())).max(-20.0).min(20.0);
  const Eigen::ArrayXd t = 1.0 - 2.0 / ((2.0 * u).exp() + 1.0);
  if (keep) Eigen::Map<Eigen::ArrayXd>(th->data(), out.size()) = t;
  v = 0.5 * v * (1.0 + t);
  return Variable::make(std::move(out), {x}, [th](Node& n) {
    auto* gx = input_grad(n, 0);
    if (!gx) return;
    const Tensor& xv = n.inputs[0]->value;
    for (int64_t i = 0; i < xv.size(); ++i) {
      const double v = xv[i];
      const double t = (*th)[i];
      const double du = kSqrt2OverPi * (1.0 + 3.0 * kGeluCubic * v * v);
      (*gx)[i] += n.grad[i] * (0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * du);
    }
  });
}

namespace {

struct NormCache {
  std::vector<double> inv_std;
  Tensor xhat;
};

}  // namespace

Variable layer_norm(const Variable& x, const Variable& gain, const Variable& bias, double eps) {
  const Tensor& xv = x.value();
  const int64_t rows = xv.rows();
  const int64_t d = xv.cols();
  if (d < 2) throw std::invalid_argument("layer_norm: vector length must be >= 2");
  if (gain.value().size() != d || bias.value().size() != d) {
    throw std::invalid_argument("layer_norm: gain/bias length must be " + std::to_string(d));
  }
  auto cache = std::make_shared<NormCache>();
  cache->xhat = Tensor(xv.shape());
  cache->inv_std.resize(static_cast<size_t>(rows));
  Tensor out(xv.shape());
  for (int64_t r = 0; r < rows; ++r) {
    const double* row = xv.data() + r * d;
    double mu = 0.0;
    for (int64_t j = 0; j < d; ++j) mu += row[j];
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (int64_t j = 0; j < d; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<double>(d);
    const double inv = 1.0 / std::sqrt(var + eps);
    cache->inv_std[static_cast<size_t>(r)] = inv;
    for (int64_t j = 0; j < d; ++j) {
      const double h = (row[j] - mu) * inv;
      cache->xhat.at(r, j) = h;
      out.at(r, j) = h * gain.value()[j] + bias.value()[j];
    }
  }
  return Variable::make(std::move(out), {x, gain, bias}, [cache, rows, d](Node& n) {
    const Tensor& g = n.inputs[1]->value;
    if (auto* gg = input_grad(n, 1)) {
      for (int64_t r = 0; r < rows; ++r)
        for (int64_t j = 0; j < d; ++j) (*gg)[j] += n.grad.at(r, j) * cache->xhat.at(r, j);
    }
    if (auto* gb = input_grad(n, 2)) {
      for (int64_t r = 0; r < rows; ++r)
        for (int64_t j = 0; j < d; ++j) (*gb)[j] += n.grad.at(r, j);
    }
    if (auto* gx = input_grad(n, 0)) {
      std::vector<double> dh(static_cast<size_t>(d));
      for (int64_t r = 0; r < rows; ++r) {
        double mean_dh = 0.0;
        double mean_dh_h = 0.0;
        for (int64_t j = 0; j < d; ++j) {
          dh[static_cast<size_t>(j)] = n.grad.at(r, j) * g[j];
          mean_dh += dh[static_cast<size_t>(j)];
          mean_dh_h += dh[static_cast<size_t>(j)] * cache->xhat.at(r, j);
        }
        mean_dh /= static_cast<double>(d);
        mean_dh_h /= static_cast<double>(d);
        const double inv = cache->inv_std[static_cast<size_t>(r)];
        for (int64_t j = 0; j < d; ++j) {
          gx->at(r, j) += inv * (dh[static_cast<size_t>(j)] - mean_dh - cache->xhat.at(r, j) * mean_dh_h);
        }
      }
    }
  });
}

Variable group_norm(const Variable& x, int64_t groups, const Variable& gain, const Variable& bias, double eps) {
  const Tensor& xv = x.value();
  require_matrix(x, "group_norm");
  const int64_t time = xv.rows();
  const int64_t channels = xv.cols();
  if (groups <= 0 || channels % groups != 0) {
    throw std::invalid_argument("group_norm: channels (" + std::to_string(channels) +
                                ") must be divisible by groups (" + std::to_string(groups) + ")");
  }
  if (gain.value().size() != channels || bias.value().size() != channels) {
    throw std::invalid_argument("group_norm: gain/bias length must equal channels");
  }
  const int64_t per = channels / groups;
  const double count = static_cast<double>(time * per);
  // Statistics are accumulated per channel in row order, then pooled per group.
  auto pool = [channels, per, groups](const std::vector<double>& per_channel) {
    std::vector<double> pooled(static_cast<size_t>(channels));
    for (int64_t g = 0; g < groups; ++g) {
      double s = 0.0;
      for (int64_t c = g * per; c < (g + 1) * per; ++c) s += per_channel[c];
      for (int64_t c = g * per; c < (g + 1) * per; ++c) pooled[c] = s;
    }
    return pooled;
  };
  auto cache = std::make_shared<NormCache>();
  cache->xhat = Tensor(xv.shape());
  cache->inv_std.resize(static_cast<size_t>(channels));
  const double* xp = xv.data();
  std::vector<double> acc(static_cast<size_t>(channels), 0.0);
  for (int64_t t = 0; t < time; ++t)
    for (int64_t c = 0; c < channels; ++c) acc[c] += xp[t * channels + c];
  std::vector<double> mu = pool(acc);
  for (auto& m : mu) m /= count;
  std::fill(acc.begin(), acc.end(), 0.0);
  for (int64_t t = 0; t < time; ++t) {
    for (int64_t c = 0; c < channels; ++c) {
      const double d = xp[t * channels + c] - mu[c];
      acc[c] += d * d;
    }
  }
  const std::vector<double> var = pool(acc);
  for (int64_t c = 0; c < channels; ++c) cache->inv_std[c] = 1.0 / std::sqrt(var[c] / count + eps);
  Tensor out(xv.shape());
  double* hp = cache->xhat.data();
  double* op = out.data();
  const double* gp = gain.value().data();
  const double* bp = bias.value().data();
  for (int64_t t = 0; t < time; ++t) {
    for (int64_t c = 0; c < channels; ++c) {
      const int64_t i = t * channels + c;
      hp[i] = (xp[i] - mu[c]) * cache->inv_std[c];
      op[i] = hp[i] * gp[c] + bp[c];
    }
  }
  return Variable::make(std::move(out), {x, gain, bias}, [cache, time, channels, count, pool](Node& n) {
    const double* gv = n.inputs[1]->value.data();
    const double* dy = n.grad.data();
    const double* h = cache->xhat.data();
    if (auto* gg = input_grad(n, 1)) {
      double* p = gg->data();
      for (int64_t t = 0; t < time; ++t)
        for (int64_t c = 0; c < channels; ++c) p[c] += dy[t * channels + c] * h[t * channels + c];
    }
    if (auto* gb = input_grad(n, 2)) {
      double* p = gb->data();
      for (int64_t t = 0; t < time; ++t)
        for (int64_t c = 0; c < channels; ++c) p[c] += dy[t * channels + c];
    }
    if (auto* gx = input_grad(n, 0)) {
      std::vector<double> sum_dh(static_cast<size_t>(channels), 0.0);
      std::vector<double> sum_dh_h(static_cast<size_t>(channels), 0.0);
      for (int64_t t = 0; t < time; ++t) {
        for (int64_t c = 0; c < channels; ++c) {
          const int64_t i = t * channels + c;
          const double dh = dy[i] * gv[c];
          sum_dh[c] += dh;
          sum_dh_h[c] += dh * h[i];
        }
      }
      const std::vector<double> mean_dh = pool(sum_dh);
      const std::vector<double> mean_dh_h = pool(sum_dh_h);
      double* gxp = gx->data();
      for (int64_t t = 0; t < time; ++t) {
        for (int64_t c = 0; c < channels; ++c) {
          const int64_t i = t * channels + c;
          const double dh = dy[i] * gv[c];
          gxp[i] += cache->inv_std[c] * (dh - mean_dh[c] / count - h[i] * mean_dh_h[c] / count);
        }
      }
    }
  });
}

int64_t conv_output_length(int64_t length, int64_t kernel, int64_t stride, int64_t padding) {
  const int64_t span = length + 2 * padding - kernel;
  if (span < 0) return 0;
  return span / stride + 1;
}

namespace {

// cols[t, k * cg + c] = x[t * stride + k - padding, c0 + c]
void im2col(const Tensor& x, int64_t c0, int64_t cg, int64_t kernel, int64_t stride, int64_t padding,
            int64_t out_len, RowMatrix& cols) {
  const int64_t len = x.rows();
  const int64_t cin = x.cols();
  cols.setZero(out_len, kernel * cg);
  for (int64_t t = 0; t < out_len; ++t) {
    for (int64_t k = 0; k < kernel; ++k) {
      const int64_t src = t * stride + k - padding;
      if (src < 0 || src >= len) continue;
      const double* in = x.data() + src * cin + c0;
      double* dst = cols.data() + t * kernel * cg + k * cg;
      std::copy(in, in + cg, dst);
    }
  }
}

void col2im_add(const RowMatrix& cols, int64_t c0, int64_t cg, int64_t kernel, int64_t stride, int64_t padding,
                Tensor& gx) {
  const int64_t len = gx.rows();
  const int64_t cin = gx.cols();
  const int64_t out_len = cols.rows();
  for (int64_t t = 0; t < out_len; ++t) {
    for (int64_t k = 0; k < kernel; ++k) {
      const int64_t src = t * stride + k - padding;
      if (src < 0 || src >= len) continue;
      double* dst = gx.data() + src * cin + c0;
      const double* in = cols.data() + t * kernel * cg + k * cg;
      for (int64_t c = 0; c < cg; ++c) dst[c] += in[c];
    }
  }
}

}  // namespace

Variable conv1d(const Variable& x, const Variable& w, const Variable& b, int64_t stride, int64_t padding,
                int64_t groups) {
  require_matrix(x, "conv1d");
  const Tensor& xv = x.value();
  const Tensor& wv = w.value();
  if (wv.ndim() != 3) throw std::invalid_argument("conv1d: weight must be [kernel, c_in/groups, c_out]");
  const int64_t kernel = wv.dim(0);
  const int64_t cg_in = wv.dim(1);
  const int64_t cout = wv.dim(2);
  if (groups <= 0 || xv.cols() != cg_in * groups || cout % groups != 0) {
    throw std::invalid_argument("conv1d: channel/group mismatch, input " + shape_str(xv.shape()) + ", weight " +
                                shape_str(wv.shape()) + ", groups " + std::to_string(groups));
  }
  if (b.value().size() != cout) throw std::invalid_argument("conv1d: bias length must equal c_out");
  const int64_t out_len = conv_output_length(xv.rows(), kernel, stride, padding);
  if (out_len <= 0) {
    throw std::invalid_argument("conv1d: input of length " + std::to_string(xv.rows()) +
                                " too short for kernel " + std::to_string(kernel));
  }
  const int64_t cg_out = cout / groups;
  const ConstMatrixMap wmat(wv.data(), kernel * cg_in, cout);
  Tensor out({out_len, cout});
  MatrixMap omat = out.mat();
  RowMatrix cols;
  for (int64_t g = 0; g < groups; ++g) {
    im2col(xv, g * cg_in, cg_in, kernel, stride, padding, out_len, cols);
    omat.middleCols(g * cg_out, cg_out).noalias() = cols * wmat.middleCols(g * cg_out, cg_out);
  }
  omat.rowwise() += b.value().mat().row(0);

  return Variable::make(std::move(out), {x, w, b},
                        [kernel, cg_in, cout, cg_out, stride, padding, groups, out_len](Node& n) {
    const Tensor& xv = n.inputs[0]->value;
    const Tensor& wv = n.inputs[1]->value;
    const ConstMatrixMap gout(n.grad.data(), out_len, cout);
    if (auto* gb = input_grad(n, 2)) gb->mat().row(0) += gout.colwise().sum();
    Tensor* gw = input_grad(n, 1);
    Tensor* gx = input_grad(n, 0);
    if (!gw && !gx) return;
    const ConstMatrixMap wmat(wv.data(), kernel * cg_in, cout);
    RowMatrix cols;
    for (int64_t g = 0; g < groups; ++g) {
      if (gw) {
        im2col(xv, g * cg_in, cg_in, kernel, stride, padding, out_len, cols);
        MatrixMap gwmat(gw->data(), kernel * cg_in, cout);
        gwmat.middleCols(g * cg_out, cg_out).noalias() += cols.transpose() * gout.middleCols(g * cg_out, cg_out);
      }
      if (gx) {
        RowMatrix gcols = gout.middleCols(g * cg_out, cg_out) * wmat.middleCols(g * cg_out, cg_out).transpose();
        col2im_add(gcols, g * cg_in, cg_in, kernel, stride, padding, *gx);
      }
    }
  });
}

Variable weight_norm(const Variable& direction, const Variable& magnitude) {
  const Tensor& v = direction.value();
  const int64_t cout = v.cols();
  const int64_t rows = v.rows();
  if (magnitude.value().size() != cout) {
    throw std::invalid_argument("weight_norm: magnitude length must equal output channels");
  }
  auto norms = std::make_shared<std::vector<double>>(static_cast<size_t>(cout), 0.0);
  for (int64_t r = 0; r < rows; ++r)
    for (int64_t o = 0; o < cout; ++o) (*norms)[static_cast<size_t>(o)] += v.at(r, o) * v.at(r, o);
  for (int64_t o = 0; o < cout; ++o) {
    double& nrm = (*norms)[static_cast<size_t>(o)];
    nrm = std::sqrt(nrm);
    if (!(nrm > 0.0)) {
      throw std::invalid_argument("weight_norm: direction has zero norm for output channel " + std::to_string(o));
    }
  }
  Tensor out(v.shape());
  for (int64_t r = 0; r < rows; ++r)
    for (int64_t o = 0; o < cout; ++o)
      out.at(r, o) = magnitude.value()[o] * v.at(r, o) / (*norms)[static_cast<size_t>(o)];
  return Variable::make(std::move(out), {direction, magnitude}, [norms, rows, cout](Node& n) {
    const Tensor& v = n.inputs[0]->value;
    const Tensor& g = n.inputs[1]->value;
    std::vector<double> dot(static_cast<size_t>(cout), 0.0);
    for (int64_t r = 0; r < rows; ++r)
      for (int64_t o = 0; o < cout; ++o) dot[static_cast<size_t>(o)] += n.grad.at(r, o) * v.at(r, o);
    if (auto* gg = input_grad(n, 1)) {
      for (int64_t o = 0; o < cout; ++o) (*gg)[o] += dot[static_cast<size_t>(o)] / (*norms)[static_cast<size_t>(o)];
    }
    if (auto* gv = input_grad(n, 0)) {
      for (int64_t r = 0; r < rows; ++r) {
        for (int64_t o = 0; o < cout; ++o) {
          const double nrm = (*norms)[static_cast<size_t>(o)];
          gv->at(r, o) += g[o] / nrm * (n.grad.at(r, o) - dot[static_cast<size_t>(o)] / (nrm * nrm) * v.at(r, o));
        }
      }
    }
  });
}

Variable grad_scale(const Variable& x, double factor) {
  return Variable::make(x.value(), {x}, [factor](Node& n) {
    if (auto* gx = input_grad(n, 0)) {
      for (int64_t i = 0; i < gx->size(); ++i) (*gx)[i] += factor * n.grad[i];
    }
  });
}

Tensor softmax_rows(const Tensor& x) {
  Tensor out(x.shape());
  const int64_t rows = x.rows();
  const int64_t cols = x.cols();
  for (int64_t r = 0; r < rows; ++r) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int64_t c = 0; c < cols; ++c) mx = std::max(mx, x.at(r, c));
    double z = 0.0;
    for (int64_t c = 0; c < cols; ++c) {
      const double e = std::exp(x.at(r, c) - mx);
      out.at(r, c) = e;
      z += e;
    }
    for (int64_t c = 0; c < cols; ++c) out.at(r, c) /= z;
  }
  return out;
}

Variable softmax_rows(const Variable& x) {
  Tensor out = softmax_rows(x.value());
  return Variable::make(out, {x}, [out](Node& n) {
    auto* gx = input_grad(n, 0);
    if (!gx) return;
    const int64_t rows = out.rows();
    const int64_t cols = out.cols();
    for (int64_t r = 0; r < rows; ++r) {
      double dot = 0.0;
      for (int64_t c = 0; c < cols; ++c) dot += n.grad.at(r, c) * out.at(r, c);
      for (int64_t c = 0; c < cols; ++c) gx->at(r, c) += out.at(r, c) * (n.grad.at(r, c) - dot);
    }
  });
}

Variable log_softmax_rows(const Variable& x) {
  const Tensor& xv = x.value();
  Tensor out(xv.shape());
  const int64_t rows = xv.rows();
  const int64_t cols = xv.cols();
  for (int64_t r = 0; r < rows; ++r) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int64_t c = 0; c < cols; ++c) mx = std::max(mx, xv.at(r, c));
    double z = 0.0;
    for (int64_t c = 0; c < cols; ++c) z += std::exp(xv.at(r, c) - mx);
    const double lse = mx + std::log(z);
    for (int64_t c = 0; c < cols; ++c) out.at(r, c) = xv.at(r, c) - lse;
  }
  return Variable::make(out, {x}, [out, rows, cols](Node& n) {
    auto* gx = input_grad(n, 0);
    if (!gx) return;
    for (int64_t r = 0; r < rows; ++r) {
      double s = 0.0;
      for (int64_t c = 0; c < cols; ++c) s += n.grad.at(r, c);
      for (int64_t c = 0; c < cols; ++c) gx->at(r, c) += n.grad.at(r, c) - std::exp(out.at(r, c)) * s;
    }
  });
}

Variable dropout(const Variable& x, double p, Rng& rng) {
  if (p <= 0.0) return x;
  if (p >= 1.0) throw std::invalid_argument("dropout: p must be < 1");
  auto keep = std::make_shared<Tensor>(x.shape());
  const double s = 1.0 / (1.0 - p);
  Tensor out = x.value();
  for (int64_t i = 0; i < out.size(); ++i) {
    const double m = rng.uniform() >= p ? s : 0.0;
    (*keep)[i] = m;
    out[i] *= m;
  }
  return Variable::make(std::move(out), {x}, [keep](Node& n) {
    if (auto* gx = input_grad(n, 0)) {
      for (int64_t i = 0; i < gx->size(); ++i) (*gx)[i] += n.grad[i] * (*keep)[i];
    }
  });
}

Tensor one_hot_argmax_rows(const Tensor& x) {
  Tensor hard(x.shape(), 0.0);
  for (int64_t r = 0; r < x.rows(); ++r) {
    int64_t best = 0;
    for (int64_t c = 1; c < x.cols(); ++c)
      if (x.at(r, c) > x.at(r, best)) best = c;
    hard.at(r, best) = 1.0;
  }
  return hard;
}

GumbelSample gumbel_softmax(const Variable& logits, double tau, Rng& rng) {
  if (!(tau > 0.0)) throw std::invalid_argument("gumbel_softmax: tau must be positive");
  constexpr double kClamp = 1e-12;
  Tensor noise(logits.shape());
  for (double& g : noise.values()) {
    const double u = std::clamp(rng.uniform(), kClamp, 1.0 - kClamp);
    g = -std::log(-std::log(u));
  }
  Variable perturbed = scale(add(logits, constant(std::move(noise))), 1.0 / tau);
  Variable soft = softmax_rows(perturbed);
  return {one_hot_argmax_rows(perturbed.value()), soft};
}

Variable straight_through(const Tensor& hard, const Variable& soft) {
  if (!hard.same_shape(soft.value())) throw std::invalid_argument("straight_through: shape mismatch");
  return Variable::make(hard, {soft}, [](Node& n) {
    if (auto* gs = input_grad(n, 0)) *gs += n.grad;
  });
}

Variable concat_cols(const Variable& a, const Variable& b) {
  const int64_t rows = a.value().rows();
  if (b.value().rows() != rows) throw std::invalid_argument("concat_cols: row counts differ");
  const int64_t ca = a.value().cols();
  const int64_t cb = b.value().cols();
  Tensor out({rows, ca + cb});
  out.mat().leftCols(ca) = a.value().mat();
  out.mat().rightCols(cb) = b.value().mat();
  return Variable::make(std::move(out), {a, b}, [ca, cb](Node& n) {
    if (auto* ga = input_grad(n, 0)) ga->mat() += n.grad.mat().leftCols(ca);
    if (auto* gb = input_grad(n, 1)) gb->mat() += n.grad.mat().rightCols(cb);
  });
}

Variable concat_rows(const std::vector<Variable>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: no inputs");
  const int64_t cols = parts.front().value().cols();
  int64_t rows = 0;
  for (const auto& p : parts) {
    if (p.value().cols() != cols) throw std::invalid_argument("concat_rows: column counts differ");
    rows += p.value().rows();
  }
  Tensor out({rows, cols});
  int64_t r0 = 0;
  std::vector<int64_t> offsets;
  for (const auto& p : parts) {
    offsets.push_back(r0);
    std::copy(p.value().data(), p.value().data() + p.value().size(), out.data() + r0 * cols);
    r0 += p.value().rows();
  }
  return Variable::make(std::move(out), parts, [offsets, cols](Node& n) {
    for (size_t i = 0; i < n.inputs.size(); ++i) {
      if (auto* g = input_grad(n, i)) {
        const double* src = n.grad.data() + offsets[i] * cols;
        for (int64_t j = 0; j < g->size(); ++j) (*g)[j] += src[j];
      }
    }
  });
}

Variable slice_rows(const Variable& x, int64_t begin, int64_t end) {
  require_matrix(x, "slice_rows");
  const int64_t rows = x.value().rows();
  const int64_t cols = x.value().cols();
  if (begin < 0 || end > rows || begin > end) {
    throw std::invalid_argument("slice_rows: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                                ") outside " + std::to_string(rows) + " rows");
  }
  Tensor out({end - begin, cols});
  out.mat() = x.value().mat().middleRows(begin, end - begin);
  return Variable::make(std::move(out), {x}, [begin, end](Node& n) {
    if (auto* gx = input_grad(n, 0)) gx->mat().middleRows(begin, end - begin) += n.grad.mat();
  });
}

Variable slice_cols(const Variable& x, int64_t begin, int64_t end) {
  require_matrix(x, "slice_cols");
  const int64_t rows = x.value().rows();
  const int64_t cols = x.value().cols();
  if (begin < 0 || end > cols || begin > end) throw std::invalid_argument("slice_cols: range out of bounds");
  Tensor out({rows, end - begin});
  out.mat() = x.value().mat().middleCols(begin, end - begin);
  return Variable::make(std::move(out), {x}, [begin, end](Node& n) {
    if (auto* gx = input_grad(n, 0)) gx->mat().middleCols(begin, end - begin) += n.grad.mat();
  });
}

Variable gather_rows(const Variable& x, std::span<const int64_t> index) {
  require_matrix(x, "gather_rows");
  const int64_t rows = x.value().rows();
  const int64_t cols = x.value().cols();
  auto idx = std::make_shared<std::vector<int64_t>>(index.begin(), index.end());
  Tensor out({static_cast<int64_t>(idx->size()), cols});
  for (size_t i = 0; i < idx->size(); ++i) {
    const int64_t r = (*idx)[i];
    if (r < 0 || r >= rows) throw std::out_of_range("gather_rows: index " + std::to_string(r) + " out of range");
    out.mat().row(static_cast<int64_t>(i)) = x.value().mat().row(r);
  }
  return Variable::make(std::move(out), {x}, [idx](Node& n) {
    if (auto* gx = input_grad(n, 0)) {
      for (size_t i = 0; i < idx->size(); ++i) gx->mat().row((*idx)[i]) += n.grad.mat().row(static_cast<int64_t>(i));
    }
  });
}

Variable replace_rows(const Variable& x, const Variable& row, std::span<const int64_t> rows) {
  require_matrix(x, "replace_rows");
  const int64_t n_rows = x.value().rows();
  const int64_t cols = x.value().cols();
  if (row.value().size() != cols) throw std::invalid_argument("replace_rows: row length mismatch");
  auto masked = std::make_shared<std::vector<char>>(static_cast<size_t>(n_rows), 0);
  for (int64_t r : rows) {
    if (r < 0 || r >= n_rows) throw std::out_of_range("replace_rows: index " + std::to_string(r) + " out of range");
    (*masked)[static_cast<size_t>(r)] = 1;
  }
  Tensor out = x.value();
  for (int64_t r = 0; r < n_rows; ++r)
    if ((*masked)[static_cast<size_t>(r)]) out.mat().row(r) = row.value().mat().row(0);
  return Variable::make(std::move(out), {x, row}, [masked, n_rows](Node& n) {
    Tensor* gx = input_grad(n, 0);
    Tensor* gr = input_grad(n, 1);
    for (int64_t r = 0; r < n_rows; ++r) {
      if ((*masked)[static_cast<size_t>(r)]) {
        if (gr) gr->mat().row(0) += n.grad.mat().row(r);
      } else if (gx) {
        gx->mat().row(r) += n.grad.mat().row(r);
      }
    }
  });
}

Variable zero_rows_from(const Variable& x, int64_t begin) {
  require_matrix(x, "zero_rows_from");
  const int64_t rows = x.value().rows();
  begin = std::clamp<int64_t>(begin, 0, rows);
  if (begin == rows) return x;
  Tensor out = x.value();
  out.mat().bottomRows(rows - begin).setZero();
  return Variable::make(std::move(out), {x}, [begin](Node& n) {
    if (auto* gx = input_grad(n, 0)) gx->mat().topRows(begin) += n.grad.mat().topRows(begin);
  });
}

Variable attention(const Variable& q, const Variable& k, const Variable& v, int64_t heads, int64_t valid_keys,
                   double dropout_p, Rng* rng, Tensor* weights_out) {
  require_same_shape(q, k, "attention");
  require_same_shape(q, v, "attention");
  const int64_t time = q.value().rows();
  const int64_t dim = q.value().cols();
  if (heads <= 0 || dim % heads != 0) throw std::invalid_argument("attention: dim must be divisible by heads");
  if (valid_keys <= 0) throw std::invalid_argument("attention: all key positions are padding");
  valid_keys = std::min(valid_keys, time);
  const int64_t dh = dim / heads;
  const double scale_f = 1.0 / std::sqrt(static_cast<double>(dh));
  const bool drop = dropout_p > 0.0 && rng != nullptr;

  // Per head: attention weights [time, valid_keys] and dropout multipliers.
  auto probs = std::make_shared<std::vector<RowMatrix>>(static_cast<size_t>(heads));
  auto keep = std::make_shared<std::vector<RowMatrix>>(drop ? static_cast<size_t>(heads) : 0);
  const ConstMatrixMap qm = q.value().mat();
  const ConstMatrixMap km = k.value().mat();
  const ConstMatrixMap vm = v.value().mat();
  Tensor out({time, dim});
  MatrixMap om = out.mat();
  if (weights_out) *weights_out = Tensor({heads, time, time}, 0.0);
  for (int64_t h = 0; h < heads; ++h) {
    RowMatrix s = (qm.middleCols(h * dh, dh) * km.middleCols(h * dh, dh).topRows(valid_keys).transpose()) * scale_f;
    for (int64_t t = 0; t < time; ++t) {
      const double mx = s.row(t).maxCoeff();
      s.row(t) = (s.row(t).array() - mx).exp();
      s.row(t) /= s.row(t).sum();
    }
    if (weights_out) {
      for (int64_t t = 0; t < time; ++t)
        for (int64_t j = 0; j < valid_keys; ++j) (*weights_out)[(h * time + t) * time + j] = s(t, j);
    }
    RowMatrix a = s;
    if (drop) {
      RowMatrix m(time, valid_keys);
      const double inv = 1.0 / (1.0 - dropout_p);
      for (int64_t i = 0; i < m.size(); ++i) m.data()[i] = rng->uniform() >= dropout_p ? inv : 0.0;
      a = a.cwiseProduct(m);
      (*keep)[static_cast<size_t>(h)] = std::move(m);
    }
    om.middleCols(h * dh, dh).noalias() = a * vm.middleCols(h * dh, dh).topRows(valid_keys);
    (*probs)[static_cast<size_t>(h)] = std::move(s);
  }

  return Variable::make(std::move(out), {q, k, v},
                        [probs, keep, heads, dh, valid_keys, scale_f, drop](Node& n) {
    const ConstMatrixMap qm = std::as_const(n.inputs[0]->value).mat();
    const ConstMatrixMap km = std::as_const(n.inputs[1]->value).mat();
    const ConstMatrixMap vm = std::as_const(n.inputs[2]->value).mat();
    const ConstMatrixMap gout = std::as_const(n.grad).mat();
    Tensor* gq = input_grad(n, 0);
    Tensor* gk = input_grad(n, 1);
    Tensor* gv = input_grad(n, 2);
    for (int64_t h = 0; h < heads; ++h) {
      const RowMatrix& p = (*probs)[static_cast<size_t>(h)];
      const auto go = gout.middleCols(h * dh, dh);
      RowMatrix a = drop ? RowMatrix(p.cwiseProduct((*keep)[static_cast<size_t>(h)])) : p;
      if (gv) gv->mat().middleCols(h * dh, dh).topRows(valid_keys).noalias() += a.transpose() * go;
      if (!gq && !gk) continue;
      RowMatrix da = go * vm.middleCols(h * dh, dh).topRows(valid_keys).transpose();
      if (drop) da = da.cwiseProduct((*keep)[static_cast<size_t>(h)]);
      // softmax backward
      Eigen::VectorXd rowdot = (da.cwiseProduct(p)).rowwise().sum();
      RowMatrix ds = p.cwiseProduct(da.colwise() - rowdot) * scale_f;
      if (gq) gq->mat().middleCols(h * dh, dh).noalias() += ds * km.middleCols(h * dh, dh).topRows(valid_keys);
      if (gk) gk->mat().middleCols(h * dh, dh).topRows(valid_keys).noalias() += ds.transpose() * qm.middleCols(h * dh, dh);
    }
  });
}

Variable l2_normalize_rows(const Variable& x) {
  require_matrix(x, "l2_normalize_rows");
  const int64_t rows = x.value().rows();
  auto norms = std::make_shared<std::vector<double>>(static_cast<size_t>(rows));
  Tensor out = x.value();
  for (int64_t r = 0; r < rows; ++r) {
    const double nrm = out.mat().row(r).norm();
    if (nrm == 0.0) throw std::invalid_argument("cosine similarity of a zero-norm vector (row " + std::to_string(r) + ")");
    (*norms)[static_cast<size_t>(r)] = nrm;
    out.mat().row(r) /= nrm;
  }
  return Variable::make(out, {x}, [out, norms, rows](Node& n) {
    auto* gx = input_grad(n, 0);
    if (!gx) return;
    for (int64_t r = 0; r < rows; ++r) {
      const double dot = n.grad.mat().row(r).dot(out.mat().row(r));
      gx->mat().row(r) += (n.grad.mat().row(r) - dot * out.mat().row(r)) / (*norms)[static_cast<size_t>(r)];
    }
  });
}

Variable rowwise_dot(const Variable& a, const Variable& b) {
  require_same_shape(a, b, "rowwise_dot");
  const int64_t rows = a.value().rows();
  Tensor out({rows});
  for (int64_t r = 0; r < rows; ++r) out[r] = a.value().mat().row(r).dot(b.value().mat().row(r));
  return Variable::make(std::move(out), {a, b}, [rows](Node& n) {
    const Tensor& av = n.inputs[0]->value;
    const Tensor& bv = n.inputs[1]->value;
    Tensor* ga = input_grad(n, 0);
    Tensor* gb = input_grad(n, 1);
    for (int64_t r = 0; r < rows; ++r) {
      if (ga) ga->mat().row(r) += n.grad[r] * bv.mat().row(r);
      if (gb) gb->mat().row(r) += n.grad[r] * av.mat().row(r);
    }
  });
}

Variable cross_entropy_sum(const Variable& logits, std::span<const int64_t> targets) {
  const Tensor& x = logits.value();
  const int64_t rows = x.rows();
  const int64_t cols = x.cols();
  if (static_cast<int64_t>(targets.size()) != rows) throw std::invalid_argument("cross_entropy_sum: target count mismatch");
  auto tg = std::make_shared<std::vector<int64_t>>(targets.begin(), targets.end());
  Tensor probs = softmax_rows(x);
  double loss = 0.0;
  for (int64_t r = 0; r < rows; ++r) {
    const int64_t t = (*tg)[static_cast<size_t>(r)];
    if (t < 0 || t >= cols) throw std::out_of_range("cross_entropy_sum: target out of range");
    double mx = -std::numeric_limits<double>::infinity();
    for (int64_t c = 0; c < cols; ++c) mx = std::max(mx, x.at(r, c));
    double z = 0.0;
    for (int64_t c = 0; c < cols; ++c) z += std::exp(x.at(r, c) - mx);
    loss += mx + std::log(z) - x.at(r, t);
  }
  return Variable::make(Tensor::scalar(loss), {logits}, [probs, tg, rows, cols](Node& n) {
    auto* gx = input_grad(n, 0);
    if (!gx) return;
    const double g = n.grad[0];
    for (int64_t r = 0; r < rows; ++r) {
      for (int64_t c = 0; c < cols; ++c) gx->at(r, c) += g * probs.at(r, c);
      gx->at(r, (*tg)[static_cast<size_t>(r)]) -= g;
    }
  });
}

Variable sum(const Variable& x) {
  double s = 0.0;
  for (double v : x.value().values()) s += v;
  return Variable::make(Tensor::scalar(s), {x}, [](Node& n) {
    if (auto* gx = input_grad(n, 0)) {
      for (int64_t i = 0; i < gx->size(); ++i) (*gx)[i] += n.grad[0];
    }
  });
}

Variable mean(const Variable& x) { return scale(sum(x), 1.0 / static_cast<double>(x.value().size())); }

Variable mean_rows(const Variable& x) {
  const int64_t rows = x.value().rows();
  if (rows == 0) throw std::invalid_argument("mean_rows: no rows");
  Tensor out({x.value().cols()});
  out.mat().row(0) = x.value().mat().colwise().mean();
  return Variable::make(std::move(out), {x}, [rows](Node& n) {
    if (auto* gx = input_grad(n, 0)) gx->mat().rowwise() += n.grad.mat().row(0) / static_cast<double>(rows);
  });
}

Variable mean_square(const Variable& x) {
  const double count = static_cast<double>(x.value().size());
  double s = 0.0;
  for (double v : x.value().values()) s += v * v;
  return Variable::make(Tensor::scalar(s / count), {x}, [count](Node& n) {
    if (auto* gx = input_grad(n, 0)) {
      const Tensor& xv = n.inputs[0]->value;
      for (int64_t i = 0; i < gx->size(); ++i) (*gx)[i] += n.grad[0] * 2.0 * xv[i] / count;
    }
  });
}

Variable perplexity(const Variable& p) {
  double h = 0.0;
  for (double v : p.value().values())
    if (v > 0.0) h -= v * std::log(v);
  const double ppl = std::exp(h);
  return Variable::make(Tensor::scalar(ppl), {p}, [ppl](Node& n) {
    auto* gp = input_grad(n, 0);
    if (!gp) return;
    const Tensor& pv = n.inputs[0]->value;
    for (int64_t i = 0; i < gp->size(); ++i) {
      const double lp = std::log(std::max(pv[i], std::numeric_limits<double>::min()));
      (*gp)[i] += n.grad[0] * ppl * -(lp + 1.0);
    }
  });
}

}  // namespace w2v::ops
