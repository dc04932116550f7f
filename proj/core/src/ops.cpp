#include "crossview/ops.hpp"

#include <cblas.h>
#include <omp.h>

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "crossview/errors.hpp"

namespace crossview {

namespace {

// BLAS runs single-threaded; parallelism lives in our per-image / per-channel
// loops where every output element has a fixed reduction order, so results are
// bitwise reproducible for any thread count.
struct BlasSetup {
  BlasSetup() { openblas_set_num_threads(1); }
};
const BlasSetup blas_setup;

constexpr int kK = ConvLayer::kKernelSize;
constexpr int kS = ConvLayer::kStride;

// Gathers one image into a (C*kK*kK) x (OH*OW) patch matrix. Windows start at
// the top-left corner; only bottom/right positions can fall outside and those
// read as zero.
void im2col(const double* x, int C, int H, int W, int OH, int OW, double* col) {
  const int64_t spatial = static_cast<int64_t>(OH) * OW;
  for (int c = 0; c < C; ++c) {
    const double* plane = x + static_cast<int64_t>(c) * H * W;
    for (int kh = 0; kh < kK; ++kh) {
      for (int kw = 0; kw < kK; ++kw) {
        double* row = col + ((static_cast<int64_t>(c) * kK + kh) * kK + kw) * spatial;
        for (int oy = 0; oy < OH; ++oy) {
          const int iy = oy * kS + kh;
          double* dst = row + static_cast<int64_t>(oy) * OW;
          if (iy >= H) {
            std::memset(dst, 0, sizeof(double) * static_cast<size_t>(OW));
            continue;
          }
          const double* src = plane + static_cast<int64_t>(iy) * W;
          for (int ox = 0; ox < OW; ++ox) {
            const int ix = ox * kS + kw;
            dst[ox] = ix < W ? src[ix] : 0.0;
          }
        }
      }
    }
  }
}

void col2im_add(const double* col, int C, int H, int W, int OH, int OW, double* dx) {
  const int64_t spatial = static_cast<int64_t>(OH) * OW;
  for (int c = 0; c < C; ++c) {
    double* plane = dx + static_cast<int64_t>(c) * H * W;
    for (int kh = 0; kh < kK; ++kh) {
      for (int kw = 0; kw < kK; ++kw) {
        const double* row = col + ((static_cast<int64_t>(c) * kK + kh) * kK + kw) * spatial;
        for (int oy = 0; oy < OH; ++oy) {
          const int iy = oy * kS + kh;
          if (iy >= H) continue;
          const double* src = row + static_cast<int64_t>(oy) * OW;
          double* dst = plane + static_cast<int64_t>(iy) * W;
          for (int ox = 0; ox < OW; ++ox) {
            const int ix = ox * kS + kw;
            if (ix < W) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

}  // namespace

ConvLayer::ConvLayer(int in_channels, int out_channels)
    : weight({out_channels, in_channels, kK, kK}), bias({out_channels}) {}

Tensor conv2d(const Tensor& x, const ConvLayer& layer) {
  if (x.ndim() != 4) throw std::invalid_argument("conv2d: input must be NCHW");
  const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  if (C != layer.in_channels())
    throw std::invalid_argument("conv2d: input channels " + std::to_string(C) +
                                " != layer in_channels " + std::to_string(layer.in_channels()));
  const int K = layer.out_channels();
  const int OH = conv_out_extent(H), OW = conv_out_extent(W);
  const int64_t spatial = static_cast<int64_t>(OH) * OW;
  const int CK = C * kK * kK;

  Tensor y({N, K, OH, OW});
#pragma omp parallel
  {
    std::vector<double> col(static_cast<size_t>(CK) * spatial);
#pragma omp for schedule(static)
    for (int n = 0; n < N; ++n) {
      im2col(x.data() + x.offset4(n, 0, 0, 0), C, H, W, OH, OW, col.data());
      double* yn = y.data() + y.offset4(n, 0, 0, 0);
      cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, K, static_cast<int>(spatial), CK, 1.0,
                  layer.weight.data(), CK, col.data(), static_cast<int>(spatial), 0.0, yn,
                  static_cast<int>(spatial));
      for (int k = 0; k < K; ++k) {
        const double b = layer.bias[k];
        double* row = yn + static_cast<int64_t>(k) * spatial;
        for (int64_t s = 0; s < spatial; ++s) row[s] += b;
      }
    }
  }
  if (!y.all_finite()) throw NumericError("conv2d: non-finite output");
  return y;
}

void conv2d_backward(Tensor& x, ConvLayer& layer, const Tensor& y) {
  const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int K = layer.out_channels();
  const int OH = y.dim(2), OW = y.dim(3);
  const int64_t spatial = static_cast<int64_t>(OH) * OW;
  const int CK = C * kK * kK;
  const double* dy = y.grad();

  const bool need_dw = layer.weight.grad_enabled();
  const bool need_dx = x.grad_enabled();

  std::vector<double> cols;
  if (need_dw || need_dx) {
    cols.resize(static_cast<size_t>(N) * CK * spatial);
#pragma omp parallel for schedule(static)
    for (int n = 0; n < N; ++n)
      im2col(x.data() + x.offset4(n, 0, 0, 0), C, H, W, OH, OW,
             cols.data() + static_cast<size_t>(n) * CK * spatial);
  }

  if (need_dw) {
    // Each thread owns a block of output channels and walks the batch in
    // order, so every dW element sees a fixed accumulation sequence.
    double* dW = layer.weight.grad();
#pragma omp parallel
    {
      const int threads = omp_get_num_threads();
      const int tid = omp_get_thread_num();
      const int per = (K + threads - 1) / threads;
      const int r0 = std::min(K, tid * per);
      const int r1 = std::min(K, r0 + per);
      if (r1 > r0) {
        for (int n = 0; n < N; ++n) {
          const double* dyn = dy + (static_cast<int64_t>(n) * K + r0) * spatial;
          const double* coln = cols.data() + static_cast<size_t>(n) * CK * spatial;
          cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasTrans, r1 - r0, CK,
                      static_cast<int>(spatial), 1.0, dyn, static_cast<int>(spatial), coln,
                      static_cast<int>(spatial), 1.0, dW + static_cast<int64_t>(r0) * CK, CK);
        }
      }
    }
  }

  if (layer.bias.grad_enabled()) {
    double* db = layer.bias.grad();
    for (int n = 0; n < N; ++n) {
      for (int k = 0; k < K; ++k) {
        const double* row = dy + (static_cast<int64_t>(n) * K + k) * spatial;
        double acc = 0.0;
        for (int64_t s = 0; s < spatial; ++s) acc += row[s];
        db[k] += acc;
      }
    }
  }

  if (need_dx) {
#pragma omp parallel
    {
      std::vector<double> dcol(static_cast<size_t>(CK) * spatial);
#pragma omp for schedule(static)
      for (int n = 0; n < N; ++n) {
        const double* dyn = dy + static_cast<int64_t>(n) * K * spatial;
        cblas_dgemm(CblasRowMajor, CblasTrans, CblasNoTrans, CK, static_cast<int>(spatial), K, 1.0,
                    layer.weight.data(), CK, dyn, static_cast<int>(spatial), 0.0, dcol.data(),
                    static_cast<int>(spatial));
        col2im_add(dcol.data(), C, H, W, OH, OW, x.grad() + x.offset4(n, 0, 0, 0));
      }
    }
  }
}

Tensor leaky_relu(const Tensor& x) {
  Tensor y(x.shape());
  const int64_t n = x.size();
  const double* xv = x.data();
  double* yv = y.data();
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) yv[i] = xv[i] >= 0.0 ? xv[i] : kLeakySlope * xv[i];
  return y;
}

void leaky_relu_backward(Tensor& x, const Tensor& y) {
  if (!x.grad_enabled()) return;
  const int64_t n = x.size();
  const double* xv = x.data();
  const double* dy = y.grad();
  double* dx = x.grad();
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) dx[i] += dy[i] * (xv[i] >= 0.0 ? 1.0 : kLeakySlope);
}

BatchNormLayer::BatchNormLayer(int channels)
    : gamma({channels}, 1.0), beta({channels}), running_mean({channels}), running_var({channels}, 1.0) {}

Tensor batch_norm(const Tensor& x, BatchNormLayer& layer, Mode mode) {
  if (x.ndim() != 4) throw std::invalid_argument("batch_norm: input must be NCHW");
  const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  if (C != layer.channels()) throw std::invalid_argument("batch_norm: channel mismatch");
  const int64_t count = static_cast<int64_t>(N) * H * W;
  const int64_t plane = static_cast<int64_t>(H) * W;
  Tensor y(x.shape());

  if (mode == Mode::kTrain) {
    if (count < 2)
      throw std::invalid_argument("batch_norm: train mode needs >= 2 elements per channel");
    layer.saved_mean.assign(static_cast<size_t>(C), 0.0);
    layer.saved_invstd.assign(static_cast<size_t>(C), 0.0);
#pragma omp parallel for schedule(static)
    for (int c = 0; c < C; ++c) {
      double sum = 0.0;
      for (int n = 0; n < N; ++n) {
        const double* p = x.data() + x.offset4(n, c, 0, 0);
        for (int64_t i = 0; i < plane; ++i) sum += p[i];
      }
      const double mean = sum / static_cast<double>(count);
      double sq = 0.0;
      for (int n = 0; n < N; ++n) {
        const double* p = x.data() + x.offset4(n, c, 0, 0);
        for (int64_t i = 0; i < plane; ++i) {
          const double d = p[i] - mean;
          sq += d * d;
        }
      }
      const double var = sq / static_cast<double>(count);  // biased, also fed to running stats
      const double invstd = 1.0 / std::sqrt(var + layer.epsilon);
      layer.saved_mean[static_cast<size_t>(c)] = mean;
      layer.saved_invstd[static_cast<size_t>(c)] = invstd;
      layer.running_mean[c] = (1.0 - layer.momentum) * layer.running_mean[c] + layer.momentum * mean;
      layer.running_var[c] = (1.0 - layer.momentum) * layer.running_var[c] + layer.momentum * var;
      const double g = layer.gamma[c], b = layer.beta[c];
      for (int n = 0; n < N; ++n) {
        const double* p = x.data() + x.offset4(n, c, 0, 0);
        double* q = y.data() + y.offset4(n, c, 0, 0);
        for (int64_t i = 0; i < plane; ++i) q[i] = g * (p[i] - mean) * invstd + b;
      }
    }
  } else {
#pragma omp parallel for schedule(static)
    for (int c = 0; c < C; ++c) {
      const double invstd = 1.0 / std::sqrt(layer.running_var[c] + layer.epsilon);
      const double mean = layer.running_mean[c];
      const double g = layer.gamma[c], b = layer.beta[c];
      for (int n = 0; n < N; ++n) {
        const double* p = x.data() + x.offset4(n, c, 0, 0);
        double* q = y.data() + y.offset4(n, c, 0, 0);
        for (int64_t i = 0; i < plane; ++i) q[i] = g * (p[i] - mean) * invstd + b;
      }
    }
  }
  return y;
}

void batch_norm_backward(Tensor& x, BatchNormLayer& layer, const Tensor& y, Mode mode) {
  const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int64_t count = static_cast<int64_t>(N) * H * W;
  const int64_t plane = static_cast<int64_t>(H) * W;
  const double* dy = y.grad();
  const bool need_dx = x.grad_enabled();
  const bool need_dg = layer.gamma.grad_enabled();
  const bool need_db = layer.beta.grad_enabled();

  if (mode == Mode::kTrain && layer.saved_mean.size() != static_cast<size_t>(C))
    throw std::logic_error("batch_norm_backward: no cached train-mode statistics");

#pragma omp parallel for schedule(static)
  for (int c = 0; c < C; ++c) {
    const double mean = mode == Mode::kTrain ? layer.saved_mean[static_cast<size_t>(c)]
                                             : layer.running_mean[c];
    const double invstd = mode == Mode::kTrain
                              ? layer.saved_invstd[static_cast<size_t>(c)]
                              : 1.0 / std::sqrt(layer.running_var[c] + layer.epsilon);
    double sum_dy = 0.0, sum_dy_xhat = 0.0;
    for (int n = 0; n < N; ++n) {
      const double* xp = x.data() + x.offset4(n, c, 0, 0);
      const double* dyp = dy + x.offset4(n, c, 0, 0);
      for (int64_t i = 0; i < plane; ++i) {
        sum_dy += dyp[i];
        sum_dy_xhat += dyp[i] * (xp[i] - mean) * invstd;
      }
    }
    if (need_dg) layer.gamma.grad()[c] += sum_dy_xhat;
    if (need_db) layer.beta.grad()[c] += sum_dy;
    if (!need_dx) continue;
    const double g = layer.gamma[c];
    if (mode == Mode::kTrain) {
      const double inv_count = 1.0 / static_cast<double>(count);
      for (int n = 0; n < N; ++n) {
        const double* xp = x.data() + x.offset4(n, c, 0, 0);
        const double* dyp = dy + x.offset4(n, c, 0, 0);
        double* dxp = x.grad() + x.offset4(n, c, 0, 0);
        for (int64_t i = 0; i < plane; ++i) {
          const double xhat = (xp[i] - mean) * invstd;
          dxp[i] += g * invstd * (dyp[i] - sum_dy * inv_count - xhat * sum_dy_xhat * inv_count);
        }
      }
    } else {
      for (int n = 0; n < N; ++n) {
        const double* dyp = dy + x.offset4(n, c, 0, 0);
        double* dxp = x.grad() + x.offset4(n, c, 0, 0);
        for (int64_t i = 0; i < plane; ++i) dxp[i] += g * invstd * dyp[i];
      }
    }
  }
}

Tensor resize_bilinear(const Tensor& x, int out_h, int out_w) {
  if (x.ndim() != 4) throw std::invalid_argument("resize_bilinear: input must be NCHW");
  if (out_h < 1 || out_w < 1) throw std::invalid_argument("resize_bilinear: output dims must be >= 1");
  const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  Tensor y({N, C, out_h, out_w});
  const double sy = static_cast<double>(H) / out_h;
  const double sx = static_cast<double>(W) / out_w;
#pragma omp parallel for schedule(static)
  for (int nc = 0; nc < N * C; ++nc) {
    const double* src = x.data() + static_cast<int64_t>(nc) * H * W;
    double* dst = y.data() + static_cast<int64_t>(nc) * out_h * out_w;
    for (int oy = 0; oy < out_h; ++oy) {
      double fy = (oy + 0.5) * sy - 0.5;
      fy = std::min(std::max(fy, 0.0), static_cast<double>(H - 1));
      const int y0 = static_cast<int>(std::floor(fy));
      const int y1 = std::min(y0 + 1, H - 1);
      const double wy = fy - y0;
      for (int ox = 0; ox < out_w; ++ox) {
        double fx = (ox + 0.5) * sx - 0.5;
        fx = std::min(std::max(fx, 0.0), static_cast<double>(W - 1));
        const int x0 = static_cast<int>(std::floor(fx));
        const int x1 = std::min(x0 + 1, W - 1);
        const double wx = fx - x0;
        const double top = src[y0 * W + x0] * (1.0 - wx) + src[y0 * W + x1] * wx;
        const double bot = src[y1 * W + x0] * (1.0 - wx) + src[y1 * W + x1] * wx;
        dst[oy * out_w + ox] = top * (1.0 - wy) + bot * wy;
      }
    }
  }
  return y;
}

void resize_bilinear_backward(Tensor& x, const Tensor& y) {
  if (!x.grad_enabled()) return;
  const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int out_h = y.dim(2), out_w = y.dim(3);
  const double sy = static_cast<double>(H) / out_h;
  const double sx = static_cast<double>(W) / out_w;
#pragma omp parallel for schedule(static)
  for (int nc = 0; nc < N * C; ++nc) {
    const double* dyp = y.grad() + static_cast<int64_t>(nc) * out_h * out_w;
    double* dxp = x.grad() + static_cast<int64_t>(nc) * H * W;
    for (int oy = 0; oy < out_h; ++oy) {
      double fy = (oy + 0.5) * sy - 0.5;
      fy = std::min(std::max(fy, 0.0), static_cast<double>(H - 1));
      const int y0 = static_cast<int>(std::floor(fy));
      const int y1 = std::min(y0 + 1, H - 1);
      const double wy = fy - y0;
      for (int ox = 0; ox < out_w; ++ox) {
        double fx = (ox + 0.5) * sx - 0.5;
        fx = std::min(std::max(fx, 0.0), static_cast<double>(W - 1));
        const int x0 = static_cast<int>(std::floor(fx));
        const int x1 = std::min(x0 + 1, W - 1);
        const double wx = fx - x0;
        const double g = dyp[oy * out_w + ox];
        dxp[y0 * W + x0] += g * (1.0 - wx) * (1.0 - wy);
        dxp[y0 * W + x1] += g * wx * (1.0 - wy);
        dxp[y1 * W + x0] += g * (1.0 - wx) * wy;
        dxp[y1 * W + x1] += g * wx * wy;
      }
    }
  }
}

Tensor concat_channels(const std::vector<const Tensor*>& xs) {
  if (xs.empty()) throw std::invalid_argument("concat_channels: empty input list");
  const int N = xs[0]->dim(0), H = xs[0]->dim(2), W = xs[0]->dim(3);
  int C = 0;
  for (const Tensor* t : xs) {
    if (t->ndim() != 4 || t->dim(0) != N || t->dim(2) != H || t->dim(3) != W)
      throw std::invalid_argument("concat_channels: mismatched non-channel dims");
    C += t->dim(1);
  }
  Tensor y({N, C, H, W});
  const int64_t plane = static_cast<int64_t>(H) * W;
#pragma omp parallel for schedule(static)
  for (int n = 0; n < N; ++n) {
    double* dst = y.data() + y.offset4(n, 0, 0, 0);
    for (const Tensor* t : xs) {
      const int64_t len = static_cast<int64_t>(t->dim(1)) * plane;
      std::memcpy(dst, t->data() + static_cast<int64_t>(n) * len, sizeof(double) * static_cast<size_t>(len));
      dst += len;
    }
  }
  return y;
}

void concat_channels_backward(const std::vector<Tensor*>& xs, const Tensor& y) {
  const int N = y.dim(0), H = y.dim(2), W = y.dim(3);
  const int64_t plane = static_cast<int64_t>(H) * W;
#pragma omp parallel for schedule(static)
  for (int n = 0; n < N; ++n) {
    const double* src = y.grad() + y.offset4(n, 0, 0, 0);
    for (Tensor* t : xs) {
      const int64_t len = static_cast<int64_t>(t->dim(1)) * plane;
      if (t->grad_enabled()) {
        double* dst = t->grad() + static_cast<int64_t>(n) * len;
        for (int64_t i = 0; i < len; ++i) dst[i] += src[i];
      }
      src += len;
    }
  }
}

namespace {

double pow_fast(double base, double e) {
  if (e == 1.0) return base;
  if (e == 2.0) return base * base;
  if (e == 3.0) return base * base * base;
  return std::pow(base, e);
}

}  // namespace

Tensor gem_pool(const Tensor& x, double p) {
  if (x.ndim() != 4) throw std::invalid_argument("gem_pool: input must be NCHW");
  if (p < 1.0) throw std::invalid_argument("gem_pool: p must be >= 1");
  const int N = x.dim(0), C = x.dim(1);
  const int64_t plane = static_cast<int64_t>(x.dim(2)) * x.dim(3);
  Tensor y({N, C});
#pragma omp parallel for schedule(static)
  for (int nc = 0; nc < N * C; ++nc) {
    const double* src = x.data() + static_cast<int64_t>(nc) * plane;
    double acc = 0.0;
    for (int64_t i = 0; i < plane; ++i) acc += pow_fast(std::max(src[i], kGemClamp), p);
    y[nc] = std::pow(acc / static_cast<double>(plane), 1.0 / p);
  }
  return y;
}

void gem_pool_backward(Tensor& x, double p, const Tensor& y) {
  if (!x.grad_enabled()) return;
  const int N = x.dim(0), C = x.dim(1);
  const int64_t plane = static_cast<int64_t>(x.dim(2)) * x.dim(3);
#pragma omp parallel for schedule(static)
  for (int nc = 0; nc < N * C; ++nc) {
    const double* src = x.data() + static_cast<int64_t>(nc) * plane;
    double* dst = x.grad() + static_cast<int64_t>(nc) * plane;
    const double yv = y[nc];
    const double dyv = y.grad()[nc];
    const double scale = dyv * pow_fast(yv, 1.0 - p) / static_cast<double>(plane);
    for (int64_t i = 0; i < plane; ++i) {
      if (src[i] > kGemClamp) dst[i] += scale * pow_fast(src[i], p - 1.0);
    }
  }
}

namespace {

void l2_rows(const Tensor& x, int& rows, int& dim) {
  if (x.ndim() == 1) {
    rows = 1;
    dim = x.dim(0);
  } else if (x.ndim() == 2) {
    rows = x.dim(0);
    dim = x.dim(1);
  } else {
    throw std::invalid_argument("l2_normalize: input must be a vector or row matrix");
  }
}

}  // namespace

Tensor l2_normalize(const Tensor& x) {
  int rows, dim;
  l2_rows(x, rows, dim);
  Tensor y(x.shape());
  for (int r = 0; r < rows; ++r) {
    const double* src = x.data() + static_cast<int64_t>(r) * dim;
    double* dst = y.data() + static_cast<int64_t>(r) * dim;
    double sq = 0.0;
    for (int i = 0; i < dim; ++i) sq += src[i] * src[i];
    const double norm = std::sqrt(sq);
    if (norm == 0.0) throw NumericError("l2_normalize: zero vector");
    for (int i = 0; i < dim; ++i) dst[i] = src[i] / norm;
  }
  return y;
}

void l2_normalize_backward(Tensor& x, const Tensor& y) {
  if (!x.grad_enabled()) return;
  int rows, dim;
  l2_rows(x, rows, dim);
  for (int r = 0; r < rows; ++r) {
    const double* xv = x.data() + static_cast<int64_t>(r) * dim;
    const double* yv = y.data() + static_cast<int64_t>(r) * dim;
    const double* dy = y.grad() + static_cast<int64_t>(r) * dim;
    double* dx = x.grad() + static_cast<int64_t>(r) * dim;
    double sq = 0.0, dot = 0.0;
    for (int i = 0; i < dim; ++i) {
      sq += xv[i] * xv[i];
      dot += yv[i] * dy[i];
    }
    const double norm = std::sqrt(sq);
    for (int i = 0; i < dim; ++i) dx[i] += (dy[i] - yv[i] * dot) / norm;
  }
}

}  // namespace crossview
