// Acceptance suite: runs every acceptance criterion and prints one pass/fail
// line per criterion. Exits nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>
#include <vector>

#include "crossview/checkpoint.hpp"
#include "crossview/evaluation.hpp"
#include "crossview/geometry.hpp"
#include "crossview/loss.hpp"
#include "crossview/model.hpp"
#include "crossview/ops.hpp"
#include "crossview/optim.hpp"
#include "crossview/pipeline.hpp"
#include "crossview/synthetic.hpp"

namespace fs = std::filesystem;
using namespace crossview;
using Clock = std::chrono::steady_clock;

namespace {

// ---- criterion 9/10/11 training recipe (desk-scale directional reproduction)
// The channel schedule is slimmed from the default so nine CPU training runs
// fit the runtime budget; the learning rate is raised accordingly. Everything
// else (B=12, alpha=10, p=3, exhaustive mining, augment off) matches the
// training contract.
const std::vector<int> kAccSchedule = {16, 32, 64, 96, 96, 96, 96};
constexpr double kAccLr = 1e-3;
constexpr int64_t kAccSteps = 500;
constexpr int kAccBatch = 12;
constexpr int kAccTrainLocations = 400;
constexpr int kAccTestLocations = 200;

struct CriterionResult {
  int number;
  bool pass;
  std::string detail;
};

std::vector<CriterionResult> g_results;
fs::path g_work;

void report(int number, bool pass, const std::string& detail) {
  g_results.push_back({number, pass, detail});
  std::cout << (pass ? "[PASS] " : "[FAIL] ") << "criterion " << number << ": " << detail
            << std::endl;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>());
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1.0}); }

double max_rel_err(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0.0;
  for (size_t i = 0; i < a.size(); ++i) worst = std::max(worst, rel_err(a[i], b[i]));
  return worst;
}

std::vector<double> finite_diff(Tensor& x, const std::function<double()>& eval, double h = 1e-4) {
  std::vector<double> g(static_cast<size_t>(x.size()));
  for (int64_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + h;
    const double up = eval();
    x[i] = saved - h;
    const double down = eval();
    x[i] = saved;
    g[static_cast<size_t>(i)] = (up - down) / (2.0 * h);
  }
  return g;
}

void fill_random(Tensor& t, Rng& rng, double lo = -1.0, double hi = 1.0) {
  for (int64_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
}

// ---------------------------------------------------------------- criterion 1
void criterion_1() {
  const auto t0 = Clock::now();
  bool ok = true;
  std::ostringstream detail;
  const std::vector<std::pair<int, size_t>> cases = {{1, 0}, {2, 4}, {3, 12}, {12, 264}};
  for (auto [b, want] : cases) {
    const size_t got = exhaustive_triplets(b).size();
    if (got != want) {
      ok = false;
      detail << "B=" << b << " gave " << got << " triplets (want " << want << "); ";
    }
  }
  // B=3 set equals brute-force enumeration
  std::set<std::tuple<int, int, int, int>> expect;
  for (int side = 0; side < 2; ++side)
    for (int a = 0; a < 3; ++a)
      for (int n = 0; n < 3; ++n)
        if (n != a) expect.insert({side, a, a, n});
  std::set<std::tuple<int, int, int, int>> got_set;
  for (const Triplet& t : exhaustive_triplets(3))
    got_set.insert({t.anchor_side == Triplet::Side::kGround ? 0 : 1, t.anchor, t.positive, t.negative});
  if (got_set != expect) {
    ok = false;
    detail << "B=3 set differs from brute force; ";
  }
  const double secs = seconds_since(t0);
  if (secs >= 1.0) {
    ok = false;
    detail << "runtime " << secs << "s >= 1s; ";
  }
  report(1, ok, "miner cardinality 2B(B-1) for B in {1,2,3,12}, B=3 set == brute force (" +
                    std::to_string(secs) + "s)");
}

// ---------------------------------------------------------------- criterion 2
void criterion_2() {
  bool ok = true;
  std::ostringstream detail;
  if (std::abs(weighted_soft_margin(0.0, 10.0) - std::log(2.0)) > 1e-12) {
    ok = false;
    detail << "equidistant != ln 2; ";
  }
  if (std::abs(weighted_soft_margin(-1.0, 10.0) - std::log1p(std::exp(-10.0))) > 1e-12) {
    ok = false;
    detail << "delta=-1 alpha=10 mismatch; ";
  }
  for (double d : {-7.0, 0.0, 3.0, 1e6})
    if (std::abs(weighted_soft_margin(d, 0.0) - std::log(2.0)) > 1e-12) {
      ok = false;
      detail << "alpha=0 degeneracy broken at delta=" << d << "; ";
    }
  for (double d : {1e6, -1e6}) {
    const double v = weighted_soft_margin(d, 10.0);
    if (!std::isfinite(v)) {
      ok = false;
      detail << "overflow at delta=" << d << "; ";
    }
  }
  report(2, ok,
         "loss analytics: ln 2 equidistant, ln(1+e^-10) at delta=-1, alpha=0 degeneracy, no "
         "overflow at delta=+-1e6" +
             (detail.str().empty() ? "" : " | " + detail.str()));
}

// ---------------------------------------------------------------- criterion 3
double check_conv_grads(uint64_t seed) {
  Rng rng(seed);
  Tensor x({1, 2, 6, 6});
  fill_random(x, rng);
  ConvLayer layer(2, 3);
  fill_random(layer.weight, rng, -0.5, 0.5);
  fill_random(layer.bias, rng, -0.2, 0.2);
  Tensor probe = conv2d(x, layer);
  std::vector<double> w(static_cast<size_t>(probe.size()));
  for (double& v : w) v = rng.uniform(-1.0, 1.0);
  auto eval = [&]() {
    const Tensor y = conv2d(x, layer);
    double acc = 0.0;
    for (int64_t i = 0; i < y.size(); ++i) acc += w[static_cast<size_t>(i)] * y[i];
    return acc;
  };
  x.zero_grad();
  layer.weight.zero_grad();
  layer.bias.zero_grad();
  Tensor y = conv2d(x, layer);
  y.zero_grad();
  for (int64_t i = 0; i < y.size(); ++i) y.grad()[i] = w[static_cast<size_t>(i)];
  conv2d_backward(x, layer, y);
  double worst = max_rel_err(x.grad_values(), finite_diff(x, eval));
  worst = std::max(worst, max_rel_err(layer.weight.grad_values(), finite_diff(layer.weight, eval)));
  worst = std::max(worst, max_rel_err(layer.bias.grad_values(), finite_diff(layer.bias, eval)));
  return worst;
}

double check_bn_grads(uint64_t seed) {
  Rng rng(seed);
  Tensor x({2, 3, 4, 4});
  fill_random(x, rng, -1.5, 1.5);
  BatchNormLayer layer(3);
  fill_random(layer.gamma, rng, 0.5, 1.5);
  fill_random(layer.beta, rng, -0.5, 0.5);
  Tensor probe = batch_norm(x, layer, Mode::kTrain);
  std::vector<double> w(static_cast<size_t>(probe.size()));
  for (double& v : w) v = rng.uniform(-1.0, 1.0);
  auto eval = [&]() {
    const Tensor y = batch_norm(x, layer, Mode::kTrain);
    double acc = 0.0;
    for (int64_t i = 0; i < y.size(); ++i) acc += w[static_cast<size_t>(i)] * y[i];
    return acc;
  };
  x.zero_grad();
  layer.gamma.zero_grad();
  layer.beta.zero_grad();
  Tensor y = batch_norm(x, layer, Mode::kTrain);
  y.zero_grad();
  for (int64_t i = 0; i < y.size(); ++i) y.grad()[i] = w[static_cast<size_t>(i)];
  batch_norm_backward(x, layer, y, Mode::kTrain);
  double worst = max_rel_err(x.grad_values(), finite_diff(x, eval));
  worst = std::max(worst, max_rel_err(layer.gamma.grad_values(), finite_diff(layer.gamma, eval)));
  worst = std::max(worst, max_rel_err(layer.beta.grad_values(), finite_diff(layer.beta, eval)));
  return worst;
}

double check_gem_grads(uint64_t seed) {
  Rng rng(seed);
  Tensor x({1, 4, 3, 5});
  fill_random(x, rng, 0.05, 2.0);
  const double p = 3.0;
  Tensor probe = gem_pool(x, p);
  std::vector<double> w(static_cast<size_t>(probe.size()));
  for (double& v : w) v = rng.uniform(-1.0, 1.0);
  auto eval = [&]() {
    const Tensor y = gem_pool(x, p);
    double acc = 0.0;
    for (int64_t i = 0; i < y.size(); ++i) acc += w[static_cast<size_t>(i)] * y[i];
    return acc;
  };
  x.zero_grad();
  Tensor y = gem_pool(x, p);
  y.zero_grad();
  for (int64_t i = 0; i < y.size(); ++i) y.grad()[i] = w[static_cast<size_t>(i)];
  gem_pool_backward(x, p, y);
  return max_rel_err(x.grad_values(), finite_diff(x, eval));
}

double check_resize_grads(uint64_t seed) {
  Rng rng(seed);
  Tensor x({1, 2, 3, 5});
  fill_random(x, rng);
  Tensor probe = resize_bilinear(x, 5, 7);
  std::vector<double> w(static_cast<size_t>(probe.size()));
  for (double& v : w) v = rng.uniform(-1.0, 1.0);
  auto eval = [&]() {
    const Tensor y = resize_bilinear(x, 5, 7);
    double acc = 0.0;
    for (int64_t i = 0; i < y.size(); ++i) acc += w[static_cast<size_t>(i)] * y[i];
    return acc;
  };
  x.zero_grad();
  Tensor y = resize_bilinear(x, 5, 7);
  y.zero_grad();
  for (int64_t i = 0; i < y.size(); ++i) y.grad()[i] = w[static_cast<size_t>(i)];
  resize_bilinear_backward(x, y);
  return max_rel_err(x.grad_values(), finite_diff(x, eval));
}

double check_l2_grads(uint64_t seed) {
  Rng rng(seed);
  Tensor x({12});
  fill_random(x, rng);
  std::vector<double> w(12);
  for (double& v : w) v = rng.uniform(-1.0, 1.0);
  auto eval = [&]() {
    const Tensor y = l2_normalize(x);
    double acc = 0.0;
    for (int64_t i = 0; i < y.size(); ++i) acc += w[static_cast<size_t>(i)] * y[i];
    return acc;
  };
  x.zero_grad();
  Tensor y = l2_normalize(x);
  y.zero_grad();
  for (int64_t i = 0; i < y.size(); ++i) y.grad()[i] = w[static_cast<size_t>(i)];
  l2_normalize_backward(x, y);
  return max_rel_err(x.grad_values(), finite_diff(x, eval));
}

double check_batch_loss_grads(uint64_t seed) {
  Rng rng(seed);
  TripletBatch batch;
  batch.ground = Tensor({3, 8});
  batch.satellite = Tensor({3, 8});
  fill_random(batch.ground, rng);
  fill_random(batch.satellite, rng);
  const LossParams params{10.0};
  auto eval = [&]() { return batch_loss(batch, params); };
  batch.ground.zero_grad();
  batch.satellite.zero_grad();
  batch_loss_with_grad(batch, params);
  double worst = max_rel_err(batch.ground.grad_values(), finite_diff(batch.ground, eval));
  worst = std::max(worst, max_rel_err(batch.satellite.grad_values(), finite_diff(batch.satellite, eval)));
  return worst;
}

// Two-block encoder pair ending in GeM -> L2 -> batch loss; finite differences
// through every parameter.
struct TwoBlockNet {
  ConvLayer conv1{3, 4}, conv2{4, 6};
  BatchNormLayer bn1{4}, bn2{6};

  explicit TwoBlockNet(Rng& rng) {
    conv1.weight = init_weights({4, 3, 4, 4}, InitKind::kConvWeight, rng);
    conv2.weight = init_weights({6, 4, 4, 4}, InitKind::kConvWeight, rng);
    bn1.gamma = init_weights({4}, InitKind::kBnGamma, rng);
    bn2.gamma = init_weights({6}, InitKind::kBnGamma, rng);
  }

  Tensor forward(const Tensor& images, bool with_grad, std::vector<Tensor>* cache) {
    Tensor c1 = conv2d(images, conv1);
    Tensor a1 = leaky_relu(c1);
    Tensor b1 = batch_norm(a1, bn1, Mode::kTrain);
    Tensor c2 = conv2d(b1, conv2);
    Tensor a2 = leaky_relu(c2);
    Tensor b2 = batch_norm(a2, bn2, Mode::kTrain);
    Tensor pooled = gem_pool(b2, 3.0);
    Tensor emb = l2_normalize(pooled);
    if (with_grad) {
      for (Tensor* t : {&c1, &a1, &b1, &c2, &a2, &b2, &pooled, &emb}) t->enable_grad();
      cache->clear();
      cache->push_back(std::move(c1));
      cache->push_back(std::move(a1));
      cache->push_back(std::move(b1));
      cache->push_back(std::move(c2));
      cache->push_back(std::move(a2));
      cache->push_back(std::move(b2));
      cache->push_back(std::move(pooled));
      return emb;
    }
    return emb;
  }

  void backward(Tensor& images, Tensor& emb, std::vector<Tensor>& cache) {
    Tensor& c1 = cache[0];
    Tensor& a1 = cache[1];
    Tensor& b1 = cache[2];
    Tensor& c2 = cache[3];
    Tensor& a2 = cache[4];
    Tensor& b2 = cache[5];
    Tensor& pooled = cache[6];
    l2_normalize_backward(pooled, emb);
    gem_pool_backward(b2, 3.0, pooled);
    batch_norm_backward(a2, bn2, b2, Mode::kTrain);
    leaky_relu_backward(c2, a2);
    conv2d_backward(b1, conv2, c2);
    batch_norm_backward(a1, bn1, b1, Mode::kTrain);
    leaky_relu_backward(c1, a1);
    conv2d_backward(images, conv1, c1);
  }

  std::vector<Tensor*> params() {
    return {&conv1.weight, &conv1.bias, &bn1.gamma, &bn1.beta,
            &conv2.weight, &conv2.bias, &bn2.gamma, &bn2.beta};
  }
};

double check_two_block_end_to_end(uint64_t seed) {
  Rng rng(seed);
  TwoBlockNet ground(rng);
  TwoBlockNet satellite(rng);
  Tensor gimg({2, 3, 8, 8}), simg({2, 3, 8, 8});
  fill_random(gimg, rng);
  fill_random(simg, rng);
  const LossParams params{10.0};

  auto eval = [&]() {
    std::vector<Tensor> unused_g, unused_s;
    TripletBatch tb{ground.forward(gimg, false, nullptr), satellite.forward(simg, false, nullptr)};
    return batch_loss(tb, params);
  };

  for (TwoBlockNet* net : {&ground, &satellite})
    for (Tensor* p : net->params()) p->zero_grad();
  std::vector<Tensor> gcache, scache;
  Tensor gemb = ground.forward(gimg, true, &gcache);
  Tensor semb = satellite.forward(simg, true, &scache);
  TripletBatch tb{gemb, semb};
  batch_loss_with_grad(tb, params);
  gemb.grad_values() = tb.ground.grad_values();
  semb.grad_values() = tb.satellite.grad_values();
  ground.backward(gimg, gemb, gcache);
  satellite.backward(simg, semb, scache);

  double worst = 0.0;
  for (TwoBlockNet* net : {&ground, &satellite})
    for (Tensor* p : net->params())
      worst = std::max(worst, max_rel_err(p->grad_values(), finite_diff(*p, eval)));
  return worst;
}

void criterion_3() {
  const auto t0 = Clock::now();
  double worst_ops = 0.0;
  for (uint64_t seed = 1; seed <= 10; ++seed) {
    worst_ops = std::max(worst_ops, check_conv_grads(seed));
    worst_ops = std::max(worst_ops, check_bn_grads(seed + 100));
    worst_ops = std::max(worst_ops, check_gem_grads(seed + 200));
    worst_ops = std::max(worst_ops, check_resize_grads(seed + 300));
    worst_ops = std::max(worst_ops, check_l2_grads(seed + 400));
    worst_ops = std::max(worst_ops, check_batch_loss_grads(seed + 500));
  }
  double worst_e2e = 0.0;
  for (uint64_t seed = 1; seed <= 3; ++seed)
    worst_e2e = std::max(worst_e2e, check_two_block_end_to_end(seed + 600));
  const double secs = seconds_since(t0);
  const bool ok = worst_ops < 1e-5 && worst_e2e < 1e-4 && secs < 120.0;
  std::ostringstream detail;
  detail << "gradient suite over 10 seeds: ops max rel err " << worst_ops << " (< 1e-5), 2-block "
         << "end-to-end " << worst_e2e << " (< 1e-4), " << secs << "s (< 120s)";
  report(3, ok, detail.str());
}

// ---------------------------------------------------------------- criterion 4
void criterion_4() {
  bool ok = true;
  std::ostringstream detail;
  Rng rng(44);
  Tensor x({1, 3, 4, 5});
  fill_random(x, rng, 0.1, 2.0);
  const Tensor y1 = gem_pool(x, 1.0);
  for (int c = 0; c < 3 && ok; ++c) {
    double mean = 0.0;
    for (int i = 0; i < 20; ++i) mean += x[c * 20 + i];
    mean /= 20.0;
    if (std::abs(y1[c] - mean) > 1e-12) {
      ok = false;
      detail << "p=1 differs from mean; ";
    }
  }
  const Tensor y100 = gem_pool(x, 100.0);
  for (int c = 0; c < 3 && ok; ++c) {
    double mx = 0.0;
    for (int i = 0; i < 20; ++i) mx = std::max(mx, x[c * 20 + i]);
    if (std::abs(y100[c] - mx) / mx > 0.01) {
      ok = false;
      detail << "p=100 not within 1% of max; ";
    }
  }
  for (double p : {1.0, 3.0, 10.0}) {
    Tensor c({1, 1, 3, 3}, 0.42);
    const Tensor y = gem_pool(c, p);
    if (std::abs(y[0] - 0.42) > 1e-12) {
      ok = false;
      detail << "constant channel not a fixed point at p=" << p << "; ";
    }
  }
  report(4, ok, "GeM: p=1 == mean (1e-12), p=100 within 1% of max, constant fixed point for p in "
                "{1,3,10}" + (detail.str().empty() ? "" : " | " + detail.str()));
}

// ---------------------------------------------------------------- criterion 5
void criterion_5() {
  bool ok = true;
  std::ostringstream detail;
  const std::vector<std::pair<int, int>> dims = {{4, 2}, {128, 64}, {112, 112}, {1664, 832}};
  for (auto [w, h] : dims) {
    const OrientationMap g = ground_orientation_map(w, h);
    for (int x = 0; x < w && ok; ++x)
      for (int y = 1; y < h; ++y)
        if (g.u_at(y, x) != g.u_at(0, x)) {
          ok = false;
          detail << "ground u not column-constant at " << w << "x" << h << "; ";
          break;
        }
    for (int x = 1; x < w && ok; ++x)
      if (g.u_at(0, x) <= g.u_at(0, x - 1)) {
        ok = false;
        detail << "ground u not strictly increasing; ";
      }
    for (int y = 1; y < h && ok; ++y)
      if (g.v_at(y, 0) >= g.v_at(y - 1, 0)) {
        ok = false;
        detail << "ground v not strictly decreasing; ";
      }
    if (ok && (g.u_at(0, 0) < -1.0 || g.u_at(0, w - 1) >= 1.0 || g.v_at(0, 0) >= 1.0 ||
               g.v_at(h - 1, 0) <= -1.0)) {
      ok = false;
      detail << "ground ranges violated; ";
    }

    const OrientationMap s = satellite_orientation_map(w, h);
    for (double v : s.v)
      if (v < 0.0 || v > 1.0) {
        ok = false;
        detail << "satellite v out of [0,1]; ";
        break;
      }
    if (s.v_at(0, 0) != 1.0 || s.v_at(h - 1, w - 1) != 1.0) {
      ok = false;
      detail << "satellite corners not exactly 1; ";
    }
    for (double u : s.u)
      if (u < -1.0 || u >= 1.0) {
        ok = false;
        detail << "satellite u out of [-1,1); ";
        break;
      }
  }
  // pixel-exact 90-degree rotation relation on even square dims
  for (int n : {4, 112}) {
    const OrientationMap s = satellite_orientation_map(n, n);
    for (int y = 0; y < n && ok; ++y) {
      for (int x = 0; x < n; ++x) {
        const int ry = x, rx = n - 1 - y;
        if (s.v_at(ry, rx) != s.v_at(y, x)) {
          ok = false;
          detail << "rotation changed v at " << n << "x" << n << "; ";
          break;
        }
        double du = s.u_at(ry, rx) - s.u_at(y, x) - 0.5;
        du = std::fmod(du + 4.0, 2.0);
        if (du > 1.0) du -= 2.0;
        if (std::abs(du) > 1e-12) {
          ok = false;
          detail << "rotation u relation violated; ";
          break;
        }
      }
    }
  }
  report(5, ok, "orientation map invariants for dims {(4,2),(128,64),(112,112),(1664,832)}; "
                "satellite 90-degree rotation relation pixel-exact" +
                    (detail.str().empty() ? "" : " | " + detail.str()));
}

// ---------------------------------------------------------------- criterion 6
void criterion_6() {
  ModelConfig cfg;  // default schedule, Scheme-I, 5 channels
  cfg.seed = 1;
  SiameseModel model(cfg);
  const int64_t count = model.count_parameters();
  const bool ok = count >= 29000000 && count <= 32000000;
  report(6, ok, "default two-branch Scheme-I trainable parameters = " + std::to_string(count) +
                    " (within [29e6, 32e6])");
}

// ---------------------------------------------------------------- criterion 7
Tensor random_unit_rows(int n, int d, uint64_t seed) {
  Rng rng(seed);
  Tensor m({n, d});
  for (int r = 0; r < n; ++r) {
    double sq = 0.0;
    for (int c = 0; c < d; ++c) {
      m[r * d + c] = rng.normal();
      sq += m[r * d + c] * m[r * d + c];
    }
    const double inv = 1.0 / std::sqrt(sq);
    for (int c = 0; c < d; ++c) m[r * d + c] *= inv;
  }
  return m;
}

void criterion_7() {
  bool ok = true;
  std::ostringstream detail;
  if (top1percent_k(8884) != 89) {
    ok = false;
    detail << "K_top1percent(8884) != 89; ";
  }
  for (uint64_t inst = 0; inst < 20 && ok; ++inst) {
    const int n = 10 + static_cast<int>((inst * 17) % 91);
    const int d = 6;
    std::vector<std::string> ids;
    for (int i = 0; i < n; ++i) ids.push_back("id_" + std::to_string(i));
    EmbeddingIndex index = build_index(ids, random_unit_rows(n, d, inst + 1));
    const Tensor queries = random_unit_rows(n, d, inst + 1000);

    // oracle: full ranking by (distance, insertion order), exact comparison
    for (int q = 0; q < n && ok; ++q) {
      std::vector<std::pair<double, int>> scored;
      for (int r = 0; r < n; ++r) {
        double dist = 0.0;
        for (int c = 0; c < d; ++c) {
          const double diff = queries[q * d + c] - index.matrix[r * d + c];
          dist += diff * diff;
        }
        scored.push_back({dist, r});
      }
      std::stable_sort(scored.begin(), scored.end(),
                       [](const auto& a, const auto& b) { return a.first < b.first; });
      const std::vector<Neighbor> got = top_k(index, queries.data() + q * d, n);
      for (int i = 0; i < n; ++i)
        if (got[static_cast<size_t>(i)].index != scored[static_cast<size_t>(i)].second) {
          ok = false;
          detail << "top_k mismatch on instance " << inst << "; ";
          break;
        }
    }
    if (!ok) break;

    const RecallReport report_got = recall_at_k(index, queries, ids, {1, 5, 10});
    for (size_t ki = 0; ki < report_got.ks.size() && ok; ++ki) {
      const int k = report_got.ks[ki];
      int hits = 0;
      for (int q = 0; q < n; ++q) {
        std::vector<std::pair<double, int>> scored;
        for (int r = 0; r < n; ++r) {
          double dist = 0.0;
          for (int c = 0; c < d; ++c) {
            const double diff = queries[q * d + c] - index.matrix[r * d + c];
            dist += diff * diff;
          }
          scored.push_back({dist, r});
        }
        std::stable_sort(scored.begin(), scored.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
        for (int i = 0; i < std::min(k, n); ++i)
          if (scored[static_cast<size_t>(i)].second == q) {
            ++hits;
            break;
          }
      }
      if (std::abs(report_got.recalls[ki] - static_cast<double>(hits) / n) > 0.0) {
        ok = false;
        detail << "recall mismatch at K=" << k << " instance " << inst << "; ";
      }
    }
  }
  report(7, ok, "top_k and recall_at_k match brute-force oracles on 20 instances (N <= 100); "
                "K_top1percent(8884) = 89" + (detail.str().empty() ? "" : " | " + detail.str()));
}

// ---------------------------------------------------------------- criterion 8
void criterion_8() {
  bool ok = true;
  std::ostringstream detail;
  const double d = haversine_m(0.0, 0.0, 0.0, 0.001);
  if (std::abs(d - 111.195) > 0.01) {
    ok = false;
    detail << "(0,0)-(0,0.001deg) = " << d << "; ";
  }
  Rng rng(88);
  for (int i = 0; i < 1000 && ok; ++i) {
    const double lat1 = rng.uniform(-90.0, 90.0), lon1 = rng.uniform(-180.0, 180.0);
    const double lat2 = rng.uniform(-90.0, 90.0), lon2 = rng.uniform(-180.0, 180.0);
    const double lat3 = rng.uniform(-90.0, 90.0), lon3 = rng.uniform(-180.0, 180.0);
    const double ab = haversine_m(lat1, lon1, lat2, lon2);
    const double ba = haversine_m(lat2, lon2, lat1, lon1);
    if (rel_err(ab, ba) > 1e-12) {
      ok = false;
      detail << "asymmetric at triple " << i << "; ";
    }
    const double ac = haversine_m(lat1, lon1, lat3, lon3);
    const double cb = haversine_m(lat3, lon3, lat2, lon2);
    if (ab > ac + cb + 1e-6 * (ac + cb)) {
      ok = false;
      detail << "triangle inequality violated at triple " << i << "; ";
    }
  }
  report(8, ok, "haversine: (0,0)-(0,0.001deg) = 111.195 m +- 0.01; symmetry and triangle "
                "inequality over 1000 random triples" +
                    (detail.str().empty() ? "" : " | " + detail.str()));
}

// ------------------------------------------------------- criteria 9, 10, 11
struct SeedRun {
  double recall_scheme1 = 0.0;
  double recall_rgb = 0.0;
  double recall_scheme2 = 0.0;
  std::string scheme1_ckpt;
  std::string scheme1_loss_log;
  std::string scheme1_sat_index;
  std::string manifest;
};

RunConfig acceptance_run_config(const std::string& manifest, const std::string& out_dir,
                                Scheme scheme, uint64_t seed) {
  RunConfig cfg;
  cfg.manifest = manifest;
  cfg.out_dir = out_dir;
  cfg.schedule = kAccSchedule;
  cfg.scheme = scheme;
  cfg.batch_size = kAccBatch;
  cfg.lr = kAccLr;
  cfg.steps = kAccSteps;
  cfg.seed = seed;
  cfg.augment = false;
  cfg.log_every = 1;
  cfg.embed_batch = 25;
  return cfg;
}

double eval_recall_at_1(const RunConfig& cfg, const std::string& ckpt, const std::string& manifest,
                        const std::string& tag) {
  const std::string gidx = (g_work / (tag + "_ground.idx")).string();
  const std::string sidx = (g_work / (tag + "_satellite.idx")).string();
  run_embed(cfg, ckpt, manifest, View::kGround, Split::kTest, gidx);
  run_embed(cfg, ckpt, manifest, View::kSatellite, Split::kTest, sidx);
  const EvalResult result = run_eval(gidx, sidx);
  return result.recall.recall_at(1);
}

SeedRun run_seed(uint64_t seed) {
  SeedRun out;
  SyntheticWorldConfig world_cfg;
  world_cfg.n_locations = kAccTrainLocations + kAccTestLocations;
  world_cfg.n_train = kAccTrainLocations;
  world_cfg.seed = seed;
  const std::string world_dir = (g_work / ("world_s" + std::to_string(seed))).string();
  const SyntheticWorld world = generate_synthetic_world(world_cfg, world_dir);
  out.manifest = world.manifest_path;

  struct Variant {
    Scheme scheme;
    const char* tag;
  };
  const Variant variants[] = {{Scheme::kSchemeI, "s1"}, {Scheme::kRgbBaseline, "rgb"},
                              {Scheme::kSchemeII, "s2"}};
  for (const Variant& v : variants) {
    const std::string run_dir =
        (g_work / ("run_" + std::string(v.tag) + "_seed" + std::to_string(seed))).string();
    RunConfig cfg = acceptance_run_config(world.manifest_path, run_dir, v.scheme, seed);
    const TrainResult tr = run_training(cfg);
    const double r1 = eval_recall_at_1(cfg, tr.checkpoint_path, world.manifest_path,
                                       std::string(v.tag) + "_seed" + std::to_string(seed));
    if (v.scheme == Scheme::kSchemeI) {
      out.recall_scheme1 = r1;
      out.scheme1_ckpt = tr.checkpoint_path;
      out.scheme1_loss_log = tr.loss_log_path;
      out.scheme1_sat_index =
          (g_work / ("s1_seed" + std::to_string(seed) + "_satellite.idx")).string();
    } else if (v.scheme == Scheme::kRgbBaseline) {
      out.recall_rgb = r1;
    } else {
      out.recall_scheme2 = r1;
    }
    std::cerr << "  [seed " << seed << "] " << scheme_name(v.scheme) << " recall@1 = " << r1
              << "\n";
  }
  return out;
}

double median3(double a, double b, double c) {
  std::vector<double> v = {a, b, c};
  std::sort(v.begin(), v.end());
  return v[1];
}

void criteria_9_10_11() {
  const auto t0 = Clock::now();
  std::vector<SeedRun> runs;
  for (uint64_t seed : {1ULL, 2ULL, 3ULL}) runs.push_back(run_seed(seed));

  const double med_s1 = median3(runs[0].recall_scheme1, runs[1].recall_scheme1, runs[2].recall_scheme1);
  const double med_rgb = median3(runs[0].recall_rgb, runs[1].recall_rgb, runs[2].recall_rgb);
  const double med_s2 = median3(runs[0].recall_scheme2, runs[1].recall_scheme2, runs[2].recall_scheme2);
  const double secs9 = seconds_since(t0);
  {
    std::ostringstream detail;
    detail.setf(std::ios::fixed);
    detail.precision(3);
    detail << "directional Table-1 on synthetic: median recall@1 Scheme-I " << med_s1 << ", RGB "
           << med_rgb << ", Scheme-II " << med_s2 << "; gap " << (med_s1 - med_rgb)
           << " (>= 0.10), |Scheme-II - Scheme-I| " << std::abs(med_s2 - med_s1)
           << " (<= 0.05); " << std::setprecision(0) << secs9 << "s";
    const bool ok9 = med_s1 - med_rgb >= 0.10 && std::abs(med_s2 - med_s1) <= 0.05 &&
                     secs9 <= 1800.0;
    report(9, ok9, detail.str());
  }

  // criterion 10: Fig-8 direction on the seed-1 Scheme-I model
  {
    RunConfig cfg = acceptance_run_config(runs[0].manifest, (g_work / "sweep_run").string(),
                                          Scheme::kSchemeI, 1);
    cfg.sweep_levels = {0, 5, 10, 15, 20};
    const NoiseSweepReport sweep = run_sweep(cfg, runs[0].scheme1_ckpt, runs[0].manifest,
                                             runs[0].scheme1_sat_index, Split::kTest, 1);
    bool ok10 = true;
    std::ostringstream detail;
    detail << "north-noise sweep recall@1 by level:";
    double prev = 1e9;
    for (size_t i = 0; i < sweep.reports.size(); ++i) {
      const double r1 = sweep.reports[i].recall_at(1);
      detail << " " << sweep.levels_deg[i] << "deg=" << r1;
      if (i > 0 && r1 > prev + 0.02) ok10 = false;
      prev = r1;
    }
    detail << " (non-increasing within 2 points per step)";
    report(10, ok10, detail.str());
  }

  // criterion 11: bit-identical repeat of the seed-1 Scheme-I run
  {
    const std::string rerun_dir = (g_work / "run_s1_seed1_repeat").string();
    RunConfig cfg = acceptance_run_config(runs[0].manifest, rerun_dir, Scheme::kSchemeI, 1);
    const TrainResult tr = run_training(cfg);
    const std::string sidx2 = (g_work / "repeat_satellite.idx").string();
    run_embed(cfg, tr.checkpoint_path, runs[0].manifest, View::kSatellite, Split::kTest, sidx2);

    const bool logs_equal = read_file(runs[0].scheme1_loss_log) == read_file(tr.loss_log_path);
    const bool index_equal = read_file(runs[0].scheme1_sat_index) == read_file(sidx2);
    report(11, logs_equal && index_equal,
           std::string("determinism: repeated seed-1 run gives bit-identical loss log (") +
               (logs_equal ? "yes" : "NO") + ") and index file (" + (index_equal ? "yes" : "NO") +
               ")");
  }
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i)
    if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) only = std::atoi(argv[i + 1]);

  g_work = fs::temp_directory_path() / "crossview_acceptance";
  std::error_code ec;
  fs::remove_all(g_work, ec);
  fs::create_directories(g_work, ec);

  const auto t0 = Clock::now();
  auto want = [&](int n) { return only == 0 || only == n; };
  if (want(1)) criterion_1();
  if (want(2)) criterion_2();
  if (want(3)) criterion_3();
  if (want(4)) criterion_4();
  if (want(5)) criterion_5();
  if (want(6)) criterion_6();
  if (want(7)) criterion_7();
  if (want(8)) criterion_8();
  if (want(9) || want(10) || want(11)) criteria_9_10_11();

  int failures = 0;
  for (const CriterionResult& r : g_results)
    if (!r.pass) ++failures;
  std::cout << "----\n"
            << g_results.size() - failures << "/" << g_results.size() << " criteria passed in "
            << seconds_since(t0) << "s\n";
  return failures == 0 ? 0 : 1;
}
