#include "simple/selfcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <numeric>

#include "simple/errors.hpp"
#include "simple/nn.hpp"
#include "simple/ops.hpp"
#include "simple/optim.hpp"
#include "simple/rng.hpp"
#include "simple/ssl.hpp"
#include "simple/tensor.hpp"

namespace simple {

namespace {

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

// --- simplex samplers ------------------------------------------------------

std::vector<double> simplex_uniform(RngStream& rng, std::size_t dim) {
  // Exponential spacings give the flat Dirichlet.
  std::vector<double> p(dim);
  double s = 0.0;
  for (auto& x : p) {
    x = -std::log(1.0 - rng.uniform());
    s += x;
  }
  for (auto& x : p) x /= s;
  return p;
}

std::vector<double> simplex_peaked(RngStream& rng, std::size_t dim) {
  return sharpen(simplex_uniform(rng, dim), 0.25);
}

std::vector<double> simplex_near_vertex(RngStream& rng, std::size_t dim) {
  const double eps = rng.uniform(0.0, 0.35);
  const std::size_t v = static_cast<std::size_t>(rng.uniform_int(dim));
  std::vector<double> p(dim, 0.0);
  if (dim == 1) {
    p[0] = 1.0;
    return p;
  }
  double s = 0.0;
  std::vector<double> w(dim, 0.0);
  for (std::size_t i = 0; i < dim; ++i) {
    if (i == v) continue;
    w[i] = rng.uniform();
    s += w[i];
  }
  for (std::size_t i = 0; i < dim; ++i) {
    p[i] = i == v ? 1.0 - eps : eps * w[i] / s;
  }
  return p;
}

std::vector<double> simplex_sample(RngStream& rng, std::size_t dim, int kind) {
  switch (kind % 3) {
    case 0: return simplex_uniform(rng, dim);
    case 1: return simplex_peaked(rng, dim);
    default: return simplex_near_vertex(rng, dim);
  }
}

std::vector<double> normalize(std::vector<double> p) {
  double s = std::accumulate(p.begin(), p.end(), 0.0);
  for (auto& x : p) x /= s;
  return p;
}

ProbBatch make_prob_batch(const std::vector<std::vector<double>>& rows) {
  const std::size_t n = rows.size(), l = rows[0].size();
  std::vector<double> flat;
  flat.reserve(n * l);
  for (const auto& r : rows) flat.insert(flat.end(), r.begin(), r.end());
  return ProbBatch(Tensor::from({n, l}, std::move(flat)));
}

}  // namespace

// --- theorem ---------------------------------------------------------------

PropertyResult check_theorem_bound(std::uint64_t samples, std::uint64_t seed) {
  PropertyResult res{"theorem-confidence-bound", true, 0, ""};
  RngStream rng = RngStream::derive(seed, "theorem");
  const std::size_t dims[] = {2, 10, 100};
  const double tcs[] = {0.95, 0.75};
  const double tss[] = {0.9, 0.7};

  for (std::size_t d = 0; d < 3; ++d) {
    const std::size_t dim = dims[d];
    const std::uint64_t count = samples / 3 + (d == 0 ? samples % 3 : 0);
    for (std::uint64_t i = 0; i < count; ++i) {
      const std::vector<double> p =
          simplex_sample(rng, dim, static_cast<int>(rng.uniform_int(3)));
      std::vector<double> q;
      switch (rng.uniform_int(4)) {
        case 0:  // independent
          q = simplex_sample(rng, dim, static_cast<int>(rng.uniform_int(3)));
          break;
        case 1: {  // convex mix of p and noise, stresses the sim gate edge
          const double m = rng.uniform(0.5, 0.999);
          std::vector<double> r = simplex_uniform(rng, dim);
          q.resize(dim);
          for (std::size_t k = 0; k < dim; ++k) q[k] = m * p[k] + (1.0 - m) * r[k];
          q = normalize(std::move(q));
          break;
        }
        case 2:  // exact copy, sim = 1
          q = p;
          break;
        default:  // re-tempered copy
          q = sharpen(p, rng.uniform(0.3, 3.0));
      }

      const double conf_p = confidence(p);
      const double sim = bhattacharyya_sim(p, q);
      for (double tc : tcs) {
        for (double ts : tss) {
          if (!(conf_p > tc && sim > ts)) continue;
          ++res.cases;
          const double bound = confidence_bound(tc, ts);
          const double conf_q = confidence(q);
          if (!(conf_q > bound - 1e-12)) {
            res.passed = false;
            res.detail = fmt(
                "dim=%zu tau_c=%.2f tau_s=%.2f max_p=%.17g sim=%.17g "
                "max_q=%.17g bound=%.17g",
                dim, tc, ts, conf_p, sim, conf_q, bound);
            return res;
          }
        }
      }
    }
  }
  if (res.cases < samples / 100) {
    res.passed = false;
    res.detail = fmt("vacuous: only %llu gate-passing checks",
                     static_cast<unsigned long long>(res.cases));
    return res;
  }
  res.detail = fmt("%llu gate-passing checks, zero violations",
                   static_cast<unsigned long long>(res.cases));
  return res;
}

// --- pair-loss oracle ------------------------------------------------------

PropertyResult check_pair_loss_oracle(std::size_t batches, std::uint64_t seed) {
  PropertyResult res{"pair-loss-oracle", true, 0, ""};
  RngStream rng = RngStream::derive(seed, "pair_oracle");
  const double tcs[] = {0.95, 0.75, 0.5};
  const double tss[] = {0.9, 0.7, 0.4};

  for (std::size_t b = 0; b < batches; ++b) {
    const std::size_t n = 2 + static_cast<std::size_t>(rng.uniform_int(63));
    const std::size_t l = 2 + static_cast<std::size_t>(rng.uniform_int(19));
    std::vector<std::vector<double>> qs(n), ps(n);
    for (std::size_t i = 0; i < n; ++i) {
      qs[i] = simplex_sample(rng, l, static_cast<int>(rng.uniform_int(3)));
      ps[i] = simplex_sample(rng, l, static_cast<int>(rng.uniform_int(3)));
    }
    const ProbBatch pseudo = make_prob_batch(qs);
    const ProbBatch preds = make_prob_batch(ps);
    const Thresholds th{tcs[rng.uniform_int(3)], tss[rng.uniform_int(3)]};

    const double vec = pair_loss(pseudo, preds, th).item();
    const double oracle = pair_loss_oracle(pseudo, preds, th);
    ++res.cases;
    if (std::abs(vec - oracle) > 1e-9) {
      res.passed = false;
      res.detail = fmt("batch=%zu n=%zu l=%zu tau_c=%.2f tau_s=%.2f "
                       "vectorized=%.17g oracle=%.17g",
                       b, n, l, th.tau_c, th.tau_s, vec, oracle);
      return res;
    }
  }
  res.detail = fmt("%llu batches matched within 1e-9",
                   static_cast<unsigned long long>(res.cases));
  return res;
}

// --- gradient checks -------------------------------------------------------

namespace {

struct FdCase {
  std::string name;
  std::vector<std::vector<std::size_t>> shapes;
  // Element sampler per input index.
  std::function<double(RngStream&, std::size_t input, std::size_t elem)> draw;
  // Scalar-valued composite; tracked iff the inputs are tracked.
  std::function<Tensor(const std::vector<Tensor>&)> f;
};

Tensor weighted_sum(const Tensor& out, const Tensor& w) {
  return sum(mul(out, w));
}

Tensor rand_weights(RngStream& rng, const std::vector<std::size_t>& shape) {
  std::size_t total = 1;
  for (auto d : shape) total *= d;
  std::vector<double> v(total);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return Tensor::from(shape, std::move(v));
}

std::vector<FdCase> build_cases(RngStream& rng) {
  std::vector<FdCase> cases;
  auto unit = [](RngStream& r, std::size_t, std::size_t) {
    return r.uniform(-1.0, 1.0);
  };

  {
    Tensor w = rand_weights(rng, {3, 4});
    cases.push_back({"reshape", {{2, 6}}, unit, [w](const std::vector<Tensor>& x) {
                       return weighted_sum(reshape(x[0], {3, 4}), w);
                     }});
  }
  {
    Tensor w = rand_weights(rng, {2, 3});
    cases.push_back({"add", {{2, 3}, {2, 3}}, unit,
                     [w](const std::vector<Tensor>& x) {
                       return weighted_sum(add(x[0], x[1]), w);
                     }});
    cases.push_back({"add_aliased", {{2, 3}}, unit,
                     [w](const std::vector<Tensor>& x) {
                       return weighted_sum(add(x[0], x[0]), w);
                     }});
    cases.push_back({"sub", {{2, 3}, {2, 3}}, unit,
                     [w](const std::vector<Tensor>& x) {
                       return weighted_sum(sub(x[0], x[1]), w);
                     }});
    cases.push_back({"mul", {{2, 3}, {2, 3}}, unit,
                     [w](const std::vector<Tensor>& x) {
                       return weighted_sum(mul(x[0], x[1]), w);
                     }});
    cases.push_back({"mul_aliased", {{2, 3}}, unit,
                     [w](const std::vector<Tensor>& x) {
                       return weighted_sum(mul(x[0], x[0]), w);
                     }});
    cases.push_back({"scale", {{2, 3}}, unit,
                     [w](const std::vector<Tensor>& x) {
                       return weighted_sum(scale(x[0], -1.7), w);
                     }});
    cases.push_back({"add_scalar", {{2, 3}}, unit,
                     [w](const std::vector<Tensor>& x) {
                       return weighted_sum(add_scalar(x[0], 0.37), w);
                     }});
  }
  cases.push_back({"sum", {{3, 4}}, unit, [](const std::vector<Tensor>& x) {
                     return sum(x[0]);
                   }});
  cases.push_back({"mean", {{3, 4}}, unit, [](const std::vector<Tensor>& x) {
                     return mean(x[0]);
                   }});
  {
    Tensor w = rand_weights(rng, {3, 2});
    cases.push_back({"matmul", {{3, 4}, {4, 2}}, unit,
                     [w](const std::vector<Tensor>& x) {
                       return weighted_sum(matmul(x[0], x[1]), w);
                     }});
  }
  {
    Tensor w = rand_weights(rng, {3, 4});
    cases.push_back({"add_rowvec", {{3, 4}, {4}}, unit,
                     [w](const std::vector<Tensor>& x) {
                       return weighted_sum(add_rowvec(x[0], x[1]), w);
                     }});
    cases.push_back({"relu", {{3, 4}},
                     [](RngStream& r, std::size_t, std::size_t) {
                       // keep inputs out of the kink's finite-difference window
                       const double m = r.uniform(0.1, 1.1);
                       return r.bernoulli(0.5) ? m : -m;
                     },
                     [w](const std::vector<Tensor>& x) {
                       return weighted_sum(relu(x[0]), w);
                     }});
    cases.push_back({"clamp_min", {{3, 4}},
                     [](RngStream& r, std::size_t, std::size_t) {
                       const double off = r.uniform(0.1, 0.5);
                       return r.bernoulli(0.5) ? 0.5 + off : 0.5 - off;
                     },
                     [w](const std::vector<Tensor>& x) {
                       return weighted_sum(clamp_min(x[0], 0.5), w);
                     }});
    cases.push_back({"sqrt", {{3, 4}},
                     [](RngStream& r, std::size_t, std::size_t) {
                       return r.uniform(0.25, 4.0);
                     },
                     [w](const std::vector<Tensor>& x) {
                       return weighted_sum(sqrt_t(x[0]), w);
                     }});
    cases.push_back({"log", {{3, 4}},
                     [](RngStream& r, std::size_t, std::size_t) {
                       return r.uniform(0.25, 4.0);
                     },
                     [w](const std::vector<Tensor>& x) {
                       return weighted_sum(log_t(x[0]), w);
                     }});
  }
  {
    Tensor w = rand_weights(rng, {3, 5});
    cases.push_back({"softmax_rows", {{3, 5}},
                     [](RngStream& r, std::size_t, std::size_t) {
                       return r.uniform(-2.0, 2.0);
                     },
                     [w](const std::vector<Tensor>& x) {
                       return weighted_sum(softmax_rows(x[0]), w);
                     }});
  }
  {
    Tensor w = rand_weights(rng, {2, 3, 5, 5});
    cases.push_back({"conv2d_s1p1", {{2, 2, 5, 5}, {3, 2, 3, 3}}, unit,
                     [w](const std::vector<Tensor>& x) {
                       return weighted_sum(conv2d(x[0], x[1], 1, 1), w);
                     }});
  }
  {
    Tensor w = rand_weights(rng, {1, 2, 3, 3});
    cases.push_back({"conv2d_s2p0", {{1, 2, 7, 7}, {2, 2, 3, 3}}, unit,
                     [w](const std::vector<Tensor>& x) {
                       return weighted_sum(conv2d(x[0], x[1], 2, 0), w);
                     }});
  }
  {
    Tensor w = rand_weights(rng, {2, 3, 4, 4});
    cases.push_back({"add_chanvec", {{2, 3, 4, 4}, {3}}, unit,
                     [w](const std::vector<Tensor>& x) {
                       return weighted_sum(add_chanvec(x[0], x[1]), w);
                     }});
  }
  {
    Tensor w = rand_weights(rng, {2, 2, 2, 2});
    cases.push_back({"maxpool2x2", {{2, 2, 4, 4}},
                     // distinct values with gaps far above 2h, so the argmax
                     // is stable under perturbation
                     [](RngStream& r, std::size_t, std::size_t elem) {
                       return 0.1 * static_cast<double>(elem) +
                              r.uniform(-0.02, 0.02);
                     },
                     [w](const std::vector<Tensor>& x) {
                       return weighted_sum(maxpool2x2(x[0]), w);
                     }});
  }
  return cases;
}

struct FdFailure {
  bool failed = false;
  std::string detail;
};

// Central differences on every input element of one case.
FdFailure run_fd_case(const FdCase& c, RngStream& rng, std::uint64_t& cases,
                      std::size_t seed_idx) {
  const double h = 1e-4, tol = 1e-4;
  std::vector<std::vector<double>> xs;
  for (std::size_t i = 0; i < c.shapes.size(); ++i) {
    std::size_t total = 1;
    for (auto d : c.shapes[i]) total *= d;
    std::vector<double> v(total);
    for (std::size_t e = 0; e < total; ++e) v[e] = c.draw(rng, i, e);
    xs.push_back(std::move(v));
  }

  auto value_at = [&](const std::vector<std::vector<double>>& vals) {
    std::vector<Tensor> ts;
    ts.reserve(vals.size());
    for (std::size_t i = 0; i < vals.size(); ++i) {
      ts.push_back(Tensor::from(c.shapes[i], vals[i]));
    }
    return c.f(ts).item();
  };

  // reverse-mode gradients
  Tape tape;
  std::vector<Tensor> tracked;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    tracked.push_back(tape.watch(Tensor::from(c.shapes[i], xs[i])));
  }
  GradientMap g = backward(c.f(tracked));

  for (std::size_t i = 0; i < xs.size(); ++i) {
    const std::vector<double>& ad = g.at(tracked[i]);
    for (std::size_t e = 0; e < xs[i].size(); ++e) {
      auto plus = xs, minus = xs;
      plus[i][e] += h;
      minus[i][e] -= h;
      const double fd = (value_at(plus) - value_at(minus)) / (2.0 * h);
      ++cases;
      const double err = std::abs(fd - ad[e]);
      const double scale_ref = std::max({1.0, std::abs(fd), std::abs(ad[e])});
      if (err > tol * scale_ref) {
        return {true, fmt("%s seed=%zu input=%zu elem=%zu ad=%.17g fd=%.17g",
                          c.name.c_str(), seed_idx, i, e, ad[e], fd)};
      }
    }
  }
  return {};
}

// Directional finite difference through the fully composed loss.
FdFailure run_composed_case(RngStream& rng, std::uint64_t& cases,
                            std::size_t seed_idx) {
  const double h = 1e-4, tol = 1e-4;
  BackboneConfig bc;
  bc.in_channels = 1;
  bc.image_size = 8;
  bc.conv_channels = {2};
  bc.hidden = 3;
  bc.num_classes = 3;
  ParamSet params = init_backbone(bc, rng);

  auto image_batch = [&](std::size_t n) {
    std::vector<double> v(n * 1 * 8 * 8);
    for (auto& x : v) x = rng.uniform(0.0, 1.0);
    return Tensor::from({n, 1, 8, 8}, std::move(v));
  };
  const Tensor lx = image_batch(2);
  const Tensor sx = image_batch(3);
  std::vector<std::size_t> classes = {rng.uniform_int(3), rng.uniform_int(3)};
  std::vector<double> yv(2 * 3, 0.0);
  yv[0 * 3 + classes[0]] = 1.0;
  yv[1 * 3 + classes[1]] = 1.0;
  const ProbBatch ly(Tensor::from({2, 3}, std::move(yv)));
  std::vector<std::vector<double>> qs;
  for (int i = 0; i < 3; ++i) qs.push_back(simplex_near_vertex(rng, 3));
  const ProbBatch pseudo = make_prob_batch(qs);
  const Thresholds th{0.6, 0.5};
  const LossWeights lw{0.5, 0.7};

  auto loss_of = [&](const ParamSet& ps) {
    Tensor l_x = supervised_loss(
        ly, ProbBatch(softmax_rows(backbone_forward(bc, ps, lx))));
    ProbBatch preds(softmax_rows(backbone_forward(bc, ps, sx)));
    Tensor l_u = unsupervised_loss(pseudo, preds, th.tau_c, bc.num_classes);
    Tensor l_p = pair_loss(pseudo, preds, th);
    return total_loss(l_x, l_u, l_p, lw);
  };

  // reverse-mode gradient
  Tape tape;
  ParamSet w = watch_all(tape, params);
  LossBreakdown lb = loss_of(w);
  GradientMap g = backward(lb.total);

  // random unit direction over all parameter scalars
  std::vector<std::vector<double>> dir;
  double norm2 = 0.0;
  for (const Param& p : params.items()) {
    std::vector<double> d(p.value.size());
    for (auto& x : d) {
      x = rng.normal();
      norm2 += x * x;
    }
    dir.push_back(std::move(d));
  }
  const double inv_norm = 1.0 / std::sqrt(norm2);
  double directional_ad = 0.0;
  {
    std::size_t i = 0;
    for (const Param& p : w.items()) {
      const std::vector<double>& gv = g.at(p.value);
      for (std::size_t e = 0; e < gv.size(); ++e) {
        directional_ad += gv[e] * dir[i][e] * inv_norm;
      }
      ++i;
    }
  }

  auto shifted = [&](double t) {
    ParamSet ps;
    std::size_t i = 0;
    for (const Param& p : params.items()) {
      std::vector<double> v = p.value.data();
      for (std::size_t e = 0; e < v.size(); ++e) v[e] += t * dir[i][e] * inv_norm;
      ps.add(p.name, Tensor::from(p.value.shape(), std::move(v)));
      ++i;
    }
    return ps;
  };
  const double fd =
      (loss_of(shifted(h)).total_value - loss_of(shifted(-h)).total_value) /
      (2.0 * h);
  ++cases;
  const double err = std::abs(fd - directional_ad);
  if (err > tol * std::max({1.0, std::abs(fd), std::abs(directional_ad)})) {
    return {true, fmt("composed_loss seed=%zu ad=%.17g fd=%.17g", seed_idx,
                      directional_ad, fd)};
  }
  return {};
}

}  // namespace

PropertyResult check_gradients(std::size_t seeds, std::uint64_t seed) {
  PropertyResult res{"gradient-checks", true, 0, ""};
  for (std::size_t s = 0; s < seeds; ++s) {
    RngStream rng = RngStream::derive(seed + s, "gradcheck");
    for (const FdCase& c : build_cases(rng)) {
      FdFailure f = run_fd_case(c, rng, res.cases, s);
      if (f.failed) {
        res.passed = false;
        res.detail = f.detail;
        return res;
      }
    }
    FdFailure f = run_composed_case(rng, res.cases, s);
    if (f.failed) {
      res.passed = false;
      res.detail = f.detail;
      return res;
    }
  }
  res.detail = fmt("%llu comparisons within 1e-4",
                   static_cast<unsigned long long>(res.cases));
  return res;
}

// --- frozen unit values ----------------------------------------------------

PropertyResult check_sharpen_similarity_units() {
  PropertyResult res{"sharpen-similarity-units", true, 0, ""};
  auto expect = [&](bool ok, const char* what) {
    ++res.cases;
    if (!ok && res.passed) {
      res.passed = false;
      res.detail = what;
    }
  };
  auto near = [](double a, double b, double tol) { return std::abs(a - b) <= tol; };

  // sharpening
  {
    auto s = sharpen({0.5, 0.5}, 0.5);
    expect(near(s[0], 0.5, 1e-12) && near(s[1], 0.5, 1e-12),
           "sharpen: uniform not a fixed point");
    auto oh = sharpen({1.0, 0.0, 0.0}, 0.7);
    expect(oh[0] == 1.0 && oh[1] == 0.0 && oh[2] == 0.0,
           "sharpen: one-hot not preserved");
    auto d = sharpen({0.6, 0.4}, 0.5);
    expect(near(d[0], 0.69231, 1e-5) && near(d[1], 0.30769, 1e-5),
           "sharpen([0.6,0.4],0.5) off its hand value");
    expect(near(d[0], 9.0 / 13.0, 1e-12) && near(d[1], 4.0 / 13.0, 1e-12),
           "sharpen([0.6,0.4],0.5) differs from 9/13,4/13");
    auto idp = sharpen({0.25, 0.75}, 1.0);
    expect(idp[0] == 0.25 && idp[1] == 0.75, "sharpen: T=1 not identity");
    expect(confidence(sharpen({0.3, 0.45, 0.25}, 0.5)) >=
               confidence({0.3, 0.45, 0.25}),
           "sharpen: T<1 did not concentrate");
  }
  // label-guess arithmetic
  {
    ProbBatch a = make_prob_batch({{0.6, 0.4}});
    ProbBatch b = make_prob_batch({{0.8, 0.2}});
    ProbBatch m = average_and_sharpen({a, b}, 1.0);
    expect(near(m.tensor().at(0), 0.7, 1e-12) && near(m.tensor().at(1), 0.3, 1e-12),
           "average_and_sharpen K=2 T=1 mean wrong");
  }
  // confidence and threshold
  expect(confidence({0.0, 1.0, 0.0}) == 1.0, "confidence: one-hot");
  expect(confidence({0.25, 0.25, 0.25, 0.25}) == 0.25, "confidence: uniform");
  expect(confidence({0.2, 0.5, 0.3}) == 0.5, "confidence: max entry");
  expect(hard_threshold(0.96, 0.95) == 0.96, "hard_threshold: above");
  expect(hard_threshold(0.95, 0.95) == 0.0, "hard_threshold: boundary must reject");
  expect(hard_threshold(0.2, 0.5) == 0.0, "hard_threshold: below");
  // similarity and distance
  {
    std::vector<double> p = {0.1, 0.2, 0.3, 0.4};
    expect(near(bhattacharyya_sim(p, p), 1.0, 1e-12), "sim(p,p) != 1");
    expect(bhattacharyya_sim({1, 0}, {0, 1}) == 0.0, "sim of disjoint one-hots");
    expect(near(bhattacharyya_sim({0.5, 0.5}, {1.0, 0.0}), 0.70711, 1e-5),
           "sim([0.5,0.5],[1,0]) off its hand value");
    expect(near(bhattacharyya_sim({0.5, 0.5}, {1.0, 0.0}), std::sqrt(0.5), 1e-12),
           "sim([0.5,0.5],[1,0]) != sqrt(0.5)");
    expect(near(pair_distance(p, p), 0.0, 1e-12), "dist(p,p) != 0");
    expect(pair_distance({1, 0}, {0, 1}) == 1.0, "dist of disjoint one-hots");
    expect(near(pair_distance({0.5, 0.5}, {1.0, 0.0}), 0.29289, 1e-5),
           "dist([0.5,0.5],[1,0]) off its hand value");
    std::vector<double> q = {0.4, 0.3, 0.2, 0.1};
    expect(near(bhattacharyya_sim(p, q), bhattacharyya_sim(q, p), 1e-15),
           "sim not symmetric");
  }
  // confidence bound
  {
    expect(confidence_bound(1.0, 1.0) == 1.0, "bound(1,1) != 1");
    expect(near(confidence_bound(0.95, 1.0), 0.95, 1e-12), "bound(tau_c,1) != tau_c");
    // exact closed form: cos(acos(sqrt(0.95)) + acos(0.9))^2 = 0.608
    expect(near(confidence_bound(0.95, 0.9), 0.608, 1e-12),
           "bound(0.95,0.9) != 0.608");
    expect(confidence_bound(0.5, 0.1) == 0.0, "bound not clamped past pi/2");
    double prev = -1.0;
    for (double tc : {0.5, 0.7, 0.9, 0.99}) {
      const double b = confidence_bound(tc, 0.9);
      expect(b >= prev, "bound not monotone in tau_c");
      prev = b;
    }
    prev = -1.0;
    for (double ts : {0.5, 0.7, 0.9, 0.99}) {
      const double b = confidence_bound(0.95, ts);
      expect(b >= prev, "bound not monotone in tau_s");
      prev = b;
    }
  }
  // loss hand values
  {
    ProbBatch y1 = make_prob_batch({{1.0, 0.0}});
    ProbBatch hit = make_prob_batch({{1.0, 0.0}});
    expect(supervised_loss(y1, hit).item() == 0.0, "CE of exact hit != 0");
    ProbBatch even = make_prob_batch({{0.5, 0.5}});
    expect(near(supervised_loss(y1, even).item(), std::log(2.0), 1e-12),
           "CE([1,0],[0.5,0.5]) != ln 2");
    ProbBatch y2 = make_prob_batch({{1.0, 0.0}, {1.0, 0.0}});
    ProbBatch p2 = make_prob_batch({{1.0, 0.0}, {0.5, 0.5}});
    expect(near(supervised_loss(y2, p2).item(), std::log(2.0) / 2.0, 1e-12),
           "CE batch mean wrong");

    ProbBatch lowq = make_prob_batch({{0.6, 0.4}, {0.5, 0.5}});
    ProbBatch anyp = make_prob_batch({{0.9, 0.1}, {0.2, 0.8}});
    expect(unsupervised_loss(lowq, anyp, 0.95, 2).item() == 0.0,
           "unsup loss: full rejection must be exactly 0");
    ProbBatch q1 = make_prob_batch({{1.0, 0.0}});
    expect(near(unsupervised_loss(q1, even, 0.95, 2).item(), 0.25, 1e-12),
           "unsup loss single-entry hand value");
    expect(unsupervised_loss(q1, make_prob_batch({{1.0, 0.0}}), 0.95, 2).item() ==
               0.0,
           "unsup loss: pseudo == pred must be 0");

    Tensor lx = Tensor::scalar(1.0);
    Tensor lu = Tensor::scalar(0.5);
    Tensor lp = Tensor::scalar(0.2);
    LossBreakdown lb = total_loss(lx, lu, lp, LossWeights{75.0, 75.0});
    expect(near(lb.total_value, 53.5, 1e-9), "total_loss(1,0.5,0.2)@75 != 53.5");
    LossBreakdown z = total_loss(lx, lu, lp, LossWeights{0.0, 0.0});
    expect(z.total_value == 1.0, "total_loss with zero weights != l_x");
  }
  // pair loss edge values
  {
    ProbBatch low = make_prob_batch({{0.6, 0.4}, {0.55, 0.45}});
    ProbBatch ps = make_prob_batch({{0.5, 0.5}, {0.5, 0.5}});
    expect(pair_loss(low, ps, Thresholds{0.95, 0.9}).item() == 0.0,
           "pair loss: all-low-confidence batch must be 0");
    ProbBatch onehots = make_prob_batch({{1.0, 0.0}, {1.0, 0.0}});
    expect(pair_loss(onehots, onehots, Thresholds{0.95, 0.9}).item() == 0.0,
           "pair loss: identical one-hot pairs must cancel");
    bool degenerate = false;
    ProbBatch single = make_prob_batch({{1.0, 0.0}});
    expect(pair_loss(single, make_prob_batch({{0.5, 0.5}}), Thresholds{},
                     &degenerate)
                   .item() == 0.0 &&
               degenerate,
           "pair loss: |batch| < 2 must flag degenerate zero");
  }
  // diagnostics hand enumeration
  {
    ProbBatch uni = make_prob_batch({{0.5, 0.5}, {0.5, 0.5}});
    PairDiagnostics d0 = pair_diagnostics(uni, Thresholds{0.95, 0.9});
    expect(d0.high_conf_ratio == 0.0 && d0.pair_pass_ratio == 0.0,
           "diagnostics: uniform labels must be all-zero");
    ProbBatch same = make_prob_batch({{1.0, 0.0}, {1.0, 0.0}, {1.0, 0.0}});
    std::vector<std::size_t> truth_same = {0, 0, 0};
    PairDiagnostics d1 = pair_diagnostics(same, Thresholds{0.95, 0.9}, &truth_same);
    expect(d1.high_conf_ratio == 1.0 && d1.pair_pass_ratio == 1.0 &&
               d1.false_positive_pair_rate && *d1.false_positive_pair_rate == 0.0,
           "diagnostics: identical one-hots must pass everywhere");
    // 4-row mixed batch, ratios enumerated by hand: only rows 0 and 1 are
    // confident and mutually similar, so 2 of 12 ordered pairs pass.
    ProbBatch mixed = make_prob_batch({{0.97, 0.02, 0.01},
                                       {0.96, 0.03, 0.01},
                                       {0.5, 0.3, 0.2},
                                       {0.02, 0.97, 0.01}});
    std::vector<std::size_t> truth_mixed = {0, 1, 0, 1};
    PairDiagnostics d2 =
        pair_diagnostics(mixed, Thresholds{0.95, 0.9}, &truth_mixed);
    expect(near(d2.high_conf_ratio, 0.75, 1e-12), "diagnostics: mixed high ratio");
    expect(near(d2.pair_pass_ratio, 2.0 / 12.0, 1e-12),
           "diagnostics: mixed pass ratio");
    expect(d2.false_positive_pair_rate &&
               near(*d2.false_positive_pair_rate, 1.0, 1e-12),
           "diagnostics: mixed false-positive rate");
  }
  if (res.passed) {
    res.detail = fmt("%llu hand values matched",
                     static_cast<unsigned long long>(res.cases));
  }
  return res;
}

// --- EMA closed form ---------------------------------------------------------

PropertyResult check_ema_closed_form() {
  PropertyResult res{"ema-closed-form", true, 0, ""};
  RngStream rng = RngStream::derive(7, "ema_check");
  auto make_set = [&](const char* suffix) {
    ParamSet ps;
    std::vector<double> w(6), b(4);
    for (auto& x : w) x = rng.uniform(-1.0, 1.0);
    for (auto& x : b) x = rng.uniform(-1.0, 1.0);
    ps.add(std::string("w") + suffix, Tensor::from({2, 3}, std::move(w)));
    ps.add(std::string("b") + suffix, Tensor::from({4}, std::move(b)));
    return ps;
  };
  // same names in both sets so ema_update can align them
  ParamSet params = make_set("");
  for (double decay : {0.999, 0.99, 0.9}) {
    ParamSet shadow = make_set("");
    ParamSet s0 = shadow;
    const int t_max = 1000;
    for (int t = 1; t <= t_max; ++t) {
      ema_update(shadow, params, decay);
      ++res.cases;
    }
    const double dt = std::pow(decay, static_cast<double>(t_max));
    for (std::size_t i = 0; i < shadow.count(); ++i) {
      const auto& sv = shadow.items()[i].value.data();
      const auto& s0v = s0.items()[i].value.data();
      const auto& pv = params.items()[i].value.data();
      for (std::size_t e = 0; e < sv.size(); ++e) {
        const double want = dt * s0v[e] + (1.0 - dt) * pv[e];
        if (std::abs(sv[e] - want) > 1e-12) {
          res.passed = false;
          res.detail = fmt("decay=%.3f elem=%zu shadow=%.17g closed=%.17g",
                           decay, e, sv[e], want);
          return res;
        }
      }
    }
  }
  // edge decays
  {
    ParamSet shadow = make_set("");
    ema_update(shadow, params, 0.0);
    ++res.cases;
    for (std::size_t i = 0; i < shadow.count(); ++i) {
      if (shadow.items()[i].value.data() != params.items()[i].value.data()) {
        res.passed = false;
        res.detail = "decay 0 must copy params";
        return res;
      }
    }
    ParamSet frozen = make_set("");
    bool rejected = false;
    try {
      ema_update(frozen, params, 1.0);
    } catch (const ValueError&) {
      rejected = true;
    }
    ++res.cases;
    if (!rejected) {
      res.passed = false;
      res.detail = "decay 1 (shadow never moves) must be rejected";
      return res;
    }
  }
  res.detail = fmt("%llu updates within 1e-12 of the closed form",
                   static_cast<unsigned long long>(res.cases));
  return res;
}

// --- RNG -----------------------------------------------------------------

PropertyResult check_rng_determinism() {
  PropertyResult res{"rng-determinism", true, 0, ""};
  auto fail = [&](const char* what) {
    res.passed = false;
    res.detail = what;
  };

  RngStream a1 = RngStream::derive(42, "alpha");
  RngStream a2 = RngStream::derive(42, "alpha");
  RngStream b = RngStream::derive(42, "beta");
  bool any_diff = false;
  for (int i = 0; i < 100; ++i) {
    const std::uint64_t x = a1.next_u64();
    ++res.cases;
    if (x != a2.next_u64()) {
      fail("identical streams diverged");
      return res;
    }
    if (x != b.next_u64()) any_diff = true;
  }
  if (!any_diff) {
    fail("differently named streams agree on 100 draws");
    return res;
  }

  RngStream u = RngStream::derive(7, "uniform");
  for (int i = 0; i < 100000; ++i) {
    const double x = u.uniform();
    ++res.cases;
    if (!(x >= 0.0 && x < 1.0)) {
      fail("uniform out of [0,1)");
      return res;
    }
  }

  RngStream nrm = RngStream::derive(7, "normal");
  const std::uint64_t c0 = nrm.counter();
  (void)nrm.normal();
  ++res.cases;
  if (nrm.counter() != c0 + 2) {
    fail("normal() must consume exactly two ticks");
    return res;
  }

  for (std::uint64_t epoch : {0ull, 1ull, 7ull}) {
    std::vector<std::size_t> perm = keyed_permutation(99, epoch, 1000);
    std::vector<std::size_t> sorted = perm;
    std::sort(sorted.begin(), sorted.end());
    ++res.cases;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      if (sorted[i] != i) {
        fail("keyed_permutation is not a permutation");
        return res;
      }
    }
  }
  if (keyed_permutation(99, 0, 1000) == keyed_permutation(99, 1, 1000)) {
    fail("distinct epochs must reshuffle");
    return res;
  }
  ++res.cases;

  res.detail = fmt("%llu draws and permutations behaved",
                   static_cast<unsigned long long>(res.cases));
  return res;
}

std::vector<PropertyResult> run_property_suites(const PropertyOptions& opt) {
  std::vector<PropertyResult> out;
  out.push_back(check_theorem_bound(opt.theorem_samples, opt.seed));
  out.push_back(check_pair_loss_oracle(opt.pair_batches, opt.seed));
  out.push_back(check_gradients(opt.gradcheck_seeds, opt.seed));
  out.push_back(check_sharpen_similarity_units());
  out.push_back(check_ema_closed_form());
  out.push_back(check_rng_determinism());
  return out;
}

}  // namespace simple
