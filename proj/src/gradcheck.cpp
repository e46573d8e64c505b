// Copyright 2026 The bcnet Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "bcnet/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>

#include "bcnet/autograd.hpp"
#include "bcnet/error.hpp"
#include "bcnet/rng.hpp"

namespace bcnet::gradcheck {

namespace {

using Vec = std::vector<double>;
using Pattern = std::vector<int>;

// ---- double-precision reference ops (HWC, one image) ----

struct ConvDims {
  std::size_t h, w, cin, kh, kw, cout, stride;
  bool same;
  std::size_t out_h = 0, out_w = 0, pad_top = 0, pad_left = 0;
};

void resolve(ConvDims& d) {
  if (d.same) {
    d.out_h = (d.h + d.stride - 1) / d.stride;
    d.out_w = (d.w + d.stride - 1) / d.stride;
    const long th = static_cast<long>((d.out_h - 1) * d.stride + d.kh) - static_cast<long>(d.h);
    const long tw = static_cast<long>((d.out_w - 1) * d.stride + d.kw) - static_cast<long>(d.w);
    d.pad_top = static_cast<std::size_t>(std::max(th, 0L) / 2);
    d.pad_left = static_cast<std::size_t>(std::max(tw, 0L) / 2);
  } else {
    d.out_h = (d.h - d.kh) / d.stride + 1;
    d.out_w = (d.w - d.kw) / d.stride + 1;
  }
}

Vec ref_conv(const Vec& x, const Vec& k, const Vec& b, const ConvDims& d) {
  Vec y(d.out_h * d.out_w * d.cout);
  for (std::size_t oy = 0; oy < d.out_h; ++oy)
    for (std::size_t ox = 0; ox < d.out_w; ++ox)
      for (std::size_t co = 0; co < d.cout; ++co) {
        double acc = b[co];
        for (std::size_t ky = 0; ky < d.kh; ++ky)
          for (std::size_t kx = 0; kx < d.kw; ++kx) {
            const long iy = static_cast<long>(oy * d.stride + ky) - static_cast<long>(d.pad_top);
            const long ix = static_cast<long>(ox * d.stride + kx) - static_cast<long>(d.pad_left);
            if (iy < 0 || ix < 0 || iy >= static_cast<long>(d.h) || ix >= static_cast<long>(d.w))
              continue;
            for (std::size_t ci = 0; ci < d.cin; ++ci)
              acc += x[(iy * d.w + ix) * d.cin + ci] *
                     k[((ky * d.kw + kx) * d.cin + ci) * d.cout + co];
          }
        y[(oy * d.out_w + ox) * d.cout + co] = acc;
      }
  return y;
}

Vec ref_relu(const Vec& x, Pattern* pattern) {
  Vec y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    y[i] = x[i] > 0 ? x[i] : 0.0;
    if (pattern) pattern->push_back(x[i] > 0);
  }
  return y;
}

Vec ref_pool(const Vec& x, std::size_t h, std::size_t w, std::size_t c, Pattern* pattern) {
  const std::size_t oh = h / 2, ow = w / 2;
  Vec y(oh * ow * c);
  for (std::size_t oy = 0; oy < oh; ++oy)
    for (std::size_t ox = 0; ox < ow; ++ox)
      for (std::size_t ch = 0; ch < c; ++ch) {
        int best = 0;
        double best_v = x[((2 * oy) * w + 2 * ox) * c + ch];
        for (int cell = 1; cell < 4; ++cell) {
          const std::size_t yy = 2 * oy + cell / 2, xx = 2 * ox + cell % 2;
          const double v = x[(yy * w + xx) * c + ch];
          if (v > best_v) {
            best_v = v;
            best = cell;
          }
        }
        y[(oy * ow + ox) * c + ch] = best_v;
        if (pattern) pattern->push_back(best);
      }
  return y;
}

Vec ref_dense(const Vec& x, std::size_t batch, std::size_t n, const Vec& wts, std::size_t m,
              const Vec& b) {
  Vec y(batch * m);
  for (std::size_t r = 0; r < batch; ++r)
    for (std::size_t j = 0; j < m; ++j) {
      double acc = b[j];
      for (std::size_t i = 0; i < n; ++i) acc += x[r * n + i] * wts[i * m + j];
      y[r * m + j] = acc;
    }
  return y;
}

double ref_mse(const Vec& predicted, const Vec& actual) {
  double s = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double d = actual[i] - predicted[i];
    s += d * d;
  }
  return s / static_cast<double>(predicted.size());
}

double dot(const Vec& a, const Vec& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// ---- cases ----

struct Case {
  std::vector<Tensor> inputs;  // every input is differentiated
  std::function<ag::Var(std::vector<ag::Var>&)> engine;
  std::function<double(const std::vector<Vec>&, Pattern*)> reference;
};

Vec to_double(const Tensor& t) { return Vec(t.data().begin(), t.data().end()); }

Tensor random_tensor(Rng& rng, Shape shape, float lo = -1.0f, float hi = 1.0f) {
  Tensor t(std::move(shape));
  for (float& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(rng.below(hi - lo + 1));
}

Case conv_case(Rng& rng, bool pointwise) {
  ConvDims d{};
  d.h = pick(rng, pointwise ? 1 : 3, 7);
  d.w = pick(rng, pointwise ? 1 : 3, 7);
  d.cin = pick(rng, 1, 3);
  d.cout = pick(rng, 1, 3);
  if (pointwise) {
    d.kh = d.kw = 1;
    d.stride = 1;
    d.same = false;
  } else {
    d.kh = pick(rng, 1, std::min<std::size_t>(3, d.h));
    d.kw = pick(rng, 1, std::min<std::size_t>(3, d.w));
    d.stride = pick(rng, 1, 2);
    d.same = rng.below(2) == 1;
  }
  resolve(d);
  Case c;
  c.inputs.push_back(random_tensor(rng, {d.h, d.w, d.cin}));
  c.inputs.push_back(random_tensor(rng, {d.kh, d.kw, d.cin, d.cout}));
  c.inputs.push_back(random_tensor(rng, {d.cout}));
  const Tensor proj = random_tensor(rng, {d.out_h, d.out_w, d.cout});
  const auto padding = d.same ? ops::Padding::same : ops::Padding::valid;
  c.engine = [proj, d, padding, pointwise](std::vector<ag::Var>& v) {
    auto y = pointwise ? ag::conv1x1(v[0], v[1], v[2])
                       : ag::conv2d(v[0], v[1], v[2], d.stride, padding);
    return ag::weighted_sum(y, proj);
  };
  const Vec r = to_double(proj);
  c.reference = [r, d](const std::vector<Vec>& in, Pattern*) {
    return dot(r, ref_conv(in[0], in[1], in[2], d));
  };
  return c;
}

Case pool_case(Rng& rng) {
  const std::size_t h = pick(rng, 2, 7), w = pick(rng, 2, 7), ch = pick(rng, 1, 3);
  Case c;
  c.inputs.push_back(random_tensor(rng, {h, w, ch}));
  const Tensor proj = random_tensor(rng, {h / 2, w / 2, ch});
  c.engine = [proj](std::vector<ag::Var>& v) {
    return ag::weighted_sum(ag::maxpool2d(v[0]), proj);
  };
  const Vec r = to_double(proj);
  c.reference = [r, h, w, ch](const std::vector<Vec>& in, Pattern* p) {
    return dot(r, ref_pool(in[0], h, w, ch, p));
  };
  return c;
}

Case dense_case(Rng& rng) {
  const std::size_t batch = pick(rng, 1, 3), n = pick(rng, 1, 8), m = pick(rng, 1, 6);
  Case c;
  c.inputs.push_back(batch == 1 ? random_tensor(rng, {n}) : random_tensor(rng, {batch, n}));
  c.inputs.push_back(random_tensor(rng, {n, m}));
  c.inputs.push_back(random_tensor(rng, {m}));
  const Tensor proj = random_tensor(rng, batch == 1 ? Shape{m} : Shape{batch, m});
  c.engine = [proj](std::vector<ag::Var>& v) {
    return ag::weighted_sum(ag::dense(v[0], v[1], v[2]), proj);
  };
  const Vec r = to_double(proj);
  c.reference = [r, batch, n, m](const std::vector<Vec>& in, Pattern*) {
    return dot(r, ref_dense(in[0], batch, n, in[1], m, in[2]));
  };
  return c;
}

Case relu_case(Rng& rng) {
  const std::size_t n = pick(rng, 1, 24);
  Case c;
  c.inputs.push_back(random_tensor(rng, {n}));
  const Tensor proj = random_tensor(rng, {n});
  c.engine = [proj](std::vector<ag::Var>& v) { return ag::weighted_sum(ag::relu(v[0]), proj); };
  const Vec r = to_double(proj);
  c.reference = [r](const std::vector<Vec>& in, Pattern* p) {
    return dot(r, ref_relu(in[0], p));
  };
  return c;
}

Case flatten_case(Rng& rng) {
  const std::size_t h = pick(rng, 1, 4), w = pick(rng, 1, 4), ch = pick(rng, 1, 3);
  Case c;
  c.inputs.push_back(random_tensor(rng, {h, w, ch}));
  const Tensor proj = random_tensor(rng, {h * w * ch});
  c.engine = [proj](std::vector<ag::Var>& v) {
    return ag::weighted_sum(ag::flatten(v[0]), proj);
  };
  const Vec r = to_double(proj);
  c.reference = [r](const std::vector<Vec>& in, Pattern*) { return dot(r, in[0]); };
  return c;
}

Case mse_case(Rng& rng) {
  const std::size_t n = pick(rng, 1, 8);
  Case c;
  c.inputs.push_back(random_tensor(rng, {n}, -3.0f, 3.0f));
  const Tensor actual = random_tensor(rng, {n}, -3.0f, 3.0f);
  c.engine = [actual](std::vector<ag::Var>& v) { return ag::mse_loss(v[0], actual); };
  const Vec a = to_double(actual);
  c.reference = [a](const std::vector<Vec>& in, Pattern*) { return ref_mse(in[0], a); };
  return c;
}

Case composite_case(Rng& rng) {
  ConvDims d{8, 8, 2, 3, 3, 3, 1, false};
  resolve(d);  // 6x6x3
  const std::size_t pooled = (d.out_h / 2) * (d.out_w / 2) * d.cout;
  Case c;
  c.inputs.push_back(random_tensor(rng, {8, 8, 2}));
  c.inputs.push_back(random_tensor(rng, {3, 3, 2, 3}, -0.5f, 0.5f));
  c.inputs.push_back(random_tensor(rng, {3}, -0.2f, 0.2f));
  c.inputs.push_back(random_tensor(rng, {pooled, 1}, -0.5f, 0.5f));
  c.inputs.push_back(random_tensor(rng, {1}, -0.2f, 0.2f));
  const Tensor target = random_tensor(rng, {1}, -2.0f, 2.0f);
  c.engine = [target](std::vector<ag::Var>& v) {
    auto y = ag::conv2d(v[0], v[1], v[2], 1, ops::Padding::valid);
    y = ag::flatten(ag::maxpool2d(ag::relu(y)));
    return ag::mse_loss(ag::dense(y, v[3], v[4]), target);
  };
  const Vec t = to_double(target);
  c.reference = [t, d, pooled](const std::vector<Vec>& in, Pattern* p) {
    Vec y = ref_relu(ref_conv(in[0], in[1], in[2], d), p);
    y = ref_pool(y, d.out_h, d.out_w, d.cout, p);
    return ref_mse(ref_dense(y, 1, pooled, in[3], 1, in[4]), t);
  };
  return c;
}

Case make_case(std::string_view op, Rng& rng) {
  if (op == "conv2d") return conv_case(rng, false);
  if (op == "conv1x1") return conv_case(rng, true);
  if (op == "maxpool2d") return pool_case(rng);
  if (op == "dense") return dense_case(rng);
  if (op == "relu") return relu_case(rng);
  if (op == "flatten") return flatten_case(rng);
  if (op == "mse_loss") return mse_case(rng);
  if (op == "composite") return composite_case(rng);
  throw UsageError("gradcheck: unknown op '" + std::string(op) + "'");
}

struct CaseResult {
  std::size_t elements = 0;
  double max_error = 0.0;
};

// nullopt when a perturbation changes the ReLU/argmax pattern (the finite
// difference would straddle a kink or tie).
std::optional<CaseResult> run_case(Case& c, double h) {
  ag::Tape tape;
  std::vector<ag::Var> vars;
  for (auto& t : c.inputs) vars.push_back(tape.parameter(t, true));
  for (auto& t : c.inputs) t.zero_grad();
  tape.backward(c.engine(vars));

  std::vector<Vec> point;
  for (const auto& t : c.inputs) point.push_back(to_double(t));
  Pattern base;
  c.reference(point, &base);

  CaseResult result;
  for (std::size_t i = 0; i < point.size(); ++i) {
    const auto analytic = std::as_const(c.inputs[i]).grad();
    for (std::size_t j = 0; j < point[i].size(); ++j) {
      const double orig = point[i][j];
      Pattern plus_p, minus_p;
      point[i][j] = orig + h;
      const double plus = c.reference(point, &plus_p);
      point[i][j] = orig - h;
      const double minus = c.reference(point, &minus_p);
      point[i][j] = orig;
      if (plus_p != base || minus_p != base) return std::nullopt;
      const double numeric = (plus - minus) / (2.0 * h);
      result.max_error = std::max(result.max_error, relative_error(analytic[j], numeric));
      ++result.elements;
    }
  }
  return result;
}

}  // namespace

double relative_error(double analytic, double numeric) noexcept {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-2});
  return std::abs(analytic - numeric) / denom;
}

const std::vector<std::string>& op_names() {
  static const std::vector<std::string> names = {
      "conv2d", "conv1x1", "maxpool2d", "dense", "relu", "flatten", "mse_loss", "composite"};
  return names;
}

OpReport check_op(std::string_view op, const Options& options) {
  OpReport report;
  report.op = std::string(op);
  Rng rng(derive_seed(options.seed, {fnv1a64(op)}));
  std::size_t attempts = 0;
  while (report.instances < options.instances) {
    if (++attempts > options.instances * 50)
      throw NumericError("gradcheck: could not draw kink-free instances for " + report.op);
    Case c = make_case(op, rng);
    auto r = run_case(c, options.step);
    if (!r) continue;
    ++report.instances;
    report.elements += r->elements;
    report.max_relative_error = std::max(report.max_relative_error, r->max_error);
  }
  report.passed = report.max_relative_error < options.tolerance;
  return report;
}

std::vector<OpReport> check_all(const Options& options) {
  std::vector<OpReport> out;
  for (const auto& op : op_names()) out.push_back(check_op(op, options));
  return out;
}

}  // namespace bcnet::gradcheck
