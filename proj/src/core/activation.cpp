// Copyright 2026 The Sturdy PANN Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "core/activation.hpp"

#include <algorithm>
#include <cmath>

#include "core/error.hpp"

namespace pann {

void ActivationStats::merge(const ActivationStats& o) {
  total += o.total;
  overflow += o.overflow;
  saturated += o.saturated;
  max_abs = std::max(max_abs, o.max_abs);
}

namespace {

void exact_relu(const Tensor& z, Tensor& y, Tensor* slope) {
  for (std::size_t i = 0; i < z.size(); ++i) {
    const bool on = z[i] > 0.0;
    y[i] = on ? z[i] : 0.0;
    if (slope) (*slope)[i] = on ? 1.0 : 0.0;
  }
}

void composite(const CompositeMode& m, const Tensor& z, Tensor& y, Tensor* slope,
               ActivationStats* stats) {
  if (!m.approx) fail(ErrorCode::kPrecondition, "composite activation without an approximant");
  const CompositeSgnApprox& a = *m.approx;
  const double b = a.bound();
  std::size_t over = 0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double v = z[i];
    if (std::abs(v) > b) {
      ++over;
      if (m.overflow == OverflowPolicy::kError) {
        fail(ErrorCode::kOverflow, "pre-activation " + std::to_string(v) +
                                       " exceeds the approximation interval B = " +
                                       std::to_string(b) + " at element " + std::to_string(i));
      }
      // Appsgn is frozen at +-B outside the interval; the output stays linear in z.
      const double s = a.sgn(v > 0.0 ? b : -b);
      y[i] = (v + v * s) / 2.0;
      if (slope) (*slope)[i] = (1.0 + s) / 2.0;
    } else if (slope) {
      double s, ds;
      a.sgn_with_derivative(v, s, ds);
      y[i] = (v + v * s) / 2.0;
      (*slope)[i] = (1.0 + s + v * ds) / 2.0;
    } else {
      const double s = a.sgn(v);
      y[i] = (v + v * s) / 2.0;
    }
  }
  if (stats) stats->overflow += over;
}

void injected(const InjectedMode& m, const Tensor& z, Tensor& y, Tensor* slope,
              std::uint64_t first_counter) {
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double v = z[i];
    const bool on = v > 0.0;
    double out = on ? v : 0.0;
    double d = on ? 1.0 : 0.0;
    if (admits(m.filter, v)) {
      double e = injected_sgn_error(m.beta, m.kind, m.seed, first_counter + i);
      if (m.negate) e = -e;
      out += e * v / 2.0;
      d += e / 2.0;
    }
    y[i] = out;
    if (slope) (*slope)[i] = d;
  }
}

void partial(const PartialReplaceMode& m, const Tensor& z, Tensor& y, Tensor* slope) {
  const double c = m.c;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double v = z[i];
    const bool on = v > 0.0;
    y[i] = c * (on ? v : 0.0) + (1.0 - c) * m.poly(v);
    if (slope) (*slope)[i] = c * (on ? 1.0 : 0.0) + (1.0 - c) * m.poly.derivative_at(v);
  }
}

void truncated(const TruncatedMode& m, const Tensor& z, Tensor& y, Tensor* slope,
               ActivationStats* stats) {
  std::size_t sat = 0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    bool s = false;
    const FixedValue q = quantize(z[i], m.format, &s);
    sat += s ? 1 : 0;
    const bool keep = truncation_sign(q) == SignResult::kNonNegative;
    y[i] = keep ? q.value() : 0.0;
    // Straight-through slope of the quantizer.
    if (slope) (*slope)[i] = keep ? 1.0 : 0.0;
  }
  if (stats) stats->saturated += sat;
}

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

}  // namespace

void apply_activation(const ActivationMode& mode, const Tensor& z, Tensor& y, Tensor* slope,
                      const ActivationContext& ctx) {
  if (y.shape() != z.shape()) y = Tensor(z.shape());
  if (slope && slope->shape() != z.shape()) *slope = Tensor(z.shape());
  std::visit(Overloaded{
                 [&](const ExactRelu&) { exact_relu(z, y, slope); },
                 [&](const CompositeMode& m) { composite(m, z, y, slope, ctx.stats); },
                 [&](const InjectedMode& m) {
                   const std::size_t per_sample = z.rank() > 0 ? z.size() / z.dim(0) : z.size();
                   injected(m, z, y, slope, ctx.sample_offset * per_sample);
                 },
                 [&](const PartialReplaceMode& m) { partial(m, z, y, slope); },
                 [&](const TruncatedMode& m) { truncated(m, z, y, slope, ctx.stats); },
             },
             mode);

  if (ctx.ngnv && ctx.ngnv_rng && ctx.ngnv->active()) {
    for (const auto& d : ngnv_draw(z, *ctx.ngnv, *ctx.ngnv_rng)) {
      y[d.index] += d.factor * z[d.index];
      if (slope) (*slope)[d.index] += d.factor;
    }
  }

  if (ctx.stats) {
    ctx.stats->total += z.size();
    ctx.stats->max_abs = std::max(ctx.stats->max_abs, z.max_abs());
  }
}

const char* mode_name(const ActivationMode& mode) {
  return std::visit(Overloaded{
                        [](const ExactRelu&) { return "exact_relu"; },
                        [](const CompositeMode&) { return "composite"; },
                        [](const InjectedMode&) { return "injected"; },
                        [](const PartialReplaceMode&) { return "partial_replace"; },
                        [](const TruncatedMode&) { return "truncated"; },
                    },
                    mode);
}

nlohmann::json to_json(const ActivationMode& mode) {
  using nlohmann::json;
  json j = std::visit(
      Overloaded{
          [](const ExactRelu&) { return json::object(); },
          [](const CompositeMode& m) {
            return json{{"approx", to_json(*m.approx)}, {"overflow", to_string(m.overflow)}};
          },
          [](const InjectedMode& m) {
            return json{{"beta", m.beta},
                        {"filter", to_string(m.filter)},
                        {"kind", to_string(m.kind)},
                        {"seed", m.seed},
                        {"negate", m.negate}};
          },
          [](const PartialReplaceMode& m) {
            return json{{"poly", m.poly.coefficients()}, {"c", m.c}, {"binarized", m.binarized}};
          },
          [](const TruncatedMode& m) {
            return json{{"total_bits", m.format.total_bits}, {"frac_bits", m.format.frac_bits}};
          },
      },
      mode);
  j["mode"] = mode_name(mode);
  return j;
}

ActivationMode activation_from_json(const nlohmann::json& j) {
  try {
    const std::string name = j.at("mode").get<std::string>();
    if (name == "exact_relu") return ExactRelu{};
    if (name == "composite") {
      auto approx = std::make_shared<const CompositeSgnApprox>(approx_from_json(j.at("approx")));
      return CompositeMode{std::move(approx),
                           parse_overflow_policy(j.value("overflow", std::string("clamp_to_B")))};
    }
    if (name == "injected") {
      return InjectedMode{j.at("beta").get<int>(),
                          parse_sign_filter(j.at("filter").get<std::string>()),
                          parse_injection_kind(j.at("kind").get<std::string>()),
                          j.at("seed").get<std::uint64_t>(), j.value("negate", false)};
    }
    if (name == "partial_replace") {
      PartialReplaceMode m{Polynomial(j.at("poly").get<std::vector<double>>()),
                           j.at("c").get<double>(), j.value("binarized", false)};
      require(m.c >= 0.0 && m.c <= 1.0, ErrorCode::kParse, "partial_replace: c outside [0, 1]");
      require(!m.binarized || m.c == 0.0 || m.c == 1.0, ErrorCode::kParse,
              "partial_replace: binarized slot needs c in {0, 1}");
      return m;
    }
    if (name == "truncated") {
      FixedPointFormat f{j.at("total_bits").get<int>(), j.at("frac_bits").get<int>()};
      f.validate();
      return TruncatedMode{f};
    }
    fail(ErrorCode::kParse, "unknown activation mode '" + name + "'");
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kParse, std::string("activation mode: ") + e.what());
  }
}

}  // namespace pann
