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

#include "core/transform.hpp"

#include <algorithm>
#include <cmath>

#include "core/error.hpp"

namespace pann {

namespace {

// The chain depends only on z / B, so rescaling keeps the precision; the
// certificate is still recomputed at the new scale.
std::shared_ptr<const CompositeSgnApprox> rescale(const CompositeSgnApprox& a, double bound) {
  const double eps0 = a.eps0() * bound / a.bound();
  return std::make_shared<const CompositeSgnApprox>(CompositeSgnApprox::from_chain(
      a.chain(), a.beta(), eps0, bound, a.certificate().grid_size));
}

}  // namespace

double calibrate_max_preactivation(const Network& net, const Tensor& x, std::size_t batch_size) {
  require(batch_size > 0, ErrorCode::kInvalidArgument, "calibration batch size must be positive");
  double m = 0.0;
  const std::size_t n = x.dim(0);
  for (std::size_t begin = 0; begin < n; begin += batch_size) {
    const std::size_t end = std::min(n, begin + batch_size);
    ForwardOptions opt;
    opt.record_slopes = false;
    opt.sample_offset = begin;
    const auto fwd = forward(net, x.slice_rows(begin, end), opt);
    for (std::size_t k = 0; k < fwd.trace.activation_layers.size(); ++k)
      m = std::max(m, fwd.trace.preactivation(k).max_abs());
  }
  return m;
}

double calibrated_bound(const Network& net, const Tensor& x, std::size_t batch_size) {
  return std::max(1.2 * calibrate_max_preactivation(net, x, batch_size), 1e-6);
}

Network transform(const Network& net, const ActivationMode& mode, const IntervalPolicy& policy,
                  const TransformOptions& options) {
  require(policy.bound > 0.0, ErrorCode::kInvalidArgument, "transform: B must be positive");
  const auto slots = net.activation_layers();
  require(options.mask.empty() || options.mask.size() == slots.size(),
          ErrorCode::kInvalidArgument, "transform: mask length does not match slot count");
  require(options.partial_c.empty() || options.partial_c.size() == slots.size(),
          ErrorCode::kInvalidArgument, "transform: per-slot c length does not match slot count");

  ActivationMode base = mode;
  nlohmann::json record{{"mode", mode_name(mode)},
                        {"policy", {{"B", policy.bound}, {"overflow", to_string(policy.overflow)}}}};
  if (auto* cm = std::get_if<CompositeMode>(&base)) {
    if (!cm->approx) fail(ErrorCode::kNotCertified, "transform: composite mode has no approximant");
    if (!cm->approx->certificate().pass)
      fail(ErrorCode::kNotCertified, "transform: approximant certificate does not pass");
    cm->overflow = policy.overflow;
    if (policy.overflow == OverflowPolicy::kWidenAndRecertify && options.calibration_max &&
        *options.calibration_max > cm->approx->bound()) {
      cm->approx = rescale(*cm->approx, 1.2 * *options.calibration_max);
    }
    record["beta"] = cm->approx->beta();
    record["B"] = cm->approx->bound();
    record["eps0"] = cm->approx->eps0();
    record["depth"] = cm->approx->depth();
  } else if (const auto* im = std::get_if<InjectedMode>(&base)) {
    record["beta"] = im->beta;
    record["filter"] = to_string(im->filter);
    record["kind"] = to_string(im->kind);
    record["seed"] = im->seed;
  } else if (const auto* tm = std::get_if<TruncatedMode>(&base)) {
    record["total_bits"] = tm->format.total_bits;
    record["frac_bits"] = tm->format.frac_bits;
  } else if (const auto* pm = std::get_if<PartialReplaceMode>(&base)) {
    record["poly"] = pm->poly.coefficients();
    record["binarized"] = pm->binarized;
  }

  Network out = net;
  std::vector<bool> applied;
  for (std::size_t k = 0; k < slots.size(); ++k) {
    auto& layer = std::get<ActivationLayer>(out.layers()[slots[k]]);
    if (!std::holds_alternative<ExactRelu>(layer.mode)) {
      fail(ErrorCode::kPrecondition, "transform: slot " + std::to_string(k) + " (layer " +
                                         std::to_string(slots[k]) + ") is not exact ReLU");
    }
    const bool selected = options.mask.empty() || options.mask[k];
    applied.push_back(selected);
    if (!selected) continue;
    ActivationMode m = base;
    if (auto* im = std::get_if<InjectedMode>(&m)) im->seed = derive_seed(im->seed, k);
    if (auto* pm = std::get_if<PartialReplaceMode>(&m); pm && !options.partial_c.empty()) {
      pm->c = options.partial_c[k];
    }
    if (const auto* pm = std::get_if<PartialReplaceMode>(&m)) {
      require(pm->c >= 0.0 && pm->c <= 1.0, ErrorCode::kInvalidArgument,
              "transform: partial replacement c outside [0, 1]");
      require(!pm->binarized || pm->c == 0.0 || pm->c == 1.0, ErrorCode::kInvalidArgument,
              "transform: binarized slot needs c in {0, 1}");
    }
    layer.mode = std::move(m);
  }
  record["mask"] = applied;
  if (!options.partial_c.empty()) record["partial_c"] = options.partial_c;
  out.metadata["pann"] = record;
  return out;
}

Network restore_backbone(const Network& net) {
  Network out = net;
  for (std::size_t li : out.activation_layers())
    std::get<ActivationLayer>(out.layers()[li]).mode = ExactRelu{};
  out.metadata.erase("pann");
  return out;
}

CompositeMode make_composite_mode(int beta, double bound, OverflowPolicy overflow,
                                  int max_stage_degree) {
  const double eps0 = std::ldexp(bound, -beta);
  return CompositeMode{std::make_shared<const CompositeSgnApprox>(
                           CompositeSgnApprox::build(beta, eps0, bound, max_stage_degree)),
                       overflow};
}

double replacement_error(double g_val, double p_val, double c, bool binarized_to_g) {
  require(c >= 0.0 && c <= 1.0, ErrorCode::kInvalidArgument, "replacement_error: c outside [0, 1]");
  return binarized_to_g ? (1.0 - c) * (g_val - p_val) : c * (p_val - g_val);
}

Polynomial default_quadratic_replacement() { return Polynomial({0.28, 0.5, 0.14}); }

}  // namespace pann
