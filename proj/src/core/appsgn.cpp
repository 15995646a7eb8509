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

#include "core/appsgn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>

#include "core/error.hpp"
#include "core/remez.hpp"
#include "core/rng.hpp"

namespace pann {
namespace {

double eval_chain(const std::vector<Polynomial>& chain, double x) noexcept {
  for (const auto& p : chain) x = p(x);
  return x;
}

int stage_depth(int degree) {
  return static_cast<int>(std::ceil(std::log2(static_cast<double>(degree) + 1.0)));
}

struct GridScan {
  double max_error = 0.0;
  double argmax = 0.0;
};

// Scans one branch (sign = +1 or -1) of the scaled domain.
GridScan scan_branch(const std::vector<Polynomial>& chain, double eps, double sign,
                     std::size_t n) {
  const auto err = [&](double x) { return std::abs(eval_chain(chain, sign * x) - sign); };
  std::vector<double> xs(n), es(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = (i + 1 == n) ? 1.0 : eps + (1.0 - eps) * static_cast<double>(i) / static_cast<double>(n - 1);
    es[i] = err(xs[i]);
  }
  GridScan out;
  for (std::size_t i = 0; i < n; ++i) {
    if (es[i] > out.max_error) out = {es[i], sign * xs[i]};
  }
  // Refine around the largest local maxima with Chebyshev nodes on the
  // bracketing cells.
  std::vector<std::size_t> peaks;
  for (std::size_t i = 0; i < n; ++i) {
    const bool left = i == 0 || es[i] >= es[i - 1];
    const bool right = i + 1 == n || es[i] >= es[i + 1];
    if (left && right) peaks.push_back(i);
  }
  std::sort(peaks.begin(), peaks.end(), [&](auto a, auto b) { return es[a] > es[b]; });
  if (peaks.size() > 64) peaks.resize(64);
  constexpr int kNodes = 33;
  for (std::size_t i : peaks) {
    const double lo = xs[i == 0 ? 0 : i - 1];
    const double hi = xs[i + 1 == n ? n - 1 : i + 1];
    for (int k = 0; k < kNodes; ++k) {
      const double t = std::cos(std::numbers::pi * (2.0 * k + 1.0) / (2.0 * kNodes));
      const double x = 0.5 * (lo + hi) + 0.5 * (hi - lo) * t;
      const double e = err(x);
      if (e > out.max_error) out = {e, sign * x};
    }
  }
  return out;
}

}  // namespace

double PrecisionCertificate::bound() const { return std::ldexp(1.0, -beta); }

PrecisionCertificate certify_chain(const std::vector<Polynomial>& chain, int beta, double eps0,
                                   double bound, std::size_t grid_points) {
  require(grid_points >= 2, ErrorCode::kInvalidArgument, "certification grid too small");
  const double eps = eps0 / bound;
  const GridScan pos = scan_branch(chain, eps, 1.0, grid_points);
  const GridScan neg = scan_branch(chain, eps, -1.0, grid_points);
  const GridScan& worst = neg.max_error > pos.max_error ? neg : pos;
  PrecisionCertificate cert;
  cert.beta = beta;
  cert.grid_size = grid_points;
  cert.max_error = worst.max_error;
  cert.argmax = worst.argmax * bound;
  cert.pass = std::isfinite(worst.max_error) && worst.max_error <= cert.bound();
  return cert;
}

PrecisionCertificate certify(const CompositeSgnApprox& approx, std::size_t grid_points) {
  return certify_chain(approx.chain(), approx.beta(), approx.eps0(), approx.bound(), grid_points);
}

namespace {

/// (1 - t) u + t p(u); odd whenever p is.
Polynomial blend_with_identity(const Polynomial& p, double t) {
  std::vector<double> c = p.coefficients();
  for (double& v : c) v *= t;
  if (c.size() < 2) c.resize(2, 0.0);
  c[1] += 1.0 - t;
  return Polynomial(std::move(c));
}

/// Smallest t in [0, 1] whose blended stage keeps |p_t(u) - 1| <= target on
/// [lo, hi], found by bisection on a dense grid. The stage error is
/// non-increasing in t near the optimum, so the search is well posed.
double tight_blend(const Polynomial& p, double lo, double hi, double target) {
  constexpr int kGrid = 4001;
  auto stage_error = [&](double t) {
    const Polynomial q = blend_with_identity(p, t);
    double worst = 0.0;
    for (int i = 0; i < kGrid; ++i) {
      const double u = lo + (hi - lo) * i / (kGrid - 1);
      worst = std::max(worst, std::abs(q(u) - 1.0));
    }
    return worst;
  };
  double a = 0.0, b = 1.0;
  if (stage_error(a) <= target) return a;
  for (int it = 0; it < 60; ++it) {
    const double m = 0.5 * (a + b);
    (stage_error(m) <= target ? b : a) = m;
  }
  return b;
}

}  // namespace

CompositeSgnApprox CompositeSgnApprox::build(int beta, double eps0, double bound,
                                             int max_stage_degree,
                                             const AppsgnOptions& options) {
  require(beta >= 1, ErrorCode::kInvalidArgument, "appsgn: beta must be >= 1");
  require(bound > 0.0 && eps0 > 0.0 && eps0 < bound, ErrorCode::kInvalidArgument,
          "appsgn: need 0 < eps0 < B");
  std::vector<int> degrees;
  for (int d : options.stage_degrees) {
    if (d <= max_stage_degree && d >= 3 && d % 2 == 1) degrees.push_back(d);
  }
  if (degrees.empty()) {
    const int d = max_stage_degree % 2 == 1 ? max_stage_degree : max_stage_degree - 1;
    require(d >= 3, ErrorCode::kInvalidArgument, "appsgn: stage degree must be >= 3");
    degrees.push_back(d);
  }

  std::sort(degrees.begin(), degrees.end());
  const double target = options.margin * std::ldexp(1.0, -beta);
  const double eps = eps0 / bound;
  double lo = eps, hi = 1.0;
  double achieved = 1.0;
  std::vector<Polynomial> chain;

  struct Candidate {
    Polynomial poly;
    double error;
    int depth;
  };

  for (int stage = 0; stage < options.max_stages; ++stage) {
    const double level = std::max(1.0 - lo, hi - 1.0);
    std::optional<Candidate> greedy, finisher;
    double best_score = -std::numeric_limits<double>::infinity();
    // Greedy candidates plus every smaller odd degree, so the stage that
    // finishes uses the least degree that meets the target.
    std::vector<int> trial;
    for (int d = 3; d <= degrees.back(); d += 2) trial.push_back(d);
    for (int d : trial) {
      const bool greedy_candidate = std::find(degrees.begin(), degrees.end(), d) != degrees.end();
      RemezOptions ro;
      ro.basis = RemezBasis::kOdd;
      ro.tol = std::ldexp(1.0, -(beta + 6));
      RemezResult r;
      try {
        r = remez_minimax([](double) { return 1.0; }, lo, hi, d, ro);
      } catch (const RemezNonConvergence& e) {
        r = e.last_iterate();
      }
      Candidate c{r.poly, r.max_error * (1.0 + 1e-9), stage_depth(d)};
      if (c.error <= target && !finisher) finisher = c;
      const double score = std::log2(level / c.error) / c.depth;
      if (greedy_candidate && score > best_score) {
        best_score = score;
        greedy = c;
      }
    }
    const Candidate& pick = finisher ? *finisher : *greedy;
    if (!finisher && !(std::log2(level / pick.error) > 1e-6)) break;
    chain.push_back(pick.poly);
    if (finisher) {
      auto cert = certify_chain(chain, beta, eps0, bound, options.grid_points);
      if (cert.pass && options.tight) {
        const double t = tight_blend(pick.poly, lo, hi, target);
        Polynomial blended = blend_with_identity(pick.poly, t);
        chain.back() = blended;
        auto relaxed = certify_chain(chain, beta, eps0, bound, options.grid_points);
        if (relaxed.pass) {
          cert = relaxed;
        } else {
          chain.back() = pick.poly;
        }
      }
      if (cert.pass) {
        CompositeSgnApprox out;
        out.chain_ = std::move(chain);
        out.beta_ = beta;
        out.eps0_ = eps0;
        out.bound_ = bound;
        out.cert_ = cert;
        return out;
      }
      achieved = cert.max_error;
    } else {
      achieved = pick.error;
    }
    lo = 1.0 - achieved;
    hi = 1.0 + achieved;
    if (!(lo > 0.0)) break;
  }
  fail(ErrorCode::kInfeasible,
       "appsgn: beta=" + std::to_string(beta) + " unattainable within " +
           std::to_string(options.max_stages) + " stages; achieved precision " +
           std::to_string(-std::log2(achieved)) + " bits");
}

CompositeSgnApprox CompositeSgnApprox::from_chain(std::vector<Polynomial> chain, int beta,
                                                  double eps0, double bound,
                                                  std::size_t grid_points) {
  require(bound > 0.0 && eps0 > 0.0 && eps0 < bound, ErrorCode::kInvalidArgument,
          "appsgn: need 0 < eps0 < B");
  for (const auto& p : chain) {
    require(p.is_odd(), ErrorCode::kNotCertified, "appsgn: chain element is not odd");
  }
  auto cert = certify_chain(chain, beta, eps0, bound, grid_points);
  require(cert.pass, ErrorCode::kNotCertified,
          "appsgn: chain fails certification (max error " + std::to_string(cert.max_error) +
              " > 2^-" + std::to_string(beta) + ")");
  CompositeSgnApprox out;
  out.chain_ = std::move(chain);
  out.beta_ = beta;
  out.eps0_ = eps0;
  out.bound_ = bound;
  out.cert_ = cert;
  return out;
}

double CompositeSgnApprox::sgn(double z) const noexcept { return eval_chain(chain_, z / bound_); }

void CompositeSgnApprox::sgn_with_derivative(double z, double& value, double& slope) const noexcept {
  double x = z / bound_;
  double d = 1.0 / bound_;
  for (const auto& p : chain_) {
    d *= p.derivative_at(x);
    x = p(x);
  }
  value = x;
  slope = d;
}

int CompositeSgnApprox::depth() const noexcept {
  int total = 0;
  for (const auto& p : chain_) total += stage_depth(p.degree());
  return total;
}

double app_relu(double z, const CompositeSgnApprox& approx) {
  const double b = approx.bound();
  const double s = approx.sgn(std::clamp(z, -b, b));
  return (z + z * s) / 2.0;
}

Tensor app_relu(const Tensor& z, const CompositeSgnApprox& approx) {
  Tensor out(z.shape());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = app_relu(z[i], approx);
  return out;
}

bool admits(SignFilter filter, double z) noexcept {
  switch (filter) {
    case SignFilter::kAll:
      return true;
    case SignFilter::kNegOnly:
      return z < 0.0;
    case SignFilter::kPosOnly:
      return z > 0.0;
  }
  return false;
}

double injected_sgn_error(int beta, InjectionKind kind, std::uint64_t seed,
                          std::uint64_t counter) noexcept {
  const double u = hash_uniform(seed, counter);
  const double scale = std::ldexp(1.0, -beta);
  if (kind == InjectionKind::kWorstCaseFixed) return u < 0.5 ? -scale : scale;
  return (2.0 * u - 1.0) * scale;
}

Tensor error_injection_relu(const Tensor& z, int beta, SignFilter filter, InjectionKind kind,
                            std::uint64_t seed) {
  Tensor out(z.shape());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double v = z[i];
    double y = v > 0.0 ? v : 0.0;
    if (admits(filter, v)) y += injected_sgn_error(beta, kind, seed, i) * v / 2.0;
    out[i] = y;
  }
  return out;
}

nlohmann::json to_json(const CompositeSgnApprox& approx) {
  nlohmann::json chain = nlohmann::json::array();
  for (const auto& p : approx.chain()) {
    chain.push_back({{"degree", p.degree()}, {"coefficients", p.coefficients()}});
  }
  const auto& c = approx.certificate();
  return {
      {"format", "pann.appsgn"},
      {"version", 1},
      {"beta", approx.beta()},
      {"eps0", approx.eps0()},
      {"bound", approx.bound()},
      {"chain", chain},
      {"certificate",
       {{"beta", c.beta},
        {"grid_size", c.grid_size},
        {"max_error", c.max_error},
        {"argmax", c.argmax},
        {"pass", c.pass}}},
  };
}

CompositeSgnApprox approx_from_json(const nlohmann::json& j) {
  try {
    require(j.at("format").get<std::string>() == "pann.appsgn", ErrorCode::kParse,
            "not an appsgn document");
    std::vector<Polynomial> chain;
    for (const auto& stage : j.at("chain")) {
      chain.emplace_back(stage.at("coefficients").get<std::vector<double>>());
    }
    std::size_t grid = 100000;
    if (j.contains("certificate")) grid = j["certificate"].value("grid_size", grid);
    return CompositeSgnApprox::from_chain(std::move(chain), j.at("beta").get<int>(),
                                          j.at("eps0").get<double>(),
                                          j.at("bound").get<double>(), grid);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kParse, std::string("appsgn json: ") + e.what());
  }
}

const char* to_string(SignFilter f) {
  switch (f) {
    case SignFilter::kAll:
      return "all";
    case SignFilter::kNegOnly:
      return "neg_only";
    case SignFilter::kPosOnly:
      return "pos_only";
  }
  return "?";
}

const char* to_string(InjectionKind k) {
  return k == InjectionKind::kUniformRandom ? "uniform_random" : "worst_case_fixed";
}

const char* to_string(OverflowPolicy p) {
  switch (p) {
    case OverflowPolicy::kClampToB:
      return "clamp_to_B";
    case OverflowPolicy::kWidenAndRecertify:
      return "widen_and_recertify";
    case OverflowPolicy::kError:
      return "error";
  }
  return "?";
}

SignFilter parse_sign_filter(const std::string& s) {
  if (s == "all") return SignFilter::kAll;
  if (s == "neg_only" || s == "neg") return SignFilter::kNegOnly;
  if (s == "pos_only" || s == "pos") return SignFilter::kPosOnly;
  fail(ErrorCode::kInvalidArgument, "unknown sign filter '" + s + "'");
}

InjectionKind parse_injection_kind(const std::string& s) {
  if (s == "uniform_random" || s == "uniform") return InjectionKind::kUniformRandom;
  if (s == "worst_case_fixed" || s == "worst_case") return InjectionKind::kWorstCaseFixed;
  fail(ErrorCode::kInvalidArgument, "unknown injection mode '" + s + "'");
}

OverflowPolicy parse_overflow_policy(const std::string& s) {
  if (s == "clamp_to_B" || s == "clamp") return OverflowPolicy::kClampToB;
  if (s == "widen_and_recertify" || s == "widen") return OverflowPolicy::kWidenAndRecertify;
  if (s == "error") return OverflowPolicy::kError;
  fail(ErrorCode::kInvalidArgument, "unknown overflow policy '" + s + "'");
}

}  // namespace pann
