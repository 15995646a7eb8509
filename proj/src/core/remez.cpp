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

#include "core/remez.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace pann {
namespace {

// Chebyshev basis on an affine image of [a, b]. Solving in this basis keeps
// the exchange system well conditioned; the answer is converted to monomial
// form because Horner on monomials is the semantics everything is judged by.
class ChebyshevBasis {
 public:
  ChebyshevBasis(RemezBasis kind, double a, double b, int degree) : kind_(kind) {
    if (kind_ == RemezBasis::kFull) {
      size_ = static_cast<std::size_t>(degree) + 1;
      max_order_ = degree;
      scale_ = 2.0 / (b - a);
      shift_ = -(a + b) / (b - a);
    } else {
      size_ = static_cast<std::size_t>(degree + 1) / 2;
      max_order_ = degree;
      scale_ = 1.0 / std::max(std::abs(a), std::abs(b));
      shift_ = 0.0;
    }
  }

  std::size_t size() const { return size_; }

  void eval(double x, std::vector<double>& out) const {
    const double t = scale_ * x + shift_;
    std::vector<double> T(static_cast<std::size_t>(max_order_) + 1);
    T[0] = 1.0;
    if (max_order_ >= 1) T[1] = t;
    for (int k = 1; k < max_order_; ++k) T[k + 1] = 2.0 * t * T[k] - T[k - 1];
    out.resize(size_);
    for (std::size_t j = 0; j < size_; ++j) out[j] = T[order(j)];
  }

  Polynomial to_monomial(const Eigen::VectorXd& c) const {
    // Monomial coefficients (in t) of every T_k.
    const auto D = static_cast<std::size_t>(max_order_);
    std::vector<std::vector<double>> Tm(D + 1, std::vector<double>(D + 1, 0.0));
    Tm[0][0] = 1.0;
    if (D >= 1) Tm[1][1] = 1.0;
    for (std::size_t k = 1; k < D; ++k) {
      for (std::size_t j = 0; j <= D; ++j) {
        const double up = j >= 1 ? 2.0 * Tm[k][j - 1] : 0.0;
        Tm[k + 1][j] = up - Tm[k - 1][j];
      }
    }
    std::vector<double> in_t(D + 1, 0.0);
    for (std::size_t j = 0; j < size_; ++j) {
      for (std::size_t p = 0; p <= D; ++p) in_t[p] += c[static_cast<Eigen::Index>(j)] * Tm[order(j)][p];
    }
    std::vector<double> in_x(D + 1, 0.0);
    if (kind_ == RemezBasis::kOdd) {
      double s = 1.0;
      for (std::size_t p = 0; p <= D; ++p) {
        in_x[p] = (p % 2 == 1) ? in_t[p] * s : 0.0;
        s *= scale_;
      }
    } else {
      // Horner in polynomial arithmetic: P <- P * (scale x + shift) + in_t[p].
      std::vector<double> P;
      for (std::size_t p = D + 1; p-- > 0;) {
        std::vector<double> next(P.size() + 1, 0.0);
        for (std::size_t i = 0; i < P.size(); ++i) {
          next[i] += P[i] * shift_;
          next[i + 1] += P[i] * scale_;
        }
        next[0] += in_t[p];
        P = std::move(next);
      }
      P.resize(D + 1, 0.0);
      in_x = std::move(P);
    }
    return Polynomial(std::move(in_x));
  }

 private:
  std::size_t order(std::size_t j) const {
    return kind_ == RemezBasis::kFull ? j : 2 * j + 1;
  }

  RemezBasis kind_;
  std::size_t size_ = 0;
  int max_order_ = 0;
  double scale_ = 1.0, shift_ = 0.0;
};

struct Extremum {
  double x;
  double e;
};

std::vector<double> chebyshev_grid(double a, double b, std::size_t m) {
  std::vector<double> g(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double th = std::numbers::pi * static_cast<double>(i) / static_cast<double>(m - 1);
    g[i] = 0.5 * (a + b) - 0.5 * (b - a) * std::cos(th);
  }
  g.front() = a;
  g.back() = b;
  return g;
}

double refine_max(const std::function<double(double)>& err, double lo, double hi, double sign) {
  // Golden-section search for the maximum of sign * err on [lo, hi].
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
  double f1 = sign * err(x1), f2 = sign * err(x2);
  for (int it = 0; it < 60 && hi - lo > 1e-15 * (1.0 + std::abs(lo)); ++it) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + g * (hi - lo);
      f2 = sign * err(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - g * (hi - lo);
      f1 = sign * err(x1);
    }
  }
  return f1 > f2 ? x1 : x2;
}

// One extremum per maximal run of constant error sign, refined locally.
std::vector<Extremum> find_extrema(const std::function<double(double)>& err,
                                   const std::vector<double>& grid) {
  const std::size_t m = grid.size();
  std::vector<double> e(m);
  for (std::size_t i = 0; i < m; ++i) e[i] = err(grid[i]);

  std::vector<Extremum> out;
  std::size_t i = 0;
  int run_sign = 0;
  std::size_t best = 0;
  auto flush = [&]() {
    if (run_sign == 0) return;
    const double lo = grid[best == 0 ? 0 : best - 1];
    const double hi = grid[best + 1 >= m ? m - 1 : best + 1];
    Extremum ex{grid[best], e[best]};
    if (hi > lo) {
      const double x = refine_max(err, lo, hi, static_cast<double>(run_sign));
      const double ev = err(x);
      if (run_sign * ev > run_sign * ex.e) ex = {x, ev};
    }
    out.push_back(ex);
  };
  for (; i < m; ++i) {
    const int s = e[i] > 0 ? 1 : (e[i] < 0 ? -1 : 0);
    if (s == 0) continue;
    if (s != run_sign) {
      flush();
      run_sign = s;
      best = i;
    } else if (std::abs(e[i]) > std::abs(e[best])) {
      best = i;
    }
  }
  flush();
  return out;
}

// Trims an alternating extremum list to exactly the requested number of points while keeping
// alternation and the large-error points.
void reduce_to(std::vector<Extremum>& ex, std::size_t want) {
  while (ex.size() > want) {
    if (ex.size() == want + 1) {
      if (std::abs(ex.front().e) < std::abs(ex.back().e)) {
        ex.erase(ex.begin());
      } else {
        ex.pop_back();
      }
      continue;
    }
    std::size_t k = 0;
    for (std::size_t j = 1; j < ex.size(); ++j) {
      if (std::abs(ex[j].e) < std::abs(ex[k].e)) k = j;
    }
    if (k == 0 || k + 1 == ex.size()) {
      ex.erase(ex.begin() + static_cast<std::ptrdiff_t>(k));
    } else {
      const std::size_t nb = std::abs(ex[k - 1].e) < std::abs(ex[k + 1].e) ? k - 1 : k + 1;
      const std::size_t lo = std::min(k, nb);
      ex.erase(ex.begin() + static_cast<std::ptrdiff_t>(lo),
               ex.begin() + static_cast<std::ptrdiff_t>(lo) + 2);
    }
  }
}

// Classic single-point exchange: bring the global maximum into the
// reference while preserving sign alternation.
std::vector<double> single_exchange(std::vector<double> ref, const std::function<double(double)>& err,
                                    const Extremum& peak) {
  auto sgn = [&](double x) { return err(x) >= 0 ? 1 : -1; };
  const int ps = peak.e >= 0 ? 1 : -1;
  const std::size_t n = ref.size();
  if (peak.x < ref.front()) {
    if (sgn(ref.front()) == ps) {
      ref.front() = peak.x;
    } else {
      ref.pop_back();
      ref.insert(ref.begin(), peak.x);
    }
  } else if (peak.x > ref.back()) {
    if (sgn(ref.back()) == ps) {
      ref.back() = peak.x;
    } else {
      ref.erase(ref.begin());
      ref.push_back(peak.x);
    }
  } else {
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (peak.x >= ref[i] && peak.x <= ref[i + 1]) {
        if (sgn(ref[i]) == ps) {
          ref[i] = peak.x;
        } else {
          ref[i + 1] = peak.x;
        }
        break;
      }
    }
  }
  return ref;
}

}  // namespace

RemezResult remez_minimax(const Target& target, double a, double b, int degree,
                          const RemezOptions& options) {
  require(a < b, ErrorCode::kInvalidArgument, "remez: empty interval");
  require(degree >= 0, ErrorCode::kInvalidArgument, "remez: negative degree");
  if (options.basis == RemezBasis::kOdd) {
    require(degree % 2 == 1, ErrorCode::kInvalidArgument, "remez: odd basis needs odd degree");
    require(a > 0.0, ErrorCode::kInvalidArgument, "remez: odd basis needs a > 0");
  }
  const ChebyshevBasis basis(options.basis, a, b, degree);
  const std::size_t n = basis.size();
  const std::size_t m = options.search_points ? options.search_points
                                              : std::max<std::size_t>(4000, 300 * (n + 1));
  const auto grid = chebyshev_grid(a, b, m);

  double fscale = 0.0;
  for (double x : grid) fscale = std::max(fscale, std::abs(target(x)));
  const double exact_floor = 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + fscale);

  std::vector<double> ref = chebyshev_grid(a, b, n + 1);
  RemezResult result;
  result.basis_size = n;

  std::vector<double> phi;
  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    const auto N = static_cast<Eigen::Index>(n + 1);
    Eigen::MatrixXd A(N, N);
    Eigen::VectorXd rhs(N);
    for (Eigen::Index i = 0; i < N; ++i) {
      basis.eval(ref[static_cast<std::size_t>(i)], phi);
      for (std::size_t k = 0; k < n; ++k) A(i, static_cast<Eigen::Index>(k)) = phi[k];
      A(i, N - 1) = (i % 2 == 0) ? 1.0 : -1.0;
      rhs(i) = target(ref[static_cast<std::size_t>(i)]);
    }
    const Eigen::VectorXd sol = A.fullPivLu().solve(rhs);
    const Polynomial poly = basis.to_monomial(sol.head(static_cast<Eigen::Index>(n)));
    const auto err = [&](double x) { return poly(x) - target(x); };

    auto ext = find_extrema(err, grid);
    Extremum peak{a, 0.0};
    for (const auto& x : ext) {
      if (std::abs(x.e) > std::abs(peak.e)) peak = x;
    }
    result.poly = poly;
    result.max_error = std::abs(peak.e);
    result.reference = ref;
    result.iterations = iter;

    if (result.max_error <= exact_floor) {
      result.alternations = n + 1;
      return result;
    }

    std::vector<double> next;
    if (ext.size() >= n + 1) {
      reduce_to(ext, n + 1);
      for (const auto& x : ext) next.push_back(x.x);
    } else {
      next = single_exchange(ref, err, peak);
    }
    double min_ref = std::numeric_limits<double>::infinity();
    for (double x : next) min_ref = std::min(min_ref, std::abs(err(x)));
    result.reference = next;

    if (ext.size() == n + 1 && result.max_error - min_ref <= options.tol * result.max_error) {
      result.alternations = count_alternations(poly, target, a, b, result.max_error,
                                               std::max(options.tol, 1e-12), m);
      return result;
    }
    ref = std::move(next);
  }
  result.alternations = count_alternations(result.poly, target, a, b, result.max_error,
                                           std::max(options.tol, 1e-12), m);
  throw RemezNonConvergence("remez: no convergence after " +
                                std::to_string(options.max_iterations) + " exchanges",
                            result);
}

std::size_t count_alternations(const Polynomial& p, const Target& target, double a,
                               double b, double level, double tol,
                               std::size_t search_points) {
  const auto grid = chebyshev_grid(a, b, std::max<std::size_t>(search_points, 16));
  const auto ext = find_extrema([&](double x) { return p(x) - target(x); }, grid);
  std::size_t count = 0;
  int last = 0;
  for (const auto& x : ext) {
    if (std::abs(x.e) < (1.0 - tol) * level) continue;
    const int s = x.e > 0 ? 1 : -1;
    if (s != last) {
      ++count;
      last = s;
    }
  }
  return count;
}

TabulatedFunction::TabulatedFunction(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
  require(x_.size() == y_.size() && x_.size() >= 2, ErrorCode::kInvalidArgument,
          "tabulated function needs >= 2 matching samples");
  for (std::size_t i = 1; i < x_.size(); ++i) {
    require(x_[i] > x_[i - 1], ErrorCode::kInvalidArgument,
            "tabulated function abscissae must increase");
  }
}

double TabulatedFunction::operator()(double t) const {
  if (t <= x_.front()) return y_.front();
  if (t >= x_.back()) return y_.back();
  const auto it = std::upper_bound(x_.begin(), x_.end(), t);
  const std::size_t i = static_cast<std::size_t>(it - x_.begin());
  const double w = (t - x_[i - 1]) / (x_[i] - x_[i - 1]);
  return y_[i - 1] + w * (y_[i] - y_[i - 1]);
}

}  // namespace pann
