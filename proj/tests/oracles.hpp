#pragma once
// Slow, independent reference implementations shared by the unit suites and
// the acceptance binary. None of these call into the library's algorithms.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "proxy3d/posenc.hpp"
#include "proxy3d/semgroup.hpp"
#include "proxy3d/serializer.hpp"

namespace proxy3d::oracle {

/// Exhaustive search over every feasible integer allocation: minimum L1
/// deviation from the exact quotas, then minimum L2, then the allocation that
/// favours larger groups (then smaller labels) lexicographically.
inline std::vector<std::size_t> allocation(const std::vector<GroupSize>& groups, std::size_t k, std::size_t k_min) {
  const std::size_t n = groups.size();
  std::size_t total = 0;
  for (const auto& g : groups) total += g.size;
  const std::size_t target = std::min(k, total);
  const double L = static_cast<double>(total);

  std::vector<std::size_t> priority(n);
  std::iota(priority.begin(), priority.end(), 0);
  std::sort(priority.begin(), priority.end(), [&](std::size_t a, std::size_t b) {
    if (groups[a].size != groups[b].size) return groups[a].size > groups[b].size;
    return groups[a].label < groups[b].label;
  });

  std::vector<std::size_t> best, cur(n);
  double best_l1 = 0, best_l2 = 0;
  auto better = [&](double l1, double l2) {
    if (best.empty()) return true;
    if (l1 < best_l1 - 1e-9) return true;
    if (l1 > best_l1 + 1e-9) return false;
    if (l2 < best_l2 - 1e-9) return true;
    if (l2 > best_l2 + 1e-9) return false;
    for (std::size_t p : priority) {
      if (cur[p] != best[p]) return cur[p] > best[p];
    }
    return false;
  };
  auto rec = [&](auto&& self, std::size_t i, std::size_t used) -> void {
    if (i == n) {
      if (used != target) return;
      double l1 = 0, l2 = 0;
      for (std::size_t g = 0; g < n; ++g) {
        const double d =
            static_cast<double>(cur[g]) - static_cast<double>(k) * static_cast<double>(groups[g].size) / L;
        l1 += std::abs(d);
        l2 += d * d;
      }
      if (better(l1, l2)) {
        best = cur;
        best_l1 = l1;
        best_l2 = l2;
      }
      return;
    }
    for (std::size_t x = std::min(k_min, groups[i].size); x <= groups[i].size && used + x <= target; ++x) {
      cur[i] = x;
      self(self, i + 1, used + x);
    }
  };
  rec(rec, 0, 0);
  return best;
}

/// O(n^2 k) max-min search written directly from the definition.
inline std::vector<std::size_t> fps(const std::vector<Vec3>& pts, std::size_t k) {
  std::vector<std::size_t> chosen{0};
  std::vector<bool> taken(pts.size(), false);
  taken[0] = true;
  while (chosen.size() < k) {
    std::size_t best = 0;
    double best_d = -1.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (taken[i]) continue;
      double nearest = std::numeric_limits<double>::infinity();
      for (std::size_t c : chosen) {
        const double dx = pts[i][0] - pts[c][0], dy = pts[i][1] - pts[c][1], dz = pts[i][2] - pts[c][2];
        nearest = std::min(nearest, dx * dx + dy * dy + dz * dz);
      }
      if (nearest > best_d) {
        best_d = nearest;
        best = i;
      }
    }
    chosen.push_back(best);
    taken[best] = true;
  }
  return chosen;
}

/// Breadth-first order written against the documented rules, using only the
/// graph's nodes, origin and has_edge.
inline std::vector<std::int32_t> bfs(const GroupGraph& g) {
  const std::size_t n = g.nodes.size();
  auto nearer = [&](const Vec3& from) {
    return [&g, from](std::size_t a, std::size_t b) {
      const double da = squared_distance(g.nodes[a].centroid, from);
      const double db = squared_distance(g.nodes[b].centroid, from);
      return da != db ? da < db : g.nodes[a].label < g.nodes[b].label;
    };
  };
  std::vector<bool> seen(n, false);
  std::vector<std::int32_t> out;
  while (out.size() < n) {
    std::vector<std::size_t> rest;
    for (std::size_t i = 0; i < n; ++i) {
      if (!seen[i]) rest.push_back(i);
    }
    const std::size_t root = *std::min_element(rest.begin(), rest.end(), nearer(g.origin));
    std::vector<std::size_t> queue{root};
    seen[root] = true;
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const std::size_t u = queue[head];
      out.push_back(g.nodes[u].label);
      std::vector<std::size_t> next;
      for (std::size_t v = 0; v < n; ++v) {
        if (!seen[v] && g.has_edge(u, v)) next.push_back(v);
      }
      std::sort(next.begin(), next.end(), nearer(g.nodes[u].centroid));
      for (std::size_t v : next) {
        seen[v] = true;
        queue.push_back(v);
      }
    }
  }
  return out;
}

/// Scalar-loop Fourier MLP forward pass.
inline std::vector<double> fourier_forward(const PosEncParams& p, double px, double py) {
  const auto half = static_cast<std::size_t>(p.fourier_dirs.rows());
  const std::size_t df = 2 * half, dh = static_cast<std::size_t>(p.w1.rows()),
                    c = static_cast<std::size_t>(p.w2.rows());
  const double scale = 1.0 / std::sqrt(static_cast<double>(df));
  std::vector<double> gamma(df);
  for (std::size_t j = 0; j < half; ++j) {
    const double phase = p.fourier_dirs(j, 0) * px + p.fourier_dirs(j, 1) * py;
    gamma[j] = scale * std::cos(phase);
    gamma[half + j] = scale * std::sin(phase);
  }
  std::vector<double> hidden(dh);
  for (std::size_t h = 0; h < dh; ++h) {
    double a = p.b1(h);
    for (std::size_t j = 0; j < df; ++j) a += p.w1(h, j) * gamma[j];
    hidden[h] = a / (1.0 + std::exp(-a));
  }
  std::vector<double> out(c);
  for (std::size_t o = 0; o < c; ++o) {
    double a = p.b2(o);
    for (std::size_t h = 0; h < dh; ++h) a += p.w2(o, h) * hidden[h];
    out[o] = a;
  }
  return out;
}

/// Relative error with a floor on the denominator so that gradients at the
/// round-off level are judged absolutely (|a - n| <= floor * tolerance).
inline double relative_error(double analytic, double numeric, double floor = 1e-4) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

struct GradCheck {
  double worst = 0.0;
  std::size_t checked = 0;
};

/// Central finite differences of <upstream, fourier_forward(params, plane)>
/// against `analytic`, over every parameter entry and both plane coordinates.
inline GradCheck finite_difference_check(const PosEncParams& params, const Eigen::Vector2d& plane,
                                         const Eigen::VectorXd& upstream, const FourierGrad& analytic,
                                         double h = 1e-5) {
  auto objective = [&](const PosEncParams& p, const Eigen::Vector2d& x) {
    const auto out = fourier_forward(p, x(0), x(1));
    double s = 0;
    for (std::size_t i = 0; i < out.size(); ++i) s += upstream(static_cast<Eigen::Index>(i)) * out[i];
    return s;
  };
  GradCheck result;
  PosEncParams p = params;
  auto probe = [&](double& slot, double grad) {
    const double keep = slot;
    slot = keep + h;
    const double plus = objective(p, plane);
    slot = keep - h;
    const double minus = objective(p, plane);
    slot = keep;
    result.worst = std::max(result.worst, relative_error(grad, (plus - minus) / (2 * h)));
    ++result.checked;
  };
  auto sweep = [&](auto& tensor, const auto& grad) {
    for (Eigen::Index i = 0; i < tensor.size(); ++i) probe(tensor.data()[i], grad.data()[i]);
  };
  sweep(p.fourier_dirs, analytic.fourier_dirs);
  sweep(p.w1, analytic.w1);
  sweep(p.b1, analytic.b1);
  sweep(p.w2, analytic.w2);
  sweep(p.b2, analytic.b2);
  for (int axis = 0; axis < 2; ++axis) {
    Eigen::Vector2d a = plane, b = plane;
    a(axis) += h;
    b(axis) -= h;
    const double numeric = (objective(p, a) - objective(p, b)) / (2 * h);
    result.worst = std::max(result.worst, relative_error(analytic.plane(axis), numeric));
    ++result.checked;
  }
  return result;
}

/// Random Fourier parameters with small, varied shapes and non-zero biases.
template <class Gen>
PosEncParams random_posenc(Gen& gen, std::size_t channels, std::size_t half_dirs, std::size_t hidden) {
  std::normal_distribution<double> n(0.0, 1.0);
  auto fill = [&](auto& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(gen);
  };
  PosEncParams p;
  p.channels = channels;
  p.fourier_dirs.resize(static_cast<Eigen::Index>(half_dirs), 2);
  p.w1.resize(static_cast<Eigen::Index>(hidden), static_cast<Eigen::Index>(2 * half_dirs));
  p.b1.resize(static_cast<Eigen::Index>(hidden));
  p.w2.resize(static_cast<Eigen::Index>(channels), static_cast<Eigen::Index>(hidden));
  p.b2.resize(static_cast<Eigen::Index>(channels));
  fill(p.fourier_dirs);
  fill(p.w1);
  fill(p.b1);
  fill(p.w2);
  fill(p.b2);
  p.w1 *= 1.0 / std::sqrt(static_cast<double>(2 * half_dirs));
  p.w2 *= 1.0 / std::sqrt(static_cast<double>(hidden));
  return p;
}

/// -sum log softmax(logits_t)[target_t] over response positions, computed in
/// long double with an explicit max shift.
inline double nll(std::size_t vocab, const std::vector<double>& logits, const std::vector<std::int32_t>& targets,
                  std::size_t prefix) {
  long double total = 0;
  for (std::size_t t = prefix; t < targets.size(); ++t) {
    const double* row = logits.data() + t * vocab;
    long double m = row[0];
    for (std::size_t v = 1; v < vocab; ++v) m = std::max<long double>(m, row[v]);
    long double z = 0;
    for (std::size_t v = 0; v < vocab; ++v) z += std::exp(static_cast<long double>(row[v]) - m);
    total += -(static_cast<long double>(row[targets[t]]) - m - std::log(z));
  }
  return static_cast<double>(total);
}

}  // namespace proxy3d::oracle
