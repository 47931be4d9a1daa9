#ifndef HJMPC_POINTS_HPP
#define HJMPC_POINTS_HPP

#include <random>

#include "hjmpc/basis.hpp"

namespace hjmpc {

struct DomainBox {
  Vec8 lower, upper;

  void validate() const {
    if (!((upper - lower).array() > 0.0).all())
      throw std::invalid_argument("DomainBox: lower must be below upper componentwise");
  }
  Vec8 center() const { return 0.5 * (lower + upper); }
  Vec8 half_width() const { return 0.5 * (upper - lower); }
};

/// Collocation sites in the canonical cube [-1,1]^dim with normalized weights.
struct PointSet {
  Eigen::MatrixXd points;   // N x dim
  Eigen::VectorXd weights;  // sums to 1
  std::string scheme;

  int size() const { return static_cast<int>(points.rows()); }
  int dim() const { return static_cast<int>(points.cols()); }
};

enum class PointScheme { cut4, cut6, cut8, lhs, monte_carlo };

/// Compensated (Kahan) summation; the plain running sum over tens of
/// thousands of weights accumulates ~1e-13 of error, which would mask the
/// normalization contract.
inline double kahan_sum(const Eigen::VectorXd& v) {
  double s = 0.0, c = 0.0;
  for (int i = 0; i < v.size(); ++i) {
    const double y = v[i] - c;
    const double t = s + y;
    c = (t - s) - y;
    s = t;
  }
  return s;
}

inline PointScheme parse_point_scheme(const std::string& s) {
  if (s == "cut4") return PointScheme::cut4;
  if (s == "cut6") return PointScheme::cut6;
  if (s == "cut8") return PointScheme::cut8;
  if (s == "lhs") return PointScheme::lhs;
  if (s == "monte_carlo") return PointScheme::monte_carlo;
  throw std::invalid_argument("unknown point scheme: " + s);
}

namespace cut_detail {

// One symmetric axis family: disjoint position groups, each group's
// coordinates at a fixed magnitude. All position choices and sign
// patterns are enumerated, so every family is symmetric under negation.
struct Group {
  int size;
  double rho;
};
struct Family {
  std::vector<Group> groups;
};

inline std::int64_t family_count(const Family& f, int dim) {
  std::int64_t c = 1;
  int left = dim, total = 0;
  for (const auto& g : f.groups) {
    c *= binomial(left, g.size);
    left -= g.size;
    total += g.size;
  }
  return c << total;  // * 2^total sign patterns
}

inline double falling(int x, int m) {
  double v = 1.0;
  for (int i = 0; i < m; ++i) v *= (x - i);
  return v;
}

// Family moment per unit total weight for an even-exponent pattern given
// as half-exponents a_j over k distinct variables: sum over assignments of
// the k variables to groups of P(positions) * prod rho^(2 a_j).
inline double family_moment(const Family& f, int dim, const std::vector<int>& a) {
  const int k = static_cast<int>(a.size());
  if (k == 0) return 1.0;
  const int G = static_cast<int>(f.groups.size());
  double total = 0.0;
  std::vector<int> assign(k, 0);
  while (true) {
    std::vector<int> kg(G, 0);
    for (int j = 0; j < k; ++j) ++kg[assign[j]];
    bool ok = true;
    double num = 1.0;
    for (int g = 0; g < G; ++g) {
      if (kg[g] > f.groups[g].size) {
        ok = false;
        break;
      }
      num *= falling(f.groups[g].size, kg[g]);
    }
    if (ok) {
      double m = num / falling(dim, k);
      for (int j = 0; j < k; ++j) m *= std::pow(f.groups[assign[j]].rho, 2 * a[j]);
      total += m;
    }
    int pos = 0;
    while (pos < k && ++assign[pos] == G) assign[pos++] = 0;
    if (pos == k) break;
  }
  return total;
}

// Even-exponent half-patterns with total half-degree <= order/2 and at most
// `order/2` distinct variables, canonical (non-increasing) form.
inline std::vector<std::vector<int>> even_patterns(int order) {
  std::vector<std::vector<int>> out{{}};
  std::function<void(std::vector<int>&, int, int)> rec = [&](std::vector<int>& cur, int rem, int maxv) {
    for (int v = std::min(rem, maxv); v >= 1; --v) {
      cur.push_back(v);
      out.push_back(cur);
      rec(cur, rem - v, v);
      cur.pop_back();
    }
  };
  std::vector<int> cur;
  rec(cur, order / 2, order / 2);
  return out;
}

inline double uniform_moment(const std::vector<int>& a) {
  double v = 1.0;
  for (int ai : a) v *= 1.0 / (2 * ai + 1);
  return v;
}

// Frozen family compositions (group sizes and coordinate magnitudes) for
// dim 8, found offline by solving the moment-matching equations for the
// uniform measure on [-1,1]^8. Weights are re-solved at runtime from the
// moment constraints and validated.
inline std::vector<Family> families_for(PointScheme s) {
  switch (s) {
    case PointScheme::cut4:  // N = 385
      return {
          {{{1, 0.99999393191257491}}},
          {{{2, 0.99656333227401728}}},
          {{{8, 0.64864327022907897}}},
      };
    case PointScheme::cut6:  // N = 1745
      return {
          {{{2, 0.90747271274319796}}},
          {{{4, 0.9354211920354899}}},
          {{{8, 0.52082463323740436}}},
          {{{8, 0.69426001731433407}}},
      };
    case PointScheme::cut8:  // N = 27201; no smaller nonnegative rule found
      return {
          {{{3, 0.74999999969629305}}},
          {{{3, 0.79999999998923876}}},
          {{{4, 0.79999999999326599}}},
          {{{4, 0.85000000000290055}}},
          {{{5, 0.8499999999946648}}},
          {{{5, 0.90000000001014102}}},
          {{{1, 0.89999999998046687}, {7, 0.40000000014602732}}},
          {{{1, 0.99999999989999999}, {7, 0.49999999873176137}}},
          {{{1, 0.99999999989999999}, {7, 0.60000000013791066}}},
          {{{6, 0.99999999999986611}, {2, 0.40000000001051456}}},
          {{{2, 0.99999999990245336}, {6, 0.59999999976374219}}},
      };
    default:
      throw std::invalid_argument("families_for: not a CUT scheme");
  }
}

// Solves the per-family total weights (plus the center weight) from the
// moment constraints of the given order; throws on negative weights or a
// poor fit.
inline void solve_cut_weights(const std::vector<Family>& fams, int dim, int order, double& w0,
                              Eigen::VectorXd& w) {
  const auto pats = even_patterns(order);
  const int nf = static_cast<int>(fams.size());
  Eigen::MatrixXd M(pats.size(), nf + 1);
  Eigen::VectorXd rhs(pats.size());
  for (std::size_t r = 0; r < pats.size(); ++r) {
    M(r, 0) = pats[r].empty() ? 1.0 : 0.0;  // center contributes to mass only
    for (int f = 0; f < nf; ++f) M(r, f + 1) = family_moment(fams[f], dim, pats[r]);
    rhs(r) = uniform_moment(pats[r]);
  }
  const Eigen::VectorXd sol = M.colPivHouseholderQr().solve(rhs);
  const double resid = (M * sol - rhs).cwiseAbs().maxCoeff();
  if (resid > 1e-11)
    throw ConvergenceError("CUT weight solve: moment residual " + std::to_string(resid));
  if (sol.minCoeff() < -1e-12)
    throw ConvergenceError("CUT weight solve: negative weight " + std::to_string(sol.minCoeff()));
  w0 = std::max(sol[0], 0.0);
  w = sol.tail(nf).cwiseMax(0.0);
}

// Appends all points of a family (per-point weight = w_total / count).
inline void emit_family(const Family& f, int dim, double w_total, std::vector<Eigen::VectorXd>& pts,
                        std::vector<double>& ws) {
  const double w_point = w_total / double(family_count(f, dim));
  std::vector<int> label(dim, -1);  // -1: zero coordinate, else group id
  const int G = static_cast<int>(f.groups.size());

  // enumerate disjoint position subsets group by group
  std::function<void(int)> place = [&](int g) {
    if (g == G) {
      // enumerate sign patterns over the occupied positions
      std::vector<int> occ;
      for (int i = 0; i < dim; ++i)
        if (label[i] >= 0) occ.push_back(i);
      const int s = static_cast<int>(occ.size());
      for (std::int64_t mask = 0; mask < (std::int64_t(1) << s); ++mask) {
        Eigen::VectorXd p = Eigen::VectorXd::Zero(dim);
        for (int j = 0; j < s; ++j) {
          const double mag = f.groups[label[occ[j]]].rho;
          p[occ[j]] = (mask >> j & 1) ? mag : -mag;
        }
        pts.push_back(p);
        ws.push_back(w_point);
      }
      return;
    }
    // choose positions for group g among the free slots, lexicographically
    std::vector<int> free;
    for (int i = 0; i < dim; ++i)
      if (label[i] < 0) free.push_back(i);
    const int n = static_cast<int>(free.size()), k = f.groups[g].size;
    std::vector<int> comb(k);
    std::function<void(int, int)> choose = [&](int start, int depth) {
      if (depth == k) {
        for (int j = 0; j < k; ++j) label[free[comb[j]]] = g;
        place(g + 1);
        for (int j = 0; j < k; ++j) label[free[comb[j]]] = -1;
        return;
      }
      for (int i = start; i <= n - (k - depth); ++i) {
        comb[depth] = i;
        choose(i + 1, depth + 1);
      }
    };
    choose(0, 0);
  };
  place(0);
}

}  // namespace cut_detail

/// Generates symmetric, moment-matching point sets in [-1,1]^dim.
/// CUT schemes are deterministic constructions; lhs / monte_carlo are
/// seeded symmetric random designs with uniform weights.
inline PointSet generate_points(int dim, PointScheme scheme, int target_n = 0, std::uint64_t seed = 0) {
  PointSet ps;
  if (scheme == PointScheme::cut4 || scheme == PointScheme::cut6 || scheme == PointScheme::cut8) {
    if (dim != 8) throw std::invalid_argument("generate_points: CUT schemes are tabulated for dim 8");
    const int order = scheme == PointScheme::cut4 ? 4 : scheme == PointScheme::cut6 ? 6 : 8;
    const auto fams = cut_detail::families_for(scheme);
    double w0;
    Eigen::VectorXd w;
    cut_detail::solve_cut_weights(fams, dim, order, w0, w);
    std::vector<Eigen::VectorXd> pts;
    std::vector<double> ws;
    pts.push_back(Eigen::VectorXd::Zero(dim));
    ws.push_back(w0);
    for (std::size_t f = 0; f < fams.size(); ++f) cut_detail::emit_family(fams[f], dim, w[f], pts, ws);
    ps.points.resize(pts.size(), dim);
    ps.weights.resize(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
      ps.points.row(i) = pts[i].transpose();
      ps.weights[i] = ws[i];
    }
    ps.scheme = order == 4 ? "cut4" : order == 6 ? "cut6" : "cut8";
    ps.weights /= kahan_sum(ps.weights);  // renormalize residual rounding
    return ps;
  }

  if (target_n <= 0) target_n = 512;
  const int half = (target_n + 1) / 2;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  ps.points.resize(2 * half, dim);
  if (scheme == PointScheme::lhs) {
    // Latin hypercube on the half set, then symmetrized point by point.
    std::vector<std::vector<int>> perm(dim, std::vector<int>(half));
    for (int d = 0; d < dim; ++d) {
      auto& p = perm[d];
      for (int i = 0; i < half; ++i) p[i] = i;
      std::shuffle(p.begin(), p.end(), rng);
    }
    for (int i = 0; i < half; ++i)
      for (int d = 0; d < dim; ++d)
        ps.points(i, d) = -1.0 + 2.0 * (perm[d][i] + unif(rng)) / half;
    ps.scheme = "lhs";
  } else {
    for (int i = 0; i < half; ++i)
      for (int d = 0; d < dim; ++d) ps.points(i, d) = -1.0 + 2.0 * unif(rng);
    ps.scheme = "monte_carlo";
  }
  for (int i = 0; i < half; ++i) ps.points.row(half + i) = -ps.points.row(i);
  ps.weights = Eigen::VectorXd::Constant(2 * half, 1.0 / (2 * half));
  return ps;
}

/// Max |empirical - exact| over all uniform-measure moments with |alpha| <= order.
/// DFS over multi-indices carrying per-point partial products, so the cost is
/// one vector multiply per enumeration node.
inline double moment_error(const PointSet& ps, int order) {
  if (order > 8) throw std::invalid_argument("moment_error: order must be <= 8");
  const int dim = ps.dim();
  const int n = ps.size();
  double worst = 0.0;
  Eigen::VectorXd partial = ps.weights;  // running w_i * prod p^alpha over decided dims
  std::function<void(int, int, double, bool)> rec = [&](int pos, int budget, double exact, bool odd) {
    if (pos == dim) {
      const double emp = partial.sum();
      worst = std::max(worst, std::abs(emp - (odd ? 0.0 : exact)));
      return;
    }
    Eigen::VectorXd saved = partial;
    for (int e = 0; e <= budget; ++e) {
      if (e > 0) partial.array() *= ps.points.col(pos).array();
      rec(pos + 1, budget - e, exact / (e + 1), odd || (e % 2 == 1));
    }
    partial = saved;
  };
  (void)n;
  rec(0, order, 1.0, false);
  return worst;
}

/// Affine map of canonical points into the physical domain box.
inline Eigen::MatrixXd scale_to_domain(const PointSet& ps, const DomainBox& box) {
  box.validate();
  if (ps.dim() != 8) throw std::invalid_argument("scale_to_domain: expects dim 8");
  Eigen::MatrixXd out(ps.size(), 8);
  const Vec8 c = box.center(), h = box.half_width();
  for (int i = 0; i < ps.size(); ++i)
    out.row(i) = (c.array() + h.array() * ps.points.row(i).transpose().array()).transpose();
  return out;
}

inline Eigen::VectorXd unscale_from_domain(const Eigen::VectorXd& phys, const DomainBox& box) {
  box.validate();
  return ((phys - box.center()).array() / box.half_width().array()).matrix();
}

}  // namespace hjmpc

#endif  // HJMPC_POINTS_HPP
