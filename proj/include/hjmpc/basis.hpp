#ifndef HJMPC_BASIS_HPP
#define HJMPC_BASIS_HPP

#include <algorithm>
#include <cstdint>
#include <functional>
#include <numeric>

#include "hjmpc/types.hpp"

namespace hjmpc {

struct MultiIndex {
  std::vector<int> exponents;
  int total() const { return std::accumulate(exponents.begin(), exponents.end(), 0); }
};

/// Total-degree monomial dictionary in graded-lex order over affinely
/// scaled variables. Public evaluation takes physical coordinates; the
/// per-variable half-widths map them into [-1, 1] before monomials are
/// formed, and all derivative operators carry the chain factors back to
/// physical space. Coefficients therefore live in scaled space.
struct BasisDictionary {
  int n_vars = 0;
  int degree = 0;
  std::vector<MultiIndex> indices;
  Eigen::VectorXd scale;  // half-widths; physical = scale .* scaled

  int size() const { return static_cast<int>(indices.size()); }
};

inline std::int64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  std::int64_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

/// Enumerates all multi-indices with total degree <= degree, graded-lex:
/// ascending total degree, then lexicographically descending in the first
/// variable's exponent within each grade.
inline BasisDictionary build_dictionary(int n_vars, int degree, Eigen::VectorXd scale = {},
                                        std::int64_t size_cap = 2'000'000) {
  if (n_vars < 1 || degree < 0) throw std::invalid_argument("build_dictionary: bad n_vars/degree");
  const std::int64_t m = binomial(n_vars + degree, degree);
  if (m > size_cap) throw std::invalid_argument("build_dictionary: dictionary size exceeds cap");
  BasisDictionary d;
  d.n_vars = n_vars;
  d.degree = degree;
  d.scale = scale.size() ? scale : Eigen::VectorXd::Ones(n_vars);
  if (d.scale.size() != n_vars || (d.scale.array() <= 0.0).any())
    throw std::invalid_argument("build_dictionary: scale must be positive with n_vars entries");
  d.indices.reserve(m);
  std::vector<int> e(n_vars, 0);
  for (int g = 0; g <= degree; ++g) {
    // lexicographic enumeration of compositions of g into n_vars parts
    std::function<void(int, int)> rec = [&](int pos, int rem) {
      if (pos == n_vars - 1) {
        e[pos] = rem;
        d.indices.push_back({e});
        return;
      }
      for (int v = rem; v >= 0; --v) {
        e[pos] = v;
        rec(pos + 1, rem - v);
      }
      e[pos] = 0;
    };
    rec(0, g);
  }
  if (static_cast<std::int64_t>(d.indices.size()) != m)
    throw std::logic_error("build_dictionary: enumeration count mismatch");
  return d;
}

namespace detail {
// powers[i][k] = (scaled zeta_i)^k, k = 0..degree
inline void scaled_powers(const BasisDictionary& d, const Eigen::VectorXd& zeta,
                          std::vector<std::vector<double>>& powers) {
  powers.assign(d.n_vars, std::vector<double>(d.degree + 1, 1.0));
  for (int i = 0; i < d.n_vars; ++i) {
    const double z = zeta[i] / d.scale[i];
    for (int k = 1; k <= d.degree; ++k) powers[i][k] = powers[i][k - 1] * z;
  }
}
}  // namespace detail

inline Eigen::VectorXd eval_basis(const BasisDictionary& d, const Eigen::VectorXd& zeta) {
  if (zeta.size() != d.n_vars) throw std::invalid_argument("eval_basis: dimension mismatch");
  if (!zeta.allFinite()) throw std::invalid_argument("eval_basis: non-finite input");
  std::vector<std::vector<double>> pw;
  detail::scaled_powers(d, zeta, pw);
  Eigen::VectorXd phi(d.size());
  for (int j = 0; j < d.size(); ++j) {
    double v = 1.0;
    const auto& e = d.indices[j].exponents;
    for (int i = 0; i < d.n_vars; ++i)
      if (e[i]) v *= pw[i][e[i]];
    phi[j] = v;
  }
  return phi;
}

/// d phi_j / d zeta_vars for a contiguous variable range, in physical units.
inline Eigen::MatrixXd eval_grad_vars(const BasisDictionary& d, const Eigen::VectorXd& zeta,
                                      int first, int count) {
  if (first < 0 || first + count > d.n_vars) throw std::invalid_argument("eval_grad_vars: bad range");
  std::vector<std::vector<double>> pw;
  detail::scaled_powers(d, zeta, pw);
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(d.size(), count);
  for (int j = 0; j < d.size(); ++j) {
    const auto& e = d.indices[j].exponents;
    for (int c = 0; c < count; ++c) {
      const int v = first + c;
      if (e[v] == 0) continue;
      double val = e[v] / d.scale[v];  // chain factor d(scaled)/d(physical)
      for (int i = 0; i < d.n_vars; ++i) {
        const int k = (i == v) ? e[i] - 1 : e[i];
        if (k) val *= pw[i][k];
      }
      g(j, c) = val;
    }
  }
  return g;
}

enum class Block { dx, dlam0 };

inline Eigen::MatrixXd eval_grad(const BasisDictionary& d, const Eigen::VectorXd& zeta, Block b) {
  if (d.n_vars != 8) throw std::invalid_argument("eval_grad: block access needs n_vars == 8");
  return eval_grad_vars(d, zeta, b == Block::dx ? 0 : 4, 4);
}

/// Second partials of each phi_j with respect to the dlam0 block.
inline std::vector<Mat4> eval_hessian_lam0(const BasisDictionary& d, const Eigen::VectorXd& zeta) {
  if (d.n_vars != 8) throw std::invalid_argument("eval_hessian_lam0: needs n_vars == 8");
  std::vector<std::vector<double>> pw;
  detail::scaled_powers(d, zeta, pw);
  std::vector<Mat4> h(d.size(), Mat4::Zero());
  for (int j = 0; j < d.size(); ++j) {
    const auto& e = d.indices[j].exponents;
    for (int a = 0; a < 4; ++a) {
      for (int b = a; b < 4; ++b) {
        const int va = 4 + a, vb = 4 + b;
        double coef;
        if (a == b) {
          if (e[va] < 2) continue;
          coef = double(e[va]) * (e[va] - 1) / (d.scale[va] * d.scale[va]);
        } else {
          if (e[va] == 0 || e[vb] == 0) continue;
          coef = double(e[va]) * e[vb] / (d.scale[va] * d.scale[vb]);
        }
        double val = coef;
        for (int i = 0; i < d.n_vars; ++i) {
          int k = e[i];
          if (i == va) k -= (a == b) ? 2 : 1;
          if (i == vb && a != b) k -= 1;
          if (k) val *= pw[i][k];
        }
        h[j](a, b) = val;
        h[j](b, a) = val;
      }
    }
  }
  return h;
}

/// Coefficients encoding the identity transformation F2 = sum_i dx_i dlam0_i.
inline Eigen::VectorXd identity_coefficients(const BasisDictionary& d) {
  if (d.n_vars != 8) throw std::invalid_argument("identity_coefficients: needs n_vars == 8");
  if (d.degree < 2) throw std::invalid_argument("identity_coefficients: needs degree >= 2");
  Eigen::VectorXd c = Eigen::VectorXd::Zero(d.size());
  for (int j = 0; j < d.size(); ++j) {
    const auto& e = d.indices[j].exponents;
    if (d.indices[j].total() != 2) continue;
    for (int i = 0; i < 4; ++i) {
      if (e[i] == 1 && e[4 + i] == 1) {
        c[j] = d.scale[i] * d.scale[4 + i];  // compensates the [-1,1] scaling
        break;
      }
    }
  }
  return c;
}

// --- contracted F2 evaluations (physical units) ---

inline double f2_value(const BasisDictionary& d, const Eigen::VectorXd& c, const Eigen::VectorXd& zeta) {
  return eval_basis(d, zeta).dot(c);
}

inline State4 f2_grad_dx(const BasisDictionary& d, const Eigen::VectorXd& c, const Eigen::VectorXd& zeta) {
  return eval_grad(d, zeta, Block::dx).transpose() * c;
}

inline State4 f2_grad_lam0(const BasisDictionary& d, const Eigen::VectorXd& c, const Eigen::VectorXd& zeta) {
  return eval_grad(d, zeta, Block::dlam0).transpose() * c;
}

inline Mat4 f2_hess_lam0(const BasisDictionary& d, const Eigen::VectorXd& c, const Eigen::VectorXd& zeta) {
  const auto h = eval_hessian_lam0(d, zeta);
  Mat4 out = Mat4::Zero();
  for (int j = 0; j < d.size(); ++j)
    if (c[j] != 0.0) out += c[j] * h[j];
  return out;
}

/// Per-time-step coefficient vectors of the marched generating function.
struct CoefficientTimeline {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> coeffs;
  BasisDictionary dict;

  void check_consistent() const {
    if (coeffs.size() != times.size()) throw std::invalid_argument("CoefficientTimeline: length mismatch");
    for (std::size_t i = 0; i < coeffs.size(); ++i) {
      if (coeffs[i].size() != dict.size()) throw std::invalid_argument("CoefficientTimeline: coeff size mismatch");
      if (!coeffs[i].allFinite()) throw std::invalid_argument("CoefficientTimeline: non-finite coefficients");
      if (i > 0 && !(times[i] > times[i - 1]))
        throw std::invalid_argument("CoefficientTimeline: times must be strictly increasing");
    }
  }

  /// Coefficients at time t from the nearest stored step (piecewise-constant
  /// lookup; the march stores every step).
  const Eigen::VectorXd& at_time(double t) const {
    if (times.empty()) throw std::out_of_range("CoefficientTimeline: empty");
    auto it = std::lower_bound(times.begin(), times.end(), t - 1e-12);
    std::size_t i = std::min<std::size_t>(it - times.begin(), times.size() - 1);
    if (i > 0 && std::abs(times[i - 1] - t) < std::abs(times[i] - t)) --i;
    return coeffs[i];
  }
};

}  // namespace hjmpc

#endif  // HJMPC_BASIS_HPP
