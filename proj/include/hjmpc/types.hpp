#ifndef HJMPC_TYPES_HPP
#define HJMPC_TYPES_HPP

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace hjmpc {

using State4 = Eigen::Vector4d;    // [x, y, vx, vy], normalized rotating frame
using Costate4 = Eigen::Vector4d;  // adjoint of State4
using Control2 = Eigen::Vector2d;  // [ux, uy], normalized acceleration
using Vec8 = Eigen::Matrix<double, 8, 1>;
using Mat4 = Eigen::Matrix4d;
using Mat8 = Eigen::Matrix<double, 8, 8>;

struct SingularityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Normalized PCR3BP system constants plus the physical unit definitions
/// used for km / m-s / days conversions.
struct SystemParams {
  double mu = 0.0122;        // mass ratio
  double lu_km = 384400.0;   // length unit [km]
  double tu_s = 375190.0;    // time unit [s]

  void validate() const {
    if (!(mu > 0.0 && mu < 0.5)) throw std::invalid_argument("SystemParams: mu must be in (0, 0.5)");
    if (!(lu_km > 0.0)) throw std::invalid_argument("SystemParams: lu_km must be positive");
    if (!(tu_s > 0.0)) throw std::invalid_argument("SystemParams: tu_s must be positive");
  }
};

/// Quadratic tracking-cost weights.
struct CostWeights {
  Mat4 Q = Mat4::Identity();
  Eigen::Matrix2d R = Eigen::Matrix2d::Identity();

  void validate() const {
    if (!Q.isApprox(Q.transpose(), 1e-12)) throw std::invalid_argument("CostWeights: Q must be symmetric");
    if (!R.isApprox(R.transpose(), 1e-12)) throw std::invalid_argument("CostWeights: R must be symmetric");
    Eigen::SelfAdjointEigenSolver<Mat4> esq(Q);
    if (esq.eigenvalues().minCoeff() < -1e-12) throw std::invalid_argument("CostWeights: Q must be PSD");
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> esr(R);
    if (esr.eigenvalues().minCoeff() <= 0.0) throw std::invalid_argument("CostWeights: R must be PD");
  }

  Mat4 control_quadratic() const {  // B R^-1 B^T
    Mat4 s = Mat4::Zero();
    s.bottomRightCorner<2, 2>() = R.inverse();
    return s;
  }
};

/// Time-gridded state history with optional controls; derivatives stored
/// for cubic Hermite interpolation.
struct Trajectory {
  std::vector<double> times;
  std::vector<State4> states;
  std::vector<State4> derivs;     // state time-derivatives at the nodes
  std::vector<Control2> controls; // may be empty

  std::size_t size() const { return times.size(); }

  void check_consistent() const {
    if (states.size() != times.size()) throw std::invalid_argument("Trajectory: states/times length mismatch");
    if (!derivs.empty() && derivs.size() != times.size()) throw std::invalid_argument("Trajectory: derivs length mismatch");
    if (!controls.empty() && controls.size() != times.size()) throw std::invalid_argument("Trajectory: controls length mismatch");
    for (std::size_t i = 1; i < times.size(); ++i)
      if (!(times[i] > times[i - 1])) throw std::invalid_argument("Trajectory: times must be strictly increasing");
  }
};

}  // namespace hjmpc

#endif  // HJMPC_TYPES_HPP
