#ifndef HJMPC_UNITS_HPP
#define HJMPC_UNITS_HPP

#include "hjmpc/types.hpp"

namespace hjmpc {

enum class UnitKind { Length, Velocity, Time };
enum class UnitDirection { ToNormalized, ToPhysical };

/// Physical <-> normalized unit conversion.
/// Physical units: length [km], velocity [m/s], time [days].
inline double convert_units(double value, UnitKind kind, UnitDirection dir, const SystemParams& p) {
  p.validate();
  double factor;  // physical -> normalized
  switch (kind) {
    case UnitKind::Length:
      factor = 1.0 / p.lu_km;
      break;
    case UnitKind::Velocity:
      factor = 1.0 / (1000.0 * p.lu_km / p.tu_s);
      break;
    case UnitKind::Time:
      factor = 86400.0 / p.tu_s;
      break;
    default:
      throw std::invalid_argument("convert_units: unknown kind");
  }
  return dir == UnitDirection::ToNormalized ? value * factor : value / factor;
}

}  // namespace hjmpc

#endif  // HJMPC_UNITS_HPP
