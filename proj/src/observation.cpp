#include "tdcp/observation.hpp"

#include <cmath>
#include <set>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "tdcp/error.hpp"

namespace tdcp {

const SatObservation* ObservationEpoch::find(int prn) const {
  for (const auto& s : sats) {
    if (s.prn == prn) return &s;
  }
  return nullptr;
}

void ObservationEpoch::validate() const {
  std::set<int> seen;
  for (const auto& s : sats) {
    if (!seen.insert(s.prn).second) {
      throw InvalidArgument("ObservationEpoch: duplicate PRN " + std::to_string(s.prn));
    }
    if (!s.lock_lost && !std::isfinite(s.phase_cycles)) {
      throw InvalidArgument("ObservationEpoch: locked record without phase for PRN " + std::to_string(s.prn));
    }
  }
}

void RelPoseMeasurement::validate() const {
  if (!(t_b > t_a)) throw InvalidArgument("RelPoseMeasurement: t_b must be after t_a");
  if (!covariance.allFinite() || (covariance - covariance.transpose()).cwiseAbs().maxCoeff() >
                                     1e-9 * covariance.cwiseAbs().maxCoeff()) {
    throw InvalidArgument("RelPoseMeasurement: covariance must be symmetric");
  }
  Eigen::LLT<Matrix6d> llt(covariance);
  if (llt.info() != Eigen::Success) throw InvalidArgument("RelPoseMeasurement: covariance not positive definite");
}

}  // namespace tdcp
