#ifndef DLOE_TYPES_HPP_
#define DLOE_TYPES_HPP_

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace dloe {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

// All recoverable failures in the library surface as this exception. The
// message is a short, stable phrase ("isolated image", "infeasible", ...)
// that callers and tests may match on.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace dloe

#endif  // DLOE_TYPES_HPP_
