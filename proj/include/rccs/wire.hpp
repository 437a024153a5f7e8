#pragma once

#include <stdexcept>
#include <string>

#include "rccs/io.hpp"
#include "rccs/mpc.hpp"

namespace rccs {

/// Version of the /solve JSON protocol. Documents with any other version are
/// rejected.
inline constexpr int kWireVersion = 1;

/// Malformed wire document. field() names the offending key.
class WireError : public std::invalid_argument {
 public:
  WireError(std::string field, const std::string& what)
      : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// Request body:
///   {"version": 1, "k": 120, "x": [x1, x2, x3], "setpoint": -0.5,
///    "h_d": 0.03, "pending_u": [[u], [u], ...]}
/// pending_u holds the inputs already committed for the dead time, one array
/// of m inputs per base tick. The target state is (setpoint, 0, 0).
Json request_to_json(const ControlRequest<double>& r);
ControlRequest<double> request_from_json(const Json& doc);

/// Response body:
///   {"version": 1, "k": 120, "h_d": 0.03, "u_seq": [[u0], ...],
///    "x_pred": [[x1, x2, x3], ...], "iterations": 4, "tau_c": 1.2e-4,
///    "status": "optimal", "degraded": false}
Json response_to_json(const ControlResponse<double>& r);
ControlResponse<double> response_from_json(const Json& doc);

}  // namespace rccs
