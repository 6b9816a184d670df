#pragma once

#include <stdexcept>
#include <string>

namespace fraclab {

enum class errc {
  self_intersecting,
  degenerate_edge,
  invalid_eps,
  unknown_tag,
  mesh_failure,
  bad_param,
  bad_order,
  quadrature_failure,
  solver_failure,
  outside_mesh,
  hess_on_p1,
  nonzero_trace,
  gram_assembly_budget,
  quadrature_budget_exceeded,
  bad_vector_field,
  out_of_range,
  cutoff_too_large,
  io_error,
};

/// Single exception type carrying a machine-checkable error code.
class Error : public std::runtime_error {
public:
  Error(errc code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
  errc code() const noexcept { return code_; }

private:
  errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& msg) { throw Error(code, msg); }

inline void require(bool cond, errc code, const std::string& msg) {
  if (!cond) fail(code, msg);
}

} // namespace fraclab
