#pragma once

#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace conekit {

/// Failure categories. Each maps to one CLI exit code.
enum class ErrorKind {
  dimension,             // shapes or K out of range
  input,                 // malformed files / configs
  data,                  // non-finite or out-of-domain values
  degenerate_row,        // zero rows, isolated nodes, empty words
  insufficient_band,     // fewer than K points near the hyperplane
  cluster_degeneracy,    // k-means left a cluster empty
  convergence,           // iterative solver did not converge
  rank,                  // singular or ill-conditioned gram
  cone_condition,        // (Y_P Y_P')^{-1} 1 has a non-positive entry
  out_of_cone,           // row with non-positive conic weight sum
  no_cone_structure,     // delta schedule exhausted / origin in hull
  spectrum_inconsistency,
  scale,                 // simulated probability above one
  undefined_correlation,
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::dimension: return "dimension";
    case ErrorKind::input: return "input";
    case ErrorKind::data: return "data";
    case ErrorKind::degenerate_row: return "degenerate-row";
    case ErrorKind::insufficient_band: return "insufficient-band";
    case ErrorKind::cluster_degeneracy: return "cluster-degeneracy";
    case ErrorKind::convergence: return "convergence";
    case ErrorKind::rank: return "rank";
    case ErrorKind::cone_condition: return "cone-condition";
    case ErrorKind::out_of_cone: return "out-of-cone";
    case ErrorKind::no_cone_structure: return "no-cone-structure";
    case ErrorKind::spectrum_inconsistency: return "spectrum-inconsistency";
    case ErrorKind::scale: return "scale";
    case ErrorKind::undefined_correlation: return "undefined-correlation";
  }
  return "unknown";
}

/// Exit-code contract: 0 ok, 2 input, 3 data degeneracy, 4 numerical.
inline int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::dimension:
    case ErrorKind::input:
    case ErrorKind::data:
    case ErrorKind::scale:
      return 2;
    case ErrorKind::degenerate_row:
    case ErrorKind::insufficient_band:
    case ErrorKind::cluster_degeneracy:
    case ErrorKind::out_of_cone:
    case ErrorKind::undefined_correlation:
      return 3;
    case ErrorKind::convergence:
    case ErrorKind::rank:
    case ErrorKind::cone_condition:
    case ErrorKind::no_cone_structure:
    case ErrorKind::spectrum_inconsistency:
      return 4;
  }
  return 1;
}

/**
 * @brief Library exception. Carries the failure kind plus optional
 *        payload: offending entity indices and an achieved residual.
 */
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what, std::vector<std::size_t> indices = {},
        double residual = 0.0)
      : std::runtime_error(std::string(to_string(kind)) + " error: " + what),
        kind_(kind),
        indices_(std::move(indices)),
        residual_(residual) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::vector<std::size_t>& indices() const noexcept { return indices_; }
  double residual() const noexcept { return residual_; }
  int exit_code() const noexcept { return conekit::exit_code(kind_); }

 private:
  ErrorKind kind_;
  std::vector<std::size_t> indices_;
  double residual_;
};

namespace detail {

inline std::string join_indices(const std::vector<std::size_t>& idx, std::size_t limit = 20) {
  std::ostringstream os;
  for (std::size_t i = 0; i < idx.size() && i < limit; ++i) {
    if (i) os << ',';
    os << idx[i];
  }
  if (idx.size() > limit) os << ",... (" << idx.size() << " total)";
  return os.str();
}

}  // namespace detail
}  // namespace conekit
