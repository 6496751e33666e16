#pragma once

// Decaying state disturbances zeta(k) with envelope m_zeta q_zeta^k.

#include <cstdint>
#include <optional>
#include <string>

#include "dta/cost_model.hpp"
#include "dta/rng.hpp"

namespace dta {

enum class DisturbanceKind { None, Gaussian, Laplace, Impulse };

std::string to_string(DisturbanceKind kind);
DisturbanceKind disturbance_kind_from_string(const std::string& s);

struct DisturbanceSpec {
  DisturbanceKind kind = DisturbanceKind::None;
  double m_zeta = 0.0;
  double q_zeta = 0.999;
  /// zeta(k) = 0 for k >= cutoff when set. Required for the impulse kind.
  std::optional<std::int64_t> cutoff;

  void validate() const;
  bool active() const { return kind != DisturbanceKind::None; }
};

/// Writes zeta(k) into `out` (resized to n x u).
///
/// Gaussian and Laplace draw i.i.d. coordinates with standard deviation
/// (m_zeta / sqrt(n u)) q^k, so E|zeta(k)|_F^2 = (m_zeta q^k)^2. Impulse puts
/// +-m_zeta q^k on one uniformly chosen coordinate.
void draw_disturbance(const DisturbanceSpec& spec, std::int64_t k, Rng& rng,
                      StateMatrix& out);

}  // namespace dta
