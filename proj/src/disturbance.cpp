#include "dta/disturbance.hpp"

#include <cmath>

#include "dta/errors.hpp"

namespace dta {

std::string to_string(DisturbanceKind kind) {
  switch (kind) {
    case DisturbanceKind::None: return "none";
    case DisturbanceKind::Gaussian: return "gaussian";
    case DisturbanceKind::Laplace: return "laplace";
    case DisturbanceKind::Impulse: return "impulse";
  }
  return "none";
}

DisturbanceKind disturbance_kind_from_string(const std::string& s) {
  if (s == "none") return DisturbanceKind::None;
  if (s == "gaussian") return DisturbanceKind::Gaussian;
  if (s == "laplace") return DisturbanceKind::Laplace;
  if (s == "impulse") return DisturbanceKind::Impulse;
  throw ConfigError("unknown disturbance kind '" + s + "'");
}

void DisturbanceSpec::validate() const {
  if (kind == DisturbanceKind::None) return;
  if (!(m_zeta >= 0.0) || !std::isfinite(m_zeta)) {
    throw ConfigError("m_zeta must be finite and non-negative");
  }
  if (!(q_zeta > 0.0 && q_zeta < 1.0)) {
    throw ConfigError("q_zeta must lie in (0, 1)");
  }
  if (kind == DisturbanceKind::Impulse && !cutoff) {
    throw ConfigError("impulse disturbance needs a finite cutoff");
  }
  if (cutoff && *cutoff < 0) throw ConfigError("cutoff must be >= 0");
}

void draw_disturbance(const DisturbanceSpec& spec, std::int64_t k, Rng& rng,
                      StateMatrix& out) {
  const Eigen::Index rows = out.rows();
  const Eigen::Index cols = out.cols();
  out.setZero();
  if (spec.kind == DisturbanceKind::None) return;
  if (spec.cutoff && k >= *spec.cutoff) return;

  const double envelope = spec.m_zeta * std::pow(spec.q_zeta, static_cast<double>(k));
  const double sd = envelope / std::sqrt(static_cast<double>(rows * cols));
  switch (spec.kind) {
    case DisturbanceKind::Gaussian:
      for (Eigen::Index i = 0; i < out.size(); ++i) out.data()[i] = sd * rng.normal();
      break;
    case DisturbanceKind::Laplace: {
      const double scale = sd / std::sqrt(2.0);
      for (Eigen::Index i = 0; i < out.size(); ++i) out.data()[i] = rng.laplace(scale);
      break;
    }
    case DisturbanceKind::Impulse: {
      const int idx = rng.index(static_cast<int>(out.size()));
      out.data()[idx] = rng.bernoulli(0.5) ? envelope : -envelope;
      break;
    }
    case DisturbanceKind::None:
      break;
  }
}

}  // namespace dta
