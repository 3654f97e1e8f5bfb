#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sgar {

// Central finite-difference verification of every analytic gradient, from
// the scalar kernels up to the full training loss. Loss checks hold the
// matching fixed at the unperturbed optimum: the objective is piecewise
// smooth and the analytic gradients differentiate the active piece.
// Random configurations are resampled away from kinks (clamp edges, L1
// sign changes, box corner coincidences) so the comparison is meaningful.
struct GradCheckEntry {
  std::string component;
  double max_rel_err = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double threshold = 1e-4;
  bool passed() const;
};

// Components: focal, l1, giou, points, attention, heads, full_model.
// Relative error |a - fd| / max(1, |a|, |fd|) with step 1e-6.
GradCheckReport run_gradcheck(std::uint64_t seed = 0);

}  // namespace sgar
