#pragma once

#include <array>
#include <span>
#include <utility>
#include <vector>

#include "mcao/rtc/control.hpp"
#include "mcao/rtc/geometry.hpp"
#include "mcao/rtc/types.hpp"

namespace mcao::rtc {

// Mode shapes are indexed [mode][dm] and live in each DM's active-actuator space.
using ModeShapes = std::array<std::vector<std::vector<float>>, kAnisoModes>;

struct NgsState {
  // 5x6 row-major. Rows: TTM tip, TTM tilt, modes 0..2.
  // Columns: x and y slope of NGS sensors 5, 6, 7.
  std::array<float, kNgsOutputs * kNgsInputs> matrix{};
  ModeShapes mode_shapes;
  LoopState modes;  // modal integrators of the three anisoplanatism modes
};

struct NgsOutput {
  std::array<float, kNgsInputs> slopes{};
  std::array<float, 2> ttm{};
  std::array<float, kAnisoModes> mode_amplitudes{};
  std::vector<std::vector<float>> dm_offsets;  // per DM, active space
};

// Quad cell: x = (right - left) / total, y = (high rows - low rows) / total.
// A dark cell reads (0, 0).
std::array<float, 2> quad_cell_slopes(const WfsFrame& frame);

// One NGS low-order iteration. `frames` holds the three tip/tilt sensors in any
// order. Throws FrameCoherenceError on mismatched frame ids and UsageError when
// a frame is not an NGS sensor.
void ngs_update(std::span<const WfsFrame> frames, NgsState& ngs, LoopState& ttm, NgsOutput& out);
NgsOutput ngs_update(std::span<const WfsFrame> frames, NgsState& ngs, LoopState& ttm);

// Focus, 0-degree astigmatism and 45-degree astigmatism: quadratic on the
// highest DM, negated on the ground DM so the on-axis wavefront is unchanged.
// Each mode is unit RMS over all active actuators.
ModeShapes make_anisoplanatism_modes(const std::vector<DmConfig>& dms);

// Least-squares estimate from analytic responses: common tip/tilt for the TTM
// and differential tilt, linear in field position, for the three modes.
std::array<float, kNgsOutputs * kNgsInputs> default_ngs_matrix(
    std::span<const std::pair<double, double>> ngs_field_arcsec);

// Negative-feedback pseudo-inverse of a measured 6x5 interaction matrix
// (row-major, rows = NGS slopes, cols = TTM tip, tilt, modes).
std::array<float, kNgsOutputs * kNgsInputs> ngs_matrix_from_interaction(
    std::span<const double, kNgsInputs * kNgsOutputs> interaction);

}  // namespace mcao::rtc
