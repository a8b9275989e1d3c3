#include "mcao/rtc/ngs.hpp"

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "mcao/core/errors.hpp"

namespace mcao::rtc {

std::array<float, 2> quad_cell_slopes(const WfsFrame& frame) {
  if (frame.width < 2 || frame.height < 2 || frame.width % 2 || frame.height % 2)
    throw ConfigError("quad cell frame must have even, non-zero dimensions");
  if (frame.pixels.size() != static_cast<std::size_t>(frame.width) * frame.height)
    throw ConfigError("quad cell pixel count does not match its dimensions");
  const int hw = frame.width / 2, hh = frame.height / 2;
  std::int64_t left = 0, right = 0, low = 0, high = 0;
  for (int y = 0; y < frame.height; ++y)
    for (int x = 0; x < frame.width; ++x) {
      const std::int64_t v = frame.at(x, y);
      (x < hw ? left : right) += v;
      (y < hh ? low : high) += v;
    }
  const std::int64_t total = left + right;
  if (total == 0) return {0.0f, 0.0f};
  return {static_cast<float>(static_cast<double>(right - left) / total),
          static_cast<float>(static_cast<double>(high - low) / total)};
}

void ngs_update(std::span<const WfsFrame> frames, NgsState& ngs, LoopState& ttm, NgsOutput& out) {
  if (frames.size() != static_cast<std::size_t>(kNgsSensors))
    throw UsageError("NGS update needs exactly 3 frames, got " + std::to_string(frames.size()));
  std::array<bool, kNgsSensors> seen{};
  for (const WfsFrame& f : frames) {
    if (!is_ngs_sensor(f.sensor_id)) throw UsageError("sensor " + std::to_string(f.sensor_id) + " is not an NGS sensor");
    const int k = f.sensor_id - kFirstNgsSensor;
    if (seen[k]) throw UsageError("duplicate NGS sensor " + std::to_string(f.sensor_id));
    seen[k] = true;
    if (f.frame_id != frames[0].frame_id)
      throw FrameCoherenceError("NGS frame ids disagree: " + std::to_string(frames[0].frame_id) + " vs " +
                                std::to_string(f.frame_id));
  }
  for (const WfsFrame& f : frames) {
    const auto s = quad_cell_slopes(f);
    const int k = f.sensor_id - kFirstNgsSensor;
    out.slopes[2 * k] = s[0];
    out.slopes[2 * k + 1] = s[1];
  }
  std::array<float, kNgsOutputs> y{};
  for (int r = 0; r < kNgsOutputs; ++r) {
    float acc = 0.0f;
    for (int c = 0; c < kNgsInputs; ++c) acc += ngs.matrix[r * kNgsInputs + c] * out.slopes[c];
    y[r] = acc;
  }
  if (ngs.modes.integrator.size() != static_cast<std::size_t>(kAnisoModes)) ngs.modes.integrator.assign(kAnisoModes, 0.0f);
  const auto t = apply_control_law(ttm, std::span<const float>(y.data(), 2));
  out.ttm = {t[0], t[1]};
  const auto m = apply_control_law(ngs.modes, std::span<const float>(y.data() + 2, kAnisoModes));
  for (int i = 0; i < kAnisoModes; ++i) out.mode_amplitudes[i] = m[i];

  const auto& shapes = ngs.mode_shapes;
  const std::size_t n_dm = shapes[0].size();
  out.dm_offsets.resize(n_dm);
  for (std::size_t d = 0; d < n_dm; ++d) {
    auto& off = out.dm_offsets[d];
    off.assign(shapes[0][d].size(), 0.0f);
    for (int k = 0; k < kAnisoModes; ++k) {
      const float a = out.mode_amplitudes[k];
      const auto& v = shapes[k][d];
      for (std::size_t i = 0; i < off.size(); ++i) off[i] += a * v[i];
    }
  }
}

NgsOutput ngs_update(std::span<const WfsFrame> frames, NgsState& ngs, LoopState& ttm) {
  NgsOutput out;
  ngs_update(frames, ngs, ttm, out);
  return out;
}

ModeShapes make_anisoplanatism_modes(const std::vector<DmConfig>& dms) {
  ModeShapes shapes;
  if (dms.empty()) return shapes;
  const std::size_t top = dms.size() - 1;
  for (int k = 0; k < kAnisoModes; ++k) {
    auto& per_dm = shapes[k];
    per_dm.resize(dms.size());
    double sum2 = 0.0;
    std::size_t count = 0;
    for (std::size_t d = 0; d < dms.size(); ++d) {
      const DmConfig& dm = dms[d];
      per_dm[d].assign(static_cast<std::size_t>(dm.active_count), 0.0f);
      count += static_cast<std::size_t>(dm.active_count);
      const bool drive_top = d == top;
      const bool drive_ground = d == 0 && top > 0;
      if (!drive_top && !drive_ground) continue;
      std::vector<double> v(per_dm[d].size());
      double mean = 0.0;
      for (int i = 0; i < dm.active_count; ++i) {
        const double x = dm.sites[i].x_m, y = dm.sites[i].y_m;
        v[i] = k == 0 ? x * x + y * y : k == 1 ? x * x - y * y : 2.0 * x * y;
        mean += v[i];
      }
      mean /= dm.active_count;
      const double sign = drive_top ? 1.0 : -1.0;
      for (int i = 0; i < dm.active_count; ++i) {
        const double val = sign * (v[i] - mean);
        per_dm[d][i] = static_cast<float>(val);
        sum2 += val * val;
      }
    }
    const double rms = std::sqrt(sum2 / static_cast<double>(count));
    if (rms > 0)
      for (auto& vec : per_dm)
        for (auto& x : vec) x = static_cast<float>(x / rms);
  }
  return shapes;
}

namespace {

std::array<float, kNgsOutputs * kNgsInputs> negative_pinv(const Eigen::Matrix<double, kNgsInputs, kNgsOutputs>& g) {
  const Eigen::MatrixXd p = Eigen::MatrixXd(g).completeOrthogonalDecomposition().pseudoInverse();
  std::array<float, kNgsOutputs * kNgsInputs> m{};
  for (int r = 0; r < kNgsOutputs; ++r)
    for (int c = 0; c < kNgsInputs; ++c) m[r * kNgsInputs + c] = static_cast<float>(-p(r, c));
  return m;
}

}  // namespace

std::array<float, kNgsOutputs * kNgsInputs> default_ngs_matrix(
    std::span<const std::pair<double, double>> ngs_field_arcsec) {
  if (ngs_field_arcsec.size() != static_cast<std::size_t>(kNgsSensors))
    throw ConfigError("the NGS matrix needs exactly 3 star positions");
  // Field angles are scaled by the 30 arcsec half-field so every column is O(1).
  constexpr double kHalfField = 30.0;
  Eigen::Matrix<double, kNgsInputs, kNgsOutputs> g = Eigen::Matrix<double, kNgsInputs, kNgsOutputs>::Zero();
  for (int i = 0; i < kNgsSensors; ++i) {
    const double tx = ngs_field_arcsec[i].first / kHalfField, ty = ngs_field_arcsec[i].second / kHalfField;
    const int rx = 2 * i, ry = 2 * i + 1;
    g(rx, 0) = 1.0;
    g(ry, 1) = 1.0;
    g(rx, 2) = tx;  g(ry, 2) = ty;   // focus
    g(rx, 3) = tx;  g(ry, 3) = -ty;  // 0-degree astigmatism
    g(rx, 4) = ty;  g(ry, 4) = tx;   // 45-degree astigmatism
  }
  return negative_pinv(g);
}

std::array<float, kNgsOutputs * kNgsInputs> ngs_matrix_from_interaction(
    std::span<const double, kNgsInputs * kNgsOutputs> interaction) {
  Eigen::Matrix<double, kNgsInputs, kNgsOutputs> g;
  for (int r = 0; r < kNgsInputs; ++r)
    for (int c = 0; c < kNgsOutputs; ++c) g(r, c) = interaction[r * kNgsOutputs + c];
  return negative_pinv(g);
}

}  // namespace mcao::rtc
