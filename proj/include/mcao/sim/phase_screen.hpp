#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace mcao::sim {

inline constexpr double kReferenceWavelengthNm = 500.0;

// Square periodic grid of optical path difference (nm) for one turbulent layer.
// Grid point (i, j) sits at x = (j - n/2) * sampling, y = (i - n/2) * sampling.
struct PhaseScreen {
  double altitude_m = 0.0;
  int size = 0;
  double sampling_m = 0.0;
  double r0_m = 0.0;  // at 500 nm; infinity for a flat screen
  double wind_x_mps = 0.0;
  double wind_y_mps = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> opd_nm;  // row-major

  double extent_m() const { return size * sampling_m; }
  double at_index(int i, int j) const { return opd_nm[static_cast<std::size_t>(i) * size + j]; }
  // Bilinear interpolation; coordinates outside the grid wrap periodically.
  double sample(double x_m, double y_m) const;
};

struct ScreenOptions {
  int subharmonic_levels = 6;  // low-frequency compensation below the grid's fundamental
};

// FFT-method Kolmogorov screen with von-Karman-free power spectrum
// 0.023 r0^(-5/3) f^(-11/3), plus subharmonic terms. Zero mean. Throws
// ConfigError for a size that is not a power of two or a non-positive r0.
PhaseScreen generate_phase_screen(std::uint64_t seed, double r0_m, int size, double sampling_m,
                                  const ScreenOptions& options = {});

// Kolmogorov phase structure function converted to OPD, nm^2.
double kolmogorov_structure_nm2(double r_m, double r0_m);

// MCAM float grid plus a "<path>.ini" sidecar with the layer metadata.
void save_screen(const std::filesystem::path& path, const PhaseScreen& screen);
PhaseScreen load_screen(const std::filesystem::path& path);

}  // namespace mcao::sim
