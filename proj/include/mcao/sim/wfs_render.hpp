#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "mcao/rtc/geometry.hpp"
#include "mcao/rtc/types.hpp"

namespace mcao::sim {

struct SensorModel {
  double plate_scale_arcsec = 1.0;  // per pixel
  double spot_half_width = 2.0;     // triangle kernel half-width: pixels (LGS), arcsec (quad cell)
  double flux = 1000.0;             // photons per subaperture (LGS) or per frame (quad cell)
  double read_noise_adu = 1.0;
  bool noise = true;
};

// OPD lattice for one sensor: (2G+1)^2 points at half-subaperture spacing;
// point (i, j) sits at ((j - G) p / 2, (i - G) p / 2). Subaperture (r, c)
// spans lattice rows 2r..2r+2 and columns 2c..2c+2.
int lattice_side(const rtc::SensorLayout& layout);
std::pair<double, double> lattice_point(const rtc::SensorLayout& layout, int i, int j);

// Mean OPD gradient (nm/m) over each subaperture, from edge averages of the lattice.
std::vector<std::array<double, 2>> subaperture_gradients(const rtc::SensorLayout& layout, std::span<const double> lattice);

// Spot displacement in pixels produced by a wavefront gradient in nm/m.
double gradient_to_pixels(double gradient_nm_per_m, const SensorModel& model);

// Renders every illuminated subaperture of an LGS sensor: the spot is a separable
// triangle displaced by the subaperture's mean gradient. Noise is Poisson plus
// Gaussian read noise from a stream seeded by `seed`.
rtc::WfsFrame render_wfs_pixels(const rtc::SensorLayout& layout, std::span<const double> lattice,
                                const SensorModel& model, std::uint64_t seed, std::uint64_t frame_id,
                                TimeNs timestamp);

// Quad cell (2x2 pixels) image of a star displaced by (tilt_x, tilt_y) arcsec.
rtc::WfsFrame render_quad_cell(int sensor_id, double tilt_x_arcsec, double tilt_y_arcsec, const SensorModel& model,
                               std::uint64_t seed, std::uint64_t frame_id, TimeNs timestamp);

// Fraction of a unit-area triangle of half-width w centred at c that falls in [a, b].
double triangle_mass(double a, double b, double c, double w);

}  // namespace mcao::sim
