#include "mcao/sim/phase_screen.hpp"

#include <cmath>
#include <complex>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include <fftw3.h>

#include "mcao/core/config.hpp"
#include "mcao/core/errors.hpp"
#include "mcao/core/matrix_file.hpp"

namespace mcao::sim {
namespace {

double psd_rad2(double f, double r0) { return 0.023 * std::pow(r0, -5.0 / 3.0) * std::pow(f, -11.0 / 3.0); }

bool power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

int wrap(int i, int n) {
  i %= n;
  return i < 0 ? i + n : i;
}

}  // namespace

double PhaseScreen::sample(double x_m, double y_m) const {
  const double u = x_m / sampling_m + size / 2;
  const double v = y_m / sampling_m + size / 2;
  const double fu = std::floor(u), fv = std::floor(v);
  const double tu = u - fu, tv = v - fv;
  const int j0 = wrap(static_cast<int>(fu), size), i0 = wrap(static_cast<int>(fv), size);
  const int j1 = j0 + 1 == size ? 0 : j0 + 1, i1 = i0 + 1 == size ? 0 : i0 + 1;
  return (1 - tv) * ((1 - tu) * at_index(i0, j0) + tu * at_index(i0, j1)) +
         tv * ((1 - tu) * at_index(i1, j0) + tu * at_index(i1, j1));
}

double kolmogorov_structure_nm2(double r_m, double r0_m) {
  const double to_nm = kReferenceWavelengthNm / (2.0 * std::numbers::pi);
  return 6.88 * std::pow(r_m / r0_m, 5.0 / 3.0) * to_nm * to_nm;
}

PhaseScreen generate_phase_screen(std::uint64_t seed, double r0_m, int size, double sampling_m,
                                  const ScreenOptions& options) {
  if (!power_of_two(size)) throw ConfigError("phase screen size must be a power of two");
  if (!(r0_m > 0)) throw ConfigError("r0 must be positive");
  if (!(sampling_m > 0)) throw ConfigError("screen sampling must be positive");
  if (options.subharmonic_levels < 0) throw ConfigError("subharmonic levels must be non-negative");

  PhaseScreen s;
  s.size = size;
  s.sampling_m = sampling_m;
  s.r0_m = r0_m;
  s.seed = seed;
  const std::size_t n2 = static_cast<std::size_t>(size) * size;
  s.opd_nm.assign(n2, 0.0);
  if (std::isinf(r0_m)) return s;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const double extent = size * sampling_m;
  const double df = 1.0 / extent;
  const double to_nm = kReferenceWavelengthNm / (2.0 * std::numbers::pi);

  // High-frequency part: complex Gaussian spectrum summed by an inverse FFT.
  auto* spec = reinterpret_cast<std::complex<double>*>(fftw_malloc(sizeof(fftw_complex) * n2));
  for (int i = 0; i < size; ++i) {
    const double fy = (i < size / 2 ? i : i - size) * df;
    for (int j = 0; j < size; ++j) {
      const double fx = (j < size / 2 ? j : j - size) * df;
      const double f = std::hypot(fx, fy);
      const double re = normal(rng), im = normal(rng);
      const double amp = f > 0 ? std::sqrt(psd_rad2(f, r0_m)) * df : 0.0;
      spec[static_cast<std::size_t>(i) * size + j] = {re * amp, im * amp};
    }
  }
  fftw_plan plan = fftw_plan_dft_2d(size, size, reinterpret_cast<fftw_complex*>(spec),
                                    reinterpret_cast<fftw_complex*>(spec), FFTW_BACKWARD, FFTW_ESTIMATE);
  fftw_execute(plan);
  fftw_destroy_plan(plan);
  // Grid index 0 sits at x = -extent/2; the phase ramp that shift implies only
  // rotates each random coefficient, so the statistics are unchanged.
  for (std::size_t k = 0; k < n2; ++k) s.opd_nm[k] = spec[k].real();
  fftw_free(spec);

  // Subharmonics: 3x3 frequency grids at df / 3^p around the origin.
  std::vector<double> xs(static_cast<std::size_t>(size));
  for (int j = 0; j < size; ++j) xs[j] = (j - size / 2) * sampling_m;
  std::vector<std::complex<double>> ex(static_cast<std::size_t>(size)), ey(static_cast<std::size_t>(size));
  for (int p = 1; p <= options.subharmonic_levels; ++p) {
    const double dfp = df / std::pow(3.0, p);
    for (int a = -1; a <= 1; ++a)
      for (int b = -1; b <= 1; ++b) {
        const double re = normal(rng), im = normal(rng);
        if (a == 0 && b == 0) continue;
        const double fx = b * dfp, fy = a * dfp;
        const std::complex<double> c = std::complex<double>(re, im) * std::sqrt(psd_rad2(std::hypot(fx, fy), r0_m)) * dfp;
        for (int k = 0; k < size; ++k) {
          ex[k] = std::polar(1.0, 2.0 * std::numbers::pi * fx * xs[k]);
          ey[k] = std::polar(1.0, 2.0 * std::numbers::pi * fy * xs[k]);
        }
        for (int i = 0; i < size; ++i) {
          const std::complex<double> cy = c * ey[i];
          double* row = s.opd_nm.data() + static_cast<std::size_t>(i) * size;
          for (int j = 0; j < size; ++j) row[j] += (cy * ex[j]).real();
        }
      }
  }

  double mean = 0.0;
  for (double v : s.opd_nm) mean += v;
  mean /= static_cast<double>(n2);
  for (double& v : s.opd_nm) v = (v - mean) * to_nm;
  return s;
}

void save_screen(const std::filesystem::path& path, const PhaseScreen& screen) {
  MatrixFile m;
  m.rows = m.cols = static_cast<std::uint32_t>(screen.size);
  m.values.assign(screen.opd_nm.begin(), screen.opd_nm.end());
  save_matrix(path, m);
  std::ofstream meta(path.string() + ".ini");
  if (!meta) throw ConfigError("cannot write " + path.string() + ".ini");
  meta.precision(17);
  meta << "[screen]\n"
       << "altitude_m = " << screen.altitude_m << "\n"
       << "r0_m = " << (std::isinf(screen.r0_m) ? std::string("inf") : std::to_string(screen.r0_m)) << "\n"
       << "sampling_m = " << screen.sampling_m << "\n"
       << "wind_x_mps = " << screen.wind_x_mps << "\n"
       << "wind_y_mps = " << screen.wind_y_mps << "\n"
       << "seed = " << screen.seed << "\n";
}

PhaseScreen load_screen(const std::filesystem::path& path) {
  const MatrixFile m = load_matrix(path);
  if (m.rows != m.cols || !power_of_two(static_cast<int>(m.rows))) throw ConfigError("screen grid must be square, power of two");
  const Config meta = Config::load(path.string() + ".ini");
  PhaseScreen s;
  s.size = static_cast<int>(m.rows);
  s.opd_nm.assign(m.values.begin(), m.values.end());
  s.altitude_m = meta.get_double("screen.altitude_m", 0.0);
  s.r0_m = meta.get_double("screen.r0_m", 0.0);
  s.sampling_m = meta.get_double("screen.sampling_m", 0.0);
  s.wind_x_mps = meta.get_double("screen.wind_x_mps", 0.0);
  s.wind_y_mps = meta.get_double("screen.wind_y_mps", 0.0);
  s.seed = static_cast<std::uint64_t>(std::stoull(meta.get_string("screen.seed", "0")));
  if (!(s.sampling_m > 0)) throw ConfigError("screen sidecar lacks a positive sampling");
  return s;
}

}  // namespace mcao::sim
