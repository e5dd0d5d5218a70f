/*
 * Copyright 2026 The rmae Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef RMAE_ENERGY_MODEL_HPP_
#define RMAE_ENERGY_MODEL_HPP_

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>

#include "rmae/error.hpp"
#include "rmae/radial_mask.hpp"

namespace rmae::energy {

inline constexpr double kSpeedOfLight = 299792458.0;  // [m/s], exact

/// LiDAR power model inputs, SI units throughout.
struct EnergyParams {
  double P_r = 1e-9;        // minimum received signal [W]
  double R = 100.0;         // design range [m]
  double tau = 5e-9;        // pulse width [s]
  double A_r = 1e-3;        // receiver aperture area [m^2]
  double rho = 0.5;         // target reflectivity
  double eta = 0.5;         // system efficiency
  double f_pulse = 1e5;     // pulse repetition frequency [Hz]
  double eta_laser = 0.25;
  double V_motor = 12.0;    // [V]
  double I_motor = 0.5;     // [A]
  double eta_motor = 0.8;
  double k_adc = 1e-12;     // [J per sample-code]
  int N_bits = 12;
  double P_MCU = 0.2;       // [W]
  double k_signal = 1e-10;  // [W per (sample/s * log2 sample)]
  double N_fft = 1024.0;    // samples per processing window
  double lambda = 905e-9;   // [m]
  double D_aperture = 0.01; // [m]

  void Validate() const {
    auto positive = [](double v, const char* name) {
      if (!(v > 0.0) || !std::isfinite(v)) {
        Fail(ErrorKind::kInvalidParams, std::string(name) + " must be positive");
      }
    };
    auto non_negative = [](double v, const char* name) {
      if (!(v >= 0.0) || !std::isfinite(v)) {
        Fail(ErrorKind::kInvalidParams, std::string(name) + " must be non-negative");
      }
    };
    auto fraction = [&](double v, const char* name) {
      positive(v, name);
      if (v > 1.0) Fail(ErrorKind::kInvalidParams, std::string(name) + " must be at most 1");
    };
    positive(P_r, "P_r");
    positive(R, "R");
    non_negative(tau, "tau");
    positive(A_r, "A_r");
    fraction(rho, "rho");
    fraction(eta, "eta");
    non_negative(f_pulse, "f_pulse");
    fraction(eta_laser, "eta_laser");
    non_negative(V_motor, "V_motor");
    non_negative(I_motor, "I_motor");
    fraction(eta_motor, "eta_motor");
    non_negative(k_adc, "k_adc");
    if (N_bits < 1) Fail(ErrorKind::kInvalidParams, "N_bits must be at least 1");
    non_negative(P_MCU, "P_MCU");
    non_negative(k_signal, "k_signal");
    if (!(N_fft >= 2.0)) Fail(ErrorKind::kInvalidParams, "N_fft must be at least 2");
    positive(lambda, "lambda");
    positive(D_aperture, "D_aperture");
  }
};

struct EnergyReport {
  double E_pulse = 0.0;  // [J]
  double P_laser = 0.0;  // [W]
  double P_scan = 0.0;
  double P_signal = 0.0;
  double P_ADC = 0.0;
  double P_MCU = 0.0;
  double P_control = 0.0;
  double P_total = 0.0;
  double delta_R = 0.0;      // [m]
  double delta_theta = 0.0;  // [rad]
  double f_pulse_required = 0.0;  // [Hz]
  double f_s = 0.0;          // [Hz]
  // The configured f_pulse exceeds half the ADC rate (f_s >= 2 f_pulse fails).
  bool nyquist_warning = false;
};

struct FrugalReport {
  double duty = 1.0;
  double range_scale = 1.0;
  double masked_P_laser = 0.0;
  double masked_P_signal = 0.0;
  double masked_P_ADC = 0.0;
  double P_scan = 0.0;
  double P_MCU = 0.0;
  double masked_P_total = 0.0;
};

/// Transmit energy needed to receive P_r from range R; grows as R^4.
inline double PulseEnergy(double P_r, double R, double tau, double A_r, double rho,
                          double eta) {
  const double denom = A_r * rho * eta;
  if (!(denom > 0.0)) Fail(ErrorKind::kInvalidParams, "A_r * rho * eta must be positive");
  const double spread = 4.0 * std::numbers::pi * R * R;
  return P_r * spread * spread * tau / denom;
}

inline double PulseEnergy(const EnergyParams& p) {
  return PulseEnergy(p.P_r, p.R, p.tau, p.A_r, p.rho, p.eta);
}

inline double LaserPower(double E_pulse, double f_pulse, double eta_laser) {
  if (!(eta_laser > 0.0)) Fail(ErrorKind::kInvalidParams, "eta_laser must be positive");
  return E_pulse * f_pulse / eta_laser;
}

inline double ScanPower(double V_motor, double I_motor, double eta_motor) {
  if (!(eta_motor > 0.0)) Fail(ErrorKind::kInvalidParams, "eta_motor must be positive");
  return V_motor * I_motor / eta_motor;
}

inline double RangeResolution(double tau) { return kSpeedOfLight * tau / 2.0; }

inline double AngularPrecision(double lambda, double D_aperture) {
  if (!(D_aperture > 0.0)) Fail(ErrorKind::kInvalidParams, "D_aperture must be positive");
  return lambda / D_aperture;
}

/// Returns (required pulse frequency c / 2dR, minimum ADC rate c / dR).
inline std::pair<double, double> NyquistSampling(double delta_R) {
  if (!(delta_R > 0.0)) Fail(ErrorKind::kInvalidParams, "delta_R must be positive");
  const double f_s = kSpeedOfLight / delta_R;
  return {f_s / 2.0, f_s};
}

inline double AdcPower(double k_adc, double delta_R, int N_bits) {
  if (!(delta_R > 0.0)) Fail(ErrorKind::kInvalidParams, "delta_R must be positive");
  if (N_bits < 1) Fail(ErrorKind::kInvalidParams, "N_bits must be at least 1");
  return k_adc * (kSpeedOfLight / delta_R) * std::ldexp(1.0, N_bits);
}

/// FFT-style processing cost: k * f_s * log2(N_fft).
inline double SignalPower(double k_signal, double f_s, double N_fft) {
  if (!(N_fft >= 2.0)) Fail(ErrorKind::kInvalidParams, "N_fft must be at least 2");
  return k_signal * f_s * std::log2(N_fft);
}

inline EnergyReport TotalPower(const EnergyParams& p) {
  p.Validate();
  EnergyReport r;
  r.E_pulse = PulseEnergy(p);
  r.P_laser = LaserPower(r.E_pulse, p.f_pulse, p.eta_laser);
  r.P_scan = ScanPower(p.V_motor, p.I_motor, p.eta_motor);
  r.delta_R = RangeResolution(p.tau);
  r.delta_theta = AngularPrecision(p.lambda, p.D_aperture);
  if (r.delta_R > 0.0) {
    std::tie(r.f_pulse_required, r.f_s) = NyquistSampling(r.delta_R);
    r.P_ADC = AdcPower(p.k_adc, r.delta_R, p.N_bits);
    r.P_signal = SignalPower(p.k_signal, r.f_s, p.N_fft);
  } else if (p.k_adc > 0.0 || p.k_signal > 0.0) {
    Fail(ErrorKind::kInvalidParams, "tau = 0 gives an unbounded sampling rate");
  }
  r.nyquist_warning = r.f_s < 2.0 * p.f_pulse;
  r.P_MCU = p.P_MCU;
  r.P_control = r.P_ADC + r.P_MCU;
  r.P_total = r.P_laser + r.P_scan + r.P_signal + r.P_control;
  return r;
}

/// Power left after masking. Laser, ADC and processing scale with the sensed
/// fraction of wedges; the laser also scales with the fourth power of the
/// farthest range it still has to reach. Motor and controller are untouched.
inline FrugalReport FrugalSavings(const EnergyReport& report, double duty,
                                  double max_sensed_range, double R_design) {
  if (!(R_design > 0.0)) Fail(ErrorKind::kInvalidParams, "R_design must be positive");
  if (!(duty >= 0.0 && duty <= 1.0)) Fail(ErrorKind::kInvalidParams, "duty must lie in [0,1]");
  if (!(max_sensed_range >= 0.0)) {
    Fail(ErrorKind::kInvalidParams, "max_sensed_range must be non-negative");
  }
  FrugalReport f;
  f.duty = duty;
  const double ratio = std::min(max_sensed_range, R_design) / R_design;
  f.range_scale = ratio * ratio * ratio * ratio;
  f.masked_P_laser = report.P_laser * duty * f.range_scale;
  f.masked_P_signal = report.P_signal * duty;
  f.masked_P_ADC = report.P_ADC * duty;
  f.P_scan = report.P_scan;
  f.P_MCU = report.P_MCU;
  f.masked_P_total = f.masked_P_laser + f.P_scan + f.masked_P_signal + (f.masked_P_ADC + f.P_MCU);
  return f;
}

inline FrugalReport FrugalSavings(const EnergyReport& report, const MaskStats& stats,
                                  double R_design) {
  return FrugalSavings(report, stats.group_visible_fraction, stats.max_sensed_range, R_design);
}

}  // namespace rmae::energy

#endif  // RMAE_ENERGY_MODEL_HPP_
