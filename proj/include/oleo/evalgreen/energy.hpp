// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>

namespace oleo::evalgreen {

// Reference hardware constants: a 350 W device on a 722 g CO2-eq/kWh grid.
inline constexpr double kDefaultPowerKw = 0.35;
inline constexpr double kDefaultCarbonGPerKwh = 722.0;

// grams CO2-eq = kW * hours * g/kWh
double co2e(double power_kw, double hours, double carbon_g_per_kwh);

// AUC above chance per unit of emission: (auc - 50) / co2e * 100. co2e must be > 0.
double apc(double auc, double co2e_grams);

struct EnergyReport {
  double p = 0.0;     // kW
  double t = 0.0;     // hours
  double c = 0.0;     // g CO2-eq per kWh
  double co2e = 0.0;  // grams
  std::optional<double> apc;
};

EnergyReport energy_report(double power_kw, double seconds, double carbon_g_per_kwh, std::optional<double> auc);

}  // namespace oleo::evalgreen
