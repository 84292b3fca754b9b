// SPDX-License-Identifier: Apache-2.0
#include "oleo/evalgreen/energy.hpp"

#include <cmath>

#include "oleo/error.hpp"

namespace oleo::evalgreen {

double co2e(double power_kw, double hours, double carbon_g_per_kwh) {
  if (!(power_kw >= 0.0) || !(hours >= 0.0) || !(carbon_g_per_kwh >= 0.0)) {
    throw ConfigError("co2e: power, time and carbon efficiency must be non-negative");
  }
  return power_kw * hours * carbon_g_per_kwh;
}

double apc(double auc, double co2e_grams) {
  if (!(co2e_grams > 0.0)) throw ConfigError("apc: CO2E must be positive");
  return (auc - 50.0) / co2e_grams * 100.0;
}

EnergyReport energy_report(double power_kw, double seconds, double carbon_g_per_kwh, std::optional<double> auc) {
  EnergyReport r;
  r.p = power_kw;
  r.t = seconds / 3600.0;
  r.c = carbon_g_per_kwh;
  r.co2e = co2e(r.p, r.t, r.c);
  if (auc && r.co2e > 0.0) r.apc = apc(*auc, r.co2e);
  return r;
}

}  // namespace oleo::evalgreen
