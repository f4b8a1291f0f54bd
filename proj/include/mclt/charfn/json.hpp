#ifndef MCLT_CHARFN_JSON_HPP
#define MCLT_CHARFN_JSON_HPP

#include <json.hpp>

#include "mclt/charfn/ks.hpp"
#include "mclt/charfn/scan.hpp"

namespace mclt {

inline nlohmann::json complex_to_json(cplx z) { return {{"re", z.real()}, {"im", z.imag()}}; }

inline void to_json(nlohmann::json& j, const DiskScanReport& r) {
  nlohmann::json winding = nlohmann::json::array();
  for (const auto& [radius, w] : r.winding_numbers) winding.push_back({radius, w});
  j = {{"radius_scanned", r.radius_scanned},
       {"zero_free_radius", r.zero_free_radius},
       {"min_modulus", r.min_modulus},
       {"argmin_point", complex_to_json(r.argmin_point)},
       {"winding_numbers", winding},
       {"status", r.certified ? "certified" : "heuristic"}};
  if (r.nearest_zero) j["nearest_zero"] = complex_to_json(*r.nearest_zero);
}

inline void to_json(nlohmann::json& j, const KSBoundReport& r) {
  j = {{"r", r.r},
       {"sigma_term", r.sigma_term},
       {"bracket_term", r.bracket_term},
       {"constant_A", r.constant_A},
       {"bound", r.bound},
       {"empirical_ks", r.empirical_ks ? nlohmann::json(*r.empirical_ks) : nlohmann::json()},
       {"degenerate", r.degenerate},
       {"log_circle_max", r.log_circle_max}};
}

inline void to_json(nlohmann::json& j, const RateFit& f) {
  j = {{"slope", f.slope},
       {"intercept", f.intercept},
       {"r_squared", f.r_squared},
       {"slope_ci", {f.slope_ci_low, f.slope_ci_high}},
       {"bound_slope", f.bound_slope},
       {"bound_intercept", f.bound_intercept},
       {"bound_r_squared", f.bound_r_squared}};
}

}  // namespace mclt

#endif  // MCLT_CHARFN_JSON_HPP
