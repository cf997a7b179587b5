#pragma once

#include <string>
#include <vector>

#include "gwkit/data_model.hpp"
#include "gwkit/esda.hpp"
#include "gwkit/global_regression.hpp"
#include "gwkit/gwr.hpp"
#include "gwkit/mgwr.hpp"

namespace gwkit::report {

// "0.000***" style p-value text: 3 decimals plus *** below 0.001, ** below
// 0.01 and * below 0.05.
std::string p_value_text(double p);

// Coefficient table with Est Coeff, T-value, P-Value and VIF columns and a
// footer with fit statistics and the observation/df counts.
std::string ols_text(const GlobalFit& fit, const std::vector<VifEntry>& vif, const std::string& dependent);
// term,coefficient,std_error,t_value,p_value,vif (shortest round-trip doubles;
// the intercept's vif is empty).
std::string ols_csv(const GlobalFit& fit, const std::vector<VifEntry>& vif);
// statistic,value rows: r_squared, adj_r_squared, ..., df_model.
std::string ols_diagnostics_csv(const GlobalFit& fit);

std::string moran_text(const MoranResult& result, const std::string& variable, const std::string& weights);
std::string moran_csv(const MoranResult& result);

// Per-term bandwidth with the spread of the local estimates.
std::string gwr_text(const GwrModel& model, const std::string& dependent);
std::string gwr_csv(const GwrModel& model);
// One row per unit: id, u, v, fitted, residual, leverage, local_cn and
// beta_/se_/t_ columns per term.
std::string gwr_surfaces_csv(const GwrModel& model, const ObservationTable& table);
std::string gwr_surfaces_geojson(const GwrModel& model, const ObservationTable& table);

// Bandwidth, STD, Min, Median, Max per term plus ENP and critical t, with a
// footer of fit statistics.
std::string mgwr_text(const MgwrSummary& summary, const std::string& dependent);
std::string mgwr_csv(const MgwrSummary& summary);
// As the GWR surfaces plus sig_<term> (1/0 under the ENP-adjusted critical
// t) and masked_<term> (the estimate, or empty when not significant).
std::string mgwr_surfaces_csv(const MgwrModel& model, const ObservationTable& table);
std::string mgwr_surfaces_geojson(const MgwrModel& model, const ObservationTable& table);
std::string mgwr_convergence_csv(const MgwrModel& model);

std::string hotspots_csv(const HotSpotResult& result, const ObservationTable& table, const Eigen::VectorXd& values);
std::string hotspots_geojson(const HotSpotResult& result, const ObservationTable& table,
                             const Eigen::VectorXd& values);

}  // namespace gwkit::report
