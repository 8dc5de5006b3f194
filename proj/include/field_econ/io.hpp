#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "field_econ/dynamics.hpp"
#include "field_econ/field_solver.hpp"
#include "field_econ/harness.hpp"
#include "field_econ/kernels.hpp"

namespace field_econ {

// %.17g, enough digits to round-trip a double.
std::string format_double(double v);

// Quotes a CSV field when it contains a comma, quote or line break.
std::string csv_field(const std::string& s);

// Run settings that share the config file with the model keys. Unknown keys
// are ignored; a present key of the wrong type or value raises ParamError.
SimConfig sim_config_from_json(const nlohmann::json& cfg, SimConfig base = {});
McConfig mc_config_from_json(const nlohmann::json& cfg, McConfig base = {});

RhoVariant parse_rho_variant(const std::string& s);

// One row per snapshot per agent: t,i,K,X,P.
void write_trajectory_csv(const Trajectory& traj, std::ostream& os);
nlohmann::json trajectory_summary(const Trajectory& traj);

nlohmann::json field_to_json(const FieldSolution& field);

// grids/profile_X.csv (X, f, mean_K, P at K = <K>_X, 101 points) and
// grids/price_K.csv (geometric K grid at X in {0, 0.5, 1}).
void write_field_grids(const FieldSolution& field, const std::string& dir);

void write_sweep_csv(const SweepGrid& grid, std::ostream& os);

// Columns K,K_prime,X,X_prime,theta,theta_prime (header required).
std::vector<KernelQuery> read_queries_csv(std::istream& is);
void write_kernel_csv(const std::vector<KernelQuery>& queries,
                      const std::vector<TransitionValue>& values, std::ostream& os);

}  // namespace field_econ
