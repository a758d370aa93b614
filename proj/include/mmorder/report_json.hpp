#pragma once

#include <iosfwd>

#include "json.hpp"

#include "mmorder/mc.hpp"
#include "mmorder/orders.hpp"

namespace mmorder {

/// Finite doubles as numbers; infinities and NaN as the strings "inf",
/// "-inf", "nan" so they survive a JSON round trip.
nlohmann::json json_number(double x);

nlohmann::json to_json(const OrderReport& report);
nlohmann::json to_json(const mc::StReport& report);
nlohmann::json to_json(const mc::LrReport& report);
nlohmann::json to_json(const mc::McConfig& cfg);
/// McResult without the per-replicate values (those go to CSV).
nlohmann::json to_json(const mc::McResult& result);

/// One row per kept replicate: `replicate,theta,theta_hat`.
void write_replicates_csv(std::ostream& out, const mc::McResult& result);

}  // namespace mmorder
