#pragma once

#include <json.hpp>

#include "feint/alert.hpp"

namespace feint {

void to_json(nlohmann::json& j, const RawAlert& a);
void from_json(const nlohmann::json& j, RawAlert& a);

}  // namespace feint
