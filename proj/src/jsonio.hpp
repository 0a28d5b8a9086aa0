#pragma once

#include <string>

#include "analysis.hpp"

namespace fdikit {

// JSON model format: {"a": [[..]], "e": [[..]] (optional), "b": [[..]],
// "c": [[..]], "d": [[..]], "ts": t, "groups": {...}, "output_groups":
// {...}}; a multimodel is {"models": [model, ...]}.  Indices are 0-based.

LtiModel model_from_json(const std::string& text);
std::vector<LtiModel> models_from_json(const std::string& text);  // 1 or N

// Canonical serialization: sorted keys, floats printed with %.17g.
std::string model_to_json(const LtiModel& m);
std::string models_to_json(const std::vector<LtiModel>& models);

// Structure matrices as arrays of 0/1 rows.
std::string struct_to_json(const BoolMatrix& s);
BoolMatrix struct_from_json(const std::string& text);

std::string matrix_to_json(const MatrixXd& m);

}  // namespace fdikit
