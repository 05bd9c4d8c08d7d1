#pragma once

// JSON file formats for experiments and POVMs, and report serialisation.
//
// Matrices are row-major nested arrays whose entries are [re, im] pairs.
// Parse failures raise Error(ErrorCode::Parse) with the field path of the
// offending value (for example "states[1].matrix[0][2]") or the line and
// column of a syntax error.

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "minsuff/experiment.hpp"
#include "minsuff/povm.hpp"

namespace minsuff::io {

using json = nlohmann::ordered_json;

Matrix matrix_from_json(const json& j, const std::string& path);
json matrix_to_json(const Matrix& m);
json real_matrix_to_json(const RealMatrix& m);

StatisticalExperiment experiment_from_json(const json& j, const Tolerances& tol = {});
json experiment_to_json(const StatisticalExperiment& e);

DiscretePOVM povm_from_json(const json& j, const Tolerances& tol = {});
json povm_to_json(const DiscretePOVM& m);

json parse_json_text(const std::string& text, const std::string& source);
json load_json_file(const std::string& path);

/// Compact JSON with shortest round-trip number formatting, newline-terminated.
std::string dump_json(const json& j);
/// Indented human-readable rendering of the same tree.
std::string dump_text(const json& j);

}  // namespace minsuff::io
