#pragma once

#include <filesystem>
#include <string>

#include "tgl/solvers.hpp"

namespace tgl {

/// JSON document: w (row-major nested arrays), intercepts, standardization
/// vectors, names, labels, penalty and solver configs, convergence info.
/// Doubles are written in shortest round-trip form, so a reloaded model
/// predicts bit-identically.
std::string model_to_json(const FitResult& model);
FitResult model_from_json(const std::string& text);

void save_model(const FitResult& model, const std::filesystem::path& path);
FitResult load_model(const std::filesystem::path& path);

} // namespace tgl
