#pragma once

#include <string>
#include <vector>

#include "ppck/design.hpp"
#include "ppck/mcem.hpp"
#include "ppck/types.hpp"

namespace ppck {

// CSV with a header row, '.' decimal, and round-trip double formatting.
Matrix read_matrix_csv(const std::string& path, char header_prefix);
void write_matrix_csv(const std::string& path, const Matrix& M,
                      char header_prefix);

// Design file (x1..xd) plus aligned output file (y1..yN).
FidelityData load_level(const std::string& design_path,
                        const std::string& output_path, int level);

// Versioned JSON archive. Loading a saved model restores an emulator whose
// predictions at any input and seed are bitwise identical.
void save_model(const std::string& path, const FittedEmulator& em);
FittedEmulator load_model(const std::string& path);

void write_trace_csv(const std::string& path, const FittedEmulator& em);

}  // namespace ppck
