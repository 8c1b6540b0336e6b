#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sphdir/classify.hpp"

namespace sphdir {

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> cells;
};

// Comma-separated, header row required, optional double quotes around fields.
CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::string& path);

struct CsvLoadOptions {
    bool project_to_sphere = false;
    std::optional<std::string> label_column;
};

// Numeric matrix from every column (or every column but the label column).
Matrix numeric_columns(const CsvTable& table, const std::optional<std::string>& skip_column = std::nullopt);

DirectionalSample load_directional_csv(const std::string& path, const CsvLoadOptions& options = {});

struct LabeledCsv {
    LabeledSample data;
    std::vector<std::string> label_names;  // label_names[j - 1] for group j
};

// Label values are mapped to 1..J in sorted order of their text (numeric order when all are integers).
LabeledCsv load_labeled_csv(const std::string& path, const CsvLoadOptions& options);

Matrix load_matrix_csv(const std::string& path);

void write_matrix_csv(std::ostream& out, const std::vector<std::string>& header, const Matrix& values);
void write_matrix_csv(const std::string& path, const std::vector<std::string>& header, const Matrix& values);

}  // namespace sphdir
