#include "sphdir/csv.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

namespace sphdir {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                field += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(field);
            field.clear();
        } else if (c != '\r') {
            field += c;
        }
    }
    out.push_back(field);
    return out;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

double parse_number(const std::string& raw, std::size_t row, std::size_t col) {
    const std::string s = trim(raw);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
        std::ostringstream os;
        os << "non-numeric value '" << raw << "' at row " << row + 1 << ", column " << col + 1;
        throw ParseError(os.str());
    }
    return v;
}

std::size_t find_column(const CsvTable& table, const std::string& name) {
    const auto it = std::find(table.header.begin(), table.header.end(), name);
    if (it == table.header.end()) throw ParseError("column '" + name + "' not found in header");
    return static_cast<std::size_t>(it - table.header.begin());
}

DirectionalSample to_sample(const Matrix& values, bool project) {
    if (values.rows() == 0) throw ParseError("no data rows");
    if (project) {
        for (Eigen::Index i = 0; i < values.rows(); ++i) {
            if (values.row(i).norm() < kDegenerateNorm) {
                std::ostringstream os;
                os << "row " << i + 1 << " is the zero vector and cannot be projected onto the sphere";
                throw GeometryError(os.str());
            }
        }
    }
    RowMatrix rows = values;
    return DirectionalSample(std::move(rows), project ? DirectionalSample::OnInvalid::Project
                                                      : DirectionalSample::OnInvalid::Reject);
}

}  // namespace

CsvTable read_csv(std::istream& in) {
    CsvTable table;
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
        if (trim(line).empty() || trim(line) == "\r") continue;
        auto fields = split_line(line);
        for (auto& f : fields) f = trim(f);
        if (!have_header) {
            table.header = std::move(fields);
            have_header = true;
            continue;
        }
        if (fields.size() != table.header.size()) {
            std::ostringstream os;
            os << "row " << table.cells.size() + 1 << " has " << fields.size() << " fields, header has "
               << table.header.size();
            throw ParseError(os.str());
        }
        table.cells.push_back(std::move(fields));
    }
    if (!have_header) throw ParseError("empty CSV input (a header row is required)");
    return table;
}

CsvTable read_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    return read_csv(in);
}

Matrix numeric_columns(const CsvTable& table, const std::optional<std::string>& skip_column) {
    std::optional<std::size_t> skip;
    if (skip_column) skip = find_column(table, *skip_column);
    const std::size_t ncols = table.header.size() - (skip ? 1 : 0);
    Matrix out(static_cast<Eigen::Index>(table.cells.size()), static_cast<Eigen::Index>(ncols));
    for (std::size_t r = 0; r < table.cells.size(); ++r) {
        Eigen::Index c_out = 0;
        for (std::size_t c = 0; c < table.header.size(); ++c) {
            if (skip && c == *skip) continue;
            out(static_cast<Eigen::Index>(r), c_out++) = parse_number(table.cells[r][c], r, c);
        }
    }
    return out;
}

DirectionalSample load_directional_csv(const std::string& path, const CsvLoadOptions& options) {
    const CsvTable table = read_csv_file(path);
    return to_sample(numeric_columns(table, options.label_column), options.project_to_sphere);
}

LabeledCsv load_labeled_csv(const std::string& path, const CsvLoadOptions& options) {
    if (!options.label_column) throw ParseError("a label column name is required");
    const CsvTable table = read_csv_file(path);
    const std::size_t lc = find_column(table, *options.label_column);
    DirectionalSample Y = to_sample(numeric_columns(table, options.label_column), options.project_to_sphere);

    std::vector<std::string> raw;
    raw.reserve(table.cells.size());
    for (const auto& row : table.cells) raw.push_back(row[lc]);
    std::vector<std::string> names = raw;
    std::sort(names.begin(), names.end());
    names.erase(std::unique(names.begin(), names.end()), names.end());
    const bool all_integer = std::all_of(names.begin(), names.end(), [](const std::string& s) {
        long v = 0;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        return !s.empty() && ec == std::errc() && ptr == s.data() + s.size();
    });
    if (all_integer)
        std::sort(names.begin(), names.end(), [](const std::string& a, const std::string& b) { return std::stol(a) < std::stol(b); });
    std::map<std::string, int> code;
    for (std::size_t j = 0; j < names.size(); ++j) code[names[j]] = static_cast<int>(j) + 1;
    std::vector<int> labels;
    labels.reserve(raw.size());
    for (const auto& s : raw) labels.push_back(code[s]);
    return {LabeledSample(std::move(Y), std::move(labels)), std::move(names)};
}

Matrix load_matrix_csv(const std::string& path) { return numeric_columns(read_csv_file(path)); }

void write_matrix_csv(std::ostream& out, const std::vector<std::string>& header, const Matrix& values) {
    for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
    out << '\n' << std::setprecision(17);
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        for (Eigen::Index j = 0; j < values.cols(); ++j) out << (j ? "," : "") << values(i, j);
        out << '\n';
    }
}

void write_matrix_csv(const std::string& path, const std::vector<std::string>& header, const Matrix& values) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write '" + path + "'");
    write_matrix_csv(out, header, values);
}

}  // namespace sphdir
