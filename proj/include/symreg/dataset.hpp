#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace symreg {

class data_error : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A numeric table read from CSV: header row required, RFC-4180 quoting,
/// '.' decimal separator, no missing values in used columns.
struct Dataset {
    std::vector<std::string> columns;
    Eigen::MatrixXd table;  // rows x columns

    int rows() const { return static_cast<int>(table.rows()); }
    int cols() const { return static_cast<int>(table.cols()); }
    /// Index of a named column, -1 when absent.
    int column_index(const std::string& name) const;
};

Dataset parse_csv(const std::string& text);
Dataset load_csv(const std::string& path);

}  // namespace symreg
