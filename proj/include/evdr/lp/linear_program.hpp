#pragma once

#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

namespace evdr::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class RowSense { LessEqual, GreaterEqual, Equal };

/// min c^T x  s.t.  rows of A x (<=|>=|=) rhs,  lower <= x <= upper.
class LinearProgram {
public:
    int add_column(double cost, double lower, double upper, std::string name = {});
    int add_row(RowSense sense, double rhs, std::string name = {});
    void add_coefficient(int row, int col, double value);

    void set_cost(int col, double cost) { cost_.at(col) = cost; }
    void set_bounds(int col, double lower, double upper);
    void set_rhs(int row, double rhs) { rhs_.at(row) = rhs; }

    [[nodiscard]] int num_columns() const noexcept { return static_cast<int>(cost_.size()); }
    [[nodiscard]] int num_rows() const noexcept { return static_cast<int>(rhs_.size()); }

    [[nodiscard]] const std::vector<double>& cost() const noexcept { return cost_; }
    [[nodiscard]] const std::vector<double>& lower() const noexcept { return lower_; }
    [[nodiscard]] const std::vector<double>& upper() const noexcept { return upper_; }
    [[nodiscard]] const std::vector<double>& rhs() const noexcept { return rhs_; }
    [[nodiscard]] const std::vector<RowSense>& sense() const noexcept { return sense_; }
    [[nodiscard]] const std::string& column_name(int col) const { return col_names_.at(col); }
    [[nodiscard]] const std::string& row_name(int row) const { return row_names_.at(row); }

    /// Column-major constraint matrix; duplicate entries are summed.
    [[nodiscard]] Eigen::SparseMatrix<double> matrix() const;

    [[nodiscard]] double objective(const std::vector<double>& x) const;
    [[nodiscard]] std::vector<double> row_activity(const std::vector<double>& x) const;

    /// Largest bound or row violation of `x` (absolute, original units).
    [[nodiscard]] double max_violation(const std::vector<double>& x) const;

    void validate() const;

private:
    std::vector<double> cost_, lower_, upper_;
    std::vector<std::string> col_names_;
    std::vector<double> rhs_;
    std::vector<RowSense> sense_;
    std::vector<std::string> row_names_;
    std::vector<Eigen::Triplet<double>> entries_;
};

/// CPLEX LP text format, readable by most third-party solvers.
void write_lp_format(const LinearProgram& lp, const std::filesystem::path& path);

}  // namespace evdr::lp
