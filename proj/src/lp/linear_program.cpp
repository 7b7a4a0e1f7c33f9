#include "evdr/lp/linear_program.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace evdr::lp {

int LinearProgram::add_column(double cost, double lower, double upper, std::string name) {
    if (!std::isfinite(cost)) throw std::invalid_argument("column cost must be finite");
    if (std::isnan(lower) || std::isnan(upper) || lower > upper || lower == kInf || upper == -kInf)
        throw std::invalid_argument("bad column bounds");
    cost_.push_back(cost);
    lower_.push_back(lower);
    upper_.push_back(upper);
    if (name.empty()) name = "x" + std::to_string(cost_.size() - 1);
    col_names_.push_back(std::move(name));
    return num_columns() - 1;
}

int LinearProgram::add_row(RowSense sense, double rhs, std::string name) {
    if (!std::isfinite(rhs)) throw std::invalid_argument("row rhs must be finite");
    rhs_.push_back(rhs);
    sense_.push_back(sense);
    if (name.empty()) name = "r" + std::to_string(rhs_.size() - 1);
    row_names_.push_back(std::move(name));
    return num_rows() - 1;
}

void LinearProgram::add_coefficient(int row, int col, double value) {
    if (row < 0 || row >= num_rows() || col < 0 || col >= num_columns())
        throw std::out_of_range("coefficient index out of range");
    if (!std::isfinite(value)) throw std::invalid_argument("coefficient must be finite");
    if (value != 0.0) entries_.emplace_back(row, col, value);
}

void LinearProgram::set_bounds(int col, double lower, double upper) {
    if (std::isnan(lower) || std::isnan(upper) || lower > upper || lower == kInf || upper == -kInf)
        throw std::invalid_argument("bad column bounds");
    lower_.at(col) = lower;
    upper_.at(col) = upper;
}

Eigen::SparseMatrix<double> LinearProgram::matrix() const {
    Eigen::SparseMatrix<double> a(num_rows(), num_columns());
    a.setFromTriplets(entries_.begin(), entries_.end());
    a.makeCompressed();
    return a;
}

double LinearProgram::objective(const std::vector<double>& x) const {
    double obj = 0.0;
    for (int j = 0; j < num_columns(); ++j) obj += cost_[j] * x.at(j);
    return obj;
}

std::vector<double> LinearProgram::row_activity(const std::vector<double>& x) const {
    std::vector<double> act(num_rows(), 0.0);
    for (const auto& t : entries_) act[t.row()] += t.value() * x.at(t.col());
    return act;
}

double LinearProgram::max_violation(const std::vector<double>& x) const {
    double worst = 0.0;
    for (int j = 0; j < num_columns(); ++j) {
        worst = std::max(worst, lower_[j] - x.at(j));
        worst = std::max(worst, x[j] - upper_[j]);
    }
    const auto act = row_activity(x);
    for (int i = 0; i < num_rows(); ++i) {
        const double r = act[i] - rhs_[i];
        switch (sense_[i]) {
            case RowSense::LessEqual: worst = std::max(worst, r); break;
            case RowSense::GreaterEqual: worst = std::max(worst, -r); break;
            case RowSense::Equal: worst = std::max(worst, std::abs(r)); break;
        }
    }
    return worst;
}

void LinearProgram::validate() const {
    for (const auto& t : entries_)
        if (t.row() >= num_rows() || t.col() >= num_columns()) throw std::invalid_argument("entry out of range");
}

namespace {

std::string format_term(double coef, const std::string& name, bool first) {
    std::string out;
    if (coef < 0) out = first ? "-" : " - ";
    else if (!first) out = " + ";
    const double mag = std::abs(coef);
    if (mag != 1.0) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.17g ", mag);
        out += buf;
    }
    return out + name;
}

std::string format_value(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void write_lp_format(const LinearProgram& lp, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    const auto a = lp.matrix();
    const Eigen::SparseMatrix<double, Eigen::RowMajor> rows(a);

    out << "\\ written by evdr\nMinimize\n obj: ";
    bool first = true;
    for (int j = 0; j < lp.num_columns(); ++j) {
        if (lp.cost()[j] == 0.0) continue;
        out << format_term(lp.cost()[j], lp.column_name(j), first);
        first = false;
    }
    if (first) out << "0 " << lp.column_name(0);
    out << "\nSubject To\n";
    for (int i = 0; i < lp.num_rows(); ++i) {
        out << ' ' << lp.row_name(i) << ": ";
        first = true;
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(rows, i); it; ++it) {
            out << format_term(it.value(), lp.column_name(static_cast<int>(it.col())), first);
            first = false;
        }
        if (first) out << "0 " << lp.column_name(0);
        switch (lp.sense()[i]) {
            case RowSense::LessEqual: out << " <= "; break;
            case RowSense::GreaterEqual: out << " >= "; break;
            case RowSense::Equal: out << " = "; break;
        }
        out << format_value(lp.rhs()[i]) << '\n';
    }
    out << "Bounds\n";
    for (int j = 0; j < lp.num_columns(); ++j) {
        const double l = lp.lower()[j], u = lp.upper()[j];
        const auto& n = lp.column_name(j);
        if (l == u) out << ' ' << n << " = " << format_value(l) << '\n';
        else if (l == -kInf && u == kInf) out << ' ' << n << " free\n";
        else {
            out << ' ' << (l == -kInf ? std::string("-inf") : format_value(l)) << " <= " << n << " <= "
                << (u == kInf ? std::string("+inf") : format_value(u)) << '\n';
        }
    }
    out << "End\n";
}

}  // namespace evdr::lp
