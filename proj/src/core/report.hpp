#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "harness.hpp"

namespace sgc {

// "0.886 (0.054)": mean and standard deviation to three significant figures.
std::string format_cell(double mean, double stddev);

// Five-number summary used by the boxplots; quartiles interpolate linearly
// between order statistics. Whiskers reach the most extreme samples within
// 1.5 IQR of the box.
struct BoxStats {
  double q1 = 0.0, median = 0.0, q3 = 0.0;
  double whisker_lo = 0.0, whisker_hi = 0.0;
  std::vector<double> outliers;
};
BoxStats box_stats(std::vector<double> xs);
double quantile(std::vector<double> sorted, double q);

struct Series {
  std::string label;
  std::vector<double> y;  // x is the 1-based index
};

std::string boxplot_svg(const std::string& title, const std::vector<std::string>& labels,
                        const std::vector<std::vector<double>>& groups);
std::string line_chart_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                           const std::vector<Series>& series);

// Raw cross-validation results: folds.csv, baseline.csv (degraded input scored
// as the prediction) and traces.csv, all with 17 significant digits.
void write_cv_results(const CvReport& report, const std::filesystem::path& dir);
CvReport read_cv_results(const std::filesystem::path& dir);

// table.csv (metrics x losses, "mean (stddev)"), folds.csv, boxplot_<metric>.svg
// for every metric except mpe, and training_curves_<loss>.svg. Returns the
// paths written.
std::vector<std::filesystem::path> emit_report(const CvReport& report, const std::filesystem::path& dir);

}  // namespace sgc
