#include "report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "errors.hpp"

namespace sgc {

namespace fs = std::filesystem;

std::string format_cell(double mean, double stddev) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g (%.3g)", mean, stddev);
  return buf;
}

double quantile(std::vector<double> sorted, double q) {
  if (sorted.empty()) throw CapacityError("quantile of an empty sample");
  std::sort(sorted.begin(), sorted.end());
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

BoxStats box_stats(std::vector<double> xs) {
  if (xs.empty()) throw CapacityError("boxplot of an empty sample");
  std::sort(xs.begin(), xs.end());
  BoxStats s;
  s.q1 = quantile(xs, 0.25);
  s.median = quantile(xs, 0.5);
  s.q3 = quantile(xs, 0.75);
  const double iqr = s.q3 - s.q1;
  const double lo_fence = s.q1 - 1.5 * iqr, hi_fence = s.q3 + 1.5 * iqr;
  s.whisker_lo = s.q1;
  s.whisker_hi = s.q3;
  for (double x : xs) {
    if (x < lo_fence || x > hi_fence) {
      s.outliers.push_back(x);
      continue;
    }
    s.whisker_lo = std::min(s.whisker_lo, x);
    s.whisker_hi = std::max(s.whisker_hi, x);
  }
  return s;
}

// SVG -----------------------------------------------------------------------

namespace {

constexpr double kWidth = 640, kHeight = 400;
constexpr double kLeft = 70, kRight = 20, kTop = 40, kBottom = 50;

std::string esc(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                          "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

struct YAxis {
  double lo, hi;
  double map(double v) const { return kTop + (hi - v) / (hi - lo) * (kHeight - kTop - kBottom); }
};

YAxis make_axis(double lo, double hi) {
  if (!std::isfinite(lo) || !std::isfinite(hi)) lo = 0, hi = 1;
  if (hi - lo < 1e-12) {
    const double pad = std::max(std::abs(hi) * 0.05, 1e-6);
    return {lo - pad, hi + pad};
  }
  const double pad = (hi - lo) * 0.05;
  return {lo - pad, hi + pad};
}

void open_svg(std::ostringstream& os, const std::string& title) {
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << esc(title)
     << "</text>\n";
}

void draw_y_axis(std::ostringstream& os, const YAxis& y, const std::string& label) {
  os << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kHeight - kBottom
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << kLeft << "\" y1=\"" << kHeight - kBottom << "\" x2=\"" << kWidth - kRight << "\" y2=\""
     << kHeight - kBottom << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double v = y.lo + (y.hi - y.lo) * i / 4.0;
    const double py = y.map(v);
    os << "<line x1=\"" << kLeft - 4 << "\" y1=\"" << num(py) << "\" x2=\"" << kLeft << "\" y2=\"" << num(py)
       << "\" stroke=\"black\"/>\n"
       << "<text x=\"" << kLeft - 6 << "\" y=\"" << num(py + 4) << "\" text-anchor=\"end\">" << tick_label(v)
       << "</text>\n";
  }
  if (!label.empty()) {
    os << "<text x=\"16\" y=\"" << (kTop + kHeight - kBottom) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
       << (kTop + kHeight - kBottom) / 2 << ")\">" << esc(label) << "</text>\n";
  }
}

}  // namespace

std::string boxplot_svg(const std::string& title, const std::vector<std::string>& labels,
                        const std::vector<std::vector<double>>& groups) {
  if (labels.size() != groups.size() || groups.empty()) throw ShapeError("boxplot needs one label per group");
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& g : groups) {
    for (double v : g) lo = std::min(lo, v), hi = std::max(hi, v);
  }
  const YAxis y = make_axis(lo, hi);
  std::ostringstream os;
  open_svg(os, title);
  draw_y_axis(os, y, "");
  const double slot = (kWidth - kLeft - kRight) / static_cast<double>(groups.size());
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const double cx = kLeft + slot * (static_cast<double>(i) + 0.5);
    const double half = std::min(30.0, slot * 0.3);
    os << "<text x=\"" << num(cx) << "\" y=\"" << kHeight - kBottom + 18 << "\" text-anchor=\"middle\">"
       << esc(labels[i]) << "</text>\n";
    if (groups[i].empty()) continue;
    const BoxStats s = box_stats(groups[i]);
    const char* color = kPalette[i % 10];
    os << "<g class=\"box\" data-label=\"" << esc(labels[i]) << "\">\n"
       << "<line x1=\"" << num(cx) << "\" y1=\"" << num(y.map(s.whisker_hi)) << "\" x2=\"" << num(cx) << "\" y2=\""
       << num(y.map(s.q3)) << "\" stroke=\"black\"/>\n"
       << "<line x1=\"" << num(cx) << "\" y1=\"" << num(y.map(s.q1)) << "\" x2=\"" << num(cx) << "\" y2=\""
       << num(y.map(s.whisker_lo)) << "\" stroke=\"black\"/>\n"
       << "<line x1=\"" << num(cx - half / 2) << "\" y1=\"" << num(y.map(s.whisker_hi)) << "\" x2=\""
       << num(cx + half / 2) << "\" y2=\"" << num(y.map(s.whisker_hi)) << "\" stroke=\"black\"/>\n"
       << "<line x1=\"" << num(cx - half / 2) << "\" y1=\"" << num(y.map(s.whisker_lo)) << "\" x2=\""
       << num(cx + half / 2) << "\" y2=\"" << num(y.map(s.whisker_lo)) << "\" stroke=\"black\"/>\n"
       << "<rect x=\"" << num(cx - half) << "\" y=\"" << num(y.map(s.q3)) << "\" width=\"" << num(2 * half)
       << "\" height=\"" << num(std::max(0.5, y.map(s.q1) - y.map(s.q3))) << "\" fill=\"" << color
       << "\" fill-opacity=\"0.35\" stroke=\"" << color << "\"/>\n"
       << "<line x1=\"" << num(cx - half) << "\" y1=\"" << num(y.map(s.median)) << "\" x2=\"" << num(cx + half)
       << "\" y2=\"" << num(y.map(s.median)) << "\" stroke=\"black\" stroke-width=\"2\"/>\n";
    for (double o : s.outliers) {
      os << "<circle cx=\"" << num(cx) << "\" cy=\"" << num(y.map(o)) << "\" r=\"3\" fill=\"none\" stroke=\""
         << color << "\"/>\n";
    }
    os << "</g>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string line_chart_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                           const std::vector<Series>& series) {
  double lo = INFINITY, hi = -INFINITY;
  std::size_t n = 1;
  for (const auto& s : series) {
    n = std::max(n, s.y.size());
    for (double v : s.y) {
      if (std::isfinite(v)) lo = std::min(lo, v), hi = std::max(hi, v);
    }
  }
  const YAxis y = make_axis(lo, hi);
  const double plot_w = kWidth - kLeft - kRight;
  auto px = [&](std::size_t i) {
    return n <= 1 ? kLeft + plot_w / 2 : kLeft + plot_w * static_cast<double>(i) / static_cast<double>(n - 1);
  };
  std::ostringstream os;
  open_svg(os, title);
  draw_y_axis(os, y, y_label);
  for (std::size_t i = 0; i < n; i += std::max<std::size_t>(1, n / 10)) {
    os << "<text x=\"" << num(px(i)) << "\" y=\"" << kHeight - kBottom + 16 << "\" text-anchor=\"middle\">" << i + 1
       << "</text>\n";
  }
  os << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 12 << "\" text-anchor=\"middle\">"
     << esc(x_label) << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = kPalette[k % 10];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" data-label=\"" << esc(s.label)
       << "\" points=\"";
    for (std::size_t i = 0; i < s.y.size(); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      os << (i ? " " : "") << num(px(i)) << "," << num(y.map(s.y[i]));
    }
    os << "\"/>\n";
    const double ly = kTop + 14.0 * static_cast<double>(k);
    os << "<text x=\"" << kWidth - kRight - 4 << "\" y=\"" << num(ly + 10) << "\" text-anchor=\"end\" fill=\""
       << color << "\">" << esc(s.label) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

// CSV ------------------------------------------------------------------------

namespace {

void write_text(const fs::path& path, const std::string& text) {
  write_file(path, std::span<const unsigned char>(reinterpret_cast<const unsigned char*>(text.data()), text.size()));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::vector<std::vector<std::string>> read_rows(const fs::path& path, const std::string& header) {
  const auto bytes = read_file(path);
  std::istringstream in(std::string(bytes.begin(), bytes.end()));
  std::string line;
  if (!std::getline(in, line) || line != header) throw FormatError("unexpected header in " + path.string());
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (!line.empty()) rows.push_back(split(line));
  }
  return rows;
}

double to_double(const std::string& s, const fs::path& where) {
  if (s.empty()) return NAN;
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::logic_error&) {
    throw FormatError("bad number '" + s + "' in " + where.string());
  }
}

const std::string kTraceHeader = "loss_kind,fold,epoch,train_loss,val_loss,val_ssim";

std::string folds_csv(const CvReport& report, bool baseline) {
  std::string out = csv_header() + "\n";
  for (const auto& f : report.folds) out += csv_row(loss_name(f.loss), f.fold, baseline ? f.baseline : f.metrics) + "\n";
  return out;
}

std::string traces_csv(const CvReport& report) {
  std::string out = kTraceHeader + "\n";
  for (const auto& f : report.folds) {
    const auto& t = f.trace;
    for (std::size_t e = 0; e < t.train_loss.size(); ++e) {
      out += std::string(loss_name(f.loss)) + "," + std::to_string(f.fold) + "," + std::to_string(e + 1) + "," +
             format_full(t.train_loss[e]) + "," + (e < t.val_loss.size() ? format_full(t.val_loss[e]) : "") + "," +
             (e < t.val_ssim.size() ? format_full(t.val_ssim[e]) : "") + "\n";
    }
  }
  return out;
}

MetricReport report_from(const std::vector<std::string>& row, const fs::path& where) {
  double v[7];
  for (std::size_t m = 0; m < 7; ++m) v[m] = to_double(row[2 + m], where);
  return {v[0], v[1], v[2], v[3], v[4], v[5], v[6]};
}

}  // namespace

void write_cv_results(const CvReport& report, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  write_text(dir / "folds.csv", folds_csv(report, false));
  write_text(dir / "baseline.csv", folds_csv(report, true));
  write_text(dir / "traces.csv", traces_csv(report));
}

CvReport read_cv_results(const fs::path& dir) {
  CvReport report;
  std::map<std::pair<int, std::size_t>, std::size_t> index;
  std::size_t max_fold = 0;
  const fs::path folds_path = dir / "folds.csv";
  for (const auto& row : read_rows(folds_path, csv_header())) {
    if (row.size() != 9) throw FormatError("folds.csv row with " + std::to_string(row.size()) + " columns");
    FoldResult f;
    f.loss = parse_loss(row[0]);
    f.fold = static_cast<std::size_t>(to_double(row[1], folds_path));
    f.metrics = report_from(row, folds_path);
    if (std::find(report.losses.begin(), report.losses.end(), f.loss) == report.losses.end()) {
      report.losses.push_back(f.loss);
    }
    max_fold = std::max(max_fold, f.fold);
    index[{static_cast<int>(f.loss), f.fold}] = report.folds.size();
    report.folds.push_back(std::move(f));
  }
  if (report.folds.empty()) throw DataError("folds.csv lists no results");
  report.k = max_fold + 1;
  auto find = [&](const std::string& loss, const std::string& fold, const fs::path& where) -> FoldResult& {
    const auto it = index.find({static_cast<int>(parse_loss(loss)), static_cast<std::size_t>(to_double(fold, where))});
    if (it == index.end()) throw FormatError(where.string() + " names a (loss, fold) absent from folds.csv");
    return report.folds[it->second];
  };
  const fs::path baseline_path = dir / "baseline.csv";
  if (fs::exists(baseline_path)) {
    for (const auto& row : read_rows(baseline_path, csv_header())) {
      if (row.size() != 9) throw FormatError("baseline.csv row with " + std::to_string(row.size()) + " columns");
      find(row[0], row[1], baseline_path).baseline = report_from(row, baseline_path);
    }
  }
  const fs::path traces_path = dir / "traces.csv";
  if (fs::exists(traces_path)) {
    for (const auto& row : read_rows(traces_path, kTraceHeader)) {
      if (row.size() != 6) throw FormatError("traces.csv row with " + std::to_string(row.size()) + " columns");
      TrainingTrace& t = find(row[0], row[1], traces_path).trace;
      t.train_loss.push_back(to_double(row[3], traces_path));
      if (!row[4].empty()) t.val_loss.push_back(to_double(row[4], traces_path));
      if (!row[5].empty()) t.val_ssim.push_back(to_double(row[5], traces_path));
    }
  }
  return report;
}

std::vector<fs::path> emit_report(const CvReport& report, const fs::path& dir) {
  if (report.folds.empty() || report.losses.empty()) throw CapacityError("report has no results");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  std::vector<fs::path> written;
  auto emit = [&](const std::string& name, const std::string& text) {
    write_text(dir / name, text);
    written.push_back(dir / name);
  };

  std::vector<MetricSummary> summaries;
  std::string table = "metric";
  for (LossKind l : report.losses) {
    table += std::string(",") + loss_name(l);
    summaries.push_back(report.summary(l));
  }
  table += "\n";
  for (std::size_t m = 0; m < 7; ++m) {
    table += kMetricNames[m];
    for (const auto& s : summaries) table += "," + format_cell(metric_value(s.mean, m), metric_value(s.stddev, m));
    table += "\n";
  }
  emit("table.csv", table);
  emit("folds.csv", folds_csv(report, false));

  std::vector<std::string> labels;
  for (LossKind l : report.losses) labels.push_back(loss_name(l));
  for (std::size_t m = 0; m < 7; ++m) {
    if (std::string(kMetricNames[m]) == "mpe") continue;
    std::vector<std::vector<double>> groups;
    for (LossKind l : report.losses) {
      std::vector<double> xs;
      for (const FoldResult* f : report.for_loss(l)) xs.push_back(metric_value(f->metrics, m));
      groups.push_back(std::move(xs));
    }
    emit(std::string("boxplot_") + kMetricNames[m] + ".svg",
         boxplot_svg(std::string(kMetricNames[m]) + " across folds", labels, groups));
  }

  for (LossKind l : report.losses) {
    std::vector<Series> series;
    for (const FoldResult* f : report.for_loss(l)) {
      series.push_back({"fold " + std::to_string(f->fold), f->trace.train_loss});
    }
    emit(std::string("training_curves_") + loss_name(l) + ".svg",
         line_chart_svg(std::string("training loss (") + loss_name(l) + ")", "epoch", "epoch mean loss", series));
  }
  return written;
}

}  // namespace sgc
