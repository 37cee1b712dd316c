#include "spiband/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string_view>
#include <system_error>
#include <vector>

namespace spiband {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open '" + path + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw Error(ErrorKind::IoError, "failed reading '" + path + "'");
  return std::move(buf).str();
}

void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot open '" + path + "' for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.flush();
  if (!out) throw Error(ErrorKind::IoError, "failed writing '" + path + "'");
}

double parse_field(std::string_view field, std::size_t line_no) {
  double value = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(first, last, value, std::chars_format::general);
  if (ec != std::errc{} || ptr != last || field.empty()) {
    throw Error(ErrorKind::ParseError, "line " + std::to_string(line_no) +
                                           ": malformed number '" + std::string(field) + "'");
  }
  return value;
}

std::vector<double> parse_row(std::string_view line, std::size_t line_no) {
  std::vector<double> values;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    const std::string_view field =
        comma == std::string_view::npos ? line.substr(start) : line.substr(start, comma - start);
    values.push_back(parse_field(field, line_no));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return values;
}

// Shortest decimal form that round-trips to the same double.
std::string shortest(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

std::string fixed17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::vector<double> number_array(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_array()) {
    throw Error(ErrorKind::ParseError, std::string("band JSON: missing array '") + key + "'");
  }
  std::vector<double> out;
  out.reserve(j[key].size());
  for (const auto& v : j[key]) {
    if (!v.is_number()) {
      throw Error(ErrorKind::ParseError, std::string("band JSON: non-numeric entry in '") + key + "'");
    }
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace

SampleMatrix read_sample_csv(const std::string& path, bool survival) {
  const std::string text = read_file(path);
  std::vector<std::string_view> lines;
  {
    std::string_view rest = text;
    while (!rest.empty()) {
      const std::size_t nl = rest.find('\n');
      std::string_view line = nl == std::string_view::npos ? rest : rest.substr(0, nl);
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      lines.push_back(line);
      if (nl == std::string_view::npos) break;
      rest.remove_prefix(nl + 1);
    }
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
  }
  if (lines.empty()) throw Error(ErrorKind::EmptyInput, "'" + path + "' has no header row");

  TimeGrid grid{parse_row(lines[0], 1)};
  const std::size_t n = grid.size();
  std::vector<double> flat;
  flat.reserve((lines.size() - 1) * n);
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const std::vector<double> row = parse_row(lines[r], r + 1);
    if (row.size() != n) {
      throw Error(ErrorKind::RaggedRows, "line " + std::to_string(r + 1) + ": expected " +
                                             std::to_string(n) + " values, got " +
                                             std::to_string(row.size()));
    }
    flat.insert(flat.end(), row.begin(), row.end());
  }
  return validate_matrix_flat(std::move(flat), std::move(grid), survival);
}

void write_sample_csv(const SampleMatrix& samples, const std::string& path) {
  std::string out;
  const auto times = samples.grid().times();
  for (std::size_t t = 0; t < times.size(); ++t) {
    if (t) out += ',';
    out += fixed17(times[t]);
  }
  out += '\n';
  for (std::size_t i = 0; i < samples.row_count(); ++i) {
    const auto row = samples.row(i);
    for (std::size_t t = 0; t < row.size(); ++t) {
      if (t) out += ',';
      out += fixed17(row[t]);
    }
    out += '\n';
  }
  write_file(path, out);
}

void write_band_json(const Band& band, const BandMetadata& metadata, const std::string& path) {
  nlohmann::json j;
  const auto times = band.grid().times();
  j["grid"] = std::vector<double>(times.begin(), times.end());
  j["lower"] = std::vector<double>(band.lower().begin(), band.lower().end());
  j["upper"] = std::vector<double>(band.upper().begin(), band.upper().end());
  j["method"] = metadata.method;
  j["alpha"] = metadata.alpha;
  j["seed"] = metadata.seed;
  j["config"] = metadata.config;
  if (metadata.metrics) j["metrics"] = *metadata.metrics;
  write_file(path, j.dump(2) + "\n");
}

LoadedBand read_band_json(const std::string& path) {
  const std::string text = read_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::ParseError, "band JSON '" + path + "': " + e.what());
  }
  if (!j.is_object()) throw Error(ErrorKind::ParseError, "band JSON: top level must be an object");

  TimeGrid grid{number_array(j, "grid")};
  Band band{std::move(grid), number_array(j, "lower"), number_array(j, "upper")};

  BandMetadata meta;
  try {
    if (!j.contains("method") || !j.contains("alpha") || !j.contains("seed")) {
      throw Error(ErrorKind::ParseError, "band JSON: missing method/alpha/seed");
    }
    meta.method = j["method"].get<std::string>();
    meta.alpha = j["alpha"].get<double>();
    meta.seed = j["seed"].get<std::uint64_t>();
    meta.config = j.value("config", nlohmann::json::object());
    if (j.contains("metrics")) meta.metrics = j["metrics"];
  } catch (const nlohmann::json::type_error& e) {
    throw Error(ErrorKind::ParseError, std::string("band JSON: ") + e.what());
  }
  return LoadedBand{std::move(band), std::move(meta)};
}

void render_band_svg(const Band& band, std::span<const double> curve, const std::string& path) {
  if (!curve.empty() && curve.size() != band.size()) {
    throw Error(ErrorKind::DimensionMismatch, "curve length does not match band grid");
  }
  constexpr double kW = 720, kH = 480, kL = 70, kR = 20, kT = 20, kB = 55;
  const auto times = band.grid().times();
  const double t0 = times.front();
  const double t1 = times.back();
  const bool single = band.size() == 1;
  const auto x_of = [&](double t) {
    if (single) return (kL + kW - kR) / 2.0;
    return kL + (t - t0) / (t1 - t0) * (kW - kL - kR);
  };
  const auto y_of = [&](double p) { return kH - kB - p * (kH - kT - kB); };

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"720\" height=\"480\" "
       "viewBox=\"0 0 720 480\">\n";
  s += "<rect x=\"0\" y=\"0\" width=\"720\" height=\"480\" fill=\"#ffffff\"/>\n";

  // Shaded region between the interpolated bounds. A one-point band gets a
  // fixed 40px horizontal extent so it stays visible.
  s += "<polygon fill=\"#9ecae1\" fill-opacity=\"0.6\" stroke=\"none\" points=\"";
  if (single) {
    const double cx = x_of(t0);
    s += fixed2(cx - 20) + "," + fixed2(y_of(band.upper(0))) + " ";
    s += fixed2(cx + 20) + "," + fixed2(y_of(band.upper(0))) + " ";
    s += fixed2(cx + 20) + "," + fixed2(y_of(band.lower(0))) + " ";
    s += fixed2(cx - 20) + "," + fixed2(y_of(band.lower(0)));
  } else {
    for (std::size_t i = 0; i < band.size(); ++i) {
      if (i) s += ' ';
      s += fixed2(x_of(times[i])) + "," + fixed2(y_of(band.upper(i)));
    }
    for (std::size_t i = band.size(); i-- > 0;) {
      s += ' ';
      s += fixed2(x_of(times[i])) + "," + fixed2(y_of(band.lower(i)));
    }
  }
  s += "\"/>\n";

  const auto polyline = [&](std::span<const double> values, const char* color) {
    std::string p = "<polyline fill=\"none\" stroke=\"";
    p += color;
    p += "\" stroke-width=\"1.5\" points=\"";
    if (single) {
      const double cx = x_of(t0);
      p += fixed2(cx - 20) + "," + fixed2(y_of(values[0])) + " " + fixed2(cx + 20) + "," +
           fixed2(y_of(values[0]));
    } else {
      for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) p += ' ';
        p += fixed2(x_of(times[i])) + "," + fixed2(y_of(values[i]));
      }
    }
    p += "\"/>\n";
    return p;
  };
  s += polyline(band.upper(), "#3182bd");
  s += polyline(band.lower(), "#3182bd");
  if (!curve.empty()) s += polyline(curve, "#e6550d");

  // Axes, ticks, labels.
  s += "<line x1=\"" + fixed2(kL) + "\" y1=\"" + fixed2(kH - kB) + "\" x2=\"" + fixed2(kW - kR) +
       "\" y2=\"" + fixed2(kH - kB) + "\" stroke=\"#000000\" stroke-width=\"1\"/>\n";
  s += "<line x1=\"" + fixed2(kL) + "\" y1=\"" + fixed2(kT) + "\" x2=\"" + fixed2(kL) +
       "\" y2=\"" + fixed2(kH - kB) + "\" stroke=\"#000000\" stroke-width=\"1\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double p = k / 4.0;
    const double y = y_of(p);
    s += "<line x1=\"" + fixed2(kL - 5) + "\" y1=\"" + fixed2(y) + "\" x2=\"" + fixed2(kL) +
         "\" y2=\"" + fixed2(y) + "\" stroke=\"#000000\" stroke-width=\"1\"/>\n";
    s += "<text x=\"" + fixed2(kL - 9) + "\" y=\"" + fixed2(y + 4) +
         "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"end\">" + tick_label(p) +
         "</text>\n";
  }
  const int x_ticks = single ? 0 : 4;
  for (int k = 0; k <= x_ticks; ++k) {
    const double t = single ? t0 : t0 + (t1 - t0) * k / x_ticks;
    const double x = x_of(t);
    s += "<line x1=\"" + fixed2(x) + "\" y1=\"" + fixed2(kH - kB) + "\" x2=\"" + fixed2(x) +
         "\" y2=\"" + fixed2(kH - kB + 5) + "\" stroke=\"#000000\" stroke-width=\"1\"/>\n";
    s += "<text x=\"" + fixed2(x) + "\" y=\"" + fixed2(kH - kB + 18) +
         "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">" +
         tick_label(t) + "</text>\n";
  }
  s += "<text x=\"" + fixed2((kL + kW - kR) / 2) + "\" y=\"" + fixed2(kH - 12) +
       "\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">time</text>\n";
  s += "<text x=\"18\" y=\"" + fixed2((kT + kH - kB) / 2) +
       "\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\" "
       "transform=\"rotate(-90 18 " +
       fixed2((kT + kH - kB) / 2) + ")\">survival probability</text>\n";
  s += "</svg>\n";
  write_file(path, s);
}

std::string report_csv_string(const ExperimentReport& report) {
  std::string out = "trial,method,alpha,grid_size,observed_coverage,average_width,percent_change\n";
  for (const TrialRow& row : report.trials) {
    out += std::to_string(row.trial);
    out += ',';
    out += to_string(row.method);
    out += ',';
    out += shortest(row.alpha);
    out += ',';
    out += std::to_string(row.grid_size);
    out += ',';
    out += shortest(row.observed_coverage);
    out += ',';
    out += shortest(row.average_width);
    out += ',';
    if (row.percent_change) out += shortest(*row.percent_change);
    out += '\n';
  }
  return out;
}

void write_report_csv(const ExperimentReport& report, const std::string& path) {
  write_file(path, report_csv_string(report));
}

nlohmann::json aggregate_json(const ExperimentReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const AggregateRow& agg : report.aggregates) {
    nlohmann::json j;
    j["method"] = to_string(agg.method);
    j["alpha"] = agg.alpha;
    j["grid_size"] = agg.grid_size;
    j["trials"] = agg.trials;
    j["mean_coverage"] = agg.mean_coverage;
    j["stddev_coverage"] = agg.stddev_coverage;
    j["mean_width"] = agg.mean_width;
    j["stddev_width"] = agg.stddev_width;
    j["width_ci_halfwidth"] = agg.width_ci_halfwidth;
    if (agg.mean_percent_change) {
      j["mean_percent_change"] = *agg.mean_percent_change;
      j["stddev_percent_change"] = *agg.stddev_percent_change;
    }
    rows.push_back(std::move(j));
  }
  return nlohmann::json{{"aggregates", std::move(rows)}};
}

nlohmann::json coverage_report_json(const CoverageReport& report) {
  nlohmann::json j;
  j["observed_coverage"] = report.observed_coverage;
  j["n_test_samples"] = report.n_test_samples;
  j["average_width"] = report.average_width;
  if (report.percent_change_vs_baseline) {
    j["percent_change_vs_baseline"] = *report.percent_change_vs_baseline;
  }
  return j;
}

}  // namespace spiband
