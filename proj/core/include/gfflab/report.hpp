#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gfflab/stats.hpp"

namespace gfflab {

struct Table {
  std::string name;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

struct Figure {
  std::string name;
  std::string svg;
};

struct CouplingReport {
  std::string experiment;
  std::string domain;  // JSON text
  std::string config;  // JSON text (scheduling fields removed)
  std::int64_t replicas = 0;
  std::uint64_t seed = 0;
  std::vector<StatVerdict> verdicts;
  std::vector<std::pair<std::string, double>> scalars;
  std::vector<std::string> notes;
  std::vector<Table> tables;
  std::vector<Figure> figures;
  double wall_clock_seconds = 0.0;  // kept out of report.json

  bool all_pass() const;
};

std::string fmt(double x);

// Deterministic JSON rendering (wall clock excluded), with the file manifest.
std::string report_json(const CouplingReport& r);
std::string table_csv(const Table& t);

// Writes report.json, one CSV per table, one SVG per figure and timing.txt.
// Returns the written file names relative to outdir.
std::vector<std::string> render_report(const CouplingReport& r, const std::string& outdir);

struct ReportSummary {
  std::string experiment;
  std::vector<StatVerdict> verdicts;
};
ReportSummary read_report(const std::string& json_text);

// SVG helpers.
struct HeatCell {
  int x = 0;
  int y = 0;
  double value = 0.0;
};
std::string svg_heatmap(const std::string& title, const std::vector<HeatCell>& cells);
struct CellLabel {
  double x = 0.0;
  double y = 0.0;
  std::string text;
};
std::string svg_cell_map(const std::string& title, const std::vector<HeatCell>& cells, const std::vector<CellLabel>& labels);
struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;
  bool line = false;
};
std::string svg_loglog(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                       const std::vector<Series>& series);

}  // namespace gfflab
