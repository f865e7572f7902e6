#include "gfflab/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gfflab/errors.hpp"

namespace gfflab {

using nlohmann::json;
namespace fs = std::filesystem;

bool CouplingReport::all_pass() const {
  return std::all_of(verdicts.begin(), verdicts.end(), [](const StatVerdict& v) { return v.pass; });
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

namespace {

std::vector<std::string> manifest(const CouplingReport& r) {
  std::vector<std::string> files{"report.json"};
  for (const auto& t : r.tables) files.push_back(t.name + ".csv");
  for (const auto& f : r.figures) files.push_back(f.name + ".svg");
  return files;
}

json verdict_json(const StatVerdict& v) {
  json j;
  j["name"] = v.name;
  j["kind"] = to_string(v.kind);
  j["estimate"] = v.estimate;
  j["stderr"] = v.stderr_;
  j["target"] = v.target;
  if (v.kind == TestKind::range) j["target_hi"] = v.target_hi;
  j[v.kind == TestKind::ks ? "p_value" : "score"] = v.score;
  j["threshold"] = v.threshold;
  j["pass"] = v.pass;
  return j;
}

}  // namespace

std::string report_json(const CouplingReport& r) {
  json j;
  j["experiment"] = r.experiment;
  j["domain"] = r.domain.empty() ? json::object() : json::parse(r.domain);
  j["config"] = r.config.empty() ? json::object() : json::parse(r.config);
  j["replicas"] = r.replicas;
  j["seed"] = r.seed;
  j["verdicts"] = json::array();
  for (const auto& v : r.verdicts) j["verdicts"].push_back(verdict_json(v));
  j["all_pass"] = r.all_pass();
  json s = json::object();
  for (const auto& [k, v] : r.scalars) s[k] = v;
  j["scalars"] = s;
  j["notes"] = r.notes;
  j["tables"] = json::object();
  for (const auto& t : r.tables) {
    json tj;
    tj["header"] = t.header;
    tj["rows"] = t.rows;
    j["tables"][t.name] = tj;
  }
  j["files"] = manifest(r);
  return j.dump(2) + "\n";
}

std::string table_csv(const Table& t) {
  std::ostringstream os;
  for (std::size_t i = 0; i < t.header.size(); ++i) os << (i ? "," : "") << t.header[i];
  os << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
    os << '\n';
  }
  return os.str();
}

std::vector<std::string> render_report(const CouplingReport& r, const std::string& outdir) {
  std::error_code ec;
  fs::create_directories(outdir, ec);
  if (ec) throw Error("cannot create output directory '" + outdir + "': " + ec.message());
  auto write = [&](const std::string& name, const std::string& body) {
    fs::path p = fs::path(outdir) / name;
    std::ofstream os(p, std::ios::binary);
    os << body;
    if (!os) throw Error("failed to write '" + p.string() + "'");
  };
  write("report.json", report_json(r));
  for (const auto& t : r.tables) write(t.name + ".csv", table_csv(t));
  for (const auto& f : r.figures) write(f.name + ".svg", f.svg);
  write("timing.txt", "wall_clock_seconds " + fmt(r.wall_clock_seconds) + "\n");
  return manifest(r);
}

ReportSummary read_report(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(std::string("malformed report: ") + e.what());
  }
  ReportSummary s;
  s.experiment = j.value("experiment", "");
  for (const auto& v : j.at("verdicts")) {
    StatVerdict x;
    x.name = v.at("name").get<std::string>();
    x.kind = test_kind_from_string(v.at("kind").get<std::string>());
    x.estimate = v.at("estimate").get<double>();
    x.stderr_ = v.at("stderr").get<double>();
    x.target = v.at("target").get<double>();
    x.target_hi = v.value("target_hi", 0.0);
    x.score = x.kind == TestKind::ks ? v.at("p_value").get<double>() : v.at("score").get<double>();
    x.threshold = v.at("threshold").get<double>();
    x.pass = v.at("pass").get<bool>();
    s.verdicts.push_back(x);
  }
  return s;
}

namespace {

std::string color(double t) {
  // Blue (t = 0) to white to red (t = 1).
  t = std::clamp(t, 0.0, 1.0);
  int r, g, b;
  if (t < 0.5) {
    double s = t / 0.5;
    r = static_cast<int>(40 + s * 215);
    g = static_cast<int>(70 + s * 185);
    b = 255;
  } else {
    double s = (t - 0.5) / 0.5;
    r = 255;
    g = static_cast<int>(255 - s * 205);
    b = static_cast<int>(255 - s * 215);
  }
  char buf[16];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

std::string escape(const std::string& s) {
  std::string o;
  for (char ch : s) {
    if (ch == '<') o += "&lt;";
    else if (ch == '>') o += "&gt;";
    else if (ch == '&') o += "&amp;";
    else o += ch;
  }
  return o;
}

std::string grid_svg(const std::string& title, const std::vector<HeatCell>& cells, const std::vector<CellLabel>* labels) {
  if (cells.empty()) return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"10\" height=\"10\"/>\n";
  int x0 = cells[0].x, x1 = x0, y0 = cells[0].y, y1 = y0;
  double lo = cells[0].value, hi = lo;
  for (const auto& c : cells) {
    x0 = std::min(x0, c.x);
    x1 = std::max(x1, c.x);
    y0 = std::min(y0, c.y);
    y1 = std::max(y1, c.y);
    lo = std::min(lo, c.value);
    hi = std::max(hi, c.value);
  }
  const int span = std::max(x1 - x0 + 1, y1 - y0 + 1);
  const double px = std::max(1.0, std::min(12.0, 640.0 / span));
  const double w = (x1 - x0 + 1) * px, h = (y1 - y0 + 1) * px;
  const double m = std::max(std::abs(lo), std::abs(hi));
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(w + 20) << "\" height=\"" << fmt(h + 40)
     << "\">\n<text x=\"10\" y=\"16\" font-size=\"12\">" << escape(title) << "</text>\n";
  for (const auto& c : cells) {
    double t = m > 0 ? 0.5 + 0.5 * c.value / m : 0.5;
    os << "<rect x=\"" << fmt(10 + (c.x - x0) * px) << "\" y=\"" << fmt(30 + (y1 - c.y) * px) << "\" width=\""
       << fmt(px) << "\" height=\"" << fmt(px) << "\" fill=\"" << color(t) << "\"/>\n";
  }
  if (labels)
    for (const auto& l : *labels)
      os << "<text x=\"" << fmt(10 + (l.x - x0 + 0.5) * px) << "\" y=\"" << fmt(30 + (y1 - l.y + 0.5) * px)
         << "\" font-size=\"9\" text-anchor=\"middle\">" << escape(l.text) << "</text>\n";
  os << "</svg>\n";
  return os.str();
}

}  // namespace

std::string svg_heatmap(const std::string& title, const std::vector<HeatCell>& cells) {
  return grid_svg(title, cells, nullptr);
}

std::string svg_cell_map(const std::string& title, const std::vector<HeatCell>& cells,
                         const std::vector<CellLabel>& labels) {
  return grid_svg(title, cells, &labels);
}

std::string svg_loglog(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                       const std::vector<Series>& series) {
  double lx0 = 1e300, lx1 = -1e300, ly0 = 1e300, ly1 = -1e300;
  for (const auto& s : series)
    for (auto [x, y] : s.points) {
      if (!(x > 0 && y > 0)) continue;
      lx0 = std::min(lx0, std::log10(x));
      lx1 = std::max(lx1, std::log10(x));
      ly0 = std::min(ly0, std::log10(y));
      ly1 = std::max(ly1, std::log10(y));
    }
  if (lx0 > lx1) lx0 = 0, lx1 = 1, ly0 = 0, ly1 = 1;
  lx0 = std::floor(lx0 - 0.05);
  lx1 = std::ceil(lx1 + 0.05);
  ly0 = std::floor(ly0 - 0.05);
  ly1 = std::ceil(ly1 + 0.05);
  const double W = 480, H = 360, L = 70, T = 30;
  auto X = [&](double x) { return L + (std::log10(x) - lx0) / (lx1 - lx0) * W; };
  auto Y = [&](double y) { return T + H - (std::log10(y) - ly0) / (ly1 - ly0) * H; };
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(W + L + 160) << "\" height=\"" << fmt(H + T + 60)
     << "\">\n<text x=\"" << fmt(L) << "\" y=\"18\" font-size=\"13\">" << escape(title) << "</text>\n";
  os << "<rect x=\"" << fmt(L) << "\" y=\"" << fmt(T) << "\" width=\"" << fmt(W) << "\" height=\"" << fmt(H)
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int d = static_cast<int>(lx0); d <= static_cast<int>(lx1); ++d)
    os << "<text x=\"" << fmt(X(std::pow(10.0, d))) << "\" y=\"" << fmt(T + H + 16)
       << "\" font-size=\"10\" text-anchor=\"middle\">1e" << d << "</text>\n";
  for (int d = static_cast<int>(ly0); d <= static_cast<int>(ly1); ++d)
    os << "<text x=\"" << fmt(L - 6) << "\" y=\"" << fmt(Y(std::pow(10.0, d)) + 4)
       << "\" font-size=\"10\" text-anchor=\"end\">1e" << d << "</text>\n";
  os << "<text x=\"" << fmt(L + W / 2) << "\" y=\"" << fmt(T + H + 36) << "\" font-size=\"12\" text-anchor=\"middle\">"
     << escape(xlabel) << "</text>\n";
  os << "<text x=\"14\" y=\"" << fmt(T + H / 2) << "\" font-size=\"12\" transform=\"rotate(-90 14 " << fmt(T + H / 2)
     << ")\" text-anchor=\"middle\">" << escape(ylabel) << "</text>\n";
  const char* palette[] = {"#c0392b", "#2471a3", "#1e8449", "#7d3c98", "#b9770e"};
  int k = 0;
  for (const auto& s : series) {
    const char* col = palette[k % 5];
    if (s.line && s.points.size() >= 2) {
      os << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-dasharray=\"6 3\" points=\"";
      for (auto [x, y] : s.points) os << fmt(X(x)) << ',' << fmt(Y(y)) << ' ';
      os << "\"/>\n";
    } else {
      for (auto [x, y] : s.points)
        if (x > 0 && y > 0) os << "<circle cx=\"" << fmt(X(x)) << "\" cy=\"" << fmt(Y(y)) << "\" r=\"4\" fill=\"" << col << "\"/>\n";
    }
    os << "<text x=\"" << fmt(L + W + 10) << "\" y=\"" << fmt(T + 14 + 16 * k) << "\" font-size=\"11\" fill=\"" << col
       << "\">" << escape(s.name) << "</text>\n";
    ++k;
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace gfflab
