#include "ttc/report.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>

#include "ttc/error.hpp"

namespace ttc {

namespace {

int strategy_rank(const std::string& name) {
  static const std::array<const char*, 6> order{"no-ttc", "cot", "majority", "bs-w", "llm-top1", "llm-w"};
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (name == order[i]) return static_cast<int>(i);
  }
  return static_cast<int>(order.size());
}

std::string fixed(double v, int digits) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(digits) << v;
  return out.str();
}

std::string sweep_label(const std::optional<SweepPoint>& s) { return s ? s->label() : std::string(); }

std::optional<SweepPoint> parse_sweep_label(const std::string& text) {
  if (text.empty()) return std::nullopt;
  const auto eq = text.find('=');
  if (eq == std::string::npos) throw ConfigError("comparison csv: bad sweep label '" + text + "'");
  return SweepPoint{parse_sweep_axis(text.substr(0, eq)), std::stod(text.substr(eq + 1))};
}

std::string csv_field(const std::string& v) {
  if (v.find_first_of(",\"\n") == std::string::npos) return v;
  std::string out = "\"";
  for (char c : v) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

bool row_less(const AccuracyRow& a, const AccuracyRow& b, const std::map<std::string, std::size_t>& backend_order) {
  const auto ba = backend_order.at(a.backend), bb = backend_order.at(b.backend);
  if (ba != bb) return ba < bb;
  const int ra = strategy_rank(a.strategy), rb = strategy_rank(b.strategy);
  if (ra != rb) return ra < rb;
  if (a.strategy != b.strategy) return a.strategy < b.strategy;
  if (a.sweep.has_value() != b.sweep.has_value()) return !a.sweep.has_value();
  if (a.sweep && b.sweep) {
    if (a.sweep->axis != b.sweep->axis) return a.sweep->axis < b.sweep->axis;
    return a.sweep->value < b.sweep->value;
  }
  return false;
}

}  // namespace

const AccuracyRow* AccuracyTable::find(const std::string& backend, const std::string& strategy,
                                       const std::optional<SweepPoint>& sweep) const {
  for (const auto& r : rows) {
    if (r.backend == backend && r.strategy == strategy && r.sweep == sweep) return &r;
  }
  return nullptr;
}

AccuracyTable accuracy_by_task(std::span<const TrialRecord> records) {
  if (records.empty()) throw ConfigError("accuracy_by_task: no records");
  AccuracyTable table;
  std::map<std::string, std::size_t> index;
  std::map<std::string, std::size_t> backend_order;
  for (const auto& r : records) {
    backend_order.emplace(r.backend, backend_order.size());
    const std::string key = r.backend + "|" + r.strategy + "|" + sweep_label(r.sweep);
    auto [it, inserted] = index.emplace(key, table.rows.size());
    if (inserted) table.rows.push_back({r.backend, r.strategy, r.sweep, {}});
    auto& row = table.rows[it->second];
    const std::size_t col = static_cast<std::size_t>(task_number(r.task));
    for (std::size_t c : {std::size_t{0}, col}) {
      ++row.cells[c].count;
      if (r.correct) ++row.cells[c].correct;
    }
  }
  std::stable_sort(table.rows.begin(), table.rows.end(),
                   [&](const AccuracyRow& a, const AccuracyRow& b) { return row_less(a, b, backend_order); });
  return table;
}

std::optional<double> relative_improvement(double baseline, double treatment) {
  if (!(baseline > 0.0)) return std::nullopt;
  const double pct = 100.0 * (treatment - baseline) / baseline;
  const double scaled = std::floor(std::fabs(pct) * 10.0 + 0.5 + 1e-9) / 10.0;
  return std::copysign(scaled, pct) + 0.0;
}

std::string format_improvement(const std::optional<double>& improvement) {
  if (!improvement) return "(n/a)";
  if (*improvement == 0.0) return "(+0.00)";
  return std::string("(") + (*improvement > 0 ? "+" : "-") + fixed(std::fabs(*improvement), 1) + ")";
}

Comparison render_comparison(const AccuracyTable& table, const std::string& baseline_strategy) {
  std::vector<std::string> backends;
  for (const auto& r : table.rows) {
    if (std::find(backends.begin(), backends.end(), r.backend) == backends.end()) backends.push_back(r.backend);
  }

  Comparison out;
  std::ostringstream text;
  std::ostringstream csv;
  csv << "backend,strategy,sweep,column,correct,count,accuracy,improvement,is_max\n";
  for (const auto& backend : backends) {
    const AccuracyRow* base = table.find(backend, baseline_strategy);
    if (base == nullptr) {
      throw ConfigError("render_comparison: backend '" + backend + "' has no '" + baseline_strategy + "' row");
    }
    std::vector<const AccuracyRow*> rows;
    for (const auto& r : table.rows) {
      if (r.backend == backend && !r.sweep) rows.push_back(&r);
    }
    std::array<double, 4> best{};
    for (std::size_t c = 0; c < 4; ++c) {
      for (const auto* r : rows) {
        if (r->cells[c].count > 0) best[c] = std::max(best[c], r->cells[c].accuracy());
      }
    }

    std::size_t name_width = 8;
    for (const auto* r : rows) name_width = std::max(name_width, r->strategy.size());
    text << backend << " (overall = micro average over trials)\n";
    text << std::left << std::setw(static_cast<int>(name_width)) << "strategy";
    for (const char* h : {"Overall", "Task 1", "Task 2", "Task 3"}) text << "  " << std::setw(17) << h;
    text << "\n";
    for (const auto* r : rows) {
      text << std::left << std::setw(static_cast<int>(name_width)) << r->strategy;
      for (std::size_t c = 0; c < 4; ++c) {
        const auto& cell = r->cells[c];
        std::string shown = cell.count == 0 ? "-" : fixed(cell.accuracy(), 3);
        std::optional<double> imp;
        const bool is_base = r == base;
        if (!is_base && cell.count > 0) {
          imp = relative_improvement(base->cells[c].accuracy(), cell.accuracy());
          shown += " " + format_improvement(imp);
        }
        const bool is_max = cell.count > 0 && std::fabs(cell.accuracy() - best[c]) < 1e-12;
        if (is_max) shown += "*";
        text << "  " << std::setw(17) << shown;
        csv << csv_field(r->backend) << ',' << csv_field(r->strategy) << ',' << ',' << kAccuracyColumns[c] << ','
            << cell.correct << ',' << cell.count << ',' << fixed(cell.accuracy(), 6) << ','
            << (is_base ? "" : (imp ? fixed(*imp, 1) : "n/a")) << ',' << (is_max ? 1 : 0) << '\n';
      }
      text << "\n";
    }
    text << "\n";
  }
  // Sweep rows follow the comparison rows.
  for (const auto& r : table.rows) {
    if (!r.sweep) continue;
    for (std::size_t c = 0; c < 4; ++c) {
      csv << csv_field(r.backend) << ',' << csv_field(r.strategy) << ',' << r.sweep->label() << ','
          << kAccuracyColumns[c] << ',' << r.cells[c].correct << ',' << r.cells[c].count << ','
          << fixed(r.cells[c].accuracy(), 6) << ",,0\n";
    }
  }
  out.text = text.str();
  out.csv = csv.str();
  return out;
}

AccuracyTable parse_comparison_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line) || line.rfind("backend,strategy,sweep,column", 0) != 0) {
    throw ConfigError("comparison csv: missing header");
  }
  AccuracyTable table;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 9) throw ConfigError("comparison csv: line " + std::to_string(lineno) + " has " + std::to_string(f.size()) + " fields");
    const auto sweep = parse_sweep_label(f[2]);
    const auto col = std::find(kAccuracyColumns.begin(), kAccuracyColumns.end(), f[3]);
    if (col == kAccuracyColumns.end()) throw ConfigError("comparison csv: unknown column '" + f[3] + "'");
    AccuracyRow* row = const_cast<AccuracyRow*>(table.find(f[0], f[1], sweep));
    if (row == nullptr) {
      table.rows.push_back({f[0], f[1], sweep, {}});
      row = &table.rows.back();
    }
    auto& cell = row->cells[static_cast<std::size_t>(col - kAccuracyColumns.begin())];
    cell.correct = std::stoul(f[4]);
    cell.count = std::stoul(f[5]);
  }
  std::map<std::string, std::size_t> backend_order;
  for (const auto& r : table.rows) backend_order.emplace(r.backend, backend_order.size());
  std::stable_sort(table.rows.begin(), table.rows.end(),
                   [&](const AccuracyRow& a, const AccuracyRow& b) { return row_less(a, b, backend_order); });
  return table;
}

std::string emit_sweep_csv(std::span<const TrialRecord> records, SweepAxis axis) {
  std::vector<TrialRecord> tagged;
  for (const auto& r : records) {
    if (r.sweep && r.sweep->axis == axis) tagged.push_back(r);
  }
  if (tagged.empty()) throw ConfigError("emit_sweep_csv: no records carry the '" + std::string(to_string(axis)) + "' axis");
  auto table = accuracy_by_task(tagged);
  std::ostringstream csv;
  csv << "backend,strategy," << to_string(axis) << ",task,correct,count,accuracy\n";
  for (const auto& row : table.rows) {
    for (std::size_t c : {1u, 2u, 3u, 0u}) {
      const auto& cell = row.cells[c];
      std::ostringstream point;
      point << row.sweep->value;
      csv << csv_field(row.backend) << ',' << csv_field(row.strategy) << ',' << point.str() << ',' << kAccuracyColumns[c]
          << ',' << cell.correct << ',' << cell.count << ',' << fixed(cell.accuracy(), 6) << '\n';
    }
  }
  return csv.str();
}

}  // namespace ttc
