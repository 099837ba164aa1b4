#include "byzlab/io/csv.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

namespace byzlab {

namespace {

void append_number(std::string& out, double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(line.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return fields;
}

}  // namespace

std::string format_csv(const CsvTable& table) {
  if (table.header.empty()) throw InvalidInput("csv: empty header");
  std::string out;
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    if (table.header[i].find_first_of(",\n\r") != std::string::npos) throw InvalidInput("csv: bad column name");
    out += (i ? "," : "") + table.header[i];
  }
  out += '\n';
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size()) throw InvalidInput("csv: row width does not match the header");
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      append_number(out, row[i]);
    }
    out += '\n';
  }
  return out;
}

CsvTable parse_csv_strict(const std::string& text) {
  if (text.empty() || text.back() != '\n') throw InvalidInput("csv: missing final newline");
  if (text.find('\r') != std::string::npos) throw InvalidInput("csv: carriage return found");
  CsvTable table;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::string line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    const std::vector<std::string> fields = split_line(line);
    if (line_no == 1) {
      for (const auto& f : fields)
        if (f.empty()) throw InvalidInput("csv: empty column name");
      table.header = fields;
      continue;
    }
    if (fields.size() != table.header.size())
      throw InvalidInput("csv: line " + std::to_string(line_no) + " has " + std::to_string(fields.size()) +
                         " fields, expected " + std::to_string(table.header.size()));
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& f : fields) {
      double v = 0.0;
      const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
      if (f.empty() || res.ec != std::errc() || res.ptr != f.data() + f.size())
        throw InvalidInput("csv: line " + std::to_string(line_no) + ": not a number: '" + f + "'");
      row.push_back(v);
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  const std::filesystem::path parent = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  std::error_code ec;
  std::filesystem::create_directories(parent, ec);
  if (ec) throw InvalidConfig("output: cannot create directory '" + parent.string() + "': " + ec.message());
  const std::filesystem::path tmp = parent / ("." + path.filename().string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidConfig("output: cannot write '" + tmp.string() + "'");
    out << contents;
    out.flush();
    if (!out) throw InvalidConfig("output: write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw InvalidConfig("output: cannot rename into '" + path.string() + "': " + ec.message());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot read '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CsvTable trace_table(const RunTrace& trace) {
  CsvTable t;
  t.header = {"iter", "mean_loss", "mean_dist_sq"};
  const bool per_agent = !trace.agent_dist_sq.empty();
  if (per_agent)
    for (int k : trace.honest) t.header.push_back("dist_sq_" + std::to_string(k));
  for (std::size_t i = 0; i < trace.mean_dist_sq.size(); ++i) {
    std::vector<double> row = {static_cast<double>(i + 1), trace.mean_loss[i], trace.mean_dist_sq[i]};
    if (per_agent) row.insert(row.end(), trace.agent_dist_sq[i].begin(), trace.agent_dist_sq[i].end());
    t.rows.push_back(std::move(row));
  }
  return t;
}

CsvTable curve_table(const SCCurve1D& curve, std::optional<double> clip) {
  CsvTable t;
  t.header = {"z", "sc"};
  for (std::size_t i = 0; i < curve.z.size(); ++i) {
    double v = curve.value[i];
    if (clip) v = std::clamp(v, -*clip, *clip);
    t.rows.push_back({curve.z[i], v});
  }
  return t;
}

CsvTable grid_table(const SCGrid2D& grid, std::optional<double> clip) {
  CsvTable t;
  t.header = {"z1", "z2", "sc_norm"};
  for (Eigen::Index i = 0; i < grid.x.size(); ++i)
    for (Eigen::Index j = 0; j < grid.y.size(); ++j) {
      double v = grid.values(i, j);
      if (clip) v = std::min(v, *clip);
      t.rows.push_back({grid.x(i), grid.y(j), v});
    }
  return t;
}

SamplesXd samples_from_table(const CsvTable& table) {
  if (table.rows.empty()) throw InvalidInput("samples: no rows");
  SamplesXd out(static_cast<Eigen::Index>(table.header.size()), static_cast<Eigen::Index>(table.rows.size()));
  for (std::size_t j = 0; j < table.rows.size(); ++j)
    for (std::size_t m = 0; m < table.header.size(); ++m)
      out(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(j)) = table.rows[j][m];
  require_finite(out, "samples");
  return out;
}

CsvTable samples_table(const SamplesXd& samples) {
  CsvTable t;
  for (Eigen::Index m = 0; m < samples.rows(); ++m) t.header.push_back("x" + std::to_string(m + 1));
  for (Eigen::Index j = 0; j < samples.cols(); ++j) {
    std::vector<double> row(static_cast<std::size_t>(samples.rows()));
    for (Eigen::Index m = 0; m < samples.rows(); ++m) row[static_cast<std::size_t>(m)] = samples(m, j);
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace byzlab
