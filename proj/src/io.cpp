#include "psd/io.hpp"

#include <charconv>
#include <chrono>
#include <ctime>
#include <fstream>
#include <map>
#include <sstream>

#ifndef PSDMOR_VERSION
#define PSDMOR_VERSION "0.0.0+unknown"
#endif

namespace psd::io {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

std::vector<std::string> indexed(const std::string& prefix, Index count) {
  std::vector<std::string> out;
  out.reserve(count);
  for (Index i = 1; i <= count; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

template <typename Fn>
void for_each_strided(std::size_t size, std::size_t stride, Fn&& fn) {
  if (stride == 0) throw std::invalid_argument("stride must be >= 1");
  for (std::size_t i = 0; i < size; i += stride) fn(i);
  if (size > 0 && (size - 1) % stride != 0) fn(size - 1);
}

}  // namespace

std::string version_string() { return PSDMOR_VERSION; }

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view s) {
  s = trim(s);
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double x = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || s.empty())
    throw ParseError("not a number: '" + std::string(s) + "'");
  return x;
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex64(std::uint64_t h) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[i] = digits[h & 0xf];
  return out;
}

std::string CsvStamp::line() const {
  std::string s = "# config_hash=" + config_hash + " version=" + version;
  if (timestamp) s += " generated=" + *timestamp;
  return s;
}

std::string iso_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

wave::WaveParams parse_config(std::istream& in) {
  wave::WaveParams p;
  std::map<std::string, double*> reals = {{"l", &p.l},         {"dt", &p.dt},
                                          {"T", &p.T},         {"beta", &p.beta},
                                          {"omega0", &p.omega0}, {"c", &p.c},
                                          {"snapshot_interval", &p.snapshot_interval}};
  std::map<std::string, long> seen;
  std::string raw;
  long lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected 'key = value'", lineno);
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    if (seen.count(key)) throw ParseError("duplicate key '" + key + "'", lineno);
    seen[key] = lineno;
    double x;
    try {
      x = parse_double(value);
    } catch (const ParseError& e) {
      throw ParseError(std::string("key '") + key + "': " + e.what(), lineno);
    }
    if (key == "n") {
      if (x != std::floor(x) || x < 1 || x > 1e7) throw ParseError("n must be a positive integer", lineno);
      p.n = static_cast<Index>(x);
    } else if (auto it = reals.find(key); it != reals.end()) {
      *it->second = x;
    } else {
      throw ParseError("unknown key '" + key + "'", lineno);
    }
  }
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what());
  }
  return p;
}

wave::WaveParams read_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config " + path.string());
  return parse_config(in);
}

std::string config_text(const wave::WaveParams& p) {
  std::ostringstream s;
  s << "l = " << format_double(p.l) << "\n"
    << "n = " << p.n << "\n"
    << "dt = " << format_double(p.dt) << "\n"
    << "T = " << format_double(p.T) << "\n"
    << "beta = " << format_double(p.beta) << "\n"
    << "omega0 = " << format_double(p.omega0) << "\n"
    << "c = " << format_double(p.c) << "\n"
    << "snapshot_interval = " << format_double(p.snapshot_interval) << "\n";
  return s.str();
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header,
                     const CsvStamp& stamp)
    : out_(std::make_unique<std::ofstream>(open_for_write(path))), path_(path), columns_(header.size()) {
  *out_ << stamp.line() << "\n";
  row(header);
}

CsvWriter::~CsvWriter() {
  if (out_) out_->close();
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (!out_) throw std::logic_error("CsvWriter: already closed");
  if (cells.size() != columns_)
    throw DimensionError("CsvWriter: row has " + std::to_string(cells.size()) + " cells, header has " +
                         std::to_string(columns_));
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) *out_ << ',';
    *out_ << cells[i];
  }
  *out_ << '\n';
}

void CsvWriter::row(std::initializer_list<double> values) {
  std::vector<std::string> cells;
  cells.reserve(values.size());
  for (double v : values) cells.push_back(format_double(v));
  row(cells);
}

void CsvWriter::close() {
  if (!out_) return;
  out_->close();
  if (!*out_) throw std::runtime_error("write failed: " + path_.string());
  out_.reset();
}

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw ParseError("no column '" + std::string(name) + "'");
}

double CsvTable::number(std::size_t row, std::size_t col) const {
  if (row >= rows.size() || col >= header.size()) throw ParseError("cell out of range");
  try {
    return parse_double(rows[row][col]);
  } catch (const ParseError& e) {
    throw ParseError(std::string(e.what()) + " in row " + std::to_string(row) + ", column " + header[col]);
  }
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  CsvTable table;
  std::string raw;
  long lineno = 0;
  bool have_header = false;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string_view line = trim(raw);
    if (line.empty()) continue;
    if (line.front() == '#') {
      table.comments.emplace_back(line);
      continue;
    }
    const auto cells = split(line, ',');
    if (!have_header) {
      for (auto c : cells) table.header.emplace_back(c);
      have_header = true;
      continue;
    }
    if (cells.size() != table.header.size())
      throw ParseError("row width differs from header", lineno);
    table.rows.emplace_back(cells.begin(), cells.end());
  }
  if (!have_header) throw ParseError("missing header row in " + path.string());
  return table;
}

void write_snapshots(const std::filesystem::path& path, const SnapshotEnsemble<double>& ens,
                     const CsvStamp& stamp) {
  const Index n = ens.half_dim();
  std::vector<std::string> header{"t"};
  for (const auto* prefix : {"q_", "p_"})
    for (auto& h : indexed(prefix, n)) header.push_back(std::move(h));
  if (ens.has_forces())
    for (auto& h : indexed("f_", n)) header.push_back(std::move(h));
  CsvWriter w(path, header, stamp);
  for (Index j = 0; j < ens.size(); ++j) {
    if (ens.has_forces()) {
      Vector<double> v(3 * n);
      v << ens.states().col(j), ens.forces().col(j);
      w.row(ens.times()[j], v);
    } else {
      w.row(ens.times()[j], ens.states().col(j));
    }
  }
  w.close();
}

SnapshotEnsemble<double> read_snapshots(const std::filesystem::path& path) {
  const auto table = read_csv(path);
  const auto& h = table.header;
  if (h.empty() || h.front() != "t") throw ParseError("snapshot header must start with 't'");
  const std::size_t width = h.size() - 1;
  const bool forces = width % 3 == 0 && width >= 3 && h[1 + 2 * width / 3] == "f_1";
  const Index n = static_cast<Index>(forces ? width / 3 : width / 2);
  if (n < 1 || (!forces && width % 2 != 0)) throw ParseError("snapshot header has odd state width");
  for (Index i = 0; i < n; ++i) {
    if (h[1 + i] != "q_" + std::to_string(i + 1) || h[1 + n + i] != "p_" + std::to_string(i + 1) ||
        (forces && h[1 + 2 * n + i] != "f_" + std::to_string(i + 1)))
      throw ParseError("snapshot header must be t,q_1..q_n,p_1..p_n[,f_1..f_n]");
  }
  const Index count = static_cast<Index>(table.rows.size());
  Matrix<double> states(2 * n, count);
  Matrix<double> f(n, count);
  std::vector<double> times(count);
  for (Index j = 0; j < count; ++j) {
    const auto row = static_cast<std::size_t>(j);
    times[j] = table.number(row, 0);
    for (Index i = 0; i < 2 * n; ++i) states(i, j) = table.number(row, 1 + i);
    if (forces)
      for (Index i = 0; i < n; ++i) f(i, j) = table.number(row, 1 + 2 * n + i);
  }
  if (forces) return SnapshotEnsemble<double>(std::move(states), std::move(times), std::move(f));
  return SnapshotEnsemble<double>(std::move(states), std::move(times));
}

void write_trajectory(const std::filesystem::path& path, const Trajectory<double>& traj,
                      std::size_t stride, const CsvStamp& stamp) {
  const Index d = traj.states.empty() ? 0 : traj.states.front().size();
  std::vector<std::string> header{"t"};
  for (auto& s : indexed("y_", d)) header.push_back(std::move(s));
  CsvWriter w(path, header, stamp);
  for_each_strided(traj.states.size(), stride,
                   [&](std::size_t i) { w.row(traj.times[i], traj.states[i]); });
  w.close();
}

void write_energy(const std::filesystem::path& path, const EnergySeries<double>& energy,
                  std::size_t stride, const CsvStamp& stamp) {
  CsvWriter w(path, {"t", "E"}, stamp);
  for_each_strided(energy.values.size(), stride,
                   [&](std::size_t i) { w.row({energy.times[i], energy.values[i]}); });
  w.close();
}

void write_matrix(const std::filesystem::path& path, const Matrix<double>& m,
                  const CsvStamp& stamp) {
  CsvWriter w(path, indexed("c_", m.cols()), stamp);
  for (Index i = 0; i < m.rows(); ++i) {
    std::vector<std::string> cells;
    cells.reserve(m.cols());
    for (Index j = 0; j < m.cols(); ++j) cells.push_back(format_double(m(i, j)));
    w.row(cells);
  }
  w.close();
}

Matrix<double> read_matrix(const std::filesystem::path& path) {
  const auto table = read_csv(path);
  const Index rows = static_cast<Index>(table.rows.size());
  const Index cols = static_cast<Index>(table.header.size());
  Matrix<double> m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = table.number(i, j);
  return m;
}

}  // namespace psd::io
