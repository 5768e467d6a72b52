#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "psd/decomposition.hpp"
#include "psd/integrator.hpp"
#include "psd/types.hpp"
#include "psd/wave.hpp"

namespace psd::io {

/// Raised for malformed config or CSV input; carries the line number when known.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, long line = -1)
      : std::runtime_error(line >= 0 ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}
  long line() const noexcept { return line_; }

 private:
  long line_;
};

/// Library version, e.g. "0.1.0+g1a2b3c4".
std::string version_string();

/// Shortest round-trip decimal form.
std::string format_double(double x);
double parse_double(std::string_view s);

std::uint64_t fnv1a(std::string_view bytes);
std::string hex64(std::uint64_t h);

/// Comment line written above every CSV header.
struct CsvStamp {
  std::string config_hash;
  std::string version = version_string();
  std::optional<std::string> timestamp;  // ISO 8601, timing files only

  std::string line() const;
};

/// Current UTC time as YYYY-MM-DDTHH:MM:SSZ.
std::string iso_timestamp();

/// `key = value` lines; '#' starts a comment. Keys: l, n, dt, T, beta,
/// omega0, c, snapshot_interval. Missing keys keep their defaults; unknown or
/// repeated keys are errors.
wave::WaveParams parse_config(std::istream& in);
wave::WaveParams read_config(const std::filesystem::path& path);
/// Canonical text form; parse_config(config_text(p)) == p.
std::string config_text(const wave::WaveParams& p);

/// Minimal CSV writer: stamp comment, header, numeric rows.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header,
            const CsvStamp& stamp);
  ~CsvWriter();
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  void row(const std::vector<std::string>& cells);
  void row(std::initializer_list<double> values);
  template <typename Derived>
  void row(double t, const Eigen::MatrixBase<Derived>& v) {
    std::vector<std::string> cells;
    cells.reserve(v.size() + 1);
    cells.push_back(format_double(t));
    for (Index i = 0; i < v.size(); ++i) cells.push_back(format_double(v(i)));
    row(cells);
  }
  void close();

 private:
  std::unique_ptr<std::ofstream> out_;
  std::filesystem::path path_;
  std::size_t columns_;
};

/// Parsed CSV: header names and raw cells; comment lines kept separately.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> comments;

  /// Column index by header name; throws ParseError if absent.
  std::size_t column(std::string_view name) const;
  double number(std::size_t row, std::size_t col) const;
  double number(std::size_t row, std::string_view name) const { return number(row, column(name)); }
};
CsvTable read_csv(const std::filesystem::path& path);

/// Header t,q_1..q_n,p_1..p_n[,f_1..f_n]; one snapshot per row.
void write_snapshots(const std::filesystem::path& path, const SnapshotEnsemble<double>& ens,
                     const CsvStamp& stamp);
SnapshotEnsemble<double> read_snapshots(const std::filesystem::path& path);

/// Header t,y_1..y_d; every `stride`-th state, always including the last.
void write_trajectory(const std::filesystem::path& path, const Trajectory<double>& traj,
                      std::size_t stride, const CsvStamp& stamp);

/// Header t,E.
void write_energy(const std::filesystem::path& path, const EnergySeries<double>& energy,
                  std::size_t stride, const CsvStamp& stamp);

/// Header c_1..c_m, one matrix row per line.
void write_matrix(const std::filesystem::path& path, const Matrix<double>& m,
                  const CsvStamp& stamp);
Matrix<double> read_matrix(const std::filesystem::path& path);

}  // namespace psd::io
