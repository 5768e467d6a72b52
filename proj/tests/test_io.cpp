#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "oracles.hpp"
#include "psd/io.hpp"

using namespace psd;
using namespace psd::io;
using oracle::Mat;
using oracle::Vec;

namespace {

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "psdmor_io_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

wave::WaveParams parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

std::string first_line(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  return line;
}

const CsvStamp kStamp{"0123456789abcdef"};

}  // namespace

TEST_CASE("number formatting round trips") {
  std::mt19937_64 rng(60);
  std::uniform_real_distribution<double> expo(-300, 300);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 1000; ++trial) {
    const double x = g(rng) * std::pow(10.0, expo(rng));
    CHECK(parse_double(format_double(x)) == x);
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(-2) == "-2");
  CHECK(format_double(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(std::isnan(parse_double(format_double(std::nan("")))));
  CHECK(parse_double(" +1e-3 ") == 0.001);
  CHECK_THROWS_AS(parse_double("1.0x"), ParseError);
  CHECK_THROWS_AS(parse_double(""), ParseError);
}

TEST_CASE("hashing") {
  CHECK(hex64(fnv1a("")) == "cbf29ce484222325");
  CHECK(hex64(fnv1a("a")) == "af63dc4c8601ec8c");
  CHECK(hex64(fnv1a("foobar")) == "85944171f73967e8");
  CHECK(hex64(0) == "0000000000000000");
}

TEST_CASE("stamp line") {
  CHECK(kStamp.line().rfind("# config_hash=0123456789abcdef version=", 0) == 0);
  CHECK(kStamp.line().find("generated") == std::string::npos);
  CsvStamp timed = kStamp;
  timed.timestamp = iso_timestamp();
  CHECK(timed.line().find(" generated=") != std::string::npos);
  CHECK(timed.timestamp->size() == 20);
  CHECK(timed.timestamp->back() == 'Z');
  CHECK(!version_string().empty());
}

TEST_CASE("config parsing") {
  SUBCASE("full file") {
    const auto p = parse(
        "# comment\n"
        "l = 2\n n=64 \ndt = 0.005\nT = 10 # trailing\nbeta = 0.5\n"
        "omega0 = 0.1\nc = 0.2\nsnapshot_interval = 0.25\n\n");
    CHECK(p.l == 2);
    CHECK(p.n == 64);
    CHECK(p.dt == 0.005);
    CHECK(p.T == 10);
    CHECK(p.beta == 0.5);
    CHECK(p.omega0 == 0.1);
    CHECK(p.c == 0.2);
    CHECK(p.snapshot_interval == 0.25);
  }
  SUBCASE("missing keys keep defaults") {
    const auto p = parse("n = 100\n");
    CHECK(p.n == 100);
    CHECK(p.beta == wave::WaveParams{}.beta);
    CHECK(p.T == wave::WaveParams{}.T);
  }
  SUBCASE("canonical text round trips") {
    wave::WaveParams p;
    p.n = 123;
    p.beta = 0.1 + 0.2;
    p.dt = 1.0 / 3.0;
    const auto q = parse(config_text(p));
    CHECK(q.n == p.n);
    CHECK(q.beta == p.beta);
    CHECK(q.dt == p.dt);
    CHECK(config_text(q) == config_text(p));
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(parse("speed = 1\n"), ParseError);
    CHECK_THROWS_AS(parse("beta = 1\nbeta = 2\n"), ParseError);
    CHECK_THROWS_AS(parse("beta 1\n"), ParseError);
    CHECK_THROWS_AS(parse("beta = fast\n"), ParseError);
    CHECK_THROWS_AS(parse("n = 10.5\n"), ParseError);
    CHECK_THROWS_AS(parse("n = -4\n"), ParseError);
    CHECK_THROWS_AS(parse("c = 0\n"), ParseError);
    CHECK_THROWS_AS(parse("beta = -0.1\n"), ParseError);
    try {
      parse("l = 1\n\nspeed = 1\n");
      FAIL("no exception");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
      CHECK(std::string(e.what()).find("speed") != std::string::npos);
    }
    CHECK_THROWS_AS(read_config(scratch("does_not_exist.cfg")), ParseError);
  }
}

TEST_CASE("csv writer and reader") {
  const auto path = scratch("table.csv");
  {
    CsvWriter w(path, {"a", "b"}, kStamp);
    w.row({1.5, -2.0});
    w.row(std::vector<std::string>{"x", "nan"});
    CHECK_THROWS_AS(w.row({1.0}), DimensionError);
    w.close();
  }
  CHECK(first_line(path) == kStamp.line());
  const auto t = read_csv(path);
  CHECK(t.header == std::vector<std::string>{"a", "b"});
  CHECK(t.rows.size() == 2);
  CHECK(t.comments.size() == 1);
  CHECK(t.number(0, "b") == -2);
  CHECK(t.rows[1][0] == "x");
  CHECK(std::isnan(t.number(1, 1)));
  CHECK_THROWS_AS(t.number(1, 0), ParseError);
  CHECK_THROWS_AS(t.column("c"), ParseError);
}

TEST_CASE("snapshot files round trip") {
  std::mt19937_64 rng(61);
  const Mat x = oracle::gaussian(8, 5, rng);
  const std::vector<double> times = {0, 0.5, 1, 1.5, 2};
  SUBCASE("with forces") {
    const Mat f = oracle::gaussian(4, 5, rng);
    const SnapshotEnsemble<double> ens(x, times, f);
    const auto path = scratch("snap_f.csv");
    write_snapshots(path, ens, kStamp);
    const auto t = read_csv(path);
    CHECK(t.header.front() == "t");
    CHECK(t.header[1] == "q_1");
    CHECK(t.header[5] == "p_1");
    CHECK(t.header[9] == "f_1");
    CHECK(t.header.size() == 13);
    const auto back = read_snapshots(path);
    CHECK(back.states() == x);
    CHECK(back.forces() == f);
    CHECK(back.times() == times);
  }
  SUBCASE("without forces") {
    const Mat y = oracle::gaussian(6, 5, rng);
    const SnapshotEnsemble<double> ens(y, times);
    const auto path = scratch("snap.csv");
    write_snapshots(path, ens, kStamp);
    const auto back = read_snapshots(path);
    CHECK_FALSE(back.has_forces());
    CHECK(back.states() == y);
    CHECK(read_csv(path).header.size() == 7);
  }
  SUBCASE("bad header") {
    const auto path = scratch("snap_bad.csv");
    CsvWriter w(path, {"t", "q_1", "x_1"}, kStamp);
    w.row({0.0, 1.0, 2.0});
    w.close();
    CHECK_THROWS_AS(read_snapshots(path), ParseError);
  }
}

TEST_CASE("trajectory and energy strides") {
  Trajectory<double> traj;
  EnergySeries<double> energy;
  for (int i = 0; i < 11; ++i) {
    traj.times.push_back(0.1 * i);
    traj.states.push_back(Vec::Constant(4, i));
    energy.times.push_back(0.1 * i);
    energy.values.push_back(10 - i);
  }
  const auto path = scratch("traj.csv");
  write_trajectory(path, traj, 3, kStamp);
  const auto t = read_csv(path);
  CHECK(t.header == std::vector<std::string>{"t", "y_1", "y_2", "y_3", "y_4"});
  REQUIRE(t.rows.size() == 5);  // 0, 3, 6, 9 and the final state 10
  CHECK(t.number(4, "y_1") == 10);
  CHECK(t.number(3, "y_4") == 9);
  write_trajectory(path, traj, 5, kStamp);
  CHECK(read_csv(path).rows.size() == 3);  // 0, 5, 10
  write_trajectory(path, traj, 1, kStamp);
  CHECK(read_csv(path).rows.size() == 11);
  CHECK_THROWS_AS(write_trajectory(path, traj, 0, kStamp), std::invalid_argument);

  const auto epath = scratch("energy.csv");
  write_energy(epath, energy, 4, kStamp);
  const auto e = read_csv(epath);
  CHECK(e.header == std::vector<std::string>{"t", "E"});
  CHECK(e.rows.size() == 4);  // 0, 4, 8, 10
  CHECK(e.number(3, "E") == 0);
  CHECK(first_line(epath) == kStamp.line());
}

TEST_CASE("matrix files round trip") {
  std::mt19937_64 rng(62);
  const Mat m = oracle::gaussian(7, 3, rng);
  const auto path = scratch("matrix.csv");
  write_matrix(path, m, kStamp);
  CHECK(read_matrix(path) == m);
  CHECK(read_csv(path).header.back() == "c_3");
}
