#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "qtomo/io/checkpoint.hpp"
#include "qtomo/io/config.hpp"
#include "qtomo/io/crc32.hpp"
#include "qtomo/io/csv.hpp"
#include "qtomo/io/dataset.hpp"
#include "qtomo/io/svg.hpp"

using namespace qtomo;

namespace {

namespace fs = std::filesystem;

// Fresh per-test scratch directory under the system temp root.
struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("qtomo_io_test_" + std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { std::error_code ec; fs::remove_all(path, ec); }
  std::string file(const std::string& name) const { return (path / name).string(); }
  static int& counter() { static int c = 0; return c; }
};

std::vector<char> slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::vector<char>(std::istreambuf_iterator<char>(in),
                           std::istreambuf_iterator<char>());
}

void spit(const std::string& path, const std::vector<char>& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::string slurp_text(const std::string& path) {
  auto bytes = slurp(path);
  return std::string(bytes.begin(), bytes.end());
}

}  // namespace

TEST_CASE("crc32 matches the reference vector and streams in chunks") {
  const char* data = "123456789";
  CHECK(io::crc32(data, 9) == 0xCBF43926u);
  std::uint32_t c = 0;
  c = io::crc32_update(c, data, 4);
  c = io::crc32_update(c, data + 4, 5);
  CHECK(c == 0xCBF43926u);
  CHECK(io::crc32("", 0) == 0u);
}

TEST_CASE("dataset round trip preserves every byte of every state") {
  TempDir tmp;
  auto states = generate_dataset(2, 9, 101);
  std::string path = tmp.file("states.qtds");
  io::write_dataset(path, 2, states);

  io::DatasetHeader hdr = io::read_dataset_header(path);
  CHECK(hdr.version == io::kDatasetVersion);
  CHECK(hdr.n_qubits == 2);
  CHECK(hdr.count == 9);

  io::Dataset ds = io::read_dataset(path);
  CHECK(ds.n_qubits == 2);
  REQUIRE(ds.states.size() == 9);
  for (std::size_t i = 0; i < 9; ++i)
    CHECK((ds.states[i].mat() - states[i].mat()).norm() == 0.0);

  // Writing twice produces identical bytes.
  std::string path2 = tmp.file("again.qtds");
  io::write_dataset(path2, 2, states);
  CHECK(slurp(path) == slurp(path2));

  // Wrong qubit count for the payload.
  CHECK_THROWS_AS(io::write_dataset(tmp.file("bad.qtds"), 1, states), ShapeMismatch);
  // Missing file.
  CHECK_THROWS_AS(io::read_dataset(tmp.file("absent.qtds")), IoError);
  CHECK_THROWS_AS(io::read_dataset_header(tmp.file("absent.qtds")), IoError);
}

TEST_CASE("dataset corruption is reported as a checksum failure") {
  TempDir tmp;
  auto states = generate_dataset(1, 4, 103);
  std::string path = tmp.file("corrupt.qtds");
  io::write_dataset(path, 1, states);
  auto bytes = slurp(path);
  bytes[bytes.size() / 2] ^= 0x40;  // flip a payload bit
  spit(path, bytes);
  CHECK_THROWS_WITH_AS(io::read_dataset(path),
                       doctest::Contains("checksum"), IoError);

  // Truncation.
  auto short_bytes = slurp(path);
  short_bytes.resize(short_bytes.size() - 7);
  spit(path, short_bytes);
  CHECK_THROWS_AS(io::read_dataset(path), IoError);

  // Foreign magic.
  auto magic = slurp(path);
  magic[0] = 'X';
  spit(path, magic);
  CHECK_THROWS_AS(io::read_dataset(path), IoError);
  CHECK_THROWS_AS(io::read_dataset_header(path), IoError);
}

TEST_CASE("generic checkpoints carry meta, step and moments") {
  TempDir tmp;
  io::Checkpoint cp;
  cp.kind = "CORR_M";
  cp.meta = {{"alpha", "1"}, {"beta", "two"}};
  cp.shapes = {{"w", {2, 3}, 0, 0}, {"b", {4}, 0, 0}};
  cp.flat = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  cp.step = 77;
  nn::AdamMoments mom;
  mom.m.assign(10, 0.5);
  mom.v.assign(10, 0.25);
  cp.moments = mom;

  std::string path = tmp.file("model.qtnn");
  io::write_checkpoint(path, cp);
  io::Checkpoint back = io::read_checkpoint(path);
  CHECK(back.kind == "CORR_M");
  CHECK(back.meta == cp.meta);
  REQUIRE(back.shapes.size() == 2);
  CHECK(back.shapes[0].name == "w");
  CHECK(back.shapes[0].shape == std::vector<std::size_t>{2, 3});
  CHECK(back.shapes[0].offset == 0);
  CHECK(back.shapes[0].size == 6);
  CHECK(back.shapes[1].offset == 6);
  CHECK(back.flat == cp.flat);
  REQUIRE(back.step.has_value());
  CHECK(*back.step == 77);
  REQUIRE(back.moments.has_value());
  CHECK(back.moments->m == mom.m);
  CHECK(back.moments->v == mom.v);

  // Without optimizer state the optional stays empty.
  cp.step.reset();
  cp.moments.reset();
  std::string path2 = tmp.file("bare.qtnn");
  io::write_checkpoint(path2, cp);
  io::Checkpoint bare = io::read_checkpoint(path2);
  CHECK(!bare.step.has_value());
  CHECK(!bare.moments.has_value());

  // Flat length must cover the shape table exactly.
  io::Checkpoint wrong = cp;
  wrong.flat.resize(9);
  CHECK_THROWS_AS(io::write_checkpoint(tmp.file("wrong.qtnn"), wrong), IoError);
}

TEST_CASE("corrector checkpoints rebuild the exact model") {
  TempDir tmp;
  models::CorrectorModel model =
      models::CorrectorModel::make(models::CorrectorVariant::Quadratic, 1, 2, 5);
  rng::Xoshiro256pp gen(9);
  model.mlp.weights().init_glorot(gen);
  nn::AdamMoments mom;
  mom.m.assign(model.mlp.weights().total_size(), 0.125);
  mom.v.assign(model.mlp.weights().total_size(), 0.0625);

  std::string path = tmp.file("corr.qtnn");
  io::save_corrector(path, model, 42, &mom, {{"subset", "1,3"}});
  io::LoadedCorrector lc = io::load_corrector(path);
  CHECK(lc.model.variant == models::CorrectorVariant::Quadratic);
  CHECK(lc.model.n_qubits == 1);
  CHECK(lc.model.m_size == 2);
  CHECK(lc.model.mlp.weights().flat() == model.mlp.weights().flat());
  CHECK(lc.step == 42);
  CHECK(lc.moments.m == mom.m);
  CHECK(lc.meta.at("subset") == "1,3");

  // Predictions agree exactly.
  auto pset = projector_set(1);
  RealVector m(2);
  m << 0.4, 0.6;
  MeasurementRecord rec = make_record(pset, {1, 3}, m);
  CorrectionTerms a = models::corrector_predict(model, rec);
  CorrectionTerms b = models::corrector_predict(lc.model, rec);
  CHECK((a.b - b.b).norm() == 0.0);
  CHECK((a.c - b.c).norm() == 0.0);

  // A selector loader must refuse this file.
  CHECK_THROWS_AS(io::load_selector(path), IoError);
}

TEST_CASE("selector checkpoints pack both nets into one buffer") {
  TempDir tmp;
  models::SelectorReconstructor model = models::SelectorReconstructor::make(
      models::SelectionMode::PredefinedBasis, 1, 3, 8, 1);
  nn::AdamMoments mr, ms;
  mr.m.assign(model.lstm_r.weights().total_size(), 1.0);
  mr.v.assign(model.lstm_r.weights().total_size(), 2.0);
  ms.m.assign(model.lstm_s->weights().total_size(), 3.0);
  ms.v.assign(model.lstm_s->weights().total_size(), 4.0);

  std::string path = tmp.file("sel.qtnn");
  io::save_selector(path, model, 7, &mr, &ms, {{"steps", "4"}});
  io::LoadedSelector ls = io::load_selector(path);
  CHECK(ls.model.mode == models::SelectionMode::PredefinedBasis);
  CHECK(ls.model.n_qubits == 1);
  CHECK(ls.model.lstm_r.weights().flat() == model.lstm_r.weights().flat());
  REQUIRE(ls.model.lstm_s.has_value());
  CHECK(ls.model.lstm_s->weights().flat() == model.lstm_s->weights().flat());
  CHECK(ls.step == 7);
  CHECK(ls.moments_r.m == mr.m);
  CHECK(ls.moments_s.v == ms.v);
  CHECK(ls.meta.at("steps") == "4");
  CHECK_THROWS_AS(io::load_corrector(path), IoError);

  // Random mode has no selector net and no s. tensors.
  models::SelectorReconstructor rnd = models::SelectorReconstructor::make(
      models::SelectionMode::RandomBasis, 1, 3, 8, 1);
  std::string path2 = tmp.file("rnd.qtnn");
  io::save_selector(path2, rnd);
  io::LoadedSelector lr = io::load_selector(path2);
  CHECK(!lr.model.lstm_s.has_value());
  CHECK(lr.model.lstm_r.weights().flat() == rnd.lstm_r.weights().flat());
  CHECK(lr.step == 0);
  CHECK(lr.moments_r.m.empty());
}

TEST_CASE("tampered checkpoints are rejected on load") {
  TempDir tmp;
  models::CorrectorModel model =
      models::CorrectorModel::make(models::CorrectorVariant::FullM, 1, 2, 5);
  std::string path = tmp.file("tamper.qtnn");
  io::save_corrector(path, model);

  auto bytes = slurp(path);
  bytes[1] = 'X';  // break the magic
  std::string broken = tmp.file("broken.qtnn");
  spit(broken, bytes);
  CHECK_THROWS_AS(io::read_checkpoint(broken), IoError);

  auto truncated = slurp(path);
  truncated.resize(truncated.size() - 9);
  spit(broken, truncated);
  CHECK_THROWS_AS(io::read_checkpoint(broken), IoError);
}

TEST_CASE("csv round trips tables with comment lines") {
  TempDir tmp;
  io::CsvTable t;
  t.comments = {"command=sweep", "config_hash=deadbeef"};
  t.header = {"method", "m", "value"};
  t.rows = {{"pinv", "2", "0.25"}, {"mle", "3", "0.125"}};
  std::string path = tmp.file("table.csv");
  io::write_csv(path, t);

  std::string text = slurp_text(path);
  CHECK(text.find("# command=sweep\n") != std::string::npos);
  CHECK(text.find("method,m,value\n") != std::string::npos);

  io::CsvTable back = io::read_csv(path);
  CHECK(back.comments == t.comments);
  CHECK(back.header == t.header);
  CHECK(back.rows == t.rows);

  // Cells may not contain separators or line breaks.
  io::CsvTable bad = t;
  bad.rows[0][0] = "pi,nv";
  CHECK_THROWS_AS(io::write_csv(tmp.file("bad.csv"), bad), IoError);
  io::CsvTable ragged = t;
  ragged.rows[1] = {"mle", "3"};
  CHECK_THROWS_AS(io::write_csv(tmp.file("ragged.csv"), ragged), IoError);

  // Width mismatches and missing headers fail on read.
  std::ofstream(tmp.file("raggedr.csv")) << "a,b\n1,2\n3\n";
  CHECK_THROWS_AS(io::read_csv(tmp.file("raggedr.csv")), IoError);
  std::ofstream(tmp.file("empty.csv")) << "# only comments\n";
  CHECK_THROWS_AS(io::read_csv(tmp.file("empty.csv")), IoError);
  CHECK_THROWS_AS(io::read_csv(tmp.file("missing.csv")), IoError);
}

TEST_CASE("doubles survive the text round trip exactly") {
  for (double v : {0.1, 1.0 / 3.0, 2.5e-17, -123456.789, 0.0, 6.02e23}) {
    std::string s = io::format_double(v);
    CHECK(std::stod(s) == v);
  }
}

TEST_CASE("config files reject unknown keys, duplicates and bad schema") {
  TempDir tmp;
  std::string path = tmp.file("run.cfg");
  std::ofstream(path) << "# comment\n"
                      << "schema_version=1\n"
                      << "count = 250\n"
                      << "\n"
                      << "seed=7\n";
  auto kv = io::read_config(path, {"count", "seed", "out"});
  CHECK(kv.size() == 2);
  CHECK(kv.at("count") == "250");
  CHECK(kv.at("seed") == "7");

  std::ofstream(path) << "schema_version=1\nmystery=1\n";
  CHECK_THROWS_WITH_AS(io::read_config(path, {"count"}),
                       doctest::Contains("unknown key"), IoError);

  std::ofstream(path) << "count=3\n";
  CHECK_THROWS_WITH_AS(io::read_config(path, {"count"}),
                       doctest::Contains("schema_version"), IoError);

  std::ofstream(path) << "schema_version=2\ncount=3\n";
  CHECK_THROWS_AS(io::read_config(path, {"count"}), IoError);

  std::ofstream(path) << "schema_version=1\ncount=3\ncount=4\n";
  CHECK_THROWS_WITH_AS(io::read_config(path, {"count"}),
                       doctest::Contains("duplicate"), IoError);

  std::ofstream(path) << "schema_version=1\nnoequals\n";
  CHECK_THROWS_AS(io::read_config(path, {"count"}), IoError);

  CHECK_THROWS_AS(io::read_config(tmp.file("absent.cfg"), {"count"}), IoError);

  // write_config emits a loadable file with the schema line first.
  std::string out = tmp.file("emit.cfg");
  io::write_config(out, {{"zeta", "9"}, {"alpha", "1"}});
  std::string text = slurp_text(out);
  CHECK(text.find("schema_version=1") == 0);
  CHECK(text.find("alpha=1") < text.find("zeta=9"));
  auto loaded = io::read_config(out, {"zeta", "alpha"});
  CHECK(loaded.at("zeta") == "9");
}

TEST_CASE("line charts render every series with axes and legend") {
  TempDir tmp;
  io::SvgSeries a{"pinv", {0, 1, 2, 3, 4}, {0.46, 0.38, 0.25, 0.12, 0.0}};
  io::SvgSeries b{"mle", {0, 1, 2, 3, 4}, {0.46, 0.3, 0.2, 0.08, 0.0}};
  std::string path = tmp.file("chart.svg");
  io::write_svg_chart(path, "distance vs budget", {a, b});
  std::string text = slurp_text(path);
  CHECK(text.find("<svg") != std::string::npos);
  CHECK(text.find("</svg>") != std::string::npos);
  CHECK(text.find("distance vs budget") != std::string::npos);
  CHECK(text.find("pinv") != std::string::npos);
  CHECK(text.find("mle") != std::string::npos);
  CHECK(text.find("polyline") != std::string::npos);

  // Titles are escaped.
  io::write_svg_chart(path, "a < b & c", {a});
  text = slurp_text(path);
  CHECK(text.find("a &lt; b &amp; c") != std::string::npos);
  CHECK(text.find("a < b & c") == std::string::npos);

  // Malformed series are rejected.
  io::SvgSeries ragged{"x", {0, 1}, {1}};
  CHECK_THROWS_AS(io::write_svg_chart(path, "t", {ragged}), IoError);
  CHECK_THROWS_AS(io::write_svg_chart(path, "t", {}), IoError);
  io::SvgSeries nonfinite{"x", {0, 1}, {1, std::nan("")}};
  CHECK_THROWS_AS(io::write_svg_chart(path, "t", {nonfinite}), IoError);
}
