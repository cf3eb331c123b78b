#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "cli.hpp"
#include "mfilgn/csv.hpp"
#include "mfilgn/dataset.hpp"
#include "mfilgn/image_io.hpp"
#include "mfilgn/regression.hpp"
#include "synthetic.hpp"

using namespace mfilgn;
namespace fs = std::filesystem;
using mfilgn::testing::read_text;
using mfilgn::testing::TempDir;
using mfilgn::testing::write_text;

namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  Result r;
  r.code = cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string p(const fs::path& path) { return path.string(); }

// Small ERPs whose blur grows with the index; MOS falls accordingly.
void write_dataset(const TempDir& dir, int count = 10) {
  std::string manifest = "path,mos,reference\n";
  for (int i = 0; i < count; ++i) {
    const Raster base = mfilgn::testing::textured_erp(256, 128, static_cast<std::uint64_t>(i % 2));
    const Raster img = mfilgn::testing::quantize8(mfilgn::testing::add_noise(
        mfilgn::testing::gaussian_blur(base, 0.2 * i), 3.0, static_cast<std::uint64_t>(i + 50)));
    const std::string name = "img" + std::to_string(i) + ".png";
    write_png(dir / name, img);
    manifest += name + "," + std::to_string(95 - 3 * i) + ",scene" + std::to_string(i % 5) + "\n";
  }
  write_text(dir / "set.csv", manifest);
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

const std::vector<std::string> kSmall{"--viewport-size", "64"};

std::vector<std::string> with_small(std::vector<std::string> args) {
  args.insert(args.end(), kSmall.begin(), kSmall.end());
  return args;
}

}  // namespace

TEST_CASE("extract writes one row per image") {
  TempDir dir;
  write_dataset(dir);
  const auto r = run(with_small({"extract", "--manifest", p(dir / "set.csv"), "--out", p(dir / "f.csv")}));
  REQUIRE(r.code == 0);
  const auto table = read_feature_csv(dir / "f.csv");
  CHECK(table.features.rows == 10);
  CHECK(table.features.cols == 76);
  CHECK(fs::exists(dir / "f.csv.config"));
  CHECK(read_text(dir / "f.csv.config").find("viewport-size = 64") != std::string::npos);

  const auto two = run(with_small({"extract", "--manifest", p(dir / "set.csv"), "--out",
                                   p(dir / "f2.csv"), "--levels", "2"}));
  REQUIRE(two.code == 0);
  CHECK(read_feature_csv(dir / "f2.csv").features.cols == 80);
}

TEST_CASE("extract with a missing image") {
  TempDir dir;
  write_png(dir / "a.png", mfilgn::testing::quantize8(mfilgn::testing::textured_erp(256, 128, 3)));
  write_text(dir / "set.csv", "path,mos\na.png,50\ngone.png,40\n");
  const auto lenient = run(with_small({"extract", "--manifest", p(dir / "set.csv"), "--out", p(dir / "f.csv")}));
  CHECK(lenient.code == 0);
  CHECK(lenient.err.find("gone.png") != std::string::npos);
  CHECK(read_feature_csv(dir / "f.csv").features.rows == 1);

  const auto strict = run(with_small(
      {"extract", "--manifest", p(dir / "set.csv"), "--out", p(dir / "g.csv"), "--strict"}));
  CHECK(strict.code == cli::kExitIo);
  CHECK_FALSE(fs::exists(dir / "g.csv"));
}

TEST_CASE("extract can dump wavelet subbands") {
  TempDir dir;
  write_dataset(dir, 1);
  const auto r = run(with_small({"extract", "--manifest", p(dir / "set.csv"), "--out", p(dir / "f.csv"),
                                 "--levels", "2", "--dump-subbands", p(dir / "bands")}));
  REQUIRE(r.code == 0);
  std::size_t count = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir / "bands")) ++count;
  CHECK(count == 8);
  CHECK(fs::exists(dir / "bands" / "0000_img0_L1_HH.pgm"));
}

TEST_CASE("train, predict and their errors") {
  TempDir dir;
  write_dataset(dir);
  REQUIRE(run(with_small({"extract", "--manifest", p(dir / "set.csv"), "--out", p(dir / "f.csv")})).code == 0);

  const auto tr = run({"train", "--features", p(dir / "f.csv"), "--manifest", p(dir / "set.csv"),
                       "--model-out", p(dir / "m.txt")});
  REQUIRE(tr.code == 0);
  CHECK(tr.out.find("epsilon-tube satisfaction") != std::string::npos);
  const auto model = load_model_string(read_text(dir / "m.txt"));
  CHECK(model.feature_dim() == 76);
  CHECK(fs::exists(dir / "m.txt.config"));

  const auto gs = run({"train", "--features", p(dir / "f.csv"), "--manifest", p(dir / "set.csv"),
                       "--model-out", p(dir / "m2.txt"), "--grid-search"});
  REQUIRE(gs.code == 0);
  CHECK(gs.out.find("grid search selected C=") != std::string::npos);
  CHECK(gs.out.find("gamma=") != std::string::npos);

  // Predict a feature CSV: header then one line per row.
  const auto pc = run({"predict", "--model", p(dir / "m.txt"), p(dir / "f.csv")});
  REQUIRE(pc.code == 0);
  const auto pl = lines(pc.out);
  REQUIRE(pl.size() == 11);
  CHECK(pl[0] == "id,score");
  CHECK(pl[1].rfind("img0.png,", 0) == 0);

  // Predict a single image: exactly one number, equal to the CSV route.
  const auto pi = run(with_small({"predict", "--model", p(dir / "m.txt"), p(dir / "img0.png")}));
  REQUIRE(pi.code == 0);
  const auto il = lines(pi.out);
  REQUIRE(il.size() == 1);
  CHECK(std::stod(il[0]) == std::stod(pl[1].substr(pl[1].find(',') + 1)));

  // Wrong feature width.
  const auto wide = run(with_small({"extract", "--manifest", p(dir / "set.csv"), "--out",
                                    p(dir / "f3.csv"), "--levels", "3"}));
  REQUIRE(wide.code == 0);
  const auto bad = run({"predict", "--model", p(dir / "m.txt"), p(dir / "f3.csv")});
  CHECK(bad.code == cli::kExitValidation);
  const auto bad_img = run(with_small({"predict", "--model", p(dir / "m.txt"), p(dir / "img0.png"),
                                       "--levels", "2"}));
  CHECK(bad_img.code == cli::kExitValidation);

  // Row-count mismatch names both counts.
  write_text(dir / "short.csv", "path,mos\nimg0.png,50\nimg1.png,60\nimg2.png,40\nimg3.png,30\n"
                                "img4.png,20\nimg5.png,10\nimg6.png,5\nimg7.png,45\nimg8.png,35\n");
  const auto mm = run({"train", "--features", p(dir / "f.csv"), "--manifest", p(dir / "short.csv"),
                       "--model-out", p(dir / "m4.txt")});
  CHECK(mm.code == cli::kExitValidation);
  CHECK(mm.err.find("10") != std::string::npos);
  CHECK(mm.err.find("9") != std::string::npos);
}

TEST_CASE("evaluate is deterministic and honours the split") {
  TempDir dir;
  write_dataset(dir, 25);
  REQUIRE(run(with_small({"extract", "--manifest", p(dir / "set.csv"), "--out", p(dir / "f.csv")})).code == 0);
  auto eval = [&](const std::string& out, std::vector<std::string> extra) {
    std::vector<std::string> args{"evaluate", "--manifest", p(dir / "set.csv"), "--features",
                                  p(dir / "f.csv"), "--out", p(dir / out)};
    args.insert(args.end(), extra.begin(), extra.end());
    return run(args);
  };
  const auto a = eval("a.csv", {"--trials", "5", "--seed", "7"});
  const auto b = eval("b.csv", {"--trials", "5", "--seed", "7"});
  REQUIRE(a.code == 0);
  REQUIRE(b.code == 0);
  CHECK(read_text(dir / "a.csv") == read_text(dir / "b.csv"));
  CHECK(read_text(dir / "a.csv.summary.csv") == read_text(dir / "b.csv.summary.csv"));
  CHECK(a.out == b.out);

  const auto summary = parse_csv(read_text(dir / "a.csv.summary.csv"));
  REQUIRE(summary.size() == 4);
  CHECK(summary[0].fields == std::vector<std::string>{"metric", "median", "mean", "std"});
  CHECK(summary[1].fields[0] == "srocc");
  CHECK(summary[2].fields[0] == "plcc");
  CHECK(summary[3].fields[0] == "rmse");

  const auto trials = parse_csv(read_text(dir / "a.csv"));
  REQUIRE(trials.size() == 6);
  CHECK(trials[0].fields ==
        std::vector<std::string>{"trial", "seed", "train_size", "test_size", "srocc", "plcc", "rmse", "error"});

  const auto half = eval("h.csv", {"--trials", "3", "--split", "0.5"});
  REQUIRE(half.code == 0);
  const auto hrows = parse_csv(read_text(dir / "h.csv"));
  for (std::size_t i = 1; i < hrows.size(); ++i) {
    CHECK(hrows[i].fields[2] == "13");  // round(25 / 2)
    CHECK(hrows[i].fields[3] == "12");
  }

  const auto content = eval("c.csv", {"--trials", "2", "--split-mode", "content"});
  CHECK(content.code == 0);
  CHECK(fs::exists(dir / "a.csv.config"));
}

TEST_CASE("evaluate extracts features itself when none are given") {
  TempDir dir;
  write_dataset(dir, 15);
  const auto r = run(with_small({"evaluate", "--manifest", p(dir / "set.csv"), "--out", p(dir / "t.csv"),
                                 "--trials", "2", "--cache-dir", p(dir / "cache")}));
  REQUIRE(r.code == 0);
  CHECK(parse_csv(read_text(dir / "t.csv")).size() == 3);
  std::size_t cached = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir / "cache")) ++cached;
  CHECK(cached == 15);
}

TEST_CASE("viewports subcommand") {
  TempDir dir;
  write_png(dir / "erp.png", mfilgn::testing::quantize8(mfilgn::testing::textured_erp(256, 128, 9)));
  const auto def = run(with_small({"viewports", p(dir / "erp.png"), "--out-dir", p(dir / "vp")}));
  REQUIRE(def.code == 0);
  std::size_t pngs = 0;
  for (const auto& e : fs::directory_iterator(dir / "vp")) pngs += e.path().extension() == ".png";
  CHECK(pngs == 20);
  CHECK(fs::exists(dir / "vp" / "viewport_000.png"));
  CHECK(fs::exists(dir / "vp" / "viewports.config"));
  const auto listing = lines(read_text(dir / "vp" / "viewports.txt"));
  CHECK(listing.size() == 21);

  const auto four = run(with_small({"viewports", p(dir / "erp.png"), "--out-dir", p(dir / "vp4"), "--m0", "4"}));
  REQUIRE(four.code == 0);
  pngs = 0;
  for (const auto& e : fs::directory_iterator(dir / "vp4")) pngs += e.path().extension() == ".png";
  CHECK(pngs == 4);

  // A regular file where the directory should be.
  write_text(dir / "blocker", "x");
  const auto blocked = run({"viewports", p(dir / "erp.png"), "--out-dir", p(dir / "blocker" / "sub")});
  CHECK(blocked.code == cli::kExitIo);
  CHECK_FALSE(blocked.err.empty());
}

TEST_CASE("help lists every tunable with its default") {
  const auto r = run({"extract", "--help"});
  CHECK(r.code == 0);
  for (const char* key : {"--levels", "--m0", "--fov", "--viewport-size", "--mscn-radius",
                          "--mscn-sigma", "--mscn-c", "--zca", "--zca-patch", "--zca-epsilon"}) {
    CHECK(r.out.find(key) != std::string::npos);
  }
  const auto ev = run({"evaluate", "--help"});
  for (const char* key : {"--svr-c", "--svr-gamma", "--svr-epsilon", "--trials", "--split", "--seed",
                          "--grid-search", "--split-mode", "--jobs"}) {
    CHECK(ev.out.find(key) != std::string::npos);
  }
  CHECK(ev.out.find("1024") != std::string::npos);
  CHECK(ev.out.find("1000") != std::string::npos);
  CHECK(ev.out.find("0.8") != std::string::npos);
}

TEST_CASE("config files are overridden by flags") {
  TempDir dir;
  write_png(dir / "erp.png", mfilgn::testing::quantize8(mfilgn::testing::textured_erp(256, 128, 9)));
  write_text(dir / "run.config", "m0 = 4\nviewport-size = 32\n");
  const auto r = run({"viewports", p(dir / "erp.png"), "--out-dir", p(dir / "vp"), "--config",
                      p(dir / "run.config"), "--viewport-size", "48"});
  REQUIRE(r.code == 0);
  const std::string sidecar = read_text(dir / "vp" / "viewports.config");
  CHECK(sidecar.find("m0 = 4") != std::string::npos);
  CHECK(sidecar.find("viewport-size = 48") != std::string::npos);

  write_text(dir / "bad.config", "m0 = four\n");
  CHECK(run({"viewports", p(dir / "erp.png"), "--out-dir", p(dir / "vp2"), "--config",
             p(dir / "bad.config")}).code == cli::kExitValidation);
}

TEST_CASE("exit codes") {
  CHECK(run({}).code == cli::kExitValidation);
  CHECK(run({"frobnicate"}).code == cli::kExitValidation);
  CHECK(run({"viewports", "/no/such/image.png", "--out-dir", "/tmp/x"}).code == cli::kExitIo);
  TempDir dir;
  write_text(dir / "junk.png", "junk");
  CHECK(run({"viewports", p(dir / "junk.png"), "--out-dir", p(dir / "o")}).code == cli::kExitValidation);
  write_png(dir / "flat.png", Raster(256, 128, 80.0));
  write_text(dir / "model.txt", "mfilgn-svr-model\nversion 1\n");
  CHECK(run({"predict", "--model", p(dir / "model.txt"), p(dir / "flat.png")}).code == cli::kExitValidation);
  CHECK(run({"predict", "--model", p(dir / "absent.txt"), p(dir / "flat.png")}).code == cli::kExitIo);
  CHECK(run({"viewports", p(dir / "flat.png"), "--out-dir", p(dir / "o"), "--m0", "2"}).code ==
        cli::kExitValidation);
}
