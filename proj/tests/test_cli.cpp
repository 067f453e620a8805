#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "airgam/evaluation.hpp"
#include "airgam/ingest.hpp"
#include "airgam/model_io.hpp"
#include "cli_harness.hpp"

#include <set>

using namespace airgam;
using namespace cli_harness;
namespace fs = std::filesystem;

namespace {

/// Minimal fixed-spec config against a synth block; selection disabled keeps
/// the runs fast.
std::string small_config(const std::string& out_dir) {
    return R"({
  "data": {"observations": ")" + out_dir + R"(/observations.csv",
           "stations": ")" + out_dir + R"(/stations.csv"},
  "region": {"name": "SynthLand", "utc_offset_minutes": 0},
  "target": "no2",
  "features": [{"source": "t"}, {"source": "dp"}, {"source": "d"}],
  "selection": {"enabled": false},
  "train_months": 24,
  "lockdown": {"start": "2020-03-16", "end": "2020-04-26"},
  "post_lockdown": {"start": "2020-04-27", "end": "2020-06-30"},
  "evaluation_year": 2019,
  "scenario_year": 2019,
  "out_dir": ")" + out_dir + R"(",
  "seed": 11,
  "jobs": 2,
  "synth": {"stations": 1, "start": "2018-01-01", "n_days": 912,
            "noise_sigma": 0.1, "ld_scale": 0.7}
})";
}

} // namespace

TEST_CASE("synth then fit writes the documented artifacts") {
    fs::path dir = fresh_dir("airgam_cli_fit");
    fs::path cfg = dir / "cfg.json";
    write_file(cfg, small_config((dir / "out").string()));

    CHECK(run_cli("synth --config '" + cfg.string() + "'") == 0);
    CHECK(fs::exists(dir / "out" / "observations.csv"));
    CHECK(fs::exists(dir / "out" / "stations.csv"));
    CHECK(fs::exists(dir / "out" / "manifest.json"));

    CHECK(run_cli("fit --config '" + cfg.string() + "'") == 0);
    CHECK(fs::exists(dir / "out" / "synth01.model.json"));

    Json manifest = Json::parse(slurp(dir / "out" / "manifest.json"));
    CHECK(manifest["command"] == "fit");
    CHECK(manifest["failures"].empty());
    std::set<std::string> listed;
    for (const auto& o : manifest["outputs"]) listed.insert(o["path"].get<std::string>());
    CHECK(listed.count("synth01.model.json") == 1);

    // a fit without selection has no trace files
    CHECK(!fs::exists(dir / "out" / "synth01.trace.json"));

    // the model reloads and parses as a bundle
    ModelBundle bundle = load_bundle((dir / "out" / "synth01.model.json").string());
    CHECK(bundle.station_id == "synth01");
    CHECK(bundle.model.has_term("d"));
}

TEST_CASE("unreadable observation path exits with the config code") {
    fs::path dir = fresh_dir("airgam_cli_badpath");
    fs::path cfg = dir / "cfg.json";
    write_file(cfg, R"({"data": {"observations": "/nonexistent/path.csv"},
                        "out_dir": ")" + (dir / "out").string() + R"("})");
    CHECK(run_cli("fit --config '" + cfg.string() + "'") == 2);
}

TEST_CASE("usage errors exit with code 2") {
    fs::path dir = fresh_dir("airgam_cli_usage");
    fs::path cfg = dir / "cfg.json";
    write_file(cfg, small_config((dir / "out").string()));
    CHECK(run_cli("validate --protocol nonsense --config '" + cfg.string() + "'") == 2);
    CHECK(run_cli("validate --config '" + cfg.string() + "'") == 2); // protocol required
    CHECK(run_cli("fit") == 2);                                      // config required
    CHECK(run_cli("unknowncommand --config '" + cfg.string() + "'") == 2);
}

TEST_CASE("partial station failure keeps exit code zero") {
    fs::path dir = fresh_dir("airgam_cli_partial");
    fs::path out = dir / "out";
    fs::create_directories(out);
    fs::path cfg = dir / "cfg.json";
    write_file(cfg, small_config(out.string()));
    REQUIRE(run_cli("synth --config '" + cfg.string() + "'") == 0);

    // append a second station whose target is entirely missing
    {
        std::ifstream in(out / "observations.csv");
        std::string header;
        std::getline(in, header);
        std::ofstream app(out / "observations.csv", std::ios::app);
        for (int day = 0; day < 900; ++day) {
            Date d = Date::from_ymd(2018, 1, 1).add_days(day);
            for (int hour = 0; hour < 24; hour += 6)
                app << "ghost," << d.to_string() << "T" << (hour < 10 ? "0" : "")
                    << hour << ":00:00Z,,,,,,,,,12.5,,,4.0,,\n";
        }
        std::ofstream meta(out / "stations.csv", std::ios::app);
        meta << "ghost,SynthLand,Synthetic,,\n";
    }

    CHECK(run_cli("fit --config '" + cfg.string() + "'") == 0);
    CHECK(fs::exists(out / "synth01.model.json"));
    CHECK(!fs::exists(out / "ghost.model.json"));
    Json manifest = Json::parse(slurp(out / "manifest.json"));
    REQUIRE(manifest["failures"].size() == 1);
    CHECK(manifest["failures"][0]["station"] == "ghost");
}

TEST_CASE("reduce over a disjoint window surfaces NoOverlap per station") {
    fs::path dir = fresh_dir("airgam_cli_disjoint");
    fs::path out = dir / "out";
    fs::path cfg = dir / "cfg.json";
    write_file(cfg, small_config(out.string()));
    REQUIRE(run_cli("synth --config '" + cfg.string() + "'") == 0);
    REQUIRE(run_cli("fit --config '" + cfg.string() + "'") == 0);

    // same config except the lockdown window lies outside the data span
    std::string moved = small_config(out.string());
    auto pos = moved.find("2020-03-16");
    moved.replace(pos, 10, "2024-03-16");
    pos = moved.find("2020-04-26");
    moved.replace(pos, 10, "2024-04-26");
    fs::path cfg2 = dir / "cfg2.json";
    write_file(cfg2, moved);

    CHECK(run_cli("reduce --config '" + cfg2.string() + "'") == 3); // every station failed
    Json manifest = Json::parse(slurp(out / "manifest.json"));
    REQUIRE(manifest["failures"].size() == 1);
    CHECK(manifest["failures"][0]["error"].get<std::string>().find("NoOverlap") !=
          std::string::npos);
}

TEST_CASE("missing upstream artifacts are reported with the expected path") {
    fs::path dir = fresh_dir("airgam_cli_missing");
    fs::path cfg = dir / "cfg.json";
    write_file(cfg, small_config((dir / "out").string()));
    REQUIRE(run_cli("synth --config '" + cfg.string() + "'") == 0);

    CHECK(run_cli("scenario --config '" + cfg.string() + "'") == 3);
    Json manifest = Json::parse(slurp(dir / "out" / "manifest.json"));
    REQUIRE(manifest["failures"].size() == 1);
    std::string error = manifest["failures"][0]["error"].get<std::string>();
    CHECK(error.find("MissingArtifact") != std::string::npos);
    CHECK(error.find("synth01.ld.model.json") != std::string::npos);
}

TEST_CASE("every output lands inside the configured directory and in the manifest") {
    fs::path dir = fresh_dir("airgam_cli_outputs");
    fs::path out = dir / "out";
    fs::path cfg = dir / "cfg.json";
    write_file(cfg, small_config(out.string()));
    REQUIRE(run_cli("synth --config '" + cfg.string() + "'") == 0);
    REQUIRE(run_cli("fit --config '" + cfg.string() + "'") == 0);
    REQUIRE(run_cli("transfer --config '" + cfg.string() + "'") == 0);
    REQUIRE(run_cli("mix --config '" + cfg.string() + "'") == 0);

    Json manifest = Json::parse(slurp(out / "manifest.json"));
    std::set<std::string> listed;
    for (const auto& o : manifest["outputs"]) listed.insert(o["path"].get<std::string>());
    // the mix run lists everything it wrote; nothing else changed on disk
    for (const std::string& expect :
         {"synth01.mix.report.json", "synth01.alpha.csv", "synth01.alpha.svg",
          "synth01.postld.svg"})
        CHECK(listed.count(expect) == 1);

    // nothing escaped the output directory
    std::set<std::string> disk;
    for (const auto& entry : fs::directory_iterator(out))
        disk.insert(entry.path().filename().string());
    for (const std::string& name : listed) CHECK(disk.count(name) == 1);
    // cfg.json is the only file at the parent level besides out/
    int extras = 0;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.path().filename() != "out" && entry.path().filename() != "cfg.json") extras++;
    CHECK(extras == 0);

    // SVG output is well-formed enough to embed
    std::string svg = slurp(out / "synth01.alpha.svg");
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("</svg>") != std::string::npos);
}

TEST_CASE("validate pre-ld emits fold reports that honor history") {
    fs::path dir = fresh_dir("airgam_cli_preld");
    fs::path out = dir / "out";
    fs::path cfg = dir / "cfg.json";
    write_file(cfg, small_config(out.string()));
    REQUIRE(run_cli("synth --config '" + cfg.string() + "'") == 0);
    REQUIRE(run_cli("validate --protocol pre-ld --config '" + cfg.string() + "'") == 0);

    Json report = Json::parse(slurp(out / "synth01.pre_ld.cv.json"));
    // 912 days starting Jan 2018: every fold that history permits is present,
    // the rest appear as skipped entries
    CHECK(report["folds"].size() == 72);
    CHECK(report["n_retained"].get<int>() == 54);
    CHECK(report["n_skipped"].get<int>() == 18);
    CHECK(report["mean_rmse"].get<double>() > 0.0);
}
