#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "mobgen/bundle.hpp"
#include "mobgen/calibration.hpp"
#include "mobgen/synthetic.hpp"
#include "mobgen/util.hpp"
#include "support/fixtures.hpp"

using namespace mobgen;
namespace fs = std::filesystem;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string output;
};

/// Run the CLI with the cache pinned inside the scratch directory.
RunResult run_cli(const fixtures::TempDir& tmp, const std::string& args)
{
    const fs::path log = tmp.path / "cli-output.log";
    const std::string cmd = "MOBGEN_CACHE='" + (tmp.path / "cache").string() + "' '" +
                            std::string(MOBGEN_BINARY) + "' " + args + " > '" + log.string() +
                            "' 2>&1";
    const int status = std::system(cmd.c_str());
    RunResult result;
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    result.output = util::read_file(log);
    return result;
}

const LonLat kCenter{10.0, 50.0};

void write_map_inputs(const fixtures::TempDir& tmp)
{
    util::write_file(tmp.file("toy.osm"), fixtures::toy_osm_xml());
    fixtures::write_square_geojson(tmp.file("area.geojson"), kCenter, 1500.0);
}

std::string map_flags(const fixtures::TempDir& tmp)
{
    return "--osm '" + tmp.file("toy.osm").string() + "' --area '" +
           tmp.file("area.geojson").string() + "'";
}

} // namespace

TEST_CASE("prepare: missing input exits 2 and names the file")
{
    fixtures::TempDir tmp;
    fixtures::write_square_geojson(tmp.file("area.geojson"), kCenter, 1500.0);
    const auto r = run_cli(tmp, "prepare --osm '" + tmp.file("absent.osm").string() +
                                    "' --area '" + tmp.file("area.geojson").string() + "'");
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("absent.osm") != std::string::npos);
}

TEST_CASE("prepare: idempotent second run is a cache hit")
{
    fixtures::TempDir tmp;
    write_map_inputs(tmp);

    const auto first = run_cli(tmp, "prepare " + map_flags(tmp));
    REQUIRE(first.exit_code == 0);
    CHECK(first.output.find("cache hit") == std::string::npos);

    std::map<std::string, fs::file_time_type> stamps;
    for (const auto& entry : fs::directory_iterator(tmp.path / "cache")) {
        stamps[entry.path().filename().string()] = fs::last_write_time(entry.path());
    }
    REQUIRE(stamps.size() >= 4); // buildings, graph, grid, matrix

    const auto second = run_cli(tmp, "prepare " + map_flags(tmp));
    REQUIRE(second.exit_code == 0);
    CHECK(second.output.find("cache hit: buildings") != std::string::npos);
    CHECK(second.output.find("cache hit: road graph") != std::string::npos);
    CHECK(second.output.find("cache hit: grid") != std::string::npos);
    CHECK(second.output.find("cache hit: distance matrix") != std::string::npos);
    for (const auto& entry : fs::directory_iterator(tmp.path / "cache")) {
        CHECK(fs::last_write_time(entry.path()) == stamps[entry.path().filename().string()]);
    }
}

TEST_CASE("prepare: a changed buffer rebuilds the geometry but reuses the graph")
{
    fixtures::TempDir tmp;
    write_map_inputs(tmp);
    REQUIRE(run_cli(tmp, "prepare " + map_flags(tmp)).exit_code == 0);

    const auto r = run_cli(tmp, "prepare " + map_flags(tmp) + " --buffer 500");
    REQUIRE(r.exit_code == 0);
    CHECK(r.output.find("cache hit: road graph") != std::string::npos);
    CHECK(r.output.find("cache hit: buildings") == std::string::npos);
    CHECK(r.output.find("cache hit: grid") == std::string::npos);
    CHECK(r.output.find("cache hit: distance matrix") == std::string::npos);
}

TEST_CASE("simulate: missing bundle exits 3; all-home bundle emits the documented shape")
{
    fixtures::TempDir tmp;
    write_map_inputs(tmp);

    const auto missing = run_cli(tmp, "simulate " + map_flags(tmp) + " --bundle '" +
                                          tmp.file("nope.json").string() + "'");
    CHECK(missing.exit_code == 3);

    fixtures::all_home_bundle().save(tmp.file("allhome.json"));
    const auto r = run_cli(tmp, "simulate " + map_flags(tmp) + " --bundle '" +
                                    tmp.file("allhome.json").string() +
                                    "' --agents 1 --days 1 --seed 9 --out '" +
                                    tmp.file("out.json").string() + "'");
    REQUIRE(r.exit_code == 0);

    const auto doc = nlohmann::json::parse(util::read_file(tmp.file("out.json")));
    REQUIRE(doc.is_array());
    REQUIRE(doc.size() == 1);
    const auto& days = doc[0].at("days");
    REQUIRE(days.size() == 1);
    const auto& activities = days[0].at("activities");
    REQUIRE(activities.size() == 1);
    const auto& activity = activities[0];
    CHECK(activity.at("type") == "HOME");
    CHECK(activity.at("stayTime").is_null());
    CHECK(activity.contains("lat"));
    CHECK(activity.contains("lon"));
    CHECK(activity.at("inFocusArea").is_boolean());
    // Exactly the documented activity fields.
    CHECK(activity.size() == 5);
}

TEST_CASE("simulate: seeded runs are byte-identical, different seeds differ")
{
    fixtures::TempDir tmp;
    write_map_inputs(tmp);
    CalibrationBundle::load(DEFAULT_BUNDLE_PATH).save(tmp.file("bundle.json"));

    const std::string base = "simulate " + map_flags(tmp) + " --bundle '" +
                             tmp.file("bundle.json").string() + "' --agents 20 --days 3";
    REQUIRE(run_cli(tmp, base + " --seed 7 --out '" + tmp.file("a.json").string() + "'").exit_code ==
            0);
    REQUIRE(run_cli(tmp, base + " --seed 7 --threads 3 --out '" + tmp.file("b.json").string() + "'")
                .exit_code == 0);
    REQUIRE(run_cli(tmp, base + " --seed 8 --out '" + tmp.file("c.json").string() + "'").exit_code ==
            0);

    CHECK(util::read_file(tmp.file("a.json")) == util::read_file(tmp.file("b.json")));
    CHECK(util::read_file(tmp.file("a.json")) != util::read_file(tmp.file("c.json")));
}

TEST_CASE("calibrate: survey error paths use exit 4")
{
    fixtures::TempDir tmp;
    const auto city = calib::make_synthetic_city();
    city.save(tmp.file("cells.json"));

    util::write_file(tmp.file("empty.csv"), "");
    const auto empty = run_cli(tmp, "calibrate --survey '" + tmp.file("empty.csv").string() +
                                        "' --cells '" + tmp.file("cells.json").string() + "'");
    CHECK(empty.exit_code == 4);
    CHECK(empty.output.find("empty survey") != std::string::npos);

    util::write_file(tmp.file("noheader.csv"),
                     "person_id,age,hom_group,mob_group,weekday,trip_index,purpose,origin_cell,"
                     "dest_cell,start_min\n");
    const auto missing_col =
        run_cli(tmp, "calibrate --survey '" + tmp.file("noheader.csv").string() + "' --cells '" +
                         tmp.file("cells.json").string() + "'");
    CHECK(missing_col.exit_code == 4);
    CHECK(missing_col.output.find("end_min") != std::string::npos);
}

TEST_CASE("calibrate then validate: closed loop through the CLI surfaces")
{
    fixtures::TempDir tmp;
    const auto city = calib::make_synthetic_city();
    city.save(tmp.file("cells.json"));

    const auto truth = calib::reference_truth_bundle();
    Rng rng(2718);
    const auto survey = calib::generate_synthetic_survey(truth, city, 4000, rng);
    survey.save_csv(tmp.file("survey.csv"));

    const auto calibrated =
        run_cli(tmp, "calibrate --survey '" + tmp.file("survey.csv").string() + "' --cells '" +
                         tmp.file("cells.json").string() + "' --threads 2 --out '" +
                         tmp.file("fitted.json").string() + "'");
    REQUIRE(calibrated.exit_code == 0);
    const auto bundle = CalibrationBundle::load(tmp.file("fitted.json"));
    CHECK(bundle.chains.find(sched::FeatureKey{}) != nullptr);

    // Schedules that mirror the survey one-to-one: every metric must be ideal.
    nlohmann::ordered_json agents = nlohmann::ordered_json::array();
    std::size_t agent_id = 0;
    for (const auto& day : survey.days) {
        if (day.chain.size() < 2) {
            continue;
        }
        nlohmann::ordered_json agent;
        agent["id"] = agent_id++;
        agent["age"] = "undefined";
        agent["homogenousGroup"] = "undefined";
        agent["mobilityGroup"] = "undefined";
        nlohmann::ordered_json jday;
        jday["day"] = 0;
        jday["weekday"] = "undefined";
        nlohmann::ordered_json acts = nlohmann::ordered_json::array();
        for (std::size_t i = 0; i < day.chain.size(); ++i) {
            nlohmann::ordered_json a;
            a["type"] = to_upper_string(day.chain[i]);
            if (i + 1 < day.chain.size()) {
                a["stayTime"] = day.dwell_hours[i] * 60.0;
            }
            else {
                a["stayTime"] = nullptr;
            }
            a["lat"] = city.cells[day.cells[i]].coordinates.lat;
            a["lon"] = city.cells[day.cells[i]].coordinates.lon;
            a["inFocusArea"] = true;
            acts.push_back(std::move(a));
        }
        jday["activities"] = std::move(acts);
        agent["days"] = nlohmann::ordered_json::array({jday});
        agents.push_back(std::move(agent));
        if (agent_id >= 800) {
            break;
        }
    }
    util::write_file(tmp.file("schedules.json"), agents.dump());

    // The survey restricted to the mirrored days.
    calib::Survey mirrored;
    std::size_t taken = 0;
    for (const auto& day : survey.days) {
        if (day.chain.size() < 2) {
            continue;
        }
        mirrored.days.push_back(day);
        if (++taken >= 800) {
            break;
        }
    }
    mirrored.save_csv(tmp.file("mirror.csv"));

    const auto validated = run_cli(
        tmp, "validate --survey '" + tmp.file("mirror.csv").string() + "' --cells '" +
                 tmp.file("cells.json").string() + "' --schedules '" +
                 tmp.file("schedules.json").string() + "' --out '" +
                 tmp.file("report.json").string() + "'");
    REQUIRE(validated.exit_code == 0);

    const auto report = nlohmann::json::parse(util::read_file(tmp.file("report.json")));
    for (const auto& row : report.at("zonal_attraction")) {
        CHECK(row.at("r2").get<double>() == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(row.at("jensen_shannon").get<double>() ==
              doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
        CHECK(row.at("mae_percent").get<double>() ==
              doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
    }
    for (const auto& row : report.at("origin_destination")) {
        CHECK(row.at("r2").get<double>() == doctest::Approx(1.0).epsilon(1e-9));
    }
    CHECK(fs::exists(tmp.file("report.json.txt")));
    const auto text = util::read_file(tmp.file("report.json.txt"));
    CHECK(text.find("Activity") != std::string::npos);
    CHECK(text.find("Jensen-Shannon") != std::string::npos);
}

TEST_CASE("beeline mode skips the matrix and warns")
{
    fixtures::TempDir tmp;
    write_map_inputs(tmp);
    const auto r = run_cli(tmp, "prepare " + map_flags(tmp) + " --dist-metric beeline");
    REQUIRE(r.exit_code == 0);
    CHECK(r.output.find("beeline") != std::string::npos);
    for (const auto& entry : fs::directory_iterator(tmp.path / "cache")) {
        CHECK(entry.path().filename().string().find("matrix") == std::string::npos);
    }
}
