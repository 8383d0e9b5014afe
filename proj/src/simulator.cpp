#include "mobgen/simulator.hpp"

#include <json.hpp>

#include "mobgen/errors.hpp"
#include "mobgen/util.hpp"

namespace mobgen::sim {

std::vector<AgentSchedule> simulate(const Model& model, const CalibrationBundle& bundle,
                                    const SimulationOptions& options)
{
    if (options.agents == 0) {
        throw ArgumentError("simulation needs at least one agent");
    }
    if (options.days < 1) {
        throw ArgumentError("simulation needs at least one day");
    }

    pop::ChoiceContext ctx;
    ctx.buildings = &model.buildings;
    ctx.cells = &model.cells;
    ctx.building_cell = &model.building_cell;
    ctx.distances = model.distances.get();
    ctx.attraction = &bundle.attraction;
    ctx.deterrence = &bundle.deterrence;
    ctx.census_present = model.census_present;

    auto agents =
        pop::create_population(options.agents, ctx, options.socio, options.seed, options.threads);

    sched::ScheduleModel schedule_model{&bundle.chains, &bundle.mixtures};

    std::vector<AgentSchedule> result(agents.size());
    util::parallel_for(agents.size(), options.threads, [&](std::size_t i) {
        AgentSchedule out;
        out.agent = agents[i];
        Rng rng(derive_seed(options.seed, i, /*substream=*/1));

        sched::Locator locator = [&](ActivityType type, std::uint32_t current, Rng& r) {
            switch (type) {
            case ActivityType::home:
                return out.agent.home;
            case ActivityType::work:
                return pop::assign_fixed_location(out.agent, Purpose::work, ctx, r);
            case ActivityType::school:
                return pop::assign_fixed_location(out.agent, Purpose::school, ctx, r);
            case ActivityType::shopping:
            case ActivityType::other:
                return dest::choose_destination(model.building_cell[current], type, model.cells,
                                                model.buildings, bundle.attraction,
                                                *model.distances, bundle.deterrence, r);
            }
            return current;
        };

        // Day one starts at home.
        ActivityType prev_type = ActivityType::home;
        std::uint32_t prev_building = out.agent.home;
        Weekday weekday = options.start_weekday;
        for (int day = 0; day < options.days; ++day) {
            sched::DayPlan plan = sched::generate_day(out.agent.features, weekday, prev_type,
                                                      prev_building, schedule_model, locator, rng);
            prev_type = plan.last_type();
            prev_building = plan.last_building();
            out.days.push_back(std::move(plan));
            weekday = next_weekday(weekday);
        }
        result[i] = std::move(out);
    });
    return result;
}

std::string schedules_to_json(const std::vector<AgentSchedule>& schedules, const Model& model)
{
    nlohmann::ordered_json agents = nlohmann::ordered_json::array();
    for (const auto& s : schedules) {
        nlohmann::ordered_json agent;
        agent["id"] = s.agent.id;
        agent["age"] = to_string(s.agent.features.age);
        agent["homogenousGroup"] = to_string(s.agent.features.homogenous_group);
        agent["mobilityGroup"] = to_string(s.agent.features.mobility_group);
        nlohmann::ordered_json days = nlohmann::ordered_json::array();
        for (std::size_t d = 0; d < s.days.size(); ++d) {
            nlohmann::ordered_json day;
            day["day"] = d;
            day["weekday"] = to_string(s.days[d].weekday);
            nlohmann::ordered_json activities = nlohmann::ordered_json::array();
            for (const auto& a : s.days[d].activities) {
                const Building& b = model.buildings[a.building];
                nlohmann::ordered_json ja;
                ja["type"] = to_upper_string(a.type);
                if (a.dwell_minutes) {
                    ja["stayTime"] = *a.dwell_minutes;
                }
                else {
                    ja["stayTime"] = nullptr;
                }
                ja["lat"] = b.coordinates.lat;
                ja["lon"] = b.coordinates.lon;
                ja["inFocusArea"] = b.in_focus_area;
                activities.push_back(std::move(ja));
            }
            day["activities"] = std::move(activities);
            days.push_back(std::move(day));
        }
        agent["days"] = std::move(days);
        agents.push_back(std::move(agent));
    }
    return agents.dump(1);
}

val::Schedules to_validation_schedules(const std::vector<AgentSchedule>& schedules,
                                       const Model& model)
{
    val::Schedules out;
    out.reserve(schedules.size());
    for (const auto& s : schedules) {
        std::vector<std::vector<val::ScheduledActivity>> agent_days;
        for (const auto& day : s.days) {
            std::vector<val::ScheduledActivity> acts;
            for (const auto& a : day.activities) {
                val::ScheduledActivity v;
                v.type = a.type;
                v.dwell_minutes = a.dwell_minutes;
                v.location = model.buildings[a.building].coordinates;
                acts.push_back(v);
            }
            agent_days.push_back(std::move(acts));
        }
        out.push_back(std::move(agent_days));
    }
    return out;
}

val::Schedules load_validation_schedules(const std::filesystem::path& path)
{
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(util::read_file(path));
    }
    catch (const nlohmann::json::exception& e) {
        throw ParseError("bad schedules file " + path.string() + ": " + e.what());
    }
    if (!doc.is_array()) {
        throw SchemaError("schedules file must hold a JSON array of agents");
    }
    val::Schedules out;
    for (const auto& agent : doc) {
        std::vector<std::vector<val::ScheduledActivity>> agent_days;
        for (const auto& day : agent.at("days")) {
            std::vector<val::ScheduledActivity> acts;
            for (const auto& ja : day.at("activities")) {
                val::ScheduledActivity v;
                v.type = activity_from_string(ja.at("type").get<std::string>());
                if (!ja.at("stayTime").is_null()) {
                    v.dwell_minutes = ja["stayTime"].get<double>();
                }
                v.location = LonLat{ja.at("lon").get<double>(), ja.at("lat").get<double>()};
                acts.push_back(v);
            }
            agent_days.push_back(std::move(acts));
        }
        out.push_back(std::move(agent_days));
    }
    return out;
}

} // namespace mobgen::sim
