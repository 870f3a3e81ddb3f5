#include <iostream>
#include <string>

#include <CLI11.hpp>

#include <radwave/scenario.hpp>

int main(int argc, char** argv)
{
    using namespace radwave::cli;
    CLI::App app{"radwave: radial critical wave laboratory"};
    app.require_subcommand(1);
    std::string config, out;
    bool quiet = false;

    app.add_subcommand("list", "print the scenario registry");
    auto* run = app.add_subcommand("run", "run the scenario named in the config's [run] section");
    run->add_option("--config", config, "config file")->required();
    run->add_option("--out", out, "output directory");
    run->add_flag("--quiet", quiet, "suppress the check table");
    for (const auto& s : scenario_registry()) {
        auto* sub = app.add_subcommand(s.name, s.summary);
        sub->add_option("--config", config, "config file");
        sub->add_option("--out", out, "output directory");
        sub->add_flag("--quiet", quiet, "suppress the check table");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : static_cast<int>(ExitStatus::validation);
    }

    const std::string name = app.get_subcommands().front()->get_name();
    if (name == "list") {
        std::cout << list_scenarios();
        return 0;
    }
    ScenarioConfig cfg;
    try {
        if (!config.empty()) cfg = load_config(config);
    } catch (const radwave::ValidationError& e) {
        std::cerr << e.what() << '\n';
        return static_cast<int>(ExitStatus::validation);
    }
    if (name != "run") {
        if (!cfg.scenario.empty() && cfg.scenario != name) {
            std::cerr << "config names scenario '" << cfg.scenario << "' but subcommand is '" << name << "'\n";
            return static_cast<int>(ExitStatus::validation);
        }
        cfg.scenario = name;
    }
    const ExitReport rep = run_scenario(cfg, out);
    if (rep.status == ExitStatus::validation || rep.status == ExitStatus::computation)
        std::cerr << rep.message << '\n';
    else if (!quiet)
        print_report(std::cout, rep);
    return rep.code();
}
