#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "picard/cli.hpp"

namespace {

int run_bench(const std::string& which, std::size_t n_max)
{
    std::vector<const picard::RegistryEntry*> entries;
    if (which == "all") {
        for (const auto& e : picard::registry())
            entries.push_back(&e);
    } else {
        try {
            entries.push_back(&picard::find_entry(which));
        } catch (const std::exception& e) {
            std::cerr << "config error: " << e.what() << '\n';
            return picard::exit_config;
        }
    }
    int status = picard::exit_ok;
    for (const auto* e : entries) {
        picard::RateOptions opt;
        opt.n_max = n_max;
        picard::RateReport r;
        try {
            r = picard::compare_rates(*e, opt);
        } catch (const std::exception& ex) {
            std::cerr << e->name << ": solver error: " << ex.what() << '\n';
            status = picard::exit_solver;
            continue;
        }
        std::cout << "# " << r.entry << " (" << r.backend << ", reference " << r.reference << ")\n";
        picard::write_csv(std::cout, r);
        std::cout << "# picard decay: " << picard::to_string(r.picard)
                  << ", geometric bound decay: " << picard::to_string(r.geometric);
        if (r.euler_slope)
            std::cout << ", euler log-log slope: " << picard::format_double(*r.euler_slope);
        std::cout << "\n\n";
        for (const auto& w : r.warnings)
            std::cerr << r.entry << ": " << w << '\n';
    }
    return status;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Picard iteration with certified a-priori error bounds"};
    app.require_subcommand(1);

    std::string config_path, mode, csv, json;
    std::size_t n_max = 0;
    auto* solve = app.add_subcommand("solve", "Run the experiment described by a JSON config");
    solve->add_option("--config", config_path, "Path to the JSON config")->required();
    solve->add_option("--mode", mode, "real-grid | real-exact | complex (overrides the config)");
    solve->add_option("--n-max", n_max, "Number of iterations (overrides the config)");
    solve->add_option("--out-csv", csv, "CSV report path");
    solve->add_option("--out-json", json, "JSON report path");

    std::string registry_name;
    std::size_t bench_n = 10;
    auto* bench = app.add_subcommand("bench", "Compare decay rates on registry problems");
    bench->add_option("--registry", registry_name, "Registry entry name, or 'all'")->required();
    bench->add_option("--n-max", bench_n, "Number of Picard iterations");

    auto* validate = app.add_subcommand("validate", "Check a config against the schema");
    validate->add_option("--config", config_path, "Path to the JSON config")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? picard::exit_ok : picard::exit_config;
    }

    if (*bench)
        return run_bench(registry_name, bench_n);

    picard::RunConfig config;
    try {
        config = picard::load_config(config_path);
        if (*solve) {
            if (!mode.empty())
                config.mode = picard::run_mode_from_string(mode);
            if (solve->count("--n-max"))
                config.n_max = n_max;
            if (!csv.empty())
                config.csv_path = csv;
            if (!json.empty())
                config.json_path = json;
        }
        if (*validate) {
            if (config.mode == picard::RunMode::complex)
                picard::build_complex(config);
            else
                picard::build_real(config);
        }
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return picard::exit_config;
    }
    if (*validate) {
        std::cout << "config ok\n";
        return picard::exit_ok;
    }
    return picard::run_experiment(config, std::cout, std::cerr);
}
