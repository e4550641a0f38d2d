// jumpfb: command-line front end.
//
//   jumpfb run <config.json> [--output-dir DIR]
//   jumpfb validate <config.json>
//   jumpfb version
//
// Exit codes: 0 success, 1 I/O or unexpected failure, 2 configuration error,
// 3 model validation error, 4 numerical failure.

#include "jumpfb/runner.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

int report_error(const char* kind, const std::exception& e, int code) {
    std::cerr << fmt::format("jumpfb: {}: {}\n", kind, e.what());
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Jump-feedback toolkit: steady states, counting statistics and trajectories"};
    app.require_subcommand(1);

    std::string config_path;
    std::string output_dir;
    auto* run = app.add_subcommand("run", "Execute the task described by a config file");
    run->add_option("config", config_path, "JSON config file")->required();
    run->add_option("-o,--output-dir", output_dir, "Override output.directory");

    std::string validate_path;
    auto* validate = app.add_subcommand("validate", "Parse a config file and print its canonical form");
    validate->add_option("config", validate_path, "JSON config file")->required();

    auto* version = app.add_subcommand("version", "Print the toolkit version");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*version) {
            std::cout << "jumpfb " << jumpfb::kVersion << '\n';
            return 0;
        }
        if (*validate) {
            const auto cfg = jumpfb::config::parse_config_text(read_file(validate_path));
            std::cout << cfg.to_json().dump(2) << '\n';
            return 0;
        }
        const auto cfg = jumpfb::config::parse_config_text(read_file(config_path));
        const auto report = jumpfb::runner::run(cfg, output_dir);
        for (const auto& f : report.files) std::cout << (report.directory / f).string() << '\n';
        return 0;
    } catch (const jumpfb::config::ConfigError& e) {
        return report_error("config error", e, 2);
    } catch (const jumpfb::ValidationError& e) {
        return report_error("validation error", e, 3);
    } catch (const jumpfb::DimensionError& e) {
        return report_error("validation error", e, 3);
    } catch (const jumpfb::Error& e) {
        return report_error("numerical error", e, 4);
    } catch (const std::exception& e) {
        return report_error("error", e, 1);
    }
}
