#include <iostream>
#include <string>

#include <CLI11.hpp>

#include <ergolab/runner.hpp>

namespace {

enum Exit { ok = 0, check_failed = 1, bad_config = 2, io_failure = 3, runtime_failure = 4 };

int run_command(const std::string& path, bool check)
{
    const ergolab::ExperimentConfig cfg = ergolab::parse_config(ergolab::read_file(path));
    const ergolab::RunResult r = ergolab::run_experiment(cfg);
    std::cout << ergolab::report_text(r);
    std::cout << "output: " << ergolab::resolve_output(cfg.output).string() << '\n';
    if (check && !r.all_pass()) {
        std::cerr << "check failed: " << (r.checks.size()) << " expectation(s) evaluated, at least one failed\n";
        return check_failed;
    }
    return ok;
}

int reproduce_command(const std::string& dir, std::uint64_t seed)
{
    const auto result = ergolab::reproduce_paper_suite(ergolab::resolve_output(dir), seed);
    std::cout << result.summary_text;
    return result.all_pass() ? ok : check_failed;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"ergolab: empirical probes of physical-measure notions for discrete dynamical systems"};
    app.require_subcommand(1);

    std::string config_path;
    bool check = false;
    auto* run = app.add_subcommand("run", "run the experiment described by a JSON config");
    run->add_option("config", config_path, "path to the config file")->required();
    run->add_flag("--check", check, "exit 1 when any expectation in the config fails");

    auto* list = app.add_subcommand("list-systems", "print every system family with its parameters");

    std::string out_dir;
    std::uint64_t seed = 20240601;
    auto* repro = app.add_subcommand("reproduce-paper", "run the built-in reproduction suite");
    repro->add_option("dir", out_dir, "output directory")->required();
    repro->add_option("--seed", seed, "master seed")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : bad_config;
    }

    try {
        if (*run) return run_command(config_path, check);
        if (*list) {
            std::cout << ergolab::list_systems();
            return ok;
        }
        if (*repro) return reproduce_command(out_dir, seed);
    } catch (const ergolab::config_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return bad_config;
    } catch (const ergolab::io_error& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return io_failure;
    } catch (const ergolab::invalid_argument& e) {
        std::cerr << "invalid argument: " << e.what() << '\n';
        return bad_config;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return runtime_failure;
    }
    return runtime_failure;
}
