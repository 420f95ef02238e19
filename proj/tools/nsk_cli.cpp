// Command-line front end for the experiment presets. Usage examples:
//   nsk list-presets
//   nsk run lyapunov-sweep --seed 7 --out runs/sweep7
//   nsk run my_config.toml --size small
//   nsk report runs/sweep7

#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include <nsk/presets.hpp>

int main(int argc, char** argv) {
    CLI::App app{"harmonic-analysis experiment harness"};
    app.require_subcommand(1);

    std::string target, out_dir, size = "default";
    nsk::RunOptions opt;

    CLI::App* run = app.add_subcommand("run", "run a preset or a TOML config file");
    run->add_option("target", target, "preset id or config path")->required();
    run->add_option("--seed", opt.seed, "random seed (default 1)");
    run->add_option("--out", out_dir, "output directory (default runs/<name>)");
    run->add_option("--size", size, "grid/horizon scale: default or small")
        ->check(CLI::IsMember({"default", "small"}));

    std::string report_dir;
    CLI::App* report = app.add_subcommand("report", "summarize a finished run directory");
    report->add_option("dir", report_dir, "run directory containing manifest.json")->required();

    CLI::App* list = app.add_subcommand("list-presets", "list the registered presets");

    CLI11_PARSE(app, argc, argv);

    try {
        if (list->parsed()) {
            for (const nsk::ExperimentPreset& p : nsk::preset_registry())
                std::printf("%-18s %s\n", p.id.c_str(), p.description.c_str());
            return 0;
        }
        if (report->parsed()) {
            std::fputs(nsk::emit_report(report_dir).c_str(), stdout);
            return 0;
        }
        opt.out_dir = out_dir;
        opt.small = size == "small";
        nsk::RunOutcome outcome = nsk::run_experiment(target, opt);
        std::fputs(nsk::emit_report(outcome.dir).c_str(), stdout);
        return outcome.passed ? 0 : 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "nsk: %s\n", e.what());
        return 2;
    }
}
