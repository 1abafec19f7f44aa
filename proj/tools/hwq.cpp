#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "hwq/errors.hpp"
#include "hwq/runner.hpp"

namespace {

struct Options {
    std::string config_path;
    long long seed = -1;
    std::string out_dir;
    int workers = 0;
};

int run_experiment(const std::string& name, const Options& opt) {
    hwq::ExperimentConfig cfg = hwq::load_config(opt.config_path);
    if (cfg.experiment != name) {
        // the subcommand wins; the config's experiment field is advisory
        cfg.experiment = name;
    }
    if (opt.seed >= 0) cfg.seed = static_cast<std::uint64_t>(opt.seed);
    if (!opt.out_dir.empty()) cfg.out_dir = opt.out_dir;
    if (opt.workers > 0) cfg.workers = opt.workers;
    hwq::RunRecord rec = hwq::run(cfg);
    std::printf("%s: done in %.2f s, record %s\n", name.c_str(), rec.wall_seconds,
                rec.record_path.c_str());
    for (const auto& [file, digest] : rec.digests)
        std::printf("  %s  %s\n", digest.c_str(), file.c_str());
    if (rec.flagged > 0) {
        std::fprintf(stderr, "%s: %d flagged violation(s)\n", name.c_str(), rec.flagged);
        return 4;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Halfin-Whitt many-server queue laboratory"};
    app.require_subcommand(1);

    const char* names[] = {"simulate",  "bound-upper",  "bound-lower",
                           "lindley",   "gaussian",     "fit-exponent",
                           "check-moments", "dominance", "sandwich"};
    Options opt;
    for (const char* name : names) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", opt.config_path, "JSON experiment config")->required();
        sub->add_option("--seed", opt.seed, "master seed (overrides config)");
        sub->add_option("--out", opt.out_dir, "output directory (overrides config)");
        sub->add_option("--workers", opt.workers, "worker threads (overrides config)");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        return run_experiment(app.get_subcommands().front()->get_name(), opt);
    } catch (const hwq::ValidationError& e) {
        std::fprintf(stderr, "validation error: %s\n", e.what());
        return 2;
    } catch (const hwq::NumericError& e) {
        std::fprintf(stderr, "numeric error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
}
