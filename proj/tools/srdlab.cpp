// srdlab command-line front end.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "srd/checkpoint.hpp"
#include "srd/config.hpp"
#include "srd/data.hpp"
#include "srd/distill.hpp"
#include "srd/experiment.hpp"
#include "srd/metrics.hpp"
#include "srd/pipeline.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitFloor = 3;

struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string mode;
    std::optional<double> fraction;
    std::string policy;
};

void add_common(CLI::App* cmd, Overrides& o, bool run_flags) {
    cmd->add_option("--config", o.config, "INI-style experiment config (defaults when omitted)");
    cmd->add_option("--seed", o.seed, "Run this single seed instead of run.seeds");
    cmd->add_option("--out", o.out, "Output directory (run.output_dir)");
    if (run_flags) {
        cmd->add_option("--mode", o.mode, "Training mode override");
        cmd->add_option("--fraction", o.fraction, "Unlabeled fraction override");
        cmd->add_option("--policy", o.policy, "Selection policy: random or teacher_score");
    }
}

srd::ExperimentConfig resolve(const Overrides& o) {
    srd::ExperimentConfig cfg = o.config.empty() ? srd::ExperimentConfig{} : srd::load_config(o.config);
    try {
        if (o.seed) cfg.run.seeds = {*o.seed};
        if (!o.out.empty()) cfg.run.output_dir = o.out;
        if (!o.mode.empty()) cfg.run.mode = srd::parse_train_mode(o.mode);
        if (o.fraction) {
            if (!(*o.fraction > 0.0 && *o.fraction <= 1.0)) throw std::invalid_argument("--fraction must lie in (0, 1]");
            cfg.run.fraction = *o.fraction;
        }
        if (!o.policy.empty()) cfg.run.policy = srd::parse_selection_policy(o.policy);
    } catch (const srd::ConfigError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw srd::ConfigError(0, e.what());
    }
    srd::validate(cfg);
    return cfg;
}

void print_summary(const srd::RunSummary& s) {
    std::printf("%s  mode=%s  seeds=%zu  top1=%s +- %s  mimicry_kl=%s\n", s.dir.string().c_str(),
                srd::to_string(s.mode).c_str(), s.seeds.size(), srd::format_metric(s.acc_mean).c_str(),
                srd::format_metric(s.acc_std).c_str(), srd::format_metric(s.mimicry_mean).c_str());
    for (const auto& seed : s.seeds) {
        std::printf("  seed %llu: teacher %s  student %s  mimicry %s%s\n", static_cast<unsigned long long>(seed.seed),
                    srd::format_metric(seed.teacher_acc).c_str(), srd::format_metric(seed.final_acc).c_str(),
                    srd::format_metric(seed.final_mimicry).c_str(),
                    seed.detector_auc ? ("  detector_auc " + srd::format_metric(*seed.detector_auc)).c_str() : "");
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"srdlab: semantic representational distillation lab"};
    app.require_subcommand(1);

    Overrides gen_o, pre_o, dist_o, sweep_o, dump_o;
    auto* gen = app.add_subcommand("generate-data", "Generate the synthetic open-set dataset");
    add_common(gen, gen_o, false);

    auto* pre = app.add_subcommand("pretrain", "Pretrain (or load cached) teachers for every seed");
    add_common(pre, pre_o, false);

    auto* dist = app.add_subcommand("distill", "Run both stages for the configured mode and seeds");
    add_common(dist, dist_o, true);

    auto* swp = app.add_subcommand("sweep", "Unlabeled-fraction sweep under each selection policy");
    add_common(swp, sweep_o, true);

    std::vector<std::string> compare_dirs;
    std::string compare_csv;
    auto* cmp = app.add_subcommand("compare", "Tabulate completed runs side by side");
    cmp->add_option("dirs", compare_dirs, "Run directories")->required();
    cmp->add_option("--csv", compare_csv, "Also write the table as CSV");

    std::string network = "teacher", checkpoint, split = "test", dump_path;
    auto* dump = app.add_subcommand("dump-features", "Write penultimate features and labels as CSV");
    add_common(dump, dump_o, false);
    dump->add_option("--network", network, "teacher or student")->check(CLI::IsMember({"teacher", "student"}));
    dump->add_option("--checkpoint", checkpoint, "Student checkpoint (required for --network student)");
    dump->add_option("--split", split, "test or labeled")->check(CLI::IsMember({"test", "labeled"}));
    dump->add_option("--file", dump_path, "Output CSV (default <out>/features_<network>.csv)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*gen) {
            const auto cfg = resolve(gen_o);
            const fs::path out = cfg.run.output_dir;
            fs::create_directories(out);
            const auto data = srd::generate(cfg.dataset);
            srd::save_dataset(out / "dataset.bin", data);
            srd::export_dataset_csv(out / "dataset.csv", data);
            std::printf("%s", srd::describe(cfg.dataset).c_str());
            std::printf("labeled %zu  unlabeled %zu  test %zu -> %s\n", data.labeled.size(), data.unlabeled.size(),
                        data.test.size(), out.string().c_str());
        } else if (*pre) {
            const auto cfg = resolve(pre_o);
            const auto data = srd::generate(cfg.dataset);
            for (std::uint64_t seed : cfg.run.seeds) {
                bool cached = false;
                auto teacher = srd::obtain_teacher(cfg, data, seed, &cached);
                std::printf("seed %llu: teacher test top1 %s (%s) key %s\n", static_cast<unsigned long long>(seed),
                            srd::format_metric(srd::evaluate_accuracy(teacher, data.test)).c_str(),
                            cached ? "cached" : "trained", srd::teacher_cache_key(cfg, seed).c_str());
            }
        } else if (*dist) {
            print_summary(srd::run(resolve(dist_o)));
        } else if (*swp) {
            const auto report = srd::sweep(resolve(sweep_o));
            std::printf("%s", report.markdown.c_str());
        } else if (*cmp) {
            std::vector<fs::path> dirs(compare_dirs.begin(), compare_dirs.end());
            const auto table = srd::compare(dirs);
            std::printf("%s", table.markdown().c_str());
            if (!compare_csv.empty()) {
                std::ofstream out(compare_csv);
                out << table.csv();
                if (!out) throw std::runtime_error("cannot write " + compare_csv);
            }
        } else if (*dump) {
            const auto cfg = resolve(dump_o);
            const auto data = srd::generate(cfg.dataset);
            const std::uint64_t seed = cfg.run.seeds.front();
            const srd::LabeledPool& pool = split == "test" ? data.test : data.labeled;
            const fs::path out =
                dump_path.empty() ? fs::path(cfg.run.output_dir) / ("features_" + network + ".csv") : fs::path(dump_path);
            if (out.has_parent_path()) fs::create_directories(out.parent_path());
            if (network == "teacher") {
                auto teacher = srd::obtain_teacher(cfg, data, seed);
                srd::feature_dump(teacher, pool, out);
            } else {
                if (checkpoint.empty()) throw srd::ConfigError(0, "--network student needs --checkpoint");
                auto student = srd::build_pair(srd::pair_spec(cfg, seed)).student;
                srd::load_checkpoint(checkpoint, student.state());
                student.freeze();
                srd::feature_dump(student, pool, out);
            }
            std::printf("%zu rows -> %s\n", pool.size(), out.string().c_str());
        }
    } catch (const srd::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const srd::AccuracyFloorError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitFloor;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
