#include "srd/experiment.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "srd/checkpoint.hpp"
#include "srd/metrics.hpp"

namespace fs = std::filesystem;

namespace srd {

namespace {

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string fmt_fraction(double f) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", f);
    return buf;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream in(line);
    std::string cell;
    while (std::getline(in, cell, ',')) out.push_back(cell);
    return out;
}

// Only one thread may pretrain a given teacher at a time.
std::mutex& cache_mutex() {
    static std::mutex m;
    return m;
}

}  // namespace

std::pair<double, double> mean_std(const std::vector<double>& values) {
    if (values.empty()) return {0.0, 0.0};
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    if (values.size() < 2) return {mean, 0.0};
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return {mean, std::sqrt(ss / static_cast<double>(values.size() - 1))};
}

fs::path teacher_cache_dir(const ExperimentConfig& cfg) {
    return cfg.run.teacher_cache.empty() ? fs::path(cfg.run.output_dir) / "teacher_cache" : fs::path(cfg.run.teacher_cache);
}

std::string teacher_cache_key(const ExperimentConfig& cfg, std::uint64_t seed) {
    ExperimentConfig key_cfg;
    key_cfg.dataset = cfg.dataset;
    key_cfg.teacher = cfg.teacher;
    key_cfg.teacher.accuracy_floor = 0.0;  // checked on load, not part of the weights
    key_cfg.model.teacher_depth = cfg.model.teacher_depth;
    key_cfg.model.teacher_width = cfg.model.teacher_width;
    key_cfg.model.batch_norm = cfg.model.batch_norm;
    std::ostringstream text;
    text << describe(key_cfg.dataset) << "|teacher " << key_cfg.model.teacher_depth << 'x'
         << key_cfg.model.teacher_width << " bn=" << key_cfg.model.batch_norm << '|'
         << emit_config(key_cfg).substr(emit_config(key_cfg).find("[teacher]")) << "|seed " << seed;
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(text.str())));
    return buf;
}

Network obtain_teacher(const ExperimentConfig& cfg, const OpenSetDataset& data, std::uint64_t seed,
                       bool* loaded_from_cache) {
    const fs::path dir = teacher_cache_dir(cfg);
    const fs::path path = dir / ("teacher-" + teacher_cache_key(cfg, seed) + ".ckpt");
    std::lock_guard<std::mutex> lock(cache_mutex());
    if (fs::exists(path)) {
        Network teacher = build_pair(pair_spec(cfg, seed)).teacher;
        load_checkpoint(path, teacher.state());
        teacher.freeze();
        if (cfg.teacher.accuracy_floor > 0.0 && cfg.teacher.epochs > 0) {
            const double acc = evaluate_accuracy(teacher, data.test);
            if (acc < cfg.teacher.accuracy_floor) throw AccuracyFloorError(acc, cfg.teacher.accuracy_floor);
        }
        if (loaded_from_cache) *loaded_from_cache = true;
        return teacher;
    }
    Network teacher = pretrain_for_seed(cfg, data, seed);
    fs::create_directories(dir);
    const fs::path tmp = path.string() + ".tmp";
    save_checkpoint(tmp, teacher.state());
    fs::rename(tmp, path);
    if (loaded_from_cache) *loaded_from_cache = false;
    return teacher;
}

RunSummary run(const ExperimentConfig& cfg) { return run(cfg, generate(cfg.dataset)); }

RunSummary run(const ExperimentConfig& cfg, const OpenSetDataset& data) {
    validate(cfg);
    if (!(data.params == cfg.dataset)) throw std::invalid_argument("run: dataset does not match cfg.dataset");
    const fs::path dir = cfg.run.output_dir;
    fs::create_directories(dir / "checkpoints");
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (name == "metrics.csv" || name == "summary.csv" || name == "seeds.csv" || name.rfind("usage", 0) == 0) {
            fs::remove(entry.path());
        }
    }
    write_text(dir / "config.resolved.ini", emit_config(cfg));

    RunSummary summary;
    summary.dir = dir;
    summary.run_id = cfg.run.run_id;
    summary.mode = cfg.run.mode;
    summary.dataset_seed = cfg.dataset.seed;
    summary.use_unlabeled = mode_uses_unlabeled(cfg, data);
    summary.fraction = cfg.run.fraction;
    summary.policy = cfg.run.policy;

    CsvLog metrics(dir / "metrics.csv", kMetricsHeader);
    for (std::uint64_t seed : cfg.run.seeds) {
        Network teacher = obtain_teacher(cfg, data, seed);
        SeedResult res =
            train_with_mode(cfg, data, teacher, seed, [&](const MetricsRecord& r) { metrics.append(to_csv_row(r)); });
        const std::string tag = "seed" + std::to_string(seed);
        if (!res.usage.empty()) {
            CsvLog usage(dir / ("usage_" + tag + ".csv"), kUsageHeader);
            for (const auto& u : res.usage) usage.append(to_csv_row(u));
            write_usage_curve(dir / ("usage_curve_" + tag + ".csv"), res.usage);
        }
        save_checkpoint(dir / "checkpoints" / ("student_" + tag + ".ckpt"), res.student_state);
        if (!res.adaptor_state.empty()) {
            save_checkpoint(dir / "checkpoints" / ("adaptor_" + tag + ".ckpt"), res.adaptor_state);
        }
        summary.seeds.push_back({seed, res.teacher_acc, res.final_acc, res.final_mimicry, res.detector_auc});
    }

    std::vector<double> accs, mims;
    std::ostringstream seeds_csv;
    seeds_csv << kSeedsHeader << '\n';
    for (const auto& s : summary.seeds) {
        accs.push_back(s.final_acc);
        mims.push_back(s.final_mimicry);
        seeds_csv << s.seed << ',' << format_metric(s.teacher_acc) << ',' << format_metric(s.final_acc) << ','
                  << format_metric(s.final_mimicry) << ',' << (s.detector_auc ? format_metric(*s.detector_auc) : "")
                  << '\n';
    }
    std::tie(summary.acc_mean, summary.acc_std) = mean_std(accs);
    std::tie(summary.mimicry_mean, summary.mimicry_std) = mean_std(mims);
    write_text(dir / "seeds.csv", seeds_csv.str());

    std::ostringstream sum_csv;
    sum_csv << kSummaryHeader << '\n'
            << summary.run_id << ',' << to_string(summary.mode) << ',' << summary.dataset_seed << ','
            << (summary.use_unlabeled ? "true" : "false") << ',' << format_metric(summary.fraction) << ','
            << to_string(summary.policy) << ',' << summary.seeds.size() << ',' << format_metric(summary.acc_mean)
            << ',' << format_metric(summary.acc_std) << ',' << format_metric(summary.mimicry_mean) << ','
            << format_metric(summary.mimicry_std) << '\n';
    write_text(dir / "summary.csv", sum_csv.str());
    return summary;
}

bool nondecreasing_with_slack(const std::vector<double>& values, double slack) {
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] < values[i - 1] - slack) return false;
    }
    return true;
}

SweepReport sweep(const ExperimentConfig& cfg) {
    validate(cfg);
    const fs::path base = cfg.run.output_dir;
    const OpenSetDataset data = generate(cfg.dataset);

    std::vector<ExperimentConfig> entries;
    SweepReport report;
    for (SelectionPolicy policy : cfg.sweep.policies) {
        for (double fraction : cfg.sweep.fractions) {
            ExperimentConfig e = cfg;
            const std::string name = to_string(policy) + "-f" + fmt_fraction(fraction);
            e.run.policy = policy;
            e.run.fraction = fraction;
            e.run.use_unlabeled = true;
            e.run.output_dir = (base / name).string();
            e.run.run_id = cfg.run.run_id + "-" + name;
            e.run.teacher_cache = teacher_cache_dir(cfg).string();
            entries.push_back(e);
            report.points.push_back({policy, fraction, {}});
        }
    }
    // Teachers first, so parallel entries only ever read the cache.
    for (std::uint64_t seed : cfg.run.seeds) obtain_teacher(entries.front(), data, seed);

    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(entries.size());
    auto worker = [&] {
        for (std::size_t i = next++; i < entries.size(); i = next++) {
            try {
                report.points[i].summary = run(entries[i], data);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t jobs = std::min(cfg.run.jobs, entries.size());
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    std::ostringstream md, csv;
    csv << "policy,fraction,seeds,acc_mean,acc_std,mimicry_mean\n";
    md << "# Unlabeled-size sweep: " << cfg.run.run_id << "\n\n";
    md << "mode " << to_string(cfg.run.mode) << ", " << cfg.run.seeds.size() << " seed(s)\n\n";
    for (SelectionPolicy policy : cfg.sweep.policies) {
        std::vector<double> accs;
        md << "## " << to_string(policy) << "\n\n| fraction | top-1 mean | top-1 std |\n|---|---|---|\n";
        for (const auto& p : report.points) {
            if (p.policy != policy) continue;
            accs.push_back(p.summary.acc_mean);
            md << "| " << fmt_fraction(p.fraction) << " | " << format_metric(p.summary.acc_mean) << " | "
               << format_metric(p.summary.acc_std) << " |\n";
            csv << to_string(policy) << ',' << format_metric(p.fraction) << ',' << p.summary.seeds.size() << ','
                << format_metric(p.summary.acc_mean) << ',' << format_metric(p.summary.acc_std) << ','
                << format_metric(p.summary.mimicry_mean) << '\n';
        }
        const bool ok = nondecreasing_with_slack(accs, kSweepSlack);
        report.nondecreasing.emplace_back(policy, ok);
        md << "\nnondecreasing (slack 0.2 points): " << (ok ? "yes" : "NO") << "\n\n";
    }
    report.markdown = md.str();
    write_text(base / "sweep.csv", csv.str());
    write_text(base / "sweep_report.md", report.markdown);
    return report;
}

Comparison compare(const std::vector<fs::path>& dirs) {
    if (dirs.size() < 2) throw std::invalid_argument("compare: needs at least two run directories");
    Comparison cmp;
    for (const auto& dir : dirs) {
        if (!fs::is_directory(dir)) throw std::invalid_argument("compare: no such run directory: " + dir.string());
        const fs::path path = dir / "summary.csv";
        std::ifstream in(path);
        if (!in) throw std::invalid_argument("compare: " + dir.string() + " has no summary.csv (run incomplete?)");
        std::string header, line;
        std::getline(in, header);
        std::getline(in, line);
        if (header != kSummaryHeader) throw std::invalid_argument("compare: unexpected header in " + path.string());
        const auto cells = split_csv(line);
        if (cells.size() != 11) throw std::invalid_argument("compare: malformed row in " + path.string());
        ComparisonRow row;
        row.dir = dir;
        row.run_id = cells[0];
        row.mode = cells[1];
        row.dataset_seed = std::stoull(cells[2]);
        row.seeds = std::stoul(cells[6]);
        row.acc_mean = std::stod(cells[7]);
        row.acc_std = std::stod(cells[8]);
        row.mimicry_mean = std::stod(cells[9]);
        row.mimicry_std = std::stod(cells[10]);
        if (!cmp.rows.empty() && row.dataset_seed != cmp.rows.front().dataset_seed) {
            throw std::invalid_argument("compare: " + dir.string() + " used dataset seed " + cells[2] + " but " +
                                        cmp.rows.front().dir.string() + " used " +
                                        std::to_string(cmp.rows.front().dataset_seed) +
                                        "; results on different datasets are not comparable");
        }
        cmp.rows.push_back(row);
    }
    return cmp;
}

std::string Comparison::markdown() const {
    std::ostringstream out;
    out << "| run | mode | seeds | top-1 | mimicry KL |\n|---|---|---|---|---|\n";
    for (const auto& r : rows) {
        out << "| " << r.run_id << " | " << r.mode << " | " << r.seeds << " | " << format_metric(r.acc_mean) << " ± "
            << format_metric(r.acc_std) << " | " << format_metric(r.mimicry_mean) << " ± "
            << format_metric(r.mimicry_std) << " |\n";
    }
    return out.str();
}

std::string Comparison::csv() const {
    std::ostringstream out;
    out << "run_id,mode,dataset_seed,seeds,acc_mean,acc_std,mimicry_mean,mimicry_std\n";
    for (const auto& r : rows) {
        out << r.run_id << ',' << r.mode << ',' << r.dataset_seed << ',' << r.seeds << ',' << format_metric(r.acc_mean)
            << ',' << format_metric(r.acc_std) << ',' << format_metric(r.mimicry_mean) << ','
            << format_metric(r.mimicry_std) << '\n';
    }
    return out.str();
}

}  // namespace srd
