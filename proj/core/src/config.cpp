#include "srd/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace srd {

ConfigError::ConfigError(std::size_t line, const std::string& message)
    : std::runtime_error(line ? "line " + std::to_string(line) + ": " + message : message), line_(line) {}

namespace {

const std::vector<std::pair<TrainMode, const char*>> kModeNames{
    {TrainMode::supervised, "supervised"}, {TrainMode::kd, "kd"},         {TrainMode::srd, "srd"},
    {TrainMode::srd_kd, "srd+kd"},         {TrainMode::kd_ood, "kd+ood"}, {TrainMode::srd_ood, "srd+ood"},
    {TrainMode::kd_dac, "kd+dac"},         {TrainMode::srd_dac, "srd+dac"}, {TrainMode::pseudo_label, "pseudo_label"},
};

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

// Value parsers. They throw std::invalid_argument; the caller attaches the line.
std::uint64_t to_u64(const std::string& text) {
    std::uint64_t v = 0;
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end) throw std::invalid_argument("expected a nonnegative integer, got '" + text + "'");
    return v;
}

std::size_t to_size(const std::string& text) { return static_cast<std::size_t>(to_u64(text)); }

double to_double(const std::string& text) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        throw std::invalid_argument("expected a number, got '" + text + "'");
    }
    if (used != text.size() || !std::isfinite(v)) throw std::invalid_argument("expected a number, got '" + text + "'");
    return v;
}

bool to_bool(const std::string& text) {
    if (text == "true") return true;
    if (text == "false") return false;
    throw std::invalid_argument("expected true or false, got '" + text + "'");
}

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_bool(bool v) { return v ? "true" : "false"; }

template <typename T, typename F>
std::string join(const std::vector<T>& items, F format) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += ", ";
        out += format(items[i]);
    }
    return out;
}

// Range guards.
double nonneg(double v) {
    if (v < 0.0) throw std::invalid_argument("must be nonnegative");
    return v;
}
double positive(double v) {
    if (!(v > 0.0)) throw std::invalid_argument("must be positive");
    return v;
}
double unit_closed(double v) {
    if (v < 0.0 || v > 1.0) throw std::invalid_argument("must lie in [0, 1]");
    return v;
}
double momentum_range(double v) {
    if (v < 0.0 || v >= 1.0) throw std::invalid_argument("must lie in [0, 1)");
    return v;
}
double fraction_range(double v) {
    if (!(v > 0.0 && v <= 1.0)) throw std::invalid_argument("must lie in (0, 1]");
    return v;
}
std::size_t positive_size(std::size_t v) {
    if (v == 0) throw std::invalid_argument("must be positive");
    return v;
}

struct Field {
    const char* section;
    const char* key;
    std::function<void(ExperimentConfig&, const std::string&)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

#define SRD_SIZE(sec, name, member, guard)                                                         \
    Field{sec, name, [](ExperimentConfig& c, const std::string& v) { c.member = guard(to_size(v)); }, \
          [](const ExperimentConfig& c) { return std::to_string(c.member); }}
#define SRD_DOUBLE(sec, name, member, guard)                                                         \
    Field{sec, name, [](ExperimentConfig& c, const std::string& v) { c.member = guard(to_double(v)); }, \
          [](const ExperimentConfig& c) { return fmt_double(c.member); }}
#define SRD_BOOL(sec, name, member)                                                           \
    Field{sec, name, [](ExperimentConfig& c, const std::string& v) { c.member = to_bool(v); }, \
          [](const ExperimentConfig& c) { return fmt_bool(c.member); }}
#define SRD_MILESTONES(sec, member)                                                 \
    Field{sec, "milestones",                                                        \
          [](ExperimentConfig& c, const std::string& v) {                           \
              c.member.clear();                                                     \
              for (const auto& item : split_list(v)) c.member.push_back(to_size(item)); \
              std::sort(c.member.begin(), c.member.end());                          \
          },                                                                        \
          [](const ExperimentConfig& c) { return join(c.member, [](std::size_t m) { return std::to_string(m); }); }}

std::size_t any_size(std::size_t v) { return v; }

std::size_t class_count(std::size_t v) {
    if (v < 2) throw std::invalid_argument("must be at least 2");
    return v;
}

const std::vector<Field>& fields() {
    static const std::vector<Field> table{
        SRD_SIZE("dataset", "num_classes", dataset.num_classes, class_count),
        SRD_SIZE("dataset", "unseen_classes", dataset.unseen_classes, any_size),
        SRD_DOUBLE("dataset", "overlap", dataset.overlap, unit_closed),
        SRD_SIZE("dataset", "labeled_per_class", dataset.labeled_per_class, positive_size),
        SRD_SIZE("dataset", "unlabeled_per_class", dataset.unlabeled_per_class, any_size),
        SRD_SIZE("dataset", "test_per_class", dataset.test_per_class, positive_size),
        SRD_SIZE("dataset", "input_dim", dataset.input_dim, positive_size),
        SRD_SIZE("dataset", "latent_dim", dataset.latent_dim, positive_size),
        SRD_SIZE("dataset", "modes_per_class", dataset.modes_per_class, positive_size),
        SRD_DOUBLE("dataset", "class_spread", dataset.class_spread, positive),
        SRD_DOUBLE("dataset", "noise", dataset.noise, nonneg),
        SRD_DOUBLE("dataset", "ambient_noise", dataset.ambient_noise, nonneg),
        SRD_DOUBLE("dataset", "near_fraction", dataset.near_fraction, unit_closed),
        SRD_DOUBLE("dataset", "near_mix_low", dataset.near_mix_low, unit_closed),
        SRD_DOUBLE("dataset", "near_mix_high", dataset.near_mix_high, unit_closed),
        Field{"dataset", "seed", [](ExperimentConfig& c, const std::string& v) { c.dataset.seed = to_u64(v); },
              [](const ExperimentConfig& c) { return std::to_string(c.dataset.seed); }},

        SRD_SIZE("model", "teacher_depth", model.teacher_depth, positive_size),
        SRD_SIZE("model", "teacher_width", model.teacher_width, positive_size),
        SRD_SIZE("model", "student_depth", model.student_depth, positive_size),
        SRD_SIZE("model", "student_width", model.student_width, positive_size),
        SRD_BOOL("model", "batch_norm", model.batch_norm),
        SRD_BOOL("model", "adaptor_norm", model.adaptor_norm),

        SRD_SIZE("teacher", "epochs", teacher.epochs, any_size),
        SRD_SIZE("teacher", "batch_size", teacher.batch_size, positive_size),
        SRD_DOUBLE("teacher", "lr", teacher.lr, nonneg),
        SRD_DOUBLE("teacher", "momentum", teacher.momentum, momentum_range),
        SRD_DOUBLE("teacher", "weight_decay", teacher.weight_decay, nonneg),
        SRD_MILESTONES("teacher", teacher.milestones),
        SRD_DOUBLE("teacher", "lr_decay", teacher.lr_decay, positive),
        SRD_DOUBLE("teacher", "jitter", teacher.jitter, nonneg),
        SRD_DOUBLE("teacher", "accuracy_floor", teacher.accuracy_floor, unit_closed),

        SRD_SIZE("student", "epochs", student.epochs, positive_size),
        SRD_SIZE("student", "labeled_batch", student.labeled_batch, positive_size),
        SRD_SIZE("student", "unlabeled_batch", student.unlabeled_batch, any_size),
        SRD_DOUBLE("student", "lr", student.lr, nonneg),
        SRD_DOUBLE("student", "momentum", student.momentum, momentum_range),
        SRD_DOUBLE("student", "weight_decay", student.weight_decay, nonneg),
        SRD_MILESTONES("student", student.milestones),
        SRD_DOUBLE("student", "lr_decay", student.lr_decay, positive),
        SRD_DOUBLE("student", "jitter", student.jitter, nonneg),
        SRD_SIZE("student", "report_last", student.report_last, positive_size),

        Field{"srd", "variant", [](ExperimentConfig& c, const std::string& v) { c.srd.variant = parse_srd_variant(v); },
              [](const ExperimentConfig& c) { return to_string(c.srd.variant); }},
        SRD_DOUBLE("srd", "alpha", srd.alpha, nonneg),
        SRD_DOUBLE("srd", "beta", srd.beta, nonneg),
        SRD_DOUBLE("srd", "kd_temperature", srd.kd_temperature, positive),

        SRD_DOUBLE("baselines", "kd_weight", baselines.kd_weight, nonneg),
        SRD_DOUBLE("baselines", "ood_threshold", baselines.ood_threshold, unit_closed),
        SRD_DOUBLE("baselines", "ood_weight", baselines.ood_weight, nonneg),
        SRD_SIZE("baselines", "ood_negatives", baselines.ood_negatives, positive_size),
        SRD_DOUBLE("baselines", "dac_weight", baselines.dac_weight, nonneg),
        SRD_DOUBLE("baselines", "dac_strength", baselines.dac_strength, nonneg),
        SRD_DOUBLE("baselines", "pseudo_weight", baselines.pseudo_weight, nonneg),

        Field{"run", "mode", [](ExperimentConfig& c, const std::string& v) { c.run.mode = parse_train_mode(v); },
              [](const ExperimentConfig& c) { return to_string(c.run.mode); }},
        Field{"run", "seeds",
              [](ExperimentConfig& c, const std::string& v) {
                  c.run.seeds.clear();
                  for (const auto& item : split_list(v)) c.run.seeds.push_back(to_u64(item));
                  if (c.run.seeds.empty()) throw std::invalid_argument("needs at least one seed");
              },
              [](const ExperimentConfig& c) {
                  return join(c.run.seeds, [](std::uint64_t s) { return std::to_string(s); });
              }},
        SRD_BOOL("run", "use_unlabeled", run.use_unlabeled),
        SRD_DOUBLE("run", "fraction", run.fraction, fraction_range),
        Field{"run", "policy", [](ExperimentConfig& c, const std::string& v) { c.run.policy = parse_selection_policy(v); },
              [](const ExperimentConfig& c) { return to_string(c.run.policy); }},
        Field{"run", "output_dir", [](ExperimentConfig& c, const std::string& v) { c.run.output_dir = v; },
              [](const ExperimentConfig& c) { return c.run.output_dir; }},
        Field{"run", "teacher_cache", [](ExperimentConfig& c, const std::string& v) { c.run.teacher_cache = v; },
              [](const ExperimentConfig& c) { return c.run.teacher_cache; }},
        Field{"run", "run_id",
              [](ExperimentConfig& c, const std::string& v) {
                  if (v.find_first_of(", \t") != std::string::npos) throw std::invalid_argument("must not contain commas or spaces");
                  c.run.run_id = v;
              },
              [](const ExperimentConfig& c) { return c.run.run_id; }},
        SRD_SIZE("run", "jobs", run.jobs, positive_size),

        Field{"sweep", "fractions",
              [](ExperimentConfig& c, const std::string& v) {
                  c.sweep.fractions.clear();
                  for (const auto& item : split_list(v)) c.sweep.fractions.push_back(fraction_range(to_double(item)));
              },
              [](const ExperimentConfig& c) { return join(c.sweep.fractions, fmt_double); }},
        Field{"sweep", "policies",
              [](ExperimentConfig& c, const std::string& v) {
                  c.sweep.policies.clear();
                  for (const auto& item : split_list(v)) c.sweep.policies.push_back(parse_selection_policy(item));
              },
              [](const ExperimentConfig& c) {
                  return join(c.sweep.policies, [](SelectionPolicy p) { return to_string(p); });
              }},
    };
    return table;
}

#undef SRD_SIZE
#undef SRD_DOUBLE
#undef SRD_BOOL
#undef SRD_MILESTONES

}  // namespace

std::string to_string(TrainMode mode) {
    for (const auto& [m, name] : kModeNames) {
        if (m == mode) return name;
    }
    return "supervised";
}

TrainMode parse_train_mode(const std::string& text) {
    for (const auto& [m, name] : kModeNames) {
        if (text == name) return m;
    }
    throw std::invalid_argument("unknown mode '" + text + "'");
}

const std::vector<TrainMode>& all_train_modes() {
    static const std::vector<TrainMode> modes = [] {
        std::vector<TrainMode> out;
        for (const auto& entry : kModeNames) out.push_back(entry.first);
        return out;
    }();
    return modes;
}

bool ExperimentConfig::operator==(const ExperimentConfig& o) const {
    return dataset == o.dataset && model == o.model && teacher == o.teacher && student == o.student &&
           srd.variant == o.srd.variant && srd.alpha == o.srd.alpha && srd.beta == o.srd.beta &&
           srd.kd_temperature == o.srd.kd_temperature && baselines == o.baselines && run == o.run && sweep == o.sweep;
}

void validate(const ExperimentConfig& cfg) {
    if (cfg.dataset.num_classes < 2) throw ConfigError(0, "dataset.num_classes must be at least 2");
    if (cfg.dataset.latent_dim > cfg.dataset.input_dim) {
        throw ConfigError(0, "dataset.latent_dim must not exceed dataset.input_dim");
    }
    const std::size_t t = cfg.model.teacher_depth * cfg.model.teacher_width;
    const std::size_t s = cfg.model.student_depth * cfg.model.student_width;
    if (t < s) throw ConfigError(0, "model: teacher capacity must be at least the student's");
    if (cfg.sweep.fractions.empty() || cfg.sweep.policies.empty()) {
        throw ConfigError(0, "sweep: fractions and policies must be non-empty");
    }
}

ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig cfg;
    std::set<std::string> sections;
    for (const auto& f : fields()) sections.insert(f.section);

    std::set<std::string> seen;
    std::string section;
    std::istringstream in(text);
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = raw;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(line_no, "malformed section header '" + line + "'");
            section = trim(line.substr(1, line.size() - 2));
            if (!sections.contains(section)) throw ConfigError(line_no, "unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(line_no, "expected 'key = value', got '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (section.empty()) throw ConfigError(line_no, "key '" + key + "' appears before any [section]");
        const auto it = std::find_if(fields().begin(), fields().end(),
                                     [&](const Field& f) { return section == f.section && key == f.key; });
        if (it == fields().end()) throw ConfigError(line_no, "unknown key '" + key + "' in [" + section + "]");
        if (value.empty()) throw ConfigError(line_no, "missing value for '" + key + "'");
        if (!seen.insert(section + "." + key).second) throw ConfigError(line_no, "duplicate key '" + key + "'");
        try {
            it->set(cfg, value);
        } catch (const std::exception& e) {
            throw ConfigError(line_no, section + "." + key + ": " + e.what());
        }
    }
    validate(cfg);
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(0, "cannot read config file " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string emit_config(const ExperimentConfig& cfg) {
    std::ostringstream out;
    std::string section;
    for (const auto& f : fields()) {
        if (section != f.section) {
            if (!section.empty()) out << '\n';
            section = f.section;
            out << '[' << section << "]\n";
        }
        const std::string value = f.get(cfg);
        // Empty strings are the defaults for optional paths; omitting the key round-trips them.
        if (value.empty()) continue;
        out << f.key << " = " << value << '\n';
    }
    return out.str();
}

}  // namespace srd
