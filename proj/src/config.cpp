#include "wefsim/config.hpp"

#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "wefsim/errors.hpp"
#include "wefsim/output.hpp"

namespace wefsim {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
    return s.substr(b, e - b);
}

struct KeyContext {
    const std::string& origin;
    int line;

    [[noreturn]] void fail(const std::string& msg) const {
        throw parse_error(origin + ":" + std::to_string(line) + ": " + msg);
    }
};

double to_double(const std::string& v, const KeyContext& ctx) {
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0') ctx.fail("expected a number, got '" + v + "'");
    return x;
}

int to_int(const std::string& v, const KeyContext& ctx) {
    char* end = nullptr;
    const long x = std::strtol(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0') ctx.fail("expected an integer, got '" + v + "'");
    return static_cast<int>(x);
}

std::uint64_t to_u64(const std::string& v, const KeyContext& ctx) {
    char* end = nullptr;
    const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0') ctx.fail("expected an unsigned integer, got '" + v + "'");
    return static_cast<std::uint64_t>(x);
}

bool to_bool(const std::string& v, const KeyContext& ctx) {
    if (v == "true") return true;
    if (v == "false") return false;
    ctx.fail("expected true or false, got '" + v + "'");
}

std::vector<int> to_int_list(const std::string& v, const KeyContext& ctx) {
    std::vector<int> out;
    if (trim(v).empty()) return out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_int(trim(item), ctx));
    return out;
}

std::vector<double> to_double_list(const std::string& v, const KeyContext& ctx) {
    std::vector<double> out;
    if (trim(v).empty()) return out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_double(trim(item), ctx));
    return out;
}

AttackKind to_attack_kind(const std::string& v, const KeyContext& ctx) {
    if (v == "ordinary") return AttackKind::ordinary;
    if (v == "random_weight") return AttackKind::random_weight;
    if (v == "stochastic_perturbation") return AttackKind::stochastic_perturbation;
    if (v == "delta_weight") return AttackKind::delta_weight;
    if (v == "adaptive") return AttackKind::adaptive;
    ctx.fail("unknown attack kind '" + v + "'");
}

const char* attack_kind_name(AttackKind k) {
    switch (k) {
        case AttackKind::ordinary: return "ordinary";
        case AttackKind::random_weight: return "random_weight";
        case AttackKind::stochastic_perturbation: return "stochastic_perturbation";
        case AttackKind::delta_weight: return "delta_weight";
        case AttackKind::adaptive: return "adaptive";
    }
    return "ordinary";
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin) {
    ExperimentConfig cfg;
    std::stringstream in(text);
    std::string line;
    std::string section;
    int line_no = 0;

    while (std::getline(in, line)) {
        ++line_no;
        const KeyContext ctx{origin, line_no};
        std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']') ctx.fail("unterminated section header");
            section = trim(t.substr(1, t.size() - 2));
            continue;
        }
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos) ctx.fail("expected key = value");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));

        if (section == "data") {
            if (key == "source") {
                if (value == "synthetic") {
                    cfg.use_csv = false;
                } else if (value == "csv") {
                    cfg.use_csv = true;
                } else {
                    ctx.fail("source must be synthetic or csv");
                }
            } else if (key == "csv_path") {
                cfg.csv_path = value;
            } else if (key == "synthetic_samples") {
                cfg.synthetic.samples = to_int(value, ctx);
            } else if (key == "synthetic_features") {
                cfg.synthetic.features = to_int(value, ctx);
            } else if (key == "synthetic_separation") {
                cfg.synthetic.separation = to_double(value, ctx);
            } else if (key == "synthetic_noise") {
                cfg.synthetic.noise = to_double(value, ctx);
            } else if (key == "test_fraction") {
                cfg.test_fraction = to_double(value, ctx);
            } else if (key == "normalize") {
                cfg.normalize = to_bool(value, ctx);
            } else if (key == "distribution") {
                if (value == "iid") {
                    cfg.distribution = DistributionKind::iid;
                } else if (value == "dirichlet") {
                    cfg.distribution = DistributionKind::dirichlet;
                } else {
                    ctx.fail("distribution must be iid or dirichlet");
                }
            } else if (key == "dirichlet_beta") {
                cfg.dirichlet_beta = to_double(value, ctx);
            } else {
                ctx.fail("unknown key '" + key + "' in [data]");
            }
        } else if (section == "model") {
            if (key == "hidden_layers") {
                cfg.hidden_layers = to_int_list(value, ctx);
            } else {
                ctx.fail("unknown key '" + key + "' in [model]");
            }
        } else if (section == "train") {
            if (key == "learning_rate") {
                cfg.train.learning_rate = to_double(value, ctx);
            } else if (key == "momentum") {
                cfg.train.momentum = to_double(value, ctx);
            } else if (key == "batch_size") {
                cfg.train.batch_size = to_int(value, ctx);
            } else if (key == "local_epochs") {
                cfg.train.local_epochs = to_int(value, ctx);
            } else {
                ctx.fail("unknown key '" + key + "' in [train]");
            }
        } else if (section == "federation") {
            if (key == "clients") {
                cfg.clients = to_int(value, ctx);
            } else if (key == "rounds") {
                cfg.rounds = to_int(value, ctx);
            } else if (key == "free_rider_ratio") {
                cfg.free_rider_ratio = to_double(value, ctx);
            } else {
                ctx.fail("unknown key '" + key + "' in [federation]");
            }
        } else if (section == "attack") {
            if (key == "kind") {
                cfg.attack.kind = to_attack_kind(value, ctx);
            } else if (key == "random_weight_range") {
                cfg.attack.random_range = to_double(value, ctx);
            } else if (key == "perturbation_sigma") {
                cfg.attack.perturbation_sigma = to_double(value, ctx);
            } else if (key == "adaptive_schedule") {
                cfg.attack.adaptive_schedule = to_double_list(value, ctx);
            } else if (key == "adaptive_delta_base") {
                cfg.attack.adaptive_delta_base = to_bool(value, ctx);
            } else {
                ctx.fail("unknown key '" + key + "' in [attack]");
            }
        } else if (section == "defense") {
            if (key == "mode") {
                if (value == "wef_defense") {
                    cfg.defense_mode = DefenseMode::wef_defense;
                } else if (value == "fedavg_undefended") {
                    cfg.defense_mode = DefenseMode::fedavg_undefended;
                } else {
                    ctx.fail("mode must be wef_defense or fedavg_undefended");
                }
            } else if (key == "epsilon") {
                cfg.epsilon = to_double(value, ctx);
            } else {
                ctx.fail("unknown key '" + key + "' in [defense]");
            }
        } else if (section == "run") {
            if (key == "master_seed") {
                cfg.master_seed = to_u64(value, ctx);
            } else if (key == "snapshot_rounds") {
                cfg.snapshot_rounds = to_int_list(value, ctx);
            } else if (key == "threads") {
                cfg.threads = to_int(value, ctx);
            } else {
                ctx.fail("unknown key '" + key + "' in [run]");
            }
        } else if (section == "manifest") {
            // informational keys written by cmd_run; accepted so a manifest
            // is a valid config
            if (key != "tool" && key != "version" && key != "outputs") {
                ctx.fail("unknown key '" + key + "' in [manifest]");
            }
        } else if (section.empty()) {
            ctx.fail("key outside any section");
        } else {
            ctx.fail("unknown section [" + section + "]");
        }
    }
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw parse_error(path + ": cannot open file");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), path);
}

namespace {

std::string join_ints(const std::vector<int>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(v[i]);
    }
    return out;
}

std::string join_doubles(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += format_double(v[i]);
    }
    return out;
}

}  // namespace

std::string serialize_config(const ExperimentConfig& cfg) {
    std::ostringstream out;
    out << "[data]\n";
    out << "source = " << (cfg.use_csv ? "csv" : "synthetic") << "\n";
    if (cfg.use_csv) out << "csv_path = " << cfg.csv_path << "\n";
    out << "synthetic_samples = " << cfg.synthetic.samples << "\n";
    out << "synthetic_features = " << cfg.synthetic.features << "\n";
    out << "synthetic_separation = " << format_double(cfg.synthetic.separation) << "\n";
    out << "synthetic_noise = " << format_double(cfg.synthetic.noise) << "\n";
    out << "test_fraction = " << format_double(cfg.test_fraction) << "\n";
    out << "normalize = " << (cfg.normalize ? "true" : "false") << "\n";
    out << "distribution = "
        << (cfg.distribution == DistributionKind::iid ? "iid" : "dirichlet") << "\n";
    out << "dirichlet_beta = " << format_double(cfg.dirichlet_beta) << "\n";
    out << "\n[model]\n";
    out << "hidden_layers = " << join_ints(cfg.hidden_layers) << "\n";
    out << "\n[train]\n";
    out << "learning_rate = " << format_double(cfg.train.learning_rate) << "\n";
    out << "momentum = " << format_double(cfg.train.momentum) << "\n";
    out << "batch_size = " << cfg.train.batch_size << "\n";
    out << "local_epochs = " << cfg.train.local_epochs << "\n";
    out << "\n[federation]\n";
    out << "clients = " << cfg.clients << "\n";
    out << "rounds = " << cfg.rounds << "\n";
    out << "free_rider_ratio = " << format_double(cfg.free_rider_ratio) << "\n";
    out << "\n[attack]\n";
    out << "kind = " << attack_kind_name(cfg.attack.kind) << "\n";
    out << "random_weight_range = " << format_double(cfg.attack.random_range) << "\n";
    out << "perturbation_sigma = " << format_double(cfg.attack.perturbation_sigma) << "\n";
    out << "adaptive_schedule = " << join_doubles(cfg.attack.adaptive_schedule) << "\n";
    out << "adaptive_delta_base = " << (cfg.attack.adaptive_delta_base ? "true" : "false") << "\n";
    out << "\n[defense]\n";
    out << "mode = "
        << (cfg.defense_mode == DefenseMode::wef_defense ? "wef_defense" : "fedavg_undefended")
        << "\n";
    out << "epsilon = " << format_double(cfg.epsilon) << "\n";
    out << "\n[run]\n";
    out << "master_seed = " << cfg.master_seed << "\n";
    out << "snapshot_rounds = " << join_ints(cfg.snapshot_rounds) << "\n";
    out << "threads = " << cfg.threads << "\n";
    return out.str();
}

std::string serialize_manifest(const ExperimentConfig& cfg) {
    std::ostringstream out;
    out << "[manifest]\n";
    out << "tool = wefsim\n";
    out << "version = " << kToolVersion << "\n";
    out << "outputs = results.csv,summary.json,snapshots\n\n";
    out << serialize_config(cfg);
    return out.str();
}

}  // namespace wefsim
