#include "deferlab/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

#include <yaml-cpp/yaml.h>

#include "deferlab/dataset_io.hpp"
#include "deferlab/parallel.hpp"

namespace deferlab {

void RunConfig::validate() const {
  suite.validate();
  if (surrogates.empty()) throw std::invalid_argument("config: surrogate list is empty");
  if (seeds.empty()) throw std::invalid_argument("config: seed list is empty");
  for (const SurrogateConfig& s : surrogates) s.validate();
  train.validate();
  if (out_dir.empty()) throw std::invalid_argument("config: output directory is empty");
  if (jobs < 1) throw std::invalid_argument("config: jobs must be >= 1");
}

RunConfig default_run_config(SuiteKind suite) {
  RunConfig cfg;
  cfg.suite = SuiteSpec::defaults(suite);
  for (SurrogateKind k : kAllSurrogates) cfg.surrogates.push_back(SurrogateConfig{k});
  return cfg;
}

namespace {

void check_keys(const YAML::Node& node, std::string_view where, const std::set<std::string>& allowed) {
  if (!node.IsMap()) throw std::invalid_argument("config: '" + std::string(where) + "' must be a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key))
      throw std::invalid_argument("config: unknown key '" + key + "' in " + std::string(where));
  }
}

template <typename T>
void read(const YAML::Node& node, const char* key, T& into) {
  if (const YAML::Node v = node[key]) into = v.as<T>();
}

}  // namespace

RunConfig parse_run_config(std::string_view yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(yaml_text));
  } catch (const YAML::Exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  if (root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
  check_keys(root, "top level", {"suite", "surrogates", "seeds", "train", "beta", "out", "jobs"});

  RunConfig cfg;
  try {
    SuiteKind kind = SuiteKind::NestedRedundant;
    const YAML::Node suite = root["suite"];
    if (suite) {
      check_keys(suite, "suite",
                 {"name", "K", "J", "n_train", "n_val", "n_test", "expert_rate", "offregion_rate"});
      if (suite["name"]) kind = parse_suite(suite["name"].as<std::string>());
    }
    cfg = default_run_config(kind);
    if (suite) {
      read(suite, "K", cfg.suite.K);
      read(suite, "J", cfg.suite.J);
      read(suite, "n_train", cfg.suite.n_train);
      read(suite, "n_val", cfg.suite.n_val);
      read(suite, "n_test", cfg.suite.n_test);
      read(suite, "expert_rate", cfg.suite.expert_rate);
      read(suite, "offregion_rate", cfg.suite.offregion_rate);
    }

    double beta = SurrogateConfig{}.beta;
    read(root, "beta", beta);
    if (const YAML::Node list = root["surrogates"]) {
      if (!list.IsSequence()) throw std::invalid_argument("config: 'surrogates' must be a list");
      cfg.surrogates.clear();
      for (const auto& item : list) {
        SurrogateConfig sc;
        sc.beta = beta;
        if (item.IsScalar()) {
          sc.kind = parse_surrogate(item.as<std::string>());
        } else {
          check_keys(item, "surrogates entry", {"kind", "beta"});
          sc.kind = parse_surrogate(item["kind"].as<std::string>());
          read(item, "beta", sc.beta);
        }
        cfg.surrogates.push_back(sc);
      }
    } else {
      for (SurrogateConfig& sc : cfg.surrogates) sc.beta = beta;
    }

    if (const YAML::Node seeds = root["seeds"]) cfg.seeds = seeds.as<std::vector<std::uint64_t>>();

    if (const YAML::Node train = root["train"]) {
      check_keys(train, "train", {"lr", "epochs", "batch_size", "init", "optimizer"});
      read(train, "lr", cfg.train.lr);
      read(train, "epochs", cfg.train.epochs);
      read(train, "batch_size", cfg.train.batch_size);
      if (train["init"]) cfg.train.init = parse_init(train["init"].as<std::string>());
      if (const YAML::Node opt = train["optimizer"]) {
        if (opt.IsScalar()) {
          cfg.train.optimizer.kind = parse_optimizer(opt.as<std::string>());
        } else {
          check_keys(opt, "train.optimizer",
                     {"kind", "momentum", "beta1", "beta2", "eps", "weight_decay"});
          if (opt["kind"]) cfg.train.optimizer.kind = parse_optimizer(opt["kind"].as<std::string>());
          read(opt, "momentum", cfg.train.optimizer.momentum);
          read(opt, "beta1", cfg.train.optimizer.beta1);
          read(opt, "beta2", cfg.train.optimizer.beta2);
          read(opt, "eps", cfg.train.optimizer.eps);
          read(opt, "weight_decay", cfg.train.optimizer.weight_decay);
        }
      }
    }
    if (root["out"]) cfg.out_dir = root["out"].as<std::string>();
    read(root, "jobs", cfg.jobs);
  } catch (const YAML::Exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return parse_run_config(io::read_file(path));
}

nlohmann::json run_config_to_json(const RunConfig& cfg) {
  nlohmann::json surrogates = nlohmann::json::array();
  for (const SurrogateConfig& s : cfg.surrogates)
    surrogates.push_back({{"kind", std::string(to_string(s.kind))},
                          {"beta", s.beta},
                          {"tie_break", "lowest_index"}});
  const OptimizerConfig& o = cfg.train.optimizer;
  return nlohmann::json{
      {"suite", io::spec_to_json(cfg.suite)},
      {"surrogates", surrogates},
      {"seeds", cfg.seeds},
      {"train",
       {{"lr", cfg.train.lr},
        {"epochs", cfg.train.epochs},
        {"batch_size", cfg.train.batch_size},
        {"init", std::string(to_string(cfg.train.init))},
        {"optimizer",
         {{"kind", std::string(to_string(o.kind))},
          {"momentum", o.momentum},
          {"beta1", o.beta1},
          {"beta2", o.beta2},
          {"eps", o.eps},
          {"weight_decay", o.weight_decay}}}}},
      {"out", cfg.out_dir.generic_string()},
      {"jobs", cfg.jobs}};
}

RunRecord run_one(const RunConfig& cfg, const SurrogateConfig& surrogate, std::uint64_t seed,
                  TrainResult* trained) {
  SuiteSpec spec = cfg.suite;
  spec.seed = seed;
  const SuiteData data = generate_all(spec);
  TrainConfig tc = cfg.train;
  tc.seed = seed;
  tc.surrogate = surrogate;
  TrainResult result = train(data.train, data.val, tc);
  RunRecord rec;
  rec.suite = spec.suite;
  rec.surrogate = surrogate.kind;
  rec.beta = surrogate.beta;
  rec.seed = seed;
  rec.J = spec.J;
  rec.best_epoch = result.history.best_epoch;
  rec.metrics = evaluate(result.model, surrogate, data.test);
  if (trained) *trained = std::move(result);
  return rec;
}

namespace {

struct Job {
  std::size_t surrogate;
  std::uint64_t seed;
};

std::vector<Job> jobs_of(const RunConfig& cfg) {
  std::vector<Job> jobs;
  for (std::size_t s = 0; s < cfg.surrogates.size(); ++s)
    for (std::uint64_t seed : cfg.seeds) jobs.push_back({s, seed});
  return jobs;
}

std::string opt_cell(const std::optional<double>& v) {
  return v ? io::format_double(*v) : std::string();
}

nlohmann::json metrics_json(const RunRecord& r) {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); };
  return nlohmann::json{{"suite", std::string(to_string(r.suite))},
                        {"surrogate", std::string(to_string(r.surrogate))},
                        {"seed", r.seed},
                        {"J", r.J},
                        {"best_epoch", r.best_epoch},
                        {"system_accuracy", r.metrics.system_accuracy},
                        {"defer_loss", r.metrics.empirical_defer_loss},
                        {"coverage", r.metrics.coverage},
                        {"exact_regret", r.metrics.exact_regret},
                        {"specialist_selection", opt(r.metrics.specialist_selection)},
                        {"shared_correct_routing", opt(r.metrics.shared_correct_routing)},
                        {"best_expert_selection", opt(r.metrics.best_expert_selection)}};
}

const std::vector<std::string>& metric_columns() {
  static const std::vector<std::string> cols{
      "system_accuracy", "defer_loss",       "coverage",
      "exact_regret",    "specialist_selection", "shared_correct_routing",
      "best_expert_selection"};
  return cols;
}

std::vector<std::optional<double>> metric_values(const Metrics& m) {
  return {m.system_accuracy, m.empirical_defer_loss, m.coverage, m.exact_regret,
          m.specialist_selection, m.shared_correct_routing, m.best_expert_selection};
}

struct MeanStd {
  std::size_t n = 0;
  double mean = 0.0;
  double std = 0.0;
};

MeanStd mean_std(const std::vector<double>& v) {
  MeanStd out;
  out.n = v.size();
  if (v.empty()) return out;
  double s = 0.0;
  for (double x : v) s += x;
  out.mean = s / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - out.mean) * (x - out.mean);
  out.std = std::sqrt(ss / static_cast<double>(v.size()));
  return out;
}

}  // namespace

std::vector<RunRecord> run_suite(const RunConfig& cfg) {
  cfg.validate();
  const std::vector<Job> jobs = jobs_of(cfg);
  std::vector<RunRecord> records(jobs.size());
  parallel_for(jobs.size(), cfg.jobs, [&](std::size_t i) {
    records[i] = run_one(cfg, cfg.surrogates[jobs[i].surrogate], jobs[i].seed);
  });
  return records;
}

std::string metrics_csv(const std::vector<RunRecord>& records) {
  std::string out = "suite,surrogate,seed,J";
  for (const std::string& c : metric_columns()) out += ',' + c;
  out += '\n';
  for (const RunRecord& r : records) {
    out += std::string(to_string(r.suite)) + ',' + std::string(to_string(r.surrogate)) + ',' +
           std::to_string(r.seed) + ',' + std::to_string(r.J);
    for (const auto& v : metric_values(r.metrics)) out += ',' + opt_cell(v);
    out += '\n';
  }
  return out;
}

nlohmann::json summarize(const RunConfig& cfg, const std::vector<RunRecord>& records) {
  struct Group {
    SurrogateKind kind;
    double beta;
    std::vector<std::vector<double>> values;
  };
  std::vector<Group> groups;
  for (const RunRecord& r : records) {
    auto it = std::find_if(groups.begin(), groups.end(), [&](const Group& g) {
      return g.kind == r.surrogate && g.beta == r.beta;
    });
    if (it == groups.end()) {
      groups.push_back({r.surrogate, r.beta, std::vector<std::vector<double>>(metric_columns().size())});
      it = groups.end() - 1;
    }
    const auto vals = metric_values(r.metrics);
    for (std::size_t c = 0; c < vals.size(); ++c)
      if (vals[c]) it->values[c].push_back(*vals[c]);
  }
  const std::size_t regret_col = 3;
  std::stable_sort(groups.begin(), groups.end(), [&](const Group& a, const Group& b) {
    return mean_std(a.values[regret_col]).mean < mean_std(b.values[regret_col]).mean;
  });
  nlohmann::json rows = nlohmann::json::array();
  for (const Group& g : groups) {
    nlohmann::json row{{"surrogate", std::string(to_string(g.kind))},
                       {"beta", g.beta},
                       {"runs", g.values[regret_col].size()}};
    for (std::size_t c = 0; c < metric_columns().size(); ++c) {
      if (g.values[c].empty()) {
        row[metric_columns()[c]] = nullptr;
        continue;
      }
      const MeanStd ms = mean_std(g.values[c]);
      row[metric_columns()[c]] = {{"mean", ms.mean}, {"std", ms.std}, {"n", ms.n}};
    }
    rows.push_back(row);
  }
  return nlohmann::json{{"config", run_config_to_json(cfg)}, {"ranking", "mean exact_regret, ascending"}, {"surrogates", rows}};
}

std::filesystem::path cmd_generate(const SuiteSpec& spec, const std::filesystem::path& out_dir) {
  spec.validate();
  const SuiteData data = generate_all(spec);
  const std::string stem = std::string(to_string(spec.suite)) + "_seed" + std::to_string(spec.seed);
  const std::filesystem::path csv = out_dir / (stem + ".csv");
  io::write_atomic(csv, io::dataset_csv(data));
  io::write_atomic(out_dir / (stem + ".json"), io::spec_to_json(spec).dump(2) + "\n");
  return csv;
}

std::vector<RunRecord> cmd_suite(const RunConfig& cfg) {
  cfg.validate();
  const std::vector<Job> jobs = jobs_of(cfg);
  std::vector<RunRecord> records(jobs.size());
  parallel_for(jobs.size(), cfg.jobs, [&](std::size_t i) {
    const SurrogateConfig& sc = cfg.surrogates[jobs[i].surrogate];
    TrainResult trained;
    records[i] = run_one(cfg, sc, jobs[i].seed, &trained);
    const std::filesystem::path dir = cfg.out_dir / "runs" /
        (std::string(to_string(sc.kind)) + "_" + std::to_string(jobs[i].surrogate) + "_seed" +
         std::to_string(jobs[i].seed));
    io::write_atomic(dir / "model.json", io::model_to_json(trained.model).dump() + "\n");
    io::write_atomic(dir / "history.csv", io::history_csv(trained.history));
    io::write_atomic(dir / "metrics.json", metrics_json(records[i]).dump(2) + "\n");
  });
  io::write_atomic(cfg.out_dir / "metrics.csv", metrics_csv(records));
  io::write_atomic(cfg.out_dir / "summary.json", summarize(cfg, records).dump(2) + "\n");
  return records;
}

ProbeConfig probe_config(ProbeKind probe, const RunConfig& cfg, bool use_cfg_seeds) {
  ProbeConfig pc = ProbeConfig::defaults(probe);
  if (use_cfg_seeds) pc.seeds = cfg.seeds;
  pc.train = cfg.train;
  pc.jobs = cfg.jobs;
  return pc;
}

std::filesystem::path cmd_diagnose(ProbeKind probe, const RunConfig& cfg, bool use_cfg_seeds) {
  const GeometryReport report = run_probe(probe, probe_config(probe, cfg, use_cfg_seeds));
  const std::filesystem::path path =
      cfg.out_dir / ("geometry_" + std::string(to_string(probe)) + ".csv");
  io::write_atomic(path, geometry_csv(report));
  return path;
}

std::string cmd_constants(int K, int J, double beta) {
  if (K < 1 || J < 1) throw std::invalid_argument("constants: K and J must be positive");
  if (!(beta > 0.0)) throw std::invalid_argument("constants: beta must be positive");
  std::string out = "surrogate,K,J,beta,constant\n";
  for (SurrogateKind k : kAllSurrogates) {
    const auto c = transfer_constant(k, beta, K, J);
    out += std::string(to_string(k)) + ',' + std::to_string(K) + ',' + std::to_string(J) + ',' +
           io::format_double(beta) + ',' + (c ? io::format_double(*c) : std::string()) + '\n';
  }
  return out;
}

std::string cmd_report(const std::vector<std::filesystem::path>& metrics_files) {
  if (metrics_files.empty()) throw std::invalid_argument("report: no metrics files given");
  struct Key {
    std::string suite, surrogate;
    int J;
    auto operator<=>(const Key&) const = default;
  };
  std::map<Key, std::vector<std::vector<double>>> groups;
  const auto& cols = metric_columns();
  for (const auto& path : metrics_files) {
    const io::CsvTable t = io::parse_csv(io::read_file(path));
    const int c_suite = t.column("suite"), c_sur = t.column("surrogate"), c_j = t.column("J");
    if (c_suite < 0 || c_sur < 0 || c_j < 0)
      throw std::invalid_argument("report: " + path.string() + " is not a metrics CSV");
    std::vector<int> idx;
    for (const std::string& c : cols) idx.push_back(t.column(c));
    for (const auto& row : t.rows) {
      Key key{row.at(static_cast<std::size_t>(c_suite)), row.at(static_cast<std::size_t>(c_sur)),
              std::stoi(row.at(static_cast<std::size_t>(c_j)))};
      auto& g = groups[key];
      if (g.empty()) g.resize(cols.size());
      for (std::size_t c = 0; c < cols.size(); ++c) {
        if (idx[c] < 0) continue;
        const std::string& cell = row.at(static_cast<std::size_t>(idx[c]));
        if (!cell.empty()) g[c].push_back(std::stod(cell));
      }
    }
  }
  std::vector<std::pair<Key, std::vector<MeanStd>>> table;
  for (const auto& [key, vals] : groups) {
    std::vector<MeanStd> ms;
    for (const auto& v : vals) ms.push_back(mean_std(v));
    table.emplace_back(key, std::move(ms));
  }
  std::stable_sort(table.begin(), table.end(), [](const auto& a, const auto& b) {
    if (a.first.suite != b.first.suite) return a.first.suite < b.first.suite;
    if (a.first.J != b.first.J) return a.first.J < b.first.J;
    return a.second[3].mean < b.second[3].mean;
  });
  std::string out = "suite,surrogate,J,runs";
  for (const std::string& c : cols) out += ',' + c + "_mean," + c + "_std";
  out += '\n';
  for (const auto& [key, ms] : table) {
    out += key.suite + ',' + key.surrogate + ',' + std::to_string(key.J) + ',' +
           std::to_string(ms[3].n);
    for (const MeanStd& m : ms) {
      if (m.n == 0)
        out += ",,";
      else
        out += ',' + io::format_double(m.mean) + ',' + io::format_double(m.std);
    }
    out += '\n';
  }
  return out;
}

nlohmann::json error_json(std::string_view command, std::string_view message) {
  return nlohmann::json{{"status", "error"},
                        {"command", std::string(command)},
                        {"message", std::string(message)}};
}

}  // namespace deferlab
