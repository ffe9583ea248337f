#include "cvgp/config.hpp"

#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "textio.hpp"

namespace cvgp {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_commas(std::string_view s) {
  std::vector<std::string_view> out;
  if (trim(s).empty()) return out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(',', start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

Index parse_index(std::string_view v, const std::string& key) {
  return static_cast<Index>(textio::parse_int(v, "config key '" + key + "'"));
}

double parse_real(std::string_view v, const std::string& key) {
  return textio::parse_finite(v, "config key '" + key + "'");
}

std::vector<Index> parse_index_list(std::string_view v, const std::string& key) {
  std::vector<Index> out;
  for (auto t : split_commas(v)) out.push_back(parse_index(t, key));
  return out;
}

std::string render_list(const std::vector<Index>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(v[i]);
  }
  return s;
}

struct Field {
  std::function<void(ExperimentConfig&, std::string_view, const std::string&)> parse;
  std::function<std::string(const ExperimentConfig&)> render;
};

// Ordered so render() emits a stable layout.
const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = [] {
    std::vector<std::pair<std::string, Field>> t;
    auto index_field = [&](const char* key, Index ExperimentConfig::*member) {
      t.push_back({key, Field{[member](ExperimentConfig& c, std::string_view v, const std::string& k) {
                                c.*member = parse_index(v, k);
                              },
                              [member](const ExperimentConfig& c) { return std::to_string(c.*member); }}});
    };
    auto int_field = [&](const char* key, int ExperimentConfig::*member) {
      t.push_back({key, Field{[member](ExperimentConfig& c, std::string_view v, const std::string& k) {
                                c.*member = static_cast<int>(parse_index(v, k));
                              },
                              [member](const ExperimentConfig& c) { return std::to_string(c.*member); }}});
    };
    auto real_field = [&](const char* key, double ExperimentConfig::*member) {
      t.push_back({key, Field{[member](ExperimentConfig& c, std::string_view v, const std::string& k) {
                                c.*member = parse_real(v, k);
                              },
                              [member](const ExperimentConfig& c) { return textio::fmt(c.*member); }}});
    };
    auto string_field = [&](const char* key, std::string ExperimentConfig::*member) {
      t.push_back({key, Field{[member](ExperimentConfig& c, std::string_view v, const std::string&) {
                                c.*member = std::string(v);
                              },
                              [member](const ExperimentConfig& c) { return c.*member; }}});
    };
    auto list_field = [&](const char* key, std::vector<Index> ExperimentConfig::*member) {
      t.push_back({key, Field{[member](ExperimentConfig& c, std::string_view v, const std::string& k) {
                                c.*member = parse_index_list(v, k);
                              },
                              [member](const ExperimentConfig& c) { return render_list(c.*member); }}});
    };

    t.push_back({"data_source", Field{[](ExperimentConfig& c, std::string_view v, const std::string&) {
                                        if (v == "morlet") c.data_source = DataSource::Morlet;
                                        else if (v == "files") c.data_source = DataSource::Files;
                                        else throw ValidationError("config key 'data_source' must be morlet or files");
                                      },
                                      [](const ExperimentConfig& c) {
                                        return std::string(c.data_source == DataSource::Morlet ? "morlet" : "files");
                                      }}});
    string_field("train_file", &ExperimentConfig::train_file);
    string_field("test_file", &ExperimentConfig::test_file);
    string_field("test_fine_file", &ExperimentConfig::test_fine_file);
    index_field("n_snapshots", &ExperimentConfig::n_snapshots);
    index_field("grid_intervals", &ExperimentConfig::grid_intervals);
    index_field("fine_grid_intervals", &ExperimentConfig::fine_grid_intervals);
    index_field("n_train", &ExperimentConfig::n_train);
    real_field("noise", &ExperimentConfig::noise);
    index_field("n_pod", &ExperimentConfig::n_pod);
    real_field("eps_pod", &ExperimentConfig::eps_pod);
    int_field("gpr_restarts", &ExperimentConfig::gpr_restarts);
    int_field("gpr_max_iterations", &ExperimentConfig::gpr_max_iterations);
    list_field("hidden", &ExperimentConfig::hidden);
    t.push_back({"lr_schedule", Field{[](ExperimentConfig& c, std::string_view v, const std::string& k) {
                                        c.lr_schedule.clear();
                                        for (auto item : split_commas(v)) {
                                          auto colon = item.find(':');
                                          if (colon == std::string_view::npos) {
                                            throw ValidationError("config key 'lr_schedule' entries must be lr:count");
                                          }
                                          c.lr_schedule.push_back(
                                              {parse_real(trim(item.substr(0, colon)), k),
                                               parse_index(trim(item.substr(colon + 1)), k)});
                                        }
                                      },
                                      [](const ExperimentConfig& c) {
                                        std::string s;
                                        for (std::size_t i = 0; i < c.lr_schedule.size(); ++i) {
                                          if (i) s += ',';
                                          s += textio::fmt(c.lr_schedule[i].lr) + ':' +
                                               std::to_string(c.lr_schedule[i].count);
                                        }
                                        return s;
                                      }}});
    t.push_back({"schedule_unit", Field{[](ExperimentConfig& c, std::string_view v, const std::string&) {
                                          if (v == "epoch") c.schedule_unit = ScheduleUnit::Epoch;
                                          else if (v == "iteration") c.schedule_unit = ScheduleUnit::Iteration;
                                          else throw ValidationError("config key 'schedule_unit' must be epoch or iteration");
                                        },
                                        [](const ExperimentConfig& c) {
                                          return std::string(c.schedule_unit == ScheduleUnit::Epoch ? "epoch" : "iteration");
                                        }}});
    index_field("batch_size", &ExperimentConfig::batch_size);
    index_field("n_mc", &ExperimentConfig::n_mc);
    index_field("log_interval", &ExperimentConfig::log_interval);
    t.push_back({"train_discrete", Field{[](ExperimentConfig& c, std::string_view v, const std::string&) {
                                           if (v == "true") c.train_discrete = true;
                                           else if (v == "false") c.train_discrete = false;
                                           else throw ValidationError("config key 'train_discrete' must be true or false");
                                         },
                                         [](const ExperimentConfig& c) {
                                           return std::string(c.train_discrete ? "true" : "false");
                                         }}});
    list_field("discrete_hidden", &ExperimentConfig::discrete_hidden);
    index_field("n_predict_samples", &ExperimentConfig::n_predict_samples);
    list_field("sweep_ranks", &ExperimentConfig::sweep_ranks);
    string_field("out_dir", &ExperimentConfig::out_dir);
    t.push_back({"seed", Field{[](ExperimentConfig& c, std::string_view v, const std::string& k) {
                                 auto s = textio::parse_int(v, "config key '" + k + "'");
                                 if (s < 0) throw ValidationError("config key 'seed' must be >= 0");
                                 c.seed = static_cast<std::uint64_t>(s);
                               },
                               [](const ExperimentConfig& c) { return std::to_string(c.seed); }}});
    return t;
  }();
  return table;
}

}  // namespace

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& m) { throw ValidationError("config: " + m); };
  if (n_snapshots < 2) fail("n_snapshots must be >= 2");
  if (grid_intervals < 2) fail("grid_intervals must be >= 2");
  if (fine_grid_intervals < 2) fail("fine_grid_intervals must be >= 2");
  if (n_train <= 0 || n_train >= n_snapshots) fail("n_train must satisfy 0 < n_train < n_snapshots");
  if (!(noise >= 0.0)) fail("noise must be >= 0");
  if (n_pod < 0) fail("n_pod must be >= 0");
  if (!(eps_pod > 0.0 && eps_pod <= 1.0)) fail("eps_pod must lie in (0, 1]");
  if (gpr_restarts < 1) fail("gpr_restarts must be >= 1");
  if (gpr_max_iterations < 1) fail("gpr_max_iterations must be >= 1");
  MlpArchitecture{1, hidden, 2}.validate();
  MlpArchitecture{1, discrete_hidden, 2}.validate();
  train_config(0).validate();
  if (n_predict_samples < 1) fail("n_predict_samples must be >= 1");
  if (sweep_ranks.empty()) fail("sweep_ranks must not be empty");
  for (Index r : sweep_ranks)
    if (r < 1) fail("sweep_ranks entries must be >= 1");
  if (out_dir.empty()) fail("out_dir must not be empty");
}

TrainConfig ExperimentConfig::train_config(std::uint64_t stage_seed) const {
  TrainConfig t;
  t.stages = lr_schedule;
  t.unit = schedule_unit;
  t.batch_size = batch_size;
  t.n_mc = n_mc;
  t.log_interval = log_interval;
  t.seed = stage_seed;
  return t;
}

ExperimentConfig parse_config(const std::string& text) {
  std::map<std::string, const Field*> by_key;
  for (const auto& [k, f] : fields()) by_key[k] = &f;

  ExperimentConfig cfg;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view sv(line);
    if (auto hash = sv.find('#'); hash != std::string_view::npos) sv = sv.substr(0, hash);
    sv = trim(sv);
    if (sv.empty()) continue;
    auto eq = sv.find('=');
    if (eq == std::string_view::npos) {
      throw ValidationError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key(trim(sv.substr(0, eq)));
    const std::string_view value = trim(sv.substr(eq + 1));
    auto it = by_key.find(key);
    if (it == by_key.end()) throw ValidationError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    if (!seen.insert(key).second) throw ValidationError("config: duplicate key '" + key + "'");
    it->second->parse(cfg, value, key);
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  auto in = textio::open_in(path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string render_config(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& [k, f] : fields()) out += k + " = " + f.render(cfg) + "\n";
  return out;
}

std::string config_hash(const ExperimentConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a(render_config(cfg))));
  return buf;
}

}  // namespace cvgp
