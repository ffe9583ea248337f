#include "cvgp/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <set>
#include <sstream>

#include "textio.hpp"

namespace cvgp {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void say(std::ostream* log, const std::string& msg) {
  if (log) *log << msg << std::endl;
}

// Runs f, prefixing any error with the stage name but keeping its category.
template <class F>
auto stage(const std::string& name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ValidationError& e) {
    throw ValidationError(name + ": " + e.what());
  } catch (const RuntimeFailure& e) {
    throw RuntimeFailure(name + ": " + e.what());
  }
}

SnapshotSet read_required(const fs::path& p, const std::string& what) {
  if (!fs::exists(p)) throw ValidationError(what + " file '" + p.string() + "' does not exist");
  return read_snapshots(p);
}

GprFitOptions gpr_options(const ExperimentConfig& cfg) {
  GprFitOptions o;
  o.restarts = cfg.gpr_restarts;
  o.max_iterations = cfg.gpr_max_iterations;
  return o;
}

std::string fmt_sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4e", v);
  return buf;
}

}  // namespace

const char* to_string(GridChoice g) { return g == GridChoice::Coarse ? "coarse" : "fine"; }

GridChoice parse_grid_choice(const std::string& s) {
  if (s == "coarse") return GridChoice::Coarse;
  if (s == "fine") return GridChoice::Fine;
  throw ValidationError("grid must be 'coarse' or 'fine', got '" + s + "'");
}

ExperimentPaths ExperimentPaths::from(const ExperimentConfig& cfg) {
  const fs::path out(cfg.out_dir);
  ExperimentPaths p;
  p.train_clean = out / "train_clean.snap";
  p.train_noisy = cfg.train_file.empty() ? out / "train_noisy.snap" : fs::path(cfg.train_file);
  p.test_clean = cfg.test_file.empty() ? out / "test_clean.snap" : fs::path(cfg.test_file);
  p.test_fine = cfg.test_fine_file.empty() ? out / "test_fine_clean.snap" : fs::path(cfg.test_fine_file);
  p.bundle = out / "model.bundle";
  p.loss_history = out / "loss_history.csv";
  p.results = out / "results.csv";
  p.sweep = out / "sweep_npod.csv";
  return p;
}

ExperimentData make_morlet_data(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentData d;
  SnapshotSet all = generate_morlet_set(cfg.n_snapshots, cfg.grid_intervals, derive_seed(cfg.seed, "generate"));
  auto [train, test] = split(all, cfg.n_train, derive_seed(cfg.seed, "split"));
  d.train_clean = train;
  d.train = add_noise(train, cfg.noise, derive_seed(cfg.seed, "noise"));
  d.test = std::move(test);
  d.test_fine = morlet_on_grid(d.test.params, PhysicalGrid::uniform_1d(-1.0, 1.0, cfg.fine_grid_intervals));
  return d;
}

PodBasis fit_configured_pod(const SnapshotSet& train, const ExperimentConfig& cfg) {
  return cfg.n_pod > 0 ? fit_pod_fixed_k(train, cfg.n_pod) : fit_pod(train, cfg.eps_pod);
}

LatentRecognition fit_configured_recognition(const SnapshotSet& train, const PodBasis& pod,
                                             const ExperimentConfig& cfg) {
  return fit_recognition(train.params, project(pod, train), derive_seed(cfg.seed, "gpr"), gpr_options(cfg));
}

TrainedPipeline fit_networks(const SnapshotSet& train, PodBasis pod, LatentRecognition recog,
                             const ExperimentConfig& cfg, std::ostream* log) {
  const Index k = pod.k;
  const Index m = train.grid.dim();
  const Index d = train.params.dim();
  const Index M = train.n_points();

  TrainedPipeline tp;
  say(log, "training likelihood network (k=" + std::to_string(k) + ")");
  auto main = stage("likelihood network", [&] {
    LikelihoodNet net =
        LikelihoodNet::init(pointwise_architecture(k, m, d, cfg.hidden), derive_seed(cfg.seed, "liknet-init"));
    return cvgp::train(std::move(net), train, recog, cfg.train_config(derive_seed(cfg.seed, "liknet-train")));
  });
  tp.history = std::move(main.history);
  tp.bundle.net = std::move(main.net);

  if (cfg.train_discrete) {
    say(log, "training discrete baseline");
    auto disc = stage("discrete network", [&] {
      LikelihoodNet net = LikelihoodNet::init(discrete_architecture(k, d, M, cfg.discrete_hidden),
                                              derive_seed(cfg.seed, "discrete-init"));
      return train_discrete(std::move(net), train, recog, cfg.train_config(derive_seed(cfg.seed, "discrete-train")));
    });
    tp.discrete_history = std::move(disc.history);
    tp.bundle.discrete = std::move(disc.net);
  }

  tp.bundle.grid = train.grid;
  tp.bundle.pod = std::move(pod);
  tp.bundle.recog = std::move(recog);
  tp.bundle.provenance.config_hash = config_hash(cfg);
  tp.bundle.provenance.seed = cfg.seed;
  tp.bundle.provenance.noise = train.noise_sigma;
  tp.bundle.validate();
  return tp;
}

TrainedPipeline fit_pipeline(const SnapshotSet& train, const ExperimentConfig& cfg, std::ostream* log) {
  cfg.validate();
  say(log, "fitting POD on " + std::to_string(train.n_snapshots()) + " snapshots");
  PodBasis pod = stage("pod", [&] { return fit_configured_pod(train, cfg); });
  say(log, "POD rank " + std::to_string(pod.k) + ", truncation error " + fmt_sci(pod.truncation_error(pod.k)));
  say(log, "fitting recognition GPRs");
  LatentRecognition recog = stage("recognition", [&] { return fit_configured_recognition(train, pod, cfg); });
  return fit_networks(train, std::move(pod), std::move(recog), cfg, log);
}

std::vector<MethodPrediction> evaluate_bundle(const ModelBundle& b, const SnapshotSet& test, GridChoice grid,
                                              Index n_samples, std::uint64_t seed) {
  b.validate();
  test.validate();
  require_dims(test.params.dim() == b.recog.param_dim(), "evaluate: test parameter dimension " +
                                                             std::to_string(test.params.dim()) + " differs from " +
                                                             std::to_string(b.recog.param_dim()));
  require_dims(test.grid.dim() == b.grid.dim(), "evaluate: test grid dimension differs from the training grid");
  if (grid == GridChoice::Coarse) {
    require_dims(test.n_points() == b.grid.size(), "evaluate: coarse test grid has " + std::to_string(test.n_points()) +
                                                       " points, training grid has " + std::to_string(b.grid.size()));
  }

  const double noise = b.provenance.noise;
  const Index k = b.pod.k;
  std::vector<MethodPrediction> out;

  {
    auto t0 = Clock::now();
    auto pd = predict_cvae_gprr(b.pod, b.recog, b.net, test.params.samples, test.grid.points, n_samples, seed);
    MethodPrediction mp;
    mp.row = {"cvae-gprr", noise, k, grid, relative_test_mean_error(pd.mean, test.values), seconds_since(t0)};
    mp.mean = std::move(pd.mean);
    mp.variance = std::move(pd.variance);
    out.push_back(std::move(mp));
  }
  {
    MethodPrediction mp;
    mp.row = {"gpr-rom", noise, k, grid, std::nullopt, 0.0};
    if (grid == GridChoice::Coarse) {
      auto t0 = Clock::now();
      mp.mean = predict_gpr_rom(b.pod, b.recog, test.params.samples);
      mp.row.epsilon_test = relative_test_mean_error(mp.mean, test.values);
      mp.row.wall_seconds = seconds_since(t0);
    }
    out.push_back(std::move(mp));
  }
  if (b.discrete) {
    MethodPrediction mp;
    mp.row = {"discrete", noise, k, grid, std::nullopt, 0.0};
    if (grid == GridChoice::Coarse) {
      auto t0 = Clock::now();
      auto pd = predict_discrete(b.recog, *b.discrete, test.params.samples, n_samples, seed);
      mp.row.epsilon_test = relative_test_mean_error(pd.mean, test.values);
      mp.row.wall_seconds = seconds_since(t0);
      mp.mean = std::move(pd.mean);
      mp.variance = std::move(pd.variance);
    }
    out.push_back(std::move(mp));
  }
  return out;
}

SweepResult run_sweep(const SnapshotSet& train, const SnapshotSet& test, const ExperimentConfig& cfg, bool with_cvae,
                      std::ostream* log) {
  cfg.validate();
  const std::set<Index> uniq(cfg.sweep_ranks.begin(), cfg.sweep_ranks.end());
  const std::vector<Index> ranks(uniq.begin(), uniq.end());
  const Index limit = std::min(train.n_snapshots(), train.n_points());

  SweepResult res;
  Index r_max = 0;
  for (Index r : ranks) {
    if (r > limit) {
      res.failures.push_back({r, "rank exceeds min(D, M) = " + std::to_string(limit)});
    } else {
      r_max = std::max(r_max, r);
    }
  }
  if (r_max == 0) return res;

  say(log, "sweep: fitting POD and recognition at rank " + std::to_string(r_max));
  PodBasis pod_full;
  LatentRecognition recog_full;
  try {
    pod_full = stage("pod", [&] { return fit_pod_fixed_k(train, r_max); });
    recog_full = stage("recognition", [&] {
      return fit_recognition(train.params, project(pod_full, train), derive_seed(cfg.seed, "gpr"), gpr_options(cfg));
    });
  } catch (const std::exception& e) {
    for (Index r : ranks)
      if (r <= limit) res.failures.push_back({r, e.what()});
    return res;
  }

  ExperimentConfig rcfg = cfg;
  rcfg.train_discrete = false;
  for (Index r : ranks) {
    if (r > limit) continue;
    try {
      PodBasis pod = pod_full.truncated(r);
      LatentRecognition recog = recog_full.truncated(r);
      auto t0 = Clock::now();
      Matrix rom = predict_gpr_rom(pod, recog, test.params.samples);
      res.rows.push_back({"gpr-rom", train.noise_sigma, r, GridChoice::Coarse,
                          relative_test_mean_error(rom, test.values), seconds_since(t0)});
      say(log, "rank " + std::to_string(r) + " gpr-rom " + fmt_sci(*res.rows.back().epsilon_test));
      if (!with_cvae) continue;

      rcfg.n_pod = r;
      auto tp = fit_networks(train, std::move(pod), std::move(recog), rcfg, log);
      t0 = Clock::now();
      auto pd = predict_cvae_gprr(tp.bundle.pod, tp.bundle.recog, tp.bundle.net, test.params.samples,
                                  test.grid.points, cfg.n_predict_samples, derive_seed(cfg.seed, "predict"));
      res.rows.push_back({"cvae-gprr", train.noise_sigma, r, GridChoice::Coarse,
                          relative_test_mean_error(pd.mean, test.values), seconds_since(t0)});
      say(log, "rank " + std::to_string(r) + " cvae-gprr " + fmt_sci(*res.rows.back().epsilon_test));
    } catch (const std::exception& e) {
      res.failures.push_back({r, e.what()});
      say(log, "rank " + std::to_string(r) + " failed: " + e.what());
    }
  }
  return res;
}

void write_results_csv(const std::vector<ResultRow>& rows, const fs::path& path) {
  auto out = textio::open_out(path.string());
  out << "# cvgp results schema " << kResultsSchemaVersion << '\n';
  out << "method,noise,n_pod,grid,epsilon_test,wall_seconds\n";
  for (const auto& r : rows) {
    out << r.method << ',' << textio::fmt(r.noise) << ',' << r.n_pod << ',' << to_string(r.grid) << ','
        << (r.epsilon_test ? textio::fmt(*r.epsilon_test) : std::string()) << ',' << textio::fmt(r.wall_seconds)
        << '\n';
  }
  if (!out) throw RuntimeFailure("failed writing '" + path.string() + "'");
}

std::vector<ResultRow> read_results_csv(const fs::path& path) {
  auto in = textio::open_in(path.string());
  std::vector<ResultRow> rows;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != "method,noise,n_pod,grid,epsilon_test,wall_seconds") {
        throw FormatError("results: unexpected header '" + line + "'");
      }
      header = true;
      continue;
    }
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    if (f.size() != 6) throw FormatError("results: expected 6 fields in '" + line + "'");
    ResultRow r;
    r.method = f[0];
    r.noise = textio::parse_finite(f[1], "results noise");
    r.n_pod = static_cast<Index>(textio::parse_int(f[2], "results n_pod"));
    r.grid = parse_grid_choice(f[3]);
    if (!f[4].empty()) r.epsilon_test = textio::parse_finite(f[4], "results epsilon_test");
    r.wall_seconds = textio::parse_finite(f[5], "results wall_seconds");
    rows.push_back(std::move(r));
  }
  if (!header) throw FormatError("results: missing header");
  return rows;
}

std::string format_table(const std::vector<ResultRow>& rows) {
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-10s %8s %6s %7s %13s %10s\n", "method", "noise", "n_pod", "grid", "epsilon_test",
                "seconds");
  out << buf;
  for (const auto& r : rows) {
    const std::string eps = r.epsilon_test ? fmt_sci(*r.epsilon_test) : "n/a";
    std::snprintf(buf, sizeof(buf), "%-10s %8.3g %6lld %7s %13s %10.2f\n", r.method.c_str(), r.noise,
                  static_cast<long long>(r.n_pod), to_string(r.grid), eps.c_str(), r.wall_seconds);
    out << buf;
  }
  return out.str();
}

void write_loss_history(const std::vector<LossRecord>& h, const fs::path& path) {
  auto out = textio::open_out(path.string());
  out << "iteration,loss\n";
  for (const auto& r : h) out << r.iteration << ',' << textio::fmt(r.loss) << '\n';
  if (!out) throw RuntimeFailure("failed writing '" + path.string() + "'");
}

void cmd_generate(const ExperimentConfig& cfg, std::ostream* log) {
  cfg.validate();
  if (cfg.data_source != DataSource::Morlet) {
    throw ValidationError("generate needs data_source = morlet; snapshot files are supplied, not generated");
  }
  const auto paths = ExperimentPaths::from(cfg);
  fs::create_directories(cfg.out_dir);
  const ExperimentData d = make_morlet_data(cfg);
  write_snapshots(d.train_clean, paths.train_clean);
  write_snapshots(d.train, paths.train_noisy);
  write_snapshots(d.test, paths.test_clean);
  write_snapshots(d.test_fine, paths.test_fine);
  say(log, "wrote " + std::to_string(d.train.n_snapshots()) + " training and " + std::to_string(d.test.n_snapshots()) +
               " test snapshots to " + cfg.out_dir);
}

ModelBundle cmd_train(const ExperimentConfig& cfg, std::ostream* log) {
  cfg.validate();
  const auto paths = ExperimentPaths::from(cfg);
  SnapshotSet train = stage("load", [&] { return read_required(paths.train_noisy, "training"); });
  fs::create_directories(cfg.out_dir);
  TrainedPipeline tp = fit_pipeline(train, cfg, log);
  save_bundle(tp.bundle, paths.bundle);
  write_loss_history(tp.history, paths.loss_history);
  if (tp.bundle.discrete) write_loss_history(tp.discrete_history, fs::path(cfg.out_dir) / "loss_history_discrete.csv");
  say(log, "wrote " + paths.bundle.string());
  return std::move(tp.bundle);
}

std::vector<ResultRow> cmd_evaluate(const ExperimentConfig& cfg, const fs::path& bundle_path, GridChoice grid,
                                    std::ostream* log) {
  cfg.validate();
  const auto paths = ExperimentPaths::from(cfg);
  const ModelBundle b = stage("load", [&] { return load_bundle(bundle_path); });
  const SnapshotSet test = stage("load", [&] {
    return read_required(grid == GridChoice::Coarse ? paths.test_clean : paths.test_fine, "test");
  });
  auto preds = stage("evaluate", [&] {
    return evaluate_bundle(b, test, grid, cfg.n_predict_samples, derive_seed(cfg.seed, "predict"));
  });

  fs::create_directories(cfg.out_dir);
  std::vector<ResultRow> rows;
  for (const auto& p : preds) {
    rows.push_back(p.row);
    if (!p.row.epsilon_test) continue;
    const std::string stem = "pred_" + p.row.method + "_" + to_string(grid);
    SnapshotSet s{test.grid, test.params, p.mean, 0.0};
    write_snapshots(s, fs::path(cfg.out_dir) / (stem + ".snap"));
    if (p.variance) {
      s.values = *p.variance;
      write_snapshots(s, fs::path(cfg.out_dir) / (stem + ".var.snap"));
    }
  }
  write_results_csv(rows, paths.results);
  if (log) *log << format_table(rows);
  return rows;
}

SweepResult cmd_sweep_npod(const ExperimentConfig& cfg, std::ostream* log) {
  cfg.validate();
  const auto paths = ExperimentPaths::from(cfg);
  const SnapshotSet train = stage("load", [&] { return read_required(paths.train_noisy, "training"); });
  const SnapshotSet test = stage("load", [&] { return read_required(paths.test_clean, "test"); });
  require_dims(train.n_points() == test.n_points(), "sweep: training and test grids differ in size");
  fs::create_directories(cfg.out_dir);
  SweepResult res = run_sweep(train, test, cfg, true, log);
  write_results_csv(res.rows, paths.sweep);
  auto out = textio::open_out((fs::path(cfg.out_dir) / "sweep_failures.csv").string());
  out << "n_pod,message\n";
  for (const auto& f : res.failures) {
    std::string msg = f.message;
    std::replace(msg.begin(), msg.end(), ',', ';');
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    out << f.n_pod << ',' << msg << '\n';
  }
  if (log) *log << format_table(res.rows);
  return res;
}

}  // namespace cvgp
