#include "condot/cli.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "condot/ot_metrics.hpp"
#include "condot/report.hpp"
#include "json_reader.hpp"

namespace condot::cli {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::ConfigError:
    case Errc::InvalidArgument:
    case Errc::UnknownLabel:
    case Errc::TooFewLabels:
    case Errc::TooManyCombos:
    case Errc::NotActionTask:
    case Errc::LengthMismatch:
    case Errc::EmptySet:
    case Errc::UnsupportedPrimitive:
    case Errc::MissingMoments:
      return kExitConfig;
    case Errc::IoError:
    case Errc::ManifestError:
      return kExitIo;
    case Errc::NonFiniteLoss:
      return kExitNonFinite;
    case Errc::ShapeMismatch:
    case Errc::AnchorDimMismatch:
      return kExitDimMismatch;
    default:
      return kExitFailure;
  }
}

namespace {

std::string read_text(const fs::path& p, int fail_code) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Failure(fail_code, "cannot read " + p.string());
  std::ostringstream os;
  os << in.rdbuf();
  if (in.bad()) throw Failure(fail_code, "cannot read " + p.string());
  return os.str();
}

json read_json(const fs::path& p, int read_code, int parse_code) {
  const std::string text = read_text(p, read_code);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Failure(parse_code, p.string() + ": invalid JSON (" + e.what() + ")");
  }
}

json load_config(const Invocation& inv) { return read_json(inv.config, kExitIo, kExitConfig); }

// Writes through a temporary file so readers never see a partial file.
void write_text(const fs::path& p, const std::string& text) {
  const fs::path tmp = p.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Failure(kExitIo, "cannot write " + tmp.string());
    out << text;
    if (!out) throw Failure(kExitIo, "cannot write " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, p, ec);
  if (ec) throw Failure(kExitIo, "cannot write " + p.string() + ": " + ec.message());
}

void make_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw Failure(kExitIo, "cannot create " + p.string() + ": " + ec.message());
}

fs::path resolve(const Invocation& inv, const std::string& p) {
  const fs::path path(p);
  if (path.is_absolute()) return path;
  return (inv.config.parent_path() / path).lexically_normal();
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Dataset load_dataset_or_fail(const fs::path& manifest) {
  try {
    return load_dataset(manifest);
  } catch (const Error& e) {
    throw Failure(kExitIo, e.what());
  }
}

// ---------------------------------------------------------------------------
// Run directory layout.

const char* kCheckpoint = "checkpoint.json";
const char* kHistory = "history.csv";
const char* kRunConfig = "config.json";
const char* kRunMeta = "meta.json";

struct RunSnapshot {
  fs::path dataset;
  std::vector<std::string> train_pairs;
  std::optional<fs::path> moa;
  json train;
};

json to_json(const RunSnapshot& s) {
  json j{{"dataset", s.dataset.string()}, {"train_pairs", s.train_pairs}, {"train", s.train}};
  j["moa"] = s.moa ? json(s.moa->string()) : json(nullptr);
  return j;
}

RunSnapshot snapshot_from_json(const json& j) {
  RunSnapshot s;
  s.dataset = j.at("dataset").get<std::string>();
  s.train_pairs = j.at("train_pairs").get<std::vector<std::string>>();
  if (!j.at("moa").is_null()) s.moa = fs::path(j.at("moa").get<std::string>());
  s.train = j.at("train");
  return s;
}

RunSnapshot read_snapshot(const fs::path& run, int fail_code) {
  const json j = read_json(run / kRunConfig, fail_code, fail_code);
  try {
    return snapshot_from_json(j);
  } catch (const json::exception& e) {
    throw Failure(fail_code, (run / kRunConfig).string() + ": malformed run config (" + e.what() + ")");
  }
}

TrainState read_checkpoint(const fs::path& run, int fail_code) {
  const json j = read_json(run / kCheckpoint, fail_code, fail_code);
  try {
    return checkpoint_from_json(j);
  } catch (const Error& e) {
    throw Failure(fail_code, (run / kCheckpoint).string() + ": " + e.what());
  }
}

void check_dims(const TrainState& s, const Dataset& ds) {
  if (ds.feature_dim != s.g.spec.input_dim) {
    throw Failure(kExitDimMismatch, "dataset has " + std::to_string(ds.feature_dim) +
                                        " features but the checkpoint expects " +
                                        std::to_string(s.g.spec.input_dim));
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// simulate

void cmd_simulate(const Invocation& inv) {
  const json cfg = load_config(inv);
  ObjectReader r(cfg, "");
  r.require("task");
  std::string task;
  r.get("task", task);
  std::string name;
  r.get("name", name);
  Eigen::Index dim = 2, n = 500;
  r.get("dim", dim);
  r.get("n_per_pair", n);
  std::uint64_t seed = 0;
  r.get("seed", seed);
  if (inv.seed) seed = *inv.seed;
  if (dim < 1) throw Error(Errc::ConfigError, "dim: must be >= 1");
  if (n < 2) throw Error(Errc::ConfigError, "n_per_pair: must be >= 2");

  Dataset ds;
  if (task == "scalar") {
    ScalarTaskOptions o;
    o.dim = dim;
    o.n_per_pair = n;
    o.seed = seed;
    r.get("t_values", o.t_values);
    if (o.t_values.empty()) throw Error(Errc::ConfigError, "t_values: must not be empty");
    for (double t : o.t_values) {
      if (!(t >= 0.0 && t <= 1.0)) throw Error(Errc::ConfigError, "t_values: entries must lie in [0, 1]");
    }
    r.finish();
    ds = simulate_scalar_task(o);
  } else if (task == "covariate") {
    CovariateTaskOptions o;
    o.dim = dim;
    o.n_per_pair = n;
    o.seed = seed;
    r.get("n_classes", o.n_classes);
    r.get("identical_maps", o.identical_maps);
    r.finish();
    if (o.n_classes < 2) throw Error(Errc::ConfigError, "n_classes: must be >= 2");
    ds = simulate_covariate_task(o);
  } else if (task == "action") {
    ActionTaskOptions o;
    o.dim = dim;
    o.n_per_pair = n;
    o.seed = seed;
    r.get("n_actions", o.n_actions);
    r.get("n_combos", o.n_combos);
    std::optional<SplitPlan> split;
    if (const json* s = r.child("split")) {
      ObjectReader sr(*s, "split.");
      int level = 1;
      std::uint64_t split_seed = 0;
      sr.get("level", level);
      sr.get("seed", split_seed);
      sr.finish();
      if (level < 1 || level > 5) throw Error(Errc::ConfigError, "split.level: must be in 1..5");
      r.finish();
      ds = simulate_action_task(o);
      split = make_splits(ds, level, split_seed);
    } else {
      r.finish();
      ds = simulate_action_task(o);
    }
    if (!name.empty()) ds.name = name;
    make_dir(inv.out);
    save_dataset(ds, inv.out);
    if (split) write_text(inv.out / "split.json", to_json(*split).dump(2) + "\n");
    return;
  } else {
    throw Error(Errc::ConfigError, "task: expected 'scalar', 'covariate' or 'action', got '" + task + "'");
  }
  if (!name.empty()) ds.name = name;
  make_dir(inv.out);
  save_dataset(ds, inv.out);
}

// ---------------------------------------------------------------------------
// train

void cmd_train(const Invocation& inv) {
  const json cfg = load_config(inv);
  ObjectReader r(cfg, "");
  r.require("dataset");
  std::string dataset_path, split_path, moa_path;
  std::vector<std::string> train_pairs;
  bool resume = false;
  r.get("dataset", dataset_path);
  r.get("split", split_path);
  r.get("train_pairs", train_pairs);
  r.get("moa", moa_path);
  r.get("resume", resume);
  json train_json = json::object();
  if (const json* t = r.child("train")) train_json = *t;
  r.finish();
  if (!split_path.empty() && !train_pairs.empty()) {
    throw Error(Errc::ConfigError, "split and train_pairs are mutually exclusive");
  }
  if (inv.seed) train_json["seed"] = *inv.seed;
  TrainConfig tc = train_config_from_json(train_json);

  const fs::path manifest = fs::absolute(resolve(inv, dataset_path)).lexically_normal();
  const Dataset ds = load_dataset_or_fail(manifest);
  if (!split_path.empty()) {
    const json sj = read_json(resolve(inv, split_path), kExitIo, kExitConfig);
    try {
      train_pairs = split_from_json(sj).train;
    } catch (const json::exception& e) {
      throw Error(Errc::ConfigError, std::string("split: ") + e.what());
    }
  }
  if (train_pairs.empty()) {
    for (const auto& p : ds.pairs) train_pairs.push_back(p.id);
  }
  std::vector<LabeledPair> pairs;
  for (const auto& id : train_pairs) {
    try {
      pairs.push_back(ds.pair(id));
    } catch (const Error&) {
      throw Error(Errc::ConfigError, "train pair '" + id + "' is not in the dataset");
    }
  }

  std::optional<MoaEmbedding> moa;
  std::optional<fs::path> moa_abs;
  if (!moa_path.empty()) {
    moa_abs = fs::absolute(resolve(inv, moa_path)).lexically_normal();
    const json mj = read_json(*moa_abs, kExitIo, kExitConfig);
    try {
      moa = moa_from_json(mj);
    } catch (const json::exception& e) {
      throw Error(Errc::ConfigError, std::string("moa: ") + e.what());
    }
  }

  TrainState state;
  if (resume) {
    state = read_checkpoint(inv.out, kExitIo);
    check_dims(state, ds);
    std::vector<HistoryRow> rows;
    if (fs::exists(inv.out / kHistory)) rows = parse_history_csv(read_text(inv.out / kHistory, kExitIo));
    for (const auto& row : rows) {
      if (row.step <= state.step) state.history.push_back(row);
    }
    // The checkpointed configuration stays authoritative except for the step budget.
    state.config.steps = tc.steps;
    tc = state.config;
  } else {
    state = init_train_state(pairs, tc, moa ? &*moa : nullptr);
  }

  make_dir(inv.out);
  const RunSnapshot snap{manifest, train_pairs, moa_abs, to_json(tc)};
  write_text(inv.out / kRunConfig, to_json(snap).dump(2) + "\n");
  const std::string started = utc_now();
  auto save = [&](const TrainState& s) {
    write_text(inv.out / kCheckpoint, checkpoint_to_json(s).dump() + "\n");
    write_text(inv.out / kHistory, format_history_csv(s.history));
  };
  auto meta = [&](const std::string& status) {
    const json m{{"started", started}, {"finished", utc_now()}, {"status", status}};
    write_text(inv.out / kRunMeta, m.dump(2) + "\n");
  };

  const std::int64_t remaining = std::max<std::int64_t>(0, tc.steps - state.step);
  try {
    train_steps(state, pairs, remaining, save);
  } catch (const Error& e) {
    if (e.code() == Errc::NonFiniteLoss) meta("non-finite-loss");
    throw;
  }
  save(state);
  meta("complete");
}

// ---------------------------------------------------------------------------
// eval

const std::vector<std::string>& all_metrics() {
  static const std::vector<std::string> names{"sinkhorn", "mmd", "ps_l2", "map_mse"};
  return names;
}

json compute_metrics(const MetricInputs& in, const std::vector<std::string>& metrics, double eps) {
  json out = json::object();
  for (const auto& m : metrics) {
    if (m == "sinkhorn") {
      out[m] = sinkhorn(*in.predicted, *in.target, eps).cost;
    } else if (m == "mmd") {
      out[m] = mmd(*in.predicted, *in.target);
    } else if (m == "ps_l2") {
      out[m] = perturbation_signature_l2(*in.source, *in.target, *in.predicted);
    } else if (m == "map_mse") {
      if (in.oracle) {
        out[m] = (*in.predicted - *in.oracle).rowwise().squaredNorm().mean();
      } else {
        out[m] = nullptr;
      }
    } else {
      throw Error(Errc::ConfigError, "metrics: unknown metric '" + m + "'");
    }
  }
  return out;
}

void cmd_eval(const Invocation& inv) {
  const json cfg = load_config(inv);
  ObjectReader r(cfg, "");
  r.require("run");
  std::string run_path, dataset_path;
  std::vector<std::string> metrics = all_metrics();
  double eps = 0.1;
  std::int64_t max_samples = 0;
  r.get("run", run_path);
  r.get("dataset", dataset_path);
  r.get("metrics", metrics);
  r.get("eps", eps);
  r.get("max_samples", max_samples);
  r.finish();
  if (metrics.empty()) throw Error(Errc::ConfigError, "metrics: must not be empty");
  std::set<std::string> seen;
  for (const auto& m : metrics) {
    if (std::find(all_metrics().begin(), all_metrics().end(), m) == all_metrics().end()) {
      throw Error(Errc::ConfigError, "metrics: unknown metric '" + m + "'");
    }
    if (!seen.insert(m).second) throw Error(Errc::ConfigError, "metrics: '" + m + "' listed twice");
  }
  if (!(eps > 0.0)) throw Error(Errc::ConfigError, "eps: must be > 0");
  if (max_samples < 0) throw Error(Errc::ConfigError, "max_samples: must be >= 0");

  const fs::path run = resolve(inv, run_path);
  const RunSnapshot snap = read_snapshot(run, kExitIo);
  const TrainState state = read_checkpoint(run, kExitIo);
  const fs::path manifest = dataset_path.empty() ? snap.dataset : resolve(inv, dataset_path);
  const Dataset ds = load_dataset_or_fail(manifest);
  check_dims(state, ds);
  const std::set<std::string> trained(snap.train_pairs.begin(), snap.train_pairs.end());

  json pairs = json::array();
  std::map<std::string, std::map<std::string, std::pair<double, int>>> sums;
  std::ostringstream csv;
  csv << "pair_id,section,metric,value\n";
  for (const auto& p : ds.pairs) {
    const auto limit = [&](const Matrix& m) -> Matrix {
      if (max_samples == 0 || m.rows() <= max_samples) return m;
      return m.topRows(max_samples);
    };
    const Matrix src = limit(p.source);
    const Matrix tgt = limit(p.target);
    const Matrix pred = predict(state, src, p.context);
    std::optional<Matrix> orc;
    if (ds.oracle) orc = ds.oracle->for_context(p.context).apply(src);
    const json values = compute_metrics({&src, &tgt, &pred, orc ? &*orc : nullptr}, metrics, eps);
    const std::string section = trained.count(p.id) ? "in_sample" : "out_of_sample";
    pairs.push_back({{"id", p.id}, {"context", to_json(p.context)}, {"section", section}, {"values", values}});
    for (const auto& m : metrics) {
      const json& v = values.at(m);
      csv << p.id << ',' << section << ',' << m << ',' << (v.is_null() ? "" : format_double(v.get<double>()))
          << '\n';
      if (!v.is_null()) {
        auto& acc = sums[section][m];
        acc.first += v.get<double>();
        acc.second += 1;
      }
    }
  }
  json aggregate = json::object();
  for (const char* section : {"in_sample", "out_of_sample"}) {
    json block = json::object();
    for (const auto& m : metrics) {
      const auto it = sums[section].find(m);
      block[m] = it == sums[section].end() ? json(nullptr) : json(it->second.first / it->second.second);
    }
    aggregate[section] = block;
  }
  const json report{{"run", run.string()},
                    {"dataset", manifest.string()},
                    {"eps", eps},
                    {"metrics", metrics},
                    {"pairs", pairs},
                    {"aggregate", aggregate}};
  make_dir(inv.out);
  write_text(inv.out / "metrics.json", report.dump(2) + "\n");
  write_text(inv.out / "metrics.csv", csv.str());
}

// ---------------------------------------------------------------------------
// embed-moa

void cmd_embed_moa(const Invocation& inv) {
  const json cfg = load_config(inv);
  ObjectReader r(cfg, "");
  r.require("dataset");
  std::string dataset_path;
  Eigen::Index dim = 10;
  double eps = 0.1;
  std::uint64_t seed = 0;
  Eigen::Index max_samples = 300;
  r.get("dataset", dataset_path);
  r.get("dim", dim);
  r.get("eps", eps);
  r.get("seed", seed);
  r.get("max_samples", max_samples);
  r.finish();
  if (inv.seed) seed = *inv.seed;
  if (dim < 1) throw Error(Errc::ConfigError, "dim: must be >= 1");
  if (!(eps > 0.0)) throw Error(Errc::ConfigError, "eps: must be > 0");
  if (max_samples < 2) throw Error(Errc::ConfigError, "max_samples: must be >= 2");

  const Dataset ds = load_dataset_or_fail(resolve(inv, dataset_path));
  // One target population per label: categorical pairs and single actions.
  std::vector<std::string> order;
  std::map<std::string, std::vector<const Matrix*>> groups;
  for (const auto& p : ds.pairs) {
    std::string label;
    if (p.context.kind == ContextKind::Categorical) label = p.context.label;
    else if (p.context.kind == ContextKind::ActionSet && p.context.labels.size() == 1) label = p.context.labels[0];
    else continue;
    if (!groups.count(label)) order.push_back(label);
    groups[label].push_back(&p.target);
  }
  if (order.size() < 2) {
    throw Error(Errc::ConfigError, "embed-moa needs at least two labelled target populations");
  }
  std::vector<std::pair<std::string, Matrix>> targets;
  for (const auto& label : order) {
    Eigen::Index rows = 0;
    for (const auto* m : groups[label]) rows += m->rows();
    Matrix all(rows, ds.feature_dim);
    Eigen::Index at = 0;
    for (const auto* m : groups[label]) {
      all.middleRows(at, m->rows()) = *m;
      at += m->rows();
    }
    targets.emplace_back(label, all.rows() > max_samples ? Matrix(all.topRows(max_samples)) : all);
  }
  const auto e = build_moa_embedding(targets, dim, seed, eps);
  make_dir(inv.out);
  write_text(inv.out / "moa.json", to_json(e).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// report

void cmd_report(const Invocation& inv) {
  const json cfg = load_config(inv);
  ObjectReader r(cfg, "");
  r.require("runs");
  std::vector<std::string> runs;
  Eigen::Index n_scatter = 300;
  r.get("runs", runs);
  r.get("n_scatter", n_scatter);
  r.finish();
  if (runs.empty()) throw Error(Errc::ConfigError, "runs: must list at least one run directory");
  if (n_scatter < 1) throw Error(Errc::ConfigError, "n_scatter: must be >= 1");

  struct Loaded {
    std::string name;
    fs::path dir;
    RunSnapshot snap;
    std::vector<HistoryRow> history;
  };
  std::vector<Loaded> loaded;
  for (std::size_t k = 0; k < runs.size(); ++k) {
    Loaded l;
    l.dir = resolve(inv, runs[k]);
    if (!fs::is_directory(l.dir)) throw Failure(kExitRunDir, "not a run directory: " + l.dir.string());
    l.name = l.dir.filename().string();
    if (l.name.empty() || l.name == ".") l.name = "run";
    l.snap = read_snapshot(l.dir, kExitRunDir);
    try {
      l.history = parse_history_csv(read_text(l.dir / kHistory, kExitRunDir));
    } catch (const Error& e) {
      throw Failure(kExitRunDir, (l.dir / kHistory).string() + ": " + e.what());
    }
    loaded.push_back(std::move(l));
  }

  make_dir(inv.out);
  std::vector<std::vector<std::string>> table;
  std::vector<std::string> notes;
  for (std::size_t k = 0; k < loaded.size(); ++k) {
    const auto& l = loaded[k];
    const std::string stem = std::to_string(k + 1) + "_" + l.name;
    write_text(inv.out / ("loss_" + stem + ".svg"), loss_curve_svg(l.history, l.name));

    std::map<std::string, std::vector<double>> by_loss;
    for (const auto& row : l.history) by_loss[row.loss].push_back(row.value);
    auto tail_mean = [&](const std::string& name) -> std::string {
      const auto it = by_loss.find(name);
      if (it == by_loss.end() || it->second.empty()) return "-";
      const auto& v = it->second;
      const std::size_t n = std::min<std::size_t>(50, v.size());
      double s = 0.0;
      for (std::size_t i = v.size() - n; i < v.size(); ++i) s += v[i];
      return fixed(s / static_cast<double>(n), 4);
    };
    std::string mode = "-", kind = "-";
    try {
      const TrainConfig tc = train_config_from_json(l.snap.train);
      mode = to_string(tc.mode);
      kind = to_string(tc.net.kind);
    } catch (const Error&) {
      throw Failure(kExitRunDir, (l.dir / kRunConfig).string() + ": malformed training config");
    }
    const std::int64_t steps = l.history.empty() ? 0 : l.history.back().step;
    table.push_back({l.name, mode, kind, std::to_string(steps), std::to_string(l.snap.train_pairs.size()),
                     tail_mean("f"), tail_mean("g"), tail_mean("primal")});

    // Scatter of source, target and prediction for one pair, preferring a held-out one.
    std::optional<Dataset> ds;
    try {
      ds = load_dataset(l.snap.dataset);
    } catch (const Error& e) {
      notes.push_back(l.name + ": scatter skipped, dataset unavailable (" + e.what() + ")");
      continue;
    }
    if (ds->feature_dim != 2) {
      notes.push_back(l.name + ": scatter skipped, feature dimension is " + std::to_string(ds->feature_dim) +
                      " (plots need 2)");
      continue;
    }
    const std::set<std::string> trained(l.snap.train_pairs.begin(), l.snap.train_pairs.end());
    const LabeledPair* chosen = &ds->pairs.front();
    for (const auto& p : ds->pairs) {
      if (!trained.count(p.id)) {
        chosen = &p;
        break;
      }
    }
    const TrainState state = read_checkpoint(l.dir, kExitRunDir);
    const Matrix src = chosen->source.topRows(std::min(n_scatter, chosen->source.rows()));
    const Matrix tgt = chosen->target.topRows(std::min(n_scatter, chosen->target.rows()));
    const Matrix pred = predict(state, src, chosen->context);
    write_text(inv.out / ("scatter_" + stem + ".svg"),
               scatter_svg(src, tgt, pred, l.name + " " + chosen->id + " (" + chosen->context.key() + ")"));
  }

  std::ostringstream md;
  md << "# Run comparison\n\n";
  md << "Final losses are means over the last 50 recorded values of each loss.\n\n";
  md << markdown_table({"run", "mode", "network", "steps", "train pairs", "final f", "final g", "final primal"},
                       table);
  if (!notes.empty()) {
    md << "\n## Notes\n\n";
    for (const auto& n : notes) md << "- " << n << "\n";
  }
  write_text(inv.out / "summary.md", md.str());
  write_text(inv.out / "report_meta.json", json{{"generated", utc_now()}}.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Entry point.

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Conditional Monge maps with partially input convex networks", "condot"};
  app.require_subcommand(1);
  std::string config, out_dir;
  std::uint64_t seed = 0;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"simulate", "Write a synthetic dataset"},
      {"train", "Train a model on a dataset"},
      {"eval", "Evaluate a trained run"},
      {"embed-moa", "Build a mode-of-action embedding"},
      {"report", "Render loss curves, scatter plots and a summary"}};
  std::map<std::string, CLI::Option*> seed_opts;
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config, "JSON configuration file")->required();
    sub->add_option("--out", out_dir, "Output directory");
    seed_opts[name] = sub->add_option("--seed", seed, "Overrides the configured seed");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "condot: " << e.what() << "\n";
    return kExitConfig;
  }

  Invocation inv;
  inv.command = app.get_subcommands().front()->get_name();
  inv.config = config;
  inv.out = out_dir.empty() ? fs::path(inv.command + "_out") : fs::path(out_dir);
  if (seed_opts[inv.command]->count() > 0) inv.seed = seed;

  try {
    if (inv.command == "simulate") cmd_simulate(inv);
    else if (inv.command == "train") cmd_train(inv);
    else if (inv.command == "eval") cmd_eval(inv);
    else if (inv.command == "embed-moa") cmd_embed_moa(inv);
    else cmd_report(inv);
  } catch (const Failure& e) {
    err << "condot " << inv.command << ": " << e.what() << "\n";
    return e.code();
  } catch (const Error& e) {
    err << "condot " << inv.command << ": " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "condot " << inv.command << ": " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace condot::cli
