#include <openssl/evp.h>

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "hcl/hcl.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Bad flag values or refused operations; exit code 1.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string f4(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4) << v;
  return os.str();
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw hcl::DataError("cannot open '" + p.string() + "'");
  return {std::istreambuf_iterator<char>(in), {}};
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw hcl::DataError("cannot write '" + p.string() + "'");
  out << text;
}

json read_json(const fs::path& p) {
  try {
    return json::parse(read_file(p));
  } catch (const json::parse_error& e) {
    throw hcl::DataError(p.string() + ": " + e.what());
  }
}

hcl::Dataset load_corpus(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw hcl::DataError("cannot open '" + p.string() + "'");
  try {
    return hcl::parse_dataset(in);
  } catch (const hcl::DataError& e) {
    throw hcl::DataError(p.string() + ": " + e.what());
  }
}

std::string sha256_file(const fs::path& p) {
  const std::string data = read_file(p);
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr))
    throw hcl::DataError("sha256 failed for '" + p.string() + "'");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return os.str();
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

// Explicit file, else $HCL_CONFIG_DIR/default_wheel.json, else the built-in wheel.
std::pair<json, std::string> wheel_config(const std::string& path) {
  if (!path.empty() && path != "default") return {read_json(path), path};
  if (const char* dir = std::getenv("HCL_CONFIG_DIR"); dir && *dir) {
    const fs::path p = fs::path(dir) / "default_wheel.json";
    if (fs::exists(p)) return {read_json(p), p.string()};
  }
  return {hcl::default_wheel_config(), ""};
}

void emit_json(const json& j, const std::string& out) {
  if (out.empty()) return;
  if (out == "-")
    std::cout << j.dump(2) << '\n';
  else
    write_file(out, j.dump(2) + "\n");
}

hcl::Split split_arg(const std::string& name) {
  const auto s = hcl::parse_split(name);
  if (!s) throw UsageError("unknown split '" + name + "'");
  return *s;
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, ','))
    if (!cur.empty()) out.push_back(cur);
  return out;
}

// ---------------------------------------------------------------------------
// Training flags shared by train and compare

struct TrainFlags {
  std::string config_file, strategy, delta_t, shift_mode;
  std::size_t k = 0, epochs_per_step = 0, extra_epochs = 0, hidden = 0, hash_dim = 0;
  double epsilon = 0, lr = 0;
  std::uint64_t seed = 0;
  bool no_reset = false;
  std::vector<std::pair<std::string, CLI::Option*>> opts;

  void attach(CLI::App* app, bool with_strategy) {
    app->add_option("--config", config_file, "JSON training config; flags override it");
    if (with_strategy)
      opts.emplace_back("strategy", app->add_option("--strategy", strategy,
                                                    "random|cc|uc|ccf|ucf|hcl (default hcl)"));
    opts.emplace_back("k", app->add_option("--k", k, "number of baby steps"));
    opts.emplace_back("epochs_per_step", app->add_option("--epochs-per-step", epochs_per_step));
    opts.emplace_back("extra_epochs", app->add_option("--extra-epochs", extra_epochs));
    opts.emplace_back("epsilon", app->add_option("--epsilon", epsilon, "target decay factor in (0,1)"));
    opts.emplace_back("delta_t", app->add_option("--delta-t", delta_t,
                                                 "steps between target updates: N or Nepoch"));
    opts.emplace_back("lr", app->add_option("--lr", lr));
    opts.emplace_back("seed", app->add_option("--seed", seed));
    opts.emplace_back("hidden", app->add_option("--hidden", hidden));
    opts.emplace_back("hash_dim", app->add_option("--hash-dim", hash_dim));
    opts.emplace_back("shift_mode", app->add_option("--shift-mode", shift_mode, "any|inter_speaker_only"));
    opts.emplace_back("no_reset", app->add_flag("--no-esc-reset", no_reset,
                                                "carry targets across baby steps"));
  }

  bool given(const std::string& name) const {
    for (const auto& [n, o] : opts)
      if (n == name) return o->count() > 0;
    return false;
  }

  hcl::TrainConfig resolve() const {
    hcl::TrainConfig c;
    if (!config_file.empty()) {
      json j = read_json(config_file);
      // Missing keys fall back to defaults.
      json full = hcl::to_json(c);
      full.update(j);
      c = hcl::train_config_from_json(full);
    }
    if (given("strategy")) c.strategy = hcl::parse_strategy(strategy);
    if (given("k")) c.k = k;
    if (given("epochs_per_step")) c.epochs_per_step = epochs_per_step;
    if (given("extra_epochs")) c.extra_epochs = extra_epochs;
    if (given("epsilon")) c.epsilon = epsilon;
    if (given("delta_t")) c.delta_t = hcl::DeltaT::parse(delta_t);
    if (given("lr")) c.lr = lr;
    if (given("seed")) c.seed = seed;
    if (given("hidden")) c.hidden = hidden;
    if (given("hash_dim")) c.hash_dim = hash_dim;
    if (given("shift_mode")) c.shift_mode = hcl::parse_shift_mode(shift_mode);
    if (given("no_reset")) c.esc_reset_per_step = !no_reset;
    c.validate();
    return c;
  }
};

// ---------------------------------------------------------------------------
// Subcommands

int cmd_stats(const std::string& corpus, const std::string& out) {
  const auto ds = load_corpus(corpus);
  const auto issues = hcl::validate(ds);
  for (const auto& is : issues)
    std::cerr << (is.severity == hcl::Severity::violation ? "violation " : "warning ") << is.location
              << ": " << is.message << '\n';
  if (hcl::has_violations(issues)) throw hcl::DataError("corpus failed validation");
  const auto st = hcl::stats(ds);
  hcl::print_stats(st, std::cout);
  json j = hcl::to_json(st);
  j["name"] = ds.name;
  emit_json(j, out);
  return 0;
}

int cmd_score(const std::string& corpus, const std::string& split, const std::string& mode,
              const std::string& out) {
  const auto ds = load_corpus(corpus);
  const auto s = split_arg(split);
  const auto scores = hcl::score_split(ds, s, hcl::parse_shift_mode(mode));
  std::cout << std::left << std::setw(24) << "conversation" << std::right << std::setw(6) << "n_u"
            << std::setw(6) << "n_sp" << std::setw(6) << "n_es" << std::setw(10) << "score" << '\n';
  json arr = json::array();
  for (const auto& d : scores) {
    const auto& id = d.conversation;
    std::cout << std::left << std::setw(24) << id << std::right << std::setw(6) << d.n_u
              << std::setw(6) << d.n_sp << std::setw(6) << d.n_es << std::setw(10) << f4(d.score)
              << '\n';
    arr.push_back(json{{"conversation", id},
                   {"score", d.score},
                   {"n_es", d.n_es},
                   {"n_u", d.n_u},
                   {"n_sp", d.n_sp}});
  }
  emit_json(arr, out);
  return 0;
}

int cmd_plan(const std::string& corpus, std::size_t k, const std::string& mode,
             const std::string& out, const std::string& csv) {
  const auto ds = load_corpus(corpus);
  const auto plan = hcl::build_plan(ds, k, hcl::parse_shift_mode(mode));
  const auto curve = hcl::entropy_curve(plan, ds);
  const auto& convs = ds.split(hcl::Split::train);
  std::cout << std::setw(5) << "step" << std::setw(8) << "size" << std::setw(8) << "pool"
            << std::setw(10) << "min" << std::setw(10) << "max" << std::setw(10) << "entropy" << '\n';
  json j{{"k", k}, {"shift_mode", mode}, {"buckets", json::array()}, {"entropy", curve}};
  std::size_t pool = 0;
  for (std::size_t s = 0; s < plan.k(); ++s) {
    const auto& b = plan.buckets[s];
    pool += b.size();
    double lo = 1.0, hi = 0.0;
    json ids = json::array(), sc = json::array();
    for (auto i : b) {
      lo = std::min(lo, plan.scores[i].score);
      hi = std::max(hi, plan.scores[i].score);
      ids.push_back(convs[i].id);
      sc.push_back(plan.scores[i].score);
    }
    std::cout << std::setw(5) << s << std::setw(8) << b.size() << std::setw(8) << pool
              << std::setw(10) << f4(lo) << std::setw(10) << f4(hi) << std::setw(10) << f4(curve[s])
              << '\n';
    j["buckets"].push_back(json{{"conversations", ids}, {"scores", sc}});
  }
  emit_json(j, out);
  if (!csv.empty()) {
    std::ostringstream os;
    os << "step,entropy\n";
    for (std::size_t s = 0; s < curve.size(); ++s) os << s << ',' << f4(curve[s]) << '\n';
    write_file(csv, os.str());
  }
  return 0;
}

void print_matrix(const hcl::LabelMatrix& m, const std::string& title) {
  std::size_t w = 8;
  for (const auto& l : m.labels) w = std::max(w, l.size() + 2);
  std::cout << title << '\n' << std::setw(static_cast<int>(w)) << "";
  for (const auto& l : m.labels) std::cout << std::setw(static_cast<int>(w)) << l;
  std::cout << '\n';
  for (std::size_t i = 0; i < m.size(); ++i) {
    std::cout << std::setw(static_cast<int>(w)) << m.labels[i];
    for (std::size_t j = 0; j < m.size(); ++j) std::cout << std::setw(static_cast<int>(w)) << f4(m.at(i, j));
    std::cout << '\n';
  }
}

json matrix_json(const hcl::LabelMatrix& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.size(); ++i) {
    const auto r = m.row(i);
    rows.push_back(std::vector<double>(r.begin(), r.end()));
  }
  return rows;
}

int cmd_simmatrix(const std::string& wheel_path, const std::string& labels_arg,
                  const std::string& neutral, const std::string& out) {
  std::vector<std::string> labels;
  std::optional<std::string> neutral_label;
  if (fs::is_regular_file(labels_arg)) {
    const auto ds = load_corpus(labels_arg);
    labels = ds.label_set;
    neutral_label = ds.neutral_label;
  } else {
    labels = split_commas(labels_arg);
  }
  if (labels.empty()) throw UsageError("no labels given");
  if (!neutral.empty()) neutral_label = neutral;
  const auto [cfg, _] = wheel_config(wheel_path);
  const auto wheel = hcl::load_wheel(cfg, labels, neutral_label);
  const auto sim = hcl::similarity_matrix(wheel);
  const auto target = hcl::normalize_rows(sim);
  print_matrix(sim, "similarity");
  std::cout << '\n';
  print_matrix(target, "targets (row-normalized)");
  json j{{"labels", labels},
         {"neutral", wheel.neutral_index() ? json(labels[*wheel.neutral_index()]) : json(nullptr)},
         {"similarity", matrix_json(sim)},
         {"targets", matrix_json(target)}};
  emit_json(j, out);
  return 0;
}

int cmd_synth(const std::string& config, const std::string& out, const CLI::Option* seed_opt,
              std::uint64_t seed) {
  auto cfgs = hcl::synth_configs_from_json(read_json(config));
  if (seed_opt->count())
    for (std::size_t i = 0; i < cfgs.size(); ++i) cfgs[i].seed = seed + i;
  const auto ds = hcl::sweep_pshift(cfgs);
  write_file(out, hcl::serialize_dataset(ds));
  std::cout << "wrote " << out << ": " << ds.split(hcl::Split::train).size() << " train, "
            << ds.split(hcl::Split::val).size() << " val, " << ds.split(hcl::Split::test).size()
            << " test conversations\n";
  return 0;
}

void prepare_run_dir(const fs::path& dir, bool force) {
  if (fs::exists(dir)) {
    if (!force) throw UsageError("run directory '" + dir.string() + "' exists; use --force");
    fs::remove_all(dir);
  }
  fs::create_directories(dir);
}

std::string curve_csv(const hcl::TrainLog& log) {
  std::ostringstream os;
  os << "step,babystep,loss,offdiag_mass,entropy\n";
  for (const auto& s : log.steps)
    os << s.step << ',' << s.babystep << ',' << f4(s.loss) << ',' << f4(s.offdiag_mass) << ','
       << f4(s.entropy) << '\n';
  return os.str();
}

int cmd_train(const std::string& corpus, const std::string& wheel_path, const TrainFlags& flags,
              const std::string& out, bool force) {
  const std::string started = utc_now();
  const auto cfg = flags.resolve();
  const auto ds = load_corpus(corpus);
  const auto [wcfg, wsource] = wheel_config(wheel_path);
  const auto wheel = hcl::load_wheel(wcfg, ds.label_set, ds.neutral_label);
  const fs::path dir(out);
  prepare_run_dir(dir, force);

  const auto res = hcl::train(ds, wheel, cfg);

  json config{{"corpus", corpus}, {"train", hcl::to_json(cfg)}, {"wheel", wcfg}};
  write_file(dir / "config.json", config.dump(2) + "\n");
  {
    std::ostringstream os;
    hcl::write_train_log(res.log, os);
    write_file(dir / "trainlog.jsonl", os.str());
  }
  write_file(dir / "curve.csv", curve_csv(res.log));
  write_file(dir / "model.json",
             hcl::to_json(hcl::Checkpoint{res.params, cfg.seed, cfg.hash_dim, ds.label_set}).dump() +
                 "\n");

  json inputs = json::array();
  inputs.push_back(json{{"role", "corpus"}, {"path", corpus}, {"sha256", sha256_file(corpus)}});
  if (!wsource.empty())
    inputs.push_back(json{{"role", "wheel"}, {"path", wsource}, {"sha256", sha256_file(wsource)}});
  if (!flags.config_file.empty())
    inputs.push_back(
        json{{"role", "config"}, {"path", flags.config_file}, {"sha256", sha256_file(flags.config_file)}});
  json manifest{{"subcommand", "train"}, {"version", hcl::kVersion}, {"seed", cfg.seed},
                {"config", config},      {"inputs", inputs},        {"started_at", started},
                {"finished_at", utc_now()}};
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");

  std::cout << "strategy " << to_string(cfg.strategy) << ", " << res.log.steps.size()
            << " steps, wrote " << dir.string() << '\n';
  for (const auto& [k, v] : res.log.final_metrics) std::cout << "  " << k << " " << f4(v) << '\n';
  return 0;
}

void print_report(const hcl::EvalReport& rep) {
  std::cout << rep.overall.name << ' ' << f4(rep.overall.value)
            << (rep.overall.undefined ? " (undefined)" : "") << "\n\n";
  std::size_t w = 10;
  for (const auto& [l, _] : rep.per_label) w = std::max(w, l.size() + 2);
  const int iw = static_cast<int>(w);
  std::cout << std::left << std::setw(iw) << "label" << std::right << std::setw(10) << "F1"
            << std::setw(10) << "share" << std::setw(10) << "support" << '\n';
  for (const auto& [l, s] : rep.per_label)
    std::cout << std::left << std::setw(iw) << l << std::right << std::setw(10) << f4(s.score)
              << std::setw(10) << f4(s.share) << std::setw(10) << s.count << '\n';
  std::cout << '\n' << std::left << std::setw(iw) << "partition" << std::right << std::setw(10)
            << "score" << std::setw(10) << "share" << std::setw(10) << "count" << '\n';
  for (const auto& [name, p] : {std::pair{"ES", rep.es}, std::pair{"N-ES", rep.non_es}})
    std::cout << std::left << std::setw(iw) << name << std::right << std::setw(10) << f4(p.score)
              << std::setw(10) << f4(p.share) << std::setw(10) << p.count << '\n';
  if (!rep.groups.empty()) {
    std::cout << '\n' << std::left << std::setw(iw) << "group" << std::right << std::setw(10)
              << "F1" << '\n';
    for (const auto& [g, v] : rep.groups)
      std::cout << std::left << std::setw(iw) << g << std::right << std::setw(10) << f4(v) << '\n';
  }
}

int cmd_eval(const std::string& run_dir, const std::string& corpus, const std::string& split,
             const std::string& groups, const std::string& metric, const std::string& exclude,
             const std::string& out) {
  std::ifstream min(fs::path(run_dir) / "model.json");
  if (!min) throw hcl::DataError("no model.json in '" + run_dir + "'");
  const auto ckpt = hcl::load_checkpoint(min);
  const auto ds = load_corpus(corpus);
  if (ckpt.labels != ds.label_set)
    throw hcl::DataError("corpus label set differs from the model's");
  const auto s = split_arg(split);
  if (ds.split(s).empty()) throw hcl::DataError("split '" + split + "' is empty");

  hcl::ReportOptions opt;
  if (metric == "micro-f1") {
    opt.metric = hcl::Metric::micro_f1_excluding;
    opt.excluded = !exclude.empty() ? exclude : ds.neutral_label.value_or("");
    if (opt.excluded.empty()) throw UsageError("micro-f1 needs --exclude or a neutral label");
  } else if (metric != "weighted-f1") {
    throw UsageError("unknown metric '" + metric + "'");
  }
  if (groups == "hesf")
    opt.groups = hcl::hesf_groups();
  else if (groups != "none")
    throw UsageError("unknown grouping '" + groups + "'");

  const auto pred = hcl::predict_split(ckpt.params, ds, s, ckpt.hash_dim);
  const auto gold = hcl::gold_labels(ds, s);
  const auto rep = hcl::report(gold, pred, ds.label_set, hcl::es_flags(ds.split(s)), opt);
  print_report(rep);
  json j = hcl::to_json(rep);
  j["run"] = run_dir;
  j["split"] = split;
  emit_json(j, out);
  return 0;
}

int cmd_compare(const std::string& corpus, const std::string& wheel_path, const TrainFlags& flags,
                std::size_t n_seeds, std::size_t threads, const std::string& strategies_arg,
                const std::string& metric, const std::string& out) {
  if (n_seeds < 1) throw UsageError("--seeds must be >= 1");
  const auto cfg = flags.resolve();
  const auto ds = load_corpus(corpus);
  const auto [wcfg, _] = wheel_config(wheel_path);
  const auto wheel = hcl::load_wheel(wcfg, ds.label_set, ds.neutral_label);
  std::vector<hcl::Strategy> strategies;
  if (strategies_arg.empty())
    strategies.assign(hcl::kAllStrategies.begin(), hcl::kAllStrategies.end());
  else
    for (const auto& s : split_commas(strategies_arg)) strategies.push_back(hcl::parse_strategy(s));
  std::vector<std::uint64_t> seeds(n_seeds);
  std::iota(seeds.begin(), seeds.end(), cfg.seed);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());

  const auto runs = hcl::run_compare(ds, wheel, cfg, strategies, seeds, threads);
  const auto table = hcl::aggregate(runs, metric);

  std::cout << std::left << std::setw(10) << "strategy" << std::right << std::setw(10) << "mean"
            << std::setw(10) << "sd" << std::setw(4) << "n" << "   (" << metric << ")\n";
  json summary = json::object();
  for (const auto& [s, sm] : table) {
    std::cout << std::left << std::setw(10) << to_string(s) << std::right << std::setw(10)
              << f4(sm.mean) << std::setw(10) << f4(sm.sd) << std::setw(4) << sm.n << '\n';
    summary[std::string(to_string(s))] = {{"mean", sm.mean}, {"sd", sm.sd}, {"n", sm.n}};
  }
  json jruns = json::array();
  for (const auto& r : runs)
    jruns.push_back(json{{"strategy", to_string(r.strategy)},
                     {"seed", r.seed},
                     {"metrics", r.metrics},
                     {"final_offdiag_mass", r.final_offdiag_mass}});
  emit_json({{"metric", metric},
             {"seeds", seeds},
             {"config", hcl::to_json(cfg)},
             {"runs", jruns},
             {"summary", summary}},
            out);
  return 0;
}

int cmd_report(const std::string& run_dir, const std::string& out) {
  const fs::path dir(run_dir);
  const json manifest = read_json(dir / "manifest.json");
  std::ifstream in(dir / "trainlog.jsonl");
  if (!in) throw hcl::DataError("no trainlog.jsonl in '" + run_dir + "'");
  const auto log = hcl::read_train_log(in);

  std::cout << "run " << run_dir << '\n';
  const auto& train = manifest.at("config").at("train");
  std::cout << "strategy " << train.at("strategy").get<std::string>() << ", seed "
            << manifest.at("seed").get<std::uint64_t>() << ", version "
            << manifest.at("version").get<std::string>() << "\n\n";
  std::cout << std::setw(9) << "babystep" << std::setw(14) << "targets" << std::setw(7) << "pool"
            << std::setw(8) << "steps" << std::setw(10) << "loss" << std::setw(14) << "offdiag_end"
            << std::setw(10) << "entropy" << '\n';
  json phases = json::array();
  std::size_t cursor = 0;
  for (const auto& p : log.phases) {
    double loss = 0.0, mass = 0.0, entropy = 0.0;
    const std::size_t end = std::min(cursor + p.steps, log.steps.size());
    for (std::size_t i = cursor; i < end; ++i) loss += log.steps[i].loss;
    if (end > cursor) {
      loss /= static_cast<double>(end - cursor);
      mass = log.steps[end - 1].offdiag_mass;
      entropy = log.steps[end - 1].entropy;
    }
    cursor = end;
    std::cout << std::setw(9) << p.babystep << std::setw(14) << p.targets << std::setw(7)
              << p.conversations.size() << std::setw(8) << p.steps << std::setw(10) << f4(loss)
              << std::setw(14) << f4(mass) << std::setw(10) << f4(entropy) << '\n';
    phases.push_back(json{{"babystep", p.babystep},
                      {"targets", p.targets},
                      {"pool", p.conversations.size()},
                      {"steps", p.steps},
                      {"mean_loss", loss},
                      {"final_offdiag_mass", mass},
                      {"entropy", entropy}});
  }
  std::cout << '\n';
  for (const auto& [k, v] : log.final_metrics) std::cout << k << ' ' << f4(v) << '\n';
  emit_json({{"run", run_dir},
             {"strategy", train.at("strategy")},
             {"seed", manifest.at("seed")},
             {"steps", log.steps.size()},
             {"phases", phases},
             {"final_metrics", log.final_metrics}},
            out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid curriculum learning for emotion recognition in conversation", "hcl"};
  app.set_version_flag("--version", std::string(hcl::kVersion));
  app.require_subcommand(1);
  app.footer("Exit codes: 0 success, 1 usage error, 2 data error.\n"
             "HCL_CONFIG_DIR: directory holding default_wheel.json.");

  std::function<int()> run;

  std::string corpus, out, csv, split = "train", mode = "any", wheel, labels, neutral, config;
  std::string run_dir, groups = "none", metric = "weighted-f1", exclude, strategies;
  std::string cmp_metric = "test_weighted_f1", eval_split = "test";
  std::size_t k = 0, n_seeds = 5, threads = 0;
  std::uint64_t seed = 0;
  bool force = false;
  TrainFlags train_flags, compare_flags;

  auto* stats = app.add_subcommand("stats", "Dataset statistics");
  stats->add_option("corpus", corpus)->required();
  stats->add_option("--out", out, "write JSON here ('-' for stdout)");
  stats->callback([&] { run = [&] { return cmd_stats(corpus, out); }; });

  auto* score = app.add_subcommand("score", "Per-conversation difficulty scores");
  score->add_option("corpus", corpus)->required();
  score->add_option("--split", split, "train|val|test");
  score->add_option("--shift-mode", mode, "any|inter_speaker_only");
  score->add_option("--out", out, "write JSON here ('-' for stdout)");
  score->callback([&] { run = [&] { return cmd_score(corpus, split, mode, out); }; });

  auto* plan = app.add_subcommand("plan", "Baby-step buckets and label-entropy curve");
  plan->add_option("corpus", corpus)->required();
  plan->add_option("--k", k, "number of buckets")->required();
  plan->add_option("--shift-mode", mode, "any|inter_speaker_only");
  plan->add_option("--out", out, "write JSON here ('-' for stdout)");
  plan->add_option("--csv", csv, "write step,entropy CSV here");
  plan->callback([&] { run = [&] { return cmd_plan(corpus, k, mode, out, csv); }; });

  auto* sim = app.add_subcommand("simmatrix", "Similarity and target matrices");
  sim->add_option("wheel", wheel, "wheel JSON file or 'default'")->required();
  sim->add_option("labels", labels, "comma-separated labels or a corpus file")->required();
  sim->add_option("--neutral", neutral, "neutral label");
  sim->add_option("--out", out, "write JSON here ('-' for stdout)");
  sim->callback([&] { run = [&] { return cmd_simmatrix(wheel, labels, neutral, out); }; });

  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus");
  synth->add_option("--config", config, "synth config JSON")->required();
  synth->add_option("--out", out, "corpus file to write")->required();
  auto* synth_seed = synth->add_option("--seed", seed, "override the base seed");
  synth->callback([&] { run = [&] { return cmd_synth(config, out, synth_seed, seed); }; });

  auto* train = app.add_subcommand("train", "Train one model into a run directory");
  train->add_option("corpus", corpus)->required();
  train->add_option("--wheel", wheel, "wheel JSON file");
  train->add_option("--out", out, "run directory")->required();
  train->add_flag("--force", force, "replace an existing run directory");
  train_flags.attach(train, true);
  train->callback([&] { run = [&] { return cmd_train(corpus, wheel, train_flags, out, force); }; });

  auto* eval = app.add_subcommand("eval", "Evaluate a trained run on a corpus split");
  eval->add_option("run_dir", run_dir)->required();
  eval->add_option("corpus", corpus)->required();
  eval->add_option("--split", eval_split, "train|val|test (default test)");
  eval->add_option("--groups", groups, "none|hesf");
  eval->add_option("--metric", metric, "weighted-f1|micro-f1");
  eval->add_option("--exclude", exclude, "class excluded by micro-f1 (default: neutral)");
  eval->add_option("--out", out, "write JSON here ('-' for stdout)");
  eval->callback([&] {
    run = [&] { return cmd_eval(run_dir, corpus, eval_split, groups, metric, exclude, out); };
  });

  auto* compare = app.add_subcommand("compare", "All strategies over several seeds");
  compare->add_option("corpus", corpus)->required();
  compare->add_option("--wheel", wheel, "wheel JSON file");
  compare->add_option("--seeds", n_seeds, "number of seeds, starting at --seed");
  compare->add_option("--threads", threads, "worker threads (0 = all cores)");
  compare->add_option("--strategies", strategies, "comma-separated subset");
  compare->add_option("--metric", cmp_metric, "final metric to tabulate");
  compare->add_option("--out", out, "write JSON here ('-' for stdout)");
  compare_flags.attach(compare, false);
  compare->callback([&] {
    run = [&] {
      return cmd_compare(corpus, wheel, compare_flags, n_seeds, threads, strategies, cmp_metric, out);
    };
  });

  auto* report = app.add_subcommand("report", "Summarize a run directory");
  report->add_option("run_dir", run_dir)->required();
  report->add_option("--out", out, "write JSON here ('-' for stdout)");
  report->callback([&] { run = [&] { return cmd_report(run_dir, out); }; });

  if (argc < 2) {
    std::cerr << app.help();
    return 1;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    return run();
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const hcl::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const hcl::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const json::exception& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  }
}
