#pragma once

#include "scatter/common.hpp"
#include "scatter/dataset.hpp"
#include "scatter/gcn.hpp"
#include "scatter/graph.hpp"
#include "scatter/kmeans.hpp"
#include "scatter/sampling.hpp"
#include "scatter/simbench.hpp"

#include <json.hpp>

#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace scatter {

namespace detail {

inline std::string sanitize_csv(std::string s) {
  for (char& c : s) {
    if (c == ',') c = ';';
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
  }
  std::filesystem::rename(tmp, path);
}

// First CSV column -> whole line, header skipped.
inline std::map<std::string, std::string> read_keyed_rows(const std::filesystem::path& path) {
  std::map<std::string, std::string> rows;
  std::ifstream in(path);
  if (!in) return rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (first) {
      first = false;
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) continue;
    rows[line.substr(0, comma)] = line;
  }
  return rows;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cols;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    if (comma == std::string::npos) {
      cols.push_back(line.substr(start));
      return cols;
    }
    cols.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

}  // namespace detail

inline unsigned worker_count(std::size_t jobs) {
  unsigned n = std::thread::hardware_concurrency();
  if (n == 0) n = 1;
  if (const char* env = std::getenv("SCATTER_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v >= 1) n = static_cast<unsigned>(v);
  }
  if (jobs < n) n = static_cast<unsigned>(jobs);
  return std::max(1u, n);
}

/// Runs compute(0..n-1) on a worker pool; consume runs serially on the
/// caller's thread in completion order.
template <typename R>
inline void parallel_run(std::size_t n, unsigned workers,
                         const std::function<R(std::size_t)>& compute,
                         const std::function<void(std::size_t, R&&)>& consume) {
  if (n == 0) return;
  if (workers <= 1 || n == 1) {
    for (std::size_t i = 0; i < n; ++i) consume(i, compute(i));
    return;
  }
  std::mutex mu;
  std::condition_variable cv;
  std::deque<std::pair<std::size_t, R>> ready;
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (unsigned w = 0; w < workers; ++w)
    threads.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        R r = compute(i);
        {
          std::lock_guard<std::mutex> lock(mu);
          ready.emplace_back(i, std::move(r));
        }
        cv.notify_one();
      }
    });
  std::size_t finished = 0;
  while (finished < n) {
    std::unique_lock<std::mutex> lock(mu);
    cv.wait(lock, [&] { return !ready.empty(); });
    auto item = std::move(ready.front());
    ready.pop_front();
    lock.unlock();
    ++finished;
    consume(item.first, std::move(item.second));
  }
  for (auto& t : threads) t.join();
}

struct ExperimentConfig {
  std::string dataset;  // directory in the canonical layout
  std::vector<std::string> samplers;
  std::vector<double> budget_ratios;
  double b0_ratio = 0;  // 0 derives the per-dataset default schedule
  int rounds = 0;       // 0 derives T from the schedule
  double redundancy = 3.0;
  int k = 2;
  ClusteringTarget target = ClusteringTarget::PropagatedFeatures;
  NormalizationKind norm = NormalizationKind::SymmetricWithSelfLoops;
  std::vector<std::uint64_t> seeds;
  TrainConfig train;

  void validate() const {
    if (samplers.empty()) throw std::invalid_argument("ExperimentConfig: no samplers");
    if (seeds.empty()) throw std::invalid_argument("ExperimentConfig: no seeds");
    if (budget_ratios.empty()) throw std::invalid_argument("ExperimentConfig: no budget ratios");
    for (double r : budget_ratios)
      if (!(r > 0) || r > 1)
        throw std::invalid_argument("ExperimentConfig: budget ratio outside (0,1]");
    if (b0_ratio < 0 || b0_ratio > 1)
      throw std::invalid_argument("ExperimentConfig: b0_ratio outside [0,1]");
    if (rounds < 0) throw std::invalid_argument("ExperimentConfig: negative rounds");
    if (!(redundancy >= 1)) throw std::invalid_argument("ExperimentConfig: redundancy < 1");
    if (k < 0) throw std::invalid_argument("ExperimentConfig: negative k");
    for (const std::string& s : samplers)
      if (s != "scattersample" && s != "random" && s != "maxuncertainty" && s != "featprop" &&
          s != "roundrobin")
        throw std::invalid_argument("ExperimentConfig: unknown sampler '" + s + "'");
    train.validate();
  }
};

inline ClusteringTarget parse_clustering_target(const std::string& s) {
  if (s == "propagated") return ClusteringTarget::PropagatedFeatures;
  if (s == "raw") return ClusteringTarget::RawFeatures;
  if (s == "model_output") return ClusteringTarget::ModelOutput;
  throw std::invalid_argument("unknown clustering target '" + s + "'");
}

inline NormalizationKind parse_normalization(const std::string& s) {
  if (s == "symmetric") return NormalizationKind::SymmetricWithSelfLoops;
  if (s == "row_stochastic") return NormalizationKind::RowStochasticWithSelfLoops;
  throw std::invalid_argument("unknown normalization '" + s + "'");
}

inline ExperimentConfig parse_experiment_config(const nlohmann::json& j) {
  ExperimentConfig cfg;
  cfg.dataset = j.at("dataset").get<std::string>();
  cfg.samplers = j.at("samplers").get<std::vector<std::string>>();
  cfg.budget_ratios = j.at("budget_ratios").get<std::vector<double>>();
  cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  if (j.contains("b0_ratio")) cfg.b0_ratio = j["b0_ratio"].get<double>();
  if (j.contains("rounds")) cfg.rounds = j["rounds"].get<int>();
  if (j.contains("redundancy")) cfg.redundancy = j["redundancy"].get<double>();
  if (j.contains("k")) cfg.k = j["k"].get<int>();
  if (j.contains("clustering_target"))
    cfg.target = parse_clustering_target(j["clustering_target"].get<std::string>());
  if (j.contains("normalization"))
    cfg.norm = parse_normalization(j["normalization"].get<std::string>());
  if (j.contains("train")) {
    const auto& t = j["train"];
    if (t.contains("learning_rate")) cfg.train.learning_rate = t["learning_rate"].get<double>();
    if (t.contains("weight_decay")) cfg.train.weight_decay = t["weight_decay"].get<double>();
    if (t.contains("epochs")) cfg.train.epochs = t["epochs"].get<int>();
    if (t.contains("hidden_dim")) cfg.train.hidden_dim = t["hidden_dim"].get<int>();
    if (t.contains("optimizer")) {
      const std::string o = t["optimizer"].get<std::string>();
      if (o == "adam")
        cfg.train.optimizer = Optimizer::Adam;
      else if (o == "gd")
        cfg.train.optimizer = Optimizer::PlainGradientDescent;
      else
        throw std::invalid_argument("unknown optimizer '" + o + "'");
    }
  }
  cfg.validate();
  return cfg;
}

inline ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  nlohmann::json j;
  in >> j;
  return parse_experiment_config(j);
}

/// B from the ratio; B0 and T from the config or, when left at 0, from the
/// dataset-size default schedule (<=5000 train nodes: B0 3%, 1% per round;
/// larger: B0 1%, 0.5% per round).
inline Budget make_budget(const ExperimentConfig& cfg, double ratio, std::int64_t train_size) {
  Budget b;
  b.total = std::max<std::int64_t>(
      1, static_cast<std::int64_t>(ratio * static_cast<double>(train_size)));
  b.total = std::min(b.total, train_size);
  const bool small = train_size <= 5000;
  const double b0r = cfg.b0_ratio > 0 ? cfg.b0_ratio : (small ? 0.03 : 0.01);
  b.initial = std::max<std::int64_t>(
      1, static_cast<std::int64_t>(b0r * static_cast<double>(train_size)));
  b.initial = std::min(b.initial, b.total);
  if (cfg.rounds > 0) {
    b.rounds = cfg.rounds;
  } else {
    const double step_ratio = small ? 0.01 : 0.005;
    const std::int64_t step = std::max<std::int64_t>(
        1, static_cast<std::int64_t>(step_ratio * static_cast<double>(train_size)));
    const std::int64_t remaining = b.total - b.initial;
    b.rounds = remaining == 0 ? 1 : static_cast<int>((remaining + step - 1) / step);
  }
  b.redundancy = cfg.redundancy;
  return b;
}

struct CellKey {
  std::string sampler;
  double ratio = 0;
  std::uint64_t seed = 0;
  double redundancy = 1;
  ClusteringTarget target = ClusteringTarget::PropagatedFeatures;
};

struct CellOutcome {
  std::string hash;
  Budget budget;
  std::int64_t n_labeled = 0;
  double accuracy = std::numeric_limits<double>::quiet_NaN();
  std::string error;
  RunHistory history;
  std::vector<NodeId> labeled;
  double seconds = 0;
};

inline std::string cell_hash(const DatasetBundle& bundle, const ExperimentConfig& cfg,
                             const CellKey& key, const Budget& budget) {
  std::ostringstream desc;
  desc << "dataset=" << bundle.name << ";checksum=" << to_hex(bundle.checksum)
       << ";norm=" << to_string(cfg.norm) << ";k=" << cfg.k
       << ";target=" << to_string(key.target) << ";sampler=" << key.sampler
       << ";ratio=" << detail::format_double(key.ratio) << ";seed=" << key.seed
       << ";r=" << detail::format_double(key.redundancy) << ";B=" << budget.total
       << ";B0=" << budget.initial << ";T=" << budget.rounds
       << ";lr=" << detail::format_double(cfg.train.learning_rate)
       << ";wd=" << detail::format_double(cfg.train.weight_decay)
       << ";epochs=" << cfg.train.epochs << ";h=" << cfg.train.hidden_dim
       << ";opt=" << (cfg.train.optimizer == Optimizer::Adam ? "adam" : "gd");
  return to_hex(fnv1a64(desc.str()));
}

/// One sweep cell: select under the budget, train, score on the test split.
/// scattersample and maxuncertainty (its r=1 reduction) run the full round
/// loop; roundrobin shares the clustered initial sampling; random and
/// featprop pick their whole budget in one shot.
inline CellOutcome run_cell(const DatasetBundle& bundle, const ExperimentConfig& cfg,
                            const CellKey& key) {
  const auto t0 = std::chrono::steady_clock::now();
  CellOutcome out;
  out.budget = make_budget(cfg, key.ratio, static_cast<std::int64_t>(bundle.splits.train.size()));
  out.budget.redundancy = key.redundancy;
  out.hash = cell_hash(bundle, cfg, key, out.budget);
  try {
    LabelOracle oracle(bundle.labels, bundle.splits.train, out.budget.total);
    TrainConfig tc = cfg.train;
    tc.seed = sub_seed(key.seed, 2);
    const std::uint64_t select_seed = sub_seed(key.seed, 1);
    auto eval = [&](const ProbabilityMatrix& probs) {
      return evaluate_accuracy(probs, bundle.labels, bundle.splits.test);
    };

    if (key.sampler == "scattersample" || key.sampler == "maxuncertainty") {
      Budget b = out.budget;
      if (key.sampler == "maxuncertainty") b.redundancy = 1.0;
      ScatterSampleOptions opts;
      opts.norm = cfg.norm;
      opts.target = key.target;
      opts.seed = select_seed;
      opts.evaluate = eval;
      const ScatterSampleResult res = run_scattersample(
          bundle.graph, bundle.features, oracle, b, tc, bundle.num_classes, cfg.k, opts);
      out.history = res.history;
      out.labeled = res.labeled;
      out.accuracy = res.history.rounds.back().test_accuracy;
    } else if (key.sampler == "random" || key.sampler == "featprop") {
      std::vector<NodeId> sel;
      if (key.sampler == "random") {
        sel = random_select(bundle.splits.train, static_cast<std::size_t>(out.budget.total),
                            select_seed);
      } else {
        const Matrix x_k = propagate_features(bundle.graph, bundle.features, cfg.k, cfg.norm);
        sel = featprop_select(x_k, bundle.splits.train, static_cast<std::size_t>(out.budget.total),
                              select_seed);
      }
      for (NodeId v : sel) oracle.query(v);
      const GcnParams params = train(bundle.graph, bundle.features, sel, oracle.revealed(), tc,
                                     bundle.num_classes);
      out.accuracy = eval(predict_proba(bundle.graph, bundle.features, params));
      RoundRecord rec;
      rec.round = 0;
      rec.selected = sel;
      rec.n_labeled = static_cast<std::int64_t>(sel.size());
      rec.test_accuracy = out.accuracy;
      out.history.rounds.push_back(std::move(rec));
      out.labeled = sel;
    } else if (key.sampler == "roundrobin") {
      const Budget& b = out.budget;
      const std::vector<NodeId>& train_ids = oracle.queryable();
      const Matrix x_k = propagate_features(bundle.graph, bundle.features, cfg.k, cfg.norm);
      const Matrix train_points = detail::gather_rows(x_k, train_ids);
      const ClusterModel init_model = kmeans_pp(
          train_points, static_cast<int>(b.initial), sub_seed(select_seed, 0));
      std::unordered_map<NodeId, int> cluster_of;
      for (std::size_t i = 0; i < train_ids.size(); ++i)
        cluster_of[train_ids[i]] = init_model.assignment[i];
      std::vector<NodeId> labeled =
          select_nearest_to_centers(train_points, train_ids, init_model);
      for (NodeId v : labeled) oracle.query(v);

      auto retrain = [&](int round) {
        TrainConfig rc = tc;
        rc.seed = sub_seed(tc.seed, static_cast<std::uint64_t>(round));
        const GcnParams params = train(bundle.graph, bundle.features, labeled, oracle.revealed(),
                                       rc, bundle.num_classes);
        out.labeled = labeled;
        return eval(predict_proba(bundle.graph, bundle.features, params));
      };
      double acc = retrain(0);
      {
        RoundRecord rec;
        rec.round = 0;
        rec.selected = labeled;
        rec.n_labeled = static_cast<std::int64_t>(labeled.size());
        rec.test_accuracy = acc;
        out.history.rounds.push_back(std::move(rec));
      }
      const std::int64_t per_round = (b.total - b.initial) / b.rounds;
      for (int t = 1; t <= b.rounds; ++t) {
        const std::int64_t left = b.total - static_cast<std::int64_t>(labeled.size());
        const std::int64_t b_t = (t == b.rounds) ? left : std::min(left, per_round);
        if (b_t <= 0) continue;
        std::vector<NodeId> pool;
        std::set_difference(train_ids.begin(), train_ids.end(), labeled.begin(), labeled.end(),
                            std::back_inserter(pool));
        const std::vector<NodeId> picked =
            round_robin_select(cluster_of, pool, static_cast<std::size_t>(b_t),
                               sub_seed(select_seed, static_cast<std::uint64_t>(t)));
        for (NodeId v : picked) oracle.query(v);
        std::vector<NodeId> merged;
        std::merge(labeled.begin(), labeled.end(), picked.begin(), picked.end(),
                   std::back_inserter(merged));
        labeled = std::move(merged);
        acc = retrain(t);
        RoundRecord rec;
        rec.round = t;
        rec.selected = picked;
        rec.n_labeled = static_cast<std::int64_t>(labeled.size());
        rec.test_accuracy = acc;
        out.history.rounds.push_back(std::move(rec));
      }
      out.accuracy = acc;
    } else {
      throw std::invalid_argument("unknown sampler '" + key.sampler + "'");
    }
    out.n_labeled = oracle.spent();
  } catch (const std::exception& e) {
    out.error = detail::sanitize_csv(e.what());
    out.accuracy = std::numeric_limits<double>::quiet_NaN();
  }
  out.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

namespace detail {

struct SweepPlan {
  std::vector<CellKey> keys;
  std::vector<std::string> hashes;
  // Extra leading columns after the hash, one vector per cell.
  std::function<std::string(std::size_t)> extra_cols;
};

// Shared driver: resumes by hash, rewrites the CSV atomically after every
// completed cell, and keeps wall-clock in a sidecar so the main CSV is a
// pure function of the config.
inline std::map<std::string, std::string> run_sweep(
    const DatasetBundle& bundle, const ExperimentConfig& cfg, const SweepPlan& plan,
    const std::string& header, const std::filesystem::path& out) {
  const std::size_t n = plan.keys.size();
  std::map<std::string, std::string> line_by_hash = read_keyed_rows(out);
  std::map<std::string, std::string> timing = read_keyed_rows(out.string() + ".timing.csv");

  const std::filesystem::path hist_dir = out.string() + ".history";
  std::filesystem::create_directories(hist_dir);

  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < n; ++i)
    if (!line_by_hash.count(plan.hashes[i])) todo.push_back(i);

  auto rewrite = [&] {
    std::string body = header + "\n";
    for (std::size_t i = 0; i < n; ++i) {
      auto it = line_by_hash.find(plan.hashes[i]);
      if (it != line_by_hash.end()) body += it->second + "\n";
    }
    atomic_write(out, body);
    std::string tbody = "config,seconds\n";
    for (std::size_t i = 0; i < n; ++i) {
      auto it = timing.find(plan.hashes[i]);
      if (it != timing.end()) tbody += it->second + "\n";
    }
    atomic_write(out.string() + ".timing.csv", tbody);
  };

  const std::function<CellOutcome(std::size_t)> compute = [&](std::size_t j) {
    return run_cell(bundle, cfg, plan.keys[todo[j]]);
  };
  const std::function<void(std::size_t, CellOutcome&&)> consume = [&](std::size_t j,
                                                                      CellOutcome&& res) {
    const std::size_t i = todo[j];
    std::ostringstream row;
    row << res.hash << ',' << bundle.name << ',' << plan.extra_cols(i) << ','
        << res.budget.total << ',' << res.n_labeled << ',' << format_double(res.accuracy) << ','
        << res.error;
    line_by_hash[plan.hashes[i]] = row.str();
    {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.3f", res.seconds);
      timing[plan.hashes[i]] = plan.hashes[i] + "," + buf;
    }
    std::ostringstream hist;
    hist << kHistoryCsvHeader << '\n';
    write_history_csv(hist, res.history, plan.keys[i].sampler, plan.keys[i].seed);
    atomic_write(hist_dir / (plan.hashes[i] + ".csv"), hist.str());
    rewrite();
  };

  parallel_run<CellOutcome>(todo.size(), worker_count(todo.size()), compute, consume);
  if (todo.empty()) rewrite();
  return line_by_hash;
}

struct GroupStat {
  int n = 0;
  double mean = 0;
  double stdev = 0;
};

// Mean/std of the accuracy column over rows sharing a group label; rows with
// a non-empty error column are dropped.
inline std::map<std::string, GroupStat> summarize(
    const std::vector<std::pair<std::string, std::string>>& group_and_line,
    std::size_t accuracy_col) {
  std::map<std::string, std::vector<double>> acc;
  for (const auto& [group, line] : group_and_line) {
    const std::vector<std::string> cols = split_csv_line(line);
    if (cols.size() <= accuracy_col + 1) continue;
    if (!cols.back().empty()) continue;  // error column
    const std::string& a = cols[accuracy_col];
    if (a == "nan") continue;
    acc[group].push_back(std::strtod(a.c_str(), nullptr));
  }
  std::map<std::string, GroupStat> stats;
  for (const auto& [group, v] : acc) {
    GroupStat s;
    s.n = static_cast<int>(v.size());
    for (double x : v) s.mean += x;
    s.mean /= s.n;
    if (s.n > 1) {
      for (double x : v) s.stdev += (x - s.mean) * (x - s.mean);
      s.stdev = std::sqrt(s.stdev / (s.n - 1));
    }
    stats[group] = s;
  }
  return stats;
}

}  // namespace detail

/// Full benchmark sweep: every configured sampler at every budget ratio and
/// seed. Emits one row per cell plus a seed-aggregated summary sidecar.
inline void run_benchmark(const DatasetBundle& bundle, const ExperimentConfig& cfg,
                          const std::filesystem::path& out) {
  cfg.validate();
  detail::SweepPlan plan;
  for (const std::string& sampler : cfg.samplers)
    for (double ratio : cfg.budget_ratios)
      for (std::uint64_t seed : cfg.seeds) {
        CellKey key{sampler, ratio, seed, cfg.redundancy, cfg.target};
        const Budget b =
            make_budget(cfg, ratio, static_cast<std::int64_t>(bundle.splits.train.size()));
        plan.hashes.push_back(cell_hash(bundle, cfg, key, b));
        plan.keys.push_back(std::move(key));
      }
  plan.extra_cols = [&](std::size_t i) {
    std::ostringstream s;
    s << plan.keys[i].sampler << ',' << detail::format_double(plan.keys[i].ratio) << ','
      << plan.keys[i].seed;
    return s.str();
  };

  const auto lines = detail::run_sweep(
      bundle, cfg, plan, "config,dataset,sampler,budget_ratio,seed,budget,n_labeled,test_accuracy,error",
      out);

  std::vector<std::pair<std::string, std::string>> grouped;
  for (std::size_t i = 0; i < plan.keys.size(); ++i) {
    auto it = lines.find(plan.hashes[i]);
    if (it == lines.end()) continue;
    grouped.emplace_back(plan.keys[i].sampler + "," + detail::format_double(plan.keys[i].ratio),
                         it->second);
  }
  const auto stats = detail::summarize(grouped, 7);
  std::string body = "dataset,sampler,budget_ratio,n_seeds,mean_accuracy,std_accuracy\n";
  for (const std::string& sampler : cfg.samplers)
    for (double ratio : cfg.budget_ratios) {
      const std::string group = sampler + "," + detail::format_double(ratio);
      auto it = stats.find(group);
      if (it == stats.end()) continue;
      body += bundle.name + "," + group + "," + std::to_string(it->second.n) + "," +
              detail::format_double(it->second.mean) + "," +
              detail::format_double(it->second.stdev) + "\n";
    }
  detail::atomic_write(out.string() + ".summary.csv", body);
}

inline void run_benchmark(const ExperimentConfig& cfg, const std::filesystem::path& out) {
  run_benchmark(load_dataset(cfg.dataset), cfg, out);
}

/// Redundancy ablation: scattersample at each r in r_values; the r=1 column
/// is definitionally the MaxUncertainty arm.
inline void run_ablation_redundancy(const DatasetBundle& bundle, const ExperimentConfig& cfg,
                                    const std::vector<double>& r_values,
                                    const std::filesystem::path& out) {
  cfg.validate();
  if (r_values.empty()) throw std::invalid_argument("run_ablation_redundancy: no r values");
  for (double r : r_values)
    if (!(r >= 1)) throw std::invalid_argument("run_ablation_redundancy: r must be >= 1");

  detail::SweepPlan plan;
  for (double r : r_values)
    for (double ratio : cfg.budget_ratios)
      for (std::uint64_t seed : cfg.seeds) {
        CellKey key{"scattersample", ratio, seed, r, cfg.target};
        const Budget b =
            make_budget(cfg, ratio, static_cast<std::int64_t>(bundle.splits.train.size()));
        Budget br = b;
        br.redundancy = r;
        plan.hashes.push_back(cell_hash(bundle, cfg, key, br));
        plan.keys.push_back(std::move(key));
      }
  plan.extra_cols = [&](std::size_t i) {
    std::ostringstream s;
    s << plan.keys[i].sampler << ',' << detail::format_double(plan.keys[i].redundancy) << ','
      << detail::format_double(plan.keys[i].ratio) << ',' << plan.keys[i].seed;
    return s.str();
  };

  const auto lines = detail::run_sweep(
      bundle, cfg, plan,
      "config,dataset,sampler,redundancy,budget_ratio,seed,budget,n_labeled,test_accuracy,error",
      out);

  std::vector<std::pair<std::string, std::string>> grouped;
  for (std::size_t i = 0; i < plan.keys.size(); ++i) {
    auto it = lines.find(plan.hashes[i]);
    if (it == lines.end()) continue;
    grouped.emplace_back(detail::format_double(plan.keys[i].redundancy) + "," +
                             detail::format_double(plan.keys[i].ratio),
                         it->second);
  }
  const auto stats = detail::summarize(grouped, 8);
  std::string body = "dataset,redundancy,budget_ratio,n_seeds,mean_accuracy,std_accuracy\n";
  for (double r : r_values)
    for (double ratio : cfg.budget_ratios) {
      const std::string group =
          detail::format_double(r) + "," + detail::format_double(ratio);
      auto it = stats.find(group);
      if (it == stats.end()) continue;
      body += bundle.name + "," + group + "," + std::to_string(it->second.n) + "," +
              detail::format_double(it->second.mean) + "," +
              detail::format_double(it->second.stdev) + "\n";
    }
  detail::atomic_write(out.string() + ".summary.csv", body);
}

namespace detail {

inline std::vector<NodeId> history_labeled_nodes(const std::filesystem::path& file) {
  std::ifstream in(file);
  std::vector<NodeId> nodes;
  if (!in) return nodes;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    const std::vector<std::string> cols = split_csv_line(line);
    if (cols.size() < 5) continue;
    std::stringstream ids(cols[4]);
    std::string tok;
    while (std::getline(ids, tok, ';'))
      if (!tok.empty()) nodes.push_back(static_cast<NodeId>(std::stol(tok)));
  }
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  return nodes;
}

}  // namespace detail

/// Clustering-target ablation: scattersample with each of the three cluster
/// coordinate choices. Also emits pairwise Jaccard overlap of the final
/// labeled sets per (ratio, seed).
inline void run_ablation_clustering_target(const DatasetBundle& bundle,
                                           const ExperimentConfig& cfg,
                                           const std::filesystem::path& out) {
  cfg.validate();
  const std::vector<ClusteringTarget> targets = {ClusteringTarget::PropagatedFeatures,
                                                 ClusteringTarget::RawFeatures,
                                                 ClusteringTarget::ModelOutput};
  detail::SweepPlan plan;
  for (ClusteringTarget t : targets)
    for (double ratio : cfg.budget_ratios)
      for (std::uint64_t seed : cfg.seeds) {
        CellKey key{"scattersample", ratio, seed, cfg.redundancy, t};
        const Budget b =
            make_budget(cfg, ratio, static_cast<std::int64_t>(bundle.splits.train.size()));
        plan.hashes.push_back(cell_hash(bundle, cfg, key, b));
        plan.keys.push_back(std::move(key));
      }
  plan.extra_cols = [&](std::size_t i) {
    std::ostringstream s;
    s << plan.keys[i].sampler << ',' << to_string(plan.keys[i].target) << ','
      << detail::format_double(plan.keys[i].ratio) << ',' << plan.keys[i].seed;
    return s.str();
  };

  const auto lines = detail::run_sweep(
      bundle, cfg, plan,
      "config,dataset,sampler,clustering_target,budget_ratio,seed,budget,n_labeled,test_accuracy,error",
      out);

  std::vector<std::pair<std::string, std::string>> grouped;
  for (std::size_t i = 0; i < plan.keys.size(); ++i) {
    auto it = lines.find(plan.hashes[i]);
    if (it == lines.end()) continue;
    grouped.emplace_back(std::string(to_string(plan.keys[i].target)) + "," +
                             detail::format_double(plan.keys[i].ratio),
                         it->second);
  }
  const auto stats = detail::summarize(grouped, 8);
  std::string body = "dataset,clustering_target,budget_ratio,n_seeds,mean_accuracy,std_accuracy\n";
  for (ClusteringTarget t : targets)
    for (double ratio : cfg.budget_ratios) {
      const std::string group =
          std::string(to_string(t)) + "," + detail::format_double(ratio);
      auto it = stats.find(group);
      if (it == stats.end()) continue;
      body += bundle.name + "," + group + "," + std::to_string(it->second.n) + "," +
              detail::format_double(it->second.mean) + "," +
              detail::format_double(it->second.stdev) + "\n";
    }
  detail::atomic_write(out.string() + ".summary.csv", body);

  // Pairwise selected-set overlap, reconstructed from the history files so
  // resumed cells participate too.
  const std::filesystem::path hist_dir = out.string() + ".history";
  std::string overlap = "budget_ratio,seed,target_a,target_b,jaccard\n";
  for (double ratio : cfg.budget_ratios)
    for (std::uint64_t seed : cfg.seeds)
      for (std::size_t a = 0; a < targets.size(); ++a)
        for (std::size_t bidx = a + 1; bidx < targets.size(); ++bidx) {
          auto find_hash = [&](ClusteringTarget t) -> std::string {
            for (std::size_t i = 0; i < plan.keys.size(); ++i)
              if (plan.keys[i].target == t && plan.keys[i].ratio == ratio &&
                  plan.keys[i].seed == seed)
                return plan.hashes[i];
            return {};
          };
          const std::vector<NodeId> sa =
              detail::history_labeled_nodes(hist_dir / (find_hash(targets[a]) + ".csv"));
          const std::vector<NodeId> sb =
              detail::history_labeled_nodes(hist_dir / (find_hash(targets[bidx]) + ".csv"));
          if (sa.empty() || sb.empty()) continue;
          std::vector<NodeId> inter;
          std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(),
                                std::back_inserter(inter));
          const double jac = static_cast<double>(inter.size()) /
                             static_cast<double>(sa.size() + sb.size() - inter.size());
          overlap += detail::format_double(ratio) + "," + std::to_string(seed) + "," +
                     to_string(targets[a]) + std::string(",") + to_string(targets[bidx]) + "," +
                     detail::format_double(jac) + "\n";
        }
  detail::atomic_write(out.string() + ".overlap.csv", overlap);
}

/// Simulation sweep over inter-cluster edge probabilities and seeds. Row
/// schema matches the simulation CSV contract; seed-averaged ratios go to
/// the summary sidecar.
inline void run_simulation_sweep(SimConfig base, const std::vector<double>& p_values,
                                 const std::vector<std::uint64_t>& seeds,
                                 const std::filesystem::path& out) {
  if (seeds.empty()) throw std::invalid_argument("run_simulation_sweep: no seeds");
  if (p_values.empty()) throw std::invalid_argument("run_simulation_sweep: no p_inter values");
  for (double p : p_values)
    if (p < 0 || p > 1)
      throw std::invalid_argument("run_simulation_sweep: p_inter outside [0,1]");

  struct SimCell {
    SimResult result;
    std::string error;
  };
  const std::size_t n = p_values.size() * seeds.size();
  std::vector<SimCell> cells(n);
  const std::function<SimCell(std::size_t)> compute = [&](std::size_t i) {
    SimCell cell;
    SimConfig cfg = base;
    cfg.p_inter = p_values[i / seeds.size()];
    cfg.seed = seeds[i % seeds.size()];
    try {
      cell.result = run_simulation(cfg);
    } catch (const std::exception& e) {
      cell.error = detail::sanitize_csv(e.what());
    }
    return cell;
  };
  const std::function<void(std::size_t, SimCell&&)> consume = [&](std::size_t i, SimCell&& c) {
    cells[i] = std::move(c);
  };
  parallel_run<SimCell>(n, worker_count(n), compute, consume);

  std::string body = "seed,p_inter,method,mse_total,mse_c1,mse_c2,ratio\n";
  std::map<double, std::vector<double>> ratios;
  for (std::size_t pi = 0; pi < p_values.size(); ++pi)
    for (std::size_t si = 0; si < seeds.size(); ++si) {
      const SimCell& cell = cells[pi * seeds.size() + si];
      const std::string prefix =
          std::to_string(seeds[si]) + "," + detail::format_double(p_values[pi]) + ",";
      if (!cell.error.empty()) {
        body += prefix + "error: " + cell.error + ",nan,nan,nan,nan\n";
        continue;
      }
      const SimResult& r = cell.result;
      body += prefix + "max_uncertainty," + detail::format_double(r.mse_max_uncertainty) + "," +
              detail::format_double(r.per_cluster_mse[0][0]) + "," +
              detail::format_double(r.per_cluster_mse[0][1]) + "," +
              detail::format_double(r.ratio) + "\n";
      body += prefix + "diverse_uncertainty," + detail::format_double(r.mse_diverse) + "," +
              detail::format_double(r.per_cluster_mse[1][0]) + "," +
              detail::format_double(r.per_cluster_mse[1][1]) + "," +
              detail::format_double(r.ratio) + "\n";
      ratios[p_values[pi]].push_back(r.ratio);
    }
  detail::atomic_write(out, body);

  std::string summary = "p_inter,n_seeds,mean_ratio\n";
  for (double p : p_values) {
    const auto& v = ratios[p];
    if (v.empty()) continue;
    double mean = 0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    summary += detail::format_double(p) + "," + std::to_string(v.size()) + "," +
               detail::format_double(mean) + "\n";
  }
  detail::atomic_write(out.string() + ".summary.csv", summary);
}

}  // namespace scatter
