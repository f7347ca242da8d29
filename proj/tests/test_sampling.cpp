#include <catch_amalgamated.hpp>

#include <scatter/sampling.hpp>

#include "oracles.hpp"

#include <set>
#include <sstream>

using namespace scatter;

namespace {

struct LoopFixture {
  SparseGraph g;
  Matrix x;
  std::vector<int> labels;
  std::vector<NodeId> train_ids;
  TrainConfig tc;
};

LoopFixture loop_fixture(std::uint64_t seed, NodeId n = 30) {
  LoopFixture f;
  Rng rng(seed);
  f.g = oracle::random_graph(n, n / 2, rng);
  f.x = oracle::random_matrix(n, 3, rng);
  for (NodeId v = 0; v < n; ++v) f.labels.push_back(static_cast<int>(rng.index(3)));
  for (NodeId v = 0; v < n; ++v) f.train_ids.push_back(v);
  f.tc.epochs = 5;
  f.tc.hidden_dim = 8;
  return f;
}

}  // namespace

TEST_CASE("entropy of reference rows", "[sampling]") {
  ProbabilityMatrix probs(3, 4);
  probs << 0.25, 0.25, 0.25, 0.25,  // uniform: ln 4
      1.0, 0.0, 0.0, 0.0,           // one-hot: exactly zero
      0.9, 0.1, 0.0, 0.0;
  const std::vector<NodeId> nodes = {0, 1, 2};
  const auto h = compute_entropy(probs, nodes);
  REQUIRE(h[0] == Catch::Approx(std::log(4.0)).epsilon(1e-12));
  REQUIRE(h[1] == 0.0);
  REQUIRE(h[2] == Catch::Approx(0.3250829733914483).epsilon(1e-12));
}

TEST_CASE("entropy stays in [0, ln C] and matches a second accumulation", "[sampling]") {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const auto c = static_cast<Eigen::Index>(2 + rng.index(6));
    const ProbabilityMatrix probs = oracle::random_prob_matrix(5, c, rng);
    std::vector<NodeId> nodes = {0, 1, 2, 3, 4};
    const auto h = compute_entropy(probs, nodes);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      REQUIRE(h[i] >= 0.0);
      REQUIRE(h[i] <= std::log(static_cast<double>(c)) + 1e-12);
      REQUIRE(h[i] == Catch::Approx(oracle::entropy_of_row(probs, nodes[i])).epsilon(1e-12));
    }
  }
}

TEST_CASE("entropy rejects nodes outside the matrix", "[sampling]") {
  const ProbabilityMatrix probs = ProbabilityMatrix::Constant(2, 2, 0.5);
  const std::vector<NodeId> bad = {0, 2};
  REQUIRE_THROWS_AS(compute_entropy(probs, bad), std::invalid_argument);
}

TEST_CASE("max uncertainty takes the top entropies, ties to lower id", "[sampling]") {
  ProbabilityMatrix probs(4, 2);
  probs << 0.5, 0.5,  // node 0: max entropy
      0.5, 0.5,       // node 1: tied with node 0
      0.9, 0.1, 1.0, 0.0;
  const std::vector<NodeId> pool = {0, 1, 2, 3};
  REQUIRE(max_uncertainty_select(probs, pool, 1) == std::vector<NodeId>{0});
  REQUIRE(max_uncertainty_select(probs, pool, 2) == std::vector<NodeId>{0, 1});
  REQUIRE(max_uncertainty_select(probs, pool, 3) == std::vector<NodeId>{0, 1, 2});
}

TEST_CASE("max uncertainty agrees with a full sort", "[sampling]") {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const auto n = static_cast<Eigen::Index>(3 + rng.index(20));
    const ProbabilityMatrix probs = oracle::random_prob_matrix(n, 3, rng);
    std::vector<NodeId> pool;
    for (NodeId v = 0; v < n; ++v) pool.push_back(v);
    const std::size_t b = 1 + rng.index(static_cast<std::size_t>(n));
    const auto fast = max_uncertainty_select(probs, pool, b);
    const auto slow = oracle::top_k_sorted(pool, compute_entropy(probs, pool), b);
    REQUIRE(fast == slow);
  }
}

TEST_CASE("redundancy 1 reduces to max uncertainty exactly", "[sampling]") {
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const auto n = static_cast<Eigen::Index>(4 + rng.index(30));
    const ProbabilityMatrix probs = oracle::random_prob_matrix(n, 4, rng);
    const Matrix coords = oracle::random_matrix(n, 2, rng);
    std::vector<NodeId> pool;
    for (NodeId v = 0; v < n; ++v) pool.push_back(v);
    const std::size_t b = 1 + rng.index(static_cast<std::size_t>(n));
    const auto diverse = diverse_uncertainty_select(coords, probs, pool, b, 1.0, rng.next());
    const auto maxu = max_uncertainty_select(probs, pool, b);
    REQUIRE(diverse == maxu);
  }
}

TEST_CASE("diverse selection spreads across separated blobs", "[sampling]") {
  Matrix coords(4, 2);
  coords << 0, 0, 0.5, 0, 100, 0, 100.5, 0;
  ProbabilityMatrix probs(4, 2);
  probs << 0.5, 0.5, 0.52, 0.48, 0.54, 0.46, 0.95, 0.05;
  const std::vector<NodeId> pool = {0, 1, 2, 3};
  const auto sel = diverse_uncertainty_select(coords, probs, pool, 2, 2.0, 3);
  REQUIRE(sel.size() == 2);
  const bool left = sel[0] == 0 || sel[0] == 1;
  const bool right = sel[1] == 2 || sel[1] == 3;
  REQUIRE(left);
  REQUIRE(right);
}

TEST_CASE("diverse selection with b_t = pool size returns the pool", "[sampling]") {
  Rng rng(9);
  const ProbabilityMatrix probs = oracle::random_prob_matrix(6, 3, rng);
  const Matrix coords = oracle::random_matrix(6, 2, rng);
  const std::vector<NodeId> pool = {0, 1, 2, 3, 4, 5};
  REQUIRE(diverse_uncertainty_select(coords, probs, pool, 6, 3.0, 1) == pool);
}

TEST_CASE("diverse selection stays inside the entropy candidates", "[sampling]") {
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const auto n = static_cast<Eigen::Index>(8 + rng.index(30));
    const ProbabilityMatrix probs = oracle::random_prob_matrix(n, 3, rng);
    const Matrix coords = oracle::random_matrix(n, 2, rng);
    std::vector<NodeId> pool;
    for (NodeId v = 0; v < n; ++v) pool.push_back(v);
    const std::size_t b = 1 + rng.index(4);
    const double r = 1.0 + rng.uniform01() * 3.0;
    const auto sel = diverse_uncertainty_select(coords, probs, pool, b, r, rng.next());
    REQUIRE(sel.size() == b);
    const auto c = static_cast<std::size_t>(std::ceil(r * static_cast<double>(b)));
    const auto candidates =
        oracle::top_k_sorted(pool, compute_entropy(probs, pool), std::min(c, pool.size()));
    for (NodeId v : sel)
      REQUIRE(std::binary_search(candidates.begin(), candidates.end(), v));
  }
}

TEST_CASE("diverse selection validates arguments", "[sampling]") {
  Rng rng(13);
  const ProbabilityMatrix probs = oracle::random_prob_matrix(4, 2, rng);
  const Matrix coords = oracle::random_matrix(4, 2, rng);
  const std::vector<NodeId> pool = {0, 1, 2, 3};
  REQUIRE_THROWS_AS(diverse_uncertainty_select(coords, probs, {}, 1, 2.0, 0),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(diverse_uncertainty_select(coords, probs, pool, 0, 2.0, 0),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(diverse_uncertainty_select(coords, probs, pool, 5, 2.0, 0),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(diverse_uncertainty_select(coords, probs, pool, 2, 0.5, 0),
                    std::invalid_argument);
}

TEST_CASE("random selection is uniform without replacement", "[sampling]") {
  const std::vector<NodeId> pool = {3, 1, 4, 1, 5, 9, 2, 6, 8, 7, 0};  // dup collapses to 10 ids
  const auto all = random_select(pool, 20, 1);
  REQUIRE(all == std::vector<NodeId>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
  REQUIRE(random_select(pool, 0, 1).empty());
  REQUIRE(random_select(pool, 4, 9) == random_select(pool, 4, 9));

  // Chi-squared uniformity over single draws: 10^4 draws, 10 bins,
  // chi2(0.999, 9) = 27.877.
  std::vector<int> counts(10, 0);
  for (std::uint64_t s = 0; s < 10000; ++s) {
    const auto one = random_select(pool, 1, 1000 + s);
    ++counts[static_cast<std::size_t>(one[0])];
  }
  double chi2 = 0;
  for (int c : counts) chi2 += (c - 1000.0) * (c - 1000.0) / 1000.0;
  REQUIRE(chi2 < 27.877);
}

TEST_CASE("featprop picks one node per feature cluster", "[sampling]") {
  Matrix x_k(6, 1);
  x_k << 0, 0.1, 0.2, 50, 50.1, 50.2;
  const std::vector<NodeId> pool = {0, 1, 2, 3, 4, 5};
  const auto sel = featprop_select(x_k, pool, 2, 4);
  REQUIRE(sel.size() == 2);
  REQUIRE(sel[0] <= 2);
  REQUIRE(sel[1] >= 3);
  REQUIRE(featprop_select(x_k, pool, 6, 0) == pool);
  REQUIRE_THROWS_AS(featprop_select(x_k, pool, 7, 0), std::invalid_argument);
  REQUIRE(featprop_select(x_k, pool, 3, 5) == featprop_select(x_k, pool, 3, 5));
}

TEST_CASE("round robin cycles clusters by ascending size", "[sampling]") {
  std::unordered_map<NodeId, int> cluster_of;
  cluster_of[0] = 7;  // singleton cluster
  for (NodeId v = 1; v <= 5; ++v) cluster_of[v] = 2;
  const std::vector<NodeId> candidates = {0, 1, 2, 3, 4, 5};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto sel = round_robin_select(cluster_of, candidates, 2, seed);
    REQUIRE(sel.size() == 2);
    REQUIRE(sel[0] == 0);  // the singleton always contributes its node
    REQUIRE(sel[1] >= 1);
  }
  // Budget beyond the candidate count clamps.
  REQUIRE(round_robin_select(cluster_of, candidates, 99, 3).size() == 6);
}

TEST_CASE("round robin with one cluster equals plain random selection", "[sampling]") {
  std::unordered_map<NodeId, int> cluster_of;
  const std::vector<NodeId> candidates = {0, 1, 2, 3, 4, 5, 6, 7};
  for (NodeId v : candidates) cluster_of[v] = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed)
    REQUIRE(round_robin_select(cluster_of, candidates, 3, seed) ==
            random_select(candidates, 3, seed));
}

TEST_CASE("round robin rejects unlabeled clusters", "[sampling]") {
  std::unordered_map<NodeId, int> cluster_of;
  cluster_of[0] = 0;
  const std::vector<NodeId> candidates = {0, 1};
  REQUIRE_THROWS_WITH(round_robin_select(cluster_of, candidates, 1, 0),
                      Catch::Matchers::ContainsSubstring("no cluster label"));
}

TEST_CASE("label oracle enforces its contract", "[sampling]") {
  LabelOracle oracle({1, 0, 2, 1}, {0, 1, 2}, 2);
  REQUIRE(oracle.is_queryable(1));
  REQUIRE(!oracle.is_queryable(3));
  REQUIRE(oracle.query(1) == 0);
  REQUIRE_THROWS_WITH(oracle.query(1), Catch::Matchers::ContainsSubstring("already queried"));
  REQUIRE_THROWS_WITH(oracle.query(3), Catch::Matchers::ContainsSubstring("not queryable"));
  REQUIRE(oracle.query(2) == 2);
  REQUIRE(oracle.spent() == 2);
  REQUIRE(oracle.remaining() == 0);
  REQUIRE_THROWS_WITH(oracle.query(0), Catch::Matchers::ContainsSubstring("budget exhausted"));
  REQUIRE(oracle.revealed().at(2) == 2);
  REQUIRE_THROWS_AS(LabelOracle({1, 0}, {0, 5}, 1), std::invalid_argument);
}

TEST_CASE("budget validation", "[sampling]") {
  Budget b;
  b.total = 10;
  b.initial = 0;
  REQUIRE_THROWS_AS(b.validate(), std::invalid_argument);
  b.initial = 11;
  REQUIRE_THROWS_AS(b.validate(), std::invalid_argument);
  b.initial = 4;
  b.rounds = 0;
  REQUIRE_THROWS_AS(b.validate(), std::invalid_argument);
  b.rounds = 2;
  b.redundancy = 0.5;
  REQUIRE_THROWS_AS(b.validate(), std::invalid_argument);
  b.redundancy = 3;
  REQUIRE_NOTHROW(b.validate());
}

TEST_CASE("per-round budget is the floored split with the remainder last", "[sampling]") {
  const LoopFixture f = loop_fixture(17);
  Budget b;
  b.total = 20;
  b.initial = 8;
  b.rounds = 4;
  b.redundancy = 3;
  LabelOracle oracle(f.labels, f.train_ids, b.total);
  const auto res = run_scattersample(f.g, f.x, oracle, b, f.tc, 3);
  REQUIRE(res.history.rounds.size() == 5);
  REQUIRE(res.history.rounds[0].selected.size() == 8);
  for (int t = 1; t <= 4; ++t) REQUIRE(res.history.rounds[static_cast<std::size_t>(t)].selected.size() == 3);
  REQUIRE(res.labeled.size() == 20);
  REQUIRE(oracle.spent() == 20);

  // Indivisible remainder goes to the last round.
  Budget b21 = b;
  b21.total = 21;
  LabelOracle oracle21(f.labels, f.train_ids, b21.total);
  const auto res21 = run_scattersample(f.g, f.x, oracle21, b21, f.tc, 3);
  REQUIRE(res21.history.rounds[1].selected.size() == 3);
  REQUIRE(res21.history.rounds[2].selected.size() == 3);
  REQUIRE(res21.history.rounds[3].selected.size() == 3);
  REQUIRE(res21.history.rounds[4].selected.size() == 4);
  REQUIRE(res21.labeled.size() == 21);
}

TEST_CASE("initial-only budget runs no selection rounds", "[sampling]") {
  const LoopFixture f = loop_fixture(19);
  Budget b;
  b.total = 6;
  b.initial = 6;
  b.rounds = 3;
  LabelOracle oracle(f.labels, f.train_ids, b.total);
  const auto res = run_scattersample(f.g, f.x, oracle, b, f.tc, 3);
  REQUIRE(res.history.rounds.size() == 1);
  REQUIRE(res.labeled.size() == 6);
  REQUIRE(oracle.spent() == 6);
}

TEST_CASE("scattersample spends exactly the budget without duplicates", "[sampling]") {
  Rng rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    const LoopFixture f = loop_fixture(100 + static_cast<std::uint64_t>(trial));
    Budget b;
    b.total = static_cast<std::int64_t>(5 + rng.index(20));
    b.initial = static_cast<std::int64_t>(1 + rng.index(static_cast<std::size_t>(b.total)));
    b.rounds = static_cast<int>(1 + rng.index(4));
    b.redundancy = 1.0 + rng.uniform01() * 3;
    LabelOracle oracle(f.labels, f.train_ids, b.total);
    ScatterSampleOptions opts;
    opts.seed = rng.next();
    const auto res = run_scattersample(f.g, f.x, oracle, b, f.tc, 3, 2, opts);
    REQUIRE(static_cast<std::int64_t>(res.labeled.size()) == b.total);
    REQUIRE(std::is_sorted(res.labeled.begin(), res.labeled.end()));
    REQUIRE(std::adjacent_find(res.labeled.begin(), res.labeled.end()) == res.labeled.end());
    for (NodeId v : res.labeled)
      REQUIRE(std::binary_search(f.train_ids.begin(), f.train_ids.end(), v));
    REQUIRE(oracle.spent() == b.total);
  }
}

TEST_CASE("infeasible budgets are rejected before any query", "[sampling]") {
  const LoopFixture f = loop_fixture(29, 10);
  Budget b;
  b.total = 11;  // exceeds the 10 queryable nodes
  b.initial = 2;
  LabelOracle oracle(f.labels, f.train_ids, 50);
  REQUIRE_THROWS_AS(run_scattersample(f.g, f.x, oracle, b, f.tc, 3), std::invalid_argument);
  REQUIRE(oracle.spent() == 0);

  Budget ok;
  ok.total = 5;
  ok.initial = 2;
  LabelOracle stingy(f.labels, f.train_ids, 3);  // allowance below the budget
  REQUIRE_THROWS_AS(run_scattersample(f.g, f.x, stingy, ok, f.tc, 3), std::invalid_argument);
  REQUIRE(stingy.spent() == 0);
}

TEST_CASE("scattersample runs are reproducible byte for byte", "[sampling]") {
  const LoopFixture f = loop_fixture(31);
  Budget b;
  b.total = 12;
  b.initial = 4;
  b.rounds = 2;
  b.redundancy = 2;
  auto run_once = [&] {
    LabelOracle oracle(f.labels, f.train_ids, b.total);
    ScatterSampleOptions opts;
    opts.seed = 77;
    const auto res = run_scattersample(f.g, f.x, oracle, b, f.tc, 3, 2, opts);
    std::ostringstream os;
    os << kHistoryCsvHeader << '\n';
    write_history_csv(os, res.history, "scattersample", 77);
    return os.str();
  };
  const std::string a = run_once();
  REQUIRE(a == run_once());
  REQUIRE(a.find("scattersample") != std::string::npos);
}

TEST_CASE("selection seed changes the labeled set", "[sampling]") {
  const LoopFixture f = loop_fixture(37);
  Budget b;
  b.total = 10;
  b.initial = 3;
  b.rounds = 2;
  b.redundancy = 3;
  auto labeled_with = [&](std::uint64_t seed) {
    LabelOracle oracle(f.labels, f.train_ids, b.total);
    ScatterSampleOptions opts;
    opts.seed = seed;
    return run_scattersample(f.g, f.x, oracle, b, f.tc, 3, 2, opts).labeled;
  };
  REQUIRE(labeled_with(1) != labeled_with(2));
}

TEST_CASE("history entropy column records selection-time scores", "[sampling]") {
  const LoopFixture f = loop_fixture(41);
  Budget b;
  b.total = 10;
  b.initial = 4;
  b.rounds = 2;
  b.redundancy = 2;
  LabelOracle oracle(f.labels, f.train_ids, b.total);
  const auto res = run_scattersample(f.g, f.x, oracle, b, f.tc, 3);
  REQUIRE(res.history.rounds[0].selected_entropy.empty());
  for (std::size_t t = 1; t < res.history.rounds.size(); ++t) {
    const auto& rec = res.history.rounds[t];
    REQUIRE(rec.selected_entropy.size() == rec.selected.size());
    for (double h : rec.selected_entropy) {
      REQUIRE(h >= 0.0);
      REQUIRE(h <= std::log(3.0) + 1e-12);
    }
  }
}

TEST_CASE("history CSV round and count columns are consistent", "[sampling]") {
  RunHistory hist;
  RoundRecord r0;
  r0.round = 0;
  r0.selected = {2, 5};
  r0.n_labeled = 2;
  r0.test_accuracy = 0.5;
  RoundRecord r1;
  r1.round = 1;
  r1.selected = {1};
  r1.n_labeled = 3;
  hist.rounds = {r0, r1};
  std::ostringstream os;
  write_history_csv(os, hist, "demo", 9);
  REQUIRE(os.str() == "0,demo,9,2,2;5,0.5\n1,demo,9,3,1,nan\n");
}

TEST_CASE("evaluation hook sees every retrain", "[sampling]") {
  const LoopFixture f = loop_fixture(43);
  Budget b;
  b.total = 9;
  b.initial = 3;
  b.rounds = 3;
  LabelOracle oracle(f.labels, f.train_ids, b.total);
  ScatterSampleOptions opts;
  int calls = 0;
  opts.evaluate = [&](const ProbabilityMatrix& probs) {
    ++calls;
    return probs(0, 0);
  };
  const auto res = run_scattersample(f.g, f.x, oracle, b, f.tc, 3, 2, opts);
  REQUIRE(calls == static_cast<int>(res.history.rounds.size()));
  for (const auto& rec : res.history.rounds) REQUIRE(!std::isnan(rec.test_accuracy));
}
