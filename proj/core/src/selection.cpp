#include "micl/selection.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "micl/rand_util.hpp"

using nlohmann::json;

namespace micl {

namespace {

int find_id(const std::vector<std::string>& ids, const std::string& id) {
  for (std::size_t i = 0; i < ids.size(); ++i)
    if (ids[i] == id) return static_cast<int>(i);
  return -1;
}

std::vector<int> resolve_subset(const std::vector<std::string>& subset,
                                const std::vector<std::string>& ids) {
  if (subset.empty()) throw SelectionError("subset must be nonempty");
  std::set<int> indices;
  for (const auto& id : subset) {
    int i = find_id(ids, id);
    if (i < 0) throw SelectionError("unknown sample id: " + id);
    indices.insert(i);
  }
  return std::vector<int>(indices.begin(), indices.end());
}

}  // namespace

int SimilarityMatrix::index_of(const std::string& id) const {
  return find_id(ids, id);
}

int NormalizedSimilarityMatrix::index_of(const std::string& id) const {
  return find_id(ids, id);
}

NormalizedSimilarityMatrix NormalizedSimilarityMatrix::from_rows(
    std::vector<std::string> ids, std::vector<double> entries) {
  const std::size_t n = ids.size();
  if (entries.size() != n * n)
    throw SelectionError("entry count does not match id count");
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0;
    for (std::size_t j = 0; j < n; ++j) {
      double v = entries[i * n + j];
      if (!(v >= 0.0) || v > 1.0)
        throw SelectionError("probabilities must lie in [0,1]");
      if (i == j && v != 0.0)
        throw SelectionError("diagonal entries must be zero");
      sum += v;
    }
    if (sum > 1.0 + 1e-9)
      throw SelectionError("row sum exceeds 1");
  }
  NormalizedSimilarityMatrix m;
  m.ids = std::move(ids);
  m.entries = std::move(entries);
  m.excluded.assign(n, 0);
  return m;
}

std::pair<SimilarityMatrix, NormalizedSimilarityMatrix> matrices_from_distances(
    std::vector<std::string> ids, const std::vector<double>& distances) {
  const std::size_t n = ids.size();
  if (n < 2) throw SelectionError("need at least 2 samples");
  if (distances.size() != n * n)
    throw SelectionError("distance matrix size mismatch");

  // Duplicate collapse: for each d == 0 pair the later-indexed sample drops
  // out. Pairs where one side is already excluded are left alone.
  std::vector<std::uint8_t> excluded(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (excluded[i]) continue;
    for (std::size_t j = i + 1; j < n; ++j) {
      if (excluded[j]) continue;
      if (distances[i * n + j] == 0.0) excluded[j] = 1;
    }
  }
  std::size_t active = 0;
  for (auto e : excluded) active += (e == 0);
  if (active < 2) throw SelectionError("all samples mutually duplicate");

  SimilarityMatrix sim;
  sim.ids = ids;
  sim.excluded = excluded;
  sim.entries.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (excluded[i]) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j || excluded[j]) continue;
      double d = distances[i * n + j];
      if (d < 0.0) throw SelectionError("negative distance");
      if (d == 0.0)
        throw SelectionError("zero distance between non-duplicate samples");
      sim.entries[i * n + j] = 1.0 / d;
    }
  }

  NormalizedSimilarityMatrix norm;
  norm.ids = std::move(ids);
  norm.excluded = excluded;
  norm.entries.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) sum += sim.entries[i * n + j];
    if (sum == 0.0) continue;
    for (std::size_t j = 0; j < n; ++j)
      norm.entries[i * n + j] = sim.entries[i * n + j] / sum;
  }
  return {std::move(sim), std::move(norm)};
}

std::pair<SimilarityMatrix, NormalizedSimilarityMatrix> build_matrices(
    const SampleCollection& base, const SkeletonSpec& skeleton,
    const DistanceOptions& opts) {
  const std::size_t n = base.size();
  if (n < 2) throw SelectionError("need at least 2 samples");

  std::vector<std::string> ids;
  ids.reserve(n);
  for (const auto& s : base.samples) ids.push_back(s.id);

  std::vector<double> dist(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double d =
          sample_distance(base.samples[i], base.samples[j], skeleton, opts)
              .combined;
      dist[i * n + j] = d;
      dist[j * n + i] = d;
    }
  }
  return matrices_from_distances(std::move(ids), dist);
}

namespace {

std::size_t diffuse_once_idx(const std::vector<int>& subset,
                             const NormalizedSimilarityMatrix& mn,
                             std::uint64_t seed) {
  const int n = static_cast<int>(mn.size());
  std::mt19937_64 rng(seed);

  std::vector<std::uint8_t> spread(n, 0);
  std::vector<int> cur;
  for (int s : subset) {
    if (!spread[s]) {
      spread[s] = 1;
      cur.push_back(s);
    }
  }

  std::vector<int> next;
  while (!cur.empty()) {
    next.clear();
    for (int u : cur) {
      const double* row = mn.row(u);
      for (int v = 0; v < n; ++v) {
        if (spread[v]) continue;
        // One fresh draw per attempt, including zero-probability targets.
        if (row[v] > uniform01(rng)) {
          spread[v] = 1;
          next.push_back(v);
        }
      }
    }
    cur.swap(next);
  }

  std::size_t count = 0;
  for (auto b : spread) count += b;
  return count;
}

struct MeanStd {
  double mean = 0.0;
  double std_error = 0.0;
};

// Integer sums keep the reduction order-independent and exact.
MeanStd summarize(const std::vector<std::size_t>& counts) {
  std::uint64_t sum = 0, sumsq = 0;
  for (std::size_t c : counts) {
    sum += c;
    sumsq += static_cast<std::uint64_t>(c) * c;
  }
  const double n = static_cast<double>(counts.size());
  MeanStd r;
  r.mean = static_cast<double>(sum) / n;
  if (counts.size() > 1) {
    double var = (static_cast<double>(sumsq) -
                  static_cast<double>(sum) * static_cast<double>(sum) / n) /
                 (n - 1.0);
    if (var < 0.0) var = 0.0;
    r.std_error = std::sqrt(var / n);
  }
  return r;
}

}  // namespace

std::size_t diffuse_once(const std::vector<std::string>& subset,
                         const NormalizedSimilarityMatrix& mn,
                         std::uint64_t seed) {
  return diffuse_once_idx(resolve_subset(subset, mn.ids), mn, seed);
}

std::uint64_t canonical_subset_hash(std::vector<std::string> subset) {
  std::sort(subset.begin(), subset.end());
  subset.erase(std::unique(subset.begin(), subset.end()), subset.end());
  return fnv1a64_strings(subset);
}

SpreadEstimate estimate_spread(const std::vector<std::string>& subset,
                               const NormalizedSimilarityMatrix& mn, int runs,
                               std::uint64_t seed) {
  if (runs < 1) throw SelectionError("runs must be >= 1");
  const std::vector<int> idx = resolve_subset(subset, mn.ids);
  const std::uint64_t subset_hash = canonical_subset_hash(subset);

  std::vector<std::size_t> counts(runs);
  for (int i = 0; i < runs; ++i)
    counts[i] = diffuse_once_idx(idx, mn, mix_seed(seed, subset_hash, i));

  MeanStd ms = summarize(counts);
  return SpreadEstimate{ms.mean, runs, ms.std_error, seed};
}

SelectionResult greedy_select(int p, const SampleCollection& base,
                              const NormalizedSimilarityMatrix& mn, int runs,
                              std::uint64_t seed) {
  const int n = static_cast<int>(mn.size());
  if (base.size() != mn.size())
    throw SelectionError("base collection and matrix size differ");
  for (int i = 0; i < n; ++i) {
    if (base.samples[i].id != mn.ids[i])
      throw SelectionError("base collection and matrix ids differ");
  }
  if (runs < 1) throw SelectionError("runs must be >= 1");

  int selectable = 0;
  for (int i = 0; i < n; ++i) selectable += (mn.excluded[i] == 0);
  if (p < 1 || p > selectable)
    throw SelectionError("p out of range: " + std::to_string(p) +
                         " not in [1, " + std::to_string(selectable) + "]");

  std::vector<int> chosen;
  std::vector<double> gains;
  double prev_mean = 0.0;

  for (int round = 0; round < p; ++round) {
    // Every candidate this round is scored under the same stream seeds.
    const std::uint64_t round_base = mix_seed(seed, 0x726F756E64ULL, round);
    std::vector<std::uint64_t> stream(runs);
    for (int i = 0; i < runs; ++i) stream[i] = mix_seed(round_base, i);

    int best = -1;
    double best_mean = -1.0;
    std::vector<int> trial = chosen;
    trial.push_back(-1);
    for (int c = 0; c < n; ++c) {
      if (mn.excluded[c]) continue;
      if (std::find(chosen.begin(), chosen.end(), c) != chosen.end()) continue;
      trial.back() = c;
      std::uint64_t sum = 0;
      for (int i = 0; i < runs; ++i)
        sum += diffuse_once_idx(trial, mn, stream[i]);
      double mean = static_cast<double>(sum) / runs;
      if (mean > best_mean ||
          (mean == best_mean && best >= 0 && mn.ids[c] < mn.ids[best])) {
        best = c;
        best_mean = mean;
      }
    }

    chosen.push_back(best);
    gains.push_back(best_mean - prev_mean);
    prev_mean = best_mean;
  }

  SelectionResult result;
  for (int c : chosen) result.chosen_ids.push_back(mn.ids[c]);
  result.marginal_gains = std::move(gains);
  result.final_estimate = estimate_spread(result.chosen_ids, mn, runs, seed);
  return result;
}

// ---------------------------------------------------------------------------
// Exact oracles

namespace {

struct FreeEdge {
  int u, v;
  double p;
};

// Enumerates every live-edge realization of the cascade graph. Probability-1
// entries are always live and do not blow up the enumeration.
class CascadeEnumerator {
 public:
  explicit CascadeEnumerator(const NormalizedSimilarityMatrix& mn)
      : n_(static_cast<int>(mn.size())) {
    if (n_ > 64)
      throw SelectionError("instance too large for enumeration (> 64 samples)");
    int nonzero = 0;
    base_adj_.assign(n_, 0);
    for (int u = 0; u < n_; ++u) {
      for (int v = 0; v < n_; ++v) {
        if (u == v) continue;
        double p = mn.at(u, v);
        if (p == 0.0) continue;
        ++nonzero;
        if (p >= 1.0)
          base_adj_[u] |= (1ULL << v);
        else
          free_edges_.push_back(FreeEdge{u, v, p});
      }
    }
    if (nonzero > 22)
      throw SelectionError(
          "instance too large for enumeration (> 22 nonzero entries)");
  }

  // Expected spread of each subset mask, sharing one enumeration sweep.
  std::vector<double> expected(const std::vector<std::uint64_t>& subsets) const {
    std::vector<double> totals(subsets.size(), 0.0);
    const std::size_t f = free_edges_.size();
    std::vector<std::uint64_t> adj(n_);
    std::vector<std::uint64_t> closure(n_);

    for (std::uint64_t mask = 0; mask < (1ULL << f); ++mask) {
      double prob = 1.0;
      adj.assign(base_adj_.begin(), base_adj_.end());
      for (std::size_t e = 0; e < f; ++e) {
        if (mask & (1ULL << e)) {
          prob *= free_edges_[e].p;
          adj[free_edges_[e].u] |= (1ULL << free_edges_[e].v);
        } else {
          prob *= 1.0 - free_edges_[e].p;
        }
      }
      if (prob == 0.0) continue;

      for (int u = 0; u < n_; ++u) {
        std::uint64_t reach = 1ULL << u;
        std::uint64_t frontier = reach;
        while (frontier != 0) {
          std::uint64_t next = 0;
          std::uint64_t bits = frontier;
          while (bits != 0) {
            int v = std::countr_zero(bits);
            bits &= bits - 1;
            next |= adj[v];
          }
          next &= ~reach;
          reach |= next;
          frontier = next;
        }
        closure[u] = reach;
      }

      for (std::size_t s = 0; s < subsets.size(); ++s) {
        std::uint64_t reach = 0;
        std::uint64_t bits = subsets[s];
        while (bits != 0) {
          int v = std::countr_zero(bits);
          bits &= bits - 1;
          reach |= closure[v];
        }
        totals[s] += prob * static_cast<double>(std::popcount(reach));
      }
    }
    return totals;
  }

  int n() const { return n_; }

 private:
  int n_;
  std::vector<std::uint64_t> base_adj_;
  std::vector<FreeEdge> free_edges_;
};

std::uint64_t subset_mask(const std::vector<int>& idx) {
  std::uint64_t m = 0;
  for (int i : idx) m |= (1ULL << i);
  return m;
}

}  // namespace

double exact_expected_spread(const std::vector<std::string>& subset,
                             const NormalizedSimilarityMatrix& mn) {
  const std::vector<int> idx = resolve_subset(subset, mn.ids);
  CascadeEnumerator en(mn);
  return en.expected({subset_mask(idx)})[0];
}

ExactSelection greedy_select_exact(int p, const NormalizedSimilarityMatrix& mn) {
  const int n = static_cast<int>(mn.size());
  std::vector<int> selectable;
  for (int i = 0; i < n; ++i)
    if (!mn.excluded[i]) selectable.push_back(i);
  if (p < 1 || p > static_cast<int>(selectable.size()))
    throw SelectionError("p out of range");

  CascadeEnumerator en(mn);
  ExactSelection result;
  std::uint64_t chosen_mask = 0;
  double prev = 0.0;

  for (int round = 0; round < p; ++round) {
    std::vector<std::uint64_t> masks;
    std::vector<int> cand;
    for (int c : selectable) {
      if (chosen_mask & (1ULL << c)) continue;
      cand.push_back(c);
      masks.push_back(chosen_mask | (1ULL << c));
    }
    std::vector<double> values = en.expected(masks);

    int best = -1;
    double best_val = -1.0;
    for (std::size_t k = 0; k < cand.size(); ++k) {
      if (values[k] > best_val ||
          (values[k] == best_val && best >= 0 &&
           mn.ids[cand[k]] < mn.ids[best])) {
        best = cand[k];
        best_val = values[k];
      }
    }
    chosen_mask |= (1ULL << best);
    result.chosen_ids.push_back(mn.ids[best]);
    result.marginal_gains.push_back(best_val - prev);
    prev = best_val;
  }
  result.expected_spread = prev;
  return result;
}

BruteForceResult brute_force_optimum(int p,
                                     const NormalizedSimilarityMatrix& mn) {
  const int n = static_cast<int>(mn.size());
  std::vector<int> selectable;
  for (int i = 0; i < n; ++i)
    if (!mn.excluded[i]) selectable.push_back(i);
  const int m = static_cast<int>(selectable.size());
  if (p < 1 || p > m) throw SelectionError("p out of range");

  // C(m, p) with early bail-out against the enumeration cap.
  const double kMaxSubsets = 1e5;
  double count = 1.0;
  for (int i = 0; i < p; ++i) count = count * (m - i) / (i + 1);
  if (count > kMaxSubsets)
    throw SelectionError("instance too large for brute force");

  CascadeEnumerator en(mn);

  // Lexicographic combinations over the selectable indices.
  std::vector<int> comb(p);
  for (int i = 0; i < p; ++i) comb[i] = i;
  std::vector<std::uint64_t> masks;
  std::vector<std::vector<int>> subsets;
  while (true) {
    std::vector<int> subset(p);
    std::uint64_t mask = 0;
    for (int i = 0; i < p; ++i) {
      subset[i] = selectable[comb[i]];
      mask |= (1ULL << subset[i]);
    }
    masks.push_back(mask);
    subsets.push_back(std::move(subset));

    int i = p - 1;
    while (i >= 0 && comb[i] == m - p + i) --i;
    if (i < 0) break;
    ++comb[i];
    for (int k = i + 1; k < p; ++k) comb[k] = comb[k - 1] + 1;
  }

  std::vector<double> values = en.expected(masks);
  std::size_t best = 0;
  for (std::size_t s = 1; s < values.size(); ++s)
    if (values[s] > values[best]) best = s;

  BruteForceResult result;
  result.r_star = values[best];
  for (int i : subsets[best]) result.best_ids.push_back(mn.ids[i]);
  return result;
}

double greedy_bound_factor(int p) {
  return 1.0 - std::pow(1.0 - 1.0 / static_cast<double>(p), p);
}

NormalizedSimilarityMatrix random_enumerable_matrix(int n,
                                                    std::mt19937_64& rng) {
  if (n < 2 || n > 6)
    throw SelectionError("enumerable fixtures support 2..6 samples");

  auto rand_int = [&](int lo, int hi) {  // inclusive
    return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
  };

  std::vector<double> entries;
  while (true) {
    entries.assign(static_cast<std::size_t>(n) * n, 0.0);
    int total_edges = 0;
    for (int u = 0; u < n; ++u) {
      int degree = rand_int(0, std::min(3, n - 1));
      std::vector<int> targets;
      for (int v = 0; v < n; ++v)
        if (v != u) targets.push_back(v);
      std::shuffle(targets.begin(), targets.end(), rng);
      targets.resize(degree);
      double sum = 0.0;
      std::vector<int> weights(degree);
      for (int k = 0; k < degree; ++k) {
        weights[k] = rand_int(1, 9);
        sum += weights[k];
      }
      for (int k = 0; k < degree; ++k)
        entries[u * n + targets[k]] = weights[k] / sum;
      total_edges += degree;
    }
    if (total_edges >= 1 && total_edges <= 16) break;
  }

  std::vector<std::string> ids;
  for (int i = 0; i < n; ++i) ids.push_back("s" + std::to_string(i));
  return NormalizedSimilarityMatrix::from_rows(std::move(ids),
                                               std::move(entries));
}

BoundCheckSummary run_bound_check(int fixtures, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  BoundCheckSummary summary;
  summary.fixtures = fixtures;
  summary.min_ratio = std::numeric_limits<double>::infinity();

  for (int f = 0; f < fixtures; ++f) {
    const int n = 3 + (f % 4);
    NormalizedSimilarityMatrix mn = random_enumerable_matrix(n, rng);
    for (int p = 1; p <= n; ++p) {
      ExactSelection greedy = greedy_select_exact(p, mn);
      BruteForceResult opt = brute_force_optimum(p, mn);
      const double bound = greedy_bound_factor(p) * opt.r_star;
      ++summary.checks;
      if (greedy.expected_spread + 1e-9 < bound) ++summary.violations;
      summary.min_ratio =
          std::min(summary.min_ratio, greedy.expected_spread / bound);
    }
  }
  return summary;
}

std::string BoundCheckSummary::to_json() const {
  json j;
  j["fixtures"] = fixtures;
  j["checks"] = checks;
  j["violations"] = violations;
  j["min_ratio"] = min_ratio;
  return j.dump(2);
}

std::string SelectionResult::to_json() const {
  json j;
  j["chosen_ids"] = chosen_ids;
  j["marginal_gains"] = marginal_gains;
  j["mean"] = final_estimate.mean;
  j["runs"] = final_estimate.runs;
  j["seed"] = final_estimate.seed;
  return j.dump(2);
}

SelectionResult SelectionResult::from_json(const std::string& text) {
  json j = json::parse(text);
  SelectionResult r;
  r.chosen_ids = j.at("chosen_ids").get<std::vector<std::string>>();
  r.marginal_gains = j.at("marginal_gains").get<std::vector<double>>();
  r.final_estimate.mean = j.at("mean").get<double>();
  r.final_estimate.runs = j.at("runs").get<int>();
  r.final_estimate.seed = j.at("seed").get<std::uint64_t>();
  return r;
}

}  // namespace micl
