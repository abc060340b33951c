#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "micl/metrics.hpp"
#include "micl/motion_data.hpp"

namespace micl {

class SelectionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dense inverse-distance similarity matrix over a sample collection.
/// Diagonal is zero; entries[i][j] = 1/d(m_i, m_j) for i != j. Exact
/// duplicates (d == 0) collapse: the later-indexed sample of each duplicate
/// pair has its row and column zeroed and is flagged excluded.
struct SimilarityMatrix {
  std::vector<std::string> ids;   // row order
  std::vector<double> entries;    // n*n, row-major
  std::vector<std::uint8_t> excluded;

  std::size_t size() const { return ids.size(); }
  double at(std::size_t i, std::size_t j) const { return entries[i * size() + j]; }
  int index_of(const std::string& id) const;
};

/// Row-normalized variant; each row sums to 1 unless it is all-zero.
/// Rows act as outgoing spread probabilities in the diffusion process.
struct NormalizedSimilarityMatrix {
  std::vector<std::string> ids;
  std::vector<double> entries;
  std::vector<std::uint8_t> excluded;

  std::size_t size() const { return ids.size(); }
  double at(std::size_t i, std::size_t j) const { return entries[i * size() + j]; }
  const double* row(std::size_t i) const { return entries.data() + i * size(); }
  int index_of(const std::string& id) const;

  /// Builds a matrix directly from probability rows. Validation accepts
  /// sub-stochastic rows (sums in [0,1]) so experimental fixtures with
  /// hand-set probabilities are representable; build_matrices output always
  /// has rows summing to exactly 1 or 0.
  static NormalizedSimilarityMatrix from_rows(std::vector<std::string> ids,
                                              std::vector<double> entries);
};

/// Normalization pipeline split out from the distance computation so the two
/// stages are testable in isolation: takes a symmetric distance matrix (row
/// order = ids) and produces both matrices with duplicate handling applied.
std::pair<SimilarityMatrix, NormalizedSimilarityMatrix> matrices_from_distances(
    std::vector<std::string> ids, const std::vector<double>& distances);

std::pair<SimilarityMatrix, NormalizedSimilarityMatrix> build_matrices(
    const SampleCollection& base, const SkeletonSpec& skeleton,
    const DistanceOptions& opts = {});

/// One realization of the recursive diffusion process seeded at `subset`:
/// starting from the subset, every spread-over sample gets one chance to
/// spread to each not-yet-spread sample j, succeeding when row[j] > rand with
/// rand drawn uniformly from [0,1). Returns the number of samples spread over
/// at the fixpoint. Equivalent to one independent-cascade live-edge draw.
std::size_t diffuse_once(const std::vector<std::string>& subset,
                         const NormalizedSimilarityMatrix& mn,
                         std::uint64_t seed);

struct SpreadEstimate {
  double mean = 0.0;
  int runs = 0;
  double std_error = 0.0;
  std::uint64_t seed = 0;
};

/// Monte-Carlo mean of diffuse_once over `runs` independent streams; stream i
/// is seeded deterministically from (seed, canonical subset hash, i).
SpreadEstimate estimate_spread(const std::vector<std::string>& subset,
                               const NormalizedSimilarityMatrix& mn, int runs,
                               std::uint64_t seed);

std::uint64_t canonical_subset_hash(std::vector<std::string> subset);

struct SelectionResult {
  std::vector<std::string> chosen_ids;   // greedy pick order
  std::vector<double> marginal_gains;    // per-step mean-spread gains
  SpreadEstimate final_estimate;

  std::string to_json() const;           // {chosen_ids, marginal_gains, mean, runs, seed}
  static SelectionResult from_json(const std::string& text);
};

/// Greedy subset selection: p rounds, each adding the candidate whose
/// Monte-Carlo spread estimate is highest. All candidates within a round are
/// evaluated under the same seed schedule (common random numbers) so the
/// argmax is stable; ties break toward the lowest sample id. Duplicate-flagged
/// samples are never selected.
SelectionResult greedy_select(int p, const SampleCollection& base,
                              const NormalizedSimilarityMatrix& mn, int runs,
                              std::uint64_t seed);

/// Exact expectation of the diffusion spread, by enumerating every live-edge
/// outcome. Usable only on small instances: at most 64 samples and at most 22
/// nonzero off-diagonal entries. Serves as the independent oracle against the
/// Monte-Carlo estimator and the greedy bound checks.
double exact_expected_spread(const std::vector<std::string>& subset,
                             const NormalizedSimilarityMatrix& mn);

struct ExactSelection {
  std::vector<std::string> chosen_ids;
  std::vector<double> marginal_gains;
  double expected_spread = 0.0;
};

/// Greedy selection driven by the exact oracle instead of Monte Carlo.
ExactSelection greedy_select_exact(int p, const NormalizedSimilarityMatrix& mn);

struct BruteForceResult {
  std::vector<std::string> best_ids;  // lexicographically first maximizer
  double r_star = 0.0;
};

/// Exhaustive optimum over all p-subsets of the non-duplicate samples.
/// Limited to C(n, p) <= 100000 candidate subsets.
BruteForceResult brute_force_optimum(int p, const NormalizedSimilarityMatrix& mn);

/// Random sub-stochastic probability matrix small enough for exact
/// enumeration; used by the greedy bound checks and by the acceptance suite.
NormalizedSimilarityMatrix random_enumerable_matrix(int n, std::mt19937_64& rng);

struct BoundCheckSummary {
  int fixtures = 0;
  int checks = 0;
  int violations = 0;
  double min_ratio = 0.0;  // min over checks of r / (factor * r_star)

  std::string to_json() const;
};

/// Verifies r >= (1 - (1 - 1/p)^p) * r_star for greedy-with-exact-oracle
/// against the brute-force optimum, on `fixtures` random enumerable matrices
/// and every feasible p.
BoundCheckSummary run_bound_check(int fixtures, std::uint64_t seed);

double greedy_bound_factor(int p);

}  // namespace micl
