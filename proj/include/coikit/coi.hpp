#pragma once

// Chain-of-Intention statistics: per-dialogue intent chains, transition
// counts, the incoming (column-stochastic) matrix, the flattened joint
// distribution fed to divergences, and the real-data intent graph.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "coikit/corpus.hpp"

namespace coikit {

struct IntentChain {
  std::string dialogue_id;
  std::vector<IntentLabel> labels;

  bool operator==(const IntentChain&) const = default;
};

/// Candidate-turn labels in order. Throws Error(kMissingLabel) naming the
/// first unlabeled turn index.
IntentChain extract_chain(const Dialogue& d);
std::vector<IntentChain> extract_chains(const Corpus& c);

inline constexpr std::size_t kNumCells = kNumIntents * kNumIntents;

constexpr std::size_t cell_of(IntentLabel from, IntentLabel to) {
  return index_of(from) * kNumIntents + index_of(to);
}

/// Adjacent-pair counts (from, to) plus first-label counts. Additive, so
/// per-dialogue counts can be merged or subtracted freely.
class TransitionCounts {
 public:
  using Cells = std::array<std::uint64_t, kNumCells>;

  void add(std::span<const IntentLabel> chain);
  void add(const IntentChain& chain) { add(chain.labels); }

  TransitionCounts& operator+=(const TransitionCounts& other);
  /// Requires `other` to be contained in *this (checked).
  TransitionCounts& operator-=(const TransitionCounts& other);

  std::uint64_t count(IntentLabel from, IntentLabel to) const { return cells_[cell_of(from, to)]; }
  const Cells& cells() const { return cells_; }
  const std::array<std::uint64_t, kNumIntents>& initial() const { return initial_; }
  std::uint64_t total() const { return total_; }
  std::uint64_t chains() const { return chains_; }

  bool operator==(const TransitionCounts&) const = default;

 private:
  Cells cells_{};
  std::array<std::uint64_t, kNumIntents> initial_{};
  std::uint64_t total_ = 0;
  std::uint64_t chains_ = 0;
};

/// Throws Error(kEmptyInput) for an empty chain list.
TransitionCounts accumulate(std::span<const IntentChain> chains);

/// Square probability matrix, entry (i, j) = P(prev = i | current = j).
class CoIMatrix {
 public:
  /// Wraps an externally supplied row-major matrix. Columns summing to zero
  /// are flagged; column_mass holds the raw column sums.
  static CoIMatrix from_values(std::size_t dim, std::vector<double> values);

  std::size_t dim() const { return dim_; }
  double at(std::size_t row, std::size_t col) const { return values_[row * dim_ + col]; }
  const std::vector<double>& values() const { return values_; }
  const std::vector<double>& column_mass() const { return column_mass_; }
  const std::vector<std::size_t>& flagged_columns() const { return flagged_; }
  bool is_flagged(std::size_t col) const;

  /// Largest |column sum - 1| over non-flagged columns.
  double max_column_error() const;
  bool entries_in_unit_interval() const;

 private:
  friend CoIMatrix incoming_matrix(const TransitionCounts& tc);
  std::size_t dim_ = 0;
  std::vector<double> values_;
  std::vector<double> column_mass_;
  std::vector<std::size_t> flagged_;
};

/// values(i, j) = counts(i, j) / sum_i counts(i, j); zero columns flagged.
CoIMatrix incoming_matrix(const TransitionCounts& tc);

struct JointDistribution {
  std::vector<double> probs;  // row-major over (from, to)
  double smoothing_alpha = 0.0;
};

/// (c + alpha) / (total + alpha * n) over any cell vector of length n.
/// Throws kDegenerateDistribution when total = 0 and alpha = 0.
JointDistribution joint_from_cells(std::span<const std::uint64_t> cells, double alpha);
JointDistribution joint_distribution(const TransitionCounts& tc, double alpha);

/// Alternative flattening: additively smoothed incoming columns, each
/// weighted 1/K, so the vector still sums to one.
JointDistribution incoming_flattened(const TransitionCounts& tc, double alpha);

enum class Flattening : std::uint8_t { kJoint, kIncoming };
JointDistribution flatten(const TransitionCounts& tc, double alpha, Flattening how);

/// Directed graph of transitions observed at least `theta` times.
class IntentGraph {
 public:
  bool has_edge(IntentLabel from, IntentLabel to) const { return edges_[cell_of(from, to)]; }
  std::uint64_t edge_count(IntentLabel from, IntentLabel to) const { return counts_[cell_of(from, to)]; }
  std::uint64_t theta() const { return theta_; }
  std::size_t size() const;
  void add_edge(IntentLabel from, IntentLabel to, std::uint64_t count = 1);

 private:
  friend IntentGraph build_graph(const TransitionCounts& tc, std::uint64_t theta);
  std::array<bool, kNumCells> edges_{};
  TransitionCounts::Cells counts_{};
  std::uint64_t theta_ = 1;
};

/// Throws Error(kInvalidArgument) for theta < 1.
IntentGraph build_graph(const TransitionCounts& tc, std::uint64_t theta);

Json counts_to_json(const TransitionCounts& tc);
Json matrix_to_json(const CoIMatrix& m);
/// Heatmap layout: header row of to-labels, one row per from-label.
std::string matrix_to_csv(const CoIMatrix& m);

}  // namespace coikit
