#include "coikit/coi.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

namespace coikit {

IntentChain extract_chain(const Dialogue& d) {
  IntentChain chain{d.id, {}};
  for (const auto& t : d.turns) {
    if (t.speaker != Speaker::kCandidate) continue;
    if (!t.intent) {
      throw Error(ErrorCode::kMissingLabel,
                  "dialogue '" + d.id + "': candidate turn " + std::to_string(t.index) + " has no intent",
                  {std::to_string(t.index)});
    }
    chain.labels.push_back(*t.intent);
  }
  return chain;
}

std::vector<IntentChain> extract_chains(const Corpus& c) {
  std::vector<IntentChain> out;
  out.reserve(c.size());
  for (const auto& d : c.dialogues()) out.push_back(extract_chain(d));
  return out;
}

void TransitionCounts::add(std::span<const IntentLabel> chain) {
  if (chain.empty()) return;
  ++chains_;
  ++initial_[index_of(chain.front())];
  for (std::size_t t = 1; t < chain.size(); ++t) {
    ++cells_[cell_of(chain[t - 1], chain[t])];
    ++total_;
  }
}

TransitionCounts& TransitionCounts::operator+=(const TransitionCounts& other) {
  for (std::size_t i = 0; i < kNumCells; ++i) cells_[i] += other.cells_[i];
  for (std::size_t i = 0; i < kNumIntents; ++i) initial_[i] += other.initial_[i];
  total_ += other.total_;
  chains_ += other.chains_;
  return *this;
}

TransitionCounts& TransitionCounts::operator-=(const TransitionCounts& other) {
  for (std::size_t i = 0; i < kNumCells; ++i) {
    if (other.cells_[i] > cells_[i]) throw Error(ErrorCode::kInvalidArgument, "count subtraction underflow");
  }
  for (std::size_t i = 0; i < kNumIntents; ++i) {
    if (other.initial_[i] > initial_[i]) throw Error(ErrorCode::kInvalidArgument, "count subtraction underflow");
  }
  for (std::size_t i = 0; i < kNumCells; ++i) cells_[i] -= other.cells_[i];
  for (std::size_t i = 0; i < kNumIntents; ++i) initial_[i] -= other.initial_[i];
  total_ -= other.total_;
  chains_ -= other.chains_;
  return *this;
}

TransitionCounts accumulate(std::span<const IntentChain> chains) {
  if (chains.empty()) throw Error(ErrorCode::kEmptyInput, "accumulate needs at least one chain");
  TransitionCounts tc;
  for (const auto& c : chains) tc.add(c);
  return tc;
}

// ---------------------------------------------------------------------------

CoIMatrix CoIMatrix::from_values(std::size_t dim, std::vector<double> values) {
  if (dim == 0 || values.size() != dim * dim) {
    throw Error(ErrorCode::kInvalidArgument, "matrix needs dim*dim values");
  }
  CoIMatrix m;
  m.dim_ = dim;
  m.values_ = std::move(values);
  m.column_mass_.assign(dim, 0.0);
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t j = 0; j < dim; ++j) m.column_mass_[j] += m.values_[i * dim + j];
  }
  for (std::size_t j = 0; j < dim; ++j) {
    if (m.column_mass_[j] == 0.0) m.flagged_.push_back(j);
  }
  return m;
}

bool CoIMatrix::is_flagged(std::size_t col) const {
  return std::find(flagged_.begin(), flagged_.end(), col) != flagged_.end();
}

double CoIMatrix::max_column_error() const {
  double worst = 0.0;
  for (std::size_t j = 0; j < dim_; ++j) {
    if (is_flagged(j)) continue;
    double sum = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) sum += at(i, j);
    worst = std::max(worst, std::abs(sum - 1.0));
  }
  return worst;
}

bool CoIMatrix::entries_in_unit_interval() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return v >= 0.0 && v <= 1.0; });
}

CoIMatrix incoming_matrix(const TransitionCounts& tc) {
  CoIMatrix m;
  m.dim_ = kNumIntents;
  m.values_.assign(kNumCells, 0.0);
  m.column_mass_.assign(kNumIntents, 0.0);
  for (std::size_t j = 0; j < kNumIntents; ++j) {
    std::uint64_t mass = 0;
    for (std::size_t i = 0; i < kNumIntents; ++i) mass += tc.cells()[i * kNumIntents + j];
    m.column_mass_[j] = static_cast<double>(mass);
    if (mass == 0) {
      m.flagged_.push_back(j);
      continue;
    }
    for (std::size_t i = 0; i < kNumIntents; ++i) {
      m.values_[i * kNumIntents + j] =
          static_cast<double>(tc.cells()[i * kNumIntents + j]) / static_cast<double>(mass);
    }
  }
  return m;
}

JointDistribution joint_from_cells(std::span<const std::uint64_t> cells, double alpha) {
  if (!(alpha >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "smoothing alpha must be >= 0");
  std::uint64_t total = 0;
  for (auto c : cells) total += c;
  if (total == 0 && alpha == 0.0) {
    throw Error(ErrorCode::kDegenerateDistribution, "no transitions and no smoothing");
  }
  const double denom = static_cast<double>(total) + alpha * static_cast<double>(cells.size());
  JointDistribution jd{std::vector<double>(cells.size()), alpha};
  for (std::size_t i = 0; i < cells.size(); ++i) {
    jd.probs[i] = (static_cast<double>(cells[i]) + alpha) / denom;
  }
  return jd;
}

JointDistribution joint_distribution(const TransitionCounts& tc, double alpha) {
  return joint_from_cells(tc.cells(), alpha);
}

JointDistribution incoming_flattened(const TransitionCounts& tc, double alpha) {
  if (!(alpha >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "smoothing alpha must be >= 0");
  JointDistribution jd{std::vector<double>(kNumCells, 0.0), alpha};
  const double k = static_cast<double>(kNumIntents);
  for (std::size_t j = 0; j < kNumIntents; ++j) {
    std::uint64_t mass = 0;
    for (std::size_t i = 0; i < kNumIntents; ++i) mass += tc.cells()[i * kNumIntents + j];
    if (mass == 0 && alpha == 0.0) {
      throw Error(ErrorCode::kDegenerateDistribution,
                  "column '" + std::string(to_string(kAllIntents[j])) + "' has no incoming transitions");
    }
    const double denom = static_cast<double>(mass) + alpha * k;
    for (std::size_t i = 0; i < kNumIntents; ++i) {
      jd.probs[i * kNumIntents + j] =
          (static_cast<double>(tc.cells()[i * kNumIntents + j]) + alpha) / denom / k;
    }
  }
  return jd;
}

JointDistribution flatten(const TransitionCounts& tc, double alpha, Flattening how) {
  return how == Flattening::kJoint ? joint_distribution(tc, alpha) : incoming_flattened(tc, alpha);
}

// ---------------------------------------------------------------------------

std::size_t IntentGraph::size() const {
  return static_cast<std::size_t>(std::count(edges_.begin(), edges_.end(), true));
}

void IntentGraph::add_edge(IntentLabel from, IntentLabel to, std::uint64_t count) {
  edges_[cell_of(from, to)] = true;
  counts_[cell_of(from, to)] = std::max(counts_[cell_of(from, to)], count);
}

IntentGraph build_graph(const TransitionCounts& tc, std::uint64_t theta) {
  if (theta < 1) throw Error(ErrorCode::kInvalidArgument, "graph threshold theta must be >= 1");
  IntentGraph g;
  g.theta_ = theta;
  for (std::size_t c = 0; c < kNumCells; ++c) {
    g.counts_[c] = tc.cells()[c];
    g.edges_[c] = tc.cells()[c] >= theta;
  }
  return g;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> axis_names(std::size_t dim) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < dim; ++i) {
    names.push_back(dim == kNumIntents ? std::string(to_string(kAllIntents[i]))
                                       : "I" + std::to_string(i + 1));
  }
  return names;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

Json counts_to_json(const TransitionCounts& tc) {
  const auto names = axis_names(kNumIntents);
  Json counts = Json::array();
  for (std::size_t i = 0; i < kNumIntents; ++i) {
    Json row = Json::array();
    for (std::size_t j = 0; j < kNumIntents; ++j) row.push_back(tc.cells()[i * kNumIntents + j]);
    counts.push_back(std::move(row));
  }
  Json out = Json::object();
  out["axis"] = names;
  out["counts"] = std::move(counts);
  out["initial_counts"] = tc.initial();
  out["total_transitions"] = tc.total();
  out["chains"] = tc.chains();
  return out;
}

Json matrix_to_json(const CoIMatrix& m) {
  Json values = Json::array();
  for (std::size_t i = 0; i < m.dim(); ++i) {
    Json row = Json::array();
    for (std::size_t j = 0; j < m.dim(); ++j) row.push_back(m.at(i, j));
    values.push_back(std::move(row));
  }
  Json flagged = Json::array();
  const auto names = axis_names(m.dim());
  for (auto j : m.flagged_columns()) flagged.push_back(names[j]);
  Json out = Json::object();
  out["convention"] = "values[i][j] = P(previous = axis[i] | current = axis[j]); columns sum to 1";
  out["axis"] = names;
  out["values"] = std::move(values);
  out["column_mass"] = m.column_mass();
  out["flagged_columns"] = std::move(flagged);
  return out;
}

std::string matrix_to_csv(const CoIMatrix& m) {
  const auto names = axis_names(m.dim());
  std::ostringstream os;
  os << "from\\to";
  for (const auto& n : names) os << ',' << csv_field(n);
  os << '\n';
  os << std::setprecision(17);
  for (std::size_t i = 0; i < m.dim(); ++i) {
    os << csv_field(names[i]);
    for (std::size_t j = 0; j < m.dim(); ++j) os << ',' << m.at(i, j);
    os << '\n';
  }
  return os.str();
}

}  // namespace coikit
