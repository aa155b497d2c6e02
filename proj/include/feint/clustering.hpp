#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "feint/alert.hpp"
#include "feint/similarity.hpp"

namespace feint {

inline constexpr double kDefaultLambda = 0.6;

struct AttackSequence {
  std::size_t id = 0;                       // creation order within the clustering pass
  std::vector<RawAlert> alerts;             // ascending timestamps
  std::vector<std::size_t> source_indices;  // positions in the clustered input
  std::vector<int> stages;                  // stage of each alert under the config's map

  std::size_t size() const { return alerts.size(); }
};

struct AttackSequenceSet {
  std::vector<AttackSequence> sequences;

  std::size_t alert_count() const;
};

// Max of sim_total(a, member) over the sequence.
double membership(const RawAlert& a, const AttackSequence& seq, const SimilarityConfig& cfg);

// Each alert is compared to every open sequence whose latest alert has a stage at most
// one above its own; it joins the sequence of highest membership if that reaches lambda,
// the earliest-created one on ties, and otherwise starts a new sequence.
AttackSequenceSet fuzzy_cluster(std::span<const RawAlert> alerts, double lambda = kDefaultLambda,
                                const SimilarityConfig& cfg = {});

AttackSequenceSet prune_singletons(const AttackSequenceSet& ass);

struct AttackPattern {
  std::vector<std::pair<std::string, int>> stages;  // (attack type, stage)
  std::size_t support = 1;
};

// Consecutive equal (type, stage) steps collapse; identical traces merge. Sorted by
// support, descending; equal support keeps first-seen order.
std::vector<AttackPattern> extract_patterns(const AttackSequenceSet& ass, const StageMap& map);

// {"sequences": [{"id", "source_indices", "stages", "alerts"}]}
void write_sequences_json(std::ostream& out, const AttackSequenceSet& ass);
AttackSequenceSet read_sequences_json(std::istream& in);

// One line per pattern: support, then the trace as "type (stage) -> ...".
std::string format_pattern_table(const std::vector<AttackPattern>& patterns);

}  // namespace feint
