#include "feint/clustering.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include "feint/errors.hpp"
#include "feint/json_io.hpp"

namespace feint {

std::size_t AttackSequenceSet::alert_count() const {
  std::size_t n = 0;
  for (const auto& s : sequences) n += s.size();
  return n;
}

double membership(const RawAlert& a, const AttackSequence& seq, const SimilarityConfig& cfg) {
  if (seq.alerts.empty()) throw ArgumentError("membership: empty sequence");
  const int stage_a = stage_of(a.attack_type, cfg.stage_map).stage;
  double best = 0.0;
  for (std::size_t i = 0; i < seq.alerts.size(); ++i) {
    const int stage_m = i < seq.stages.size() ? seq.stages[i] : stage_of(seq.alerts[i].attack_type, cfg.stage_map).stage;
    best = std::max(best, sim_total(a, stage_a, seq.alerts[i], stage_m, cfg));
  }
  return best;
}

AttackSequenceSet fuzzy_cluster(std::span<const RawAlert> alerts, double lambda, const SimilarityConfig& cfg) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ArgumentError("fuzzy_cluster: lambda must lie in [0, 1]");
  cfg.validate();

  std::vector<std::size_t> order(alerts.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return alerts[x].timestamp < alerts[y].timestamp; });

  AttackSequenceSet out;
  auto& seqs = out.sequences;
  for (const auto idx : order) {
    const RawAlert& a = alerts[idx];
    const int stage = stage_of(a.attack_type, cfg.stage_map).stage;

    std::size_t best = seqs.size();
    double best_r = -1.0;
    for (std::size_t s = 0; s < seqs.size(); ++s) {
      // input is time-sorted, so the last member is the latest
      if (stage - seqs[s].stages.back() < -1) continue;
      const double r = membership(a, seqs[s], cfg);
      if (r > best_r) {
        best_r = r;
        best = s;
      }
    }
    if (best < seqs.size() && best_r >= lambda) {
      seqs[best].alerts.push_back(a);
      seqs[best].source_indices.push_back(idx);
      seqs[best].stages.push_back(stage);
    } else {
      AttackSequence fresh;
      fresh.id = seqs.size();
      fresh.alerts.push_back(a);
      fresh.source_indices.push_back(idx);
      fresh.stages.push_back(stage);
      seqs.push_back(std::move(fresh));
    }
  }
  return out;
}

AttackSequenceSet prune_singletons(const AttackSequenceSet& ass) {
  AttackSequenceSet out;
  for (const auto& s : ass.sequences) {
    if (s.size() >= 2) out.sequences.push_back(s);
  }
  return out;
}

std::vector<AttackPattern> extract_patterns(const AttackSequenceSet& ass, const StageMap& map) {
  std::vector<AttackPattern> patterns;
  std::map<std::vector<std::pair<std::string, int>>, std::size_t> index;
  for (const auto& s : ass.sequences) {
    std::vector<std::pair<std::string, int>> trace;
    for (const auto& a : s.alerts) {
      std::pair<std::string, int> step{a.attack_type, stage_of(a.attack_type, map).stage};
      if (trace.empty() || trace.back() != step) trace.push_back(std::move(step));
    }
    const auto [it, inserted] = index.emplace(trace, patterns.size());
    if (inserted) {
      patterns.push_back({std::move(trace), 1});
    } else {
      ++patterns[it->second].support;
    }
  }
  std::stable_sort(patterns.begin(), patterns.end(),
                   [](const AttackPattern& x, const AttackPattern& y) { return x.support > y.support; });
  return patterns;
}

void write_sequences_json(std::ostream& out, const AttackSequenceSet& ass) {
  auto arr = nlohmann::json::array();
  for (const auto& s : ass.sequences) {
    arr.push_back({{"id", s.id}, {"source_indices", s.source_indices}, {"stages", s.stages}, {"alerts", s.alerts}});
  }
  out << nlohmann::json{{"sequences", arr}}.dump(1) << '\n';
}

AttackSequenceSet read_sequences_json(std::istream& in) {
  AttackSequenceSet ass;
  try {
    const auto j = nlohmann::json::parse(in);
    for (const auto& s : j.at("sequences")) {
      AttackSequence seq;
      seq.id = s.at("id").get<std::size_t>();
      seq.source_indices = s.at("source_indices").get<std::vector<std::size_t>>();
      seq.stages = s.at("stages").get<std::vector<int>>();
      seq.alerts = s.at("alerts").get<std::vector<RawAlert>>();
      if (seq.alerts.empty() || seq.alerts.size() != seq.stages.size() ||
          seq.alerts.size() != seq.source_indices.size()) {
        throw FormatError("sequence " + std::to_string(seq.id) + " has inconsistent lengths");
      }
      ass.sequences.push_back(std::move(seq));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("sequences file: ") + e.what());
  }
  return ass;
}

std::string format_pattern_table(const std::vector<AttackPattern>& patterns) {
  std::ostringstream os;
  os << "support\tpattern\n";
  for (const auto& p : patterns) {
    os << p.support << '\t';
    for (std::size_t i = 0; i < p.stages.size(); ++i) {
      if (i) os << " -> ";
      os << p.stages[i].first << " (" << p.stages[i].second << ')';
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace feint
