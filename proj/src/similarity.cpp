#include "feint/similarity.hpp"

#include <bit>
#include <cmath>
#include <fstream>

#include "feint/errors.hpp"

namespace feint {

StageMap::StageMap(std::vector<StagePattern> entries) : entries_(std::move(entries)) {
  for (const auto& e : entries_) {
    if (e.stage < 1 || e.stage > kStageCount) {
      throw ArgumentError("stage map entry '" + e.pattern + "' has stage " + std::to_string(e.stage) +
                          ", expected 1..7");
    }
    if (e.pattern.empty() || e.pattern == "*") throw ArgumentError("stage map pattern must not be empty");
  }
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    for (std::size_t j = i + 1; j < entries_.size(); ++j) {
      if (entries_[i].pattern == entries_[j].pattern) {
        throw ArgumentError("stage map pattern '" + entries_[i].pattern + "' listed twice");
      }
    }
  }
}

StageMap StageMap::defaults() {
  return StageMap({
      // reconnaissance
      {"ICMP*", 1},
      {"ICMP PING*", 1},
      {"SCAN*", 1},
      {"BAD-TRAFFIC*", 1},
      {"SNMP request*", 1},
      {"RPC portmap*", 1},
      {"RPC sadmind UDP PING", 1},
      {"DNS*", 1},
      {"PortScan", 1},
      // delivery
      {"FTP Bad login", 3},
      {"TELNET Bad Login", 3},
      {"RPC sadmind query with root credentials attempt*", 3},
      {"SHELLCODE*", 3},
      {"FTP-Patator", 3},
      {"SSH-Patator", 3},
      {"BruteForce", 3},
      // exploitation
      {"RPC sadmind UDP NETMGT_PROC_SERVICE CLIENT_DOMAIN overflow attempt", 4},
      {"EXPLOIT*", 4},
      {"WEB-ATTACKS*", 4},
      {"Web Attack*", 4},
      {"XSS", 4},
      {"SQLInjection", 4},
      {"Heartbleed", 4},
      // installation
      {"BACKDOOR*", 5},
      {"Infiltration", 5},
      // command and control
      {"RSERVICES*", 6},
      {"TELNET*", 6},
      {"Bot", 6},
      // actions on objectives
      {"DDOS*", 7},
      {"DDoS", 7},
      {"DoS*", 7},
  });
}

StageLookup stage_of(std::string_view attack_type, const StageMap& map) {
  StageLookup best;
  std::size_t best_len = 0;
  bool best_exact = false;
  for (const auto& e : map.entries()) {
    const bool prefix = e.pattern.back() == '*';
    const std::string_view pat = prefix ? std::string_view(e.pattern).substr(0, e.pattern.size() - 1)
                                        : std::string_view(e.pattern);
    const bool hit = prefix ? attack_type.substr(0, pat.size()) == pat : attack_type == pat;
    if (!hit) continue;
    const bool better = !best.mapped || pat.size() > best_len || (pat.size() == best_len && !prefix && !best_exact);
    if (better) {
      best = {e.stage, true};
      best_len = pat.size();
      best_exact = !prefix;
    }
  }
  return best;
}

void SimilarityWeights::validate() const {
  if (event < 0 || ip < 0 || port < 0 || time < 0) throw ArgumentError("similarity weights must be non-negative");
  const double sum = event + ip + port + time;
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ArgumentError("similarity weights must sum to 1 (got " + std::to_string(sum) + ")");
  }
}

void SimilarityConfig::validate() const {
  weights.validate();
  if (!(time_scale > 0.0)) throw ArgumentError("time_scale must be > 0");
  if (!(absent_port_similarity >= 0.0 && absent_port_similarity <= 1.0)) {
    throw ArgumentError("absent_port_similarity must lie in [0, 1]");
  }
}

double sim_event_delta(int delta) {
  if (delta == 0 || delta == 1) return 1.0;
  if (delta > 1) return std::exp(-(static_cast<double>(delta) - 1.5));
  return 0.0;
}

double sim_event(const RawAlert& a, const RawAlert& b, const StageMap& map) {
  return sim_event_delta(stage_of(a.attack_type, map).stage - stage_of(b.attack_type, map).stage);
}

int prefix_bits(Ipv4 x, Ipv4 y) { return std::countl_zero(x.value() ^ y.value()); }

double sim_ip(const RawAlert& a, const RawAlert& b) {
  const int n = std::max({prefix_bits(a.s_ip, b.d_ip), prefix_bits(a.s_ip, b.s_ip), prefix_bits(a.d_ip, b.d_ip)});
  return static_cast<double>(n) / 32.0;
}

double sim_port(const RawAlert& a, const RawAlert& b, double absent_similarity) {
  if (!a.d_port || !b.d_port) return absent_similarity;
  const int diff = std::abs(int{*a.d_port} - int{*b.d_port});
  return 1.0 - static_cast<double>(diff) / 65535.0;
}

double sim_time(const RawAlert& a, const RawAlert& b, double tau) {
  return std::exp(-std::abs(seconds_between(a.timestamp, b.timestamp)) / tau);
}

double sim_total(const RawAlert& a, int stage_a, const RawAlert& b, int stage_b, const SimilarityConfig& cfg) {
  const auto& w = cfg.weights;
  return w.event * sim_event_delta(stage_a - stage_b) + w.ip * sim_ip(a, b) +
         w.port * sim_port(a, b, cfg.absent_port_similarity) + w.time * sim_time(a, b, cfg.time_scale);
}

double sim_total(const RawAlert& a, const RawAlert& b, const SimilarityConfig& cfg) {
  return sim_total(a, stage_of(a.attack_type, cfg.stage_map).stage, b, stage_of(b.attack_type, cfg.stage_map).stage,
                   cfg);
}

nlohmann::json to_json(const StageMap& map) {
  auto arr = nlohmann::json::array();
  for (const auto& e : map.entries()) arr.push_back({{"pattern", e.pattern}, {"stage", e.stage}});
  return arr;
}

StageMap stage_map_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw ArgumentError("stage_map must be an array of {pattern, stage}");
  std::vector<StagePattern> entries;
  for (const auto& e : j) entries.push_back({e.at("pattern").get<std::string>(), e.at("stage").get<int>()});
  return StageMap(std::move(entries));
}

nlohmann::json to_json(const SimilarityConfig& cfg) {
  return {{"weights",
           {{"event", cfg.weights.event}, {"ip", cfg.weights.ip}, {"port", cfg.weights.port}, {"time", cfg.weights.time}}},
          {"time_scale", cfg.time_scale},
          {"absent_port_similarity", cfg.absent_port_similarity},
          {"stage_map", to_json(cfg.stage_map)}};
}

SimilarityConfig similarity_config_from_json(const nlohmann::json& j) {
  SimilarityConfig cfg;
  if (j.contains("weights")) {
    const auto& w = j.at("weights");
    cfg.weights.event = w.value("event", cfg.weights.event);
    cfg.weights.ip = w.value("ip", cfg.weights.ip);
    cfg.weights.port = w.value("port", cfg.weights.port);
    cfg.weights.time = w.value("time", cfg.weights.time);
  }
  cfg.time_scale = j.value("time_scale", cfg.time_scale);
  cfg.absent_port_similarity = j.value("absent_port_similarity", cfg.absent_port_similarity);
  if (j.contains("stage_map")) cfg.stage_map = stage_map_from_json(j.at("stage_map"));
  return cfg;
}

StageMap load_stage_map(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read stage map: " + path.string());
  try {
    const auto j = nlohmann::json::parse(in);
    return stage_map_from_json(j.is_object() && j.contains("stage_map") ? j.at("stage_map") : j);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("stage map " + path.string() + ": " + e.what());
  }
}

}  // namespace feint
