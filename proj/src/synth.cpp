#include "feint/synth.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "feint/errors.hpp"
#include "feint/rng.hpp"

namespace feint {

namespace {

// 2000-03-07 16:27:00 UTC
constexpr std::int64_t kStartSeconds = 952446420;

std::uint16_t ephemeral_port(Rng& rng) {
  return static_cast<std::uint16_t>(std::uniform_int_distribution<int>(1024, 65535)(rng));
}

RawAlert make_alert(const PhaseTemplate& ph, Timestamp t, Ipv4 s, Ipv4 d, Rng& rng) {
  RawAlert a;
  a.timestamp = t;
  a.protocol = ph.protocol;
  a.s_ip = s;
  a.d_ip = d;
  if (ph.protocol == Protocol::kTcp || ph.protocol == Protocol::kUdp) {
    a.s_port = ephemeral_port(rng);
    a.d_port = ph.d_port;
  }
  a.attack_type = ph.attack_type;
  a.classification = ph.classification;
  a.priority = ph.priority;
  a.signature = {1, ph.sid, 1};
  return a;
}

std::uint8_t rev6(std::size_t k) {
  std::uint8_t out = 0;
  for (int b = 0; b < 6; ++b) {
    if (k & (std::size_t{1} << b)) out |= static_cast<std::uint8_t>(1u << (5 - b));
  }
  return out;
}

// Unrelated background alerts; every noise alert gets its own first octet.
const std::vector<PhaseTemplate>& noise_pool() {
  static const std::vector<PhaseTemplate> pool = {
      {"SCAN nmap XMAS", 1, Protocol::kTcp, 80, 1228, "Attempted Information Leak", 2, false},
      {"BAD-TRAFFIC udp port 0 traffic", 1, Protocol::kUdp, 0, 525, "Misc activity", 3, false},
      {"WEB-ATTACKS /bin/ps command attempt", 4, Protocol::kTcp, 80, 1328, "Web Application Attack", 1, false},
      {"BACKDOOR Q access", 5, Protocol::kTcp, 23, 184, "Misc activity", 2, false},
      {"ICMP Destination Unreachable Port Unreachable", 1, Protocol::kIcmp, 0, 402, "Misc activity", 3, false},
      {"SNMP request tcp", 1, Protocol::kTcp, 161, 1418, "Attempted Information Leak", 2, false},
  };
  return pool;
}

std::string to_text(const std::vector<RawAlert>& alerts) {
  std::string text;
  for (const auto& a : alerts) {
    text += format_fast_alert(a);
    text += '\n';
  }
  return text;
}

}  // namespace

std::vector<PhaseTemplate> lldos_phases() {
  return {
      {"ICMP PING", 1, Protocol::kIcmp, 0, 384, "Misc activity", 3, false},
      {"RPC sadmind UDP PING", 1, Protocol::kUdp, 32773, 585, "Decode of an RPC Query", 2, false},
      {"RPC sadmind UDP NETMGT_PROC_SERVICE CLIENT_DOMAIN overflow attempt", 4, Protocol::kUdp, 32773, 1911,
       "Attempted Administrator Privilege Gain", 1, false},
      {"RSERVICES rsh root", 6, Protocol::kTcp, 514, 610, "Attempted User Privilege Gain", 2, false},
      {"DDOS mstream client to handler", 7, Protocol::kTcp, 15104, 247, "Attempted Denial of Service", 2, true},
  };
}

void ScenarioSpec::validate() const {
  std::vector<std::string> bad;
  if (phases.empty()) bad.push_back("phases must not be empty");
  if (events_per_phase.size() != phases.size()) bad.push_back("events_per_phase must have one entry per phase");
  for (auto n : events_per_phase) {
    if (n == 0) bad.push_back("events_per_phase entries must be >= 1");
  }
  for (const auto& p : phases) {
    if (p.stage < 1 || p.stage > 7) bad.push_back("phase '" + p.attack_type + "' has stage outside 1..7");
    if (p.attack_type.empty()) bad.push_back("phase attack_type must not be empty");
  }
  if (processes < 1 || processes > 4) bad.push_back("processes must lie in 1..4");
  if (!(noise_rate >= 0.0 && noise_rate <= 1.0)) bad.push_back("noise_rate must lie in [0, 1]");
  if (!(slot_seconds > 0.0)) bad.push_back("slot_seconds must be > 0");
  if (max_noise > 64) bad.push_back("max_noise must be <= 64");
  if (!bad.empty()) throw ConfigError(bad);
}

GeneratedLog generate_alert_log(const ScenarioSpec& spec) {
  spec.validate();
  Rng rng = make_stream(spec.seed, 0);
  const std::uint8_t group_octet[4] = {0, 10, 36, 58};

  struct Block {
    std::size_t process;
    std::vector<std::size_t> phase_of;  // one entry per event
  };
  std::vector<std::vector<Block>> blocks(spec.processes);
  for (std::size_t p = 0; p < spec.processes; ++p) {
    Block cur{p, {}};
    for (std::size_t i = 0; i < spec.phases.size(); ++i) {
      for (std::size_t j = 0; j < spec.events_per_phase[i]; ++j) {
        // breaks only inside a phase run, so a stage change always follows its predecessor directly
        if (j > 0 && !cur.phase_of.empty() && uniform01(rng) < 0.5) {
          blocks[p].push_back(std::move(cur));
          cur = Block{p, {}};
        }
        cur.phase_of.push_back(i);
      }
    }
    blocks[p].push_back(std::move(cur));
  }

  struct Hosts {
    Ipv4 attacker, target;
    std::vector<Ipv4> inside;
  };
  std::vector<Hosts> hosts(spec.processes);
  for (std::size_t p = 0; p < spec.processes; ++p) {
    if (p == 0) {
      hosts[p] = {Ipv4(202, 77, 162, 213), Ipv4(131, 84, 1, 31),
                  {Ipv4(172, 16, 115, 20), Ipv4(172, 16, 112, 50), Ipv4(172, 16, 112, 10)}};
    } else {
      const auto g = group_octet[p];
      hosts[p] = {Ipv4(g, 77, 162, 213), Ipv4(g, 84, 1, 31),
                  {Ipv4(g, 16, 115, 20), Ipv4(g, 16, 112, 50), Ipv4(g, 16, 112, 10)}};
    }
  }

  GeneratedLog out;
  out.truth.processes = spec.processes;
  std::vector<std::vector<std::size_t>> seen(spec.processes, std::vector<std::size_t>(spec.phases.size(), 0));
  std::vector<std::size_t> next_block(spec.processes, 0);
  std::int64_t slot = 0;
  std::size_t last_group = std::numeric_limits<std::size_t>::max();
  std::size_t noise = 0;
  auto at = [&](std::int64_t s) {
    return Timestamp(kStartSeconds * 1'000'000 + static_cast<std::int64_t>(std::llround(s * spec.slot_seconds * 1e6)));
  };

  for (;;) {
    std::vector<std::size_t> live;
    for (std::size_t p = 0; p < spec.processes; ++p) {
      if (next_block[p] < blocks[p].size()) live.push_back(p);
    }
    if (live.empty()) break;
    const auto p = live[std::uniform_int_distribution<std::size_t>(0, live.size() - 1)(rng)];
    const Block& b = blocks[p][next_block[p]++];
    if (last_group != p && last_group != std::numeric_limits<std::size_t>::max()) ++slot;  // one empty slot
    last_group = p;
    for (const auto phase : b.phase_of) {
      const auto& ph = spec.phases[phase];
      const auto& h = hosts[p];
      const auto j = seen[p][phase]++;
      const Ipv4 inside = h.inside[j % h.inside.size()];
      const Ipv4 s = ph.from_inside ? inside : h.attacker;
      const Ipv4 d = ph.from_inside ? h.target : inside;
      out.alerts.push_back(make_alert(ph, at(slot), s, d, rng));
      out.truth.process_of.push_back(p);
      ++slot;
    }
    if (noise < spec.max_noise && spec.noise_rate > 0.0 && uniform01(rng) < spec.noise_rate) {
      ++slot;
      const auto& pool = noise_pool();
      const auto& ph = pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];
      const auto octet = static_cast<std::uint8_t>(64 | rev6(noise));
      const auto ip = [&](std::uint8_t c) {
        return Ipv4(octet, static_cast<std::uint8_t>(rng() & 0xff), c, static_cast<std::uint8_t>(1 + rng() % 254));
      };
      const Ipv4 s = ip(1);
      const Ipv4 d = ip(2);
      out.alerts.push_back(make_alert(ph, at(slot), s, d, rng));
      out.truth.process_of.push_back(spec.processes + noise);
      ++noise;
      ++slot;
      last_group = std::numeric_limits<std::size_t>::max() - 1;
    }
  }
  out.text = to_text(out.alerts);
  return out;
}

nlohmann::json to_json(const GroundTruth& t) {
  return {{"processes", t.processes}, {"process_of", t.process_of}};
}

GroundTruth ground_truth_from_json(const nlohmann::json& j) {
  GroundTruth t;
  t.processes = j.at("processes").get<std::size_t>();
  t.process_of = j.at("process_of").get<std::vector<std::size_t>>();
  return t;
}

// ---------------------------------------------------------------------------

void PaperFixtureSpec::validate() const {
  std::vector<std::string> bad;
  if (templates == 0 || templates > multi_stage_templates().size()) bad.push_back("templates must lie in 1..9");
  if (multi_stage < templates) bad.push_back("multi_stage must be >= templates");
  if (processes < multi_stage) bad.push_back("processes must be >= multi_stage");
  if (events < multi_stage_events + (processes - std::min(processes, multi_stage))) {
    bad.push_back("events must cover multi_stage_events plus one per singleton process");
  }
  if (events != multi_stage_events + (processes - std::min(processes, multi_stage))) {
    bad.push_back("events must equal multi_stage_events plus one per singleton process");
  }
  if (raw_alerts < events) bad.push_back("raw_alerts must be >= events");
  if (processes * 2 > 3000) bad.push_back("processes must be <= 1500");
  if (bad.empty()) {
    const auto tpl = multi_stage_templates();
    std::size_t min_events = 0;
    for (std::size_t p = 0; p < multi_stage; ++p) min_events += tpl[p % templates].size();
    if (multi_stage_events < min_events) bad.push_back("multi_stage_events too small to cover every template phase");
  }
  if (!bad.empty()) throw ConfigError(bad);
}

std::vector<std::vector<PhaseTemplate>> multi_stage_templates() {
  using P = PhaseTemplate;
  const auto t = Protocol::kTcp;
  const auto u = Protocol::kUdp;
  const auto i = Protocol::kIcmp;
  // one d_port per template keeps the port term constant inside a process
  return {
      lldos_phases(),
      {P{"SCAN nmap TCP", 1, t, 21, 628, "Attempted Information Leak", 2, false},
       P{"FTP Bad login", 3, t, 21, 491, "Potentially Bad Traffic", 2, false},
       P{"EXPLOIT ftp wu-ftpd site exec", 4, t, 21, 361, "Attempted Administrator Privilege Gain", 1, false}},
      {P{"ICMP PING NMAP", 1, i, 0, 469, "Attempted Information Leak", 2, false},
       P{"TELNET Bad Login", 3, t, 23, 1251, "Potentially Bad Traffic", 2, false},
       P{"TELNET login incorrect", 6, t, 23, 718, "Potentially Bad Traffic", 2, false}},
      {P{"SNMP request udp", 1, u, 161, 1417, "Attempted Information Leak", 2, false},
       P{"SHELLCODE x86 NOOP", 3, u, 161, 648, "Executable Code was Detected", 1, false},
       P{"BACKDOOR DeepThroat access", 5, u, 161, 183, "Misc activity", 2, false}},
      {P{"RPC portmap sadmind request UDP", 1, u, 111, 1280, "Decode of an RPC Query", 2, false},
       P{"RPC sadmind query with root credentials attempt UDP", 3, u, 111, 1958, "Misc Attack", 2, false},
       P{"RPC sadmind UDP NETMGT_PROC_SERVICE CLIENT_DOMAIN overflow attempt", 4, u, 111, 1911,
         "Attempted Administrator Privilege Gain", 1, false},
       P{"RSERVICES rlogin root", 6, u, 111, 606, "Attempted Administrator Privilege Gain", 2, false}},
      {P{"SCAN Proxy Port 8080 attempt", 1, t, 8080, 620, "Attempted Information Leak", 2, false},
       P{"WEB-ATTACKS /etc/shadow access", 4, t, 8080, 1372, "Web Application Attack", 1, false},
       P{"BACKDOOR netbus active", 5, t, 8080, 109, "Misc activity", 2, false}},
      {P{"BAD-TRAFFIC tcp port 0 traffic", 1, t, 6000, 524, "Misc activity", 3, false},
       P{"EXPLOIT x11 outbound", 4, t, 6000, 1225, "Attempted Administrator Privilege Gain", 1, false},
       P{"DDOS Trin00 Daemon to Master", 7, t, 6000, 231, "Attempted Denial of Service", 2, false}},
      {P{"DNS named version attempt", 1, t, 53, 1616, "Attempted Information Leak", 2, false},
       P{"FTP Bad login", 3, t, 53, 491, "Potentially Bad Traffic", 2, false},
       P{"SHELLCODE Linux shellcode", 3, t, 53, 652, "Executable Code was Detected", 1, false},
       P{"RSERVICES rsh bin", 6, t, 53, 607, "Attempted User Privilege Gain", 2, false}},
      {P{"ICMP PING", 1, i, 0, 384, "Misc activity", 3, false},
       P{"SCAN FIN", 1, t, 443, 621, "Attempted Information Leak", 2, false},
       P{"EXPLOIT ssh CRC32 overflow", 4, t, 443, 1327, "Attempted Administrator Privilege Gain", 1, false}},
  };
}

namespace {

// Distinct /16 prefixes: bit-reversed 16-bit counter, skipping unusable first octets.
class PrefixSource {
 public:
  std::uint32_t next() {
    for (;;) {
      const auto v = static_cast<std::uint32_t>(reverse16(static_cast<std::uint16_t>(counter_++)));
      const auto first = v >> 8;
      if (first == 0 || first == 127 || first >= 224) continue;
      return v << 16;
    }
  }

 private:
  static std::uint16_t reverse16(std::uint16_t x) {
    std::uint16_t out = 0;
    for (int b = 0; b < 16; ++b) {
      if (x & (1u << b)) out |= static_cast<std::uint16_t>(1u << (15 - b));
    }
    return out;
  }
  std::uint32_t counter_ = 1;
};

Ipv4 host_in(std::uint32_t prefix, Rng& rng) {
  const auto c = static_cast<std::uint32_t>(rng() & 0xff);
  const auto d = static_cast<std::uint32_t>(1 + rng() % 250);
  return Ipv4(prefix | (c << 8) | d);
}

}  // namespace

PaperFixture generate_paper_fixture(const PaperFixtureSpec& spec) {
  spec.validate();
  Rng rng = make_stream(spec.seed, 1);
  const auto all_templates = multi_stage_templates();
  const std::vector<std::vector<PhaseTemplate>> tpl(all_templates.begin(),
                                                    all_templates.begin() + static_cast<std::ptrdiff_t>(spec.templates));

  // events per (process, phase) cell
  std::vector<std::vector<std::size_t>> cells(spec.multi_stage);
  std::vector<std::pair<std::size_t, std::size_t>> cell_index;
  std::size_t used = 0;
  for (std::size_t p = 0; p < spec.multi_stage; ++p) {
    cells[p].assign(tpl[p % spec.templates].size(), 1);
    used += cells[p].size();
    for (std::size_t k = 0; k < cells[p].size(); ++k) cell_index.emplace_back(p, k);
  }
  std::uniform_int_distribution<std::size_t> pick_cell(0, cell_index.size() - 1);
  for (; used < spec.multi_stage_events; ++used) {
    const auto [p, k] = cell_index[pick_cell(rng)];
    ++cells[p][k];
  }

  // singleton processes draw one phase from the whole catalogue
  std::vector<const PhaseTemplate*> catalogue;
  for (const auto& t : tpl) {
    for (const auto& ph : t) catalogue.push_back(&ph);
  }

  std::vector<std::size_t> order(spec.processes);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);

  PaperFixture fx;
  fx.template_of_process.assign(spec.processes, std::numeric_limits<std::size_t>::max());
  for (std::size_t p = 0; p < spec.multi_stage; ++p) fx.template_of_process[p] = p % spec.templates;

  std::vector<RawAlert> events;
  PrefixSource prefixes;
  std::int64_t now = kStartSeconds * 1'000'000;
  auto seconds = [](double s) { return static_cast<std::int64_t>(std::llround(s * 1e6)); };
  std::uniform_real_distribution<double> same_type_gap(65.0, 150.0);
  std::uniform_real_distribution<double> stage_gap(5.0, 15.0);
  std::uniform_real_distribution<double> process_gap(900.0, 1800.0);

  std::vector<std::size_t> process_of_event;
  for (const auto p : order) {
    now += seconds(process_gap(rng));
    const auto attacker_prefix = prefixes.next();
    const auto victim_prefix = prefixes.next();
    const Ipv4 attacker = host_in(attacker_prefix, rng);
    if (p < spec.multi_stage) {
      const auto& phases = tpl[p % spec.templates];
      bool first = true;
      for (std::size_t k = 0; k < phases.size(); ++k) {
        for (std::size_t n = 0; n < cells[p][k]; ++n) {
          if (!first) now += seconds(n == 0 ? stage_gap(rng) : same_type_gap(rng));
          first = false;
          events.push_back(make_alert(phases[k], Timestamp(now), attacker, host_in(victim_prefix, rng), rng));
          process_of_event.push_back(p);
        }
      }
    } else {
      const auto& ph = *catalogue[std::uniform_int_distribution<std::size_t>(0, catalogue.size() - 1)(rng)];
      events.push_back(make_alert(ph, Timestamp(now), attacker, host_in(victim_prefix, rng), rng));
      process_of_event.push_back(p);
    }
  }

  // duplicates: an even share per event, the remainder on randomly chosen events
  const std::size_t dups = spec.raw_alerts - events.size();
  const std::size_t base = dups / events.size();
  std::vector<std::size_t> extra(events.size());
  std::iota(extra.begin(), extra.end(), std::size_t{0});
  std::shuffle(extra.begin(), extra.end(), rng);
  std::vector<std::size_t> dup_count(events.size(), base);
  for (std::size_t i = 0; i < dups % events.size(); ++i) ++dup_count[extra[i]];

  std::vector<std::pair<RawAlert, std::size_t>> raw;
  raw.reserve(spec.raw_alerts);
  std::uniform_int_distribution<std::int64_t> offset(1, 50'000'000);
  for (std::size_t e = 0; e < events.size(); ++e) {
    raw.emplace_back(events[e], e);
    const bool has_ports = events[e].d_port.has_value();
    for (std::size_t k = 0; k < dup_count[e]; ++k) {
      RawAlert d = events[e];
      d.timestamp = Timestamp(events[e].timestamp.micros() + offset(rng));
      const int mode = static_cast<int>(rng() % (has_ports ? 3 : 2));
      if (mode == 1) {
        auto v = d.d_ip.value();
        const auto last = v & 0xff;
        v = (v & ~0xffu) | (1 + (last + static_cast<std::uint32_t>(rng() % 200)) % 250);
        d.d_ip = Ipv4(v);
      } else if (mode == 2) {
        d.d_port = static_cast<std::uint16_t>(*d.d_port == 65535 ? 1 : *d.d_port + 1 + rng() % 16);
      }
      raw.emplace_back(std::move(d), e);
    }
  }
  std::stable_sort(raw.begin(), raw.end(),
                   [](const auto& x, const auto& y) { return x.first.timestamp < y.first.timestamp; });
  fx.alerts.reserve(raw.size());
  fx.event_of.reserve(raw.size());
  for (auto& [a, e] : raw) {
    fx.alerts.push_back(std::move(a));
    fx.event_of.push_back(e);
  }
  fx.process_of_event = std::move(process_of_event);
  fx.text = to_text(fx.alerts);
  return fx;
}

// ---------------------------------------------------------------------------

void FlowScenarioSpec::validate() const {
  std::vector<std::string> bad;
  if (classes.empty()) bad.push_back("classes must not be empty");
  std::size_t normals = 0;
  std::size_t separable = 0;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    const auto& c = classes[i];
    if (c.name.empty()) bad.push_back("class names must not be empty");
    if (c.count == 0) bad.push_back("class '" + c.name + "' must have count >= 1");
    for (std::size_t j = 0; j < i; ++j) {
      if (classes[j].name == c.name) bad.push_back("class '" + c.name + "' listed twice");
    }
    if (c.geometry == FlowGeometry::kNormal) ++normals;
    if (c.geometry == FlowGeometry::kSeparable) ++separable;
  }
  if (normals > 1) bad.push_back("at most one class may have normal geometry");
  if (separable > 20) bad.push_back("at most 20 separable classes are supported");
  if (!(sigma > 0.0)) bad.push_back("sigma must be > 0");
  if (!(separation >= 0.0)) bad.push_back("separation must be >= 0");
  if (!(hard_offset >= 0.0)) bad.push_back("hard_offset must be >= 0");
  if (!bad.empty()) throw ConfigError(bad);
}

FlowScenarioSpec overlap_flow_spec(double scale) {
  if (!(scale > 0.0)) throw ArgumentError("scale must be > 0");
  auto n = [&](std::size_t c) { return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(c * scale))); };
  FlowScenarioSpec s;
  s.classes = {{"Normal", n(300), FlowGeometry::kNormal},
               {"Infiltration", n(60), FlowGeometry::kHard},
               {"DDoS", n(60), FlowGeometry::kSeparable},
               {"PortScan", n(60), FlowGeometry::kSeparable}};
  return s;
}

FlowScenarioSpec table4_flow_spec(double scale) {
  if (!(scale > 0.0)) throw ArgumentError("scale must be > 0");
  static const std::pair<const char*, std::size_t> counts[] = {
      {"Benign", 1886428},  {"DoSHulk", 184858},      {"PortScan", 127144},       {"DDoS", 33468},
      {"DoSGoldenEye", 8234}, {"FTP-Patator", 6350},  {"SSH-Patator", 4717},      {"DoSSlowLoris", 4636},
      {"DoSSlowHTTP Test", 4399}, {"Bot", 1572},      {"BruteForce", 1205},       {"XSS", 521},
      {"Infiltration", 28}, {"SQLInjection", 16},     {"Heartbleed", 8}};
  FlowScenarioSpec s;
  for (const auto& [name, count] : counts) {
    const auto n = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(count * scale)));
    s.classes.push_back({name, n, std::string_view(name) == "Benign" ? FlowGeometry::kNormal : FlowGeometry::kSeparable});
  }
  return s;
}

std::map<std::string, std::size_t> table4_targets(double scale) {
  if (!(scale > 0.0)) throw ArgumentError("scale must be > 0");
  static const std::pair<const char*, std::size_t> targets[] = {
      {"Benign", 17965},      {"DoSHulk", 12323},     {"PortScan", 8476},        {"DDoS", 6693},
      {"DoSGoldenEye", 8234}, {"FTP-Patator", 6350},  {"SSH-Patator", 4717},     {"DoSSlowLoris", 4636},
      {"DoSSlowHTTP Test", 4399}, {"Bot", 1572},      {"BruteForce", 1205},      {"XSS", 521},
      {"Infiltration", 280},  {"SQLInjection", 160},  {"Heartbleed", 80}};
  std::map<std::string, std::size_t> out;
  for (const auto& [name, n] : targets) {
    out[name] = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(n * scale)));
  }
  return out;
}

Eigen::VectorXd flow_class_mean(const FlowScenarioSpec& spec, std::size_t k) {
  if (k >= spec.classes.size()) throw ArgumentError("flow_class_mean: class index out of range");
  Eigen::VectorXd mean = Eigen::VectorXd::Constant(kFlowFeatureCount, spec.base_level);
  const auto& c = spec.classes[k];
  if (c.geometry == FlowGeometry::kHard) {
    mean[0] += spec.hard_offset * spec.sigma;
  } else if (c.geometry == FlowGeometry::kSeparable) {
    std::size_t j = 0;
    for (std::size_t i = 0; i < k; ++i) j += spec.classes[i].geometry == FlowGeometry::kSeparable;
    // ten disjoint 8-feature blocks, the second ten use the opposite direction
    const double sign = (j / 10) % 2 ? -1.0 : 1.0;
    const double shift = sign * spec.separation * spec.sigma / std::sqrt(8.0);
    mean.segment(static_cast<Eigen::Index>(8 * (j % 10)), 8).array() += shift;
  }
  return mean;
}

FlowDataset generate_flow_dataset(const FlowScenarioSpec& spec) {
  spec.validate();
  std::size_t total = 0;
  for (const auto& c : spec.classes) total += c.count;
  std::vector<FlowRecord> records;
  records.reserve(total);
  for (std::size_t k = 0; k < spec.classes.size(); ++k) {
    const auto& c = spec.classes[k];
    const Eigen::VectorXd mean = flow_class_mean(spec, k);
    Rng rng = make_stream(spec.seed, k);
    std::normal_distribution<double> noise(0.0, spec.sigma);
    for (std::size_t i = 0; i < c.count; ++i) {
      FlowRecord r;
      r.features = mean;
      for (Eigen::Index q = 0; q < r.features.size(); ++q) r.features[q] += noise(rng);
      r.label = c.name;
      r.source_id = "synth:" + c.name + ":" + std::to_string(i);
      records.push_back(std::move(r));
    }
  }
  return FlowDataset::make(std::move(records));
}

namespace {

std::string geometry_name(FlowGeometry g) {
  switch (g) {
    case FlowGeometry::kNormal: return "normal";
    case FlowGeometry::kHard: return "hard";
    case FlowGeometry::kSeparable: return "separable";
  }
  return "separable";
}

FlowGeometry geometry_from(const std::string& s) {
  if (s == "normal") return FlowGeometry::kNormal;
  if (s == "hard") return FlowGeometry::kHard;
  if (s == "separable") return FlowGeometry::kSeparable;
  throw ArgumentError("unknown flow geometry: " + s);
}

Protocol protocol_from(const std::string& s) {
  if (s == "TCP") return Protocol::kTcp;
  if (s == "UDP") return Protocol::kUdp;
  if (s == "ICMP") return Protocol::kIcmp;
  return Protocol::kOther;
}

}  // namespace

nlohmann::json to_json(const FlowScenarioSpec& s) {
  auto classes = nlohmann::json::array();
  for (const auto& c : s.classes) {
    classes.push_back({{"name", c.name}, {"count", c.count}, {"geometry", geometry_name(c.geometry)}});
  }
  return {{"classes", classes},         {"sigma", s.sigma}, {"separation", s.separation},
          {"hard_offset", s.hard_offset}, {"base_level", s.base_level}, {"seed", s.seed}};
}

FlowScenarioSpec flow_spec_from_json(const nlohmann::json& j) {
  FlowScenarioSpec s;
  if (j.contains("classes")) {
    for (const auto& c : j.at("classes")) {
      s.classes.push_back({c.at("name").get<std::string>(), c.at("count").get<std::size_t>(),
                           geometry_from(c.value("geometry", std::string("separable")))});
    }
  }
  s.sigma = j.value("sigma", s.sigma);
  s.separation = j.value("separation", s.separation);
  s.hard_offset = j.value("hard_offset", s.hard_offset);
  s.base_level = j.value("base_level", s.base_level);
  s.seed = j.value("seed", s.seed);
  return s;
}

nlohmann::json to_json(const ScenarioSpec& s) {
  auto phases = nlohmann::json::array();
  for (const auto& p : s.phases) {
    phases.push_back({{"attack_type", p.attack_type},
                      {"stage", p.stage},
                      {"protocol", std::string(to_string(p.protocol))},
                      {"d_port", p.d_port},
                      {"sid", p.sid},
                      {"classification", p.classification},
                      {"priority", p.priority},
                      {"from_inside", p.from_inside}});
  }
  return {{"phases", phases},           {"events_per_phase", s.events_per_phase},
          {"processes", s.processes},   {"noise_rate", s.noise_rate},
          {"slot_seconds", s.slot_seconds}, {"max_noise", s.max_noise},
          {"seed", s.seed}};
}

ScenarioSpec scenario_spec_from_json(const nlohmann::json& j) {
  ScenarioSpec s;
  if (j.contains("phases")) {
    s.phases.clear();
    for (const auto& p : j.at("phases")) {
      PhaseTemplate t;
      t.attack_type = p.at("attack_type").get<std::string>();
      t.stage = p.at("stage").get<int>();
      t.protocol = protocol_from(p.value("protocol", std::string("TCP")));
      t.d_port = p.value("d_port", std::uint16_t{0});
      t.sid = p.value("sid", std::uint32_t{0});
      t.classification = p.value("classification", std::string("Misc activity"));
      t.priority = p.value("priority", 2);
      t.from_inside = p.value("from_inside", false);
      s.phases.push_back(std::move(t));
    }
    s.events_per_phase.assign(s.phases.size(), 1);
  }
  if (j.contains("events_per_phase")) s.events_per_phase = j.at("events_per_phase").get<std::vector<std::size_t>>();
  s.processes = j.value("processes", s.processes);
  s.noise_rate = j.value("noise_rate", s.noise_rate);
  s.slot_seconds = j.value("slot_seconds", s.slot_seconds);
  s.max_noise = j.value("max_noise", s.max_noise);
  s.seed = j.value("seed", s.seed);
  return s;
}

}  // namespace feint
