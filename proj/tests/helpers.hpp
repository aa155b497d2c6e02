#pragma once

#include <string>
#include <vector>

#include "feint/alert.hpp"
#include "feint/flow.hpp"

namespace feint::test {

inline RawAlert alert(double t, const char* type, const char* s_ip, const char* d_ip,
                      std::optional<std::uint16_t> s_port = 1024, std::optional<std::uint16_t> d_port = 80,
                      Protocol proto = Protocol::kTcp) {
  RawAlert a;
  a.timestamp = Timestamp::from_seconds(t);
  a.attack_type = type;
  a.s_ip = Ipv4::parse(s_ip);
  a.d_ip = Ipv4::parse(d_ip);
  a.protocol = proto;
  if (proto == Protocol::kIcmp) {
    a.s_port.reset();
    a.d_port.reset();
  } else {
    a.s_port = s_port;
    a.d_port = d_port;
  }
  a.classification = "Misc activity";
  a.priority = 2;
  return a;
}

// Flow record whose first features are given and the rest zero.
inline FlowRecord flow(std::vector<double> head, std::string label, std::string id) {
  FlowRecord r;
  r.features = Eigen::VectorXd::Zero(kFlowFeatureCount);
  for (std::size_t i = 0; i < head.size(); ++i) r.features[static_cast<Eigen::Index>(i)] = head[i];
  r.label = std::move(label);
  r.source_id = std::move(id);
  return r;
}

}  // namespace feint::test
