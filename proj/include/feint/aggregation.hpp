#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "feint/alert.hpp"

namespace feint {

// Five-tuple relation between two alerts, most specific first:
//   A  same (type, s_ip, d_ip, s_port, d_port)   repeated alert of one event
//   B  same (type, s_ip, d_ip, s_port)           port scan of one host
//   C  same (type, s_ip), d_ip in one segment    sweep of a network segment
//   D  different type, same s_ip and d_ip        springboard; linked, never merged
enum class AggregationMode { kA, kB, kC, kD, kNone };

std::string_view to_string(AggregationMode m);

struct AggregationOptions {
  double window_seconds = 60.0;
  int segment_prefix_bits = 24;
};

// Mode of b relative to a. Returns kNone when the alerts are further apart than the window.
AggregationMode match_mode(const RawAlert& a, const RawAlert& b, const AggregationOptions& opts = {});

struct AggregatedAlert {
  RawAlert representative;  // earliest merged alert
  std::size_t count = 1;
  Timestamp first_seen;
  Timestamp last_seen;
  AggregationMode mode = AggregationMode::kNone;  // least specific mode merged in; kNone iff count == 1
  std::optional<std::size_t> springboard_of;      // index of the aggregate this one is D-linked to
};

struct AggregationReport {
  std::size_t raw_count = 0;
  std::size_t output_count = 0;
  double rate = 0.0;
};

struct AggregationResult {
  std::vector<AggregatedAlert> alerts;  // ordered by first_seen
  AggregationReport report;
};

// (raw - output) / raw, and 0 for an empty stream. Throws ArgumentError if output > raw.
double aggregation_rate(std::size_t raw_count, std::size_t output_count);

// Single pass over the time-sorted stream. An aggregate stays open for window_seconds
// after its first alert; each alert joins the most recent open aggregate it matches
// under A, B or C, otherwise opens a new one.
AggregationResult aggregate(std::span<const RawAlert> alerts, const AggregationOptions& opts = {});

// One JSON object per line: representative fields, count, first/last seen, mode.
void write_aggregates_jsonl(std::ostream& out, const std::vector<AggregatedAlert>& alerts);
std::vector<AggregatedAlert> read_aggregates_jsonl(std::istream& in);

}  // namespace feint
