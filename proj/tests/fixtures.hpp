#pragma once

#include <string>
#include <utility>
#include <vector>

#include "nesy/eventlog.hpp"

namespace nesy::testing {

// Trace builder: activities with timestamps given in hours after an
// arbitrary fixed origin.
inline Trace make_trace(const std::string& case_id,
                        const std::vector<std::pair<std::string, double>>& acts_at_hours,
                        Label label = Label::negative, AttrMap case_attrs = {}) {
  constexpr std::int64_t origin_ms = 1672531200000LL;  // 2023-01-01T00:00Z
  Trace t;
  t.case_id = case_id;
  t.label = label;
  t.case_attributes = std::move(case_attrs);
  for (const auto& [act, hours] : acts_at_hours) {
    Event e;
    e.case_id = case_id;
    e.activity = act;
    e.timestamp_ms = origin_ms + static_cast<std::int64_t>(hours * 3600000.0);
    t.events.push_back(std::move(e));
  }
  return t;
}

inline Prefix whole(const Trace& t) { return Prefix{&t, t.events.size()}; }

}  // namespace nesy::testing
