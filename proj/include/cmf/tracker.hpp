#pragma once

#include <memory>
#include <span>
#include <vector>

#include "cmf/complex_tracker.hpp"
#include "cmf/dtft_anf.hpp"
#include "cmf/hilbert.hpp"
#include "cmf/tracker_types.hpp"

namespace cmf {

inline std::unique_ptr<Tracker> make_tracker(const TrackerConfig& cfg) {
  switch (cfg.method) {
    case Method::cbf:
    case Method::cnf:
    case Method::cbf_cnf:
      return std::make_unique<ComplexTracker>(cfg);
    case Method::hilbert:
      return std::make_unique<HilbertTracker>(cfg);
    case Method::anf_dtft:
      return std::make_unique<DtftAnfTracker>(cfg);
  }
  throw Error(Errc::invalid_argument, "unknown method");
}

inline std::vector<TrackerEstimate> run_tracker(Tracker& tracker, std::span<const double> x1,
                                                std::span<const double> x2) {
  if (x1.size() != x2.size()) throw Error(Errc::invalid_argument, "sensor streams differ in length");
  std::vector<TrackerEstimate> out;
  out.reserve(x1.size());
  for (std::size_t i = 0; i < x1.size(); ++i) out.push_back(tracker.step(x1[i], x2[i]));
  return out;
}

inline std::vector<TrackerEstimate> run_tracker(const TrackerConfig& cfg, std::span<const double> x1,
                                                std::span<const double> x2) {
  auto tracker = make_tracker(cfg);
  return run_tracker(*tracker, x1, x2);
}

}  // namespace cmf
