#pragma once

// Several configurations evolving on one shared arrow field (basic coupling).
// The stream window is grown on demand so that it always covers every
// member's matter range plus a safety pad; events outside that range are
// no-ops for the member, so the windowing is exact.

#include <climits>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <vector>

#include "asep.hpp"
#include "clocks.hpp"
#include "errors.hpp"

namespace shocklab {

class CoupledEnsemble {
 public:
  CoupledEnsemble(std::uint64_t seed, double p, int safety_pad = 2)
      : seed_(seed), p_(p), pad_(std::max(1, safety_pad)) {
    check_rate(p);
  }

  std::size_t add_member(const InitialKind& kind) {
    return add_member(kind, std::nullopt);
  }

  std::size_t add_member(const InitialKind& kind, std::optional<SuppressionRegion> region) {
    if (stream_) throw UsageError("add_member: ensemble already evolving");
    if (kind.p != p_) throw UsageError("add_member: member p differs from ensemble p");
    members_.emplace_back(kind);
    regions_.push_back(region);
    return members_.size() - 1;
  }

  std::size_t size() const noexcept { return members_.size(); }
  double time() const noexcept { return time_; }
  int safety_pad() const noexcept { return pad_; }

  LabeledConfiguration& member(std::size_t i) { return members_.at(i); }
  const LabeledConfiguration& member(std::size_t i) const { return members_.at(i); }

  void evolve(double until) {
    evolve(until, [](const ClockEvent&) {});
  }

  // after_event runs after each clock event has been offered to all members.
  template <class F>
  void evolve(double until, F&& after_event) {
    if (members_.empty()) throw UsageError("evolve: ensemble has no members");
    if (until < time_) throw UsageError("evolve: horizon precedes current time");
    if (!stream_) init_stream();
    const std::size_t n = members_.size();
    stream_->drain(until, [&](const ClockEvent& ev) {
      bool moved = false;
      for (std::size_t i = 0; i < n; ++i) {
        if (regions_[i] && regions_[i]->contains(ev.site, ev.time)) continue;
        const std::int32_t lab = members_[i].apply_event(ev);
        if (lab != LabeledConfiguration::kEmptyCell) {
          moved = true;
          if (trace_ && i == trace_member_)
            trace_(ev.time, lab, members_[i].particle_position(lab));
        }
      }
      if (moved) ensure_window();
      after_event(ev);
    });
    time_ = until;
    stream_->advance_time(until);
  }

  // Path dump hook: called as (time, label, new position) for each effective
  // move of the chosen member.
  void set_trace(std::function<void(double, int, int)> cb, std::size_t member_idx = 0) {
    trace_ = std::move(cb);
    trace_member_ = member_idx;
  }

  // Debug path dump: stream one CSV row per move of the chosen member.
  void dump_paths_csv(std::shared_ptr<std::ostream> os, std::size_t member_idx = 0) {
    *os << "time,label,position\n";
    set_trace(
        [os](double t, int label, int pos) {
          char buf[96];
          std::snprintf(buf, sizeof buf, "%.9f,%d,%d\n", t, label, pos);
          *os << buf;
        },
        member_idx);
  }

 private:
  void init_stream() {
    int lo = INT_MAX, hi = INT_MIN;
    for (const auto& m : members_) {
      lo = std::min(lo, m.matter_lo());
      hi = std::max(hi, m.matter_hi());
    }
    stream_.emplace(seed_, p_, lo - pad_ - kChunk, hi + pad_ + kChunk);
  }

  void ensure_window() {
    int lo = INT_MAX, hi = INT_MIN;
    for (const auto& m : members_) {
      lo = std::min(lo, m.matter_lo());
      hi = std::max(hi, m.matter_hi());
    }
    if (lo - pad_ < stream_->lo() || hi + pad_ > stream_->hi())
      stream_->extend(std::min(stream_->lo(), lo - pad_ - kChunk),
                      std::max(stream_->hi(), hi + pad_ + kChunk));
  }

  static constexpr int kChunk = 32;

  std::uint64_t seed_;
  double p_;
  int pad_;
  double time_ = 0.0;
  std::optional<MergedStream> stream_;
  std::vector<LabeledConfiguration> members_;
  std::vector<std::optional<SuppressionRegion>> regions_;
  std::function<void(double, int, int)> trace_;
  std::size_t trace_member_ = 0;
};

// One configuration evolved with a suppression region, sharing the arrow
// field keyed by (seed, p) with any other ensemble built on the same pair.
inline LabeledConfiguration evolve_suppressed(std::uint64_t seed, const InitialKind& kind,
                                              const SuppressionRegion& region, double until,
                                              int safety_pad = 2) {
  CoupledEnsemble e(seed, kind.p, safety_pad);
  e.add_member(kind, region);
  e.evolve(until);
  return e.member(0);
}

}  // namespace shocklab
