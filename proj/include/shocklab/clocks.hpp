#pragma once

// Poisson arrow field of the graphical construction. Each site carries an
// independent rate-1 stream of jump attempts; an attempt points Right with
// probability p and Left with probability q = 1 - p. All coupled
// configurations consume the same field.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "errors.hpp"
#include "rng.hpp"

namespace shocklab {

enum class Direction : std::uint8_t { Left = 0, Right = 1 };

struct ClockEvent {
  double time;
  int site;
  Direction dir;
};

// Strict event order: time, ties by site then direction.
inline bool event_before(const ClockEvent& a, const ClockEvent& b) noexcept {
  if (a.time != b.time) return a.time < b.time;
  if (a.site != b.site) return a.site < b.site;
  return a.dir < b.dir;
}

inline void check_rate(double p) {
  if (!(p > 0.5) || !(p <= 1.0)) throw UsageError("clock stream: p must lie in (1/2, 1]");
}

// Event stream of a single site. The emitted sequence is a pure function of
// (seed, site); the counter indexes draws within it.
class SiteStream {
 public:
  SiteStream(std::uint64_t seed, int site, double p)
      : key_(site_key(seed, site)), site_(site), p_(p) {
    check_rate(p);
  }

  ClockEvent next() {
    const double dt = -std::log(to_unit(stream_draw(key_, 2 * counter_)));
    const Direction dir =
        to_unit(stream_draw(key_, 2 * counter_ + 1)) < p_ ? Direction::Right : Direction::Left;
    ++counter_;
    time_ += dt;
    return {time_, site_, dir};
  }

  int site() const noexcept { return site_; }
  std::uint64_t counter() const noexcept { return counter_; }
  double time() const noexcept { return time_; }

 private:
  std::uint64_t key_;
  int site_;
  double p_;
  std::uint64_t counter_ = 0;
  double time_ = 0.0;
};

// Time-ordered union of the site streams over a window [lo, hi]. The window
// may only grow; a site added at stream time T contributes exactly its events
// with time > T, and sites already present are not perturbed.
//
// Emission works in time slabs: each site keeps one pre-generated pending
// event; filling a slab sweeps the window, collects every pending event that
// falls inside it (regenerating per site as needed), and sorts the batch once
// by (time, site, direction). Amortized cost per event is far below a
// priority queue's, and the emitted order is exactly the lexicographic one.
class MergedStream {
 public:
  MergedStream(std::uint64_t seed, double p, int lo, int hi) : seed_(seed), p_(p) {
    check_rate(p);
    if (lo > hi) throw UsageError("MergedStream: empty site window");
    lo_ = lo;
    hi_ = hi;
    const int n = hi - lo + 1;
    key_.resize(n);
    ctr_.resize(n);
    pend_time_.resize(n);
    pend_dir_.resize(n);
    for (int s = lo; s <= hi; ++s) init_site(s - lo, s);
  }

  int lo() const noexcept { return lo_; }
  int hi() const noexcept { return hi_; }
  double current_time() const noexcept { return current_; }

  // Next event without consuming it.
  const ClockEvent& peek() {
    if (pos_ == batch_.size()) refill();
    const Entry& e = batch_[pos_];
    peek_ = {e.time, e.key >> 1, static_cast<Direction>(e.key & 1)};
    return peek_;
  }

  // Consume the event last returned by peek().
  void consume() noexcept {
    current_ = peek_.time;
    ++pos_;
  }

  ClockEvent next() {
    const ClockEvent ev = peek();
    consume();
    return ev;
  }

  // Feed every event with time <= until to f(ClockEvent). f may trigger
  // extend(); events merged in behind the cursor are picked up in order.
  template <class F>
  void drain(double until, F&& f) {
    for (;;) {
      if (pos_ == batch_.size()) refill();
      const Entry e = batch_[pos_];
      if (e.time > until) break;
      ++pos_;
      current_ = e.time;
      f(ClockEvent{e.time, e.key >> 1, static_cast<Direction>(e.key & 1)});
    }
  }

  void extend(int new_lo, int new_hi) {
    if (new_lo > lo_ || new_hi < hi_) throw UsageError("MergedStream: window may only grow");
    const std::size_t merge_from = batch_.size();
    if (new_lo < lo_) {
      const int g = lo_ - new_lo;
      key_.insert(key_.begin(), g, 0);
      ctr_.insert(ctr_.begin(), g, 0);
      pend_time_.insert(pend_time_.begin(), g, 0.0);
      pend_dir_.insert(pend_dir_.begin(), g, 0);
      const int old_lo = lo_;
      lo_ = new_lo;
      for (int s = new_lo; s < old_lo; ++s) attach(s);
    }
    if (new_hi > hi_) {
      const int g = new_hi - hi_;
      key_.insert(key_.end(), g, 0);
      ctr_.insert(ctr_.end(), g, 0);
      pend_time_.insert(pend_time_.end(), g, 0.0);
      pend_dir_.insert(pend_dir_.end(), g, 0);
      const int old_hi = hi_;
      hi_ = new_hi;
      for (int s = old_hi + 1; s <= new_hi; ++s) attach(s);
    }
    if (batch_.size() > merge_from) {
      std::sort(batch_.begin() + merge_from, batch_.end(), entry_before);
      std::inplace_merge(batch_.begin() + pos_, batch_.begin() + merge_from, batch_.end(),
                         entry_before);
    }
  }

  // Mark simulation time as advanced (affects the cutoff of later extends).
  void advance_time(double t) noexcept {
    if (t > current_) current_ = t;
  }

 private:
  struct Entry {
    double time;
    std::int32_t key;  // (site << 1) | dir; integer order == (site, dir) order
  };
  static bool entry_before(const Entry& a, const Entry& b) noexcept {
    if (a.time != b.time) return a.time < b.time;
    return a.key < b.key;
  }

  // Advance the pending event of site index i by one draw.
  void advance(int i) {
    const std::uint64_t n = ctr_[i]++;
    pend_time_[i] += -std::log(to_unit(stream_draw(key_[i], 2 * n)));
    pend_dir_[i] = to_unit(stream_draw(key_[i], 2 * n + 1)) < p_ ? 1 : 0;
  }

  void init_site(int i, int site) {
    key_[i] = site_key(seed_, site);
    ctr_[i] = 0;
    pend_time_[i] = 0.0;
    advance(i);
  }

  // Attach a site mid-run: drop its events with time <= current_, feed the
  // ones inside the open slab into the batch, keep the first later one
  // pending.
  void attach(int site) {
    const int i = site - lo_;
    init_site(i, site);
    while (pend_time_[i] <= current_) advance(i);
    const std::int32_t base = static_cast<std::int32_t>(site << 1);
    while (pend_time_[i] < slab_end_) {
      batch_.push_back({pend_time_[i], base | pend_dir_[i]});
      advance(i);
    }
  }

  void refill() {
    const int w = hi_ - lo_ + 1;
    batch_.clear();
    pos_ = 0;
    double t0 = slab_end_;
    while (batch_.empty()) {
      const double width = std::max(kBatchTarget / static_cast<double>(w), 1e-9);
      const double t1 = slab_end_ + width;
      t0 = slab_end_;
      for (int i = 0; i < w; ++i) {
        double t = pend_time_[i];
        if (t >= t1) continue;
        const std::int32_t base = static_cast<std::int32_t>((lo_ + i) << 1);
        do {
          batch_.push_back({t, base | pend_dir_[i]});
          advance(i);
          t = pend_time_[i];
        } while (t < t1);
      }
      slab_end_ = t1;
    }
    radix_sort(t0, slab_end_ - t0);
  }

  // Sort the batch by (time, site, dir): radix passes on a 32-bit quantized
  // time rank, then an exact pass over rank-tied runs.
  void radix_sort(double base, double width) {
    const std::size_t n = batch_.size();
    if (n < 2) return;
    if (n < 48) {
      std::sort(batch_.begin(), batch_.end(), entry_before);
      return;
    }
    const double scale = 4294967296.0 / width;
    rank_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double r = (batch_[i].time - base) * scale;
      rank_[i] = r >= 4294967295.0 ? 4294967295u : static_cast<std::uint32_t>(r);
    }
    scratch_.resize(n);
    rank2_.resize(n);
    std::uint32_t counts[256];
    for (int pass = 0; pass < 4; ++pass) {
      const int shift = 8 * pass;
      std::fill(std::begin(counts), std::end(counts), 0);
      for (std::size_t i = 0; i < n; ++i) ++counts[(rank_[i] >> shift) & 255];
      std::uint32_t sum = 0;
      for (int b = 0; b < 256; ++b) {
        const std::uint32_t c = counts[b];
        counts[b] = sum;
        sum += c;
      }
      for (std::size_t i = 0; i < n; ++i) {
        const std::uint32_t dst = counts[(rank_[i] >> shift) & 255]++;
        scratch_[dst] = batch_[i];
        rank2_[dst] = rank_[i];
      }
      batch_.swap(scratch_);
      rank_.swap(rank2_);
    }
    // runs with equal rank (sub-quantum spacing) get the exact comparison
    std::size_t i = 0;
    while (i + 1 < n) {
      if (rank_[i + 1] != rank_[i]) {
        ++i;
        continue;
      }
      std::size_t j = i + 1;
      while (j + 1 < n && rank_[j + 1] == rank_[i]) ++j;
      std::sort(batch_.begin() + i, batch_.begin() + j + 1, entry_before);
      i = j + 1;
    }
  }

  static constexpr double kBatchTarget = 2048.0;

  std::uint64_t seed_;
  double p_;
  int lo_ = 0, hi_ = -1;
  double current_ = 0.0;
  double slab_end_ = 0.0;
  ClockEvent peek_{};
  std::vector<std::uint64_t> key_;
  std::vector<std::uint64_t> ctr_;
  std::vector<double> pend_time_;
  std::vector<std::uint8_t> pend_dir_;
  std::vector<Entry> batch_;
  std::vector<Entry> scratch_;
  std::vector<std::uint32_t> rank_, rank2_;
  std::size_t pos_ = 0;
};

}  // namespace shocklab
