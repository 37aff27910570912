#pragma once

// Exclusion configurations on Z with integer particle labels. A configuration
// is stored as a finite materialized window plus two tail descriptors; sites
// outside the window follow the tail pattern exactly (they have never been
// touched by an effective event), so the truncation is exact, not
// approximate. Larger label = further left; labels are conserved.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "clocks.hpp"
#include "errors.hpp"

namespace shocklab {

enum class TailKind : std::uint8_t { Packed, Empty };

enum class InitialKindTag : std::uint8_t { Step, ReversedStep, ShockIC, BlockA, BlockB };

// Initial data families. ShockIC/BlockA/BlockB carry the construction time
// parameter through the shock offset K = floor((p-q) t).
struct InitialKind {
  InitialKindTag tag = InitialKindTag::Step;
  double p = 1.0;
  double t_param = 0.0;

  static InitialKind step(double p) { return validated({InitialKindTag::Step, p, 0.0}); }
  static InitialKind reversed_step(double p) {
    return validated({InitialKindTag::ReversedStep, p, 0.0});
  }
  static InitialKind shock_ic(double p, double t) {
    return validated({InitialKindTag::ShockIC, p, t});
  }
  static InitialKind block_a(double p, double t) {
    return validated({InitialKindTag::BlockA, p, t});
  }
  static InitialKind block_b(double p, double t) {
    return validated({InitialKindTag::BlockB, p, t});
  }

  int shock_offset() const {
    return static_cast<int>(std::floor((2.0 * p - 1.0) * t_param));
  }

 private:
  static InitialKind validated(InitialKind k) {
    if (!(k.p > 0.5) || !(k.p <= 1.0)) throw UsageError("InitialKind: p must lie in (1/2, 1]");
    if (k.t_param < 0.0) throw UsageError("InitialKind: t parameter must be >= 0");
    return k;
  }
};

// Space-time half-plane in which jump attempts are ignored for one
// configuration: sites on one side of a threshold, times in [0, t_end].
class SuppressionRegion {
 public:
  static SuppressionRegion sites_geq(double threshold, double t_end) {
    return SuppressionRegion(static_cast<int>(std::ceil(threshold)), true, t_end);
  }
  static SuppressionRegion sites_leq(double threshold, double t_end) {
    return SuppressionRegion(static_cast<int>(std::floor(threshold)), false, t_end);
  }
  static SuppressionRegion all_sites(double t_end) {
    return SuppressionRegion(std::numeric_limits<int>::min(), true, t_end);
  }

  bool contains(int site, double time) const noexcept {
    if (time > t_end_) return false;
    return upper_side_ ? site >= bound_ : site <= bound_;
  }

 private:
  SuppressionRegion(int bound, bool upper, double t_end)
      : bound_(bound), upper_side_(upper), t_end_(t_end) {
    if (!(t_end >= 0)) throw UsageError("SuppressionRegion: t_end must be >= 0");
  }
  int bound_;
  bool upper_side_;
  double t_end_;
};

class LabeledConfiguration {
 public:
  static constexpr std::int32_t kEmptyCell = INT32_MIN;

  explicit LabeledConfiguration(const InitialKind& kind) : kind_(kind) {
    const int K = kind.shock_offset();
    switch (kind.tag) {
      case InitialKindTag::Step:
        init_tails(TailKind::Packed, TailKind::Empty, 0);
        build(-kMargin, kMargin, [](int s) { return s <= -1; });
        lo_edge_ = 0;   // leftmost hole
        hi_edge_ = -1;  // rightmost particle
        break;
      case InitialKindTag::ReversedStep:
        init_tails(TailKind::Empty, TailKind::Packed, 0);
        build(-kMargin, kMargin, [](int s) { return s >= 0; });
        lo_edge_ = 0;   // leftmost particle
        hi_edge_ = -1;  // rightmost hole
        break;
      case InitialKindTag::ShockIC:
        init_tails(TailKind::Packed, TailKind::Empty, K);
        build(-K - kMargin, K + kMargin, [K](int s) { return s <= -K - 1 || (s >= 0 && s <= K); });
        lo_edge_ = K >= 1 ? -K : K + 1;
        hi_edge_ = K;
        break;
      case InitialKindTag::BlockA:
        init_tails(TailKind::Packed, TailKind::Empty, K);
        build(-K - kMargin, -K + kMargin, [K](int s) { return s <= -K - 1; });
        lo_edge_ = -K;
        hi_edge_ = -K - 1;
        break;
      case InitialKindTag::BlockB:
        init_tails(TailKind::Packed, TailKind::Empty, 0);
        build(-kMargin, K + kMargin, [K](int s) { return s <= K; });
        lo_edge_ = K + 1;
        hi_edge_ = K;
        break;
    }
    refresh_matter_range();
  }

  const InitialKind& kind() const noexcept { return kind_; }
  TailKind left_tail() const noexcept { return left_; }
  TailKind right_tail() const noexcept { return right_; }

  // Leftmost site at which an event can have an effect, and rightmost one.
  int matter_lo() const noexcept { return mat_lo_; }
  int matter_hi() const noexcept { return mat_hi_; }

  int leftmost_hole() const {
    if (left_ != TailKind::Packed) throw UsageError("leftmost_hole: left tail is not packed");
    return lo_edge_;
  }
  int rightmost_particle() const {
    if (right_ != TailKind::Empty) throw UsageError("rightmost_particle: right tail is not empty");
    return hi_edge_;
  }

  // Applies one jump attempt; returns the moved label, or kEmptyCell if the
  // attempt was a no-op.
  std::int32_t apply_event(const ClockEvent& ev) {
    const int s = ev.site;
    if (s < mat_lo_ || s > mat_hi_) return kEmptyCell;
    const int d = ev.dir == Direction::Right ? s + 1 : s - 1;
    std::int32_t* base = cells_.data() - cell_lo_;
    const std::int32_t lab = base[s];
    if (lab == kEmptyCell || base[d] != kEmptyCell) return kEmptyCell;
    base[d] = lab;
    base[s] = kEmptyCell;
    pos_[lab - lab_lo_] = d;
    if (d < min_[lab - lab_lo_]) min_[lab - lab_lo_] = d;
    if (left_ == TailKind::Packed) {
      if (d == lo_edge_) lo_edge_ = s;  // particle entered the leftmost hole
    } else {
      if (s == lo_edge_) lo_edge_ = d;  // leftmost particle moved
    }
    if (right_ == TailKind::Empty) {
      if (s == hi_edge_) hi_edge_ = d;  // rightmost particle moved
    } else {
      if (d == hi_edge_) hi_edge_ = s;  // particle entered the rightmost hole
    }
    refresh_matter_range();
    if (mat_lo_ - cell_lo_ < 2) grow_left();
    if (cell_hi() - mat_hi_ < 2) grow_right();
    return lab;
  }

  int particle_position(int label) const {
    if (label >= lab_lo_ && label < lab_lo_ + static_cast<int>(pos_.size()))
      return pos_[label - lab_lo_];
    if (left_ == TailKind::Packed && label >= lab_lo_ + static_cast<int>(pos_.size()))
      return -label - left_off_;
    if (right_ == TailKind::Packed && label < lab_lo_) return -label;
    throw UsageError("particle_position: label " + std::to_string(label) +
                     " is not a particle of this configuration");
  }

  // Minimum position over [0, now]; tracked online from time 0.
  int running_min(int label) const {
    if (label >= lab_lo_ && label < lab_lo_ + static_cast<int>(pos_.size()))
      return min_[label - lab_lo_];
    return particle_position(label);  // tail particle: it has never moved
  }

  // Positions of the m leftmost holes, in increasing order.
  std::vector<int> holes(int m) const {
    if (m <= 0) throw UsageError("holes: m must be positive");
    if (left_ != TailKind::Packed)
      throw UsageError("holes: undefined without a packed left tail");
    std::vector<int> out;
    out.reserve(m);
    for (int s = lo_edge_; static_cast<int>(out.size()) < m; ++s) {
      if (s > cell_hi() || cells_[s - cell_lo_] == kEmptyCell) out.push_back(s);
    }
    return out;
  }

  // Indicators of {H_{M-R} < -R} and {x_M >= -R}. The two are equal on every
  // path of a block-type configuration; tests enforce the contract.
  std::pair<bool, bool> duality_indicators(int M, int R) const {
    if (R >= M) throw UsageError("duality_indicators: requires R < M");
    const int h = holes(M - R).back();
    const int x = particle_position(M);
    return {h < -R, x >= -R};
  }

  // Number of particles strictly to the right of a real threshold.
  long long count_right_of(double threshold) const {
    if (right_ == TailKind::Packed)
      throw UsageError("count_right_of: infinitely many particles to the right");
    const int first = static_cast<int>(std::floor(threshold)) + 1;
    long long cnt = 0;
    for (int s = std::max(first, cell_lo_); s <= cell_hi(); ++s)
      cnt += cells_[s - cell_lo_] != kEmptyCell;
    if (first < cell_lo_ && left_ == TailKind::Packed) cnt += cell_lo_ - first;
    return cnt;
  }

  // Occupancy fraction per bin over the transition region, bin centers
  // rescaled by the given time.
  std::vector<std::pair<double, double>> density_histogram(int bin_width,
                                                           double rescale_time) const {
    if (bin_width < 1) throw UsageError("density_histogram: bin width must be >= 1 site");
    if (!(rescale_time > 0)) throw UsageError("density_histogram: rescale time must be positive");
    std::vector<std::pair<double, double>> out;
    for (int b = mat_lo_; b <= mat_hi_; b += bin_width) {
      const int e = std::min(b + bin_width - 1, mat_hi_);
      int occ = 0;
      for (int s = b; s <= e; ++s) occ += occupied(s);
      out.emplace_back(0.5 * (b + e) / rescale_time, static_cast<double>(occ) / (e - b + 1));
    }
    return out;
  }

  bool occupied(int site) const {
    if (site < cell_lo_) return left_ == TailKind::Packed;
    if (site > cell_hi()) return right_ == TailKind::Packed;
    return cells_[site - cell_lo_] != kEmptyCell;
  }

  // Occupied-site count in [a, b] (used by density aggregation and tests).
  long long occupied_in(int a, int b) const {
    long long cnt = 0;
    for (int s = a; s <= b; ++s) cnt += occupied(s);
    return cnt;
  }

  int materialized_lo() const noexcept { return cell_lo_; }
  int materialized_hi() const noexcept { return cell_hi(); }
  int label_lo() const noexcept { return lab_lo_; }
  int label_hi() const noexcept { return lab_lo_ + static_cast<int>(pos_.size()) - 1; }

  // Structural self-check for tests and debug builds.
  void check_invariants() const {
    for (int s = cell_lo_; s <= cell_hi(); ++s) {
      const std::int32_t lab = cells_[s - cell_lo_];
      if (lab == kEmptyCell) continue;
      if (lab < lab_lo_ || lab > label_hi()) throw std::logic_error("cell label out of range");
      if (pos_[lab - lab_lo_] != s) throw std::logic_error("cell/position mismatch");
    }
    for (int n = lab_lo_; n < label_hi(); ++n) {
      if (particle_position(n + 1) >= particle_position(n))
        throw std::logic_error("label order violated");
      if (running_min(n) > particle_position(n)) throw std::logic_error("running min above position");
    }
    if (left_ == TailKind::Packed) {
      for (int s = cell_lo_; s < lo_edge_; ++s)
        if (!occupied(s)) throw std::logic_error("hole left of the leftmost hole");
      if (lo_edge_ <= cell_hi() && occupied(lo_edge_))
        throw std::logic_error("leftmost hole cache is occupied");
    }
    if (right_ == TailKind::Empty) {
      for (int s = hi_edge_ + 1; s <= cell_hi(); ++s)
        if (occupied(s)) throw std::logic_error("particle right of the rightmost particle");
    }
  }

 private:
  static constexpr int kMargin = 8;

  void init_tails(TailKind left, TailKind right, int left_off) {
    left_ = left;
    right_ = right;
    left_off_ = left_off;
  }

  template <class Occ>
  void build(int lo, int hi, Occ occ) {
    cell_lo_ = lo;
    cells_.assign(hi - lo + 1, kEmptyCell);
    int lab_min = INT32_MAX, lab_max = INT32_MIN;
    for (int s = lo; s <= hi; ++s) {
      if (!occ(s)) continue;
      const int lab = initial_label_of(s);
      cells_[s - cell_lo_] = lab;
      lab_min = std::min(lab_min, lab);
      lab_max = std::max(lab_max, lab);
    }
    lab_lo_ = lab_min;
    pos_.assign(lab_max - lab_min + 1, 0);
    min_.assign(lab_max - lab_min + 1, 0);
    for (int s = lo; s <= hi; ++s) {
      const std::int32_t lab = cells_[s - cell_lo_];
      if (lab == kEmptyCell) continue;
      pos_[lab - lab_lo_] = s;
      min_[lab - lab_lo_] = s;
    }
  }

  // Label of the particle initially at site s (valid on tail sites forever:
  // they move only after entering the materialized window).
  int initial_label_of(int s) const {
    const int K = kind_.shock_offset();
    switch (kind_.tag) {
      case InitialKindTag::Step:
      case InitialKindTag::BlockB:
      case InitialKindTag::ReversedStep:
        return -s;
      case InitialKindTag::ShockIC:
        return s >= 0 ? -s : -s - K;
      case InitialKindTag::BlockA:
        return -s - K;
    }
    return 0;
  }

  int cell_hi() const noexcept { return cell_lo_ + static_cast<int>(cells_.size()) - 1; }

  void refresh_matter_range() noexcept {
    mat_lo_ = left_ == TailKind::Packed ? lo_edge_ - 1 : lo_edge_;
    mat_hi_ = right_ == TailKind::Empty ? hi_edge_ : hi_edge_ + 1;
  }

  void grow_left() {
    const int g = std::max(64, static_cast<int>(cells_.size()) / 8);
    cells_.insert(cells_.begin(), g, kEmptyCell);
    const int old_lo = cell_lo_;
    cell_lo_ -= g;
    if (left_ == TailKind::Packed) {
      // tail labels continue consecutively: site old_lo-1 holds label_hi()+1
      for (int s = old_lo - 1; s >= cell_lo_; --s) {
        const std::int32_t lab = static_cast<std::int32_t>(-s - left_off_);
        cells_[s - cell_lo_] = lab;
        pos_.push_back(s);
        min_.push_back(s);
      }
    }
  }

  void grow_right() {
    const int g = std::max(64, static_cast<int>(cells_.size()) / 8);
    const int old_hi = cell_hi();
    cells_.insert(cells_.end(), g, kEmptyCell);
    if (right_ == TailKind::Packed) {
      for (int s = old_hi + 1; s <= cell_hi(); ++s) {
        const std::int32_t lab = static_cast<std::int32_t>(-s);
        cells_[s - cell_lo_] = lab;
        pos_.insert(pos_.begin(), s);
        min_.insert(min_.begin(), s);
        --lab_lo_;
      }
    }
  }

  InitialKind kind_;
  TailKind left_ = TailKind::Packed, right_ = TailKind::Empty;
  int left_off_ = 0;

  std::vector<std::int32_t> cells_;  // label per site, kEmptyCell when empty
  int cell_lo_ = 0;

  std::vector<std::int32_t> pos_;  // position per label, indexed label - lab_lo_
  std::vector<std::int32_t> min_;  // running minimum per label
  int lab_lo_ = 0;

  // Boundary caches. Left tail packed: lo_edge_ = leftmost hole; left tail
  // empty: lo_edge_ = leftmost particle. Right tail empty: hi_edge_ =
  // rightmost particle; right tail packed: hi_edge_ = rightmost hole.
  int lo_edge_ = 0, hi_edge_ = 0;
  int mat_lo_ = 0, mat_hi_ = 0;
};

inline LabeledConfiguration make_initial(const InitialKind& kind) {
  return LabeledConfiguration(kind);
}

// Coupling observable Y_n = min{x_n^A, x_n^B} at the members' common time.
inline int coupling_min(const LabeledConfiguration& a, const LabeledConfiguration& b, int label) {
  return std::min(a.particle_position(label), b.particle_position(label));
}

}  // namespace shocklab
