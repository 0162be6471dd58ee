#pragma once
// Truncated multivariate power series. Variables are split into groups; each group carries its
// own total-degree cap, so a single group gives total-degree truncation and two groups give
// bidegree truncation.

#include <map>
#include <memory>
#include <mutex>
#include <unordered_map>
#include <utility>
#include <vector>

#include "paddist/ring.hpp"

namespace paddist {

struct VarGroup {
  int nvars;
  int cap;
  bool operator<(const VarGroup& o) const { return std::tie(nvars, cap) < std::tie(o.nvars, o.cap); }
};

class SeriesSpace {
 public:
  explicit SeriesSpace(std::vector<VarGroup> groups) : groups_(std::move(groups)) {
    nvars_ = 0;
    for (auto& g : groups_) {
      if (g.nvars < 0 || g.cap < 0) fail(Errc::InvalidArgument, "bad variable group");
      group_start_.push_back(nvars_);
      nvars_ += g.nvars;
      base_ = std::max<i64>(base_, g.cap + 1);
    }
    std::vector<std::vector<std::vector<int>>> per_group;
    for (auto& g : groups_) per_group.push_back(enumerate_(g.nvars, g.cap));
    // Cartesian product of the groups' monomials, first group varying slowest.
    std::vector<int> cur;
    build_(per_group, 0, cur);
    for (size_t i = 0; i < exps_.size(); ++i) index_[encode(exps_[i])] = static_cast<int>(i);
    total_cap_ = 0;
    for (auto& g : groups_) total_cap_ += g.cap;
    // Group degrees per monomial and the multiplication table.
    gdeg_.assign(exps_.size() * groups_.size(), 0);
    for (size_t i = 0; i < exps_.size(); ++i)
      for (size_t gi = 0; gi < groups_.size(); ++gi) {
        int d = 0;
        for (int v = 0; v < groups_[gi].nvars; ++v) d += exps_[i][group_start_[gi] + v];
        gdeg_[i * groups_.size() + gi] = d;
      }
    const size_t ng = groups_.size();
    codes_.resize(exps_.size());
    for (size_t i = 0; i < exps_.size(); ++i) codes_[i] = encode(exps_[i]);
    // Buckets of monomials sharing a group-degree vector, and which bucket pairs may multiply.
    std::map<std::vector<int>, int> bucket_ids;
    bucket_.resize(exps_.size());
    for (size_t i = 0; i < exps_.size(); ++i) {
      std::vector<int> dv(gdeg_.begin() + i * ng, gdeg_.begin() + (i + 1) * ng);
      auto [it, fresh] = bucket_ids.try_emplace(dv, static_cast<int>(bucket_ids.size()));
      if (fresh) bucket_degs_.push_back(dv);
      bucket_[i] = it->second;
    }
    const size_t nb = bucket_degs_.size();
    fits_.assign(nb * nb, false);
    for (size_t a = 0; a < nb; ++a)
      for (size_t b = 0; b < nb; ++b) {
        bool ok = true;
        for (size_t gi = 0; gi < ng; ++gi) ok = ok && bucket_degs_[a][gi] + bucket_degs_[b][gi] <= groups_[gi].cap;
        fits_[a * nb + b] = ok;
      }
    // Dense multiplication table for small spaces; large spaces multiply sparsely on the fly.
    if (exps_.size() > kTableLimit) return;
    mult_.resize(exps_.size());
    for (size_t a = 0; a < exps_.size(); ++a)
      for (size_t b = 0; b < exps_.size(); ++b) {
        int ab = product_index(static_cast<int>(a), static_cast<int>(b));
        if (ab >= 0) mult_[a].push_back({static_cast<int>(b), ab});
      }
  }

  static constexpr size_t kTableLimit = 4096;

  /// Shared, cached instance for a given group layout.
  static std::shared_ptr<const SeriesSpace> get(const std::vector<VarGroup>& groups) {
    static std::mutex mu;
    static std::map<std::vector<VarGroup>, std::shared_ptr<const SeriesSpace>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(groups);
    if (it != cache.end()) return it->second;
    auto sp = std::make_shared<const SeriesSpace>(groups);
    cache[groups] = sp;
    return sp;
  }
  static std::shared_ptr<const SeriesSpace> single(int nvars, int cap) { return get({{nvars, cap}}); }

  int nvars() const { return nvars_; }
  int size() const { return static_cast<int>(exps_.size()); }
  int total_cap() const { return total_cap_; }
  const std::vector<VarGroup>& groups() const { return groups_; }
  int group_start(int g) const { return group_start_[g]; }
  const std::vector<int>& exps(int i) const { return exps_[i]; }
  int group_degree(int mono, int g) const { return gdeg_[mono * groups_.size() + g]; }
  int total_degree(int mono) const {
    int d = 0;
    for (size_t g = 0; g < groups_.size(); ++g) d += group_degree(mono, static_cast<int>(g));
    return d;
  }
  /// Index of an exponent vector, or -1 if it is truncated away.
  int index_of(const std::vector<int>& e) const {
    for (size_t gi = 0; gi < groups_.size(); ++gi) {
      int d = 0;
      for (int v = 0; v < groups_[gi].nvars; ++v) {
        if (e[group_start_[gi] + v] < 0) return -1;
        d += e[group_start_[gi] + v];
      }
      if (d > groups_[gi].cap) return -1;
    }
    auto it = index_.find(encode(e));
    return it == index_.end() ? -1 : it->second;
  }
  bool has_table() const { return !mult_.empty(); }
  int num_buckets() const { return static_cast<int>(bucket_degs_.size()); }
  int bucket(int mono) const { return bucket_[mono]; }
  bool buckets_fit(int a, int b) const { return fits_[static_cast<size_t>(a) * bucket_degs_.size() + b]; }
  const std::vector<std::pair<int, int>>& products(int a) const { return mult_[a]; }
  /// Index of the product monomial, or -1 if it is truncated away.
  int product_index(int a, int b) const {
    const size_t ng = groups_.size();
    for (size_t gi = 0; gi < ng; ++gi)
      if (gdeg_[a * ng + gi] + gdeg_[b * ng + gi] > groups_[gi].cap) return -1;
    return index_.at(codes_[a] + codes_[b]);
  }

 private:
  i64 encode(const std::vector<int>& e) const {
    i64 c = 0;
    for (int v : e) c = c * base_ + v;
    return c;
  }
  static std::vector<std::vector<int>> enumerate_(int n, int cap) {
    std::vector<std::vector<int>> out;
    std::vector<int> e(n, 0);
    // Graded order: by total degree, then lexicographically descending on the first variable.
    for (int d = 0; d <= cap; ++d) {
      std::vector<std::vector<int>> layer;
      std::vector<int> cur(n, 0);
      rec_(n, 0, d, cur, layer);
      for (auto& m : layer) out.push_back(m);
    }
    if (n == 0) out = {std::vector<int>{}};
    return out;
  }
  static void rec_(int n, int pos, int left, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
    if (n == 0) return;
    if (pos == n - 1) {
      cur[pos] = left;
      out.push_back(cur);
      return;
    }
    for (int k = left; k >= 0; --k) {
      cur[pos] = k;
      rec_(n, pos + 1, left - k, cur, out);
    }
  }
  void build_(const std::vector<std::vector<std::vector<int>>>& pg, size_t g, std::vector<int>& cur) {
    if (g == pg.size()) {
      exps_.push_back(cur);
      return;
    }
    for (auto& m : pg[g]) {
      size_t old = cur.size();
      cur.insert(cur.end(), m.begin(), m.end());
      build_(pg, g + 1, cur);
      cur.resize(old);
    }
  }

  std::vector<VarGroup> groups_;
  std::vector<int> group_start_;
  int nvars_ = 0;
  int total_cap_ = 0;
  i64 base_ = 1;
  std::vector<std::vector<int>> exps_;
  std::vector<i64> codes_;
  std::vector<int> gdeg_;
  std::unordered_map<i64, int> index_;
  std::vector<std::vector<std::pair<int, int>>> mult_;
  std::vector<int> bucket_;
  std::vector<std::vector<int>> bucket_degs_;
  std::vector<bool> fits_;
};

using SpacePtr = std::shared_ptr<const SeriesSpace>;

class Series {
 public:
  Series() = default;
  Series(SpacePtr sp, const Ring& R) : sp_(std::move(sp)), R_(R), c_(sp_->size(), RingElem::zero(R)) {}

  static Series constant(SpacePtr sp, const RingElem& x) {
    Series s(std::move(sp), x.ring());
    s.c_[0] = x;
    return s;
  }
  static Series variable(SpacePtr sp, const Ring& R, int var) {
    Series s(sp, R);
    std::vector<int> e(sp->nvars(), 0);
    e[var] = 1;
    int idx = sp->index_of(e);
    if (idx >= 0) s.c_[idx] = RingElem::one(R);
    return s;
  }

  const SpacePtr& space() const { return sp_; }
  const Ring& ring() const { return R_; }
  int size() const { return static_cast<int>(c_.size()); }
  const RingElem& operator[](int i) const { return c_[i]; }
  RingElem& operator[](int i) { return c_[i]; }
  const RingElem& const_term() const { return c_[0]; }
  const std::vector<RingElem>& coeffs() const { return c_; }

  std::vector<int> support() const {
    std::vector<int> nz;
    for (int i = 0; i < size(); ++i)
      if (!c_[i].is_zero()) nz.push_back(i);
    return nz;
  }
  bool is_zero() const {
    for (auto& x : c_)
      if (!x.is_zero()) return false;
    return true;
  }

  Series operator+(const Series& o) const {
    check_(o);
    Series r(*this);
    for (size_t i = 0; i < c_.size(); ++i) r.c_[i] += o.c_[i];
    return r;
  }
  Series operator-(const Series& o) const {
    check_(o);
    Series r(*this);
    for (size_t i = 0; i < c_.size(); ++i) r.c_[i] -= o.c_[i];
    return r;
  }
  Series operator-() const {
    Series r(*this);
    for (auto& x : r.c_) x = -x;
    return r;
  }
  Series operator*(const Series& o) const {
    check_(o);
    Series r(sp_, R_);
    if (sp_->has_table()) {
      for (int a = 0; a < size(); ++a) {
        if (c_[a].is_zero()) continue;
        for (auto [b, ab] : sp_->products(a)) {
          if (o.c_[b].is_zero()) continue;
          r.c_[ab].add_mul(c_[a], o.c_[b]);
        }
      }
      return r;
    }
    std::vector<std::vector<int>> by_bucket(sp_->num_buckets());
    for (int b = 0; b < size(); ++b)
      if (!o.c_[b].is_zero()) by_bucket[sp_->bucket(b)].push_back(b);
    for (int a = 0; a < size(); ++a) {
      if (c_[a].is_zero()) continue;
      const int ba = sp_->bucket(a);
      for (int bb = 0; bb < sp_->num_buckets(); ++bb) {
        if (by_bucket[bb].empty() || !sp_->buckets_fit(ba, bb)) continue;
        for (int b : by_bucket[bb]) r.c_[sp_->product_index(a, b)].add_mul(c_[a], o.c_[b]);
      }
    }
    return r;
  }
  Series operator*(const RingElem& x) const {
    Series r(*this);
    for (auto& y : r.c_) y = y * x;
    return r;
  }
  Series& operator+=(const Series& o) { return *this = *this + o; }
  Series& operator-=(const Series& o) { return *this = *this - o; }
  Series& operator*=(const Series& o) { return *this = *this * o; }

  Series mul_p(int k) const {
    Series r(*this);
    for (auto& y : r.c_) y = y.mul_p(k);
    return r;
  }

  /// Inverse of a series with invertible constant term (finite geometric sum, nilpotent tail).
  Series inv() const {
    RingElem c0 = c_[0];
    if (!c0.is_invertible()) fail(Errc::NonUnit, "series constant term not invertible");
    RingElem i0 = c0.inv();
    Series y = (*this) * i0;
    y.c_[0] = RingElem::zero(R_);
    Series acc = constant(sp_, RingElem::one(R_));
    Series term = acc;
    Series ny = -y;
    for (int n = 1; n <= sp_->total_cap(); ++n) {
      term = term * ny;
      if (term.is_zero()) break;
      acc += term;
    }
    return acc * i0;
  }

  Series pow(i64 n) const {
    if (n < 0) return inv().pow(-n);
    Series r = constant(sp_, RingElem::one(R_)), b = *this;
    while (n > 0) {
      if (n & 1) r *= b;
      n >>= 1;
      if (n) b *= b;
    }
    return r;
  }

  /// Evaluate at a point (one scalar per variable, in the series ring).
  RingElem eval(const std::vector<RingElem>& pt) const {
    if (static_cast<int>(pt.size()) != sp_->nvars()) fail(Errc::InvalidArgument, "point dimension");
    RingElem acc = RingElem::zero(R_);
    for (int i = 0; i < size(); ++i) {
      if (c_[i].is_zero()) continue;
      RingElem t = c_[i];
      const auto& e = sp_->exps(i);
      for (int v = 0; v < sp_->nvars(); ++v)
        if (e[v] > 0) t *= pt[v].pow(e[v]);
      acc += t;
    }
    return acc;
  }

  /// Valuation of a coefficient-wise minimum (Gauss).
  int valuation() const {
    int v = kInfVal;
    for (auto& x : c_) v = std::min(v, x.valuation());
    return v;
  }

  /// Re-express the series in a smaller truncation (variables must match group by group).
  Series restrict_to(SpacePtr target) const {
    if (target->nvars() != sp_->nvars()) fail(Errc::TruncationMismatch, "variable count differs");
    Series r(target, R_);
    for (int i = 0; i < size(); ++i) {
      int j = target->index_of(sp_->exps(i));
      if (j >= 0) r.c_[j] = c_[i];
    }
    return r;
  }

 private:
  void check_(const Series& o) const {
    if (sp_ != o.sp_) fail(Errc::TruncationMismatch, "series live in different truncations");
    if (R_ != o.R_) fail(Errc::RingMismatch, "series coefficient rings differ");
  }

  SpacePtr sp_;
  Ring R_{};
  std::vector<RingElem> c_;
};

inline Series operator*(const RingElem& x, const Series& s) { return s * x; }

// Uniform helpers so that matrix code can run over scalars and series alike.
inline RingElem const_like(const RingElem& proto, const RingElem& c) {
  return c.ring() == proto.ring() ? c : c.embed(proto.ring());
}
inline Series const_like(const Series& proto, const RingElem& c) {
  return Series::constant(proto.space(), c.ring() == proto.ring() ? c : c.embed(proto.ring()));
}
inline RingElem mul_p(const RingElem& x, int k) { return x.mul_p(k); }
inline Series mul_p(const Series& x, int k) { return x.mul_p(k); }
inline RingElem inverse(const RingElem& x) { return x.inv(); }
inline Series inverse(const Series& x) { return x.inv(); }
inline RingElem constant_part(const RingElem& x) { return x; }
inline RingElem constant_part(const Series& x) { return x.const_term(); }
inline bool is_zero_elem(const RingElem& x) { return x.is_zero(); }
inline bool is_zero_elem(const Series& x) { return x.is_zero(); }

}  // namespace paddist
