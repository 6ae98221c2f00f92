#pragma once

// Supply-quality checks: co-visit projection of a browser/website graph and
// viewability accounting.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "rtb/core.hpp"

namespace rtb {

using SiteId = std::uint32_t;
using BrowserId = std::uint32_t;

/// Browser-to-website visits over one time window. Repeat visits collapse
/// to a single edge.
class BipartiteVisits {
 public:
  BipartiteVisits(std::size_t browsers, std::size_t websites) : browsers_(browsers), audience_(websites) {}

  void add(BrowserId b, SiteId w) {
    if (b >= browsers_) throw Error("BipartiteVisits: unknown browser " + std::to_string(b));
    if (w >= audience_.size()) throw Error("BipartiteVisits: unknown website " + std::to_string(w));
    auto& a = audience_[w];
    const auto it = std::lower_bound(a.begin(), a.end(), b);
    if (it == a.end() || *it != b) a.insert(it, b);
  }

  [[nodiscard]] std::size_t browsers() const { return browsers_; }
  [[nodiscard]] std::size_t websites() const { return audience_.size(); }
  /// Sorted unique browsers that visited the site.
  [[nodiscard]] const std::vector<BrowserId>& audience(SiteId w) const { return audience_.at(w); }

 private:
  std::size_t browsers_;
  std::vector<std::vector<BrowserId>> audience_;
};

struct CoVisitEdge {
  SiteId from = 0;
  SiteId to = 0;
  double rate = 0.0;  // share of from's audience that also visited to
  friend bool operator==(const CoVisitEdge&, const CoVisitEdge&) = default;
};

struct CoVisitGraph {
  std::size_t websites = 0;
  double threshold = 0.0;
  std::vector<CoVisitEdge> edges;  // sorted by (from, to)
  std::vector<SiteId> excluded;    // sites without visitors

  [[nodiscard]] bool has_edge(SiteId x, SiteId y) const {
    const auto it = std::lower_bound(edges.begin(), edges.end(), std::pair{x, y}, [](const CoVisitEdge& e, auto k) {
      return std::pair{e.from, e.to} < k;
    });
    return it != edges.end() && it->from == x && it->to == y;
  }
};

inline std::size_t intersection_size(const std::vector<BrowserId>& a, const std::vector<BrowserId>& b) {
  std::size_t n = 0;
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++n;
      ++i;
      ++j;
    }
  }
  return n;
}

/// Directed edge x -> y whenever at least a `threshold` share of x's
/// browsers also visited y.
inline CoVisitGraph build_covisit(const BipartiteVisits& visits, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) throw Error("build_covisit: threshold must be in (0, 1]");
  CoVisitGraph g;
  g.websites = visits.websites();
  g.threshold = threshold;
  for (SiteId x = 0; x < g.websites; ++x) {
    const auto& ax = visits.audience(x);
    if (ax.empty()) {
      g.excluded.push_back(x);
      continue;
    }
    for (SiteId y = 0; y < g.websites; ++y) {
      if (y == x) continue;
      const auto& ay = visits.audience(y);
      if (ay.empty()) continue;
      const double rate = static_cast<double>(intersection_size(ax, ay)) / static_cast<double>(ax.size());
      if (rate >= threshold) g.edges.push_back({x, y, rate});
    }
  }
  return g;
}

struct SiteCluster {
  std::vector<SiteId> sites;  // ascending
  double mean_rate = 0.0;     // mean over ordered pairs inside the cluster, 0 for missing edges
};

/// Weakly connected components with at least `min_size` sites, largest
/// first, then by mean internal co-visit rate.
inline std::vector<SiteCluster> suspicious_clusters(const CoVisitGraph& g, std::size_t min_size = 2) {
  if (min_size == 0) throw Error("suspicious_clusters: min_size must be positive");
  std::vector<SiteId> parent(g.websites);
  std::iota(parent.begin(), parent.end(), SiteId{0});
  auto find = [&](SiteId x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& e : g.edges) {
    const auto a = find(e.from);
    const auto b = find(e.to);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  std::map<SiteId, std::vector<SiteId>> groups;
  for (SiteId x = 0; x < g.websites; ++x) groups[find(x)].push_back(x);

  std::map<SiteId, double> rate_sum;
  for (const auto& e : g.edges) rate_sum[find(e.from)] += e.rate;

  std::vector<SiteCluster> out;
  for (auto& [root, sites] : groups) {
    if (sites.size() < min_size || sites.size() < 2) continue;
    const double pairs = static_cast<double>(sites.size()) * static_cast<double>(sites.size() - 1);
    out.push_back({std::move(sites), rate_sum[root] / pairs});
  }
  std::stable_sort(out.begin(), out.end(), [](const SiteCluster& a, const SiteCluster& b) {
    if (a.sites.size() != b.sites.size()) return a.sites.size() > b.sites.size();
    return a.mean_rate > b.mean_rate;
  });
  return out;
}

// ---------------------------------------------------------------------------
// Viewability

struct Rect {
  double top = 0.0;
  double left = 0.0;
  double bottom = 0.0;
  double right = 0.0;

  [[nodiscard]] double width() const { return right - left; }
  [[nodiscard]] double height() const { return bottom - top; }
  void validate(const char* what) const {
    if (!(bottom >= top) || !(right >= left)) throw Error(std::string(what) + ": need bottom >= top and right >= left");
  }
};

/// Page coordinates with the origin at the upper left.
struct ViewGeometry {
  Rect bounds;    // the ad creative
  Rect viewport;  // the visible window
};

/// Displayed height share times displayed width share, zero once the ad
/// leaves the viewport on any side.
inline double pixel_percentage(const ViewGeometry& g) {
  g.bounds.validate("pixel_percentage bounds");
  g.viewport.validate("pixel_percentage viewport");
  const double h = g.bounds.height();
  const double w = g.bounds.width();
  if (!(h > 0.0) || !(w > 0.0)) throw Error("pixel_percentage: ad must have positive width and height");
  const double top = std::min(1.0, (g.bounds.bottom - g.viewport.top) / h);
  const double bottom = std::min(1.0, (g.viewport.bottom - g.bounds.top) / h);
  const double left = std::min(1.0, (g.bounds.right - g.viewport.left) / w);
  const double right = std::min(1.0, (g.viewport.right - g.bounds.left) / w);
  if (top <= 0.0 || bottom <= 0.0 || left <= 0.0 || right <= 0.0) return 0.0;
  return top * bottom * left * right;
}

struct ViewTick {
  std::int64_t timestamp_ms = 0;
  double pixel = 0.0;
};

struct ViewabilityPolicy {
  double pixel_threshold = 0.5;
  double seconds = 1.0;

  static ViewabilityPolicy google() { return {0.5, 1.0}; }
  static ViewabilityPolicy recall_study() { return {0.75, 2.0}; }
};

inline constexpr std::int64_t kTickMs = 100;

/// Ticks needed to cover the exposure time.
inline std::size_t ticks_required(double seconds) {
  if (!(seconds > 0.0) || !std::isfinite(seconds)) throw Error("viewable: exposure time must be positive");
  return static_cast<std::size_t>(std::ceil(seconds * 1000.0 / static_cast<double>(kTickMs) - 1e-9));
}

/// True once a run of consecutive ticks at or above the pixel threshold is
/// long enough. A tick below the threshold restarts the count.
inline bool viewable(std::span<const ViewTick> trace, const ViewabilityPolicy& policy) {
  if (!(policy.pixel_threshold >= 0.0 && policy.pixel_threshold <= 1.0))
    throw Error("viewable: pixel threshold must be in [0, 1]");
  const auto need = ticks_required(policy.seconds);
  std::size_t run = 0;
  for (std::size_t k = 0; k < trace.size(); ++k) {
    if (k > 0 && trace[k].timestamp_ms - trace[k - 1].timestamp_ms != kTickMs)
      throw Error("viewable: ticks must be spaced " + std::to_string(kTickMs) + " ms apart (index " +
                  std::to_string(k) + ")");
    if (!(trace[k].pixel >= 0.0 && trace[k].pixel <= 1.0)) throw Error("viewable: pixel share must be in [0, 1]");
    run = trace[k].pixel >= policy.pixel_threshold ? run + 1 : 0;
    if (run >= need) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Log readers

struct VisitLog {
  std::vector<std::string> browser_names;
  std::vector<std::string> site_names;
  BipartiteVisits visits{0, 0};
};

namespace detail {
inline std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> cols;
  std::size_t start = 0;
  for (;;) {
    const auto tab = line.find('\t', start);
    cols.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) return cols;
    start = tab + 1;
  }
}

inline std::int64_t parse_int(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (s.empty() || used != s.size()) throw Error("bad " + what + " '" + s + "'");
  return v;
}

inline double parse_double(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (s.empty() || used != s.size() || !std::isfinite(v)) throw Error("bad " + what + " '" + s + "'");
  return v;
}
}  // namespace detail

/// Reads browser, website, timestamp rows. Lines starting with '#' are
/// skipped. Ids are numbered in order of first appearance.
inline VisitLog read_visits(std::istream& in) {
  std::map<std::string, BrowserId> browsers;
  std::map<std::string, SiteId> sites;
  VisitLog log;
  std::vector<std::pair<BrowserId, SiteId>> pairs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto cols = detail::split_tabs(line);
    try {
      if (cols.size() != 3) throw Error("expected 3 columns, got " + std::to_string(cols.size()));
      if (cols[0].empty() || cols[1].empty()) throw Error("empty id");
      detail::parse_int(cols[2], "timestamp");
    } catch (const Error& e) {
      throw Error("visits line " + std::to_string(lineno) + ": " + e.what());
    }
    auto [bi, bnew] = browsers.emplace(cols[0], static_cast<BrowserId>(log.browser_names.size()));
    if (bnew) log.browser_names.push_back(cols[0]);
    auto [si, snew] = sites.emplace(cols[1], static_cast<SiteId>(log.site_names.size()));
    if (snew) log.site_names.push_back(cols[1]);
    pairs.emplace_back(bi->second, si->second);
  }
  log.visits = BipartiteVisits(log.browser_names.size(), log.site_names.size());
  for (auto [b, w] : pairs) log.visits.add(b, w);
  return log;
}

/// Reads timestamp ms, pixel share rows.
inline std::vector<ViewTick> read_view_trace(std::istream& in) {
  std::vector<ViewTick> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto cols = detail::split_tabs(line);
    try {
      if (cols.size() != 2) throw Error("expected 2 columns, got " + std::to_string(cols.size()));
      out.push_back({detail::parse_int(cols[0], "timestamp"), detail::parse_double(cols[1], "pixel share")});
    } catch (const Error& e) {
      throw Error("trace line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace rtb
