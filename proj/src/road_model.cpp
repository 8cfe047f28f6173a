#include "selfrep/road_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "selfrep/errors.hpp"
#include "selfrep/rng.hpp"
#include "selfrep/text_io.hpp"

namespace selfrep {
namespace {

constexpr std::string_view kSegmentHeader = "id,length_m,w_min_m,w_max_m,k_min_per_m,k_max_per_m";
constexpr std::string_view kCenterlineHeader = "s_m,x_m,y_m";

std::filesystem::path centerline_path(const std::filesystem::path& csv_path, const std::string& id) {
  return csv_path.parent_path() / (id + ".centerline.csv");
}

// Piecewise-linear curvature profile with knots spread over the segment.
struct CurvatureProfile {
  std::vector<double> s, k;

  double heading(double at) const {
    double theta = 0.0;
    for (std::size_t j = 0; j + 1 < s.size(); ++j) {
      const double a = s[j], b = s[j + 1];
      const double slope = (k[j + 1] - k[j]) / (b - a);
      const double hi = std::min(at, b);
      if (hi <= a) break;
      const double u = hi - a;
      theta += k[j] * u + 0.5 * slope * u * u;
    }
    return theta;
  }
};

std::vector<double> arc_grid(double length) {
  std::vector<double> grid;
  const auto whole = static_cast<int>(std::floor(length));
  for (int i = 0; i <= whole; ++i) grid.push_back(static_cast<double>(i));
  // Keep the final step between 0.5 and 1.5 m.
  if (length - grid.back() < 0.5 && grid.size() > 1) grid.pop_back();
  grid.push_back(length);
  return grid;
}

}  // namespace

double RoadSegment::width_at(double s) const {
  if (length <= 0.0) return w_min;
  const double u = std::clamp(s / length, 0.0, 1.0);
  return w_min + (w_max - w_min) * u;
}

std::vector<double> polyline_curvature(std::span<const CenterlinePoint> pts) {
  const std::size_t n = pts.size();
  std::vector<double> k(n, 0.0);
  if (n < 3) return k;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const auto& a = pts[i - 1];
    const auto& b = pts[i];
    const auto& c = pts[i + 1];
    const double abx = b.x - a.x, aby = b.y - a.y;
    const double bcx = c.x - b.x, bcy = c.y - b.y;
    const double acx = c.x - a.x, acy = c.y - a.y;
    const double cross = abx * bcy - aby * bcx;
    const double denom = std::hypot(abx, aby) * std::hypot(bcx, bcy) * std::hypot(acx, acy);
    k[i] = denom > 0.0 ? 2.0 * cross / denom : 0.0;
  }
  k[0] = k[1];
  k[n - 1] = k[n - 2];
  return k;
}

void validate_segment(const RoadSegment& seg) {
  auto fail = [&](const std::string& what) { throw ValidationError("segment '" + seg.id + "': " + what); };
  if (seg.id.empty()) throw ValidationError("segment with empty id");
  if (seg.id.find_first_of(",/\\\n") != std::string::npos) fail("id contains a reserved character");
  for (double v : {seg.length, seg.w_min, seg.w_max, seg.k_min, seg.k_max})
    if (!std::isfinite(v)) fail("non-finite indicator");
  if (seg.length <= 0.0) fail("length must be positive");
  if (seg.w_min <= 0.0) fail("w_min must be positive");
  if (seg.w_min > seg.w_max) fail("w_min > w_max");
  if (seg.k_min > 0.0) fail("k_min > 0");
  if (seg.k_max < 0.0) fail("k_max < 0");
  if (seg.centerline.size() < 2) fail("centerline needs at least two points");
  for (std::size_t i = 0; i < seg.centerline.size(); ++i) {
    const auto& p = seg.centerline[i];
    if (!std::isfinite(p.s) || !std::isfinite(p.x) || !std::isfinite(p.y)) fail("non-finite centerline point");
    if (i > 0 && !(p.s > seg.centerline[i - 1].s)) fail("centerline arc length not strictly increasing");
  }
  if (std::abs(seg.centerline.back().s - seg.length) > 1e-6 * std::max(1.0, seg.length))
    fail("centerline does not end at the segment length");
  const auto k = polyline_curvature(seg.centerline);
  for (double ki : k)
    if (ki < seg.k_min - kCurvatureTolerance || ki > seg.k_max + kCurvatureTolerance)
      fail("centerline curvature outside [k_min, k_max]");
}

std::vector<RoadSegment> load_segments(const std::filesystem::path& csv_path) {
  if (!std::filesystem::exists(csv_path)) throw MissingArtifactError("segment file not found: " + csv_path.string());
  const auto lines = io::read_lines(csv_path);
  if (lines.empty() || io::trim(lines[0]) != kSegmentHeader)
    throw ValidationError(csv_path.string() + ": unexpected header (want '" + std::string(kSegmentHeader) + "')");

  std::vector<RoadSegment> out;
  for (std::size_t row = 1; row < lines.size(); ++row) {
    const auto prefix = csv_path.filename().string() + " row " + std::to_string(row) + ": ";
    if (io::trim(lines[row]).empty()) continue;
    const auto fields = io::split(lines[row], ',');
    if (fields.size() != 6) throw ValidationError(prefix + "expected 6 fields, got " + std::to_string(fields.size()));
    RoadSegment seg;
    try {
      seg.id = std::string(io::trim(fields[0]));
      seg.length = io::parse_double(fields[1]);
      seg.w_min = io::parse_double(fields[2]);
      seg.w_max = io::parse_double(fields[3]);
      seg.k_min = io::parse_double(fields[4]);
      seg.k_max = io::parse_double(fields[5]);

      const auto cpath = centerline_path(csv_path, seg.id);
      if (!std::filesystem::exists(cpath)) throw ValidationError("missing centerline file " + cpath.filename().string());
      const auto clines = io::read_lines(cpath);
      if (clines.empty() || io::trim(clines[0]) != kCenterlineHeader)
        throw ValidationError(cpath.filename().string() + ": unexpected header");
      for (std::size_t j = 1; j < clines.size(); ++j) {
        if (io::trim(clines[j]).empty()) continue;
        const auto cf = io::split(clines[j], ',');
        if (cf.size() != 3)
          throw ValidationError(cpath.filename().string() + " row " + std::to_string(j) + ": expected 3 fields");
        seg.centerline.push_back({io::parse_double(cf[0]), io::parse_double(cf[1]), io::parse_double(cf[2])});
      }
      validate_segment(seg);
    } catch (const ValidationError& e) {
      throw ValidationError(prefix + e.what());
    }
    out.push_back(std::move(seg));
  }
  return out;
}

void save_segments(const std::filesystem::path& csv_path, std::span<const RoadSegment> segments) {
  std::string table(kSegmentHeader);
  table += '\n';
  for (const auto& seg : segments) {
    table += seg.id;
    for (double v : {seg.length, seg.w_min, seg.w_max, seg.k_min, seg.k_max}) {
      table += ',';
      table += io::format_double(v);
    }
    table += '\n';

    std::string cl(kCenterlineHeader);
    cl += '\n';
    for (const auto& p : seg.centerline) {
      cl += io::format_double(p.s);
      cl += ',';
      cl += io::format_double(p.x);
      cl += ',';
      cl += io::format_double(p.y);
      cl += '\n';
    }
    io::write_file(centerline_path(csv_path, seg.id), cl);
  }
  io::write_file(csv_path, table);
}

std::vector<RoadSegment> generate_segments(int count, std::uint64_t seed, const SegmentRanges& r) {
  if (count < 1) throw ValidationError("generate_segments: count must be >= 1");
  std::vector<RoadSegment> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    Rng rng(derive_seed(seed, {0x5e6ULL, static_cast<std::uint64_t>(i)}));
    RoadSegment seg;
    char id[32];
    std::snprintf(id, sizeof(id), "S%04d", i);
    seg.id = id;
    // Rejection keeps w_min <= w_max while staying uniform on the admissible region.
    do {
      seg.w_min = rng.uniform(r.w_min_lo, r.w_min_hi);
      seg.w_max = rng.uniform(r.w_max_lo, r.w_max_hi);
    } while (seg.w_min > seg.w_max);
    seg.k_min = rng.uniform(r.k_min_lo, r.k_min_hi);
    seg.k_max = rng.uniform(r.k_max_lo, r.k_max_hi);
    seg.length = rng.uniform(r.length_lo, r.length_hi);

    CurvatureProfile prof;
    const int intervals = std::max(2, static_cast<int>(std::ceil(seg.length / 25.0)));
    for (int j = 0; j <= intervals; ++j) {
      prof.s.push_back(seg.length * j / intervals);
      prof.k.push_back(rng.uniform(seg.k_min, seg.k_max));
    }
    // Both extremes are attained somewhere along the segment.
    const auto knots = static_cast<std::uint64_t>(prof.k.size());
    const auto jmin = rng.below(knots);
    auto jmax = rng.below(knots - 1);
    if (jmax >= jmin) ++jmax;
    prof.k[jmin] = seg.k_min;
    prof.k[jmax] = seg.k_max;

    const auto grid = arc_grid(seg.length);
    double x = 0.0, y = 0.0;
    seg.centerline.push_back({0.0, 0.0, 0.0});
    for (std::size_t j = 1; j < grid.size(); ++j) {
      // Simpson on 8 sub-intervals of the exact heading.
      constexpr int kSub = 8;
      const double a = grid[j - 1], b = grid[j], h = (b - a) / kSub;
      double sx = 0.0, sy = 0.0;
      for (int m = 0; m <= kSub; ++m) {
        const double w = (m == 0 || m == kSub) ? 1.0 : (m % 2 ? 4.0 : 2.0);
        const double th = prof.heading(a + m * h);
        sx += w * std::cos(th);
        sy += w * std::sin(th);
      }
      x += sx * h / 3.0;
      y += sy * h / 3.0;
      seg.centerline.push_back({b, x, y});
    }
    out.push_back(std::move(seg));
  }
  return out;
}

std::vector<RoadSegment> filter_min_length(std::span<const RoadSegment> segments, double min_len) {
  if (!(min_len > 0.0)) throw ValidationError("filter_min_length: min_len must be positive");
  std::vector<RoadSegment> out;
  for (const auto& s : segments)
    if (s.length >= min_len) out.push_back(s);
  return out;
}

LaneFrame::LaneFrame(const RoadSegment& seg) {
  const auto& pts = seg.centerline;
  if (pts.size() < 2) throw ValidationError("LaneFrame: centerline needs at least two points");
  const std::size_t n = pts.size();
  for (const auto& p : pts) {
    s_.push_back(p.s);
    x_.push_back(p.x);
    y_.push_back(p.y);
  }
  heading_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t a = i == 0 ? 0 : i - 1;
    const std::size_t b = i + 1 == n ? n - 1 : i + 1;
    heading_[i] = std::atan2(y_[b] - y_[a], x_[b] - x_[a]);
    if (i > 0) {
      // unwrap
      while (heading_[i] - heading_[i - 1] > std::numbers::pi) heading_[i] -= 2.0 * std::numbers::pi;
      while (heading_[i] - heading_[i - 1] < -std::numbers::pi) heading_[i] += 2.0 * std::numbers::pi;
    }
  }
  curvature_ = polyline_curvature(pts);
}

std::size_t LaneFrame::locate(double s) const {
  if (s <= s_.front()) return 0;
  if (s >= s_.back()) return s_.size() - 2;
  const auto it = std::upper_bound(s_.begin(), s_.end(), s);
  return static_cast<std::size_t>(it - s_.begin()) - 1;
}

double LaneFrame::curvature(double s) const {
  if (s <= s_.front()) return curvature_.front();
  if (s >= s_.back()) return curvature_.back();
  const auto i = locate(s);
  const double u = (s - s_[i]) / (s_[i + 1] - s_[i]);
  return curvature_[i] + u * (curvature_[i + 1] - curvature_[i]);
}

double LaneFrame::heading(double s) const {
  if (s <= s_.front()) return heading_.front() + curvature_.front() * (s - s_.front());
  if (s >= s_.back()) return heading_.back() + curvature_.back() * (s - s_.back());
  const auto i = locate(s);
  const double u = (s - s_[i]) / (s_[i + 1] - s_[i]);
  return heading_[i] + u * (heading_[i + 1] - heading_[i]);
}

void LaneFrame::position(double s, double n, double& x, double& y) const {
  double cx, cy;
  if (s >= s_.back() || s <= s_.front()) {
    const bool tail = s >= s_.back();
    const std::size_t i = tail ? s_.size() - 1 : 0;
    const double ds = s - s_[i];
    const double th = heading_[i] + 0.5 * curvature_[i] * ds;
    cx = x_[i] + ds * std::cos(th);
    cy = y_[i] + ds * std::sin(th);
  } else {
    const auto i = locate(s);
    const double u = (s - s_[i]) / (s_[i + 1] - s_[i]);
    cx = x_[i] + u * (x_[i + 1] - x_[i]);
    cy = y_[i] + u * (y_[i + 1] - y_[i]);
  }
  const double th = heading(s);
  x = cx - n * std::sin(th);
  y = cy + n * std::cos(th);
}

}  // namespace selfrep
