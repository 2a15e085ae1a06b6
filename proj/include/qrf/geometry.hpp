#pragma once

// Two-view geometry: the fundamental-matrix linearization consumed by the
// feasibility machinery, a Hartley-normalized 8-point solver, epipolar
// residual metrics, and a synthetic scene generator for benchmarks.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "qrf/errors.hpp"
#include "qrf/influence.hpp"
#include "qrf/rng.hpp"

namespace qrf::geometry {

struct Correspondence {
  double u = 0.0, v = 0.0;              // first view, pixels
  double u_prime = 0.0, v_prime = 0.0;  // second view, pixels
  std::optional<int> label;             // ground-truth inlier flag when known
};

struct FundamentalMatrix {
  Eigen::Matrix3d m = Eigen::Matrix3d::Zero();  // stored at unit Frobenius norm
  bool rank_enforced = false;
};

namespace detail {

inline void fix_sign(Eigen::Matrix3d& m) {
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) {
      if (std::abs(m(r, c)) <= 1e-12) continue;
      if (m(r, c) < 0.0) m = -m;
      return;
    }
}

}  // namespace detail

inline FundamentalMatrix make_fundamental(const Eigen::Matrix3d& m, bool rank_enforced = false) {
  const double norm = m.norm();
  if (!(norm > 0.0) || !std::isfinite(norm))
    throw std::invalid_argument("fundamental matrix must be nonzero and finite");
  FundamentalMatrix f;
  f.m = m / norm;
  detail::fix_sign(f.m);
  f.rank_enforced = rank_enforced;
  return f;
}

struct SceneGroundTruth {
  FundamentalMatrix f;
  std::vector<int> labels;  // 1 = inlier under the pixel-threshold rule
  int width = 0, height = 0;
};

// Epipolar constraint with the leading matrix entry fixed to one:
// a = [u'v, u', v'u, v'v, v', u, v, 1], b = -u'u, unknowns the remaining
// eight entries in row-major order.
inline influence::LinearizedProblem linearize(const std::vector<Correspondence>& corrs) {
  if (corrs.empty()) throw std::invalid_argument("linearization needs at least one correspondence");
  influence::LinearizedProblem p;
  p.dimension = 8;
  p.a.reserve(corrs.size());
  p.b.reserve(corrs.size());
  for (const auto& c : corrs) {
    p.a.push_back({c.u_prime * c.v, c.u_prime, c.v_prime * c.u, c.v_prime * c.v, c.v_prime, c.u,
                   c.v, 1.0});
    p.b.push_back(-c.u_prime * c.u);
  }
  return p;
}

inline std::vector<double> linear_residual(const influence::LinearizedProblem& problem,
                                           const std::vector<double>& x) {
  influence::validate_problem(problem);
  if (int(x.size()) != problem.dimension)
    throw std::invalid_argument("model dimension must match the problem");
  std::vector<double> r(problem.a.size());
  for (std::size_t i = 0; i < problem.a.size(); ++i) {
    double dot = 0.0;
    for (int j = 0; j < problem.dimension; ++j) dot += problem.a[i][j] * x[j];
    r[i] = std::abs(dot - problem.b[i]);
  }
  return r;
}

// Isotropic (centroid + mean-distance) conditioning of both views. The same
// frame serves the 8-point solver and residual computations that want
// scale-meaningful thresholds.
struct IsotropicFrame {
  Eigen::Matrix3d t1 = Eigen::Matrix3d::Identity();
  Eigen::Matrix3d t2 = Eigen::Matrix3d::Identity();
  std::vector<Correspondence> normalized;
};

namespace detail {

inline Eigen::Matrix3d isotropic_transform(const std::vector<Correspondence>& corrs, bool second) {
  double cx = 0.0, cy = 0.0;
  for (const auto& c : corrs) {
    cx += second ? c.u_prime : c.u;
    cy += second ? c.v_prime : c.v;
  }
  cx /= double(corrs.size());
  cy /= double(corrs.size());
  double mean_dist = 0.0;
  for (const auto& c : corrs) {
    const double dx = (second ? c.u_prime : c.u) - cx;
    const double dy = (second ? c.v_prime : c.v) - cy;
    mean_dist += std::hypot(dx, dy);
  }
  mean_dist /= double(corrs.size());
  if (mean_dist < 1e-12) throw degeneracy_error("coincident points cannot be conditioned");
  const double s = std::sqrt(2.0) / mean_dist;
  Eigen::Matrix3d t;
  t << s, 0.0, -s * cx, 0.0, s, -s * cy, 0.0, 0.0, 1.0;
  return t;
}

}  // namespace detail

inline IsotropicFrame isotropic_normalize(const std::vector<Correspondence>& corrs) {
  if (corrs.empty()) throw std::invalid_argument("conditioning needs at least one correspondence");
  IsotropicFrame frame;
  frame.t1 = detail::isotropic_transform(corrs, false);
  frame.t2 = detail::isotropic_transform(corrs, true);
  frame.normalized.reserve(corrs.size());
  for (const auto& c : corrs) {
    Correspondence n = c;
    n.u = frame.t1(0, 0) * c.u + frame.t1(0, 2);
    n.v = frame.t1(1, 1) * c.v + frame.t1(1, 2);
    n.u_prime = frame.t2(0, 0) * c.u_prime + frame.t2(0, 2);
    n.v_prime = frame.t2(1, 1) * c.v_prime + frame.t2(1, 2);
    frame.normalized.push_back(n);
  }
  return frame;
}

// Maps a matrix fitted in the conditioned frame back to pixel coordinates.
inline FundamentalMatrix denormalize(const Eigen::Matrix3d& f_normalized,
                                     const IsotropicFrame& frame, bool rank_enforced) {
  return make_fundamental(frame.t2.transpose() * f_normalized * frame.t1, rank_enforced);
}

// Hartley-normalized linear estimate: smallest singular vector of the
// 9-column design matrix, rank-2 enforcement, denormalization.
inline FundamentalMatrix eight_point(const std::vector<Correspondence>& corrs) {
  if (corrs.size() < 8) throw std::invalid_argument("8-point estimation needs at least 8 matches");
  const IsotropicFrame frame = isotropic_normalize(corrs);

  Eigen::MatrixXd design(corrs.size(), 9);
  for (std::size_t i = 0; i < frame.normalized.size(); ++i) {
    const auto& c = frame.normalized[i];
    design.row(i) << c.u_prime * c.u, c.u_prime * c.v, c.u_prime, c.v_prime * c.u, c.v_prime * c.v,
        c.v_prime, c.u, c.v, 1.0;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(design, Eigen::ComputeFullV);
  const auto& sigma = svd.singularValues();
  if (!(sigma(0) > 0.0) || sigma(7) <= 1e-10 * sigma(0))
    throw degeneracy_error("design matrix is rank-deficient");
  Eigen::VectorXd f = svd.matrixV().col(8);
  for (int i = 0; i < 9; ++i) {
    if (std::abs(f(i)) <= 1e-12) continue;
    if (f(i) < 0.0) f = -f;
    break;
  }

  Eigen::Matrix3d fn;
  fn << f(0), f(1), f(2), f(3), f(4), f(5), f(6), f(7), f(8);
  Eigen::JacobiSVD<Eigen::Matrix3d> rank_svd(fn, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Vector3d s = rank_svd.singularValues();
  s(2) = 0.0;
  fn = rank_svd.matrixU() * s.asDiagonal() * rank_svd.matrixV().transpose();
  return denormalize(fn, frame, true);
}

// d(u', F u) + d(u, F^T u') in pixels; +infinity when either epipolar line
// degenerates (point at an epipole).
inline double epipolar_distance_sum(const FundamentalMatrix& f, const Correspondence& corr) {
  if (!(f.m.norm() > 0.0)) throw std::invalid_argument("fundamental matrix must be nonzero");
  const Eigen::Vector3d x(corr.u, corr.v, 1.0);
  const Eigen::Vector3d xp(corr.u_prime, corr.v_prime, 1.0);
  const Eigen::Vector3d line2 = f.m * x;
  const Eigen::Vector3d line1 = f.m.transpose() * xp;
  const double n2 = std::hypot(line2(0), line2(1));
  const double n1 = std::hypot(line1(0), line1(1));
  if (n1 == 0.0 || n2 == 0.0) return std::numeric_limits<double>::infinity();
  const double algebraic = std::abs(xp.dot(line2));
  return algebraic / n2 + algebraic / n1;
}

inline constexpr double kInlierLabelPx = 6.0;

inline std::vector<int> label_by_epipolar(const FundamentalMatrix& f,
                                          const std::vector<Correspondence>& corrs,
                                          double threshold_px = kInlierLabelPx) {
  std::vector<int> labels(corrs.size());
  for (std::size_t i = 0; i < corrs.size(); ++i)
    labels[i] = epipolar_distance_sum(f, corrs[i]) <= threshold_px ? 1 : 0;
  return labels;
}

inline constexpr int kDefaultVirtualCount = 1000;
inline constexpr double kAccurateNsgd = 0.05;

namespace detail {

inline constexpr std::uint64_t kNsgdStream = 0x6e736764ull;
inline constexpr std::uint64_t kSceneStream = 0x7363656eull;

}  // namespace detail

// Symmetric geometric distance over virtual correspondences constructed to
// satisfy the ground-truth matrix exactly (random source point, closest point
// on its epipolar line as the virtual match), measured under the estimate and
// normalized by the image diagonal. Contributions are clamped at the
// diagonal, so the range is [0, 1].
inline double nsgd(const FundamentalMatrix& f_est, const FundamentalMatrix& f_gt, int width,
                   int height, int num_virtual = kDefaultVirtualCount, std::uint64_t seed = 0) {
  if (!(f_est.m.norm() > 0.0) || !(f_gt.m.norm() > 0.0))
    throw std::invalid_argument("both matrices must be nonzero");
  if (width < 1 || height < 1) throw std::invalid_argument("image size must be positive");
  if (num_virtual < 1) throw std::invalid_argument("virtual correspondence count must be positive");

  SplitMix rng(derive_key(seed, {detail::kNsgdStream}));
  const double diag = std::hypot(double(width), double(height));
  double sum = 0.0;
  int collected = 0;
  const long attempts_cap = 100L * num_virtual;
  for (long attempt = 0; attempt < attempts_cap && collected < num_virtual; ++attempt) {
    const bool from_first = (collected % 2) == 0;
    const Eigen::Vector3d p(rng.uniform() * width, rng.uniform() * height, 1.0);
    const Eigen::Vector3d line = from_first ? Eigen::Vector3d(f_gt.m * p)
                                            : Eigen::Vector3d(f_gt.m.transpose() * p);
    const double nn = line(0) * line(0) + line(1) * line(1);
    if (nn < 1e-18) continue;
    Eigen::Vector3d q(rng.uniform() * width, rng.uniform() * height, 1.0);
    const double shift = line.dot(q) / nn;
    q(0) -= shift * line(0);
    q(1) -= shift * line(1);

    Correspondence virt;
    if (from_first) {
      virt.u = p(0);
      virt.v = p(1);
      virt.u_prime = q(0);
      virt.v_prime = q(1);
    } else {
      virt.u = q(0);
      virt.v = q(1);
      virt.u_prime = p(0);
      virt.v_prime = p(1);
    }
    double d = epipolar_distance_sum(f_est, virt);
    if (!std::isfinite(d) || d > diag) d = diag;
    sum += d;
    ++collected;
  }
  if (collected == 0) throw degeneracy_error("ground-truth matrix yields no usable epipolar lines");
  return (sum / double(collected)) / diag;
}

// Mann-Whitney AUC with half-weight ties: probability that a random positive
// outranks a random negative.
inline double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("scores and labels must align");
  std::size_t positives = 0;
  for (int l : labels) positives += l != 0;
  const std::size_t negatives = labels.size() - positives;
  if (positives == 0 || negatives == 0)
    throw undefined_metric_error("AUC needs both classes present");

  std::vector<std::size_t> order(scores.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double positive_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * double(i + 1 + j);  // ranks are 1-based
    for (std::size_t k = i; k < j; ++k)
      if (labels[order[k]] != 0) positive_rank_sum += avg_rank;
    i = j;
  }
  const double u = positive_rank_sum - 0.5 * double(positives) * double(positives + 1);
  return u / (double(positives) * double(negatives));
}

struct Scene {
  std::vector<Correspondence> correspondences;
  SceneGroundTruth truth;
};

// Random relative pose with shared intrinsics; inliers are noisy projections
// of points in front of both cameras, outliers independent uniform matches.
// Labels come from the pixel-threshold rule against the true matrix, not from
// the construction.
inline Scene synthesize_scene(int num_points, double outlier_fraction, double noise_px, int width,
                              int height, std::uint64_t seed) {
  if (num_points < 1) throw std::invalid_argument("scene needs at least one point");
  if (!(outlier_fraction >= 0.0 && outlier_fraction <= 1.0))
    throw std::invalid_argument("outlier fraction must lie in [0, 1]");
  if (!(noise_px >= 0.0)) throw std::invalid_argument("noise must be non-negative");
  if (width < 8 || height < 8) throw std::invalid_argument("image too small");

  SplitMix rng(derive_key(seed, {detail::kSceneStream}));
  const double focal = 1.2 * double(std::max(width, height));
  Eigen::Matrix3d k;
  k << focal, 0.0, width / 2.0, 0.0, focal, height / 2.0, 0.0, 0.0, 1.0;
  const Eigen::Matrix3d k_inv = k.inverse();

  const int num_outliers = int(std::lround(outlier_fraction * num_points));
  const int num_inliers = num_points - num_outliers;

  // Dehomogenizing by the first matrix entry is only meaningful when that
  // entry carries weight in the conditioned frame; geometries with a weak
  // pivot are redrawn, keeping the best candidate as a fallback.
  FundamentalMatrix f_gt;
  std::vector<Correspondence> corrs;
  double best_share = -1.0;
  for (int draw = 0; draw < 64 && best_share < 0.02; ++draw) {
    Eigen::Vector3d axis(rng.normal(), rng.normal(), rng.normal());
    if (axis.norm() < 1e-9) axis = Eigen::Vector3d::UnitY();
    axis.normalize();
    const double angle = 0.05 + 0.2 * rng.uniform();
    const Eigen::Matrix3d r = Eigen::AngleAxisd(angle, axis).toRotationMatrix();
    Eigen::Vector3d t(rng.normal(), rng.normal(), rng.normal());
    if (t.norm() < 1e-9) t = Eigen::Vector3d::UnitX();
    t.normalize();

    Eigen::Matrix3d t_cross;
    t_cross << 0.0, -t(2), t(1), t(2), 0.0, -t(0), -t(1), t(0), 0.0;
    const FundamentalMatrix f = make_fundamental(k.transpose().inverse() * t_cross * r * k_inv);

    std::vector<Correspondence> candidate;
    candidate.reserve(num_points);
    for (int i = 0; i < num_inliers; ++i) {
      Correspondence c;
      for (int attempt = 0; attempt < 256; ++attempt) {
        const double px = rng.uniform() * width;
        const double py = rng.uniform() * height;
        const double depth = 4.0 + 8.0 * rng.uniform();
        const Eigen::Vector3d point = depth * (k_inv * Eigen::Vector3d(px, py, 1.0));
        const Eigen::Vector3d proj2 = k * (r * point + t);
        if (proj2(2) < 0.1) continue;
        c.u = px;
        c.v = py;
        c.u_prime = proj2(0) / proj2(2);
        c.v_prime = proj2(1) / proj2(2);
        if (c.u_prime >= 0.0 && c.u_prime < width && c.v_prime >= 0.0 && c.v_prime < height) break;
      }
      c.u += rng.normal() * noise_px;
      c.v += rng.normal() * noise_px;
      c.u_prime += rng.normal() * noise_px;
      c.v_prime += rng.normal() * noise_px;
      candidate.push_back(c);
    }
    for (int i = 0; i < num_outliers; ++i) {
      Correspondence c;
      c.u = rng.uniform() * width;
      c.v = rng.uniform() * height;
      c.u_prime = rng.uniform() * width;
      c.v_prime = rng.uniform() * height;
      candidate.push_back(c);
    }
    for (std::size_t i = candidate.size(); i > 1; --i)
      std::swap(candidate[i - 1], candidate[rng.below(i)]);

    double share = 1.0;
    if (num_points >= 8) {
      const IsotropicFrame frame = isotropic_normalize(candidate);
      const Eigen::Matrix3d conditioned =
          frame.t2.transpose().inverse() * f.m * frame.t1.inverse();
      share = std::abs(conditioned(0, 0)) / conditioned.norm();
    }
    if (share > best_share) {
      best_share = share;
      f_gt = f;
      corrs = std::move(candidate);
    }
  }

  Scene scene;
  scene.truth.f = f_gt;
  scene.truth.width = width;
  scene.truth.height = height;
  scene.truth.labels = label_by_epipolar(f_gt, corrs);
  for (std::size_t i = 0; i < corrs.size(); ++i) corrs[i].label = scene.truth.labels[i];
  scene.correspondences = std::move(corrs);
  return scene;
}

// Text formats: correspondences as "u v u_prime v_prime [label]" per line,
// matrices as nine row-major reals; '#' starts a comment.
inline std::vector<Correspondence> read_correspondences(std::istream& in) {
  std::vector<Correspondence> corrs;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream probe(line);
    std::string first;
    if (!(probe >> first)) continue;  // blank line
    std::istringstream ls(line);
    Correspondence c;
    if (!(ls >> c.u >> c.v >> c.u_prime >> c.v_prime))
      throw std::invalid_argument("correspondence file line " + std::to_string(line_no) +
                                  ": expected u v u_prime v_prime");
    int label = 0;
    if (ls >> label) c.label = label;
    std::string tail;
    if (ls >> tail)
      throw std::invalid_argument("correspondence file line " + std::to_string(line_no) +
                                  ": trailing tokens");
    corrs.push_back(c);
  }
  if (corrs.empty()) throw std::invalid_argument("correspondence file lists no matches");
  return corrs;
}

inline void write_correspondences(std::ostream& out, const std::vector<Correspondence>& corrs) {
  const auto precision = out.precision();
  out.precision(17);
  for (const auto& c : corrs) {
    out << c.u << ' ' << c.v << ' ' << c.u_prime << ' ' << c.v_prime;
    if (c.label) out << ' ' << *c.label;
    out << '\n';
  }
  out.precision(precision);
}

inline FundamentalMatrix read_matrix_file(std::istream& in) {
  Eigen::Matrix3d m;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c)
      if (!(in >> m(r, c)))
        throw std::invalid_argument("matrix file must hold nine row-major reals");
  return make_fundamental(m);
}

inline void write_matrix_file(std::ostream& out, const FundamentalMatrix& f) {
  const auto precision = out.precision();
  out.precision(17);
  for (int r = 0; r < 3; ++r)
    out << f.m(r, 0) << ' ' << f.m(r, 1) << ' ' << f.m(r, 2) << '\n';
  out.precision(precision);
}

}  // namespace qrf::geometry
