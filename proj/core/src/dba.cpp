#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <thread>

#include "sports/odometry.hpp"

namespace sports {
namespace {

using Matrix26 = Eigen::Matrix<double, 2, 6>;
using Vector6 = Eigen::Matrix<double, 6, 1>;
using Matrix6 = Eigen::Matrix<double, 6, 6>;

constexpr double kMinDepthInformation = 1e-12;

struct EdgeGeometry {
  std::size_t edge = 0;
  int j = 0;
  Matrix3 rotation;
  Vector3 translation;
};

std::vector<std::vector<EdgeGeometry>> edges_by_source(const std::vector<GraphFrame>& frames,
                                                       const std::vector<GraphEdge>& edges) {
  std::vector<std::vector<EdgeGeometry>> out(frames.size());
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const GraphEdge& edge = edges[e];
    const Pose rel = pose_relative(frames[edge.i].pose, frames[edge.j].pose);
    out[edge.i].push_back({e, edge.j, rel.rotation_matrix(), rel.translation()});
  }
  return out;
}

Vector3 pixel_bearing(const CameraModel& cam, std::size_t idx) {
  const int r = static_cast<int>(idx / cam.width);
  const int c = static_cast<int>(idx % cam.width);
  return {(c - cam.cx) / cam.fx, (r - cam.cy) / cam.fy, 1.0};
}

double frames_cost(const std::vector<GraphFrame>& frames, const std::vector<GraphEdge>& edges,
                   const CameraModel& cam) {
  const auto by_source = edges_by_source(frames, edges);
  double total = 0.0;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const DepthMap& depth = frames[i].depth;
    for (const EdgeGeometry& eg : by_source[i]) {
      const GraphEdge& edge = edges[eg.edge];
      for (std::size_t p = 0; p < depth.size(); ++p) {
        if (!depth.is_valid(p) || !edge.target_valid[p]) continue;
        const double wx = edge.weight.values[2 * p];
        const double wy = edge.weight.values[2 * p + 1];
        if (wx == 0.0 && wy == 0.0) continue;
        const Vector3 xj = eg.rotation * (pixel_bearing(cam, p) * depth.depth[p]) + eg.translation;
        const auto uv = project(cam, xj);
        if (!uv) continue;
        const Vector2 e = *uv - edge.target[p];
        total += wx * e.x() * e.x() + wy * e.y() * e.y();
      }
    }
  }
  return total;
}

// Per-pixel Schur data kept for back-substitution of the depth increments.
struct PixelBlock {
  std::size_t pixel = 0;
  double hdd = 0.0;
  double gd = 0.0;
};

struct FrameSystem {
  Eigen::MatrixXd hpp;   // pose block contribution
  Eigen::VectorXd gp;
  Eigen::MatrixXd schur;  // - sum h h^T / hdd
  Eigen::VectorXd schur_rhs;  // - sum h gd / hdd
  std::vector<int> touched;  // frame ids whose pose couples to this frame's depths
  std::vector<PixelBlock> pixels;
  std::vector<double> h;  // 6 * touched.size() per pixel entry
  double cost = 0.0;
  double max_depth_gradient = 0.0;
};

int pose_var(int frame) { return frame - 1; }  // frame 0 is the anchor

void linearize_frame(const std::vector<GraphFrame>& frames, const std::vector<GraphEdge>& edges,
                     const std::vector<EdgeGeometry>& out_edges, const CameraModel& cam, int i,
                     bool optimize_poses, FrameSystem& sys) {
  const int dim = 6 * (static_cast<int>(frames.size()) - 1);
  sys.hpp = Eigen::MatrixXd::Zero(dim, dim);
  sys.gp = Eigen::VectorXd::Zero(dim);
  sys.schur = Eigen::MatrixXd::Zero(dim, dim);
  sys.schur_rhs = Eigen::VectorXd::Zero(dim);
  sys.touched.clear();
  sys.touched.push_back(i);
  std::vector<int> slot_of_edge;
  for (const auto& eg : out_edges) {
    auto it = std::find(sys.touched.begin(), sys.touched.end(), eg.j);
    if (it == sys.touched.end()) {
      slot_of_edge.push_back(static_cast<int>(sys.touched.size()));
      sys.touched.push_back(eg.j);
    } else {
      slot_of_edge.push_back(static_cast<int>(it - sys.touched.begin()));
    }
  }
  const std::size_t nt = sys.touched.size();
  std::vector<Vector6> h(nt);

  const DepthMap& depth = frames[i].depth;
  for (std::size_t p = 0; p < depth.size(); ++p) {
    if (!depth.is_valid(p)) continue;
    const double rho = 1.0 / depth.depth[p];
    const Vector3 bearing = pixel_bearing(cam, p);
    const Vector3 xi = bearing / rho;
    double hdd = 0.0;
    double gd = 0.0;
    bool any = false;
    for (auto& v : h) v.setZero();

    for (std::size_t k = 0; k < out_edges.size(); ++k) {
      const EdgeGeometry& eg = out_edges[k];
      const GraphEdge& edge = edges[eg.edge];
      if (!edge.target_valid[p]) continue;
      const double wx = edge.weight.values[2 * p];
      const double wy = edge.weight.values[2 * p + 1];
      if (wx == 0.0 && wy == 0.0) continue;
      const Vector3 xj = eg.rotation * xi + eg.translation;
      if (!(xj.z() > kMinProjectionDepth)) continue;
      const double iz = 1.0 / xj.z();
      const Vector2 e(cam.fx * xj.x() * iz + cam.cx - edge.target[p].x(),
                      cam.fy * xj.y() * iz + cam.cy - edge.target[p].y());
      sys.cost += wx * e.x() * e.x() + wy * e.y() * e.y();

      Eigen::Matrix<double, 2, 3> dproj;
      dproj << cam.fx * iz, 0.0, -cam.fx * xj.x() * iz * iz, 0.0, cam.fy * iz, -cam.fy * xj.y() * iz * iz;
      const Eigen::Matrix<double, 2, 3> dproj_r = dproj * eg.rotation;
      const Eigen::Vector2d jd = dproj_r * (-bearing / (rho * rho));
      const Eigen::Matrix2d w = Eigen::Vector2d(wx, wy).asDiagonal();

      hdd += jd.dot(w * jd);
      gd += jd.dot(w * e);
      any = true;
      if (!optimize_poses) continue;

      Matrix26 ji;
      ji.leftCols<3>() = dproj_r * skew(xi);
      ji.rightCols<3>() = -dproj_r;
      Matrix26 jj;
      jj.leftCols<3>() = -dproj * skew(xj);
      jj.rightCols<3>() = dproj;

      const int vi = pose_var(i);
      const int vj = pose_var(eg.j);
      const Eigen::Matrix<double, 6, 2> jiw = ji.transpose() * w;
      const Eigen::Matrix<double, 6, 2> jjw = jj.transpose() * w;
      if (vi >= 0) {
        sys.hpp.block<6, 6>(6 * vi, 6 * vi) += jiw * ji;
        sys.gp.segment<6>(6 * vi) += jiw * e;
        h[0] += jiw * jd;
      }
      if (vj >= 0) {
        sys.hpp.block<6, 6>(6 * vj, 6 * vj) += jjw * jj;
        sys.gp.segment<6>(6 * vj) += jjw * e;
        h[slot_of_edge[k]] += jjw * jd;
      }
      if (vi >= 0 && vj >= 0) {
        const Matrix6 cross = jiw * jj;
        sys.hpp.block<6, 6>(6 * vi, 6 * vj) += cross;
        sys.hpp.block<6, 6>(6 * vj, 6 * vi) += cross.transpose();
      }
    }
    if (!any || hdd <= kMinDepthInformation) continue;

    sys.max_depth_gradient = std::max(sys.max_depth_gradient, std::abs(gd));
    sys.pixels.push_back({p, hdd, gd});
    for (std::size_t a = 0; a < nt; ++a) sys.h.insert(sys.h.end(), h[a].data(), h[a].data() + 6);
    if (!optimize_poses) continue;
    for (std::size_t a = 0; a < nt; ++a) {
      const int va = pose_var(sys.touched[a]);
      if (va < 0) continue;
      sys.schur_rhs.segment<6>(6 * va) -= h[a] * (gd / hdd);
      for (std::size_t b = 0; b < nt; ++b) {
        const int vb = pose_var(sys.touched[b]);
        if (vb < 0) continue;
        sys.schur.block<6, 6>(6 * va, 6 * vb) -= h[a] * h[b].transpose() / hdd;
      }
    }
  }
}

std::string describe_failure(const Eigen::MatrixXd& s, double damping) {
  std::ostringstream os;
  os << "dba_step: reduced pose system is singular after damping " << damping << " (dimension "
     << s.rows() << ", diagonal range [" << s.diagonal().minCoeff() << ", " << s.diagonal().maxCoeff()
     << "])";
  return os.str();
}

}  // namespace

double dba_cost(const FrameGraph& graph, const CameraModel& cam) {
  return frames_cost(graph.frames, graph.edges, cam);
}

bool linearize_pixel(const FrameGraph& graph, const CameraModel& cam, std::size_t edge_idx, std::size_t pixel,
                     PixelLinearization& out) {
  const GraphEdge& edge = graph.edges.at(edge_idx);
  const GraphFrame& fi = graph.frames.at(edge.i);
  const GraphFrame& fj = graph.frames.at(edge.j);
  if (!fi.depth.is_valid(pixel) || !edge.target_valid[pixel]) return false;
  const Pose rel = pose_relative(fi.pose, fj.pose);
  const Matrix3 r = rel.rotation_matrix();
  const double rho = 1.0 / fi.depth.depth[pixel];
  const Vector3 bearing = pixel_bearing(cam, pixel);
  const Vector3 xi = bearing / rho;
  const Vector3 xj = r * xi + rel.translation();
  if (!(xj.z() > kMinProjectionDepth)) return false;
  const double iz = 1.0 / xj.z();
  out.residual = Vector2(cam.fx * xj.x() * iz + cam.cx, cam.fy * xj.y() * iz + cam.cy) - edge.target[pixel];
  Eigen::Matrix<double, 2, 3> dproj;
  dproj << cam.fx * iz, 0.0, -cam.fx * xj.x() * iz * iz, 0.0, cam.fy * iz, -cam.fy * xj.y() * iz * iz;
  const Eigen::Matrix<double, 2, 3> dproj_r = dproj * r;
  out.jacobian.block<2, 3>(0, 0) = dproj_r * skew(xi);
  out.jacobian.block<2, 3>(0, 3) = -dproj_r;
  out.jacobian.block<2, 3>(0, 6) = -dproj * skew(xj);
  out.jacobian.block<2, 3>(0, 9) = dproj;
  out.jacobian.col(12) = dproj_r * (-bearing / (rho * rho));
  return true;
}

void FrameGraph::validate(const CameraModel& cam) const {
  cam.validate();
  if (frames.empty()) throw std::invalid_argument("FrameGraph: no frames");
  for (const auto& f : frames)
    if (!f.depth.same_shape(cam.width, cam.height))
      throw std::invalid_argument("FrameGraph: depth map does not match camera");
  const std::size_t n = cam.pixel_count();
  for (const auto& e : edges) {
    if (e.i < 0 || e.j < 0 || e.i >= static_cast<int>(frames.size()) || e.j >= static_cast<int>(frames.size()))
      throw std::invalid_argument("FrameGraph: edge endpoint does not exist");
    if (e.i == e.j) throw std::invalid_argument("FrameGraph: self edge");
    if (e.target.size() != n || e.target_valid.size() != n || e.weight.values.size() != 2 * n)
      throw std::invalid_argument("FrameGraph: edge data does not match camera");
  }
}

DbaStepResult dba_step(FrameGraph& graph, const CameraModel& cam, const DbaOptions& options) {
  graph.validate(cam);
  const int nframes = static_cast<int>(graph.frames.size());
  if (nframes < 2 || graph.edges.empty())
    throw std::invalid_argument("dba_step: need at least two frames and one edge");
  const int dim = 6 * (nframes - 1);
  const auto by_source = edges_by_source(graph.frames, graph.edges);

  std::vector<FrameSystem> systems(nframes);
  const int threads = std::clamp(options.threads, 1, nframes);
  auto work = [&](int t) {
    for (int i = t; i < nframes; i += threads)
      linearize_frame(graph.frames, graph.edges, by_source[i], cam, i, options.optimize_poses, systems[i]);
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(work, t);
  }

  // Reduce in frame order so the result does not depend on thread count.
  Eigen::MatrixXd hpp = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::MatrixXd reduced = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd gp = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);
  double cost = 0.0;
  double max_depth_gradient = 0.0;
  for (const auto& s : systems) {
    hpp += s.hpp;
    gp += s.gp;
    reduced += s.schur;
    rhs += s.schur_rhs;
    cost += s.cost;
    max_depth_gradient = std::max(max_depth_gradient, s.max_depth_gradient);
  }
  reduced += hpp;
  rhs = -(gp + rhs);  // -(gp - sum h gd / hdd)

  DbaStepResult result;
  result.cost_before = cost;
  result.cost = cost;
  result.damping = options.damping;
  result.pose_increments.assign(nframes, Tangent::Zero());
  result.inverse_depth_increments.assign(nframes, std::vector<double>(cam.pixel_count(), 0.0));

  const double gradient = std::max(options.optimize_poses && dim > 0 ? gp.cwiseAbs().maxCoeff() : 0.0,
                                   max_depth_gradient);
  if (cost == 0.0 || gradient == 0.0) {
    result.status = DbaStatus::kConverged;
    return result;
  }

  double damping = options.damping;
  for (int attempt = 0; attempt <= options.max_retries; ++attempt, damping *= 10.0) {
    result.damping = damping;
    result.retries = attempt;
    Eigen::VectorXd dpose = Eigen::VectorXd::Zero(dim);
    if (options.optimize_poses && dim > 0) {
      Eigen::MatrixXd damped = reduced;
      for (int k = 0; k < dim; ++k) damped(k, k) += damping * hpp(k, k) + 1e-12;
      Eigen::LDLT<Eigen::MatrixXd> ldlt(damped);
      if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
        if (attempt == options.max_retries) throw DbaError(describe_failure(damped, damping));
        continue;
      }
      dpose = ldlt.solve(rhs);
      if (!dpose.allFinite()) {
        if (attempt == options.max_retries) throw DbaError(describe_failure(damped, damping));
        continue;
      }
    }

    std::vector<GraphFrame> trial = graph.frames;
    std::vector<Tangent> pose_inc(nframes, Tangent::Zero());
    std::vector<std::vector<double>> rho_inc(nframes, std::vector<double>(cam.pixel_count(), 0.0));
    for (int f = 1; f < nframes; ++f) pose_inc[f] = dpose.segment<6>(6 * pose_var(f));
    for (int i = 0; i < nframes; ++i) {
      const FrameSystem& s = systems[i];
      const std::size_t nt = s.touched.size();
      FrameIncrement inc;
      inc.pose = pose_inc[i];
      inc.depth.assign(cam.pixel_count(), 0.0);
      for (std::size_t k = 0; k < s.pixels.size(); ++k) {
        const PixelBlock& pb = s.pixels[k];
        double acc = pb.gd;
        for (std::size_t a = 0; a < nt; ++a) {
          const int va = pose_var(s.touched[a]);
          if (va < 0 || !options.optimize_poses) continue;
          acc += Eigen::Map<const Vector6>(&s.h[(k * nt + a) * 6]).dot(dpose.segment<6>(6 * va));
        }
        const double drho = -acc / pb.hdd;
        rho_inc[i][pb.pixel] = drho;
        const double d = graph.frames[i].depth.depth[pb.pixel];
        const double rho = 1.0 / d + drho;
        inc.depth[pb.pixel] = (rho > 0.0 ? 1.0 / rho : 0.0) - d;
      }
      FrameVariables vars{trial[i].pose, trial[i].depth, {}};
      FrameVariables next = retract_state(vars, inc);
      trial[i].pose = next.pose;
      trial[i].depth = std::move(next.depth);
    }

    const double trial_cost = frames_cost(trial, graph.edges, cam);
    if (std::isfinite(trial_cost) && trial_cost < cost) {
      for (int i = 0; i < nframes; ++i) {
        graph.frames[i].pose = trial[i].pose;
        graph.frames[i].depth = std::move(trial[i].depth);
      }
      result.status = DbaStatus::kAccepted;
      result.cost = trial_cost;
      result.pose_increments = std::move(pose_inc);
      result.inverse_depth_increments = std::move(rho_inc);
      return result;
    }
  }
  result.status = DbaStatus::kRejected;
  return result;
}

}  // namespace sports
