#include "ptycho/forward_model.hpp"

#include <algorithm>
#include <cfloat>
#include <sstream>

#include "ptycho/parallel.hpp"

namespace ptycho {
namespace {

void check_object(const ForwardGeometry& g, const ComplexField2D& f) {
  require(f.rows() == static_cast<std::size_t>(g.grid().rows) &&
              f.cols() == static_cast<std::size_t>(g.grid().cols),
          ErrorCode::shape_mismatch,
          "object is " + std::to_string(f.rows()) + "x" + std::to_string(f.cols()) +
              ", reconstruction grid is " + std::to_string(g.grid().rows) + "x" +
              std::to_string(g.grid().cols));
}

void check_probe(const ForwardGeometry& g, const ComplexField2D& p) {
  const auto m = static_cast<std::size_t>(g.probe_m());
  require(p.rows() == m && p.cols() == m, ErrorCode::shape_mismatch,
          "probe is " + std::to_string(p.rows()) + "x" + std::to_string(p.cols()) +
              ", geometry expects " + std::to_string(m) + "x" + std::to_string(m));
}

void check_frames(const ForwardGeometry& g, const ComplexFrames& u) {
  const auto s = static_cast<std::size_t>(g.frame_side());
  require(u.frames() == g.frames() && u.frame_rows() == s && u.frame_cols() == s,
          ErrorCode::shape_mismatch,
          "frame stack is " + std::to_string(u.frames()) + "x" + std::to_string(u.frame_rows()) +
              "x" + std::to_string(u.frame_cols()) + ", expected " + std::to_string(g.frames()) +
              "x" + std::to_string(s) + "x" + std::to_string(s));
}

// Frame q = DFT(zero-pad(probe . object^t)).
void forward_into(const ForwardGeometry& g, const ComplexField2D& probe, const ComplexField2D& obj,
                  ComplexFrames& out) {
  const int m = g.probe_m();
  const int side = g.frame_side();
  const Fft2 fft(static_cast<std::size_t>(side), static_cast<std::size_t>(side));
  const auto q_count = static_cast<long>(g.frames());
#pragma omp parallel for num_threads(worker_threads()) schedule(static)
  for (long q = 0; q < q_count; ++q) {
    auto frame = out.frame(static_cast<std::size_t>(q));
    std::fill(frame.begin(), frame.end(), cplx{});
    const auto* idx = g.footprint(static_cast<std::size_t>(q));
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        frame[static_cast<std::size_t>(i) * side + j] = probe[i * m + j] * obj[idx[i * m + j]];
    fft.forward(frame.data());
  }
}

// Top-left m x m block of the inverse DFT of every frame, stacked Q x m x m.
std::vector<cplx> cropped_inverse(const ForwardGeometry& g, const ComplexFrames& u) {
  const int m = g.probe_m();
  const int side = g.frame_side();
  const auto mm = static_cast<std::size_t>(m) * m;
  const Fft2 fft(static_cast<std::size_t>(side), static_cast<std::size_t>(side));
  std::vector<cplx> crops(g.frames() * mm);
  const auto q_count = static_cast<long>(g.frames());
#pragma omp parallel num_threads(worker_threads())
  {
    std::vector<cplx> buf(static_cast<std::size_t>(side) * side);
#pragma omp for schedule(static)
    for (long q = 0; q < q_count; ++q) {
      const auto frame = u.frame(static_cast<std::size_t>(q));
      std::copy(frame.begin(), frame.end(), buf.begin());
      fft.inverse(buf.data());
      cplx* dst = crops.data() + static_cast<std::size_t>(q) * mm;
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) dst[i * m + j] = buf[static_cast<std::size_t>(i) * side + j];
    }
  }
  return crops;
}

double pinv_epsilon(const RealField2D& w, double eps_rel, std::size_t& low) {
  const double wmax = w.empty() ? 0.0 : *std::max_element(w.begin(), w.end());
  const double eps = std::max(eps_rel * wmax, DBL_MIN);
  low = static_cast<std::size_t>(std::count_if(w.begin(), w.end(), [&](double x) { return x < eps; }));
  return eps;
}

ComplexField2D divide_weights(ComplexField2D adj, const RealField2D& w, double eps) {
  for (std::size_t i = 0; i < adj.size(); ++i) adj[i] /= (w[i] >= eps ? w[i] : w[i] + eps);
  return adj;
}

}  // namespace

ForwardGeometry::ForwardGeometry(const ScanPlan& plan, int probe_m, ReconstructionGrid grid,
                                 int pad_factor)
    : m_(probe_m), pad_(pad_factor), q_(plan.size()), grid_(std::move(grid)) {
  require(m_ >= 1, ErrorCode::invalid_argument, "probe size must be positive");
  require(pad_ >= 1, ErrorCode::invalid_argument, "pad factor must be >= 1");
  require(q_ >= 1, ErrorCode::invalid_argument, "scan plan has no positions");
  require(static_cast<std::size_t>(grid_.rows) * grid_.cols < 0xffffffffu, ErrorCode::invalid_argument,
          "reconstruction grid too large");
  const auto mm = static_cast<std::size_t>(m_) * m_;
  index_.resize(q_ * mm);
  coverage_ = RealField2D(static_cast<std::size_t>(grid_.rows), static_cast<std::size_t>(grid_.cols));
  for (std::size_t q = 0; q < q_; ++q) {
    const auto t = plan.positions[q].t;
    if (!grid_.periodic) {
      const int r0 = t.y - grid_.origin_row, c0 = t.x - grid_.origin_col;
      require(r0 >= 0 && c0 >= 0 && r0 + m_ <= grid_.rows && c0 + m_ <= grid_.cols,
              ErrorCode::invalid_argument,
              "probe footprint at (" + std::to_string(t.x) + ", " + std::to_string(t.y) +
                  ") leaves the reconstruction grid");
    }
    for (int i = 0; i < m_; ++i)
      for (int j = 0; j < m_; ++j) {
        const auto li = grid_.local_index(t.y + i, t.x + j);
        index_[q * mm + static_cast<std::size_t>(i) * m_ + j] = static_cast<std::uint32_t>(li);
        coverage_[li] += 1.0;
      }
  }
}

std::size_t ForwardGeometry::data_size() const noexcept {
  return q_ * static_cast<std::size_t>(frame_side()) * frame_side();
}

ComplexField2D ForwardGeometry::zero_object() const {
  return ComplexField2D(static_cast<std::size_t>(grid_.rows), static_cast<std::size_t>(grid_.cols));
}

ComplexField2D ForwardGeometry::zero_probe() const {
  return ComplexField2D(static_cast<std::size_t>(m_), static_cast<std::size_t>(m_));
}

ComplexFrames ForwardGeometry::zero_frames() const {
  const auto s = static_cast<std::size_t>(frame_side());
  return ComplexFrames(q_, s, s);
}

ComplexFrames FrameProjector::reflect(const ComplexFrames& u) const {
  ComplexFrames r = project(u);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = 2.0 * r[i] - u[i];
  return r;
}

// ---------------------------------------------------------------- A

ObjectOperator::ObjectOperator(const ForwardGeometry& geom, ComplexField2D probe, double eps_rel)
    : geom_(&geom), probe_(std::move(probe)) {
  check_probe(geom, probe_);
  w_ = RealField2D(static_cast<std::size_t>(geom.grid().rows), static_cast<std::size_t>(geom.grid().cols));
  const auto mm = static_cast<std::size_t>(geom.probe_m()) * geom.probe_m();
  for (std::size_t q = 0; q < geom.frames(); ++q) {
    const auto* idx = geom.footprint(q);
    for (std::size_t j = 0; j < mm; ++j) w_[idx[j]] += std::norm(probe_[j]);
  }
  eps_ = pinv_epsilon(w_, eps_rel, low_);
}

ComplexFrames ObjectOperator::apply(const ComplexField2D& object) const {
  check_object(*geom_, object);
  auto out = geom_->zero_frames();
  forward_into(*geom_, probe_, object, out);
  return out;
}

ComplexField2D ObjectOperator::adjoint(const ComplexFrames& u) const {
  check_frames(*geom_, u);
  const auto crops = cropped_inverse(*geom_, u);
  auto out = geom_->zero_object();
  const auto mm = static_cast<std::size_t>(geom_->probe_m()) * geom_->probe_m();
  for (std::size_t q = 0; q < geom_->frames(); ++q) {
    const auto* idx = geom_->footprint(q);
    const cplx* c = crops.data() + q * mm;
    for (std::size_t j = 0; j < mm; ++j) out[idx[j]] += std::conj(probe_[j]) * c[j];
  }
  return out;
}

ComplexField2D ObjectOperator::pinv(const ComplexFrames& u) const {
  return divide_weights(adjoint(u), w_, eps_);
}

ComplexFrames ObjectOperator::project(const ComplexFrames& u) const { return apply(pinv(u)); }

// ---------------------------------------------------------------- B

ProbeOperator::ProbeOperator(const ForwardGeometry& geom, ComplexField2D object, double eps_rel)
    : geom_(&geom), object_(std::move(object)) {
  check_object(geom, object_);
  w_ = RealField2D(static_cast<std::size_t>(geom.probe_m()), static_cast<std::size_t>(geom.probe_m()));
  const auto mm = static_cast<std::size_t>(geom.probe_m()) * geom.probe_m();
  for (std::size_t q = 0; q < geom.frames(); ++q) {
    const auto* idx = geom.footprint(q);
    for (std::size_t j = 0; j < mm; ++j) w_[j] += std::norm(object_[idx[j]]);
  }
  eps_ = pinv_epsilon(w_, eps_rel, low_);
}

ComplexFrames ProbeOperator::apply(const ComplexField2D& probe) const {
  check_probe(*geom_, probe);
  auto out = geom_->zero_frames();
  forward_into(*geom_, probe, object_, out);
  return out;
}

ComplexField2D ProbeOperator::adjoint(const ComplexFrames& u) const {
  check_frames(*geom_, u);
  const auto crops = cropped_inverse(*geom_, u);
  auto out = geom_->zero_probe();
  const auto mm = static_cast<std::size_t>(geom_->probe_m()) * geom_->probe_m();
  for (std::size_t q = 0; q < geom_->frames(); ++q) {
    const auto* idx = geom_->footprint(q);
    const cplx* c = crops.data() + q * mm;
    for (std::size_t j = 0; j < mm; ++j) out[j] += std::conj(object_[idx[j]]) * c[j];
  }
  return out;
}

ComplexField2D ProbeOperator::pinv(const ComplexFrames& u) const {
  return divide_weights(adjoint(u), w_, eps_);
}

ComplexFrames ProbeOperator::project(const ComplexFrames& u) const { return apply(pinv(u)); }

// ---------------------------------------------------------------- measure

ComplexFrames exit_spectra(const ForwardGeometry& geom, const ComplexField2D& probe,
                           const ComplexField2D& object_on_m) {
  check_probe(geom, probe);
  check_object(geom, object_on_m);
  auto out = geom.zero_frames();
  forward_into(geom, probe, object_on_m, out);
  return out;
}

AmplitudeFrames measure(const ComplexField2D& probe, const ComplexField2D& object_on_m,
                        const ForwardGeometry& geom) {
  check_probe(geom, probe);
  check_object(geom, object_on_m);
  // Margin pixels outside every footprint (corners of a jittered bounding box)
  // carry no data and are harmless; an unlit interior pixel is unrecoverable.
  const auto& cov = geom.coverage();
  const auto& grid = geom.grid();
  std::size_t holes = 0;
  std::ostringstream where;
  for (std::size_t i = 0; i < cov.size(); ++i)
    if (cov[i] <= 0.0 && (grid.periodic || grid.margin[i] == 0)) {
      if (holes < 8) where << " (" << i / cov.cols() << "," << i % cov.cols() << ")";
      ++holes;
    }
  if (holes > 0)
    fail(ErrorCode::coverage_hole, std::to_string(holes) +
                                       " interior pixel(s) are never illuminated, "
                                       "first at (row,col):" +
                                       where.str());
  return modulus(exit_spectra(geom, probe, object_on_m));
}

AmplitudeFrames measure(const ComplexField2D& probe, const ComplexField2D& object_on_m,
                        const ScanPlan& plan, const BoundaryCondition& bc, int object_n,
                        int pad_factor) {
  const int m = static_cast<int>(probe.rows());
  ForwardGeometry geom(plan, m, reconstruction_grid(plan, m, object_n, bc), pad_factor);
  return measure(probe, object_on_m, geom);
}

}  // namespace ptycho
