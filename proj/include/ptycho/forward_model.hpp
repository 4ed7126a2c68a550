#pragma once

#include <cstdint>
#include <vector>

#include "ptycho/boundary.hpp"
#include "ptycho/fft.hpp"
#include "ptycho/field.hpp"
#include "ptycho/scan_plan.hpp"

namespace ptycho {

// Scan positions resolved against a reconstruction grid: for every frame q and
// probe pixel j, the linear index into M it illuminates. Frames are
// (pad*m) x (pad*m); the exit wave occupies the top-left m x m block.
class ForwardGeometry {
 public:
  ForwardGeometry(const ScanPlan& plan, int probe_m, ReconstructionGrid grid, int pad_factor = 2);

  int probe_m() const noexcept { return m_; }
  int pad_factor() const noexcept { return pad_; }
  int frame_side() const noexcept { return m_ * pad_; }
  std::size_t frames() const noexcept { return q_; }
  const ReconstructionGrid& grid() const noexcept { return grid_; }

  // Data dimension Q * (pad*m)^2.
  std::size_t data_size() const noexcept;

  const std::uint32_t* footprint(std::size_t q) const noexcept {
    return index_.data() + q * static_cast<std::size_t>(m_) * m_;
  }

  // Footprint count per pixel of M.
  const RealField2D& coverage() const noexcept { return coverage_; }

  ComplexField2D zero_object() const;
  ComplexField2D zero_probe() const;
  ComplexFrames zero_frames() const;

 private:
  int m_;
  int pad_;
  std::size_t q_;
  ReconstructionGrid grid_;
  std::vector<std::uint32_t> index_;
  RealField2D coverage_;
};

// Orthogonal projection onto the range of a linear frame operator.
class FrameProjector {
 public:
  virtual ~FrameProjector() = default;
  virtual ComplexFrames project(const ComplexFrames& u) const = 0;
  ComplexFrames reflect(const ComplexFrames& u) const;
};

// A h = F(mu, h) for a frozen probe mu. The geometry must outlive the operator.
class ObjectOperator final : public FrameProjector {
 public:
  ObjectOperator(const ForwardGeometry& geom, ComplexField2D probe, double eps_rel = 1e-12);

  ComplexFrames apply(const ComplexField2D& object) const;
  ComplexField2D adjoint(const ComplexFrames& u) const;
  ComplexField2D pinv(const ComplexFrames& u) const;
  ComplexFrames project(const ComplexFrames& u) const override;

  // w_A = sum_t |mu^t|^2 on M.
  const RealField2D& weights() const noexcept { return w_; }
  double epsilon() const noexcept { return eps_; }
  std::size_t low_weight_pixels() const noexcept { return low_; }
  const ComplexField2D& probe() const noexcept { return probe_; }
  const ForwardGeometry& geometry() const noexcept { return *geom_; }

 private:
  const ForwardGeometry* geom_;
  ComplexField2D probe_;
  RealField2D w_;
  double eps_;
  std::size_t low_;
};

// B eta = F(eta, f) for a frozen object f on M.
class ProbeOperator final : public FrameProjector {
 public:
  ProbeOperator(const ForwardGeometry& geom, ComplexField2D object, double eps_rel = 1e-12);

  ComplexFrames apply(const ComplexField2D& probe) const;
  ComplexField2D adjoint(const ComplexFrames& u) const;
  ComplexField2D pinv(const ComplexFrames& u) const;
  ComplexFrames project(const ComplexFrames& u) const override;

  // w_B = sum_t |f^t|^2 on the probe grid.
  const RealField2D& weights() const noexcept { return w_; }
  double epsilon() const noexcept { return eps_; }
  std::size_t low_weight_pixels() const noexcept { return low_; }
  const ComplexField2D& object() const noexcept { return object_; }
  const ForwardGeometry& geometry() const noexcept { return *geom_; }

 private:
  const ForwardGeometry* geom_;
  ComplexField2D object_;
  RealField2D w_;
  double eps_;
  std::size_t low_;
};

// F(mu, f) as complex frames.
ComplexFrames exit_spectra(const ForwardGeometry& geom, const ComplexField2D& probe,
                           const ComplexField2D& object_on_m);

// |F(mu, f)|. Throws coverage_hole if an interior pixel of M is never illuminated.
AmplitudeFrames measure(const ComplexField2D& probe, const ComplexField2D& object_on_m,
                        const ForwardGeometry& geom);

AmplitudeFrames measure(const ComplexField2D& probe, const ComplexField2D& object_on_m,
                        const ScanPlan& plan, const BoundaryCondition& bc, int object_n,
                        int pad_factor = 2);

}  // namespace ptycho
