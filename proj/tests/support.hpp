#pragma once

#include <Eigen/Dense>
#include <complex>
#include <numbers>
#include <random>
#include <string>

#include "dgrel/netmodel.hpp"
#include "dgrel/network_io.hpp"
#include "dgrel/solver.hpp"

namespace testsupport {

using dgrel::Complex;

inline std::string reference_path() { return std::string(DGREL_SOURCE_DIR) + "/networks/loop4kv.json"; }

inline const dgrel::Network& reference() {
  static const dgrel::Network net = dgrel::load_network(reference_path());
  return net;
}

inline double rel_err(Complex got, Complex want) {
  return std::abs(got - want) / std::max(std::abs(want), 1e-12);
}

// Smallest legal network: one source, one branch, one load.
inline dgrel::Network two_bus(double load_kva = 100.0) {
  dgrel::Network n;
  n.buses = {{"N1", 4.0}, {"N2", 4.0}};
  n.branches = {{"L1", "N1", "N2", {0.1, 0.2}, {0.3, 0.6}}};
  n.sources = {{"S", "N1", 1.0, 0.0, {0.01, 0.1}, {0.01, 0.08}}};
  n.loads = {{"LD", "N2", load_kva, 0.9, 3}};
  return n;
}

// Random connected feeder of `nbus` buses: a spanning tree plus a few chords,
// one or two grounded sources, loads on most buses and, optionally, a DG.
inline dgrel::Network random_network(std::mt19937_64& rng, int nbus, bool with_dg) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto z = [&](double scale) { return Complex(scale * (0.02 + u(rng)), scale * (0.05 + 2.0 * u(rng))); };
  dgrel::Network n;
  for (int i = 0; i < nbus; ++i) n.buses.push_back({"N" + std::to_string(i), 4.0});
  int k = 0;
  auto add = [&](int a, int b) {
    const Complex z1 = z(0.2);
    n.branches.push_back({"L" + std::to_string(k++), n.buses[a].id, n.buses[b].id, z1,
                          Complex(z1.real() * (1.0 + 2.0 * u(rng)), z1.imag() * (0.5 + 3.0 * u(rng)))});
  };
  for (int i = 1; i < nbus; ++i) add(static_cast<int>(u(rng) * i), i);
  const int chords = static_cast<int>(u(rng) * 3.0);
  for (int c = 0; c < chords; ++c) {
    int a = static_cast<int>(u(rng) * nbus), b = static_cast<int>(u(rng) * nbus);
    if (a != b) add(a, b);
  }
  const int nsrc = u(rng) < 0.5 ? 1 : 2;
  for (int s = 0; s < nsrc; ++s) {
    const Complex z1 = z(0.1);
    n.sources.push_back({"S" + std::to_string(s), n.buses[static_cast<std::size_t>(u(rng) * nbus)].id,
                         0.95 + 0.1 * u(rng), -5.0 + 10.0 * u(rng), z1, z1 * (0.3 + u(rng))});
  }
  for (int i = 0; i < nbus; ++i)
    if (u(rng) < 0.8)
      n.loads.push_back({"D" + std::to_string(i), n.buses[i].id, 50.0 + 500.0 * u(rng), 0.7 + 0.3 * u(rng), 1});
  if (with_dg) {
    dgrel::DgUnit dg;
    dg.bus = n.buses[static_cast<std::size_t>(u(rng) * nbus)].id;
    dg.p_mw = 0.2 + 0.8 * u(rng);
    dg.xd_2prime_pu = 0.15 + 0.2 * u(rng);
    if (u(rng) < 0.3) dg.x0_pu = 0.05 + 0.1 * u(rng);
    n.dg = dg;
  }
  return n;
}

// Dense three-phase (abc) nodal model: three rows per bus, every element
// stamped with its full phase admittance matrix. Independent of the
// sequence-domain solver.
class PhaseOracle {
 public:
  using Mat = Eigen::MatrixXcd;
  using Vec = Eigen::VectorXcd;
  using M3 = Eigen::Matrix3cd;
  using V3 = Eigen::Vector3cd;

  PhaseOracle(const dgrel::Network& net, const dgrel::SwitchState& st, std::optional<Complex> dg_emf)
      : net_(net), n_(3 * static_cast<int>(net.buses.size())), y_(Mat::Zero(n_, n_)), inj_(Vec::Zero(n_)) {
    for (std::size_t i = 0; i < net.branches.size(); ++i) {
      if (!closed_branch(st, net.branches[i].id)) continue;
      const auto& b = net.branches[i];
      stamp_series(bus(b.from_bus), bus(b.to_bus), seq_to_abc(1.0 / b.z0, 1.0 / b.z1, 1.0 / b.z1));
    }
    for (std::size_t s = 0; s < net.sources.size(); ++s) {
      const auto& src = net.sources[s];
      if (!closed_source(st, src.id)) continue;
      const M3 ys = seq_to_abc(1.0 / src.z0_th, 1.0 / src.z1_th, 1.0 / src.z1_th);
      const double v = net.buses[*net.bus_index(src.bus)].phase_volts() * src.e_pu;
      stamp_shunt(bus(src.bus), ys, ys * balanced(std::polar(v, src.angle_deg * std::numbers::pi / 180.0)));
    }
    for (const auto& l : net.loads) {
      const Complex y = dgrel::load_admittance(net, l);
      stamp_shunt(bus(l.bus), seq_to_abc(0.0, y, y), V3::Zero());
    }
    if (st.dg_online && net.dg && net.dg->bus && dg_emf) {
      const Complex z1 = *dgrel::dg_impedance(net, dgrel::Sequence::positive);
      const auto z0 = dgrel::dg_impedance(net, dgrel::Sequence::zero);
      const M3 yd = seq_to_abc(z0 ? 1.0 / *z0 : 0.0, 1.0 / z1, 1.0 / z1);
      stamp_shunt(bus(*net.dg->bus), yd, yd * balanced(*dg_emf));
    }
  }

  // Shunt from phase a of `bus_id` to ground; a zero impedance pins the node.
  void add_slg(const std::string& bus_id, Complex zf) { fault_ = Fault{3 * bus(bus_id), zf}; }

  void solve() {
    Mat y = y_;
    Vec inj = inj_;
    if (fault_ && std::abs(fault_->z) > 0.0) {
      y(fault_->row, fault_->row) += 1.0 / fault_->z;
    } else if (fault_) {
      // bolted: V = 0 at the faulted node
      y.row(fault_->row).setZero();
      y(fault_->row, fault_->row) = 1.0;
      inj(fault_->row) = 0.0;
    }
    // dead nodes (no element at all) would make the matrix singular
    for (int i = 0; i < n_; ++i)
      if (y.row(i).cwiseAbs().sum() == 0.0) y(i, i) = 1.0;
    v_ = y.fullPivLu().solve(inj);
    if (fault_) {
      if (std::abs(fault_->z) > 0.0) {
        i_fault_ = v_(fault_->row) / fault_->z;
      } else {
        const Vec mismatch = y_ * v_ - inj_;
        i_fault_ = -mismatch(fault_->row);
      }
    }
  }

  Complex v_phase_a(const std::string& b) const { return v_(3 * bus(b)); }
  Complex fault_current() const { return i_fault_; }

  Complex branch_phase_a(const dgrel::Branch& b) const {
    const M3 yb = seq_to_abc(1.0 / b.z0, 1.0 / b.z1, 1.0 / b.z1);
    const V3 dv = v_.segment<3>(3 * bus(b.from_bus)) - v_.segment<3>(3 * bus(b.to_bus));
    return (yb * dv)(0);
  }

  static M3 seq_to_abc(Complex y0, Complex y1, Complex y2) {
    const Complex a = std::polar(1.0, 2.0 * std::numbers::pi / 3.0);
    M3 t;
    t << 1.0, 1.0, 1.0, 1.0, a * a, a, 1.0, a, a * a;
    M3 d = M3::Zero();
    d(0, 0) = y0;
    d(1, 1) = y1;
    d(2, 2) = y2;
    return t * d * t.inverse();
  }

  static V3 balanced(Complex v) {
    const Complex a = std::polar(1.0, 2.0 * std::numbers::pi / 3.0);
    return V3(v, v * a * a, v * a);
  }

 private:
  struct Fault {
    int row;
    Complex z;
  };

  int bus(const std::string& id) const { return static_cast<int>(*net_.bus_index(id)); }

  bool closed_branch(const dgrel::SwitchState& st, const std::string& id) const {
    for (std::size_t d = 0; d < net_.devices.size(); ++d)
      if (net_.devices[d].branch == id && st.device_open[d]) return false;
    return true;
  }
  bool closed_source(const dgrel::SwitchState& st, const std::string& id) const { return closed_branch(st, id); }

  void stamp_series(int a, int b, const M3& y) {
    y_.block<3, 3>(3 * a, 3 * a) += y;
    y_.block<3, 3>(3 * b, 3 * b) += y;
    y_.block<3, 3>(3 * a, 3 * b) -= y;
    y_.block<3, 3>(3 * b, 3 * a) -= y;
  }
  void stamp_shunt(int a, const M3& y, const V3& inj) {
    y_.block<3, 3>(3 * a, 3 * a) += y;
    inj_.segment<3>(3 * a) += inj;
  }

  const dgrel::Network& net_;
  int n_;
  Mat y_;
  Vec inj_;
  Vec v_;
  std::optional<Fault> fault_;
  Complex i_fault_{};
};

}  // namespace testsupport
