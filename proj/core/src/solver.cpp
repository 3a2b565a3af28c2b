#include "dgrel/solver.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

#include "dgrel/errors.hpp"

namespace dgrel {

namespace {

using Vec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXcd;
constexpr Complex kJ{0.0, 1.0};

struct Topology {
  std::vector<bool> branch_closed;
  std::vector<bool> source_closed;
  std::vector<bool> energized;
  std::vector<int> component;
  std::optional<std::size_t> dg_bus;  // set when the DG is online and placed
};

Topology make_topology(const Network& net, const SwitchState& state) {
  Topology t;
  t.branch_closed.assign(net.branches.size(), true);
  t.source_closed.assign(net.sources.size(), true);
  for (std::size_t d = 0; d < net.devices.size(); ++d) {
    if (d >= state.device_open.size() || !state.device_open[d]) continue;
    if (auto b = net.branch_index(net.devices[d].branch)) t.branch_closed[*b] = false;
    else if (auto s = net.source_index(net.devices[d].branch)) t.source_closed[*s] = false;
  }
  t.component = bus_components(net, state);
  if (state.dg_online && net.dg && net.dg->bus) t.dg_bus = net.bus_index(*net.dg->bus);
  const auto live = energized_buses(net, state, true);
  t.energized.resize(net.buses.size());
  for (std::size_t i = 0; i < net.buses.size(); ++i) t.energized[i] = live.count(net.buses[i].id) > 0;
  return t;
}

bool component_has_grid(const Network& net, const Topology& t, int comp) {
  for (std::size_t s = 0; s < net.sources.size(); ++s)
    if (t.source_closed[s] && t.component[*net.bus_index(net.sources[s].bus)] == comp) return true;
  return false;
}

// Row numbering for the buses that take part in one sequence network.
struct Rows {
  std::vector<int> of_bus;
  int n = 0;
};

Rows rows_for(const Network& net, const Topology& t, Sequence seq) {
  Rows r;
  r.of_bus.assign(net.buses.size(), -1);
  std::vector<bool> keep = t.energized;
  if (seq == Sequence::zero) {
    // Only islands with a zero-sequence ground path carry zero-sequence current.
    std::set<int> grounded;
    for (std::size_t s = 0; s < net.sources.size(); ++s)
      if (t.source_closed[s]) grounded.insert(t.component[*net.bus_index(net.sources[s].bus)]);
    if (t.dg_bus && net.dg->x0_pu) grounded.insert(t.component[*t.dg_bus]);
    for (std::size_t i = 0; i < keep.size(); ++i) keep[i] = keep[i] && grounded.count(t.component[i]);
  }
  for (std::size_t i = 0; i < keep.size(); ++i)
    if (keep[i]) r.of_bus[i] = r.n++;
  return r;
}

Complex branch_z(const Branch& b, Sequence seq) { return seq == Sequence::zero ? b.z0 : b.z1; }
Complex source_z(const GridSource& s, Sequence seq) { return seq == Sequence::zero ? s.z0_th : s.z1_th; }

Complex source_emf(const Network& net, const GridSource& s) {
  const double v = net.buses[*net.bus_index(s.bus)].phase_volts() * s.e_pu;
  return std::polar(v, s.angle_deg * std::numbers::pi / 180.0);
}

Mat build_y(const Network& net, const Topology& t, const Rows& rows, Sequence seq, bool dg_shunt) {
  Mat y = Mat::Zero(rows.n, rows.n);
  for (std::size_t i = 0; i < net.branches.size(); ++i) {
    if (!t.branch_closed[i]) continue;
    const auto& b = net.branches[i];
    const int a = rows.of_bus[*net.bus_index(b.from_bus)];
    const int c = rows.of_bus[*net.bus_index(b.to_bus)];
    if (a < 0 || c < 0) continue;
    const Complex yb = 1.0 / branch_z(b, seq);
    y(a, a) += yb;
    y(c, c) += yb;
    y(a, c) -= yb;
    y(c, a) -= yb;
  }
  for (std::size_t s = 0; s < net.sources.size(); ++s) {
    if (!t.source_closed[s]) continue;
    const int a = rows.of_bus[*net.bus_index(net.sources[s].bus)];
    if (a >= 0) y(a, a) += 1.0 / source_z(net.sources[s], seq);
  }
  if (seq != Sequence::zero) {
    for (const auto& l : net.loads) {
      const int a = rows.of_bus[*net.bus_index(l.bus)];
      if (a >= 0) y(a, a) += load_admittance(net, l);
    }
  }
  if (dg_shunt && t.dg_bus) {
    const int a = rows.of_bus[*t.dg_bus];
    if (auto z = dg_impedance(net, seq); z && a >= 0) y(a, a) += 1.0 / *z;
  }
  return y;
}

Eigen::PartialPivLU<Mat> factor(const Mat& y) {
  Eigen::PartialPivLU<Mat> lu(y);
  if (y.rows() > 0 && !(lu.rcond() > 1e-13)) throw SolverError("singular nodal admittance matrix");
  return lu;
}

Vec grid_injection(const Network& net, const Topology& t, const Rows& rows) {
  Vec inj = Vec::Zero(rows.n);
  for (std::size_t s = 0; s < net.sources.size(); ++s) {
    if (!t.source_closed[s]) continue;
    const auto& src = net.sources[s];
    const int a = rows.of_bus[*net.bus_index(src.bus)];
    if (a >= 0) inj(a) += source_emf(net, src) / src.z1_th;
  }
  return inj;
}

std::vector<Complex> scatter(const Rows& rows, const Vec& v, std::size_t nbus) {
  std::vector<Complex> out(nbus, Complex{});
  for (std::size_t i = 0; i < nbus; ++i)
    if (rows.of_bus[i] >= 0) out[i] = v(rows.of_bus[i]);
  return out;
}

struct SequenceVoltages {
  std::array<std::vector<Complex>, 3> v;  // zero, positive, negative
  std::vector<Complex> polarizing;
  Complex dg_emf;
  bool dg_constant_power = false;
  Complex dg_current_cp;  // injection when constant power
  Complex fault_current;
  std::optional<std::size_t> fault_bus;
  Sequence fault_seq_mode = Sequence::positive;
  FaultType fault_type = FaultType::slg;
};

PhasorSolution assemble(const Network& net, const Topology& t, const SequenceVoltages& sv) {
  const std::size_t nb = net.buses.size();
  PhasorSolution sol;
  sol.energized = t.energized;
  sol.v_seq.resize(nb);
  sol.v_bus.resize(nb);
  sol.v_polarizing = sv.polarizing;
  for (std::size_t i = 0; i < nb; ++i) {
    sol.v_seq[i] = {sv.v[0][i], sv.v[1][i], sv.v[2][i]};
    sol.v_bus[i] = sv.v[0][i] + sv.v[1][i] + sv.v[2][i];
  }
  // Per-sequence nodal mismatch: sum of currents leaving each bus.
  std::array<std::vector<Complex>, 3> mismatch;
  std::vector<double> injection(nb, 0.0);
  for (auto& m : mismatch) m.assign(nb, Complex{});

  sol.i_branch.assign(net.branches.size(), Complex{});
  for (std::size_t i = 0; i < net.branches.size(); ++i) {
    if (!t.branch_closed[i]) continue;
    const auto& b = net.branches[i];
    const auto f = *net.bus_index(b.from_bus);
    const auto to = *net.bus_index(b.to_bus);
    if (!t.energized[f] && !t.energized[to]) continue;
    Complex total{};
    for (int k = 0; k < 3; ++k) {
      const Complex ik = (sv.v[k][f] - sv.v[k][to]) / branch_z(b, static_cast<Sequence>(k));
      mismatch[k][f] += ik;
      mismatch[k][to] -= ik;
      total += ik;
    }
    sol.i_branch[i] = total;
  }
  sol.i_source.assign(net.sources.size(), Complex{});
  for (std::size_t s = 0; s < net.sources.size(); ++s) {
    if (!t.source_closed[s]) continue;
    const auto& src = net.sources[s];
    const auto b = *net.bus_index(src.bus);
    const Complex i1 = (source_emf(net, src) - sv.v[1][b]) / src.z1_th;
    const Complex i2 = -sv.v[2][b] / src.z1_th;
    const Complex i0 = -sv.v[0][b] / src.z0_th;
    mismatch[1][b] -= i1;
    mismatch[2][b] -= i2;
    mismatch[0][b] -= i0;
    injection[b] = std::max(injection[b], std::abs(i1));
    sol.i_source[s] = i0 + i1 + i2;
  }
  for (const auto& l : net.loads) {
    const auto b = *net.bus_index(l.bus);
    if (!t.energized[b]) continue;
    const Complex y = load_admittance(net, l);
    mismatch[1][b] += y * sv.v[1][b];
    mismatch[2][b] += y * sv.v[2][b];
  }
  if (t.dg_bus) {
    const auto b = *t.dg_bus;
    Complex i1;
    if (sv.dg_constant_power) {
      i1 = sv.dg_current_cp;
    } else {
      i1 = (sv.dg_emf - sv.v[1][b]) / *dg_impedance(net, Sequence::positive);
    }
    const Complex i2 = -sv.v[2][b] / *dg_impedance(net, Sequence::negative);
    Complex i0{};
    if (auto z0 = dg_impedance(net, Sequence::zero)) i0 = -sv.v[0][b] / *z0;
    mismatch[1][b] -= i1;
    mismatch[2][b] -= i2;
    mismatch[0][b] -= i0;
    injection[b] = std::max(injection[b], std::abs(i1));
    sol.i_dg = i0 + i1 + i2;
    sol.dg_emf = sv.dg_constant_power ? sv.v[1][b] + i1 * *dg_impedance(net, Sequence::positive) : sv.dg_emf;
  }
  if (sv.fault_bus) {
    const auto b = *sv.fault_bus;
    sol.fault_applied = true;
    sol.i_fault = sv.fault_current;
    if (sv.fault_type == FaultType::slg) {
      for (int k = 0; k < 3; ++k) mismatch[k][b] += sv.fault_current / 3.0;
    } else {
      mismatch[1][b] += sv.fault_current;
    }
    injection[b] = std::max(injection[b], std::abs(sv.fault_current));
  }
  for (std::size_t i = 0; i < nb; ++i) {
    for (int k = 0; k < 3; ++k) sol.kcl_residual = std::max(sol.kcl_residual, std::abs(mismatch[k][i]));
    sol.max_injection = std::max(sol.max_injection, injection[i]);
  }

  sol.i_device.resize(net.devices.size());
  for (std::size_t d = 0; d < net.devices.size(); ++d) {
    const auto& dev = net.devices[d];
    Complex i{};
    if (auto b = net.branch_index(dev.branch)) {
      i = net.branches[*b].from_bus == dev.forward_from ? sol.i_branch[*b] : -sol.i_branch[*b];
    } else if (auto s = net.source_index(dev.branch)) {
      i = sol.i_source[*s];
    }
    const auto pol = sol.v_polarizing[*net.bus_index(dev.forward_from)];
    sol.i_device[d] = {std::abs(i), std::abs(i) > 0.0 && is_forward(i, pol), i};
  }
  return sol;
}

struct PrefaultState {
  Topology topo;
  Rows rows1;
  Vec v1;
  Complex dg_emf;
  bool constant_power = false;
  Complex dg_current;
  int iterations = 0;
};

PrefaultState solve_positive(const Network& net, const SwitchState& state, std::optional<Complex> dg_emf) {
  PrefaultState p;
  p.topo = make_topology(net, state);
  p.rows1 = rows_for(net, p.topo, Sequence::positive);
  if (p.rows1.n == 0) {
    p.v1 = Vec();
    return p;
  }
  const bool dg_on = p.topo.dg_bus.has_value();
  p.constant_power = dg_on && !dg_emf;
  if (p.constant_power && !component_has_grid(net, p.topo, p.topo.component[*p.topo.dg_bus]))
    throw SolverError("constant-power DG in an island without a grid source");

  const Mat y = build_y(net, p.topo, p.rows1, Sequence::positive, dg_on && !p.constant_power);
  const auto lu = factor(y);
  Vec inj = grid_injection(net, p.topo, p.rows1);
  if (!dg_on) {
    p.v1 = lu.solve(inj);
    return p;
  }
  const int row = p.rows1.of_bus[*p.topo.dg_bus];
  const auto zdg = *dg_impedance(net, Sequence::positive);
  if (!p.constant_power) {
    p.dg_emf = *dg_emf;
    inj(row) += *dg_emf / zdg;
    p.v1 = lu.solve(inj);
    return p;
  }
  const auto& dg = *net.dg;
  const double vph = net.buses[*p.topo.dg_bus].phase_volts();
  const Complex s_phase = Complex(dg.p_mw, dg.q_mvar()) * 1e6 / 3.0;
  Vec v = lu.solve(inj);
  Complex i_dg{};
  for (p.iterations = 1; p.iterations <= 100; ++p.iterations) {
    i_dg = std::conj(s_phase / v(row));
    Vec rhs = inj;
    rhs(row) += i_dg;
    Vec next = lu.solve(rhs);
    const double change = (next - v).cwiseAbs().maxCoeff() / vph;
    v = std::move(next);
    if (change < 1e-6) break;
  }
  if (p.iterations > 100) throw SolverError("DG power iteration did not converge");
  i_dg = std::conj(s_phase / v(row));
  p.v1 = v;
  p.dg_current = i_dg;
  p.dg_emf = v(row) + i_dg * zdg;
  return p;
}

}  // namespace

bool is_forward(Complex current, Complex polarizing) {
  if (std::abs(current) == 0.0) return false;
  if (std::abs(polarizing) == 0.0) polarizing = 1.0;
  const Complex rot = std::polar(1.0, std::numbers::pi / 4.0);
  return (current * std::conj(polarizing) * rot).real() > 0.0;
}

std::optional<Complex> dg_impedance(const Network& net, Sequence seq) {
  if (!net.dg || !net.dg->bus) return std::nullopt;
  const auto& dg = *net.dg;
  const double kv = net.buses[*net.bus_index(*dg.bus)].nominal_kv;
  const double zbase = kv * kv / dg.mva_base;
  if (seq == Sequence::zero) {
    if (!dg.x0_pu) return std::nullopt;
    return kJ * (*dg.x0_pu * zbase);
  }
  return kJ * (dg.xd_2prime_pu * zbase);
}

Complex load_admittance(const Network& net, const Load& load) {
  const double v = net.buses[*net.bus_index(load.bus)].phase_volts();
  const double s = load.s_kva * 1000.0 / 3.0;
  const Complex s_phase(s * load.pf, s * std::sqrt(std::max(0.0, 1.0 - load.pf * load.pf)));
  return std::conj(s_phase) / (v * v);
}

PhasorSolution solve_steady_state(const Network& net, const SwitchState& state, std::optional<Complex> dg_emf) {
  auto pre = solve_positive(net, state, dg_emf);
  const std::size_t nb = net.buses.size();
  SequenceVoltages sv;
  sv.v[0].assign(nb, Complex{});
  sv.v[2].assign(nb, Complex{});
  sv.v[1] = pre.rows1.n ? scatter(pre.rows1, pre.v1, nb) : std::vector<Complex>(nb, Complex{});
  sv.polarizing = sv.v[1];
  sv.dg_emf = pre.dg_emf;
  sv.dg_constant_power = pre.constant_power;
  sv.dg_current_cp = pre.dg_current;
  auto sol = assemble(net, pre.topo, sv);
  sol.dg_iterations = pre.iterations;
  return sol;
}

PhasorSolution solve_fault(const Network& net, const SwitchState& state, const FaultSpec& fault,
                           std::optional<Complex> dg_emf) {
  const auto fb = net.bus_index(fault.bus);
  if (!fb) throw SolverError("fault on unknown bus '" + fault.bus + "'");
  if (state.dg_online && net.dg && net.dg->bus && !dg_emf) {
    dg_emf = solve_positive(net, state, std::nullopt).dg_emf;
  }
  auto pre = solve_positive(net, state, dg_emf);
  const auto& t = pre.topo;
  const std::size_t nb = net.buses.size();
  SequenceVoltages sv;
  sv.v[0].assign(nb, Complex{});
  sv.v[2].assign(nb, Complex{});
  sv.v[1] = pre.rows1.n ? scatter(pre.rows1, pre.v1, nb) : std::vector<Complex>(nb, Complex{});
  sv.polarizing = sv.v[1];
  sv.dg_emf = pre.dg_emf;
  if (!t.energized[*fb]) {
    auto sol = assemble(net, t, sv);
    sol.fault_on_dead_bus = true;
    return sol;
  }

  const bool dg_on = t.dg_bus.has_value();
  const Complex vf = sv.v[1][*fb];
  const Complex zf = fault.z_fault;
  auto column = [&](Sequence seq, const Rows& rows) -> std::optional<Vec> {
    if (rows.of_bus[*fb] < 0) return std::nullopt;
    const Mat y = build_y(net, t, rows, seq, dg_on);
    Vec e = Vec::Zero(rows.n);
    e(rows.of_bus[*fb]) = 1.0;
    return factor(y).solve(e);
  };
  const Rows& r1 = pre.rows1;
  const auto z1col = column(Sequence::positive, r1);
  const Complex z1 = (*z1col)(r1.of_bus[*fb]);

  if (fault.type == FaultType::three_phase) {
    const Complex i_f = vf / (z1 + zf);
    Vec dv = -(*z1col) * i_f;
    for (std::size_t i = 0; i < nb; ++i)
      if (r1.of_bus[i] >= 0) sv.v[1][i] += dv(r1.of_bus[i]);
    sv.fault_current = i_f;
  } else {
    const Rows r0 = rows_for(net, t, Sequence::zero);
    const auto z0col = column(Sequence::zero, r0);
    const auto z2col = column(Sequence::negative, r1);
    const Complex z2 = (*z2col)(r1.of_bus[*fb]);
    Complex i_f{};
    if (z0col) {
      const Complex z0 = (*z0col)(r0.of_bus[*fb]);
      i_f = 3.0 * vf / (z1 + z2 + z0 + 3.0 * zf);
      for (std::size_t i = 0; i < nb; ++i) {
        if (r0.of_bus[i] >= 0) sv.v[0][i] = -(*z0col)(r0.of_bus[i]) * i_f / 3.0;
      }
    }
    for (std::size_t i = 0; i < nb; ++i) {
      if (r1.of_bus[i] < 0) continue;
      sv.v[1][i] -= (*z1col)(r1.of_bus[i]) * i_f / 3.0;
      sv.v[2][i] = -(*z2col)(r1.of_bus[i]) * i_f / 3.0;
    }
    sv.fault_current = i_f;
  }
  sv.fault_bus = *fb;
  sv.fault_type = fault.type;
  return assemble(net, t, sv);
}

Complex thevenin_at(const Network& net, const SwitchState& state, const std::string& bus, Sequence seq) {
  const auto b = net.bus_index(bus);
  if (!b) throw SolverError("unknown bus '" + bus + "'");
  const auto t = make_topology(net, state);
  if (!t.energized[*b]) throw SolverError("bus '" + bus + "' is not energized");
  const Rows rows = rows_for(net, t, seq == Sequence::zero ? Sequence::zero : Sequence::positive);
  if (rows.of_bus[*b] < 0) throw SolverError("no zero-sequence path at bus '" + bus + "'");
  const Mat y = build_y(net, t, rows, seq, t.dg_bus.has_value());
  Vec e = Vec::Zero(rows.n);
  e(rows.of_bus[*b]) = 1.0;
  return factor(y).solve(e)(rows.of_bus[*b]);
}

std::map<std::string, double> backfeed_currents(const Network& net, const std::string& dg_bus) {
  const Network placed = with_dg_at(net, dg_bus);
  const bool online = placed.dg.has_value();
  const auto sol = solve_steady_state(placed, SwitchState::all_closed(placed, online));
  std::map<std::string, double> out;
  for (std::size_t d = 0; d < placed.devices.size(); ++d) {
    if (placed.devices[d].kind != DeviceKind::fuse) continue;
    const auto& c = sol.i_device[d];
    out[placed.devices[d].id] = c.forward ? 0.0 : c.amps;
  }
  return out;
}

}  // namespace dgrel
