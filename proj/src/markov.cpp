#include "omk/markov.hpp"

#include <cmath>
#include <numbers>

#include "omk/errors.hpp"

namespace omk {

namespace {
const cplx I{0.0, 1.0};
constexpr double kPi = std::numbers::pi;

template <class T>
class RingBuffer {
 public:
  explicit RingBuffer(std::size_t capacity) : data_(capacity) {}
  void push(const T& v) {
    data_[head_ % data_.size()] = v;
    ++head_;
  }
  // Element with absolute index i (0 = first pushed); zero before the start.
  T at(long i) const {
    if (i < 0) return T{};
    const auto u = static_cast<std::size_t>(i);
    if (u >= head_ || head_ - u > data_.size())
      throw std::logic_error("delay line read outside its window");
    return data_[u % data_.size()];
  }

 private:
  std::vector<T> data_;
  std::size_t head_ = 0;
};

struct EmitterState {
  cplx a;
  double emitted;
};

// Emitter alone: f_in = 0, so it only decays into the channel.
EmitterState emitter_rhs(const NodeDrive& d, double t, const EmitterState& y, cplx& f_out) {
  const double g = d.gamma(t);
  const cplx e = std::exp(-I * d.theta(t));
  f_out = std::sqrt(g) * e * y.a;
  return {-0.5 * g * y.a, std::norm(f_out)};
}

EmitterState rk4_emitter(const NodeDrive& d, double t, const EmitterState& y, double h,
                         cplx& f_end) {
  cplx f;
  auto add = [](const EmitterState& a, const EmitterState& k, double s) {
    return EmitterState{a.a + s * k.a, a.emitted + s * k.emitted};
  };
  const auto k1 = emitter_rhs(d, t, y, f);
  const auto k2 = emitter_rhs(d, t + 0.5 * h, add(y, k1, 0.5 * h), f);
  const auto k3 = emitter_rhs(d, t + 0.5 * h, add(y, k2, 0.5 * h), f);
  const auto k4 = emitter_rhs(d, t + h, add(y, k3, h), f);
  EmitterState out{y.a + h / 6.0 * (k1.a + 2.0 * k2.a + 2.0 * k3.a + k4.a),
                   y.emitted + h / 6.0 * (k1.emitted + 2.0 * k2.emitted + 2.0 * k3.emitted + k4.emitted)};
  emitter_rhs(d, t + h, out, f_end);
  return out;
}

void check_channel(const MarkovChannel& ch, double dt) {
  if (!(ch.v_g > 0.0)) throw NumericalError("channel group velocity must be positive");
  if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");
  if (ch.n_r <= ch.n_e) throw InvalidArgument("receiver must sit downstream of the emitter");
  if (dt > ch.delay())
    throw StepSizeError("dt exceeds the propagation delay", ch.delay());
}

std::size_t delay_steps(const MarkovChannel& ch, double dt) {
  return static_cast<std::size_t>(std::max(1L, std::lround(ch.delay() / dt)));
}

// Field entering the receiver on the dt/2 grid, up to t_end.
std::vector<cplx> incoming_field(const MarkovChannel& ch, const NodeDrive& emitter,
                                 double t_end, double dt) {
  check_channel(ch, dt);
  const std::size_t D = delay_steps(ch, dt);
  const double delay = D * dt;
  const cplx carrier = std::exp(I * ch.phase()) * std::exp(-0.5 * ch.kappa_E * delay);
  const auto steps = static_cast<std::size_t>(std::ceil(t_end / dt - 1e-9));
  std::vector<cplx> out_e(2 * steps + 1);
  EmitterState y{1.0, 0.0};
  cplx f;
  emitter_rhs(emitter, 0.0, y, f);
  out_e[0] = f;
  const double h = 0.5 * dt;
  for (std::size_t j = 0; j < 2 * steps; ++j) {
    y = rk4_emitter(emitter, j * h, y, h, f);
    out_e[j + 1] = f;
  }
  std::vector<cplx> fin(out_e.size());
  for (std::size_t j = 0; j < fin.size(); ++j)
    fin[j] = j >= 2 * D ? carrier * out_e[j - 2 * D] : cplx{};
  return fin;
}
}  // namespace

double MarkovChannel::delay() const { return 2.0 * (n_r - n_e) / v_g; }
double MarkovChannel::phase() const { return 2.0 * k_0 * (n_r - n_e); }

MarkovChannel make_channel(const EdgeStateProfile& edge, int n_e, int n_r, Basis s_e, Basis s_r) {
  MarkovChannel ch;
  ch.v_g = edge.v_g;
  ch.k_0 = edge.k_x;
  ch.u_s_e = edge.u[static_cast<int>(s_e)];
  ch.u_s_r = edge.u[static_cast<int>(s_r)];
  ch.kappa_E = edge.kappa_E;
  ch.n_e = n_e;
  ch.n_r = n_r;
  ch.phi_edge = edge.phi.empty() ? 0.0 : edge.phi[0];
  return ch;
}

double transfer_rate(cplx g_sp, cplx u_s, double v_g) {
  if (v_g == 0.0) throw NumericalError("flat band: group velocity vanishes");
  if (v_g < 0.0) throw InvalidArgument("transfer rate needs a positive group velocity");
  return 2.0 * std::norm(u_s) * std::norm(g_sp) / v_g;
}

NodeDrive NodeDrive::off() {
  return {[](double) { return 0.0; }, [](double) { return 0.0; }};
}

NodeDrive NodeDrive::from_coupling(const MarkovChannel& ch, std::function<cplx(double)> g,
                                   cplx u_s) {
  const double v = ch.v_g, phi = ch.phi_edge;
  return {[g, u_s, v](double t) { return transfer_rate(g(t), u_s, v); },
          [g, phi](double t) { return std::arg(g(t)) + phi; }};
}

NodeDrive sampled_drive(double dt, std::vector<double> gamma, std::vector<double> theta) {
  if (gamma.empty() || gamma.size() != theta.size()) throw InvalidArgument("bad drive table");
  for (std::size_t i = 1; i < theta.size(); ++i) {
    double d = theta[i] - theta[i - 1];
    d -= 2.0 * kPi * std::round(d / (2.0 * kPi));
    theta[i] = theta[i - 1] + d;
  }
  auto interp = [dt](const std::vector<double>& v, double t) {
    const double x = t / dt;
    if (x <= 0.0) return v.front();
    const auto i = static_cast<std::size_t>(x);
    if (i + 1 >= v.size()) return v.back();
    const double f = x - i;
    return (1.0 - f) * v[i] + f * v[i + 1];
  };
  auto g = std::make_shared<std::vector<double>>(std::move(gamma));
  auto th = std::make_shared<std::vector<double>>(std::move(theta));
  return {[g, interp](double t) { return interp(*g, t); },
          [th, interp](double t) { return interp(*th, t); }};
}

MarkovTrajectory simulate_markov(const MarkovChannel& ch, const NodeDrive& emitter,
                                 const NodeDrive& receiver, double t_end, double dt) {
  check_channel(ch, dt);
  MarkovTrajectory tr;
  const std::size_t D = delay_steps(ch, dt);
  tr.delay_steps = D;
  tr.delay = D * dt;
  tr.delay_rounding = tr.delay - ch.delay();
  const cplx carrier = std::exp(I * ch.phase()) * std::exp(-0.5 * ch.kappa_E * tr.delay);
  const auto steps = static_cast<std::size_t>(std::ceil(t_end / dt - 1e-9));
  const double h = 0.5 * dt;

  RingBuffer<cplx> line(2 * D + 4);
  EmitterState e{1.0, 0.0};
  cplx f_e;
  emitter_rhs(emitter, 0.0, e, f_e);
  line.push(f_e);

  struct RecState {
    cplx a;
    double absorbed, passed;
  };
  auto rec_rhs = [&](double t, const RecState& y, cplx fin, cplx& fout) {
    const double g = receiver.gamma(t);
    const cplx eth = std::exp(I * receiver.theta(t));
    const double sg = std::sqrt(g);
    fout = fin + sg * std::conj(eth) * y.a;
    return RecState{-0.5 * g * y.a - sg * eth * fin, std::norm(fin), std::norm(fout)};
  };
  auto add = [](const RecState& a, const RecState& k, double s) {
    return RecState{a.a + s * k.a, a.absorbed + s * k.absorbed, a.passed + s * k.passed};
  };
  auto fin_at = [&](long half_index) { return carrier * line.at(half_index - 2 * static_cast<long>(D)); };

  RecState r{0.0, 0.0, 0.0};
  auto push_record = [&](double t, long half) {
    cplx fout;
    const cplx fin = fin_at(half);
    rec_rhs(t, r, fin, fout);
    tr.t.push_back(t);
    tr.a_e.push_back(e.a);
    tr.a_r.push_back(r.a);
    tr.f_out_e.push_back(line.at(half));
    tr.f_in_r.push_back(fin);
    tr.f_out_r.push_back(fout);
    tr.emitted.push_back(e.emitted);
    tr.absorbed.push_back(r.absorbed);
    tr.passed.push_back(r.passed);
  };
  push_record(0.0, 0);

  for (std::size_t k = 0; k < steps; ++k) {
    const double t = k * dt;
    e = rk4_emitter(emitter, t, e, h, f_e);
    line.push(f_e);
    e = rk4_emitter(emitter, t + h, e, h, f_e);
    line.push(f_e);

    const long j = 2 * static_cast<long>(k);
    const cplx f0 = fin_at(j), fh = fin_at(j + 1), f1 = fin_at(j + 2);
    cplx fo;
    const auto k1 = rec_rhs(t, r, f0, fo);
    const auto k2 = rec_rhs(t + h, add(r, k1, h), fh, fo);
    const auto k3 = rec_rhs(t + h, add(r, k2, h), fh, fo);
    const auto k4 = rec_rhs(t + dt, add(r, k3, dt), f1, fo);
    r = {r.a + dt / 6.0 * (k1.a + 2.0 * k2.a + 2.0 * k3.a + k4.a),
         r.absorbed + dt / 6.0 * (k1.absorbed + 2.0 * k2.absorbed + 2.0 * k3.absorbed + k4.absorbed),
         r.passed + dt / 6.0 * (k1.passed + 2.0 * k2.passed + 2.0 * k3.passed + k4.passed)};
    push_record(t + dt, j + 2);
  }
  return tr;
}

NodeDrive darkstate_receiver_pulse(const MarkovChannel& ch, const NodeDrive& emitter,
                                   double t_end, double dt, double gamma_cap) {
  if (!(gamma_cap > 0.0)) throw InvalidArgument("gamma cap must be positive");
  const auto fin = incoming_field(ch, emitter, t_end, dt);
  const double h = 0.5 * dt;
  std::vector<double> gamma(fin.size(), 0.0), theta(fin.size(), 0.0);
  double cum = 0.0;
  for (std::size_t j = 0; j < fin.size(); ++j) {
    if (j > 0) cum += 0.5 * h * (std::norm(fin[j]) + std::norm(fin[j - 1]));
    const double f2 = std::norm(fin[j]);
    if (f2 == 0.0) continue;
    gamma[j] = cum < 1e-9 ? gamma_cap : std::min(gamma_cap, f2 / cum);
    theta[j] = kPi - std::arg(fin[j]);
  }
  return sampled_drive(h, std::move(gamma), std::move(theta));
}

NodeDrive matched_phase_receiver(const MarkovChannel& ch, const NodeDrive& emitter,
                                 std::function<double(double)> gamma, double t_end, double dt) {
  const auto fin = incoming_field(ch, emitter, t_end, dt);
  const double h = 0.5 * dt;
  std::vector<double> theta(fin.size(), 0.0);
  for (std::size_t j = 0; j < fin.size(); ++j)
    theta[j] = fin[j] == cplx{} ? (j ? theta[j - 1] : 0.0) : kPi - std::arg(fin[j]);
  auto th = sampled_drive(h, std::vector<double>(fin.size(), 0.0), std::move(theta)).theta;
  return {std::move(gamma), std::move(th)};
}

CsvTable markov_table(const MarkovTrajectory& tr) {
  CsvTable t({"t", "abs_a_e", "abs_a_r", "re_a_e", "im_a_e", "re_a_r", "im_a_r", "abs_f_out_e",
              "abs_f_in_r", "abs_f_out_r", "emitted", "absorbed", "passed"});
  for (std::size_t i = 0; i < tr.t.size(); ++i) {
    t.add(tr.t[i]).add(std::abs(tr.a_e[i])).add(std::abs(tr.a_r[i]));
    t.add(tr.a_e[i].real()).add(tr.a_e[i].imag()).add(tr.a_r[i].real()).add(tr.a_r[i].imag());
    t.add(std::abs(tr.f_out_e[i])).add(std::abs(tr.f_in_r[i])).add(std::abs(tr.f_out_r[i]));
    t.add(tr.emitted[i]).add(tr.absorbed[i]).add(tr.passed[i]);
    t.end_row();
  }
  return t;
}

MarkovComparison compare_with_markov(const TransferScenario& sc, const TransferResult& exact,
                                     double dt) {
  const Site& se = sc.lattice.sites.at(sc.emitter.site_index);
  const Site& sr = sc.lattice.sites.at(sc.receiver.site_index);
  if (se.m != 0 || sr.m != 0)
    throw InvalidArgument("Markov comparison needs both nodes on the upper edge row");
  MarkovComparison cmp;
  cmp.channel = make_channel(sc.channel.profile, se.n, sr.n, se.s, sr.s);
  const MarkovChannel& ch = cmp.channel;

  const PulseSchedule ge = sc.emitter.pulse, gr = exact.receiver_pulse;
  const NodeDrive emitter = NodeDrive::from_coupling(ch, [ge](double t) { return ge(t); }, ch.u_s_e);
  const cplx u_r = ch.u_s_r;
  const double v = ch.v_g;
  const NodeDrive receiver = matched_phase_receiver(
      ch, emitter, [gr, u_r, v](double t) { return transfer_rate(gr(t), u_r, v); }, sc.t_end, dt);
  cmp.markov = simulate_markov(ch, emitter, receiver, sc.t_end, dt);

  const auto& m = cmp.markov;
  auto at = [&](const std::vector<cplx>& a, double t) {
    const double x = t / dt;
    const auto i = std::min(static_cast<std::size_t>(x), m.t.size() - 1);
    if (i + 1 >= m.t.size()) return std::abs(a.back());
    const double f = x - i;
    return (1.0 - f) * std::abs(a[i]) + f * std::abs(a[i + 1]);
  };
  for (std::size_t i = 0; i < exact.times.size(); ++i) {
    const double t = exact.times[i];
    cmp.t.push_back(t);
    cmp.dev_e.push_back(std::abs(std::abs(exact.a_e[i]) - at(m.a_e, t)));
    cmp.dev_r.push_back(std::abs(std::abs(exact.a_r[i]) - at(m.a_r, t)));
    cmp.max_dev_e = std::max(cmp.max_dev_e, cmp.dev_e.back());
    cmp.max_dev_r = std::max(cmp.max_dev_r, cmp.dev_r.back());
  }
  return cmp;
}

}  // namespace omk
