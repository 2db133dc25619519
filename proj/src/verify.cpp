#include "delaysof/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "delaysof/errors.hpp"
#include "delaysof/selectors.hpp"

namespace delaysof {

namespace {

constexpr double kDivergence = 1e12;
constexpr std::uint64_t kHistorySalt = 0x9E3779B97F4A7C15ULL;

void require(bool ok, const char* what) {
  if (!ok) throw ContractError(what);
}

}  // namespace

Eigen::MatrixXd lift_constant_delay(const PlantModel& plant, const FeedbackGain& K, int d) {
  K.check_compatible(plant);
  require(d >= 0, "lift_constant_delay: d must be >= 0");
  const int n = plant.n();
  const Eigen::MatrixXd BKC = plant.B() * K.K() * plant.C();
  if (d == 0) return plant.A() + BKC;
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n * (d + 1), n * (d + 1));
  L.block(0, 0, n, n) = plant.A();
  L.block(0, n * d, n, n) += BKC;
  L.block(n, 0, n * d, n * d).setIdentity();
  return L;
}

int DelayRng::uniform_int(int a, int b) {
  require(a <= b, "uniform_int: empty range");
  const std::uint64_t span = static_cast<std::uint64_t>(b - a) + 1;
  const std::uint64_t reject_below = (0 - span) % span;  // 2^64 mod span
  std::uint64_t r;
  do {
    r = engine_();
  } while (r < reject_below);
  return a + static_cast<int>(r % span);
}

double DelayRng::uniform_real(double a, double b) {
  const double unit = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  return a + (b - a) * unit;
}

std::vector<int> random_delays(const DelayBounds& bounds, int length, std::uint64_t seed) {
  require(length >= 1, "random_delays: length must be >= 1");
  DelayRng rng(seed);
  std::vector<int> d(static_cast<size_t>(length));
  for (auto& v : d) v = rng.uniform_int(bounds.d_min(), bounds.d_max());
  return d;
}

std::vector<int> bang_bang_delays(const DelayBounds& bounds, int length, int variant) {
  require(length >= 1, "bang_bang_delays: length must be >= 1");
  require(variant == 0 || variant == 1, "bang_bang_delays: variant is 0 or 1");
  const int hold = variant == 0 ? 1 : bounds.d_max() + 1;
  std::vector<int> d(static_cast<size_t>(length));
  for (int k = 0; k < length; ++k) d[static_cast<size_t>(k)] = (k / hold) % 2 == 0 ? bounds.d_min() : bounds.d_max();
  return d;
}

Eigen::VectorXd Trajectory::x_at(int k) const {
  require(k >= -history && k <= steps, "trajectory: state index outside the recorded range");
  return x.col(k + history);
}

Eigen::VectorXd Trajectory::u_at(int k) const {
  require(k >= -history && k < steps, "trajectory: input index outside the recorded range");
  return u.col(k + history);
}

Trajectory simulate(const PlantModel& plant, const FeedbackGain& K, const DelayBounds& bounds,
                    const std::vector<int>& d_seq, const std::vector<Eigen::VectorXd>& phi) {
  K.check_compatible(plant);
  const int h = bounds.d_max();
  require(static_cast<int>(phi.size()) == h + 1, "simulate: phi must cover [-d_max, 0]");
  for (int dk : d_seq) require(bounds.contains(dk), "simulate: delay outside bounds");

  const int T = static_cast<int>(d_seq.size());
  const int n = plant.n();
  Trajectory tr;
  tr.n = n;
  tr.m = plant.m();
  tr.history = h;
  tr.d = d_seq;
  tr.x.resize(n, h + T + 1);
  tr.u.resize(plant.m(), h + T);
  const Eigen::MatrixXd KC = K.K() * plant.C();
  for (int i = 0; i <= h; ++i) {
    require(phi[static_cast<size_t>(i)].size() == n, "simulate: phi entries must have n rows");
    tr.x.col(i) = phi[static_cast<size_t>(i)];
  }
  for (int i = 0; i < h; ++i) tr.u.col(i) = KC * tr.x.col(i);

  tr.steps = T;
  for (int k = 0; k < T; ++k) {
    const int c = k + h;
    tr.u.col(c) = KC * tr.x.col(c);
    tr.x.col(c + 1) = plant.A() * tr.x.col(c) + plant.B() * tr.u.col(c - d_seq[static_cast<size_t>(k)]);
    const double norm = tr.x.col(c + 1).norm();
    if (!(norm <= kDivergence)) {
      tr.diverged = true;
      tr.divergence_step = k + 1;
      tr.steps = k + 1;
      tr.x.conservativeResize(Eigen::NoChange, h + k + 2);
      tr.u.conservativeResize(Eigen::NoChange, h + k + 1);
      tr.d.resize(static_cast<size_t>(k + 1));
      break;
    }
  }
  return tr;
}

Eigen::VectorXd build_xi(const Trajectory& traj, const DelayBounds& bounds, int k) {
  require(k >= 0 && k + 1 <= traj.steps, "build_xi: need 0 <= k < steps");
  require(k - bounds.d_max() >= -traj.history, "build_xi: history too short");
  const int n = traj.n;
  const int dm = bounds.d_min(), dM = bounds.d_max();
  const int d = traj.d[static_cast<size_t>(k)];
  auto avg = [&](int lo, int hi) {
    Eigen::VectorXd s = Eigen::VectorXd::Zero(n);
    for (int l = lo; l <= hi; ++l) s += traj.x.col(l + traj.history);
    return Eigen::VectorXd(s / static_cast<double>(hi - lo + 1));
  };
  Eigen::VectorXd xi(kXiBlocks * n);
  xi << traj.x_at(k + 1), traj.x_at(k), traj.x_at(k - dm), traj.x_at(k - d), traj.x_at(k - dM), avg(k - dm, k),
      avg(k - d, k - dm), avg(k - dM, k - d);
  return xi;
}

LkfValue lkf_value(const Trajectory& traj, const Assignment& vars, const DelayBounds& bounds, int k) {
  require(k - bounds.d_max() >= -traj.history && k <= traj.steps, "lkf_value: history too short");
  require(vars.size() > static_cast<size_t>(kVarZ2), "lkf_value: missing variables");
  const int n = traj.n;
  const int dm = bounds.d_min(), dM = bounds.d_max(), dD = bounds.d_delta();
  const auto& P = vars[kVarP];
  const auto& W1 = vars[kVarW1];
  const auto& W2 = vars[kVarW2];
  const auto& Z1 = vars[kVarZ1];
  const auto& Z2 = vars[kVarZ2];
  auto x = [&](int l) { return traj.x.col(l + traj.history); };
  auto eta = [&](int i) { return Eigen::VectorXd(x(i) - x(i - 1)); };

  Eigen::VectorXd w = Eigen::VectorXd::Zero(3 * n);
  w.head(n) = x(k);
  for (int l = k - dm; l <= k - 1; ++l) w.segment(n, n) += x(l);
  for (int l = k - dM; l <= k - dm - 1; ++l) w.tail(n) += x(l);

  LkfValue v;
  v.v1 = w.dot(P * w);
  for (int l = k - dm; l <= k - 1; ++l) v.v2 += x(l).dot(W1 * x(l));
  for (int l = k - dM; l <= k - dm - 1; ++l) v.v2 += x(l).dot(W2 * x(l));
  for (int l = -dm + 1; l <= 0; ++l)
    for (int i = k + l; i <= k; ++i) v.v3 += dm * eta(i).dot(Z1 * eta(i));
  for (int l = -dM + 1; l <= -dm; ++l)
    for (int i = k + l; i <= k; ++i) v.v3 += dD * eta(i).dot(Z2 * eta(i));
  v.total = v.v1 + v.v2 + v.v3;
  return v;
}

double supply_rate(const Eigen::VectorXd& y, const Eigen::VectorXd& u, const Eigen::MatrixXd& Q,
                   const Eigen::MatrixXd& S, const Eigen::MatrixXd& R) {
  require(Q.rows() == y.size() && Q.cols() == y.size() && S.rows() == y.size() && S.cols() == u.size() &&
              R.rows() == u.size() && R.cols() == u.size(),
          "supply_rate: shape mismatch");
  return y.dot(Q * y) + 2.0 * y.dot(S * u) + u.dot(R * u);
}

ChainReport check_dissipation_chain(const Trajectory& traj, const PlantModel& plant, const Assignment& vars,
                                    const SupplyRate& supply, const DelayBounds& bounds, int k) {
  require(k >= 0 && k + 1 <= traj.steps, "check_dissipation_chain: need 0 <= k < steps");
  require(k - bounds.d_max() >= -traj.history, "check_dissipation_chain: history too short");
  const int d = traj.d[static_cast<size_t>(k)];

  ChainReport r;
  r.k = k;
  r.dV = lkf_value(traj, vars, bounds, k + 1).total - lkf_value(traj, vars, bounds, k).total;
  const Eigen::VectorXd xi = build_xi(traj, bounds, k);
  const Eigen::MatrixXd Phi = build_phi(build_selectors(plant.n(), plant.m(), bounds), bounds, d).evaluate(vars);
  r.xi_phi_xi = xi.dot(Phi * xi);
  const Eigen::VectorXd y = plant.C() * traj.x_at(k - d);
  r.w = supply_rate(y, traj.u_at(k - d), supply.Q, supply.S, supply.R);

  const double tol = 1e-8 * (1.0 + std::abs(r.dV));
  r.lkf_leg = r.dV <= r.xi_phi_xi + tol;
  r.supply_leg = r.xi_phi_xi <= r.w + tol;
  r.strict_leg = y.squaredNorm() == 0.0 ? r.w <= tol : r.w < 0.0;
  r.pass = r.lkf_leg && r.supply_leg && r.strict_leg;
  return r;
}

void write_trajectory_csv(const Trajectory& traj, std::ostream& out) {
  out << "k";
  for (int i = 1; i <= traj.n; ++i) out << ",x" << i;
  for (int i = 1; i <= traj.m; ++i) out << ",u" << i;
  out << ",d\n";
  char buf[40];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
  };
  for (int k = 0; k < traj.steps; ++k) {
    out << k;
    const int c = k + traj.history;
    for (int i = 0; i < traj.n; ++i) out << ',' << num(traj.x(i, c));
    for (int i = 0; i < traj.m; ++i) out << ',' << num(traj.u(i, c));
    out << ',' << traj.d[static_cast<size_t>(k)] << '\n';
  }
}

SpectralReport spectral_oracle(const PlantModel& plant, const FeedbackGain& K, const DelayBounds& bounds) {
  SpectralReport r;
  r.pass = true;
  for (int d = bounds.d_min(); d <= bounds.d_max(); ++d) {
    const double rho = spectral_radius(lift_constant_delay(plant, K, d));
    r.delays.push_back(d);
    r.radii.push_back(rho);
    r.max_radius = std::max(r.max_radius, rho);
    if (!(rho < 1.0 - 1e-9)) r.pass = false;
  }
  return r;
}

int automatic_horizon(const PlantModel& plant, const FeedbackGain& K, const DelayBounds& bounds,
                      double threshold) {
  const double rho = spectral_oracle(plant, K, bounds).max_radius;
  if (rho > 1.0 && std::isfinite(rho)) {
    // long enough for an unstable loop to hit the divergence guard
    return static_cast<int>(std::clamp(std::ceil(1.5 * std::log(kDivergence) / std::log(rho)), 500.0, 2.0e6));
  }
  if (!(rho < 1.0) || !(rho > 0.0) || !(threshold > 0.0 && threshold < 1.0)) return 500;
  const double steps = std::ceil(2.0 * std::log(threshold) / std::log(rho));
  return static_cast<int>(std::clamp(steps, 500.0, 2.0e6));
}

namespace {

std::vector<std::vector<Eigen::VectorXd>> initial_histories(int n, int h, int random_count, std::uint64_t seed) {
  std::vector<std::vector<Eigen::VectorXd>> out;
  for (int i = 0; i < n; ++i) out.emplace_back(static_cast<size_t>(h + 1), Eigen::VectorXd::Unit(n, i));
  DelayRng rng(seed ^ kHistorySalt);
  for (int r = 0; r < random_count; ++r) {
    std::vector<Eigen::VectorXd> phi;
    for (int k = 0; k <= h; ++k) {
      Eigen::VectorXd v(n);
      for (int i = 0; i < n; ++i) v(i) = rng.uniform_real(-1.0, 1.0);
      phi.push_back(v);
    }
    out.push_back(std::move(phi));
  }
  return out;
}

}  // namespace

SimulationReport simulation_oracle(const PlantModel& plant, const FeedbackGain& K, const DelayBounds& bounds,
                                   const SimulationOptions& options) {
  require(options.seeds >= 0 && options.random_histories >= 0, "simulation_oracle: negative counts");
  SimulationReport rep;
  rep.steps = options.steps > 0 ? options.steps : automatic_horizon(plant, K, bounds, options.threshold);

  auto run = [&](const std::string& label, std::uint64_t seed, const std::vector<int>& seq) {
    const auto hists = initial_histories(plant.n(), bounds.d_max(), options.random_histories, seed);
    SequenceSummary sum;
    sum.sequence = label;
    sum.seed = seed;
    for (size_t hi = 0; hi < hists.size(); ++hi) {
      double phi_max = 0.0;
      for (const auto& v : hists[hi]) phi_max = std::max(phi_max, v.norm());
      const Trajectory tr = simulate(plant, K, bounds, seq, hists[hi]);
      SimulationCase c;
      c.sequence = label;
      c.seed = seed;
      c.history = static_cast<int>(hi);
      c.diverged = tr.diverged;
      c.divergence_step = tr.divergence_step;
      c.ratio = tr.diverged ? std::numeric_limits<double>::infinity() : tr.x.col(tr.x.cols() - 1).norm() / phi_max;
      c.pass = !tr.diverged && c.ratio <= options.threshold;
      ++rep.total;
      rep.passed += c.pass ? 1 : 0;
      rep.diverged += c.diverged ? 1 : 0;
      rep.worst_ratio = std::max(rep.worst_ratio, c.ratio);
      if (!c.pass && rep.failures.size() < 20) rep.failures.push_back(c);
      ++sum.runs;
      sum.passed += c.pass ? 1 : 0;
      sum.diverged += c.diverged ? 1 : 0;
      if (c.diverged && (sum.first_divergence_step < 0 || c.divergence_step < sum.first_divergence_step)) {
        sum.first_divergence_step = c.divergence_step;
      }
      sum.worst_ratio = std::max(sum.worst_ratio, c.ratio);
    }
    rep.sequences.push_back(sum);
  };

  for (int s = 0; s < options.seeds; ++s) {
    const std::uint64_t seed = options.base_seed + static_cast<std::uint64_t>(s);
    run("random", seed, random_delays(bounds, rep.steps, seed));
  }
  if (options.bang_bang) {
    for (int v = 0; v < 2; ++v) run("bang-bang-" + std::to_string(v), options.base_seed, bang_bang_delays(bounds, rep.steps, v));
  }
  rep.pass = rep.total > 0 && rep.passed == rep.total;
  return rep;
}

ChainSummary dissipation_chain_oracle(const PlantModel& plant, const FeedbackGain& K, const Assignment& vars,
                                      const SupplyRate& supply, const DelayBounds& bounds, int samples,
                                      std::uint64_t base_seed) {
  ChainSummary sum;
  const double lowest = -std::numeric_limits<double>::infinity();
  sum.max_w = sum.worst_lkf_gap = sum.worst_supply_gap = lowest;
  const int h = bounds.d_max();
  const int T = 4 * h + 20;
  for (int i = 0; i < samples; ++i) {
    const std::uint64_t seed = base_seed + static_cast<std::uint64_t>(i);
    DelayRng pick(seed ^ (kHistorySalt >> 1));
    const auto hists = initial_histories(plant.n(), h, 1, seed);
    const Trajectory tr = simulate(plant, K, bounds, random_delays(bounds, T, seed), hists.back());
    if (tr.steps < 2) continue;
    const int k = pick.uniform_int(0, tr.steps - 2);
    const ChainReport r = check_dissipation_chain(tr, plant, vars, supply, bounds, k);
    const double scale = 1.0 + std::abs(r.dV);
    ++sum.samples;
    sum.passed += r.pass ? 1 : 0;
    sum.worst_lkf_gap = std::max(sum.worst_lkf_gap, (r.dV - r.xi_phi_xi) / scale);
    sum.worst_supply_gap = std::max(sum.worst_supply_gap, (r.xi_phi_xi - r.w) / scale);
    sum.max_w = std::max(sum.max_w, r.w);
  }
  sum.pass = sum.samples == samples && sum.passed == sum.samples;
  if (sum.samples == 0) sum.max_w = sum.worst_lkf_gap = sum.worst_supply_gap = 0.0;
  return sum;
}

}  // namespace delaysof
