#include "hlob/limit.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "hlob/rng.hpp"

namespace hlob {

LimitState make_limit_state(const SpatialGrid& g, double pa, double pb, const ProfileFn& ask, const ProfileFn& bid) {
  LimitState s;
  s.pa = pa;
  s.pb = pb;
  s.va.resize(static_cast<std::size_t>(g.size()));
  s.vb.resize(static_cast<std::size_t>(g.size()));
  for (std::size_t j = 0; j < s.va.size(); ++j) {
    s.va[j] = ask(g.nodes()[j]);
    s.vb[j] = bid(g.nodes()[j]);
  }
  return s;
}

NoisePath NoisePath::generate(std::uint64_t seed, std::uint64_t replicate, std::size_t steps, double dt) {
  Rng rng(seed, replicate, StreamRole::Noise);
  NoisePath n;
  n.dt = dt;
  n.increments.resize(steps);
  const double sd = std::sqrt(dt);
  for (auto& inc : n.increments) {
    inc[0] = sd * rng.normal();
    inc[1] = sd * rng.normal();
  }
  return n;
}

NoisePath NoisePath::zero(std::size_t steps, double dt) {
  NoisePath n;
  n.dt = dt;
  n.increments.assign(steps, {0.0, 0.0});
  return n;
}

NoisePath NoisePath::coarsen(std::size_t factor) const {
  if (factor == 0 || increments.size() % factor != 0)
    throw std::invalid_argument("NoisePath::coarsen: factor must divide the step count");
  NoisePath n;
  n.dt = dt * static_cast<double>(factor);
  n.increments.assign(increments.size() / factor, {0.0, 0.0});
  for (std::size_t i = 0; i < increments.size(); ++i) {
    n.increments[i / factor][0] += increments[i][0];
    n.increments[i / factor][1] += increments[i][1];
  }
  return n;
}

DriftDiffusion drift_diffusion(const LimitModel& model, const PriceView& prices, const std::array<double, 2>& mu,
                               const std::array<double, 2>& beta) {
  DriftDiffusion d;
  for (int I = 0; I < 2; ++I) {
    const auto i = static_cast<std::size_t>(I);
    const Side side = static_cast<Side>(I);
    d.rho[i] = model.side[i].rho(prices, side);
    d.varrho[i] = model.side[i].varrho(prices, side);
    d.drift[i] = d.rho[i] * beta[i] + d.varrho[i] * mu[i];
    const double radicand = 2.0 * d.rho[i] * mu[i];
    if (radicand < 0.0) ++d.clamped;
    d.diffusion[i] = std::sqrt(std::max(0.0, radicand));
  }
  return d;
}

LimitSolver::LimitSolver(LimitModel model, SpatialGrid grid, LimitState initial, LimitOptions opts)
    : model_(std::move(model)),
      grid_(grid),
      opts_(std::move(opts)),
      volterra_(BlockKernelOp::from_model(model_), grid, opts_.dt),
      state_(std::move(initial)),
      pa0_(state_.pa),
      pb0_(state_.pb) {
  model_.validate();
  if (!(opts_.dt > 0.0) || !(opts_.horizon >= 0.0)) throw std::invalid_argument("LimitSolver: dt must be positive");
  const double r = opts_.horizon / opts_.dt;
  total_steps_ = static_cast<std::size_t>(std::llround(r));
  if (std::abs(r - static_cast<double>(total_steps_)) > 1e-6)
    throw std::invalid_argument("LimitSolver: horizon must be an integer multiple of dt");
  if (opts_.cadence == 0) throw std::invalid_argument("LimitSolver: cadence must be >= 1");
  if (state_.va.size() != static_cast<std::size_t>(grid_.size()) || state_.vb.size() != state_.va.size())
    throw std::invalid_argument("LimitSolver: volume grids do not match the spatial grid");
  for (int I = 0; I < 2; ++I) {
    alpha_l_[static_cast<std::size_t>(I)] = model_.alpha_place(I);
    alpha_c_[static_cast<std::size_t>(I)] = model_.alpha_cancel(I);
  }
  path_.min_spread = state_.spread();
}

double LimitSolver::pair(const std::vector<double>& v, const SpatialProfile& f) const {
  double s = 0.0;
  for (std::size_t j = 0; j < v.size(); ++j) s += grid_.weights()[j] * f(grid_.nodes()[j]) * v[j];
  return s;
}

void LimitSolver::eta(const IntensityField& d, std::vector<double>& ea, std::vector<double>& eb) const {
  ea.assign(opts_.tests.ask.size(), 0.0);
  eb.assign(opts_.tests.bid.size(), 0.0);
  const auto& xi = grid_.nodes();
  for (std::size_t j = 0; j < xi.size(); ++j) {
    const double ya = xi[j] + pa0_ - state_.pa;
    const double yb = xi[j] + state_.pb - pb0_;
    const double ra = alpha_l_[0] * grid_.interpolate(d.lam[kAskPlace], ya) +
                      alpha_c_[0] * grid_.interpolate(d.lam[kAskCancel], ya) * state_.va[j];
    const double rb = alpha_l_[1] * grid_.interpolate(d.lam[kBidPlace], yb) +
                      alpha_c_[1] * grid_.interpolate(d.lam[kBidCancel], yb) * state_.vb[j];
    const double w = grid_.weights()[j];
    for (std::size_t k = 0; k < ea.size(); ++k) ea[k] += w * opts_.tests.ask[k](xi[j]) * ra;
    for (std::size_t k = 0; k < eb.size(); ++k) eb[k] += w * opts_.tests.bid[k](xi[j]) * rb;
  }
}

void LimitSolver::step(const std::array<double, 2>& dB) {
  if (m_ > total_steps_) throw std::logic_error("LimitSolver: stepping past the horizon");
  const PriceView pv{state_.pa, state_.pb};
  const auto exo = exogenous_value(model_, grid_, pv);
  const auto rho = limit_rho(model_, pv);
  std::array<double, 2> beta{};
  IntensityField d = volterra_.advance(exo, rho, &beta);
  const auto dd = drift_diffusion(model_, pv, d.mu, beta);
  path_.radicand_clamps += static_cast<std::size_t>(dd.clamped);
  path_.intensity_clamps = volterra_.clamped();
  for (int I = 0; I < 2; ++I) {
    const auto& s = model_.side[static_cast<std::size_t>(I)];
    const Side side = static_cast<Side>(I);
    if (s.rho.capped(pv, side) || s.mu_hat.capped(pv, side) || s.lambda_hat[0].multiplier.capped(pv, side) ||
        s.lambda_hat[1].multiplier.capped(pv, side)) {
      ++path_.barrier_hits;
      break;
    }
  }

  if (m_ % opts_.cadence == 0 || m_ == total_steps_) {
    LimitRecord rec;
    rec.step = m_;
    rec.t = static_cast<double>(m_) * opts_.dt;
    rec.pa = state_.pa;
    rec.pb = state_.pb;
    rec.mu = d.mu;
    rec.beta = beta;
    rec.rho = dd.rho;
    rec.h = {dd.drift[0], -dd.drift[1]};
    rec.sigma = {dd.rho[0] * d.mu[0], dd.rho[1] * d.mu[1]};
    for (const auto& f : opts_.tests.ask) rec.vf_a.push_back(pair(state_.va, f));
    for (const auto& f : opts_.tests.bid) rec.vf_b.push_back(pair(state_.vb, f));
    eta(d, rec.eta_a, rec.eta_b);
    path_.records.push_back(std::move(rec));
  }
  if (m_ == total_steps_) {
    if (opts_.store_fields) path_.fields.push_back(std::move(d));
    path_.final_state = state_;
    path_.steps = total_steps_;
    ++m_;
    return;
  }

  const double dt = opts_.dt;
  const double pa_prev = state_.pa, pb_prev = state_.pb;
  state_.pa += dd.drift[0] * dt + dd.diffusion[0] * dB[0];
  state_.pb += -dd.drift[1] * dt + dd.diffusion[1] * dB[1];
  const auto& xi = grid_.nodes();
  for (std::size_t j = 0; j < xi.size(); ++j) {
    const double ya = xi[j] + pa0_ - pa_prev;
    const double yb = xi[j] + pb_prev - pb0_;
    state_.va[j] += dt * (alpha_l_[0] * grid_.interpolate(d.lam[kAskPlace], ya) +
                          alpha_c_[0] * grid_.interpolate(d.lam[kAskCancel], ya) * state_.va[j]);
    state_.vb[j] += dt * (alpha_l_[1] * grid_.interpolate(d.lam[kBidPlace], yb) +
                          alpha_c_[1] * grid_.interpolate(d.lam[kBidCancel], yb) * state_.vb[j]);
  }
  if (!std::isfinite(state_.pa) || !std::isfinite(state_.pb) || !std::isfinite(state_.va.front()) ||
      !std::isfinite(state_.vb.front())) {
    std::ostringstream msg;
    msg << "LimitSolver: non-finite state at step " << m_;
    throw std::runtime_error(msg.str());
  }
  // Below zero the diffusion vanishes, so only entry into the negative region
  // is measured against the local diffusion; afterwards any further decrease counts.
  const double s_prev = pa_prev - pb_prev;
  const double local = std::hypot(dd.diffusion[0], dd.diffusion[1]);
  if (s_prev >= 0.0 ? state_.spread() < -4.0 * local * std::sqrt(dt) : state_.spread() < s_prev)
    ++path_.spread_violations;
  path_.min_spread = std::min(path_.min_spread, state_.spread());
  if (opts_.store_fields) path_.fields.push_back(std::move(d));
  ++m_;
}

LimitPath LimitSolver::run(const NoisePath& noise) {
  if (noise.increments.size() < total_steps_) throw std::invalid_argument("LimitSolver::run: noise path too short");
  if (std::abs(noise.dt - opts_.dt) > 1e-12 * opts_.dt) throw std::invalid_argument("LimitSolver::run: noise dt mismatch");
  while (m_ <= total_steps_) step(m_ < total_steps_ ? noise.increments[m_] : std::array<double, 2>{0.0, 0.0});
  if (static_cast<double>(path_.radicand_clamps) > 1e-3 * static_cast<double>(std::max<std::size_t>(total_steps_, 1)))
    throw std::runtime_error("LimitSolver: negative diffusion radicands exceed 0.1% of steps");
  return path_;
}

LimitPath solve_path(const LimitModel& model, const SpatialGrid& grid, const LimitState& initial,
                     const LimitOptions& opts, const NoisePath& noise) {
  LimitSolver s(model, grid, initial, opts);
  return s.run(noise);
}

LimitPath solve_path(const LimitModel& model, const SpatialGrid& grid, const LimitState& initial,
                     const LimitOptions& opts, std::uint64_t seed, std::uint64_t replicate) {
  const auto steps = static_cast<std::size_t>(std::llround(opts.horizon / opts.dt));
  return solve_path(model, grid, initial, opts, NoisePath::generate(seed, replicate, steps, opts.dt));
}

UniquenessReport check_uniqueness_condition(const LimitModel& model, double eps, const std::vector<PriceView>& probes,
                                            int spreads_per_probe) {
  if (!(eps > 0.0)) throw std::invalid_argument("check_uniqueness_condition: eps must be positive");
  UniquenessReport r;
  for (const auto& probe : probes) {
    for (int k = 1; k <= spreads_per_probe; ++k) {
      const double s = eps * k / (spreads_per_probe + 1);
      const PriceView pv{probe.bid + s, probe.bid};
      for (int I = 0; I < 2; ++I) {
        const auto& side = model.side[static_cast<std::size_t>(I)];
        const double rho = side.rho(pv, static_cast<Side>(I));
        const double vr = side.varrho(pv, static_cast<Side>(I));
        if (!(rho > 0.0) || rho > vr * s * (1.0 + 1e-12)) {
          r.passed = false;
          if (r.failures.size() < 16) {
            std::ostringstream msg;
            msg << (I == 0 ? "ask" : "bid") << ": rho=" << rho << " varrho*spread=" << vr * s << " at spread " << s
                << " bid " << probe.bid;
            r.failures.push_back(msg.str());
          }
        }
      }
    }
  }
  return r;
}

}  // namespace hlob
