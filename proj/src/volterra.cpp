#include "hlob/volterra.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hlob {

SpatialGrid::SpatialGrid(double half_width, int nodes) : L_(half_width), n_(nodes) {
  if (!(half_width > 0.0)) throw std::invalid_argument("SpatialGrid: half width must be positive");
  if (nodes < 3 || nodes % 2 == 0) throw std::invalid_argument("SpatialGrid: node count must be odd and >= 3");
  h_ = 2.0 * L_ / (n_ - 1);
  x_.resize(static_cast<std::size_t>(n_));
  w_.assign(static_cast<std::size_t>(n_), h_);
  for (int j = 0; j < n_; ++j) x_[static_cast<std::size_t>(j)] = node(j);
  x_[static_cast<std::size_t>((n_ - 1) / 2)] = 0.0;
  w_.front() = w_.back() = 0.5 * h_;
}

std::vector<double> SpatialGrid::tabulate(const SpatialProfile& f) const {
  std::vector<double> v(x_.size());
  for (std::size_t j = 0; j < x_.size(); ++j) v[j] = f(x_[j]);
  return v;
}

double SpatialGrid::interpolate(const std::vector<double>& values, double x) const {
  if (!(x >= -L_ && x <= L_)) return 0.0;
  const double r = (x + L_) / h_;
  const auto j = std::min(static_cast<std::size_t>(r), static_cast<std::size_t>(n_ - 2));
  const double f = r - static_cast<double>(j);
  return (1.0 - f) * values[j] + f * values[j + 1];
}

IntensityField IntensityField::zeros(const SpatialGrid& g) {
  IntensityField d;
  for (auto& l : d.lam) l.assign(static_cast<std::size_t>(g.size()), 0.0);
  return d;
}

double IntensityField::norm_d11(const SpatialGrid& g) const {
  double s = std::abs(mu[0]) + std::abs(mu[1]);
  for (const auto& l : lam)
    for (std::size_t j = 0; j < l.size(); ++j) s += g.weights()[j] * std::abs(l[j]);
  return s;
}

double IntensityField::norm_d22(const SpatialGrid& g) const {
  double s = mu[0] * mu[0] + mu[1] * mu[1];
  for (const auto& l : lam)
    for (std::size_t j = 0; j < l.size(); ++j) s += g.weights()[j] * l[j] * l[j];
  return std::sqrt(s);
}

double IntensityField::min_value() const {
  double m = std::min(mu[0], mu[1]);
  for (const auto& l : lam)
    if (!l.empty()) m = std::min(m, *std::min_element(l.begin(), l.end()));
  return m;
}

bool IntensityField::finite() const {
  if (!std::isfinite(mu[0]) || !std::isfinite(mu[1])) return false;
  for (const auto& l : lam)
    for (double v : l)
      if (!std::isfinite(v)) return false;
  return true;
}

IntensityField& IntensityField::operator+=(const IntensityField& o) {
  mu[0] += o.mu[0];
  mu[1] += o.mu[1];
  for (std::size_t k = 0; k < 4; ++k) {
    if (lam[k].size() != o.lam[k].size()) throw std::invalid_argument("IntensityField: grid size mismatch");
    for (std::size_t j = 0; j < lam[k].size(); ++j) lam[k][j] += o.lam[k][j];
  }
  return *this;
}

IntensityField& IntensityField::operator*=(double s) {
  mu[0] *= s;
  mu[1] *= s;
  for (auto& l : lam)
    for (double& v : l) v *= s;
  return *this;
}

IntensityField identify_limit(const std::array<double, 4>& mu, const std::array<std::vector<double>, 4>& lam,
                              double tol) {
  IntensityField d;
  for (int i = 0; i < 2; ++i) {
    const double m = mu[static_cast<std::size_t>(2 * i)], l = mu[static_cast<std::size_t>(2 * i + 1)];
    if (std::abs(m - l) > tol * std::max({1.0, std::abs(m), std::abs(l)}))
      throw std::invalid_argument("identify_limit: market and spread-placement intensities differ beyond tolerance");
    d.mu[static_cast<std::size_t>(i)] = 0.5 * (m + l);
  }
  d.lam = lam;
  return d;
}

BlockKernelOp BlockKernelOp::from_model(const LimitModel& model) {
  BlockKernelOp op;
  auto add = [](std::vector<BlockTerm>& out, int target, int source, const SpaceTimeKernel& k) {
    for (const auto& t : k.terms)
      if (t.time.c != 0.0) out.push_back({target, source, t});
  };
  for (int I = 0; I < 2; ++I) {
    const auto Iu = static_cast<std::size_t>(I);
    for (int i = 0; i < 2; ++i) {
      for (int j = 2 * i; j < 2 * i + 2; ++j) {
        add(op.terms, I, i, model.phi[Iu][static_cast<std::size_t>(j)]);
        add(op.beta_terms, I, i, model.theta[Iu][static_cast<std::size_t>(j)]);
      }
    }
    for (int k = 0; k < 4; ++k) {
      add(op.terms, I, 2 + k, model.Phi[Iu][static_cast<std::size_t>(k)]);
      add(op.beta_terms, I, 2 + k, model.Theta[Iu][static_cast<std::size_t>(k)]);
    }
  }
  for (int K = 0; K < 4; ++K) {
    const auto Ku = static_cast<std::size_t>(K);
    for (int j = 0; j < 4; ++j) add(op.terms, 2 + K, side_of(j), model.psi[Ku][static_cast<std::size_t>(j)]);
    for (int k = 0; k < 4; ++k) add(op.terms, 2 + K, 2 + k, model.Psi[Ku][static_cast<std::size_t>(k)]);
  }
  return op;
}

double BlockKernelOp::growth_constant(const SpatialGrid& g, double rho_sup) const {
  const double L = g.half_width();
  std::array<double, kSlots> per_source{};
  for (const auto& t : terms) {
    const double target_mass = is_scalar_slot(t.target) ? 1.0 : t.kernel.target.mass(-L, L);
    const double source_factor = is_scalar_slot(t.source) ? rho_sup : t.kernel.source.sup();
    per_source[static_cast<std::size_t>(t.source)] += t.kernel.time.envelope(0.0) * target_mass * source_factor;
  }
  return *std::max_element(per_source.begin(), per_source.end());
}

ExogenousValue exogenous_value(const LimitModel& model, const SpatialGrid& g, const PriceView& prices) {
  ExogenousValue e;
  e.field = IntensityField::zeros(g);
  for (int I = 0; I < 2; ++I) {
    const auto& s = model.side[static_cast<std::size_t>(I)];
    const Side side = static_cast<Side>(I);
    e.field.mu[static_cast<std::size_t>(I)] = s.mu_hat(prices, side);
    e.beta_hat[static_cast<std::size_t>(I)] = s.beta_hat(prices, side);
    for (int K = 0; K < 2; ++K) {
      const auto& lh = s.lambda_hat[static_cast<std::size_t>(K)];
      const double m = lh.multiplier(prices, side);
      auto& out = e.field.lam[static_cast<std::size_t>(2 * I + K)];
      if (m == 0.0) continue;
      for (std::size_t j = 0; j < out.size(); ++j) out[j] = m * lh.profile(g.nodes()[j]);
    }
  }
  return e;
}

std::array<double, 2> limit_rho(const LimitModel& model, const PriceView& prices) {
  return {model.side[0].rho(prices, Side::Ask), model.side[1].rho(prices, Side::Bid)};
}

TabulatedTerm::TabulatedTerm(const BlockTerm& b, const SpatialGrid& g)
    : target(b.target), source(b.source), time(b.kernel.time) {
  if (b.target < 0 || b.target >= kSlots || b.source < 0 || b.source >= kSlots)
    throw std::invalid_argument("BlockTerm: slot out of range");
  if (!is_scalar_slot(target)) target_tab = g.tabulate(b.kernel.target);
  if (!is_scalar_slot(source)) {
    source_w = g.tabulate(b.kernel.source);
    for (std::size_t j = 0; j < source_w.size(); ++j) source_w[j] *= g.weights()[j];
  }
}

double TabulatedTerm::moment(const IntensityField& d, const std::array<double, 2>& rho) const {
  if (is_scalar_slot(source)) return rho[static_cast<std::size_t>(source)] * d.mu[static_cast<std::size_t>(source)];
  const auto& l = d.lam[static_cast<std::size_t>(source - 2)];
  double s = 0.0;
  for (std::size_t j = 0; j < l.size(); ++j) s += source_w[j] * l[j];
  return s;
}

void TabulatedTerm::add_to(IntensityField& d, double amount) const {
  if (amount == 0.0) return;
  if (is_scalar_slot(target)) {
    d.mu[static_cast<std::size_t>(target)] += amount;
    return;
  }
  auto& l = d.lam[static_cast<std::size_t>(target - 2)];
  for (std::size_t j = 0; j < l.size(); ++j) l[j] += amount * target_tab[j];
}

namespace {

// Moment of term a applied to the unit target of term b, without the rho factor.
double unit_coupling(const TabulatedTerm& a, const TabulatedTerm& b) {
  if (a.source != b.target) return 0.0;
  if (is_scalar_slot(a.source)) return 1.0;
  double s = 0.0;
  for (std::size_t j = 0; j < a.source_w.size(); ++j) s += a.source_w[j] * b.target_tab[j];
  return s;
}

}  // namespace

VolterraStepper::VolterraStepper(BlockKernelOp op, SpatialGrid grid, double dt) : grid_(std::move(grid)), dt_(dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("VolterraStepper: dt must be positive");
  for (const auto& b : op.terms) terms_.emplace_back(b, grid_);
  for (const auto& b : op.beta_terms) {
    if (!is_scalar_slot(b.target)) throw std::invalid_argument("beta terms must target slot 0 or 1");
    beta_terms_.emplace_back(b, grid_);
  }
  for (std::size_t i = 0; i < terms_.size(); ++i)
    if (terms_[i].time(0.0) != 0.0) diag_.push_back(i);
  coupling_.assign(diag_.size(), std::vector<double>(diag_.size(), 0.0));
  for (std::size_t a = 0; a < diag_.size(); ++a)
    for (std::size_t b = 0; b < diag_.size(); ++b) coupling_[a][b] = unit_coupling(terms_[diag_[a]], terms_[diag_[b]]);
}

IntensityField VolterraStepper::advance(const ExogenousValue& exo, const std::array<double, 2>& rho,
                                        std::array<double, 2>* beta) {
  IntensityField d = exo.field;
  for (auto& l : d.lam)
    if (l.size() != static_cast<std::size_t>(grid_.size())) throw std::invalid_argument("advance: exogenous grid mismatch");
  for (const auto& t : terms_) t.add_to(d, t.hist.value(t.time.power));

  // Trapezoid end-point term at s = t_m: a small linear system in the moments.
  if (step_ > 0 && !diag_.empty()) {
    const auto n = static_cast<Eigen::Index>(diag_.size());
    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd rhs(n);
    for (Eigen::Index a = 0; a < n; ++a) {
      const auto& ta = terms_[diag_[static_cast<std::size_t>(a)]];
      rhs(a) = ta.moment(d, rho);
      const double r = is_scalar_slot(ta.source) ? rho[static_cast<std::size_t>(ta.source)] : 1.0;
      for (Eigen::Index b = 0; b < n; ++b) {
        const auto& tb = terms_[diag_[static_cast<std::size_t>(b)]];
        A(a, b) -= 0.5 * dt_ * tb.time(0.0) * r * coupling_[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
      }
    }
    const Eigen::VectorXd z = A.partialPivLu().solve(rhs);
    for (Eigen::Index b = 0; b < n; ++b) {
      const auto& tb = terms_[diag_[static_cast<std::size_t>(b)]];
      tb.add_to(d, 0.5 * dt_ * tb.time(0.0) * z(b));
    }
  }

  if (!d.finite())
    throw std::runtime_error("VolterraStepper: non-finite intensity at step " + std::to_string(step_));
  auto clamp = [&](double& v) {
    if (v < 0.0) {
      ++clamped_;
      max_clamp_ = std::max(max_clamp_, -v);
      v = 0.0;
    }
  };
  clamp(d.mu[0]);
  clamp(d.mu[1]);
  for (auto& l : d.lam)
    for (double& v : l) clamp(v);

  if (beta) {
    *beta = exo.beta_hat;
    for (const auto& t : beta_terms_) {
      double v = t.hist.value(t.time.power);
      if (step_ > 0) v += 0.5 * dt_ * t.time(0.0) * t.moment(d, rho);
      (*beta)[static_cast<std::size_t>(t.target)] += v;
    }
  }

  const double w = step_ == 0 ? 0.5 * dt_ : dt_;
  for (auto* group : {&terms_, &beta_terms_}) {
    for (auto& t : *group) {
      t.hist.jump(w * t.time.c * t.moment(d, rho));
      t.hist.decay(dt_, t.time.kappa);
    }
  }
  ++step_;
  return d;
}

ForwardResult solve_forward(const BlockKernelOp& op, const SpatialGrid& grid, double dt,
                            const std::vector<ExogenousValue>& exo, const std::vector<std::array<double, 2>>& rho) {
  if (exo.size() != rho.size()) throw std::invalid_argument("solve_forward: exogenous and rho paths differ in length");
  VolterraStepper st(op, grid, dt);
  ForwardResult r;
  r.fields.reserve(exo.size());
  r.beta.reserve(exo.size());
  for (std::size_t m = 0; m < exo.size(); ++m) {
    std::array<double, 2> b{};
    r.fields.push_back(st.advance(exo[m], rho[m], &b));
    r.beta.push_back(b);
  }
  r.clamped = st.clamped();
  r.max_clamp = st.max_clamp();
  return r;
}

std::vector<IntensityField> apply_operator(const BlockKernelOp& op, const SpatialGrid& grid, double dt,
                                           const std::vector<IntensityField>& path,
                                           const std::vector<std::array<double, 2>>& rho) {
  if (path.size() != rho.size()) throw std::invalid_argument("apply_operator: path and rho differ in length");
  std::vector<TabulatedTerm> terms;
  for (const auto& b : op.terms) terms.emplace_back(b, grid);
  std::vector<IntensityField> out;
  out.reserve(path.size());
  for (std::size_t m = 0; m < path.size(); ++m) {
    IntensityField q = IntensityField::zeros(grid);
    for (auto& t : terms) {
      double v = t.hist.value(t.time.power);
      if (m > 0) v += 0.5 * dt * t.time(0.0) * t.moment(path[m], rho[m]);
      t.add_to(q, v);
      t.hist.jump((m == 0 ? 0.5 : 1.0) * dt * t.time.c * t.moment(path[m], rho[m]));
      t.hist.decay(dt, t.time.kappa);
    }
    out.push_back(std::move(q));
  }
  return out;
}

NeumannResult neumann_resolvent(const BlockKernelOp& op, const SpatialGrid& grid, double dt,
                                const std::vector<ExogenousValue>& exo, const std::vector<std::array<double, 2>>& rho,
                                int depth, double tol) {
  if (depth < 1) throw std::invalid_argument("neumann_resolvent: depth must be >= 1");
  NeumannResult r;
  std::vector<IntensityField> term;
  term.reserve(exo.size());
  for (const auto& e : exo) term.push_back(e.field);
  r.fields = term;
  auto sup_norm = [&](const std::vector<IntensityField>& p) {
    double s = 0.0;
    for (const auto& d : p) s = std::max(s, d.norm_d11(grid));
    return s;
  };
  r.term_norms.push_back(sup_norm(term));
  for (int n = 1; n <= depth; ++n) {
    term = apply_operator(op, grid, dt, term, rho);
    for (std::size_t m = 0; m < term.size(); ++m) r.fields[m] += term[m];
    r.term_norms.push_back(sup_norm(term));
    const double prev = r.term_norms[r.term_norms.size() - 2];
    r.ratios.push_back(prev > 0.0 ? r.term_norms.back() / prev : 0.0);
  }
  double total = 0.0;
  for (double v : r.term_norms) total += v;
  r.converged = r.term_norms.back() <= tol * std::max(total, 1e-300) || r.term_norms.back() == 0.0;
  return r;
}

std::vector<std::vector<double>> resolvent_table(const BlockKernelOp& op, double dt, std::size_t steps,
                                                 const std::vector<std::array<double, 2>>& rho, int depth) {
  for (const auto& t : op.terms)
    if (!is_scalar_slot(t.target) || !is_scalar_slot(t.source))
      throw std::invalid_argument("resolvent_table: only scalar-slot operators are supported");
  const std::size_t n = 2 * (steps + 1);
  if (n > 4000) throw std::invalid_argument("resolvent_table: grid too large for a dense table");
  if (rho.size() != steps + 1) throw std::invalid_argument("resolvent_table: rho path length must be steps + 1");
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t m = 1; m <= steps; ++m) {
    for (std::size_t j = 0; j <= m; ++j) {
      const double w = (j == 0 || j == m) ? 0.5 * dt : dt;
      const double lag = static_cast<double>(m - j) * dt;
      for (const auto& t : op.terms) {
        Q(static_cast<Eigen::Index>(2 * m + static_cast<std::size_t>(t.target)),
          static_cast<Eigen::Index>(2 * j + static_cast<std::size_t>(t.source))) +=
            w * t.kernel.time(lag) * rho[j][static_cast<std::size_t>(t.source)];
      }
    }
  }
  Eigen::MatrixXd power = Q, sum = Q;
  for (int k = 2; k <= depth; ++k) {
    power = power * Q;
    sum += power;
  }
  std::vector<std::vector<double>> out(n, std::vector<double>(n));
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) out[a][b] = sum(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
  return out;
}

ResolventReport scalar_resolvent_K(const std::function<double(double)>& phi, double dt, std::size_t steps) {
  ResolventReport r;
  std::vector<double> f(steps + 1);
  r.t.resize(steps + 1);
  for (std::size_t m = 0; m <= steps; ++m) {
    r.t[m] = static_cast<double>(m) * dt;
    f[m] = phi(r.t[m]);
  }
  auto& K = r.K;
  K.assign(steps + 1, 0.0);
  K[0] = f[0];
  const double denom = 1.0 - 0.5 * dt * f[0];
  if (!(std::abs(denom) > 1e-12)) throw std::invalid_argument("scalar_resolvent_K: step too large for phi(0)");
  for (std::size_t m = 1; m <= steps; ++m) {
    double s = 0.5 * K[0] * f[m];
    for (std::size_t j = 1; j < m; ++j) s += K[m - j] * f[j];
    K[m] = (f[m] + dt * s) / denom;
  }
  for (std::size_t m = 1; m <= steps; ++m) {
    double conv = 0.5 * (K[m] * f[0] + K[0] * f[m]);
    for (std::size_t j = 1; j < m; ++j) conv += K[m - j] * f[j];
    r.residual_same_rule = std::max(r.residual_same_rule, std::abs(K[m] - f[m] - dt * conv));
  }
  for (std::size_t m = 2; m <= steps; m += 2) {
    double conv = K[m] * f[0] + K[0] * f[m];
    for (std::size_t j = 1; j < m; ++j) conv += (j % 2 ? 4.0 : 2.0) * K[m - j] * f[j];
    r.residual_cross_rule = std::max(r.residual_cross_rule, std::abs(K[m] - f[m] - dt / 3.0 * conv));
  }
  return r;
}

double exact_resolvent(const TemporalTerm& phi, double t) {
  const double c = phi.c, k = phi.kappa;
  if (phi.power == 0) return c * std::exp(-(k - c) * t);
  if (c >= 0.0) return std::sqrt(c) * std::exp(-k * t) * std::sinh(std::sqrt(c) * t);
  return -std::sqrt(-c) * std::exp(-k * t) * std::sin(std::sqrt(-c) * t);
}

double stated_resolvent(const TemporalTerm& phi, double t) {
  const double c = phi.c, k = phi.kappa;
  if (phi.power == 0) return 2.0 * c * std::exp(-(k - 2.0 * c) * t);
  return std::sqrt(2.0 * c) * std::exp(-k * t) * std::sin(std::sqrt(2.0 * c) * t);
}

ResolventReport scalar_resolvent_K(const TemporalTerm& phi, double dt, std::size_t steps) {
  auto r = scalar_resolvent_K([&](double t) { return phi(t); }, dt, steps);
  double ex = 0.0, st = 0.0;
  for (std::size_t m = 0; m < r.t.size(); ++m) {
    ex = std::max(ex, std::abs(r.K[m] - exact_resolvent(phi, r.t[m])));
    st = std::max(st, std::abs(r.K[m] - stated_resolvent(phi, r.t[m])));
  }
  r.error_vs_exact = ex;
  if (phi.c >= 0.0) r.error_vs_stated = st;
  return r;
}

}  // namespace hlob
