#pragma once

#include <array>
#include <functional>
#include <optional>
#include <vector>

#include "hlob/kernels.hpp"
#include "hlob/model.hpp"

namespace hlob {

/// Uniform nodes on [-L, L] with N odd so that 0 is a node.
class SpatialGrid {
 public:
  SpatialGrid() = default;
  SpatialGrid(double half_width, int nodes);

  int size() const { return n_; }
  double half_width() const { return L_; }
  double spacing() const { return h_; }
  double node(int j) const { return -L_ + h_ * j; }
  const std::vector<double>& nodes() const { return x_; }
  /// Trapezoid weights.
  const std::vector<double>& weights() const { return w_; }
  std::vector<double> tabulate(const SpatialProfile& f) const;
  /// Linear interpolation of grid values at x; zero outside [-L, L].
  double interpolate(const std::vector<double>& values, double x) const;

 private:
  double L_ = 0.0;
  int n_ = 0;
  double h_ = 0.0;
  std::vector<double> x_;
  std::vector<double> w_;
};

/// Slots: 0 = mu_a, 1 = mu_b, 2 + k = lambda_k for passive type k.
inline constexpr int kScalarSlots = 2;
inline constexpr int kSlots = 6;
inline constexpr bool is_scalar_slot(int slot) { return slot < kScalarSlots; }

struct IntensityField {
  std::array<double, 2> mu{};
  std::array<std::vector<double>, 4> lam;

  static IntensityField zeros(const SpatialGrid& g);
  double norm_d11(const SpatialGrid& g) const;
  double norm_d22(const SpatialGrid& g) const;
  double min_value() const;
  bool finite() const;

  IntensityField& operator+=(const IntensityField& o);
  IntensityField& operator*=(double s);
  bool operator==(const IntensityField&) const = default;
};

/// Collapses the pre-limit layout (mu_aM, mu_aL, mu_bM, mu_bL) onto the limit
/// layout; throws if the paired active intensities differ by more than tol
/// relative.
IntensityField identify_limit(const std::array<double, 4>& mu, const std::array<std::vector<double>, 4>& lam,
                              double tol);

/// One separable block of the kernel operator. A scalar source contributes
/// rho_source(S(s)) * mu_source(s); a field source contributes the integral of
/// the source profile against lambda_source(s, .).
struct BlockTerm {
  int target = 0;
  int source = 0;
  KernelTerm kernel;
};

struct BlockKernelOp {
  std::vector<BlockTerm> terms;       // intensity equations
  std::vector<BlockTerm> beta_terms;  // target 0/1 = beta_a/beta_b

  bool empty() const { return terms.empty() && beta_terms.empty(); }
  /// phi~, Phi, psi~, Psi and theta~, Theta assembled from a limit model.
  static BlockKernelOp from_model(const LimitModel& model);
  /// Constant C with ||int T D(t)||_{D^1_1} <= C int_0^t ||D(s)||_{D^1_1} ds
  /// when the source multipliers rho are bounded by rho_sup.
  double growth_constant(const SpatialGrid& g, double rho_sup) const;
};

/// Exogenous densities at one time: mu_hat, lambda_hat on the grid and beta_hat.
struct ExogenousValue {
  IntensityField field;
  std::array<double, 2> beta_hat{};
};

ExogenousValue exogenous_value(const LimitModel& model, const SpatialGrid& g, const PriceView& prices);
std::array<double, 2> limit_rho(const LimitModel& model, const PriceView& prices);

/// A block term tabulated on a grid, with its convolution history.
struct TabulatedTerm {
  int target = 0;
  int source = 0;
  TemporalTerm time;
  std::vector<double> target_tab;  // h(x) on the grid (field targets)
  std::vector<double> source_w;    // trapezoid weight * g(y) (field sources)
  ErlangState hist;

  TabulatedTerm(const BlockTerm& b, const SpatialGrid& g);
  double moment(const IntensityField& d, const std::array<double, 2>& rho) const;
  /// Adds amount times the unit target (1 at a scalar slot, h on a field slot).
  void add_to(IntensityField& d, double amount) const;
};

/// Time-stepping solver with trapezoid rules in time and space. Histories are
/// carried as Markov states of the separable temporal factors, so each step
/// costs O(terms * nodes).
class VolterraStepper {
 public:
  VolterraStepper(BlockKernelOp op, SpatialGrid grid, double dt);

  /// Computes D(t_m) for the next grid time from the exogenous value and the
  /// source multipliers rho at t_m. Returns the field; beta is written to `beta`.
  IntensityField advance(const ExogenousValue& exo, const std::array<double, 2>& rho,
                         std::array<double, 2>* beta = nullptr);

  std::size_t steps() const { return step_; }
  std::size_t clamped() const { return clamped_; }
  double max_clamp() const { return max_clamp_; }
  const SpatialGrid& grid() const { return grid_; }
  double dt() const { return dt_; }

 private:
  SpatialGrid grid_;
  double dt_ = 0.0;
  std::vector<TabulatedTerm> terms_;
  std::vector<TabulatedTerm> beta_terms_;
  std::vector<std::size_t> diag_;                // terms with nonzero kernel at lag 0
  std::vector<std::vector<double>> coupling_;    // moment of term a applied to unit target of term b
  std::size_t step_ = 0;
  std::size_t clamped_ = 0;
  double max_clamp_ = 0.0;
};

struct ForwardResult {
  std::vector<IntensityField> fields;
  std::vector<std::array<double, 2>> beta;
  std::size_t clamped = 0;
  double max_clamp = 0.0;
};

/// Solves D = D_hat + int T D over the time grid t_m = m dt, m = 0..M, where
/// exo and rho have M + 1 entries. Throws std::runtime_error on non-finite values.
ForwardResult solve_forward(const BlockKernelOp& op, const SpatialGrid& grid, double dt,
                            const std::vector<ExogenousValue>& exo, const std::vector<std::array<double, 2>>& rho);

/// The discrete operator (int T D)(t_m) with the same quadrature as solve_forward.
std::vector<IntensityField> apply_operator(const BlockKernelOp& op, const SpatialGrid& grid, double dt,
                                           const std::vector<IntensityField>& path,
                                           const std::vector<std::array<double, 2>>& rho);

struct NeumannResult {
  std::vector<IntensityField> fields;  // D_hat + sum of the first `depth` iterates
  std::vector<double> term_norms;      // sup_t D^1_1 norm of each iterate, index 0 = D_hat
  std::vector<double> ratios;          // successive norm ratios
  bool converged = false;
};

NeumannResult neumann_resolvent(const BlockKernelOp& op, const SpatialGrid& grid, double dt,
                                const std::vector<ExogenousValue>& exo, const std::vector<std::array<double, 2>>& rho,
                                int depth, double tol = 1e-12);

/// Dense resolvent table sum_{n=1..depth} Q^n of the discrete operator Q, for
/// scalar-slot-only operators on small grids. Row/column index m * 2 + slot.
std::vector<std::vector<double>> resolvent_table(const BlockKernelOp& op, double dt, std::size_t steps,
                                                 const std::vector<std::array<double, 2>>& rho, int depth);

struct ResolventReport {
  std::vector<double> t;
  std::vector<double> K;
  double residual_same_rule = 0.0;   // trapezoid residual of the discrete equation
  double residual_cross_rule = 0.0;  // Simpson residual at even nodes
  std::optional<double> error_vs_exact;
  std::optional<double> error_vs_stated;
};

/// Solves K = phi + K * phi on t_m = m dt, m = 0..steps, by the implicit
/// trapezoid rule.
ResolventReport scalar_resolvent_K(const std::function<double(double)>& phi, double dt, std::size_t steps);
/// Same, for a single temporal term, also comparing against the exact
/// resolvent of the family and the alternative stated form
/// (2c e^{2ct}, 2c e^{-(kappa - 2c)t}, sqrt(2c) e^{-kappa t} sin(sqrt(2c) t)).
ResolventReport scalar_resolvent_K(const TemporalTerm& phi, double dt, std::size_t steps);

double exact_resolvent(const TemporalTerm& phi, double t);
double stated_resolvent(const TemporalTerm& phi, double t);

}  // namespace hlob
