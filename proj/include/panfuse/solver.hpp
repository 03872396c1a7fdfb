#pragma once

// ADMM solver for
//
//   min_u  gamma * f(u) + (1 - gamma) * TV(u)
//   s.t.   |x_l - D_s H_s u_l|^2 <= M sigma_{x_l}^2   for every band l
//          |p - G u|^2           <= N sigma_p^2
//
// with f the level-line discrepancy against the panchromatic image. The
// splitting is y = M u with M = [grad; grad; H_s; H_lambda] and scaled
// multipliers:
//
//   z      = M u - lambda / beta
//   y      = prox_F(z) block by block
//   u      = (M^T M)^{-1} M^T (y + lambda / beta)      (exact, in Fourier)
//   lambda = lambda + beta (y - M u)

#include <cmath>
#include <cstddef>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <string>
#include <vector>

#include "panfuse/errors.hpp"
#include "panfuse/operators.hpp"
#include "panfuse/prox.hpp"
#include "panfuse/tensor.hpp"

namespace panfuse {

enum class InitMode {
  Model,  // y = M u0
  Upsampled,  // y1, y2, y3 from the upsampled cube, y4 from p
};

struct SolverConfig {
  double gamma = 0.01;  // weight of the level-line term; TV gets 1 - gamma
  double beta = 1000.0;
  std::size_t max_iters = 300;
  double primal_tol = 0.0;  // relative |y - Mu| / |Mu|; 0 disables
  double eps_rel = 1e-8;    // eta degeneracy threshold
  std::size_t log_every = 1;
  double objective_scale = 1.0;  // multiplies both prox thresholds
  InitMode init = InitMode::Model;

  void validate() const {
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("SolverConfig: gamma must lie in [0, 1]");
    if (!(beta > 0.0) || !std::isfinite(beta)) throw ConfigError("SolverConfig: beta must be > 0");
    if (!(primal_tol >= 0.0)) throw ConfigError("SolverConfig: primal_tol must be >= 0");
    if (!(eps_rel > 0.0)) throw ConfigError("SolverConfig: eps_rel must be > 0");
    if (!(objective_scale >= 0.0) || !std::isfinite(objective_scale))
      throw ConfigError("SolverConfig: objective_scale must be finite and >= 0");
  }

  double tv_threshold() const { return objective_scale * (1.0 - gamma) / beta; }
  double levelline_threshold() const { return objective_scale * gamma / beta; }
};

struct IterationRecord {
  std::size_t iteration = 0;
  double objective = 0.0;
  double primal_residual = 0.0;
  double relative_primal_residual = 0.0;
  double pan_slack = 0.0;          // |p - G u| - radius
  std::vector<double> hx_slack;    // |x_l - D_s H_s u_l| - radius_l
};

struct SplitState {
  HyperCube u;
  SplitVector y;
  SplitVector lambda;
  SplitVector mu;  // M u for the current u
  std::size_t iteration = 0;
  std::vector<IterationRecord> history;
};

struct ConvergenceReport {
  std::vector<IterationRecord> history;
  std::size_t iterations = 0;
  bool converged = false;  // primal_tol reached before max_iters
  std::vector<double> hx_radius;
  double pan_radius = 0.0;
};

struct RunResult {
  HyperCube u;
  ConvergenceReport report;
};

// ---------------------------------------------------------------------------
// Objective and constraint evaluation

/// sum_l sum_i |<grad u_l(i), eta(i)>|
inline double levelline_discrepancy(const HyperCube& u, const VectorField& eta) {
  double s = 0.0;
  for (std::size_t l = 0; l < u.bands(); ++l) {
    const VectorField g = gradient(u.plane_copy(l));
    if (!g.same_shape(eta)) throw ShapeError("levelline_discrepancy: eta shape mismatch");
    for (std::size_t i = 0; i < g.size(); ++i) s += std::abs(g.h[i] * eta.h[i] + g.v[i] * eta.v[i]);
  }
  return s;
}

/// sum_l sum_i |grad u_l(i)|
inline double total_variation(const HyperCube& u) {
  double s = 0.0;
  for (std::size_t l = 0; l < u.bands(); ++l) {
    const VectorField g = gradient(u.plane_copy(l));
    for (std::size_t i = 0; i < g.size(); ++i) s += std::hypot(g.h[i], g.v[i]);
  }
  return s;
}

inline double objective(const HyperCube& u, const VectorField& eta, double gamma) {
  return gamma * levelline_discrepancy(u, eta) + (1.0 - gamma) * total_variation(u);
}

/// |x_l - D_s H_s u_l| for every band.
inline std::vector<double> hx_residual_norms(const HyperCube& u, const HyperCube& x,
                                             const SensorModel& model) {
  if (u.bands() != x.bands() || u.width() != x.width() * model.q ||
      u.height() != x.height() * model.q)
    throw ShapeError("hx_residual_norms: shape mismatch");
  SpatialFilter blur(u.width(), u.height(), model.psf);
  std::vector<double> out(u.bands());
  for (std::size_t l = 0; l < u.bands(); ++l) {
    const Plane d = spatial_downsample(blur.apply(u.plane_copy(l)), model.q, model.offset);
    auto xl = x.plane(l);
    double s = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) s += (xl[i] - d[i]) * (xl[i] - d[i]);
    out[l] = std::sqrt(s);
  }
  return out;
}

/// |p - G u|
inline double pan_residual_norm(const HyperCube& u, const PanImage& p, const SensorModel& model) {
  const PanImage gu = pan_mix(u, model.g);
  if (!gu.same_shape(p)) throw ShapeError("pan_residual_norm: shape mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += (p[i] - gu[i]) * (p[i] - gu[i]);
  return std::sqrt(s);
}

// ---------------------------------------------------------------------------
// Fourier-domain least squares

/// u = (M^T M)^{-1} M^T rhs, with M^T M inverted through its DFT symbol.
inline HyperCube solve_u_fourier(const SplitVector& rhs, SplittingOperator& op,
                                 const TransferSet& transfer,
                                 CubeFourierMultiplier& multiplier) {
  const HyperCube mt = op.apply_adjoint(rhs);
  double residue = 0.0;
  HyperCube u = multiplier.apply(mt, transfer.denominator, true, &residue);
  if (residue > 1e-10)
    throw NumericalError("solve_u_fourier: imaginary residue " + std::to_string(residue));
  return u;
}

inline HyperCube solve_u_fourier(const SplitVector& rhs, const SensorModel& model,
                                 const TransferSet& transfer) {
  for (double d : transfer.denominator)
    if (!(d > 0.0)) throw NumericalError("solve_u_fourier: zero denominator");
  SplittingOperator op(transfer.width, transfer.height, model);
  CubeFourierMultiplier mult(transfer.width, transfer.height, transfer.bands);
  return solve_u_fourier(rhs, op, transfer, mult);
}

// ---------------------------------------------------------------------------

class TvlcspSolver {
 public:
  TvlcspSolver(HyperCube x, PanImage p, SensorModel model, SolverConfig config)
      : x_(std::move(x)), p_(std::move(p)), model_(std::move(model)), config_(config),
        op_(checked_width(), p_.height(), model_),
        transfer_(build_transfer_set(model_, p_.width(), p_.height())),
        multiplier_(p_.width(), p_.height(), model_.bands()),
        eta_(eta_field(p_, config_.eps_rel)) {
    const double m = static_cast<double>(x_.pixels());
    const double n = static_cast<double>(p_.size());
    hx_radius_.resize(model_.bands());
    for (std::size_t l = 0; l < model_.bands(); ++l)
      hx_radius_[l] = std::sqrt(m) * model_.sigma_x[l];
    pan_radius_ = std::sqrt(n) * model_.sigma_p;
  }

  const SensorModel& model() const noexcept { return model_; }
  const SolverConfig& config() const noexcept { return config_; }
  const VectorField& eta() const noexcept { return eta_; }
  const TransferSet& transfer() const noexcept { return transfer_; }
  const std::vector<double>& hx_radius() const noexcept { return hx_radius_; }
  double pan_radius() const noexcept { return pan_radius_; }
  SplittingOperator& splitting() noexcept { return op_; }

  /// Optional progress sink; one line every config.log_every iterations.
  void set_progress_stream(std::ostream* os) { progress_ = os; }

  SplitState initialize() {
    SplitState s;
    s.u = upsample_nearest(x_, model_.q);
    s.mu = op_.apply(s.u);
    s.lambda = SplitVector::zeros(p_.width(), p_.height(), model_.bands());
    if (config_.init == InitMode::Model) {
      s.y = s.mu;
    } else {
      s.y = s.mu;
      for (std::size_t l = 0; l < model_.bands(); ++l) {
        const Plane ul = s.u.plane_copy(l);
        s.y.tv[l] = VectorField(ul, ul);
        s.y.levelline[l] = VectorField(ul, ul);
      }
      s.y.hx = s.u;
      s.y.pan.set_plane(0, p_);
    }
    return s;
  }

  void iterate(SplitState& s) {
    const double beta = config_.beta;
    const std::size_t L = model_.bands();
    ++s.iteration;

    SplitVector z = s.mu;
    add_scaled(z, -1.0 / beta, s.lambda);

    const double tau_tv = config_.tv_threshold();
    const double tau_ll = config_.levelline_threshold();
    const SpatialDecimation ds{model_.q, model_.offset};
    for (std::size_t l = 0; l < L; ++l) {
      s.y.tv[l] = prox_tv(z.tv[l], tau_tv);
      s.y.levelline[l] = prox_levelline(z.levelline[l], eta_, tau_ll);
      const BallSpec<SpatialDecimation> ball{x_.plane_copy(l), hx_radius_[l], ds};
      s.y.hx.set_plane(l, project_ball(z.hx.plane_copy(l), ball));
    }
    s.y.pan = project_ball(z.pan, BallSpec<SpectralDecimation>{p_, pan_radius_, {}});
    if (!all_finite(s.y))
      throw NumericalError("non-finite y at iteration " + std::to_string(s.iteration), s.iteration);

    SplitVector rhs = s.y;
    add_scaled(rhs, 1.0 / beta, s.lambda);
    s.u = solve_u_fourier(rhs, op_, transfer_, multiplier_);
    if (!all_finite(s.u.data()))
      throw NumericalError("non-finite u at iteration " + std::to_string(s.iteration), s.iteration);

    s.mu = op_.apply(s.u);
    add_scaled(s.lambda, beta, s.y);
    add_scaled(s.lambda, -beta, s.mu);
    if (!all_finite(s.lambda))
      throw NumericalError("non-finite multiplier at iteration " + std::to_string(s.iteration),
                           s.iteration);
  }

  /// |y - M u| for the state, from its cached M u.
  static double primal_residual(const SplitState& s) {
    SplitVector r = s.y;
    add_scaled(r, -1.0, s.mu);
    return norm2(r);
  }

  IterationRecord record(const SplitState& s) const {
    IterationRecord r;
    r.iteration = s.iteration;
    r.primal_residual = primal_residual(s);
    const double mu_norm = norm2(s.mu);
    r.relative_primal_residual = mu_norm > 0.0 ? r.primal_residual / mu_norm : r.primal_residual;

    double f = 0.0, tv = 0.0;
    for (std::size_t l = 0; l < model_.bands(); ++l) {
      const VectorField& g = s.mu.tv[l];
      for (std::size_t i = 0; i < g.size(); ++i) {
        f += std::abs(g.h[i] * eta_.h[i] + g.v[i] * eta_.v[i]);
        tv += std::hypot(g.h[i], g.v[i]);
      }
    }
    r.objective = config_.gamma * f + (1.0 - config_.gamma) * tv;

    r.hx_slack.resize(model_.bands());
    for (std::size_t l = 0; l < model_.bands(); ++l) {
      const Plane d = spatial_downsample(s.mu.hx.plane_copy(l), model_.q, model_.offset);
      auto xl = x_.plane(l);
      double acc = 0.0;
      for (std::size_t i = 0; i < d.size(); ++i) acc += (xl[i] - d[i]) * (xl[i] - d[i]);
      r.hx_slack[l] = std::sqrt(acc) - hx_radius_[l];
    }
    auto gu = s.mu.pan.plane(0);
    double acc = 0.0;
    for (std::size_t i = 0; i < p_.size(); ++i) acc += (p_[i] - gu[i]) * (p_[i] - gu[i]);
    r.pan_slack = std::sqrt(acc) - pan_radius_;
    return r;
  }

  RunResult run() {
    SplitState s = initialize();
    ConvergenceReport report;
    report.hx_radius = hx_radius_;
    report.pan_radius = pan_radius_;
    const std::size_t every = std::max<std::size_t>(config_.log_every, 1);
    for (std::size_t k = 0; k < config_.max_iters; ++k) {
      iterate(s);
      const bool last = k + 1 == config_.max_iters;
      const double rel = [&] {
        const double mn = norm2(s.mu);
        const double pr = primal_residual(s);
        return mn > 0.0 ? pr / mn : pr;
      }();
      const bool done = config_.primal_tol > 0.0 && rel < config_.primal_tol;
      if (s.iteration % every == 0 || last || done) {
        s.history.push_back(record(s));
        if (progress_ && config_.log_every > 0) {
          const auto& r = s.history.back();
          *progress_ << "iter " << std::setw(6) << r.iteration << "  objective "
                     << std::setprecision(8) << r.objective << "  rel_primal "
                     << std::setprecision(3) << r.relative_primal_residual << '\n';
        }
      }
      if (done) {
        report.converged = true;
        break;
      }
    }
    report.iterations = s.iteration;
    report.history = std::move(s.history);
    return {std::move(s.u), std::move(report)};
  }

 private:
  std::size_t checked_width() const {
    model_.validate();
    config_.validate();
    if (x_.bands() != model_.bands())
      throw ShapeError("TvlcspSolver: cube has " + std::to_string(x_.bands()) +
                       " bands, sensor model " + std::to_string(model_.bands()));
    if (x_.width() * model_.q != p_.width() || x_.height() * model_.q != p_.height())
      throw ShapeError("TvlcspSolver: low-resolution cube " + std::to_string(x_.width()) + "x" +
                       std::to_string(x_.height()) + " times q=" + std::to_string(model_.q) +
                       " does not match panchromatic " + std::to_string(p_.width()) + "x" +
                       std::to_string(p_.height()));
    return p_.width();
  }

  HyperCube x_;
  PanImage p_;
  SensorModel model_;
  SolverConfig config_;
  SplittingOperator op_;
  TransferSet transfer_;
  CubeFourierMultiplier multiplier_;
  VectorField eta_;
  std::vector<double> hx_radius_;
  double pan_radius_ = 0.0;
  std::ostream* progress_ = nullptr;
};

inline SplitState initialize(const HyperCube& x, const PanImage& p, const SensorModel& model,
                             const SolverConfig& config) {
  return TvlcspSolver(x, p, model, config).initialize();
}

inline RunResult run(const HyperCube& x, const PanImage& p, const SensorModel& model,
                     const SolverConfig& config) {
  return TvlcspSolver(x, p, model, config).run();
}

/// iteration,objective,primal_residual,relative_primal_residual,pan_slack,hx_slack_1..L
inline void write_convergence_csv(const ConvergenceReport& report, std::ostream& os) {
  const std::size_t L = report.hx_radius.size();
  os << "iteration,objective,primal_residual,relative_primal_residual,pan_slack";
  for (std::size_t l = 1; l <= L; ++l) os << ",hx_slack_" << l;
  os << '\n' << std::setprecision(17);
  for (const auto& r : report.history) {
    os << r.iteration << ',' << r.objective << ',' << r.primal_residual << ','
       << r.relative_primal_residual << ',' << r.pan_slack;
    for (double s : r.hx_slack) os << ',' << s;
    os << '\n';
  }
}

inline void write_convergence_csv(const ConvergenceReport& report, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot open " + path + " for writing");
  write_convergence_csv(report, os);
}

}  // namespace panfuse
