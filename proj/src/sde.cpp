#include "goyld/sde.hpp"

#include <cmath>
#include <stdexcept>

namespace goyld {

double jump_drift_weight_value(JumpDriftWeight w, double phi) {
  return w == JumpDriftWeight::paper_literal ? ell(phi) : phi - 1.0;
}

const char* to_string(JumpDriftWeight w) {
  return w == JumpDriftWeight::paper_literal ? "paper_literal" : "standard";
}

JumpDriftWeight jump_drift_weight_from_string(const std::string& s) {
  if (s == "paper_literal") return JumpDriftWeight::paper_literal;
  if (s == "standard") return JumpDriftWeight::standard;
  throw std::invalid_argument("unknown jump_drift_weight: " + s);
}

void IntegratorConfig::validate() const {
  if (!(dt > 0.0)) throw std::invalid_argument("integrator: dt must be positive");
  if (!(T > 0.0)) throw std::invalid_argument("integrator: T must be positive");
  if (!(dt <= T)) throw std::invalid_argument("integrator: dt must not exceed T");
  if (scheme != "semi_implicit_em") {
    throw std::invalid_argument("integrator: unknown scheme " + scheme);
  }
  if (!(epsilon >= 0.0)) throw std::invalid_argument("integrator: epsilon must be >= 0");
  if (record_stride < 1) throw std::invalid_argument("integrator: record_stride must be >= 1");
  const double steps = T / dt;
  if (steps > 9e15) throw std::invalid_argument("integrator: T/dt out of range");
  const long n = std::lround(steps);
  if (std::abs(n * dt - T) > 1e-9 * T) {
    throw std::invalid_argument("integrator: dt must divide T");
  }
}

long IntegratorConfig::n_steps() const { return std::lround(T / dt); }

namespace {

// Assembles and applies one semi-implicit step. `events` lists the jumps in
// (t, t+dt] with their times; times matter only for the likelihood weight.
ShellState step_once(const ShellState& u, double t, long step_index,
                     const ShellState* dW,
                     const std::vector<std::pair<double, int>>& events,
                     const ModelParams& p, const CoefficientFamily& fam,
                     const MarkSpace& marks, const CovarianceQ& q, double dt,
                     double eps, const detail::IntegrateOptions& opts, double* logw) {
  const int n = p.grid.n_shells;
  const bool stoch = opts.stochastic && eps > 0.0;
  const ControlPath* ctrl = opts.control;

  ShellState rhs = u;
  if (p.b_enabled) {
    const ShellState b = model_B(u, u, p);
    axpy(rhs, -dt, b);
  }
  if (const ShellState* f = p.forcing.at(t)) axpy(rhs, dt, *f);

  std::vector<cplx> d;
  if (stoch || ctrl) d = fam.sigma_diag(t, u);

  if (ctrl) {
    const ShellState& psi = ctrl->psi_at(t);
    for (int j = 0; j < n; ++j) rhs[j] += dt * d[j] * psi[j];
  }

  // Jump drift per mark: stochastic runs carry the compensator of the
  // phi-tilted clock, so the coefficient is w(phi) - phi (equal to -1 at
  // phi = 1 for either weight); the noise-free skeleton keeps w(phi) alone.
  if (marks.size() > 0 && (stoch || ctrl)) {
    for (int m = 0; m < marks.size(); ++m) {
      const double phim = ctrl ? ctrl->phi_at(t, m) : 1.0;
      const double coef = stoch ? jump_drift_weight_value(opts.w, phim) - phim
                                : jump_drift_weight_value(opts.w, phim);
      if (coef != 0.0) {
        const ShellState g = fam.jump_coeff(u, m);
        axpy(rhs, dt * marks.weights[m] * coef, g);
      }
    }
  }

  if (stoch) {
    const double seps = std::sqrt(eps);
    for (int j = 0; j < n; ++j) rhs[j] += seps * d[j] * (*dW)[j];
    for (const auto& ev : events) {
      const ShellState g = fam.jump_coeff(u, ev.second);
      axpy(rhs, eps, g);
    }
    if (logw && ctrl) {
      const ShellState& psi = ctrl->psi_at(t);
      for (int j = 0; j < n; ++j) {
        if (q.q[j] > 0.0) {
          const cplx mu = psi[j] * dt / seps;
          *logw += (std::norm((*dW)[j]) - std::norm((*dW)[j] + mu)) / (q.q[j] * dt);
        }
      }
      // the jump-count part of the likelihood ratio; the clock-compensator
      // part is accumulated once per trajectory on the control grid, where
      // the integral of (phi - 1) lambda is exact
      for (const auto& ev : events) {
        *logw -= std::log(ctrl->phi_at(ev.first, ev.second));
      }
    }
  }

  ShellState out(n);
  for (int j = 0; j < n; ++j) {
    out[j] = rhs[j] / (1.0 + dt * p.nu * p.grid.k[j] * p.grid.k[j]);
  }
  if (!all_finite(out)) throw BlowupError(step_index, t);
  return out;
}

}  // namespace

namespace detail {

Trajectory integrate(const ModelParams& p, const CoefficientFamily& fam,
                     const MarkSpace& marks, const CovarianceQ& q,
                     const IntegratorConfig& cfg, const ShellState& u0,
                     std::uint64_t seed, std::uint64_t traj_index,
                     const IntegrateOptions& opts) {
  cfg.validate();
  validate_params(p);
  if (static_cast<int>(u0.size()) != p.grid.n_shells) {
    throw std::invalid_argument("simulate: initial state dimension mismatch");
  }
  if (q.dim() != p.grid.n_shells) {
    throw std::invalid_argument("simulate: covariance dimension mismatch");
  }
  if (!all_finite(u0)) throw std::invalid_argument("simulate: initial state must be finite");
  if (opts.control) opts.control->validate(p.grid.n_shells, marks.size(), q);

  const long n = cfg.n_steps();
  const double dt = cfg.dt;
  const double eps = cfg.epsilon;
  const bool stoch = opts.stochastic && eps > 0.0;

  Trajectory tr;
  if (stoch && marks.size() > 0) {
    RngStream jrng = RngStream::derive(seed, traj_index, 0);
    PiecewisePhi phi;
    const PiecewisePhi* phi_ptr = nullptr;
    if (opts.control) {
      phi = opts.control->phi_view();
      phi_ptr = &phi;
    }
    tr.jumps = sample_jump_times(cfg.T, marks, 1.0 / eps, phi_ptr, jrng);
  }
  RngStream wrng = RngStream::derive(seed, traj_index, 1);

  if (opts.log_weight && opts.control && stoch && marks.size() > 0) {
    // exact integrated intensity difference of the tilted jump clock
    const ControlPath& cp = *opts.control;
    double integral = 0.0;
    for (std::size_t jn = 0; jn < cp.time_grid.size(); ++jn) {
      const double t0 = cp.time_grid[jn];
      const double t1 = (jn + 1 < cp.time_grid.size()) ? std::min(cp.time_grid[jn + 1], cfg.T)
                                                       : cfg.T;
      if (t1 <= t0) continue;
      for (int m = 0; m < marks.size(); ++m) {
        integral += (cp.phi[jn][m] - 1.0) * marks.weights[m] * (t1 - t0);
      }
    }
    *opts.log_weight += integral / eps;
  }

  const long expected = n / cfg.record_stride + 2;
  tr.times.reserve(expected);
  tr.states.reserve(expected);
  tr.energy.reserve(expected);
  tr.enstrophy.reserve(expected);
  tr.dissipation.reserve(expected);

  ShellState u = u0;
  double diss = 0.0;
  auto record = [&](double t) {
    tr.times.push_back(t);
    tr.states.push_back(u);
    tr.energy.push_back(h_norm2(u));
    tr.enstrophy.push_back(v_norm2(u, p.grid));
    tr.dissipation.push_back(diss);
  };
  record(0.0);

  std::size_t jp = 0;
  std::vector<std::pair<double, int>> events;
  ShellState dW;
  for (long j = 0; j < n; ++j) {
    const double t = j * dt;
    events.clear();
    if (stoch) {
      if (j + 1 == n) {
        while (jp < tr.jumps.events.size()) events.push_back(tr.jumps.events[jp++]);
      } else {
        const double t_next = (j + 1) * dt;
        while (jp < tr.jumps.events.size() && tr.jumps.events[jp].first <= t_next) {
          events.push_back(tr.jumps.events[jp++]);
        }
      }
      dW = sample_wiener_increment(dt, q, wrng);
    }
    try {
      u = step_once(u, t, j, stoch ? &dW : nullptr, events, p, fam, marks, q, dt, eps,
                    opts, opts.log_weight);
    } catch (const BlowupError& e) {
      tr.censored = true;
      tr.blowup_step = e.step_index;
      // keep only the jump events up to the failure time
      while (!tr.jumps.events.empty() && tr.jumps.events.back().first > t) {
        tr.jumps.events.pop_back();
      }
      return tr;
    }
    diss += p.nu * dt * v_norm2(u, p.grid);
    if ((j + 1) % cfg.record_stride == 0 || j + 1 == n) record((j + 1) * dt);
  }
  return tr;
}

}  // namespace detail

ShellState step(const ShellState& u, double t, const ShellState& dW,
                const std::vector<std::pair<double, int>>& jumps_in_step,
                const ModelParams& params, const CoefficientFamily& fam,
                const MarkSpace& marks, const CovarianceQ& q, double dt,
                double epsilon, long step_index) {
  if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be positive");
  detail::IntegrateOptions opts;
  opts.stochastic = epsilon > 0.0;
  const ShellState* dw_ptr = nullptr;
  if (opts.stochastic) {
    if (static_cast<int>(dW.size()) != params.grid.n_shells) {
      throw std::invalid_argument("step: increment dimension mismatch");
    }
    dw_ptr = &dW;
  }
  return step_once(u, t, step_index, dw_ptr, jumps_in_step, params, fam, marks, q, dt,
                   epsilon, opts, nullptr);
}

EnergyStats energy_statistics(const std::vector<Trajectory>& ensemble,
                              const std::vector<double>& p_list) {
  if (ensemble.empty()) throw std::invalid_argument("energy_statistics: empty ensemble");
  EnergyStats st;
  st.n = ensemble.size();
  std::vector<double> sup_e, dis;
  std::vector<std::vector<double>> sup_p(p_list.size());
  for (const Trajectory& tr : ensemble) {
    if (tr.censored) {
      ++st.censored;
      continue;
    }
    double se = 0.0;
    for (double e : tr.energy) se = std::max(se, e);
    sup_e.push_back(se);
    dis.push_back(tr.dissipation.back());
    for (std::size_t i = 0; i < p_list.size(); ++i) {
      sup_p[i].push_back(std::pow(se, p_list[i] / 2.0));  // sup |u|^p = (sup |u|^2)^(p/2)
    }
  }
  st.sup_energy = mean_se(sup_e);
  st.dissipation = mean_se(dis);
  for (std::size_t i = 0; i < p_list.size(); ++i) {
    st.p_moments.emplace_back(p_list[i], mean_se(sup_p[i]));
  }
  return st;
}

Trajectory simulate(const ModelParams& params, const CoefficientFamily& fam,
                    const MarkSpace& marks, const CovarianceQ& q,
                    const IntegratorConfig& cfg, const ShellState& u0,
                    std::uint64_t seed, std::uint64_t traj_index) {
  detail::IntegrateOptions opts;
  opts.stochastic = true;
  return detail::integrate(params, fam, marks, q, cfg, u0, seed, traj_index, opts);
}

Trajectory simulate_controlled(const ModelParams& params, const CoefficientFamily& fam,
                               const MarkSpace& marks, const CovarianceQ& q,
                               const IntegratorConfig& cfg, const ControlPath& control,
                               JumpDriftWeight w, const ShellState& u0,
                               std::uint64_t seed, std::uint64_t traj_index,
                               double* log_weight) {
  detail::IntegrateOptions opts;
  opts.control = &control;
  opts.w = w;
  opts.stochastic = true;
  opts.log_weight = log_weight;
  if (log_weight) *log_weight = 0.0;
  return detail::integrate(params, fam, marks, q, cfg, u0, seed, traj_index, opts);
}

}  // namespace goyld
