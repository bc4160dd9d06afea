#include "goyld/rate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace goyld {

Trajectory solve_skeleton(const ModelParams& params, const CoefficientFamily& fam,
                          const MarkSpace& marks, const CovarianceQ& q,
                          const ControlPath& control, const IntegratorConfig& cfg,
                          JumpDriftWeight w, const ShellState& u0) {
  detail::IntegrateOptions opts;
  opts.control = &control;
  opts.w = w;
  opts.stochastic = false;
  IntegratorConfig c = cfg;
  c.epsilon = 0.0;
  return detail::integrate(params, fam, marks, q, c, u0, 0, 0, opts);
}

bool RateQuery::satisfied(const Trajectory& traj) const {
  if (traj.censored) return false;
  if (kind == Kind::terminal_state) {
    return h_norm(sub(traj.final_state(), target_state)) <= match_tolerance;
  }
  return traj.final_energy() >= target_energy - match_tolerance;
}

double RateQuery::distance(const Trajectory& traj) const {
  if (traj.censored) return std::numeric_limits<double>::infinity();
  if (kind == Kind::terminal_state) {
    return h_norm(sub(traj.final_state(), target_state));
  }
  return std::max(0.0, target_energy - traj.final_energy());
}

double rate_upper_bound(const RateQuery& query, const ControlPath& control,
                        const ModelParams& params, const CoefficientFamily& fam,
                        const MarkSpace& marks, const CovarianceQ& q,
                        const IntegratorConfig& cfg, JumpDriftWeight w,
                        const ShellState& u0) {
  const double inf = std::numeric_limits<double>::infinity();
  const CostBreakdown cost = control_cost(control, marks, q, cfg.T);
  if (cost.jump_cost > query.budget) return inf;
  const Trajectory traj = solve_skeleton(params, fam, marks, q, control, cfg, w, u0);
  return query.satisfied(traj) ? cost.total : inf;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Optimization variables: per node, (re, im) of psi on the active shells,
// then one phi value per mark. Inactive shells keep psi = 0.
struct Layout {
  std::vector<double> node_times;
  std::vector<int> active_shells;
  int n_shells = 0;
  int n_marks = 0;

  int per_node() const { return 2 * static_cast<int>(active_shells.size()) + n_marks; }
  int dim() const { return per_node() * static_cast<int>(node_times.size()); }
  int phi_offset() const { return 2 * static_cast<int>(active_shells.size()); }

  ControlPath decode(const std::vector<double>& x) const {
    ControlPath c;
    c.time_grid = node_times;
    const int pn = per_node();
    for (std::size_t jn = 0; jn < node_times.size(); ++jn) {
      ShellState psi = zero_state(n_shells);
      const double* base = x.data() + jn * pn;
      for (std::size_t a = 0; a < active_shells.size(); ++a) {
        psi[active_shells[a]] = cplx(base[2 * a], base[2 * a + 1]);
      }
      c.psi.push_back(std::move(psi));
      std::vector<double> phin(n_marks);
      for (int m = 0; m < n_marks; ++m) phin[m] = base[phi_offset() + m];
      c.phi.push_back(std::move(phin));
    }
    return c;
  }

  std::vector<double> encode(const ControlPath& c) const {
    std::vector<double> x(dim(), 0.0);
    const int pn = per_node();
    for (std::size_t jn = 0; jn < node_times.size(); ++jn) {
      // piecewise-constant resample of c onto this grid
      const double t = node_times[jn];
      const ShellState& psi = c.psi_at(t);
      double* base = x.data() + jn * pn;
      for (std::size_t a = 0; a < active_shells.size(); ++a) {
        base[2 * a] = psi[active_shells[a]].real();
        base[2 * a + 1] = psi[active_shells[a]].imag();
      }
      for (int m = 0; m < n_marks; ++m) base[phi_offset() + m] = c.phi_at(t, m);
    }
    return x;
  }

  void project(std::vector<double>& x, double phi_min, double phi_max) const {
    const int pn = per_node();
    for (std::size_t jn = 0; jn < node_times.size(); ++jn) {
      double* base = x.data() + jn * pn;
      for (int m = 0; m < n_marks; ++m) {
        base[phi_offset() + m] = std::clamp(base[phi_offset() + m], phi_min, phi_max);
      }
    }
  }
};

struct Objective {
  const RateQuery* query;
  const ModelParams* params;
  const CoefficientFamily* fam;
  const MarkSpace* marks;
  const CovarianceQ* q;
  const IntegratorConfig* cfg;
  JumpDriftWeight w;
  const ShellState* u0;
  const Layout* layout;
  double beta = 1.0;
  long evals = 0;

  struct Eval {
    double obj = kInf;
    double cost_total = kInf;
    CostBreakdown cost;
    bool feasible = false;
  };

  Eval operator()(const std::vector<double>& x) {
    ++evals;
    Eval e;
    const ControlPath c = layout->decode(x);
    e.cost = control_cost(c, *marks, *q, cfg->T);
    e.cost_total = e.cost.total;
    if (e.cost.jump_cost > query->budget) return e;  // hard budget reject
    Trajectory traj;
    try {
      traj = solve_skeleton(*params, *fam, *marks, *q, c, *cfg, w, *u0);
    } catch (const std::exception&) {
      return e;
    }
    if (traj.censored) return e;
    const double dist = query->distance(traj);
    e.feasible = query->satisfied(traj);
    e.obj = e.cost.total + beta * dist * dist;
    return e;
  }
};

}  // namespace

MinimizeResult minimize_rate(const RateQuery& query, const ModelParams& params,
                             const CoefficientFamily& fam, const MarkSpace& marks,
                             const CovarianceQ& q, const IntegratorConfig& cfg,
                             JumpDriftWeight w, const ShellState& u0,
                             const OptConfig& opt, const ControlPath* warm_start) {
  if (opt.ctrl_nodes < 1) throw std::invalid_argument("minimize_rate: ctrl_nodes >= 1");
  const int n_shells = params.grid.n_shells;
  const int n_marks = marks.size();

  Layout layout;
  layout.n_shells = n_shells;
  layout.n_marks = n_marks;
  for (int j = 0; j < opt.ctrl_nodes; ++j) {
    layout.node_times.push_back(cfg.T * j / opt.ctrl_nodes);
  }
  for (int j = 0; j < n_shells; ++j) {
    if (q.q[j] > 0.0 && fam.sigma_scale[j] != 0.0) layout.active_shells.push_back(j);
  }

  Objective objective{&query, &params, &fam, &marks, &q, &cfg, w, &u0, &layout,
                      opt.beta0, 0};

  MinimizeResult result;
  auto consider = [&](const std::vector<double>& x, const Objective::Eval& e) {
    if (e.feasible && e.cost_total < result.best_cost) {
      result.best_cost = e.cost_total;
      result.best_breakdown = e.cost;
      result.best_control = layout.decode(x);
      result.feasible = true;
      result.trace.push_back(e.cost_total);
    }
  };

  // --- initializations -----------------------------------------------------
  std::vector<std::vector<double>> inits;
  {
    ControlPath null = ControlPath::null_control(n_shells, n_marks);
    inits.push_back(layout.encode(null));
  }
  if (warm_start) inits.push_back(layout.encode(*warm_start));
  if (query.kind == RateQuery::Kind::terminal_energy_above) {
    // scale a constant profile until the target is reached, then bisect
    auto make_scaled = [&](double s) {
      std::vector<double> x(layout.dim(), 0.0);
      const int pn = layout.per_node();
      for (std::size_t jn = 0; jn < layout.node_times.size(); ++jn) {
        double* base = x.data() + jn * pn;
        for (std::size_t a = 0; a < layout.active_shells.size(); ++a) base[2 * a] = s;
        for (int m = 0; m < n_marks; ++m) {
          base[layout.phi_offset() + m] = std::clamp(1.0 + s, opt.phi_min, opt.phi_max);
        }
      }
      return x;
    };
    auto reaches = [&](double s) {
      const ControlPath c = layout.decode(make_scaled(s));
      try {
        const Trajectory tr = solve_skeleton(params, fam, marks, q, c, cfg, w, u0);
        return !tr.censored && query.satisfied(tr);
      } catch (const std::exception&) {
        return false;
      }
    };
    double hi = 1.0;
    bool found = false;
    for (int it = 0; it < 12; ++it) {
      if (reaches(hi)) {
        found = true;
        break;
      }
      hi *= 2.0;
    }
    if (found) {
      double lo = 0.0;
      for (int it = 0; it < 30; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (reaches(mid)) {
          hi = mid;
        } else {
          lo = mid;
        }
      }
      inits.push_back(make_scaled(hi));
    }
  }
  {
    RngStream rng = RngStream::derive(opt.seed, 7, 3);
    for (int r = 0; r < opt.restarts; ++r) {
      std::vector<double> x(layout.dim());
      const int pn = layout.per_node();
      for (std::size_t jn = 0; jn < layout.node_times.size(); ++jn) {
        double* base = x.data() + jn * pn;
        for (int i = 0; i < layout.phi_offset(); ++i) {
          base[i] = 2.0 * rng.next_gaussian();
        }
        for (int m = 0; m < n_marks; ++m) {
          base[layout.phi_offset() + m] = std::exp(rng.next_gaussian());
        }
      }
      layout.project(x, opt.phi_min, opt.phi_max);
      inits.push_back(std::move(x));
    }
  }

  // --- projected gradient with penalty continuation -------------------------
  for (const std::vector<double>& init : inits) {
    std::vector<double> x = init;
    layout.project(x, opt.phi_min, opt.phi_max);
    objective.beta = opt.beta0;
    for (; objective.beta <= opt.beta_max; objective.beta *= 2.0) {
      Objective::Eval fx = objective(x);
      consider(x, fx);
      double step_len = opt.init_step;
      std::vector<double> grad(layout.dim(), 0.0);
      for (int iter = 0; iter < opt.max_iters; ++iter) {
        if (!std::isfinite(fx.obj)) break;
        // finite-difference gradient
        double gnorm2 = 0.0;
        for (int i = 0; i < layout.dim(); ++i) {
          const double h = opt.fd_step * std::max(1.0, std::abs(x[i]));
          std::vector<double> xp = x, xm = x;
          xp[i] += h;
          xm[i] -= h;
          layout.project(xp, opt.phi_min, opt.phi_max);
          layout.project(xm, opt.phi_min, opt.phi_max);
          const double fp = objective(xp).obj;
          const double fm = objective(xm).obj;
          double g = 0.0;
          if (std::isfinite(fp) && std::isfinite(fm)) {
            g = (fp - fm) / (xp[i] - xm[i]);
          } else if (std::isfinite(fp)) {
            g = (fp - fx.obj) / (xp[i] - x[i]);
          } else if (std::isfinite(fm)) {
            g = (fx.obj - fm) / (x[i] - xm[i]);
          }
          grad[i] = g;
          gnorm2 += g * g;
        }
        if (gnorm2 < 1e-18) break;
        // backtracking line search
        bool accepted = false;
        for (int ls = 0; ls < 30; ++ls) {
          std::vector<double> xn = x;
          for (int i = 0; i < layout.dim(); ++i) xn[i] -= step_len * grad[i];
          layout.project(xn, opt.phi_min, opt.phi_max);
          const Objective::Eval fn = objective(xn);
          if (std::isfinite(fn.obj) && fn.obj <= fx.obj - 1e-4 * step_len * gnorm2) {
            x = std::move(xn);
            fx = fn;
            consider(x, fx);
            step_len = std::min(step_len * 1.5, 1e3);
            accepted = true;
            break;
          }
          step_len *= 0.5;
          if (step_len < 1e-14) break;
        }
        if (!accepted) break;
      }
      if (fx.feasible) break;  // tolerance met; no need to stiffen the penalty
    }
  }

  result.evals = objective.evals;
  if (!result.feasible) {
    result.best_control = ControlPath::null_control(n_shells, n_marks);
  }
  return result;
}

}  // namespace goyld
