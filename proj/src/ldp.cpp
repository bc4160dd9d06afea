#include "goyld/ldp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace goyld {

bool event_hit(const EventSpec& event, const Trajectory& traj) {
  return traj.final_energy() >= event.energy_threshold;
}

PathMetric path_metric(const Trajectory& a, const Trajectory& b, const ShellGrid& grid) {
  if (a.times.size() != b.times.size()) {
    throw std::invalid_argument("path_metric: trajectories use different record grids");
  }
  PathMetric m;
  for (std::size_t j = 0; j < a.times.size(); ++j) {
    if (std::abs(a.times[j] - b.times[j]) > 1e-12 * std::max(1.0, a.times.back())) {
      throw std::invalid_argument("path_metric: trajectories use different record grids");
    }
    const ShellState d = sub(a.states[j], b.states[j]);
    m.sup_h = std::max(m.sup_h, h_norm2(d));
    if (j + 1 < a.times.size()) {
      m.l2_v += (a.times[j + 1] - a.times[j]) * v_norm2(d, grid);
    }
  }
  m.combined = m.sup_h + m.l2_v;
  return m;
}

MonotonicityReport check_monotonicity(const ModelParams& params, const CoefficientFamily& fam,
                                      const MarkSpace& marks, const CovarianceQ& q, double r,
                                      double epsilon, int samples, std::uint64_t seed,
                                      double tol) {
  if (!(r > 0.0)) throw std::invalid_argument("monotonicity: r must be positive");
  if (samples < 1) throw std::invalid_argument("monotonicity: samples >= 1");
  if (fam.lipschitz_L > 0.0 && !(epsilon < params.nu / (2.0 * fam.lipschitz_L))) {
    throw std::invalid_argument("monotonicity: epsilon must satisfy eps < nu/(2L)");
  }
  validate_params(params);

  MonotonicityReport rep;
  rep.samples = samples;
  rep.r = r;
  rep.epsilon = epsilon;
  const int n = params.grid.n_shells;
  const double r4nu3 = r * r * r * r / (params.nu * params.nu * params.nu);
  RngStream rng = RngStream::derive(seed, 3, 0);

  for (int s = 0; s < samples; ++s) {
    const double scale_u = std::pow(10.0, 1.7 * rng.next_unit() - 1.0);
    ShellState u = gaussian_state(n, rng, scale_u);
    ShellState v = gaussian_state(n, rng);
    const double l4 = l4_norm(v);
    if (l4 > 0.0) {
      const double target = r * std::pow(rng.next_unit(), 0.25);
      const double f = target / l4;
      for (auto& z : v) z *= f;
    }
    const ShellState w = sub(u, v);
    const double w2 = h_norm2(w);

    const ShellState df = sub(apply_F(u, params), apply_F(v, params));
    const double drift_term = h_inner(df, w);
    const double ball_term = r4nu3 * w2;

    double noise_term = 0.0;
    if (epsilon > 0.0) {
      const std::vector<cplx> du = fam.sigma_diag(0.0, u);
      const std::vector<cplx> dv = fam.sigma_diag(0.0, v);
      double diff = 0.0;
      for (int j = 0; j < n; ++j) diff += q.q[j] * std::norm(du[j] - dv[j]);
      for (int m = 0; m < marks.size(); ++m) {
        diff += marks.weights[m] * h_norm2(sub(fam.jump_coeff(u, m), fam.jump_coeff(v, m)));
      }
      noise_term = epsilon * diff;
    }

    const double lhs = drift_term - ball_term + noise_term;
    const double scale = std::abs(drift_term) + ball_term + noise_term +
                         params.nu * v_norm2(w, params.grid);
    const double ratio = scale > 0.0 ? lhs / scale : 0.0;
    rep.max_ratio = std::max(rep.max_ratio, ratio);
    if (lhs > tol * scale) ++rep.violations;
  }
  rep.pass = rep.violations == 0;
  return rep;
}

EnergyBoundsReport check_energy_bounds(
    const ModelParams& params, const CovarianceQ& q, const MarkSpace& marks,
    const std::vector<std::pair<std::string, CoefficientFamily>>& families,
    const std::vector<double>& epsilons, const IntegratorConfig& base_cfg,
    const ShellState& u0, std::size_t n_paths, const std::vector<double>& p_list,
    std::uint64_t seed) {
  EnergyBoundsReport rep;
  rep.p_list = p_list;
  rep.pass = true;
  const double T = base_cfg.T;
  const double f_integral = params.forcing.vprime_sq_integral(params.grid, T);
  std::size_t tag = 0;

  for (const auto& [name, fam] : families) {
    std::vector<std::vector<MeanSE>> fam_p(p_list.size());
    for (double eps : epsilons) {
      IntegratorConfig cfg = base_cfg;
      cfg.epsilon = eps;
      const std::uint64_t cell_seed = sub_seed(seed, tag++);
      std::vector<Trajectory> ensemble(n_paths);
      parallel_for(n_paths, [&](std::size_t i) {
        ensemble[i] = simulate(params, fam, marks, q, cfg, u0, cell_seed, i);
      });

      EnergyCell cell;
      cell.family = name;
      cell.epsilon = eps;
      const double K = fam.growth_K;
      const double factor = 1.0 + eps * K * T * std::exp(eps * K * T);
      cell.rhs = factor * (h_norm2(u0) + f_integral / params.nu + eps * K * T);

      std::vector<double> endpoint, supen, dis;
      std::vector<std::vector<double>> sup_p(p_list.size());
      for (const Trajectory& tr : ensemble) {
        if (tr.censored) {
          ++cell.censored;
          continue;
        }
        double se = 0.0;
        for (double e : tr.energy) se = std::max(se, e);
        supen.push_back(se);
        dis.push_back(tr.dissipation.back());
        endpoint.push_back(tr.final_energy() + tr.dissipation.back());
        for (std::size_t ip = 0; ip < p_list.size(); ++ip) {
          sup_p[ip].push_back(std::pow(se, p_list[ip] / 2.0));
        }
      }
      cell.endpoint_plus_dissipation = mean_se(endpoint);
      cell.sup_energy = mean_se(supen);
      cell.dissipation = mean_se(dis);
      const bool ok_endpoint =
          cell.endpoint_plus_dissipation.mean - 3.0 * cell.endpoint_plus_dissipation.se <=
          cell.rhs;
      const bool ok_sup = cell.sup_energy.mean - 3.0 * cell.sup_energy.se <= cell.rhs;
      cell.pass = ok_endpoint && ok_sup && cell.censored == 0;
      rep.pass = rep.pass && cell.pass;
      rep.cells.push_back(cell);

      for (std::size_t ip = 0; ip < p_list.size(); ++ip) {
        fam_p[ip].push_back(mean_se(sup_p[ip]));
      }
    }
    if (rep.p_moments.empty()) {
      rep.p_moments = fam_p;
    } else {
      for (std::size_t ip = 0; ip < p_list.size(); ++ip) {
        for (auto& ms : fam_p[ip]) rep.p_moments[ip].push_back(ms);
      }
    }
  }

  // p-moments: finite, and nonincreasing along each family's descending
  // epsilon ladder within Monte Carlo slack
  rep.p_moments_ok = true;
  const std::size_t n_eps = epsilons.size();
  for (std::size_t ip = 0; ip < rep.p_moments.size(); ++ip) {
    const auto& series = rep.p_moments[ip];
    for (std::size_t i = 0; i < series.size(); ++i) {
      if (!std::isfinite(series[i].mean)) rep.p_moments_ok = false;
      const bool first_of_family = (i % n_eps) == 0;
      if (!first_of_family) {
        const double slack = 3.0 * (series[i].se + series[i - 1].se);
        if (series[i].mean > series[i - 1].mean + slack) rep.p_moments_ok = false;
      }
    }
  }
  rep.pass = rep.pass && rep.p_moments_ok;
  return rep;
}

WeakConvergenceReport check_weak_convergence(const ModelParams& params,
                                             const CoefficientFamily& fam,
                                             const MarkSpace& marks, const CovarianceQ& q,
                                             const ControlPath& control, JumpDriftWeight w,
                                             const std::vector<double>& eps_ladder,
                                             std::size_t n_paths,
                                             const IntegratorConfig& base_cfg,
                                             const ShellState& u0, std::uint64_t seed,
                                             double ratio_max, double final_frac) {
  WeakConvergenceReport rep;
  const Trajectory skel = solve_skeleton(params, fam, marks, q, control, base_cfg, w, u0);
  std::size_t tag = 0;
  for (double eps : eps_ladder) {
    IntegratorConfig cfg = base_cfg;
    cfg.epsilon = eps;
    const std::uint64_t rung_seed = sub_seed(seed, tag++);
    std::vector<double> metrics(n_paths, 0.0);
    parallel_for(n_paths, [&](std::size_t i) {
      const Trajectory tr =
          simulate_controlled(params, fam, marks, q, cfg, control, w, u0, rung_seed, i);
      metrics[i] = tr.censored ? std::numeric_limits<double>::infinity()
                               : path_metric(tr, skel, params.grid).combined;
    });
    rep.epsilons.push_back(eps);
    rep.medians.push_back(percentile(metrics, 50.0));
    rep.p95s.push_back(percentile(metrics, 95.0));
  }
  bool ok = rep.medians.size() >= 2;
  for (std::size_t i = 1; i < rep.medians.size(); ++i) {
    if (!(rep.medians[i] < rep.medians[i - 1])) ok = false;
    if (!(rep.medians[i] <= ratio_max * rep.medians[i - 1])) ok = false;
  }
  if (!rep.medians.empty() && rep.medians.front() > 0.0) {
    rep.final_over_first = rep.medians.back() / rep.medians.front();
    if (!(rep.final_over_first < final_frac)) ok = false;
  }
  rep.pass = ok;
  return rep;
}

ContinuityReport check_skeleton_continuity(const ModelParams& params,
                                           const CoefficientFamily& fam,
                                           const MarkSpace& marks, const CovarianceQ& q,
                                           const ControlPath& control, JumpDriftWeight w,
                                           const std::vector<double>& deltas,
                                           const IntegratorConfig& cfg,
                                           const ShellState& u0) {
  ContinuityReport rep;
  rep.deltas = deltas;
  const Trajectory base = solve_skeleton(params, fam, marks, q, control, cfg, w, u0);
  for (double d : deltas) {
    ControlPath scaled_psi = control;
    for (auto& psi : scaled_psi.psi) {
      for (auto& z : psi) z *= (1.0 + d);
    }
    rep.psi_metrics.push_back(
        path_metric(solve_skeleton(params, fam, marks, q, scaled_psi, cfg, w, u0), base,
                    params.grid)
            .combined);

    ControlPath shifted_phi = control;
    for (auto& node : shifted_phi.phi) {
      for (auto& p : node) p += d;
    }
    rep.phi_metrics.push_back(
        path_metric(solve_skeleton(params, fam, marks, q, shifted_phi, cfg, w, u0), base,
                    params.grid)
            .combined);
  }
  auto slope = [&](const std::vector<double>& m) {
    std::vector<double> lx, ly, lw;
    for (std::size_t i = 0; i < deltas.size(); ++i) {
      if (m[i] > 0.0) {
        lx.push_back(std::log(deltas[i]));
        ly.push_back(std::log(m[i]));
        lw.push_back(1.0);
      }
    }
    if (lx.size() < 2) return 0.0;
    return wls_fit(lx, ly, lw).second;
  };
  rep.psi_slope = slope(rep.psi_metrics);
  rep.phi_slope = slope(rep.phi_metrics);
  bool decreasing = true;
  for (std::size_t i = 1; i < deltas.size(); ++i) {
    // deltas descending implies metrics descending
    if (deltas[i] < deltas[i - 1]) {
      if (!(rep.psi_metrics[i] < rep.psi_metrics[i - 1])) decreasing = false;
      if (!(rep.phi_metrics[i] < rep.phi_metrics[i - 1])) decreasing = false;
    }
  }
  rep.pass = decreasing && rep.psi_slope > 1.5 && rep.psi_slope < 2.6 &&
             rep.phi_slope > 1.5 && rep.phi_slope < 2.6;
  return rep;
}

RareEventEstimate estimate_rare_event(const EventSpec& event, const ModelParams& params,
                                      const CoefficientFamily& fam, const MarkSpace& marks,
                                      const CovarianceQ& q, const IntegratorConfig& cfg,
                                      const ShellState& u0, std::size_t n_paths,
                                      std::uint64_t seed,
                                      const ControlPath* importance_control,
                                      std::vector<double>* raw_out) {
  if (n_paths < 100) throw std::invalid_argument("estimate_rare_event: n_paths >= 100");
  RareEventEstimate est;
  est.n = n_paths;
  est.weighted = importance_control != nullptr;

  std::vector<double> value(n_paths, 0.0);   // indicator or weighted indicator
  std::vector<int> status(n_paths, 0);       // 0 ok, 1 censored, 2 excluded
  parallel_for(n_paths, [&](std::size_t i) {
    if (importance_control) {
      double logw = 0.0;
      const Trajectory tr =
          simulate_controlled(params, fam, marks, q, cfg, *importance_control,
                              JumpDriftWeight::standard, u0, seed, i, &logw);
      if (tr.censored) {
        status[i] = 1;
        return;
      }
      if (!std::isfinite(logw) || logw > 700.0) {
        status[i] = 2;
        return;
      }
      value[i] = event_hit(event, tr) ? std::exp(logw) : 0.0;
    } else {
      const Trajectory tr = simulate(params, fam, marks, q, cfg, u0, seed, i);
      if (tr.censored) {
        status[i] = 1;
        return;
      }
      value[i] = event_hit(event, tr) ? 1.0 : 0.0;
    }
  });

  std::size_t effective = 0;
  for (std::size_t i = 0; i < n_paths; ++i) {
    if (status[i] == 1) ++est.censored;
    if (status[i] == 2) ++est.excluded;
    if (status[i] == 0) ++effective;
  }
  if (raw_out) *raw_out = value;

  if (!importance_control) {
    for (std::size_t i = 0; i < n_paths; ++i) {
      if (status[i] == 0 && value[i] > 0.0) ++est.hits;
    }
    est.p_hat = effective ? static_cast<double>(est.hits) / effective : 0.0;
    const WilsonCI ci = wilson_ci(est.hits, effective);
    est.ci_lo = ci.lo;
    est.ci_hi = ci.hi;
    est.se = effective ? std::sqrt(est.p_hat * (1.0 - est.p_hat) / effective) : 0.0;
  } else {
    double sum = 0.0;
    for (std::size_t i = 0; i < n_paths; ++i) {
      if (status[i] == 0) {
        sum += value[i];
        if (value[i] > 0.0) ++est.hits;
      }
    }
    const double mean = effective ? sum / effective : 0.0;
    // scaled two-pass variance: squared deviations of very small weighted
    // values would underflow otherwise
    double dev_max = 0.0;
    for (std::size_t i = 0; i < n_paths; ++i) {
      if (status[i] == 0) dev_max = std::max(dev_max, std::abs(value[i] - mean));
    }
    double ss = 0.0;
    if (dev_max > 0.0) {
      for (std::size_t i = 0; i < n_paths; ++i) {
        if (status[i] == 0) {
          const double d = (value[i] - mean) / dev_max;
          ss += d * d;
        }
      }
    }
    est.p_hat = mean;
    est.se = effective > 1 && dev_max > 0.0
                 ? dev_max * std::sqrt(ss / (effective - 1.0) / effective)
                 : 0.0;
    est.ci_lo = std::max(0.0, mean - 1.96 * est.se);
    est.ci_hi = std::min(1.0, mean + 1.96 * est.se);
  }
  return est;
}

DecayReport ldp_decay_check(const EventSpec& event, const ModelParams& params,
                            const CoefficientFamily& fam, const MarkSpace& marks,
                            const CovarianceQ& q, const IntegratorConfig& base_cfg,
                            const ShellState& u0, const std::vector<double>& eps_ladder,
                            const std::vector<std::size_t>& n_paths_schedule,
                            std::uint64_t seed, const ControlPath* importance_control,
                            double rate_bound) {
  if (eps_ladder.size() != n_paths_schedule.size()) {
    throw std::invalid_argument("ldp_decay_check: ladder and schedule sizes differ");
  }
  for (std::size_t i = 1; i < eps_ladder.size(); ++i) {
    if (!(eps_ladder[i] < eps_ladder[i - 1])) {
      throw std::invalid_argument("ldp_decay_check: epsilons must be strictly decreasing");
    }
  }
  {
    // the event must be rare: threshold strictly above the noise-free endpoint
    IntegratorConfig free_cfg = base_cfg;
    free_cfg.epsilon = 0.0;
    const Trajectory free_flow = simulate(params, fam, marks, q, free_cfg, u0, 0);
    if (!(event.energy_threshold > free_flow.final_energy())) {
      throw std::invalid_argument(
          "ldp_decay_check: threshold must exceed the noise-free endpoint energy");
    }
  }
  DecayReport rep;
  rep.rate_bound = rate_bound;
  for (std::size_t i = 0; i < eps_ladder.size(); ++i) {
    DecayRung rung;
    rung.epsilon = eps_ladder[i];
    IntegratorConfig cfg = base_cfg;
    cfg.epsilon = rung.epsilon;
    rung.est = estimate_rare_event(event, params, fam, marks, q, cfg, u0,
                                   n_paths_schedule[i], sub_seed(seed, 100 + i),
                                   importance_control);
    rung.usable = rung.est.p_hat > 0.0 && rung.est.ci_lo > 0.0;
    if (rung.usable) {
      rung.y = rung.epsilon * std::log(rung.est.p_hat);
      rung.y_lo = rung.epsilon * std::log(rung.est.ci_lo);
      rung.y_hi = rung.epsilon * std::log(rung.est.ci_hi);
      ++rep.usable_rungs;
    }
    rep.rungs.push_back(rung);
  }

  std::vector<double> xs, ys, ws;
  for (const DecayRung& r : rep.rungs) {
    if (!r.usable) continue;
    xs.push_back(r.epsilon);
    ys.push_back(r.y);
    const double hw = std::max(1e-12, 0.5 * (r.y_hi - r.y_lo));
    ws.push_back(1.0 / (hw * hw));
    rep.smallest_raw = r.y;  // ladder is descending, so the last usable wins
  }
  if (xs.size() >= 2) {
    rep.extrapolated = wls_fit(xs, ys, ws).first;
  } else if (xs.size() == 1) {
    rep.extrapolated = ys[0];
  }
  if (std::isfinite(rate_bound) && rate_bound > 0.0) {
    rep.relative_gap = std::abs(rep.extrapolated + rate_bound) / rate_bound;
  }
  return rep;
}

}  // namespace goyld
