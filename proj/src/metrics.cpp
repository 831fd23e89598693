#include "weightflow/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <limits>
#include <numeric>
#include <sstream>

#include "weightflow/errors.hpp"
#include "weightflow/numerics.hpp"

namespace wf {

namespace {

void require_order(int p) {
  if (p != 1 && p != 2) throw ConfigError("transport order must be 1 or 2");
}

double point_cost(const double* x, const double* y, int d, int p) {
  double s = 0.0;
  for (int k = 0; k < d; ++k) {
    const double diff = x[k] - y[k];
    s += diff * diff;
  }
  return p == 2 ? s : std::sqrt(s);
}

std::vector<std::size_t> position_order_1d(const WeightedEnsemble& e) {
  std::vector<std::size_t> idx(e.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&e](std::size_t a, std::size_t b) {
    if (e.positions[a] != e.positions[b]) return e.positions[a] < e.positions[b];
    return a < b;
  });
  return idx;
}

}  // namespace

double wasserstein_1d(const WeightedEnsemble& mu, const WeightedEnsemble& nu,
                      int p) {
  require_order(p);
  if (mu.domain.dimension != 1 || nu.domain.dimension != 1)
    throw ConfigError(
        "wasserstein_1d requires one-dimensional ensembles; use "
        "wasserstein_exact for d > 1");
  validate_ensemble(mu, true);
  validate_ensemble(nu, true);
  const std::vector<std::size_t> ia = position_order_1d(mu);
  const std::vector<std::size_t> ib = position_order_1d(nu);
  const double inv_na = 1.0 / static_cast<double>(mu.size());
  const double inv_nb = 1.0 / static_cast<double>(nu.size());

  std::vector<double> terms;
  terms.reserve(mu.size() + nu.size());
  std::size_t i = 0, j = 0;
  double ra = mu.weights[ia[0]] * inv_na;
  double rb = nu.weights[ib[0]] * inv_nb;
  while (true) {
    const double take = std::min(ra, rb);
    if (take > 0.0) {
      const double diff = mu.positions[ia[i]] - nu.positions[ib[j]];
      terms.push_back(take * (p == 2 ? diff * diff : std::abs(diff)));
    }
    ra -= take;
    rb -= take;
    const bool a_done = ra <= 0.0;
    const bool b_done = rb <= 0.0;
    if (a_done && i + 1 < mu.size()) {
      ++i;
      ra = mu.weights[ia[i]] * inv_na;
    } else if (b_done && j + 1 < nu.size()) {
      ++j;
      rb = nu.weights[ib[j]] * inv_nb;
    } else {
      break;
    }
  }
  const double cost = pairwise_sum(terms);
  return p == 2 ? std::sqrt(cost) : cost;
}

namespace {

struct BasicCell {
  std::size_t i = 0;
  std::size_t j = 0;
  double mass = 0.0;
};

struct SimplexSolution {
  std::vector<BasicCell> basis;
  double cost = 0.0;
};

// Transportation simplex on the dense bipartite cost matrix. The basis is a
// spanning tree over sources and sinks, kept non-degenerate in count by
// zero-mass cells; entering variables follow Bland's rule (first negative
// reduced cost in row-major order) so pivoting cannot cycle.
SimplexSolution transport_simplex(const std::vector<double>& xa,
                                  std::vector<double> ma,
                                  const std::vector<double>& xb,
                                  std::vector<double> mb, int d, int p) {
  const std::size_t m = ma.size();
  const std::size_t n = mb.size();
  const double sa = pairwise_sum(ma);
  const double sb = pairwise_sum(mb);
  if (!(sa > 0.0) || !(sb > 0.0))
    throw NumericalError("transport requires positive total mass on both sides");
  const double rebalance = sa / sb;
  for (double& v : mb) v *= rebalance;

  std::vector<double> cost(m * n);
  double cmax = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double c = point_cost(xa.data() + i * d, xb.data() + j * d, d, p);
      cost[i * n + j] = c;
      cmax = std::max(cmax, c);
    }
  // Dual chains run through up to m + n tree edges, so the pricing noise
  // floor scales with the node count.
  const double tol =
      1e-13 * static_cast<double>(m + n) * std::max(1.0, cmax);

  // Northwest-corner start: exactly m + n - 1 cells, degenerate ties filled
  // with zero-mass basics.
  std::vector<BasicCell> basis;
  basis.reserve(m + n);
  {
    std::vector<double> ra = ma;
    std::vector<double> rb = mb;
    std::size_t i = 0, j = 0;
    while (true) {
      const double take = std::min(ra[i], rb[j]);
      basis.push_back({i, j, take});
      ra[i] -= take;
      rb[j] -= take;
      if (i == m - 1 && j == n - 1) break;
      if (ra[i] <= rb[j] && i < m - 1) {
        ++i;
      } else if (j < n - 1) {
        ++j;
      } else {
        ++i;
      }
    }
  }

  const std::size_t n_nodes = m + n;
  std::vector<std::vector<std::size_t>> adjacency(n_nodes);
  std::vector<double> potential(n_nodes);
  std::vector<char> known(n_nodes);
  std::vector<std::size_t> parent_edge(n_nodes);
  std::vector<std::size_t> parent_node(n_nodes);

  const std::size_t max_pivots = 1000 + 100 * n_nodes;
  for (std::size_t pivot = 0;; ++pivot) {
    if (pivot > max_pivots)
      throw NumericalError(
          "transport solver exceeded its pivot budget; the instance may be "
          "ill-conditioned");

    // Duals from the spanning tree (u on sources, v on sinks).
    for (auto& list : adjacency) list.clear();
    for (std::size_t e = 0; e < basis.size(); ++e) {
      adjacency[basis[e].i].push_back(e);
      adjacency[m + basis[e].j].push_back(e);
    }
    std::fill(known.begin(), known.end(), 0);
    potential[0] = 0.0;
    known[0] = 1;
    std::deque<std::size_t> frontier{0};
    while (!frontier.empty()) {
      const std::size_t node = frontier.front();
      frontier.pop_front();
      for (std::size_t e : adjacency[node]) {
        const std::size_t other =
            node < m ? m + basis[e].j : basis[e].i;
        if (known[other]) continue;
        const double c = cost[basis[e].i * n + basis[e].j];
        potential[other] = c - potential[node];
        known[other] = 1;
        frontier.push_back(other);
      }
    }

    // Bland's rule: first cell in row-major order priced below the tree.
    std::size_t enter_i = m, enter_j = n;
    for (std::size_t i = 0; i < m && enter_i == m; ++i) {
      const double ui = potential[i];
      const double* row = cost.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) {
        if (row[j] - ui - potential[m + j] < -tol) {
          enter_i = i;
          enter_j = j;
          break;
        }
      }
    }
    if (enter_i == m) break;  // optimal

    // The unique tree path from the entering row-node to its column-node.
    std::fill(known.begin(), known.end(), 0);
    known[enter_i] = 1;
    frontier.assign(1, enter_i);
    const std::size_t target = m + enter_j;
    while (!frontier.empty() && !known[target]) {
      const std::size_t node = frontier.front();
      frontier.pop_front();
      for (std::size_t e : adjacency[node]) {
        const std::size_t other = node < m ? m + basis[e].j : basis[e].i;
        if (known[other]) continue;
        known[other] = 1;
        parent_edge[other] = e;
        parent_node[other] = node;
        frontier.push_back(other);
      }
    }
    if (!known[target])
      throw NumericalError("transport basis lost connectivity");

    std::vector<std::size_t> path;  // edge indices from target back to enter_i
    for (std::size_t node = target; node != enter_i; node = parent_node[node])
      path.push_back(parent_edge[node]);
    std::reverse(path.begin(), path.end());

    // Walking the cycle from the entering cell, odd path positions give up
    // mass. The path starts at the row node, so even indices are the minus
    // edges.
    double theta = std::numeric_limits<double>::infinity();
    std::size_t leave_pos = path.size();
    for (std::size_t k = 0; k < path.size(); k += 2) {
      const BasicCell& cell = basis[path[k]];
      const bool better =
          cell.mass < theta ||
          (cell.mass == theta &&
           (leave_pos == path.size() ||
            cell.i * n + cell.j <
                basis[path[leave_pos]].i * n + basis[path[leave_pos]].j));
      if (better) {
        theta = cell.mass;
        leave_pos = k;
      }
    }
    for (std::size_t k = 0; k < path.size(); ++k) {
      if (k % 2 == 0)
        basis[path[k]].mass -= theta;
      else
        basis[path[k]].mass += theta;
    }
    const std::size_t leave_edge = path[leave_pos];
    basis[leave_edge] = BasicCell{enter_i, enter_j, theta};
  }

  std::vector<double> cost_terms;
  cost_terms.reserve(basis.size());
  for (const BasicCell& cell : basis)
    if (cell.mass > 0.0)
      cost_terms.push_back(cell.mass * cost[cell.i * n + cell.j]);
  SimplexSolution solution;
  solution.cost = pairwise_sum(cost_terms);
  solution.basis = std::move(basis);
  return solution;
}

double exact_core(const std::vector<double>& xa, const std::vector<double>& ma,
                  const std::vector<double>& xb, const std::vector<double>& mb,
                  int d, int p, TransportPlan* plan) {
  if (ma.size() + mb.size() > 4096)
    throw ConfigError(
        "wasserstein_exact is limited to 4096 combined atoms; subsample the "
        "ensembles first");
  SimplexSolution solution = transport_simplex(xa, ma, xb, mb, d, p);
  if (plan) {
    plan->entries.clear();
    for (const BasicCell& cell : solution.basis)
      if (cell.mass > 0.0)
        plan->entries.push_back({cell.i, cell.j, cell.mass});
    plan->cost = solution.cost;
    plan->order = p;
  }
  return p == 2 ? std::sqrt(solution.cost) : solution.cost;
}

}  // namespace

double wasserstein_exact(const WeightedEnsemble& mu,
                         const WeightedEnsemble& nu, int p,
                         TransportPlan* plan) {
  require_order(p);
  if (mu.domain.dimension != nu.domain.dimension)
    throw ConfigError("transport endpoints must share a dimension");
  validate_ensemble(mu, true);
  validate_ensemble(nu, true);
  std::vector<double> ma(mu.size()), mb(nu.size());
  for (std::size_t i = 0; i < mu.size(); ++i)
    ma[i] = mu.weights[i] / static_cast<double>(mu.size());
  for (std::size_t j = 0; j < nu.size(); ++j)
    mb[j] = nu.weights[j] / static_cast<double>(nu.size());
  return exact_core(mu.positions, ma, nu.positions, mb, mu.domain.dimension, p,
                    plan);
}

double lifted_wasserstein(const LiftedEnsemble& nu_a, const LiftedEnsemble& nu_b,
                          int p, TransportPlan* plan) {
  require_order(p);
  if (nu_a.domain.dimension != nu_b.domain.dimension)
    throw ConfigError("transport endpoints must share a dimension");
  const int d = nu_a.domain.dimension;
  auto lift_points = [d](const LiftedEnsemble& e) {
    std::vector<double> pts(e.size() * static_cast<std::size_t>(d + 1));
    for (std::size_t i = 0; i < e.size(); ++i) {
      for (int k = 0; k < d; ++k)
        pts[i * (d + 1) + static_cast<std::size_t>(k)] =
            e.positions[i * static_cast<std::size_t>(d) + static_cast<std::size_t>(k)];
      pts[i * (d + 1) + static_cast<std::size_t>(d)] = e.weights[i];
    }
    return pts;
  };
  const std::vector<double> pa = lift_points(nu_a);
  const std::vector<double> pb = lift_points(nu_b);
  const std::vector<double> ma(nu_a.size(), 1.0 / static_cast<double>(nu_a.size()));
  const std::vector<double> mb(nu_b.size(), 1.0 / static_cast<double>(nu_b.size()));
  return exact_core(pa, ma, pb, mb, d + 1, p, plan);
}

double path_sup_wasserstein(const Trajectory& traj_a, const Trajectory& traj_b,
                            int p) {
  require_order(p);
  if (traj_a.times.size() != traj_b.times.size())
    throw ConfigError("trajectories store different time grids");
  for (std::size_t s = 0; s < traj_a.times.size(); ++s)
    if (std::abs(traj_a.times[s] - traj_b.times[s]) > 1e-12)
      throw ConfigError("trajectories store different time grids");
  double sup = 0.0;
  for (std::size_t s = 0; s < traj_a.states.size(); ++s) {
    const WeightedEnsemble& a = traj_a.states[s];
    const WeightedEnsemble& b = traj_b.states[s];
    const double w = a.domain.dimension == 1 ? wasserstein_1d(a, b, p)
                                             : wasserstein_exact(a, b, p);
    sup = std::max(sup, w);
  }
  return sup;
}

namespace {

void require_shared_grid(const GridDensity& p, const GridDensity& q) {
  if (p.domain.dimension != q.domain.dimension ||
      p.domain.half_width != q.domain.half_width ||
      p.n_per_axis != q.n_per_axis || p.size() != q.size())
    throw ConfigError("grid divergences require a shared grid");
}

}  // namespace

double kl_grid(const GridDensity& p, const GridDensity& q) {
  require_shared_grid(p, q);
  std::vector<double> terms(p.size());
  for (std::size_t c = 0; c < p.size(); ++c) {
    if (!(q.values[c] > 0.0))
      throw NumericalError("kl_grid target density has a zero cell");
    terms[c] = p.values[c] > 0.0
                   ? p.cell_volume * p.values[c] *
                         (std::log(p.values[c]) - std::log(q.values[c]))
                   : 0.0;
  }
  return pairwise_sum(terms);
}

double chi2_grid(const GridDensity& p, const GridDensity& q) {
  require_shared_grid(p, q);
  std::vector<double> terms(p.size());
  for (std::size_t c = 0; c < p.size(); ++c) {
    if (!(q.values[c] > 0.0))
      throw NumericalError("chi2_grid target density has a zero cell");
    const double r = p.values[c] / q.values[c] - 1.0;
    terms[c] = p.cell_volume * r * r * q.values[c];
  }
  return pairwise_sum(terms);
}

double energy_eval(const DriftStrategy& strategy, const WeightedEnsemble& mu) {
  DriftContext context(strategy);
  return context.energy_value(mu);
}

double energy_eval(DriftContext& context, const WeightedEnsemble& mu) {
  return context.energy_value(mu);
}

double energy_grid(const EnergyFunctional& functional,
                   const ReferenceMeasure& reference, double sigma,
                   const GridDensity& m) {
  if (m.domain.dimension != reference.domain.dimension ||
      m.domain.half_width != reference.domain.half_width)
    throw ConfigError("energy_grid density and reference must share the domain");
  const std::size_t cells = m.size();
  const int d = m.domain.dimension;
  std::vector<double> pi_vals(cells);
  std::vector<double> center(d);
  for (std::size_t c = 0; c < cells; ++c) {
    m.cell_center(c, center.data());
    pi_vals[c] = reference.density(center.data());
  }
  const double mass = pairwise_sum(pi_vals) * m.cell_volume;
  if (!(mass > 0.0))
    throw NumericalError("reference density vanishes on the energy grid");
  std::vector<double> terms(cells);
  for (std::size_t c = 0; c < cells; ++c) {
    const double pi_c = pi_vals[c] / mass;
    if (!(pi_c > 0.0))
      throw NumericalError("reference density has a zero cell on the energy grid");
    terms[c] = m.values[c] > 0.0
                   ? m.cell_volume * m.values[c] *
                         (std::log(m.values[c]) - std::log(pi_c))
                   : 0.0;
  }
  return evaluate_F(functional, m) + sigma * pairwise_sum(terms);
}

EntropyBoundCheck entropy_lower_bound_check(const GridDensity& density,
                                            double delta) {
  if (!(delta > 0.0)) throw ConfigError("entropy bound delta must be positive");
  std::vector<double> terms(density.size());
  for (std::size_t c = 0; c < density.size(); ++c)
    terms[c] = density.values[c] > 0.0
                   ? density.cell_volume * density.values[c] *
                         std::log(density.values[c])
                   : 0.0;
  EntropyBoundCheck check;
  check.lhs = pairwise_sum(terms);
  const double d = static_cast<double>(density.domain.dimension);
  check.rhs = -std::pow(2.0 * M_PI / delta, 0.5 * d) -
              delta * second_moment(density);
  check.holds = check.lhs >= check.rhs - 1e-6;
  return check;
}

}  // namespace wf
