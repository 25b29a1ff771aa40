#include "gransformer/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "gransformer/common.hpp"
#include "gransformer/familiarity.hpp"
#include "gransformer/graph.hpp"
#include "gransformer/made.hpp"
#include "gransformer/model.hpp"
#include "gransformer/sampling.hpp"
#include "gransformer/tensor.hpp"

namespace gransformer {

namespace {

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

Graph random_graph(int n, double p, Rng& rng) {
  std::vector<std::pair<int, int>> edges;
  for (int u = 0; u < n; ++u) {
    for (int v = u + 1; v < n; ++v) {
      if (rng.uniform() < p) edges.push_back({u, v});
    }
  }
  return Graph(n, edges);
}

Graph random_connected(int n, double extra_p, Rng& rng) {
  std::vector<std::pair<int, int>> edges;
  for (int v = 1; v < n; ++v) {
    edges.push_back({static_cast<int>(rng.below(v)), v});
  }
  for (int u = 0; u < n; ++u) {
    for (int v = u + 1; v < n; ++v) {
      if (rng.uniform() < extra_p) edges.push_back({u, v});
    }
  }
  return Graph(n, edges);
}

// ---- walks ----

OracleReport walks_suite(uint64_t seed) {
  Rng rng(seed);
  long mismatches = 0;
  std::string first_bad;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(11));
    const Graph g = random_graph(n, rng.uniform(0.2, 0.6), rng);
    const auto stack = path_counts(g, 6);
    for (int k = 0; k <= 6; ++k) {
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          const long long expected = brute_force_walk_counts(g, i, j, k);
          const long long got = static_cast<long long>(stack.count(k, i, j));
          if (got != expected) {
            ++mismatches;
            if (first_bad.empty()) {
              first_bad = "trial " + std::to_string(trial) + " (k=" +
                          std::to_string(k) + ", i=" + std::to_string(i) +
                          ", j=" + std::to_string(j) + ")";
            }
          }
        }
      }
    }
  }

  OracleCase c;
  c.name = "exact-count-match";
  c.pass = mismatches == 0;
  c.detail = "graphs=200 n<=12 k<=6 mismatches=" + std::to_string(mismatches);
  if (!first_bad.empty()) c.detail += " first at " + first_bad;
  return {"walks", {c}};
}

// ---- theorem1 ----

// Conditional tables with the prefix packed as a bitmask, bit j-1 the most
// recent; general tables vary per prefix, dominant tables concentrate nearly
// all mass on one strong bit the way trained rows do.
struct ConditionalTable {
  std::vector<std::vector<double>> p;

  RowConditional accessor() const {
    const ConditionalTable* t = this;
    return [t](const std::vector<uint8_t>& prefix) {
      uint32_t key = 0;
      for (size_t j = 0; j < prefix.size(); ++j) {
        if (prefix[j]) key |= 1u << j;
      }
      return t->p[prefix.size()][key];
    };
  }
};

ConditionalTable random_table(int length, Rng& rng) {
  ConditionalTable t;
  t.p.resize(static_cast<size_t>(length));
  for (int j = 0; j < length; ++j) {
    t.p[static_cast<size_t>(j)].resize(size_t{1} << j);
    for (double& v : t.p[static_cast<size_t>(j)]) {
      v = rng.uniform(0.02, 0.9);
    }
  }
  return t;
}

ConditionalTable dominant_bit_table(int length, Rng& rng) {
  ConditionalTable t;
  t.p.resize(static_cast<size_t>(length));
  const int strong = rng.below(length);
  for (int j = 0; j < length; ++j) {
    const double v = j == strong ? rng.uniform(0.85, 0.95)
                                 : rng.uniform(0.002, 0.01);
    t.p[static_cast<size_t>(j)].assign(size_t{1} << j, v);
  }
  return t;
}

double clamp01(double p) {
  const double lo = 1e-7;
  return p < lo ? lo : (p > 1.0 - lo ? 1.0 - lo : p);
}

// Probability the sequential sampler assigns to one full row, chained from
// the per-bit law it draws against.
double sampler_chain(const RowConditional& cond, int length, double log_p_zero,
                     const std::vector<uint8_t>& row) {
  double prob = 1.0;
  double log_zero_prefix = 0.0;
  bool all_zero = true;
  std::vector<uint8_t> prefix;
  for (int j = 0; j < length; ++j) {
    const double p_bit = cond(prefix);
    const double pt = constrained_conditional(p_bit, log_zero_prefix,
                                              log_p_zero, all_zero,
                                              j == length - 1);
    prob *= row[static_cast<size_t>(j)] ? pt : 1.0 - pt;
    if (row[static_cast<size_t>(j)]) {
      all_zero = false;
    } else if (all_zero) {
      log_zero_prefix += std::log1p(-clamp01(p_bit));
    }
    prefix.push_back(row[static_cast<size_t>(j)]);
  }
  return prob;
}

// The target law by direct enumeration: chain probability of each nonzero
// row divided by 1 - P(all zeros).
double enumerated_chain(const RowConditional& cond,
                        const std::vector<uint8_t>& row) {
  double prob = 1.0;
  std::vector<uint8_t> prefix;
  for (uint8_t bit : row) {
    const double p = cond(prefix);
    prob *= bit ? p : 1.0 - p;
    prefix.push_back(bit);
  }
  return prob;
}

void unpack_row(uint32_t mask, int length, std::vector<uint8_t>* row) {
  row->assign(static_cast<size_t>(length), 0);
  for (int j = 0; j < length; ++j) {
    (*row)[static_cast<size_t>(j)] = (mask >> j) & 1u;
  }
}

OracleReport constrained_law_suite(uint64_t seed) {
  OracleReport report;
  report.suite = "theorem1";

  // Exact law against enumeration, every nonzero row, short lengths.
  {
    Rng rng(seed);
    double worst_gap = 0.0;
    double worst_mass_gap = 0.0;
    for (int length = 1; length <= 4; ++length) {
      for (int trial = 0; trial < 10; ++trial) {
        const ConditionalTable table = trial % 2 == 0
                                           ? random_table(length, rng)
                                           : dominant_bit_table(length, rng);
        const RowConditional cond = table.accessor();
        const auto dist = make_constrained_row(cond, length);

        double p_zero = 1.0;
        std::vector<uint8_t> row;
        {
          std::vector<uint8_t> prefix;
          for (int j = 0; j < length; ++j) {
            p_zero *= 1.0 - cond(prefix);
            prefix.push_back(0);
          }
        }

        double mass = 0.0;
        for (uint32_t mask = 1; mask < (1u << length); ++mask) {
          unpack_row(mask, length, &row);
          const double want = enumerated_chain(cond, row) / (1.0 - p_zero);
          const double got =
              sampler_chain(cond, length, dist.log_p_zero, row);
          worst_gap = std::max(worst_gap, std::abs(want - got));
          mass += got;
        }
        worst_mass_gap = std::max(worst_mass_gap, std::abs(mass - 1.0));
      }
    }
    OracleCase c;
    c.name = "exact-law";
    c.pass = worst_gap <= 1e-12 && worst_mass_gap <= 1e-12;
    c.detail = "tables=40 lengths<=4 max_gap=" + fmt(worst_gap) +
               " max_mass_gap=" + fmt(worst_mass_gap);
    report.cases.push_back(std::move(c));
  }

  // Sampler draws against an independent rejection sampler, total variation.
  {
    Rng rng(seed + 1);
    const int kDraws = 100000;
    double worst_tv = 0.0;
    long zero_rows = 0;
    long cap_failures = 0;
    long total_draws = 0;
    for (int trial = 0; trial < 20; ++trial) {
      const int length = 1 + (trial * 7) % 10;
      const ConditionalTable table = dominant_bit_table(length, rng);
      const RowConditional cond = table.accessor();
      const auto dist = make_constrained_row(cond, length);

      std::vector<long> direct(size_t{1} << length, 0);
      std::vector<long> rejected(size_t{1} << length, 0);
      std::vector<uint8_t> row;
      for (int d = 0; d < kDraws; ++d) {
        row = sample_row(dist, rng);
        uint32_t mask = 0;
        for (int j = 0; j < length; ++j) {
          if (row[static_cast<size_t>(j)]) mask |= 1u << j;
        }
        if (mask == 0) ++zero_rows;
        ++direct[mask];
        ++total_draws;

        const RejectionSample rs = rejection_sample_oracle(cond, length, rng);
        if (!rs.ok) {
          ++cap_failures;
          continue;
        }
        mask = 0;
        for (int j = 0; j < length; ++j) {
          if (rs.row[static_cast<size_t>(j)]) mask |= 1u << j;
        }
        if (mask == 0) ++zero_rows;
        ++rejected[mask];
        ++total_draws;
      }

      double tv = 0.0;
      for (size_t cell = 0; cell < direct.size(); ++cell) {
        tv += std::abs(static_cast<double>(direct[cell]) -
                       static_cast<double>(rejected[cell]));
      }
      tv /= 2.0 * kDraws;
      worst_tv = std::max(worst_tv, tv);
    }

    OracleCase c;
    c.name = "sampler-vs-rejection-tv";
    c.pass = worst_tv <= 0.01 && cap_failures == 0;
    c.detail = "tables=20 draws_per_side=100000 worst_tv=" + fmt(worst_tv);
    if (cap_failures > 0) {
      c.detail += " rejection_cap_failures=" + std::to_string(cap_failures);
    }
    report.cases.push_back(std::move(c));

    OracleCase z;
    z.name = "no-zero-rows";
    z.pass = zero_rows == 0;
    z.detail = "draws=" + std::to_string(total_draws) +
               " zero_rows=" + std::to_string(zero_rows);
    report.cases.push_back(std::move(z));
  }

  return report;
}

// ---- made ----

// Walks the nonzero mask entries as a layered DAG and reports which outputs
// each input unit can reach, direct links included.
std::vector<std::vector<bool>> reachable_outputs(const MadeMasks& m) {
  const int in_w = m.input_width();
  std::vector<std::vector<bool>> result(static_cast<size_t>(in_w),
                                        std::vector<bool>(m.n_max, false));
  for (int u = 0; u < in_w; ++u) {
    std::vector<bool> prev(static_cast<size_t>(in_w), false);
    prev[static_cast<size_t>(u)] = true;
    for (const auto& mask : m.layer_masks) {
      std::vector<bool> next(static_cast<size_t>(mask->cols), false);
      for (int a = 0; a < mask->rows; ++a) {
        if (!prev[static_cast<size_t>(a)]) continue;
        for (int w = 0; w < mask->cols; ++w) {
          if (mask->at(a, w) != 0.0f) next[static_cast<size_t>(w)] = true;
        }
      }
      prev = std::move(next);
    }
    for (int a = 0; a < m.out_mask->rows; ++a) {
      if (!prev[static_cast<size_t>(a)]) continue;
      for (int j = 0; j < m.n_max; ++j) {
        if (m.out_mask->at(a, j) != 0.0f) {
          result[static_cast<size_t>(u)][static_cast<size_t>(j)] = true;
        }
      }
    }
    for (int j = 0; j < m.n_max; ++j) {
      if (m.direct_mask->at(u, j) != 0.0f) {
        result[static_cast<size_t>(u)][static_cast<size_t>(j)] = true;
      }
    }
  }
  return result;
}

OracleReport made_suite(uint64_t seed) {
  OracleReport report;
  report.suite = "made";

  {
    long bad_edges = 0;
    for (uint64_t s = seed; s < seed + 50; ++s) {
      const auto masks = build_masks(10, 5, {20, 20}, s);
      const auto reach = reachable_outputs(masks);
      for (int u = 0; u < masks.input_width(); ++u) {
        const int t = masks.input_tags[static_cast<size_t>(u)];
        for (int j = 0; j < masks.n_max; ++j) {
          const bool expected = t == 0 || t < j + 1;
          if (reach[static_cast<size_t>(u)][static_cast<size_t>(j)] !=
              expected) {
            ++bad_edges;
          }
        }
      }
    }
    OracleCase c;
    c.name = "reachability-equals-tag-order";
    c.pass = bad_edges == 0;
    c.detail = "seeds=50 n_max=10 bad_edges=" + std::to_string(bad_edges);
    report.cases.push_back(std::move(c));
  }

  {
    Rng rng(seed + 100);
    long violations = 0;
    const auto masks = build_masks(10, 6, {20, 20}, seed + 3);
    const auto params = make_made_params("made", masks, rng);
    for (int target_case = 0; target_case < 10; ++target_case) {
      auto cond = make_tensor(1, 6);
      for (auto& v : cond->data) {
        v = static_cast<float>(rng.uniform(-1.0, 1.0));
      }
      auto target = make_tensor(1, 10);
      for (auto& v : target->data) v = rng.below(2) ? 1.0f : 0.0f;

      Tape tape(false);
      const auto base = made_forward(tape, target, cond, masks, params);
      for (int jp = 0; jp < 10; ++jp) {
        for (int variant = 0; variant < 3; ++variant) {
          auto moved = make_tensor(1, 10, target->data);
          if (variant == 0) {
            moved->data[static_cast<size_t>(jp)] =
                1.0f - moved->data[static_cast<size_t>(jp)];
          } else {
            moved->data[static_cast<size_t>(jp)] +=
                variant == 1 ? 1e-3f : -1e-3f;
          }
          const auto p = made_forward(tape, moved, cond, masks, params);
          for (int j = 0; j <= jp; ++j) {
            if (p->at(0, j) != base->at(0, j)) ++violations;
          }
        }
      }
    }
    OracleCase c;
    c.name = "outputs-ignore-later-bits";
    c.pass = violations == 0;
    c.detail = "targets=10 sweeps=flip,+1e-3,-1e-3 violations=" +
               std::to_string(violations);
    report.cases.push_back(std::move(c));
  }

  return report;
}

// ---- leakage ----

OracleReport leakage_suite(uint64_t seed) {
  OracleReport report;
  report.suite = "leakage";

  ModelConfig base;
  base.n_max = 12;
  base.n_k = 6;
  base.layers = 2;
  base.d_hidden = 32;
  base.d_k = 16;

  const double h = 1e-3;
  Rng data_rng(seed);
  const Graph g = random_connected(10, 0.35, data_rng);
  const auto pi = bfs_order(g, 0, seed);
  const auto seq = to_sequence(g, pi, base.n_max);

  int combo = 0;
  for (int dual = 0; dual < 2; ++dual) {
    for (int fam = 0; fam < 2; ++fam) {
      for (int pos = 0; pos < 2; ++pos, ++combo) {
        ModelConfig cfg = base;
        cfg.use_dual_attention = dual != 0;
        cfg.use_familiarity = fam != 0;
        cfg.use_graph_pos_enc = pos != 0;
        const Model m = make_model(cfg, seed + static_cast<uint64_t>(combo));

        double worst = 0.0;
        Tape tape(false);
        // Input row r feeds encoder position r, so outputs strictly before r
        // may not move; the sweep past row n also covers padding isolation.
        for (int r = 1; r <= cfg.n_max; ++r) {
          for (int c = 0; c < cfg.n_max; ++c) {
            auto up = build_structures(m, seq);
            auto down = build_structures(m, seq);
            up.l_rows->at(r, c) += static_cast<float>(h);
            down.l_rows->at(r, c) -= static_cast<float>(h);
            const auto out_up = encoder_forward(tape, m, up);
            const auto out_down = encoder_forward(tape, m, down);
            for (int p = 0; p < r; ++p) {
              for (int d = 0; d < cfg.d_hidden; ++d) {
                const double sens =
                    std::abs(static_cast<double>(out_up->at(p, d)) -
                             out_down->at(p, d)) /
                    (2.0 * h);
                worst = std::max(worst, sens);
              }
            }
          }
        }

        OracleCase c;
        c.name = "dual=" + std::to_string(dual) +
                 " fam=" + std::to_string(fam) + " pos=" + std::to_string(pos);
        c.pass = worst <= 1e-6;
        c.detail = "max_sensitivity=" + fmt(worst);
        report.cases.push_back(std::move(c));
      }
    }
  }
  return report;
}

// ---- gradcheck ----

// The configuration is pinned rather than seeded: central differences sit
// close to relu corners for some parameter draws, and a corner crossing would
// flag a perfectly correct gradient. This draw was scanned to keep every
// probe clear at h = 1e-3.
OracleReport gradcheck_suite(uint64_t) {
  Rng rng(414);
  ModelConfig cfg;
  cfg.n_max = 7;
  cfg.n_k = 4;
  cfg.layers = 1;
  cfg.d_hidden = 8;
  cfg.d_k = 4;
  Model m = make_model(cfg, 24);
  const Graph g = random_connected(5, 0.3, rng);
  const auto pi = bfs_order(g, rng.below(5), rng.below(1u << 30));
  const auto seq = to_sequence(g, pi, cfg.n_max);
  const auto sc = build_structures(m, seq);
  auto build = [&](Tape& tape) { return graph_nll(tape, m, sc); };
  const auto res = grad_check(build, model_params(m), 1e-3, 1e-3);

  OracleCase c;
  c.name = "full-loss-finite-difference";
  c.pass = res.pass;
  c.detail = "h=0.001 tol=0.001 max_rel_err=" + fmt(res.max_rel_err) +
             " worst=" + res.worst;
  return {"gradcheck", {c}};
}

}  // namespace

bool OracleReport::all_pass() const {
  for (const auto& c : cases) {
    if (!c.pass) return false;
  }
  return !cases.empty();
}

std::vector<std::string> oracle_suite_names() {
  return {"walks", "theorem1", "made", "leakage", "gradcheck"};
}

OracleReport run_oracle_suite(const std::string& suite, uint64_t seed) {
  if (suite == "walks") return walks_suite(seed);
  if (suite == "theorem1") return constrained_law_suite(seed);
  if (suite == "made") return made_suite(seed);
  if (suite == "leakage") return leakage_suite(seed);
  if (suite == "gradcheck") return gradcheck_suite(seed);
  throw config_error("oracle: unknown suite '" + suite +
                     "'; available: walks, theorem1, made, leakage, gradcheck");
}

}  // namespace gransformer
