#include "tsinv/bart.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <utility>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/tools/roots.hpp>

#include "tsinv/errors.hpp"
#include "tsinv/random.hpp"

namespace tsinv {

std::size_t DecisionTree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.var < 0; }));
}

double solve_sigma_prior_scale(double nu, double anchor, double quantile) {
  if (!(nu > 0.0) || !(anchor > 0.0) || !(quantile > 0.0 && quantile < 1.0))
    throw DomainError("invalid sigma prior calibration");
  const boost::math::chi_squared chi2(nu);
  // P(sigma <= anchor) = P(chi2_nu >= nu * lambda / anchor^2), decreasing in lambda.
  auto gap = [&](double log_lambda) {
    const double x = nu * std::exp(log_lambda) / (anchor * anchor);
    return boost::math::cdf(boost::math::complement(chi2, x)) - quantile;
  };
  double lo = std::log(anchor * anchor) - 60.0;
  double hi = std::log(anchor * anchor) + 10.0;
  boost::math::tools::eps_tolerance<double> tol(50);
  std::uintmax_t max_iter = 200;
  const auto bracket = boost::math::tools::toms748_solve(gap, lo, hi, tol, max_iter);
  return std::exp(0.5 * (bracket.first + bracket.second));
}

double sample_quantile(std::vector<double> values, double prob) {
  if (values.empty()) throw DomainError("quantile of an empty sample");
  const double h = (static_cast<double>(values.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(lo), values.end());
  const double v_lo = values[lo];
  double v_hi = v_lo;
  if (hi != lo)
    v_hi = *std::min_element(values.begin() + static_cast<std::ptrdiff_t>(lo) + 1, values.end());
  return v_lo + (h - static_cast<double>(lo)) * (v_hi - v_lo);
}

BartPrediction summarize_draws(std::vector<double> draws) {
  if (draws.empty()) throw DomainError("no posterior draws");
  BartPrediction out;
  out.mean = std::accumulate(draws.begin(), draws.end(), 0.0) / static_cast<double>(draws.size());
  out.q05 = sample_quantile(draws, 0.05);
  out.q95 = sample_quantile(draws, 0.95);
  out.draws = std::move(draws);
  return out;
}

namespace {

struct WorkNode {
  int parent = -1;
  int left = -1;
  int right = -1;
  int var = -1;
  int cut = -1;
  int depth = 0;
  double mu = 0.0;
  bool used = true;
};

struct WorkTree {
  std::vector<WorkNode> nodes{WorkNode{}};
  std::vector<int> free_slots;

  bool leaf(int i) const { return nodes[static_cast<std::size_t>(i)].left < 0; }
  WorkNode& at(int i) { return nodes[static_cast<std::size_t>(i)]; }
  const WorkNode& at(int i) const { return nodes[static_cast<std::size_t>(i)]; }

  int add(WorkNode n) {
    if (!free_slots.empty()) {
      const int i = free_slots.back();
      free_slots.pop_back();
      at(i) = n;
      return i;
    }
    nodes.push_back(n);
    return static_cast<int>(nodes.size()) - 1;
  }
  void drop(int i) {
    at(i).used = false;
    free_slots.push_back(i);
  }
  template <class F>
  void each(F&& f) const {
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (nodes[i].used) f(static_cast<int>(i));
  }
  bool root_only() const { return leaf(0); }
};

struct LeafStats {
  int n = 0;
  double sum = 0.0;
};

// Everything about the data and prior that does not change during the chain.
class Model {
 public:
  Model(const Eigen::MatrixXd& X, const BartOptions& opt, double mu_sd)
      : X_(X), opt_(opt), d_(static_cast<int>(X.cols())), tau2_(mu_sd * mu_sd) {
    cuts_.resize(static_cast<std::size_t>(opt.cutpoints));
    for (int j = 0; j < opt.cutpoints; ++j)
      cuts_[static_cast<std::size_t>(j)] = (j + 1.0) / (opt.cutpoints + 1.0);
  }

  int dim() const { return d_; }
  double cut_value(int c) const { return cuts_[static_cast<std::size_t>(c)]; }

  // Available cut indices [lo, hi) for `var` in the cell of node i.
  std::pair<int, int> cut_range(const WorkTree& t, int i, int var) const {
    int lo = 0;
    int hi = opt_.cutpoints;
    int child = i;
    int parent = t.at(i).parent;
    while (parent >= 0) {
      const WorkNode& p = t.at(parent);
      if (p.var == var) {
        if (p.left == child)
          hi = std::min(hi, p.cut);
        else
          lo = std::max(lo, p.cut + 1);
      }
      child = parent;
      parent = p.parent;
    }
    return {lo, hi};
  }

  int available_vars(const WorkTree& t, int i) const {
    int count = 0;
    for (int v = 0; v < d_; ++v) {
      const auto [lo, hi] = cut_range(t, i, v);
      if (hi > lo) ++count;
    }
    return count;
  }

  double split_prob(const WorkTree& t, int i) const {
    if (available_vars(t, i) == 0) return 0.0;
    return opt_.alpha * std::pow(1.0 + t.at(i).depth, -opt_.beta);
  }

  // Structure plus uniform split-rule prior.
  double log_prior(const WorkTree& t) const {
    double lp = 0.0;
    t.each([&](int i) {
      const WorkNode& n = t.at(i);
      if (t.leaf(i)) {
        lp += std::log1p(-split_prob(t, i));
      } else {
        const auto [lo, hi] = cut_range(t, i, n.var);
        lp += std::log(split_prob(t, i)) - std::log(available_vars(t, i)) -
              std::log(static_cast<double>(hi - lo));
      }
    });
    return lp;
  }

  bool rules_valid(const WorkTree& t) const {
    bool ok = true;
    t.each([&](int i) {
      if (!ok || t.leaf(i)) return;
      const auto [lo, hi] = cut_range(t, i, t.at(i).var);
      if (t.at(i).cut < lo || t.at(i).cut >= hi) ok = false;
    });
    return ok;
  }

  int find_leaf(const WorkTree& t, Eigen::Index row) const {
    int i = 0;
    while (!t.leaf(i)) {
      const WorkNode& n = t.at(i);
      i = X_(row, n.var) < cut_value(n.cut) ? n.left : n.right;
    }
    return i;
  }

  void assign(const WorkTree& t, std::vector<int>& leaf_of) const {
    leaf_of.resize(static_cast<std::size_t>(X_.rows()));
    for (Eigen::Index r = 0; r < X_.rows(); ++r) leaf_of[static_cast<std::size_t>(r)] = find_leaf(t, r);
  }

  void stats(const WorkTree& t, const std::vector<int>& leaf_of, const std::vector<double>& resid,
             std::vector<LeafStats>& out) const {
    out.assign(t.nodes.size(), LeafStats{});
    for (std::size_t r = 0; r < leaf_of.size(); ++r) {
      LeafStats& s = out[static_cast<std::size_t>(leaf_of[r])];
      ++s.n;
      s.sum += resid[r];
    }
  }

  // Log marginal likelihood of the leaf data with mu integrated out, up to terms
  // that are identical for every partition of the same observations.
  double log_marginal(const WorkTree& t, const std::vector<LeafStats>& st, double sigma2) const {
    double ll = 0.0;
    t.each([&](int i) {
      if (!t.leaf(i)) return;
      const LeafStats& s = st[static_cast<std::size_t>(i)];
      const double denom = sigma2 + s.n * tau2_;
      ll += 0.5 * std::log(sigma2 / denom) + tau2_ * s.sum * s.sum / (2.0 * sigma2 * denom);
    });
    return ll;
  }

  bool leaves_populated(const WorkTree& t, const std::vector<LeafStats>& st) const {
    bool ok = true;
    t.each([&](int i) {
      if (t.leaf(i) && st[static_cast<std::size_t>(i)].n < opt_.min_leaf_size) ok = false;
    });
    return ok;
  }

  double tau2() const { return tau2_; }

 private:
  const Eigen::MatrixXd& X_;
  const BartOptions& opt_;
  int d_;
  double tau2_;
  std::vector<double> cuts_;
};

std::vector<int> internals_of(const WorkTree& t) {
  std::vector<int> out;
  t.each([&](int i) {
    if (!t.leaf(i)) out.push_back(i);
  });
  return out;
}

// Internal nodes whose children are both leaves.
std::vector<int> nogs_of(const WorkTree& t) {
  std::vector<int> out;
  t.each([&](int i) {
    if (!t.leaf(i) && t.leaf(t.at(i).left) && t.leaf(t.at(i).right)) out.push_back(i);
  });
  return out;
}

std::vector<int> growable_of(const WorkTree& t, const Model& model) {
  std::vector<int> out;
  t.each([&](int i) {
    if (t.leaf(i) && model.available_vars(t, i) > 0) out.push_back(i);
  });
  return out;
}

// (parent, child) pairs of internal nodes.
std::vector<std::pair<int, int>> swap_pairs_of(const WorkTree& t) {
  std::vector<std::pair<int, int>> out;
  t.each([&](int i) {
    if (t.leaf(i)) return;
    for (int c : {t.at(i).left, t.at(i).right})
      if (!t.leaf(c)) out.emplace_back(i, c);
  });
  return out;
}

template <class T>
const T& pick(const std::vector<T>& v, Rng& rng) {
  return v[static_cast<std::size_t>(rng() % v.size())];
}

int uniform_int(int lo, int hi_exclusive, Rng& rng) {
  return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi_exclusive - lo));
}

void grow_at(WorkTree& t, int leaf, int var, int cut) {
  WorkNode child;
  child.parent = leaf;
  child.depth = t.at(leaf).depth + 1;
  child.mu = t.at(leaf).mu;
  const int l = t.add(child);
  const int r = t.add(child);
  WorkNode& n = t.at(leaf);
  n.left = l;
  n.right = r;
  n.var = var;
  n.cut = cut;
}

void prune_at(WorkTree& t, int node) {
  WorkNode& n = t.at(node);
  t.drop(n.left);
  t.drop(n.right);
  n.left = n.right = -1;
  n.var = n.cut = -1;
}

class Sampler {
 public:
  Sampler(const Eigen::MatrixXd& X, std::vector<double> y, const BartOptions& opt,
          const BartHyper& hyper)
      : X_(X), y_(std::move(y)), opt_(opt), hyper_(hyper), model_(X, opt, hyper.mu_sd),
        rng_(opt.seed), n_(y_.size()) {
    trees_.resize(static_cast<std::size_t>(opt.trees));
    leaf_of_.assign(trees_.size(), std::vector<int>(n_, 0));
    const double mean = std::accumulate(y_.begin(), y_.end(), 0.0) / static_cast<double>(n_);
    for (auto& t : trees_) t.at(0).mu = mean / opt.trees;
    fit_.assign(n_, mean);
    double ss = 0.0;
    for (double v : y_) ss += (v - mean) * (v - mean);
    const double sd = n_ > 1 ? std::sqrt(ss / static_cast<double>(n_ - 1)) : 0.0;
    sigma2_ = sd > 0.0 ? sd * sd : hyper.sigma_anchor * hyper.sigma_anchor;
    resid_.resize(n_);
  }

  void sweep() {
    for (std::size_t j = 0; j < trees_.size(); ++j) {
      WorkTree& tree = trees_[j];
      std::vector<int>& leaf_of = leaf_of_[j];
      for (std::size_t i = 0; i < n_; ++i)
        resid_[i] = y_[i] - fit_[i] + tree.at(leaf_of[i]).mu;
      propose(tree, leaf_of);
      draw_leaf_means(tree, leaf_of);
      for (std::size_t i = 0; i < n_; ++i)
        fit_[i] = y_[i] - resid_[i] + tree.at(leaf_of[i]).mu;
    }
    draw_sigma();
  }

  PosteriorDraw snapshot() const {
    PosteriorDraw draw;
    draw.sigma = std::sqrt(sigma2_);
    for (std::size_t j = 0; j < trees_.size(); ++j) {
      const WorkTree& t = trees_[j];
      if (t.root_only()) {
        draw.offset += t.at(0).mu;
        continue;
      }
      draw.trees.push_back(flatten(t));
      draw.slots.push_back(static_cast<std::int32_t>(j));
    }
    return draw;
  }

  double acceptance_rate() const {
    return proposals_ ? static_cast<double>(accepted_) / static_cast<double>(proposals_) : 0.0;
  }

 private:
  DecisionTree flatten(const WorkTree& t) const {
    DecisionTree out;
    out.nodes.reserve(t.nodes.size());
    out.nodes.push_back({});
    // (work node, flat slot) pairs; children are laid out adjacently.
    std::vector<std::pair<int, std::int32_t>> stack{{0, 0}};
    while (!stack.empty()) {
      const auto [w, f] = stack.back();
      stack.pop_back();
      const WorkNode& n = t.at(w);
      TreeNode& flat = out.nodes[static_cast<std::size_t>(f)];
      if (t.leaf(w)) {
        flat.var = -1;
        flat.value = n.mu;
        continue;
      }
      const auto left = static_cast<std::int32_t>(out.nodes.size());
      flat.var = n.var;
      flat.value = model_.cut_value(n.cut);
      flat.left = left;
      out.nodes.push_back({});
      out.nodes.push_back({});
      stack.emplace_back(n.left, left);
      stack.emplace_back(n.right, left + 1);
    }
    return out;
  }

  // One Metropolis-Hastings step on the structure of `tree` given resid_.
  void propose(WorkTree& tree, std::vector<int>& leaf_of) {
    const double p_bd = opt_.p_grow + opt_.p_prune;
    const double total = p_bd + opt_.p_change + opt_.p_swap;
    const double u = uniform01(rng_) * total;

    WorkTree next = tree;
    double log_q_ratio = 0.0;  // log q(next -> tree) - log q(tree -> next)

    if (u < p_bd) {
      const std::vector<int> growable = growable_of(tree, model_);
      const double pb = birth_prob(tree, growable.size());
      if (uniform01(rng_) < pb) {
        const int leaf = pick(growable, rng_);
        std::vector<int> vars;
        for (int v = 0; v < model_.dim(); ++v) {
          const auto [lo, hi] = model_.cut_range(tree, leaf, v);
          if (hi > lo) vars.push_back(v);
        }
        const int var = pick(vars, rng_);
        const auto [lo, hi] = model_.cut_range(tree, leaf, var);
        const int cut = uniform_int(lo, hi, rng_);
        grow_at(next, leaf, var, cut);
        const double pd_next = 1.0 - birth_prob(next, growable_of(next, model_).size());
        log_q_ratio = std::log(pd_next) - std::log(static_cast<double>(nogs_of(next).size())) -
                      (std::log(pb) - std::log(static_cast<double>(growable.size())) -
                       std::log(static_cast<double>(vars.size())) - std::log(static_cast<double>(hi - lo)));
      } else {
        const std::vector<int> nogs = nogs_of(tree);
        if (nogs.empty()) return;
        const int node = pick(nogs, rng_);
        const int var = tree.at(node).var;
        const auto [lo, hi] = model_.cut_range(tree, node, var);
        const int vars = model_.available_vars(tree, node);
        prune_at(next, node);
        const double pb_next = birth_prob(next, growable_of(next, model_).size());
        log_q_ratio = std::log(pb_next) - std::log(static_cast<double>(growable_of(next, model_).size())) -
                      std::log(static_cast<double>(vars)) - std::log(static_cast<double>(hi - lo)) -
                      (std::log(1.0 - pb) - std::log(static_cast<double>(nogs.size())));
      }
    } else if (u < p_bd + opt_.p_change) {
      const std::vector<int> internals = internals_of(tree);
      if (internals.empty()) return;
      const int node = pick(internals, rng_);
      std::vector<int> vars;
      for (int v = 0; v < model_.dim(); ++v) {
        const auto [lo, hi] = model_.cut_range(tree, node, v);
        if (hi > lo) vars.push_back(v);
      }
      const int var = pick(vars, rng_);
      const auto [lo, hi] = model_.cut_range(tree, node, var);
      const auto [old_lo, old_hi] = model_.cut_range(tree, node, tree.at(node).var);
      next.at(node).var = var;
      next.at(node).cut = uniform_int(lo, hi, rng_);
      // Internal-node count and available variables at `node` are unchanged.
      log_q_ratio = std::log(static_cast<double>(hi - lo)) - std::log(static_cast<double>(old_hi - old_lo));
    } else {
      const auto pairs = swap_pairs_of(tree);
      if (pairs.empty()) return;
      const auto [parent, child] = pick(pairs, rng_);
      WorkNode& p = next.at(parent);
      const WorkNode& l = next.at(p.left);
      const WorkNode& r = next.at(p.right);
      const bool both = !next.leaf(p.left) && !next.leaf(p.right) && l.var == r.var && l.cut == r.cut;
      const int pv = p.var;
      const int pc = p.cut;
      if (both) {
        p.var = l.var;
        p.cut = l.cut;
        for (int c : {p.left, p.right}) {
          next.at(c).var = pv;
          next.at(c).cut = pc;
        }
      } else {
        WorkNode& c = next.at(child);
        p.var = c.var;
        p.cut = c.cut;
        c.var = pv;
        c.cut = pc;
      }
      log_q_ratio = std::log(static_cast<double>(pairs.size())) -
                    std::log(static_cast<double>(swap_pairs_of(next).size()));
    }

    ++proposals_;
    if (!model_.rules_valid(next)) return;
    std::vector<int> next_leaf_of;
    model_.assign(next, next_leaf_of);
    std::vector<LeafStats> st_next;
    model_.stats(next, next_leaf_of, resid_, st_next);
    if (!model_.leaves_populated(next, st_next)) return;
    std::vector<LeafStats> st_cur;
    model_.stats(tree, leaf_of, resid_, st_cur);

    const double log_ratio = model_.log_prior(next) - model_.log_prior(tree) +
                             model_.log_marginal(next, st_next, sigma2_) -
                             model_.log_marginal(tree, st_cur, sigma2_) + log_q_ratio;
    if (std::isfinite(log_ratio) && std::log(uniform01(rng_)) < log_ratio) {
      tree = std::move(next);
      leaf_of = std::move(next_leaf_of);
      ++accepted_;
    }
  }

  double birth_prob(const WorkTree& t, std::size_t growable) const {
    if (t.root_only()) return growable > 0 ? 1.0 : 0.0;
    if (growable == 0) return 0.0;
    return opt_.p_grow / (opt_.p_grow + opt_.p_prune);
  }

  void draw_leaf_means(WorkTree& tree, const std::vector<int>& leaf_of) {
    std::vector<LeafStats> st;
    model_.stats(tree, leaf_of, resid_, st);
    const double tau2 = model_.tau2();
    tree.each([&](int i) {
      if (!tree.leaf(i)) return;
      const LeafStats& s = st[static_cast<std::size_t>(i)];
      const double post_var = 1.0 / (s.n / sigma2_ + 1.0 / tau2);
      const double post_mean = post_var * s.sum / sigma2_;
      tree.at(i).mu = post_mean + std::sqrt(post_var) * normal_(rng_);
    });
  }

  void draw_sigma() {
    double ssr = 0.0;
    for (std::size_t i = 0; i < n_; ++i) ssr += (y_[i] - fit_[i]) * (y_[i] - fit_[i]);
    std::chi_squared_distribution<double> chi2(hyper_.nu + static_cast<double>(n_));
    sigma2_ = (hyper_.nu * hyper_.lambda + ssr) / chi2(rng_);
  }

  const Eigen::MatrixXd& X_;
  std::vector<double> y_;
  const BartOptions& opt_;
  BartHyper hyper_;
  Model model_;
  Rng rng_;
  std::normal_distribution<double> normal_;
  std::size_t n_;
  std::vector<WorkTree> trees_;
  std::vector<std::vector<int>> leaf_of_;
  std::vector<double> fit_;
  std::vector<double> resid_;
  double sigma2_ = 1.0;
  long proposals_ = 0;
  long accepted_ = 0;
};

void validate(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const BartOptions& opt) {
  if (X.rows() < 2) throw DomainError("BART fit needs at least two points");
  if (X.rows() != y.size()) throw DomainError("design and response sizes differ");
  if (!y.allFinite()) throw DomainError("responses must be finite");
  if (opt.trees < 1 || opt.cutpoints < 1 || opt.min_leaf_size < 1)
    throw DomainError("trees, cutpoints and min_leaf_size must be positive");
  if (opt.thin < 1 || opt.burn_in < 0 || opt.iterations <= opt.burn_in ||
      (opt.iterations - opt.burn_in) / opt.thin < 1)
    throw DomainError("chain settings leave no retained draws");
  if (!(opt.k > 0.0) || !(opt.nu > 0.0) || !(opt.anchor_fraction > 0.0))
    throw DomainError("k, nu and anchor_fraction must be positive");
  if (opt.p_grow <= 0.0 || opt.p_prune < 0.0 || opt.p_change < 0.0 || opt.p_swap < 0.0)
    throw DomainError("invalid move probabilities");
}

}  // namespace

TreeEnsembleFit fit_bart(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const BartOptions& options) {
  validate(X, y, options);
  const auto n = static_cast<std::size_t>(y.size());

  TreeEnsembleFit fit;
  fit.dim = static_cast<int>(X.cols());
  fit.m = options.trees;
  fit.options = options;

  const double lo = y.minCoeff();
  const double hi = y.maxCoeff();
  if (hi > lo) {
    fit.transform = {0.5 * (lo + hi), hi - lo};
  } else {
    fit.transform = {lo, 1.0};
  }
  std::vector<double> z(n);
  for (std::size_t i = 0; i < n; ++i) z[i] = fit.transform.forward(y[static_cast<Eigen::Index>(i)]);

  const double z_mean = std::accumulate(z.begin(), z.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double v : z) ss += (v - z_mean) * (v - z_mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));

  BartHyper& h = fit.hyper;
  h.k = options.k;
  h.nu = options.nu;
  h.quantile = options.quantile;
  h.sigma_anchor = options.anchor_fraction * (sd > 0.0 ? sd : 1.0);
  h.lambda = solve_sigma_prior_scale(options.nu, h.sigma_anchor, options.quantile);
  h.mu_sd = std::sqrt(1.0 / (4.0 * options.k * options.k * options.trees));

  Sampler sampler(X, std::move(z), fit.options, h);
  const int kept = (options.iterations - options.burn_in) / options.thin;
  fit.draws.reserve(static_cast<std::size_t>(kept));
  for (int it = 0; it < options.iterations; ++it) {
    sampler.sweep();
    if (it >= options.burn_in && (it - options.burn_in) % options.thin == 0 &&
        static_cast<int>(fit.draws.size()) < kept)
      fit.draws.push_back(sampler.snapshot());
  }
  fit.acceptance_rate = sampler.acceptance_rate();
  return fit;
}

namespace {

bool same_shape(const DecisionTree& a, const DecisionTree& b) {
  if (a.nodes.size() != b.nodes.size()) return false;
  for (std::size_t i = 0; i < a.nodes.size(); ++i) {
    const TreeNode& u = a.nodes[i];
    const TreeNode& v = b.nodes[i];
    if (u.var != v.var) return false;
    if (u.var >= 0 && (u.left != v.left || u.value != v.value)) return false;
  }
  return true;
}

// Leaf of each point for the last shape seen in one ensemble position. Consecutive
// draws mostly share tree shapes, so traversal is skipped when the shape repeats.
struct SlotCache {
  const DecisionTree* shape = nullptr;
  std::vector<std::int32_t> leaf;
};

// Per-draw sums at the rows of `rows`.
Eigen::MatrixXd draw_sums(const TreeEnsembleFit& fit,
                          const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>& rows) {
  const auto n = static_cast<std::size_t>(rows.rows());
  Eigen::MatrixXd out(static_cast<Eigen::Index>(fit.draws.size()), rows.rows());
  std::vector<double> acc(n);
  std::vector<SlotCache> cache(static_cast<std::size_t>(std::max(fit.m, 0)));
  for (std::size_t k = 0; k < fit.draws.size(); ++k) {
    const PosteriorDraw& draw = fit.draws[k];
    std::fill(acc.begin(), acc.end(), draw.offset);
    const bool slotted = draw.slots.size() == draw.trees.size();
    for (std::size_t j = 0; j < draw.trees.size(); ++j) {
      const DecisionTree& t = draw.trees[j];
      const auto slot = slotted ? static_cast<std::size_t>(draw.slots[j]) : cache.size();
      if (slot >= cache.size()) {
        for (std::size_t i = 0; i < n; ++i) acc[i] += t.evaluate(rows.row(static_cast<Eigen::Index>(i)).data());
        continue;
      }
      SlotCache& c = cache[slot];
      if (!c.shape || !same_shape(*c.shape, t)) {
        c.leaf.resize(n);
        for (std::size_t i = 0; i < n; ++i) c.leaf[i] = t.leaf_of(rows.row(static_cast<Eigen::Index>(i)).data());
      }
      c.shape = &t;
      const TreeNode* nodes = t.nodes.data();
      for (std::size_t i = 0; i < n; ++i) acc[i] += nodes[c.leaf[i]].value;
    }
    for (std::size_t i = 0; i < n; ++i)
      out(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) = fit.transform.inverse(acc[i]);
  }
  return out;
}

}  // namespace

Eigen::MatrixXd bart_draw_matrix(const TreeEnsembleFit& fit, const Eigen::MatrixXd& points) {
  if (points.cols() != fit.dim) throw DomainError("prediction points have the wrong dimension");
  const auto d = static_cast<std::size_t>(points.cols());

  // Points on the same side of every threshold in use get identical draws;
  // evaluate one representative per cell.
  std::vector<std::vector<double>> thresholds(d);
  for (const auto& draw : fit.draws)
    for (const auto& t : draw.trees)
      for (const auto& node : t.nodes)
        if (node.var >= 0) thresholds[static_cast<std::size_t>(node.var)].push_back(node.value);
  for (auto& v : thresholds) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
  std::map<std::vector<std::int32_t>, Eigen::Index> cells;
  std::vector<const std::vector<std::int32_t>*> key_of(static_cast<std::size_t>(points.rows()));
  std::vector<std::int32_t> key(d);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    for (std::size_t k = 0; k < d; ++k) {
      const auto& v = thresholds[k];
      key[k] = static_cast<std::int32_t>(std::upper_bound(v.begin(), v.end(), points(i, static_cast<Eigen::Index>(k))) - v.begin());
    }
    const auto it = cells.emplace(key, i).first;
    key_of[static_cast<std::size_t>(i)] = &it->first;
  }
  // Cells in key order: neighbouring rows tend to follow the same tree paths.
  std::vector<Eigen::Index> representative;
  representative.reserve(cells.size());
  for (auto& [k, idx] : cells) {
    representative.push_back(idx);
    idx = static_cast<Eigen::Index>(representative.size() - 1);
  }
  std::vector<Eigen::Index> cell_of(static_cast<std::size_t>(points.rows()));
  for (Eigen::Index i = 0; i < points.rows(); ++i) cell_of[static_cast<std::size_t>(i)] = cells.at(*key_of[static_cast<std::size_t>(i)]);

  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows(
      static_cast<Eigen::Index>(representative.size()), points.cols());
  for (std::size_t r = 0; r < representative.size(); ++r)
    rows.row(static_cast<Eigen::Index>(r)) = points.row(representative[r]);
  const Eigen::MatrixXd unique = draw_sums(fit, rows);
  Eigen::MatrixXd out(unique.rows(), points.rows());
  for (Eigen::Index i = 0; i < points.rows(); ++i) out.col(i) = unique.col(cell_of[static_cast<std::size_t>(i)]);
  return out;
}

BartPrediction bart_predict(const TreeEnsembleFit& fit, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != fit.dim) throw DomainError("prediction point has the wrong dimension");
  const Eigen::VectorXd xv = x;
  std::vector<double> draws(fit.draws.size());
  for (std::size_t k = 0; k < fit.draws.size(); ++k)
    draws[k] = fit.transform.inverse(fit.draws[k].evaluate(xv.data()));
  return summarize_draws(std::move(draws));
}

BartPrediction bart_predict(const TreeEnsembleFit& fit, const InputPoint& x) {
  return bart_predict(fit, Eigen::Map<const Eigen::VectorXd>(x.coords().data(),
                                                              static_cast<Eigen::Index>(x.dim())));
}

nlohmann::json to_json(const TreeEnsembleFit& fit) {
  const BartOptions& o = fit.options;
  std::vector<double> sigmas;
  sigmas.reserve(fit.draws.size());
  for (const auto& d : fit.draws) sigmas.push_back(d.sigma * fit.transform.scale);
  return {{"trees", o.trees},
          {"iterations", o.iterations},
          {"burn_in", o.burn_in},
          {"thin", o.thin},
          {"k", o.k},
          {"nu", o.nu},
          {"quantile", o.quantile},
          {"lambda", fit.hyper.lambda},
          {"mu_sd", fit.hyper.mu_sd},
          {"seed", o.seed},
          {"acceptance_rate", fit.acceptance_rate},
          {"sigma_draws", sigmas}};
}

}  // namespace tsinv
