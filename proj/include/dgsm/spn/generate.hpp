#pragma once

#include <algorithm>
#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "dgsm/error.hpp"
#include "dgsm/rng.hpp"
#include "dgsm/spn/graph.hpp"

namespace dgsm::spn {

struct DecompositionParams {
  std::size_t num_decompositions = 1;
  std::size_t num_subsets = 2;
  std::size_t num_mixtures = 4;
  // Output sums of the outermost level; 0 means num_mixtures.
  std::size_t num_top_mixtures = 0;
  std::uint64_t seed = 0;

  std::size_t top_mixtures() const { return num_top_mixtures ? num_top_mixtures : num_mixtures; }
};

enum class WeightInit { Uniform, Random };

namespace detail {

inline std::vector<double> initial_weights(std::size_t k, WeightInit init, Rng& rng) {
  std::vector<double> w(k, 1.0 / static_cast<double>(k));
  if (init == WeightInit::Random) {
    double total = 0.0;
    for (auto& x : w) total += (x = 0.1 + rng.uniform());
    for (auto& x : w) x /= total;
  }
  return w;
}

/// Splits `units` (already shuffled) into `k` near-equal contiguous chunks;
/// the first n % k chunks get one extra element.
inline std::vector<std::vector<std::uint32_t>> chunk(std::span<const std::uint32_t> units, std::size_t k) {
  std::vector<std::vector<std::uint32_t>> out(k);
  const std::size_t base = units.size() / k;
  const std::size_t extra = units.size() % k;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t len = base + (i < extra ? 1 : 0);
    out[i].assign(units.begin() + static_cast<std::ptrdiff_t>(pos),
                  units.begin() + static_cast<std::ptrdiff_t>(pos + len));
    pos += len;
  }
  return out;
}

/// Recursive decomposition over abstract units. `leaf(unit, count)` returns
/// the mixtures modelling a single unit.
template <typename LeafFn>
std::vector<NodeId> decompose(SpnBuilder& b, std::vector<std::uint32_t> units, std::size_t outputs,
                              const DecompositionParams& p, Rng& rng, WeightInit init, LeafFn& leaf) {
  if (units.size() == 1) return leaf(units.front(), outputs);

  const std::size_t k = std::min(p.num_subsets, units.size());
  std::vector<NodeId> products;
  // A product whose child set already feeds this level adds nothing; this
  // happens when several decompositions split a set into the same
  // pre-built units.
  std::set<std::vector<NodeId>> seen;
  for (std::size_t d = 0; d < p.num_decompositions; ++d) {
    std::vector<std::uint32_t> shuffled = units;
    rng.shuffle(std::span(shuffled));
    std::vector<std::vector<NodeId>> subset_mixtures;
    for (auto& subset : chunk(shuffled, k)) {
      subset_mixtures.push_back(decompose(b, std::move(subset), p.num_mixtures, p, rng, init, leaf));
    }
    // Every combination of one mixture per subset, in lexicographic order:
    // product 0 takes mixture 0 of each subset, the last takes the last ones.
    std::vector<std::size_t> pick(subset_mixtures.size(), 0);
    std::vector<NodeId> children(subset_mixtures.size());
    bool more = true;
    while (more) {
      for (std::size_t s = 0; s < pick.size(); ++s) children[s] = subset_mixtures[s][pick[s]];
      auto key = children;
      std::sort(key.begin(), key.end());
      if (seen.insert(std::move(key)).second) products.push_back(b.add_product(children));
      more = false;
      for (std::size_t s = pick.size(); s-- > 0;) {
        if (++pick[s] < subset_mixtures[s].size()) {
          more = true;
          break;
        }
        pick[s] = 0;
      }
    }
  }

  std::vector<NodeId> sums;
  sums.reserve(outputs);
  for (std::size_t o = 0; o < outputs; ++o) {
    const auto w = initial_weights(products.size(), init, rng);
    sums.push_back(b.add_sum(products, w));
  }
  return sums;
}

inline void check_params(const DecompositionParams& p, std::size_t set_size) {
  if (set_size == 0) throw Error(ErrorKind::InvalidParams, "cannot decompose an empty set");
  if (p.num_decompositions < 1 || p.num_subsets < 1 || p.num_mixtures < 1) {
    throw Error(ErrorKind::InvalidParams, "decomposition counts must be >= 1");
  }
  if (p.num_subsets > set_size && set_size > 1) {
    throw Error(ErrorKind::InvalidParams, "num_subsets " + std::to_string(p.num_subsets) +
                                              " exceeds set size " + std::to_string(set_size));
  }
}

}  // namespace detail

/// Random SPN over `vars` by recursive decomposition: each set of size > 1 is
/// split `num_decompositions` times into `num_subsets` random subsets, each
/// subset is modelled by `num_mixtures` sums, product nodes combine every
/// choice of one mixture per subset, and the level's output sums mix all of
/// that level's products. Singletons are modelled by sums over the variable's
/// indicators. Returns the outermost output sums. Inner levels with fewer
/// elements than num_subsets use one subset per element.
inline std::vector<NodeId> generate_random(SpnBuilder& b, std::span<const VariableId> vars,
                                           const DecompositionParams& p, Rng& rng,
                                           WeightInit init = WeightInit::Random) {
  detail::check_params(p, vars.size());
  auto leaf = [&](std::uint32_t var, std::size_t count) {
    const std::uint32_t card = b.cardinality(var);
    std::vector<NodeId> inds(card);
    for (std::uint32_t v = 0; v < card; ++v) inds[v] = b.indicator(var, v);
    std::vector<NodeId> sums;
    for (std::size_t i = 0; i < count; ++i) {
      sums.push_back(b.add_sum(inds, detail::initial_weights(card, init, rng)));
    }
    return sums;
  };
  std::vector<std::uint32_t> units(vars.begin(), vars.end());
  return detail::decompose(b, std::move(units), p.top_mixtures(), p, rng, init, leaf);
}

/// Same construction over pre-built blocks: each block is an indivisible unit
/// whose mixtures are its own output nodes (all blocks must have disjoint
/// scopes, and a block's outputs must share one scope).
inline std::vector<NodeId> generate_over_blocks(SpnBuilder& b, std::span<const std::vector<NodeId>> blocks,
                                                const DecompositionParams& p, Rng& rng,
                                                WeightInit init = WeightInit::Random) {
  detail::check_params(p, blocks.size());
  auto leaf = [&](std::uint32_t block, std::size_t) { return blocks[block]; };
  std::vector<std::uint32_t> units(blocks.size());
  for (std::uint32_t i = 0; i < units.size(); ++i) units[i] = i;
  return detail::decompose(b, std::move(units), p.top_mixtures(), p, rng, init, leaf);
}

/// Standalone random SPN over all variables; the outputs are joined by a root
/// sum when there is more than one.
inline SpnGraph generate_random_spn(std::vector<std::uint32_t> cardinalities, const DecompositionParams& p,
                                    WeightInit init = WeightInit::Random) {
  Rng rng(p.seed);
  const std::size_t n = cardinalities.size();
  SpnBuilder b(std::move(cardinalities));
  std::vector<VariableId> vars(n);
  for (VariableId v = 0; v < n; ++v) vars[v] = v;
  auto outs = generate_random(b, vars, p, rng, init);
  if (outs.size() == 1) return std::move(b).build(outs.front());
  const NodeId root = b.add_sum(outs, detail::initial_weights(outs.size(), init, rng));
  return std::move(b).build(root);
}

}  // namespace dgsm::spn
