#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "crossdiff/simplex.hpp"

namespace crossdiff {

/**
 * One-dimensional lattice with exactly one particle per site. Labels run over
 * 0..n, label 0 being the solvent (vacancy) species. Site s covers the
 * physical interval [s, s+1) * length / sites.
 */
struct LatticeState {
  std::vector<std::uint8_t> sites;
  std::size_t species = 1;  // n
  double length = 1.0;
  std::uint64_t seed = 0;

  std::vector<std::size_t> counts() const;  // per label 0..n
};

/// Independent draw per site from the local composition profile(x) at the site centre.
LatticeState sample_lattice(std::size_t sites, std::size_t species, double length,
                            const std::function<std::vector<double>(double)>& profile, std::uint64_t seed);

struct KmcOptions {
  std::vector<double> times;  // output times, increasing, >= 0
  std::size_t bins = 32;
  std::size_t replicas = 1;
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

/// Replica-averaged bin densities. Index as [time][bin][label].
struct DensityProfiles {
  std::vector<double> times;
  std::size_t bins = 0;
  std::size_t labels = 0;  // n + 1
  std::vector<std::vector<std::vector<double>>> mean;
  std::vector<std::vector<std::vector<double>>> replica_std;
};

/**
 * Continuous-time exchange dynamics: each nearest-neighbour pair with labels
 * a != b swaps at rate K_ab (sites/length)^2; no swaps across the two ends.
 * Simulated event by event (direct Gillespie method with bonds grouped by
 * label pair). Evolves `state` in place up to `t_end` and returns the number of events.
 */
std::uint64_t kmc_evolve(LatticeState& state, const CoefficientMatrix& k, double t_end, std::uint64_t seed);

/// Bin densities of every label, bins of equal site count (sites % bins == 0).
std::vector<std::vector<double>> bin_densities(const LatticeState& state, std::size_t bins);

/// All replicas start from `initial`.
DensityProfiles kmc_run(const LatticeState& initial, const CoefficientMatrix& k, const KmcOptions& options);

/// Replica r starts from its own draw of `make_initial(seed_r)`.
DensityProfiles kmc_run(const std::function<LatticeState(std::uint64_t)>& make_initial, const CoefficientMatrix& k,
                        const KmcOptions& options);

}  // namespace crossdiff
