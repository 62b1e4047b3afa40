#pragma once

#include <cstddef>
#include <cstdint>

#include "dualcache/embedding_store.hpp"

namespace dualcache {

// Seeded Gaussian-cluster dataset. Class identity lives on a hidden random
// subset of `signalFraction * dim` channels; the remaining channels carry
// class-independent nuisance noise. C in-distribution clusters and one OOD
// cluster sit around random unit centers in the signal subspace. Text
// templates are noisy copies of the class centers; the negative template set
// averages a class "photo" prompt with a shared nuisance-space "background"
// prompt. The OOD center blends a random signal direction with that
// background direction (weight `oodBackground`), modelling scene-like
// outliers. Every image, ID or OOD, also carries a common non-signal
// component of weight `commonWeight`. Every row is unit-norm.
struct SyntheticSpec {
  std::size_t dim = 32;
  std::size_t classes = 2;
  std::size_t trainPerClass = 32;
  std::size_t testPerClass = 100;
  std::size_t oodCount = 200;
  std::size_t templates = 2;
  double signalFraction = 0.5;
  double sampleNoise = 0.8;    // signal-space noise norm relative to the unit center
  double nuisanceNoise = 1.0;  // nuisance-space noise norm
  double textNoise = 0.3;
  double oodBackground = 0.6;
  double commonWeight = 1.0;   // shared non-signal component present in every image
  std::uint64_t seed = 2024;
};

DatasetBundle makeClusterFixture(const SyntheticSpec& spec);

}  // namespace dualcache
