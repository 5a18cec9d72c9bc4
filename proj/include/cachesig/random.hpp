/*
 * Copyright 2026 The cachesig Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/*!
  \file random.hpp
  \brief Seeded random streams and the substream split function

  Every stochastic decision in the simulator draws from an explicit `rng`.
  Zero probabilities and zero jitter never consume a draw, so a noise-free
  run is independent of the stream entirely.
*/

#pragma once

#include <cstdint>
#include <limits>
#include <random>

namespace cachesig
{

/*! \brief SplitMix64 finalizer. */
constexpr std::uint64_t mix64( std::uint64_t x ) noexcept
{
  x += 0x9e3779b97f4a7c15ULL;
  x = ( x ^ ( x >> 30 ) ) * 0xbf58476d1ce4e5b9ULL;
  x = ( x ^ ( x >> 27 ) ) * 0x94d049bb133111ebULL;
  return x ^ ( x >> 31 );
}

/*! \brief Derives the seed of substream `(stream, substream)` from a root seed.

  The split is `mix64(mix64(mix64(root) ^ stream) ^ substream)`. Harness
  trials use `stream = trial index`, `substream` selects the purpose
  (inputs vs. gadget noise), so trial `t` sees the same draws regardless of
  how many worker threads are used or which sizes are swept.
*/
constexpr std::uint64_t split_seed( std::uint64_t root, std::uint64_t stream, std::uint64_t substream = 0 ) noexcept
{
  return mix64( mix64( mix64( root ) ^ stream ) ^ substream );
}

class rng
{
public:
  explicit rng( std::uint64_t seed = 0 ) : engine_( seed ) {}

  std::uint64_t next() { return engine_(); }

  /* uniform in [0, 1) */
  double uniform() { return std::uniform_real_distribution<double>( 0.0, 1.0 )( engine_ ); }

  double uniform( double lo, double hi ) { return std::uniform_real_distribution<double>( lo, hi )( engine_ ); }

  double normal( double mean, double sigma ) { return std::normal_distribution<double>( mean, sigma )( engine_ ); }

  bool bernoulli( double p )
  {
    if ( p <= 0.0 )
      return false;
    if ( p >= 1.0 )
      return true;
    return std::bernoulli_distribution( p )( engine_ );
  }

  /* uniform integer in [0, n) */
  std::uint64_t below( std::uint64_t n ) { return std::uniform_int_distribution<std::uint64_t>( 0, n - 1 )( engine_ ); }

  /* number of failures before the first success; max() when p <= 0 */
  std::uint64_t geometric( double p )
  {
    if ( p <= 0.0 )
      return std::numeric_limits<std::uint64_t>::max();
    if ( p >= 1.0 )
      return 0;
    return std::geometric_distribution<std::uint64_t>( p )( engine_ );
  }

  /* independent child stream; consumes one draw from this stream */
  rng fork() { return rng( mix64( engine_() ) ); }

private:
  std::mt19937_64 engine_;
};

} // namespace cachesig
