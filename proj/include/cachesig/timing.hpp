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
  \file timing.hpp
  \brief Access latencies, the coarse timer and the noise knobs

  All durations are nanoseconds held in doubles. With integer-valued
  latencies and zero jitter every sum the simulator forms is exact.
*/

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "cache_model.hpp"
#include "errors.hpp"
#include "random.hpp"

namespace cachesig
{

struct latency_model
{
  double hit_ns = 4.0;
  double miss_ns = 80.0;
  double delay_op_ns = 5.0;
  double redirect_ns = 2.0;
  double jitter_sigma_ns = 0.0;

  void validate() const
  {
    if ( !( hit_ns > 0.0 ) || !( miss_ns > 0.0 ) || !( delay_op_ns > 0.0 ) || !( redirect_ns > 0.0 ) )
      throw precondition_error( "latency_model: latencies must be positive" );
    if ( !( miss_ns > hit_ns ) )
      throw precondition_error( "latency_model: miss_ns must exceed hit_ns" );
    if ( !( jitter_sigma_ns >= 0.0 ) )
      throw precondition_error( "latency_model: jitter_sigma_ns must be non-negative" );
  }

  /* hit/miss midpoint, the raw threshold T */
  double threshold_ns() const noexcept { return 0.5 * ( hit_ns + miss_ns ); }
};

struct timer_model
{
  double granularity_ns = 1.0;
  double jitter_ns = 0.0;
  std::uint64_t reads_taken = 0;

  void validate() const
  {
    if ( !( granularity_ns > 0.0 ) )
      throw precondition_error( "timer_model: granularity_ns must be positive" );
    if ( !( jitter_ns >= 0.0 ) )
      throw precondition_error( "timer_model: jitter_ns must be non-negative" );
  }

  double quantize( double ns ) const { return std::floor( ns / granularity_ns ) * granularity_ns; }

  /* interval measurements taken so far (two reads each) */
  std::uint64_t measurements() const noexcept { return reads_taken / 2u; }
};

struct noise_model
{
  double gadget_flip_prob = 0.0;
  double corruption_prob_per_iteration = 0.0;
  std::uint64_t seed = 0;

  void validate() const
  {
    auto const in_unit = []( double p ) { return p >= 0.0 && p <= 1.0; };
    if ( !in_unit( gadget_flip_prob ) || !in_unit( corruption_prob_per_iteration ) )
      throw precondition_error( "noise_model: probabilities must lie in [0, 1]" );
  }

  bool silent() const noexcept { return gadget_flip_prob == 0.0 && corruption_prob_per_iteration == 0.0; }
};

/*! \brief Latency of one access, with Gaussian jitter clamped at zero. */
inline double access_latency( latency_model const& model, bool is_hit, rng& random )
{
  double const base = is_hit ? model.hit_ns : model.miss_ns;
  if ( model.jitter_sigma_ns == 0.0 )
    return base;
  return std::max( 0.0, random.normal( base, model.jitter_sigma_ns ) );
}

/*! \brief Reads an interval with the coarse timer.

  The reading is `floor(d / g) * g` plus uniform jitter in `[0, jitter_ns]`
  and costs two timer reads.
*/
inline double timed_measure( timer_model& timer, double true_duration_ns, rng& random )
{
  if ( true_duration_ns < 0.0 )
    throw precondition_error( "timed_measure: negative duration" );
  timer.reads_taken += 2;
  double reading = timer.quantize( true_duration_ns );
  if ( timer.jitter_ns > 0.0 )
    reading += random.uniform( 0.0, timer.jitter_ns );
  return reading;
}

struct line_measurement
{
  bool estimate = true;      /* believed present */
  double measured_ns = 0.0;  /* raw timer reading */
  bool indeterminate = false;
};

/*! \brief Threshold T as seen through the timer.

  Rounded up to the next timer tick so that a quantized hit still compares
  below it whenever the timer can tell hits from misses at all.
*/
inline double quantized_threshold( timer_model const& timer, latency_model const& latency )
{
  return std::ceil( latency.threshold_ns() / timer.granularity_ns ) * timer.granularity_ns;
}

/*! \brief True when hits and misses collapse onto the same timer tick. */
inline bool timer_is_blind( timer_model const& timer, latency_model const& latency )
{
  return timer.quantize( latency.hit_ns ) == timer.quantize( latency.miss_ns );
}

/*! \brief Times one load of `line`. The load itself makes the line present.

  When the timer cannot separate a hit from a miss the estimate is reported
  as present and flagged indeterminate.
*/
inline line_measurement measure_line( timer_model& timer, latency_model const& latency, cache_state& state,
                                      line_id const& line, rng& random )
{
  bool const hit = state.phi( line );
  double const duration = access_latency( latency, hit, random );
  state.touch( line );

  line_measurement m;
  m.measured_ns = timed_measure( timer, duration, random );
  if ( timer_is_blind( timer, latency ) )
  {
    m.estimate = true;
    m.indeterminate = true;
    return m;
  }
  m.estimate = m.measured_ns < quantized_threshold( timer, latency );
  return m;
}

} // namespace cachesig
