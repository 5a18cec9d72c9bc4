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
  \file amplifier.hpp
  \brief Turning one presence bit into a large timing difference

  A self-reinforcing run repeats, per iteration:

  1. flush the working lines,
  2. replicate the input into all `accesslen` working lines,
  3. time a dependent walk over the first `accesslen - 1` of them,
  4. restore the input from the last working line with an inverter.

  Only step 3 is added to the elapsed time. Because the replicator inverts,
  a present input leaves the walked lines absent, so the present case is
  the slow one and

      strength = elapsed(present) - elapsed(absent)
               = iterations * (accesslen - 1) * (miss - hit)

  in the absence of noise.
*/

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "cache_model.hpp"
#include "errors.hpp"
#include "gadgets.hpp"
#include "random.hpp"
#include "timing.hpp"

namespace cachesig
{

enum class amplifier_evaluation
{
  automatic, /* closed form whenever it is exact, otherwise step by step */
  simulate,
  analytic
};

struct amplifier_config
{
  std::uint32_t deplen = 5;
  std::uint32_t accesslen = 23;
  std::uint64_t stride = default_line_stride;
  std::uint64_t iterations = 1;
  amplifier_evaluation evaluation = amplifier_evaluation::automatic;
  bool enable_multi_stage = false;

  void validate() const
  {
    if ( accesslen == 0 )
      throw precondition_error( "amplifier_config: accesslen must be positive" );
    if ( stride < min_line_stride )
      throw precondition_error( "amplifier_config: stride " + std::to_string( stride ) + " is below " +
                                std::to_string( min_line_stride ) );
  }
};

/*! \brief One self-reinforcing run on one signal value. */
struct amplifier_run
{
  double elapsed_ns = 0.0;
  std::uint64_t iterations = 0;
  bool corrupted = false;
  std::uint64_t corruption_events = 0;
  std::uint64_t first_corruption = std::numeric_limits<std::uint64_t>::max();
  bool analytic = false;
};

struct signal_strength_sample
{
  double strength_ns = 0.0;
  std::uint64_t iterations = 0;
  bool corrupted = false;
};

enum class recovered_signal
{
  present,
  absent,
  indeterminate
};

inline std::string_view to_string( recovered_signal r )
{
  switch ( r )
  {
  case recovered_signal::present:
    return "present";
  case recovered_signal::absent:
    return "absent";
  case recovered_signal::indeterminate:
    return "indeterminate";
  }
  return "?";
}

namespace detail
{

inline void check_working_lines( line_id const& input, std::span<line_id const> outs, amplifier_config const& cfg,
                                 char const* who )
{
  for ( std::size_t i = 1; i < outs.size(); ++i )
  {
    auto const lo = std::min( outs[i - 1].virtual_address, outs[i].virtual_address );
    auto const hi = std::max( outs[i - 1].virtual_address, outs[i].virtual_address );
    if ( hi - lo < cfg.stride )
      throw layout_error( std::string( who ) + ": lines " + to_string( outs[i - 1] ) + " and " + to_string( outs[i] ) +
                          " are closer than the stride" );
  }
  for ( auto const& o : outs )
    if ( o == input )
      throw aliasing_error( std::string( who ) + ": input is also a working line" );
}

} // namespace detail

/*! \brief Replicates `input` into `outs` (|outs| = accesslen); every out becomes !phi(input). */
inline speculation_outcome single_stage( line_id const& input, std::span<line_id const> outs,
                                         amplifier_config const& cfg, gadget_context& ctx )
{
  if ( outs.size() != cfg.accesslen )
    throw precondition_error( "single_stage: expected " + std::to_string( cfg.accesslen ) + " output lines, got " +
                              std::to_string( outs.size() ) );
  detail::check_working_lines( input, outs, cfg, "single_stage" );
  return replicate( input, outs, ctx );
}

/*! \brief Sum of serialized access latencies over `lines`; touches every line. */
inline double dependent_access_time( std::span<line_id const> lines, gadget_context& ctx )
{
  if ( lines.empty() )
    throw precondition_error( "dependent_access_time: no lines" );
  double total = 0.0;
  for ( auto const& l : lines )
  {
    total += access_latency( ctx.latency, ctx.state.phi( l ), ctx.random );
    ctx.state.touch( l );
  }
  return total;
}

namespace detail
{

inline std::uint64_t saturating_next( std::uint64_t at, std::uint64_t gap )
{
  auto const max = std::numeric_limits<std::uint64_t>::max();
  if ( at == max || gap >= max - at - 1 )
    return max;
  return at + 1 + gap;
}

inline bool amplifier_closed_form_exact( gadget_context const& ctx )
{
  return ctx.latency.jitter_sigma_ns == 0.0 && ctx.noise.gadget_flip_prob == 0.0 && ctx.state.capacity() == 0;
}

} // namespace detail

/*! \brief Runs the self-reinforcing loop on `input` using `work` (accesslen lines).

  Corruption events are drawn as geometric gaps from a stream forked off
  `ctx.random`; a corruption inverts the live input at the start of its
  iteration. The closed-form path consumes the same draws and leaves the
  same cache state as the step-by-step path.
*/
inline amplifier_run self_reinforcing( line_id const& input, std::span<line_id const> work,
                                       amplifier_config const& cfg, gadget_context& ctx )
{
  cfg.validate();
  if ( cfg.accesslen < 2 )
    throw precondition_error( "self_reinforcing: accesslen must be at least 2" );
  if ( work.size() != cfg.accesslen )
    throw precondition_error( "self_reinforcing: expected " + std::to_string( cfg.accesslen ) + " working lines" );
  if ( cfg.accesslen > ctx.limits.max_accesslen )
    throw precondition_error( "self_reinforcing: accesslen exceeds the engine limit of " +
                              std::to_string( ctx.limits.max_accesslen ) );
  detail::check_working_lines( input, work, cfg, "self_reinforcing" );

  bool const exact = detail::amplifier_closed_form_exact( ctx );
  if ( cfg.evaluation == amplifier_evaluation::analytic && !exact )
    throw precondition_error( "self_reinforcing: closed form needs zero jitter, zero gadget noise and unlimited capacity" );
  bool const analytic = cfg.evaluation == amplifier_evaluation::analytic ||
                        ( cfg.evaluation == amplifier_evaluation::automatic && exact );

  auto schedule = ctx.random.fork();
  double const p = ctx.noise.corruption_prob_per_iteration;
  std::uint64_t next_corruption = schedule.geometric( p );

  amplifier_run run;
  run.iterations = cfg.iterations;
  run.analytic = analytic;
  auto const walked = work.first( work.size() - 1 );

  if ( analytic )
  {
    /* identical checks to what the gadgets would do on the first iteration */
    for ( auto const& w : work )
      (void)ctx.state.phi( w );
    bool phi = ctx.state.phi( input );
    double const slow = static_cast<double>( walked.size() ) * ctx.latency.miss_ns;
    double const fast = static_cast<double>( walked.size() ) * ctx.latency.hit_ns;
    std::uint64_t done = 0;
    while ( done < cfg.iterations )
    {
      auto const until = std::min( next_corruption, cfg.iterations );
      run.elapsed_ns += static_cast<double>( until - done ) * ( phi ? slow : fast );
      done = until;
      if ( done < cfg.iterations )
      {
        phi = !phi;
        run.corrupted = true;
        if ( run.corruption_events++ == 0 )
          run.first_corruption = done;
        next_corruption = detail::saturating_next( next_corruption, schedule.geometric( p ) );
      }
    }
    if ( cfg.iterations > 0 )
    {
      for ( auto const& w : work )
        ctx.state.touch( w );
      ctx.state.set( input, phi );
      ctx.tally.invocations += 2 * cfg.iterations;
    }
    return run;
  }

  auto const flips_before = ctx.tally.flips;
  for ( std::uint64_t i = 0; i < cfg.iterations; ++i )
  {
    if ( i == next_corruption )
    {
      ctx.state.set( input, !ctx.state.phi( input ) );
      run.corrupted = true;
      if ( run.corruption_events++ == 0 )
        run.first_corruption = i;
      next_corruption = detail::saturating_next( next_corruption, schedule.geometric( p ) );
    }
    for ( auto const& w : work )
      ctx.state.flush( w );
    single_stage( input, work, cfg, ctx );
    run.elapsed_ns += dependent_access_time( walked, ctx );
    ctx.state.flush( input );
    invert( work.back(), input, ctx );
  }
  if ( ctx.tally.flips != flips_before )
    run.corrupted = true;
  return run;
}

/*! \brief Allocates the working array from `arena` and runs the loop. */
inline amplifier_run self_reinforcing( line_id const& input, amplifier_config const& cfg, gadget_context& ctx,
                                       line_arena& arena )
{
  cfg.validate();
  auto const work = arena.allocate( cfg.accesslen );
  ctx.state.register_lines( work );
  return self_reinforcing( input, work, cfg, ctx );
}

/*! \brief Runs the loop once for each signal value on a fresh state.

  Both runs start from generators seeded with `seed`, so they share the
  corruption schedule and jitter draws.
*/
inline amplifier_run amplify_fresh( bool signal, amplifier_config const& cfg, latency_model const& latency,
                                    noise_model const& noise, std::uint64_t seed, std::size_t capacity = 0 )
{
  cache_state state( capacity );
  rng random( seed );
  gadget_context ctx{ .state = state, .random = random, .latency = latency, .noise = noise, .deplen = cfg.deplen };
  line_arena arena( 0, cfg.stride );
  auto const input = arena.allocate_one();
  state.register_line( input );
  state.set( input, signal );
  return self_reinforcing( input, cfg, ctx, arena );
}

/*! \brief Paired present/absent runs with equal seeds. */
inline signal_strength_sample measure_strength( amplifier_config const& cfg, latency_model const& latency,
                                                noise_model const& noise, std::uint64_t seed,
                                                std::size_t capacity = 0 )
{
  auto const present = amplify_fresh( true, cfg, latency, noise, seed, capacity );
  auto const absent = amplify_fresh( false, cfg, latency, noise, seed, capacity );
  return { present.elapsed_ns - absent.elapsed_ns, cfg.iterations, present.corrupted || absent.corrupted };
}

/*! \brief Amplifies `input`, reads the elapsed time with `timer` and classifies it.

  The reading is compared with two calibration runs, one per signal value,
  taken on a private state with a copy of `ctx.random` and noise disabled.
  Calibration readings are quantized but cost no timer reads. When the two
  baselines are less than one tick apart, or the reading is equally close
  to both, the result is indeterminate.
*/
inline recovered_signal recover_signal( line_id const& input, std::span<line_id const> work,
                                        amplifier_config const& cfg, timer_model& timer, gadget_context& ctx )
{
  timer.validate();

  auto calibrate = [&]( bool signal ) {
    cache_state state;
    rng random = ctx.random;
    gadget_context dry{ .state = state,
                        .random = random,
                        .latency = ctx.latency,
                        .noise = {},
                        .deplen = ctx.deplen,
                        .limits = ctx.limits };
    line_arena arena( 0, cfg.stride );
    auto const in = arena.allocate_one();
    state.register_line( in );
    state.set( in, signal );
    return timer.quantize( self_reinforcing( in, cfg, dry, arena ).elapsed_ns );
  };
  double const base_present = calibrate( true );
  double const base_absent = calibrate( false );

  auto const run = self_reinforcing( input, work, cfg, ctx );
  double const reading = timed_measure( timer, run.elapsed_ns, ctx.random );

  if ( std::abs( base_present - base_absent ) < timer.granularity_ns )
    return recovered_signal::indeterminate;
  double const to_present = std::abs( reading - base_present );
  double const to_absent = std::abs( reading - base_absent );
  if ( to_present == to_absent )
    return recovered_signal::indeterminate;
  return to_present < to_absent ? recovered_signal::present : recovered_signal::absent;
}

/*! \brief Naive multi-stage chaining: each stage replicates every line of the previous one.

  Needs `cfg.enable_multi_stage`. Stage `k` holds `accesslen^k` lines, all
  carrying phi(input) when `k` is even and its inverse when odd. Returns
  the dependent access time over the last stage.
*/
inline double multi_stage( line_id const& input, std::uint32_t stages, amplifier_config const& cfg,
                           gadget_context& ctx, line_arena& arena )
{
  cfg.validate();
  if ( !cfg.enable_multi_stage )
    throw precondition_error( "multi_stage: disabled; set enable_multi_stage to opt in" );
  if ( stages == 0 )
    throw precondition_error( "multi_stage: at least one stage is required" );
  double total_lines = std::pow( static_cast<double>( cfg.accesslen ), static_cast<double>( stages ) );
  if ( total_lines > 1e6 )
    throw precondition_error( "multi_stage: " + std::to_string( stages ) + " stages would need too many lines" );

  std::vector<line_id> level{ input };
  for ( std::uint32_t s = 0; s < stages; ++s )
  {
    std::vector<line_id> next;
    next.reserve( level.size() * cfg.accesslen );
    for ( auto const& l : level )
    {
      auto outs = arena.allocate( cfg.accesslen );
      ctx.state.register_lines( outs );
      single_stage( l, outs, cfg, ctx );
      next.insert( next.end(), outs.begin(), outs.end() );
    }
    level = std::move( next );
  }
  return dependent_access_time( level, ctx );
}

} // namespace cachesig
