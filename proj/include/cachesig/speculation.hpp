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
  \file speculation.hpp
  \brief One forced-speculation invocation reduced to a timing race

  A `call` whose return address is rewritten makes the `ret` mispredict
  back into the speculative body. The body first runs `deplen` dependent
  delay ops and then issues its output loads. Each guard group delays the
  `ret` by the time its loads need; the earliest guard to resolve squashes
  the body. Outputs are therefore fetched iff

      min over guards (redirect + combine(latencies)) > deplen * delay_op

  The guard loads are architectural, so every guard input ends up present.
*/

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <unordered_set>
#include <vector>

#include "cache_model.hpp"
#include "errors.hpp"
#include "random.hpp"
#include "timing.hpp"

namespace cachesig
{

enum class guard_combine
{
  max_chain, /* independent loads joined at one consumer */
  sum_chain  /* each load's address depends on the previous load */
};

enum class output_dependency
{
  independent, /* all outputs issue when the delay chain ends */
  dependent    /* output k issues after output k-1 completes */
};

struct guard_group
{
  std::vector<line_id> inputs;
  guard_combine combine = guard_combine::max_chain;
};

struct gadget_spec
{
  std::vector<guard_group> guards;
  std::uint32_t deplen = 5;
  std::vector<line_id> outputs;
  output_dependency dependency = output_dependency::independent;
};

struct engine_limits
{
  std::uint32_t max_deplen = 64;
  std::uint32_t max_accesslen = 23;
};

struct speculation_outcome
{
  std::vector<line_id> fetched;
  double window_ns = 0.0;
  std::vector<double> resolution_ns; /* one per guard */
  bool flipped = false;              /* noise inverted the fetch decision */
};

namespace detail
{

inline void check_no_aliasing( std::vector<line_id> const& inputs, std::vector<line_id> const& outputs )
{
  if ( ( inputs.size() + outputs.size() ) * outputs.size() <= 512 )
  {
    for ( std::size_t j = 0; j < outputs.size(); ++j )
    {
      auto const& l = outputs[j];
      for ( auto const& i : inputs )
        if ( i.index == l.index )
          throw aliasing_error( "output " + to_string( l ) + " aliases a guard input" );
      for ( std::size_t k = 0; k < j; ++k )
        if ( outputs[k].index == l.index )
          throw aliasing_error( "output " + to_string( l ) + " listed twice" );
    }
    return;
  }
  std::unordered_set<std::uint64_t> in;
  in.reserve( inputs.size() );
  for ( auto const& l : inputs )
    in.insert( l.index );
  std::unordered_set<std::uint64_t> out;
  out.reserve( outputs.size() );
  for ( auto const& l : outputs )
  {
    if ( in.count( l.index ) )
      throw aliasing_error( "output " + to_string( l ) + " aliases a guard input" );
    if ( !out.insert( l.index ).second )
      throw aliasing_error( "output " + to_string( l ) + " listed twice" );
  }
}

inline double resolve_guard( guard_group const& g, std::vector<std::uint8_t>::const_iterator hits,
                             latency_model const& latency, rng& random )
{
  double combined = 0.0;
  for ( std::size_t i = 0; i < g.inputs.size(); ++i )
  {
    double const t = access_latency( latency, hits[i] != 0, random );
    combined = g.combine == guard_combine::max_chain ? std::max( combined, t ) : combined + t;
  }
  return latency.redirect_ns + combined;
}

} // namespace detail

/*! \brief Runs one forced-speculation primitive and applies its effects.

  Independent outputs are all-or-nothing. Dependent outputs issue in
  sequence, so a squash can land between two of them. With probability
  `noise.gadget_flip_prob` the fetch decision is inverted.
*/
inline speculation_outcome run_primitive( gadget_spec const& spec, cache_state& state, latency_model const& latency,
                                          noise_model const& noise, rng& random, engine_limits const& limits = {} )
{
  if ( spec.guards.empty() )
    throw precondition_error( "run_primitive: at least one guard group is required" );
  if ( spec.deplen > limits.max_deplen )
    throw precondition_error( "run_primitive: deplen " + std::to_string( spec.deplen ) + " exceeds limit " +
                              std::to_string( limits.max_deplen ) );
  if ( spec.outputs.size() > limits.max_accesslen )
    throw precondition_error( "run_primitive: " + std::to_string( spec.outputs.size() ) +
                              " outputs exceed accesslen limit " + std::to_string( limits.max_accesslen ) );

  /* per-thread scratch; this runs tens of millions of times per experiment */
  thread_local std::vector<line_id> all_inputs;
  thread_local std::vector<std::uint8_t> hits;
  all_inputs.clear();
  for ( auto const& g : spec.guards )
  {
    if ( g.inputs.empty() )
      throw precondition_error( "run_primitive: empty guard group" );
    all_inputs.insert( all_inputs.end(), g.inputs.begin(), g.inputs.end() );
  }
  detail::check_no_aliasing( all_inputs, spec.outputs );

  /* sample every presence bit before anything is touched */
  hits.resize( all_inputs.size() );
  for ( std::size_t i = 0; i < all_inputs.size(); ++i )
    hits[i] = state.phi( all_inputs[i] ) ? 1 : 0;
  for ( auto const& o : spec.outputs )
    (void)state.phi( o );

  speculation_outcome outcome;
  outcome.window_ns = spec.deplen * latency.delay_op_ns;
  outcome.resolution_ns.reserve( spec.guards.size() );
  double earliest = std::numeric_limits<double>::infinity();
  auto cursor = hits.cbegin();
  for ( auto const& g : spec.guards )
  {
    double const r = detail::resolve_guard( g, cursor, latency, random );
    cursor += static_cast<std::ptrdiff_t>( g.inputs.size() );
    outcome.resolution_ns.push_back( r );
    earliest = std::min( earliest, r );
  }

  std::size_t issued = 0;
  if ( spec.dependency == output_dependency::independent )
  {
    issued = earliest > outcome.window_ns ? spec.outputs.size() : 0;
  }
  else
  {
    double issue_at = outcome.window_ns;
    while ( issued < spec.outputs.size() && earliest > issue_at )
    {
      issue_at += access_latency( latency, state.phi( spec.outputs[issued] ), random );
      ++issued;
    }
  }

  if ( random.bernoulli( noise.gadget_flip_prob ) )
  {
    outcome.flipped = true;
    issued = issued == 0 ? spec.outputs.size() : 0;
  }

  for ( auto const& in : all_inputs )
    state.touch( in );
  outcome.fetched.assign( spec.outputs.begin(), spec.outputs.begin() + static_cast<std::ptrdiff_t>( issued ) );
  for ( auto const& o : outcome.fetched )
    state.touch( o );
  return outcome;
}

/*! \brief Native two-input XOR built from three mispredictions.

  Each input drives its own guard; a third speculation compares the two.
  The output is fetched iff one guard resolves more than one window ahead
  of the other, i.e. iff `|res(a) - res(b)| > deplen * delay_op`. Two
  misses that return far apart under jitter therefore alias to a one-hot
  input, which is the dominant failure of this gate.
*/
inline speculation_outcome xor_primitive( line_id const& a, line_id const& b, line_id const& out, cache_state& state,
                                          latency_model const& latency, noise_model const& noise, rng& random,
                                          std::uint32_t deplen = 5, engine_limits const& limits = {} )
{
  if ( a == b )
    throw aliasing_error( "xor_primitive: inputs must be distinct lines" );
  if ( deplen > limits.max_deplen )
    throw precondition_error( "xor_primitive: deplen exceeds limit" );
  detail::check_no_aliasing( { a, b }, { out } );
  if ( state.phi( out ) )
    throw precondition_error( "xor_primitive: output " + to_string( out ) + " must start absent" );

  bool const hit_a = state.phi( a );
  bool const hit_b = state.phi( b );

  speculation_outcome outcome;
  outcome.window_ns = deplen * latency.delay_op_ns;
  double const ra = latency.redirect_ns + access_latency( latency, hit_a, random );
  double const rb = latency.redirect_ns + access_latency( latency, hit_b, random );
  outcome.resolution_ns = { ra, rb };

  bool fetch = std::abs( ra - rb ) > outcome.window_ns;
  if ( random.bernoulli( noise.gadget_flip_prob ) )
  {
    outcome.flipped = true;
    fetch = !fetch;
  }

  state.touch( a );
  state.touch( b );
  if ( fetch )
  {
    state.touch( out );
    outcome.fetched.push_back( out );
  }
  return outcome;
}

} // namespace cachesig
