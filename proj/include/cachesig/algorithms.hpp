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
  \file algorithms.hpp
  \brief Signal recovery with few timer reads

  `binary_search` finds the single present line among N with log2(N)
  measurements. `count_lines` counts present lines among n with
  ceil(log2(n + 1)) measurements by running a counter netlist first.
*/

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cache_model.hpp"
#include "errors.hpp"
#include "gadgets.hpp"
#include "logic/counter.hpp"
#include "logic/execute.hpp"
#include "timing.hpp"

namespace cachesig
{

/* ---------------------------------------------------------------- search */

inline constexpr std::size_t min_search_size = 4;
inline constexpr std::size_t max_search_size = 256;

/*! \brief Lines for one search: signal S (N), work W (2N) and result R. */
struct search_state
{
  std::vector<line_id> signal;
  std::vector<line_id> work;
  line_id result;
  std::size_t lo = 0;
  std::size_t hi = 0;
};

struct search_options
{
  bool check_precondition = false; /* throw unless exactly one S line is present */
};

struct search_result
{
  std::size_t index = 0;
  std::uint32_t rounds = 0;
  std::uint32_t indeterminate_reads = 0;
};

inline bool is_power_of_two( std::size_t n ) noexcept { return n != 0 && ( n & ( n - 1 ) ) == 0; }

inline void check_search_size( std::size_t n )
{
  if ( n < min_search_size || n > max_search_size || !is_power_of_two( n ) )
    throw precondition_error( "binary_search: N = " + std::to_string( n ) + " must be a power of two in [4, 256]" );
}

/*! \brief Allocates and registers S, W and R; all start absent. */
inline search_state make_search_state( std::size_t n, line_arena& arena, cache_state& state )
{
  check_search_size( n );
  search_state st;
  st.signal = arena.allocate( n );
  st.work = arena.allocate( 2 * n );
  st.result = arena.allocate_one();
  state.register_lines( st.signal );
  state.register_lines( st.work );
  state.register_line( st.result );
  st.lo = 0;
  st.hi = n;
  return st;
}

/*! \brief Halves [lo, hi) once per round; one measurement of R per round.

  Each round flushes W and R, replicates every S_i into (W_2i, W_2i+1),
  NANDs the even entries of the lower half into R, restores S_i from
  W_2i+1, then times R. R is present iff the present line lies in the
  lower half. An indeterminate reading is retried once and then taken as
  absent. S is consumed: a second search on the same lines is invalid.
*/
inline search_result binary_search( search_state& st, timer_model& timer, gadget_context& ctx,
                                    search_options const& opts = {} )
{
  auto const n = st.signal.size();
  check_search_size( n );
  if ( st.work.size() != 2 * n )
    throw precondition_error( "binary_search: W must hold 2N lines" );
  if ( st.lo >= st.hi || st.hi > n || !is_power_of_two( st.hi - st.lo ) )
    throw precondition_error( "binary_search: bad initial range" );
  if ( opts.check_precondition )
  {
    std::size_t present = 0;
    for ( auto const& l : st.signal )
      present += ctx.state.phi( l ) ? 1u : 0u;
    if ( present != 1 )
      throw precondition_error( "binary_search: " + std::to_string( present ) + " signal lines present, expected 1" );
  }

  search_result res;
  std::vector<line_id> tested;
  while ( st.hi - st.lo > 1 )
  {
    auto const half = ( st.hi - st.lo ) / 2;

    for ( auto const& w : st.work )
      ctx.state.flush( w );
    ctx.state.flush( st.result );

    for ( std::size_t i = 0; i < n; ++i )
      replicate( st.signal[i], std::span( st.work ).subspan( 2 * i, 2 ), ctx );

    if ( half == 1 )
      invert( st.work[2 * st.lo], st.result, ctx );
    else
    {
      tested.clear();
      for ( std::size_t i = st.lo; i < st.lo + half; ++i )
        tested.push_back( st.work[2 * i] );
      nand( tested, st.result, ctx );
    }

    for ( std::size_t i = 0; i < n; ++i )
    {
      ctx.state.flush( st.signal[i] );
      invert( st.work[2 * i + 1], st.signal[i], ctx );
    }

    auto m = measure_line( timer, ctx.latency, ctx.state, st.result, ctx.random );
    if ( m.indeterminate )
    {
      ++res.indeterminate_reads;
      m = measure_line( timer, ctx.latency, ctx.state, st.result, ctx.random );
      if ( m.indeterminate )
      {
        ++res.indeterminate_reads;
        m.estimate = false;
      }
    }

    if ( m.estimate )
      st.hi = st.lo + half;
    else
      st.lo += half;
    ++res.rounds;
  }
  res.index = st.lo;
  return res;
}

/* --------------------------------------------------------------- counter */

/*! \brief Lowered counter netlist and its line plan for n inputs. */
struct counter_program
{
  std::uint32_t inputs = 0;
  logic::compiled_netlist compiled;
};

inline counter_program make_counter_program( std::uint32_t n )
{
  return { n, logic::compile( logic::build_counter_netlist( n ) ) };
}

/*! \brief Input lines, counter-bit lines (LSB first) and the scratch pool. */
struct counter_state
{
  std::vector<line_id> inputs;
  std::vector<line_id> counter_bits;
  std::vector<line_id> scratch;
};

inline counter_state make_counter_state( counter_program const& prog, line_arena& arena, cache_state& state )
{
  counter_state st;
  st.inputs = arena.allocate( prog.inputs );
  st.counter_bits = arena.allocate( logic::counter_width( prog.inputs ) );
  if ( prog.compiled.plan.pool_size > 0 )
    st.scratch = arena.allocate( prog.compiled.plan.pool_size );
  state.register_lines( st.inputs );
  state.register_lines( st.counter_bits );
  state.register_lines( st.scratch );
  return st;
}

/*! \brief Runs the counter gadgets, then times each counter bit once.

  An indeterminate bit reading counts as zero; there is no retry, so the
  read budget is always exactly ceil(log2(n + 1)) measurements.
*/
inline std::uint64_t count_lines( counter_state& st, counter_program const& prog, timer_model& timer,
                                  gadget_context& ctx )
{
  if ( st.inputs.size() != prog.inputs || st.counter_bits.size() != logic::counter_width( prog.inputs ) )
    throw precondition_error( "count_lines: state does not match the counter program" );
  for ( auto const& b : st.counter_bits )
    if ( ctx.state.phi( b ) )
      throw precondition_error( "count_lines: counter bit " + to_string( b ) + " must start absent" );

  logic::execute_on_lines( prog.compiled, st.inputs, st.counter_bits, st.scratch, ctx );

  std::uint64_t count = 0;
  for ( std::size_t j = 0; j < st.counter_bits.size(); ++j )
  {
    auto const m = measure_line( timer, ctx.latency, ctx.state, st.counter_bits[j], ctx.random );
    if ( m.estimate && !m.indeterminate )
      count |= std::uint64_t{ 1 } << j;
  }
  return count;
}

} // namespace cachesig
