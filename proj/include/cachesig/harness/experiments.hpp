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
  \file experiments.hpp
  \brief Monte Carlo experiment runners

  Trial `t` draws its inputs from `split_seed(seed, t, 0)` and its noise
  from `split_seed(seed, t, 1)` (gate sweeps add the gate index to the
  second purpose). Sweeps reuse the same trial streams for every size or
  iteration count.
*/

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "../algorithms.hpp"
#include "../amplifier.hpp"
#include "../asm_emitter.hpp"
#include "../cache_model.hpp"
#include "../gadgets.hpp"
#include "../random.hpp"
#include "config.hpp"
#include "parallel.hpp"
#include "table.hpp"

namespace cachesig::harness
{

namespace purpose
{
inline constexpr std::uint64_t inputs = 0;
inline constexpr std::uint64_t noise = 1;
} // namespace purpose

inline std::uint64_t trial_seed( std::uint64_t root, std::uint64_t trial, std::uint64_t what )
{
  return split_seed( root, trial, what );
}

inline std::uint64_t default_trials( experiment_kind k )
{
  return k == experiment_kind::truth_tables ? 8000 : 1000;
}

inline std::uint64_t trials_of( experiment_config const& cfg )
{
  return cfg.trials != 0 ? cfg.trials : default_trials( cfg.experiment );
}

/*! \brief State, generator and arena for one trial. Not copyable: `ctx` refers to the others. */
struct trial_env
{
  cache_state state;
  rng random;
  line_arena arena;
  gadget_context ctx;

  trial_env( experiment_config const& cfg, std::uint64_t noise_seed, std::uint32_t deplen )
      : state( cfg.capacity ),
        random( noise_seed ),
        arena( cfg.base, cfg.stride ),
        ctx{ .state = state,
             .random = random,
             .latency = cfg.latency,
             .noise = cfg.noise,
             .deplen = deplen,
             .limits = cfg.limits }
  {
  }
  trial_env( trial_env const& ) = delete;
  trial_env& operator=( trial_env const& ) = delete;

  std::vector<line_id> lines( std::size_t n )
  {
    auto l = arena.allocate( n );
    state.register_lines( l );
    return l;
  }
};

inline std::string bit_string( std::vector<bool> const& bits )
{
  std::string s;
  for ( bool b : bits )
    s += b ? '1' : '0';
  return s;
}

/* ----------------------------------------------------------- truth tables */

struct gate_case
{
  std::string name;
  gate_shape shape;
};

inline std::vector<gate_case> truth_table_gates()
{
  std::vector<gate_case> g;
  g.push_back( { "NOT", { gate_kind::not_gate, 1, 1 } } );
  g.push_back( { "NOR", { gate_kind::nor, 2, 1 } } );
  for ( auto f : supported_nand_fan_in )
    g.push_back( { "NAND" + std::to_string( f ), { gate_kind::nand, f, 1 } } );
  g.push_back( { "XOR", { gate_kind::xor_gate, 2, 1 } } );
  g.push_back( { "HALF_ADDER", { gate_kind::half_adder, 2, 2 } } );
  return g;
}

/*! \brief Boolean reference for a gate shape. */
inline std::vector<bool> gate_oracle( gate_shape const& g, std::vector<bool> const& in )
{
  auto const all = std::all_of( in.begin(), in.end(), []( bool b ) { return b; } );
  switch ( g.kind )
  {
  case gate_kind::not_gate:
    return { !in[0] };
  case gate_kind::replicate:
    return std::vector<bool>( g.fan_out, !in[0] );
  case gate_kind::nand:
    return { !all };
  case gate_kind::nor:
    return { !( in[0] || in[1] ) };
  case gate_kind::xor_gate:
    return { in[0] != in[1] };
  case gate_kind::half_adder:
    return { in[0] != in[1], in[0] && in[1] };
  }
  return {};
}

/*! \brief Runs one gate on fresh lines holding `in`; reads the outputs' phi directly. */
inline std::vector<bool> run_gate( gate_shape const& g, std::vector<bool> const& in, trial_env& env )
{
  if ( !g.valid() || in.size() != g.fan_in )
    throw precondition_error( "run_gate: invalid gate shape or input width" );
  auto const ins = env.lines( g.fan_in );
  auto const outs = env.lines( g.fan_out );
  for ( std::size_t i = 0; i < ins.size(); ++i )
    env.state.set( ins[i], in[i] );

  auto& ctx = env.ctx;
  switch ( g.kind )
  {
  case gate_kind::not_gate:
    invert( ins[0], outs[0], ctx );
    break;
  case gate_kind::replicate:
    replicate( ins[0], outs, ctx );
    break;
  case gate_kind::nand:
    nand( ins, outs[0], ctx );
    break;
  case gate_kind::nor:
    nor( ins[0], ins[1], outs[0], ctx );
    break;
  case gate_kind::xor_gate:
    xor_gate( ins[0], ins[1], outs[0], ctx );
    break;
  case gate_kind::half_adder:
  {
    auto const scratch = env.lines( half_adder_scratch_lines );
    half_adder( ins[0], ins[1], outs[0], outs[1], scratch, ctx );
    break;
  }
  }

  std::vector<bool> result;
  for ( auto const& o : outs )
    result.push_back( env.state.phi( o ) );
  return result;
}

/*! \brief Input row for `trial`: exhaustive cycling when it fits, else all-ones / random alternation. */
inline std::vector<bool> truth_table_row( std::uint32_t fan_in, std::uint64_t trial, std::uint64_t trials,
                                          std::uint64_t seed )
{
  std::vector<bool> bits( fan_in );
  if ( fan_in < 63 && ( std::uint64_t{ 1 } << fan_in ) <= trials )
  {
    auto const row = trial % ( std::uint64_t{ 1 } << fan_in );
    for ( std::uint32_t i = 0; i < fan_in; ++i )
      bits[i] = ( row >> i ) & 1u;
    return bits;
  }
  if ( trial % 2 == 0 )
    return std::vector<bool>( fan_in, true );
  rng r( trial_seed( seed, trial, purpose::inputs ) );
  for ( std::uint32_t i = 0; i < fan_in; ++i )
    bits[i] = r.bernoulli( 0.5 );
  return bits;
}

inline experiment_result run_truth_tables( experiment_config const& cfg )
{
  cfg.validate();
  auto const trials = trials_of( cfg );
  auto const gates = truth_table_gates();

  experiment_result res;
  res.experiment = std::string( to_string( experiment_kind::truth_tables ) );
  res.rows.columns = { "gate", "trial", "seed", "inputs", "expected", "observed", "correct" };
  res.summary.columns = { "gate", "runs", "correct", "accuracy" };

  for ( std::size_t gi = 0; gi < gates.size(); ++gi )
  {
    auto const& g = gates[gi];
    struct outcome
    {
      std::vector<bool> in, expected, observed;
      std::uint64_t seed = 0;
    };
    auto const results = parallel_map( trials, cfg.threads, [&]( std::uint64_t t ) {
      outcome o;
      o.in = truth_table_row( g.shape.fan_in, t, trials, cfg.seed );
      o.seed = trial_seed( cfg.seed, t, purpose::noise + 16 + gi );
      trial_env env( cfg, o.seed, cfg.deplen );
      o.expected = gate_oracle( g.shape, o.in );
      o.observed = run_gate( g.shape, o.in, env );
      return o;
    } );
    std::uint64_t correct = 0;
    for ( std::uint64_t t = 0; t < trials; ++t )
    {
      auto const& o = results[t];
      bool const ok = o.expected == o.observed;
      correct += ok ? 1u : 0u;
      res.rows.add( g.name, t, o.seed, bit_string( o.in ), bit_string( o.expected ), bit_string( o.observed ), ok );
    }
    res.summary.add( g.name, trials, correct, static_cast<double>( correct ) / static_cast<double>( trials ) );
  }
  return res;
}

/* -------------------------------------------------------------- amplifier */

/*! \brief Linear-interpolation quantile (R type 7) of sorted data. */
inline double quantile( std::vector<double> const& sorted, double q )
{
  if ( sorted.empty() )
    return 0.0;
  double const pos = q * static_cast<double>( sorted.size() - 1 );
  auto const lo = static_cast<std::size_t>( std::floor( pos ) );
  auto const hi = std::min( lo + 1, sorted.size() - 1 );
  double const frac = pos - static_cast<double>( lo );
  return sorted[lo] + frac * ( sorted[hi] - sorted[lo] );
}

inline std::vector<std::uint64_t> sweep_iterations( experiment_config const& cfg )
{
  if ( !cfg.iterations.empty() )
    return cfg.iterations;
  return { 1000, 10000, 100000 };
}

inline experiment_result run_amplifier_sweep( experiment_config const& cfg )
{
  cfg.validate();
  auto const trials = trials_of( cfg );
  auto const iteration_list = sweep_iterations( cfg );

  experiment_result res;
  res.experiment = std::string( to_string( experiment_kind::amplifier_sweep ) );
  res.rows.columns = { "iterations", "trial", "seed", "strength_ns", "corrupted", "classification" };
  res.summary.columns = { "iterations", "runs",   "min_ns",           "q1_ns",             "median_ns",
                          "q3_ns",      "max_ns", "negative_fraction", "corrupted_fraction" };

  for ( auto const n : iteration_list )
  {
    auto amp = cfg.amplifier;
    amp.iterations = n;
    auto const samples = parallel_map( trials, cfg.threads, [&]( std::uint64_t t ) {
      return measure_strength( amp, cfg.latency, cfg.noise, trial_seed( cfg.seed, t, purpose::noise ), cfg.capacity );
    } );
    std::vector<double> values;
    std::uint64_t negative = 0, corrupted = 0;
    for ( std::uint64_t t = 0; t < trials; ++t )
    {
      auto const& s = samples[t];
      char const* sign = s.strength_ns > 0.0 ? "positive" : ( s.strength_ns < 0.0 ? "negative" : "zero" );
      res.rows.add( n, t, trial_seed( cfg.seed, t, purpose::noise ), s.strength_ns, s.corrupted, sign );
      values.push_back( s.strength_ns );
      negative += s.strength_ns < 0.0 ? 1u : 0u;
      corrupted += s.corrupted ? 1u : 0u;
    }
    std::sort( values.begin(), values.end() );
    auto const runs = static_cast<double>( trials );
    res.summary.add( n, trials, values.front(), quantile( values, 0.25 ), quantile( values, 0.5 ),
                     quantile( values, 0.75 ), values.back(), static_cast<double>( negative ) / runs,
                     static_cast<double>( corrupted ) / runs );
  }
  return res;
}

inline std::vector<double> consistency_granularities( experiment_config const& cfg )
{
  if ( !cfg.granularities_ns.empty() )
    return cfg.granularities_ns;
  return { 1e7, 1e8, 5e8 };
}

/*! \brief Recovers one signal value on a fresh state. */
inline recovered_signal recover_once( experiment_config const& cfg, amplifier_config const& amp, double granularity_ns,
                                      bool signal, std::uint64_t seed )
{
  trial_env env( cfg, seed, amp.deplen );
  auto const input = env.lines( 1 ).front();
  auto const work = env.lines( amp.accesslen );
  env.state.set( input, signal );
  timer_model timer{ .granularity_ns = granularity_ns, .jitter_ns = cfg.timer.jitter_ns };
  return recover_signal( input, work, amp, timer, env.ctx );
}

inline experiment_result run_amplifier_consistency( experiment_config const& cfg )
{
  cfg.validate();
  auto const trials = trials_of( cfg );
  auto const iteration_list = cfg.iterations.empty() ? std::vector<std::uint64_t>{ 100000, 300000, 500000, 700000 }
                                                     : cfg.iterations;
  auto const granularities = consistency_granularities( cfg );

  experiment_result res;
  res.experiment = std::string( to_string( experiment_kind::amplifier_consistency ) );
  res.rows.columns = { "iterations", "granularity_ns", "trial", "seed", "signal", "classification", "outcome" };
  res.summary.columns = { "iterations", "granularity_ns", "runs", "correct", "incorrect", "indeterminate" };

  for ( auto const n : iteration_list )
    for ( auto const g : granularities )
    {
      auto amp = cfg.amplifier;
      amp.iterations = n;
      auto const results = parallel_map( trials, cfg.threads, [&]( std::uint64_t t ) {
        auto const seed = trial_seed( cfg.seed, t, purpose::noise );
        return std::pair{ recover_once( cfg, amp, g, true, seed ), recover_once( cfg, amp, g, false, seed ) };
      } );
      std::uint64_t counts[3] = { 0, 0, 0 };
      for ( std::uint64_t t = 0; t < trials; ++t )
      {
        for ( bool signal : { true, false } )
        {
          auto const r = signal ? results[t].first : results[t].second;
          static char const* const names[3] = { "correct", "incorrect", "indeterminate" };
          int const k = r == recovered_signal::indeterminate ? 2 : ( ( r == recovered_signal::present ) == signal ? 0 : 1 );
          ++counts[k];
          res.rows.add( n, g, t, trial_seed( cfg.seed, t, purpose::noise ), signal ? "present" : "absent",
                        std::string( to_string( r ) ), names[k] );
        }
      }
      double const runs = 2.0 * static_cast<double>( trials );
      res.summary.add( n, g, 2 * trials, static_cast<double>( counts[0] ) / runs,
                       static_cast<double>( counts[1] ) / runs, static_cast<double>( counts[2] ) / runs );
    }
  return res;
}

/* ------------------------------------------------------------- algorithms */

inline std::vector<std::uint64_t> algorithm_sizes( experiment_config const& cfg )
{
  if ( !cfg.sizes.empty() )
    return cfg.sizes;
  return { 4, 8, 16, 32, 64, 128, 256 };
}

inline std::uint32_t log2_exact( std::uint64_t n )
{
  std::uint32_t k = 0;
  while ( ( std::uint64_t{ 1 } << k ) < n )
    ++k;
  return k;
}

struct search_trial
{
  std::size_t target = 0;
  std::size_t found = 0;
  std::uint64_t measurements = 0;
  std::uint32_t indeterminate = 0;
};

inline search_trial run_search_trial( experiment_config const& cfg, std::size_t n, std::uint64_t trial )
{
  rng pick( trial_seed( cfg.seed, trial, purpose::inputs ) );
  trial_env env( cfg, trial_seed( cfg.seed, trial, purpose::noise ), cfg.deplen );
  auto st = make_search_state( n, env.arena, env.state );
  search_trial out;
  out.target = static_cast<std::size_t>( pick.below( n ) );
  env.state.touch( st.signal[out.target] );
  timer_model timer = cfg.timer;
  timer.reads_taken = 0;
  auto const r = binary_search( st, timer, env.ctx, { .check_precondition = cfg.check_precondition } );
  out.found = r.index;
  out.measurements = timer.measurements();
  out.indeterminate = r.indeterminate_reads;
  return out;
}

inline experiment_result run_binary_search( experiment_config const& cfg )
{
  cfg.validate();
  auto const trials = trials_of( cfg );
  experiment_result res;
  res.experiment = std::string( to_string( experiment_kind::binary_search ) );
  res.rows.columns = { "size", "trial", "seed", "target", "found", "correct", "measurements" };
  res.summary.columns = { "size", "runs", "correct", "accuracy", "measurements_per_run", "budget_ok" };

  for ( auto const n : algorithm_sizes( cfg ) )
  {
    check_search_size( n );
    auto const results = parallel_map( trials, cfg.threads,
                                       [&]( std::uint64_t t ) { return run_search_trial( cfg, n, t ); } );
    std::uint64_t correct = 0;
    bool budget_ok = true;
    for ( std::uint64_t t = 0; t < trials; ++t )
    {
      auto const& r = results[t];
      bool const ok = r.found == r.target;
      correct += ok ? 1u : 0u;
      if ( r.indeterminate == 0 && r.measurements != log2_exact( n ) )
        budget_ok = false;
      res.rows.add( n, t, trial_seed( cfg.seed, t, purpose::noise ), r.target, r.found, ok, r.measurements );
    }
    res.summary.add( n, trials, correct, static_cast<double>( correct ) / static_cast<double>( trials ),
                     log2_exact( n ), budget_ok );
  }
  return res;
}

struct counter_trial
{
  std::uint64_t popcount = 0;
  std::uint64_t estimate = 0;
  std::uint64_t measurements = 0;
};

inline counter_trial run_counter_trial( experiment_config const& cfg, counter_program const& prog,
                                        std::uint64_t trial )
{
  rng pick( trial_seed( cfg.seed, trial, purpose::inputs ) );
  trial_env env( cfg, trial_seed( cfg.seed, trial, purpose::noise ), cfg.deplen );
  auto st = make_counter_state( prog, env.arena, env.state );
  counter_trial out;
  for ( auto const& l : st.inputs )
    if ( pick.bernoulli( 0.5 ) )
    {
      env.state.touch( l );
      ++out.popcount;
    }
  timer_model timer = cfg.timer;
  timer.reads_taken = 0;
  out.estimate = count_lines( st, prog, timer, env.ctx );
  out.measurements = timer.measurements();
  return out;
}

inline experiment_result run_counter( experiment_config const& cfg )
{
  cfg.validate();
  auto const trials = trials_of( cfg );
  experiment_result res;
  res.experiment = std::string( to_string( experiment_kind::counter ) );
  res.rows.columns = { "size", "trial", "seed", "popcount", "estimate", "correct", "measurements" };
  res.summary.columns = { "size", "runs", "correct", "accuracy", "measurements_per_run", "budget_ok" };

  for ( auto const n : algorithm_sizes( cfg ) )
  {
    if ( n == 0 || n > 4096 )
      throw precondition_error( "counter: size must be in [1, 4096]" );
    counter_program const prog{ static_cast<std::uint32_t>( n ),
                                logic::compile( logic::build_counter_netlist( static_cast<std::uint32_t>( n ) ),
                                                cfg.lowering ) };
    auto const results = parallel_map( trials, cfg.threads,
                                       [&]( std::uint64_t t ) { return run_counter_trial( cfg, prog, t ); } );
    std::uint64_t correct = 0;
    bool budget_ok = true;
    auto const width = logic::counter_width( n );
    for ( std::uint64_t t = 0; t < trials; ++t )
    {
      auto const& r = results[t];
      bool const ok = r.popcount == r.estimate;
      correct += ok ? 1u : 0u;
      budget_ok = budget_ok && r.measurements == width;
      res.rows.add( n, t, trial_seed( cfg.seed, t, purpose::noise ), r.popcount, r.estimate, ok, r.measurements );
    }
    res.summary.add( n, trials, correct, static_cast<double>( correct ) / static_cast<double>( trials ), width,
                     budget_ok );
  }
  return res;
}

/* ------------------------------------------------------------- emit-asm */

/*! \brief Emits the canonical gadgets and reports their structural checks. */
inline experiment_result run_emit_asm( experiment_config const& cfg )
{
  experiment_result res;
  res.experiment = std::string( to_string( experiment_kind::emit_asm ) );
  res.rows.columns = { "name", "kind", "deplen", "accesslen", "fan_in", "stride", "bytes", "problems" };
  res.summary.columns = { "emissions", "conforming" };
  std::uint64_t good = 0;
  for ( auto [name, req] : canonical_emissions() )
  {
    if ( req.kind == emit_kind::amplifier )
    {
      req.deplen = cfg.amplifier.deplen;
      req.accesslen = cfg.amplifier.accesslen;
      req.stride = cfg.amplifier.stride;
    }
    auto const text = emit_module( { req } );
    auto const problems = check_emission( req, emit( req ) );
    good += problems.empty() ? 1u : 0u;
    res.rows.add( name, std::string( to_string( req.kind ) ), req.deplen, req.accesslen, req.fan_in, req.stride,
                  text.size(), problems.size() );
  }
  res.summary.add( res.rows.rows.size(), good );
  return res;
}

inline experiment_result run_experiment( experiment_config const& cfg )
{
  switch ( cfg.experiment )
  {
  case experiment_kind::truth_tables:
    return run_truth_tables( cfg );
  case experiment_kind::amplifier_sweep:
    return run_amplifier_sweep( cfg );
  case experiment_kind::amplifier_consistency:
    return run_amplifier_consistency( cfg );
  case experiment_kind::binary_search:
    return run_binary_search( cfg );
  case experiment_kind::counter:
    return run_counter( cfg );
  case experiment_kind::emit_asm:
    return run_emit_asm( cfg );
  }
  throw precondition_error( "run_experiment: unknown experiment" );
}

} // namespace cachesig::harness
