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

/*
  Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any
  failure. Everything runs at the default model parameters unless a
  criterion names a different one.
*/

#include <cachesig/cachesig.hpp>
#include <cachesig/harness/config.hpp>
#include <cachesig/harness/experiments.hpp>
#include <cachesig/harness/table.hpp>

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using namespace cachesig;
using namespace cachesig::harness;

namespace
{

struct verdict
{
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report( int id, char const* name, std::function<verdict()> const& check, double budget_s = 0.0 )
{
  auto const start = std::chrono::steady_clock::now();
  verdict v;
  try
  {
    v = check();
  }
  catch ( std::exception const& e )
  {
    v = { false, std::string( "exception: " ) + e.what() };
  }
  double const secs = std::chrono::duration<double>( std::chrono::steady_clock::now() - start ).count();
  if ( budget_s > 0.0 && secs >= budget_s )
  {
    v.pass = false;
    v.detail += "; over the " + harness::detail::format_double( budget_s ) + " s budget";
  }
  char timing[32];
  std::snprintf( timing, sizeof timing, "%.2f s", secs );
  std::cout << ( v.pass ? "PASS" : "FAIL" ) << "  [" << ( id < 10 ? " " : "" ) << id << "] " << name << " ("
            << timing << "): " << v.detail << std::endl;
  failures += v.pass ? 0 : 1;
}

double cell_of( result_table const& t, std::size_t row, std::string const& column )
{
  return std::stod( t.rows.at( row ).at( t.column( column ) ) );
}

std::vector<bool> bits_of( std::uint32_t width, std::uint64_t row )
{
  std::vector<bool> b( width );
  for ( std::uint32_t i = 0; i < width; ++i )
    b[i] = ( row >> i ) & 1u;
  return b;
}

std::string csv_text( experiment_result const& r )
{
  std::ostringstream s;
  write_csv( s, r.rows );
  write_csv( s, r.summary );
  return s.str();
}

std::string json_text( experiment_result const& r, experiment_config const& cfg )
{
  std::ostringstream s;
  write_json( s, r, cfg, true );
  return s.str();
}

/* ------------------------------------------------------------------ 1 */
verdict gate_oracle_equivalence()
{
  experiment_config const cfg;
  std::uint64_t runs = 0, wrong = 0;
  std::string worst;
  for ( auto const& g : truth_table_gates() )
  {
    auto const k = g.shape.fan_in;
    bool const exhaustive = k <= 16;
    std::uint64_t const count = exhaustive ? ( std::uint64_t{ 1 } << k ) : 10000;
    rng pick( split_seed( 1, k, 7 ) );
    for ( std::uint64_t t = 0; t < count; ++t )
    {
      std::vector<bool> in;
      if ( exhaustive )
        in = bits_of( k, t );
      else
      {
        in.resize( k );
        for ( std::uint32_t i = 0; i < k; ++i )
          in[i] = pick.bernoulli( 0.5 );
        /* keep the single fetch-suppressing row in the sample */
        if ( t == 0 )
          in.assign( k, true );
      }
      trial_env env( cfg, t, cfg.deplen );
      ++runs;
      if ( run_gate( g.shape, in, env ) != gate_oracle( g.shape, in ) )
      {
        ++wrong;
        worst = g.name;
      }
    }
  }
  return { wrong == 0, std::to_string( runs - wrong ) + "/" + std::to_string( runs ) +
                           " rows match over NOT, NOR, NAND2..128, XOR, HALF_ADDER" +
                           ( wrong ? "; first mismatch in " + worst : "" ) };
}

/* ------------------------------------------------------------------ 2 */
verdict destructive_input_law()
{
  rng pick( 2026 );
  auto const gates = truth_table_gates();
  std::uint64_t violations = 0;
  constexpr int pairs = 10000;

  for ( int i = 0; i < pairs; ++i )
  {
    latency_model lat;
    lat.jitter_sigma_ns = pick.bernoulli( 0.5 ) ? pick.uniform( 0.0, 40.0 ) : 0.0;
    noise_model noise;
    noise.gadget_flip_prob = pick.bernoulli( 0.5 ) ? pick.uniform( 0.0, 0.5 ) : 0.0;
    cache_state state;
    rng random( pick.next() );
    gadget_context ctx{ .state = state,
                        .random = random,
                        .latency = lat,
                        .noise = noise,
                        .deplen = static_cast<std::uint32_t>( 1 + pick.below( 30 ) ) };
    line_arena arena;
    auto const lines = arena.allocate( 160 );
    state.register_lines( lines );
    /* background lines get random presence; gates need absent outputs */
    for ( auto const& l : lines )
      state.set( l, pick.bernoulli( 0.5 ) );

    std::vector<line_id> guards;
    if ( i % 2 == 0 )
    {
      /* raw primitive: random guard groups and outputs, outputs in any state */
      std::size_t next = 0;
      gadget_spec spec;
      spec.deplen = ctx.deplen;
      auto const groups = 1 + pick.below( 3 );
      for ( std::uint64_t g = 0; g < groups; ++g )
      {
        guard_group gg{ {}, pick.bernoulli( 0.5 ) ? guard_combine::max_chain : guard_combine::sum_chain };
        auto const width = 1 + pick.below( 8 );
        for ( std::uint64_t w = 0; w < width; ++w )
          gg.inputs.push_back( lines[next++] );
        guards.insert( guards.end(), gg.inputs.begin(), gg.inputs.end() );
        spec.guards.push_back( std::move( gg ) );
      }
      auto const outs = 1 + pick.below( 23 );
      for ( std::uint64_t o = 0; o < outs; ++o )
        spec.outputs.push_back( lines[next++] );
      spec.dependency = pick.bernoulli( 0.5 ) ? output_dependency::dependent : output_dependency::independent;
      ctx.run( spec );
    }
    else
    {
      auto const& g = gates[pick.below( gates.size() )].shape;
      std::vector<line_id> in( lines.begin(), lines.begin() + g.fan_in );
      std::vector<line_id> outs( lines.begin() + g.fan_in, lines.begin() + g.fan_in + 2 );
      std::vector<line_id> scratch( lines.begin() + g.fan_in + 2, lines.begin() + g.fan_in + 2 + 11 );
      for ( auto const& o : outs )
        state.flush( o );
      for ( auto const& s : scratch )
        state.flush( s );
      guards = in;
      switch ( g.kind )
      {
      case gate_kind::not_gate:
        invert( in[0], outs[0], ctx );
        break;
      case gate_kind::replicate:
        replicate( in[0], std::span( outs ).first( 1 ), ctx );
        break;
      case gate_kind::nand:
        nand( in, outs[0], ctx );
        break;
      case gate_kind::nor:
        nor( in[0], in[1], outs[0], ctx );
        break;
      case gate_kind::xor_gate:
        xor_gate( in[0], in[1], outs[0], ctx );
        break;
      case gate_kind::half_adder:
        half_adder( in[0], in[1], outs[0], outs[1], scratch, ctx );
        break;
      }
    }
    for ( auto const& l : guards )
      violations += state.phi( l ) ? 0u : 1u;
  }
  return { violations == 0, std::to_string( pairs ) + " gadget/state pairs under random jitter and flips, " +
                                std::to_string( violations ) + " guard inputs left absent" };
}

/* ------------------------------------------------------------------ 3 */
verdict amplifier_closed_form()
{
  latency_model const lat;
  double worst = 0.0;
  double strength_100k = 0.0;
  for ( std::uint64_t n : { 1u, 10u, 1000u, 100000u } )
    for ( auto mode : { amplifier_evaluation::simulate, amplifier_evaluation::analytic } )
    {
      amplifier_config cfg;
      cfg.iterations = n;
      cfg.evaluation = mode;
      auto const s = measure_strength( cfg, lat, {}, 1 );
      double const expected = static_cast<double>( n ) * ( cfg.accesslen - 1 ) * ( lat.miss_ns - lat.hit_ns );
      worst = std::max( worst, std::abs( s.strength_ns - expected ) / expected );
      if ( n == 100000 )
        strength_100k = s.strength_ns;
    }
  double const gain = strength_100k / ( lat.miss_ns - lat.hit_ns );
  char buf[160];
  std::snprintf( buf, sizeof buf,
                 "max relative error %.3g over n in {1, 10, 1e3, 1e5}; 100k iterations: %.1f ms, %.3g x the 76 ns gap",
                 worst, strength_100k / 1e6, gain );
  return { worst < 1e-9 && gain > 1e6, buf };
}

/* ------------------------------------------------------------------ 4 */
verdict coarse_timer_recovery()
{
  experiment_config const cfg;
  auto run = [&]( std::uint64_t iterations ) {
    amplifier_config amp;
    amp.iterations = iterations;
    std::uint64_t counts[3] = { 0, 0, 0 }; /* correct, wrong, indeterminate */
    for ( std::uint64_t t = 0; t < 1000; ++t )
      for ( bool signal : { true, false } )
      {
        auto const r = recover_once( cfg, amp, 1e8, signal, trial_seed( cfg.seed, t, purpose::noise ) );
        if ( r == recovered_signal::indeterminate )
          ++counts[2];
        else
          ++counts[( r == recovered_signal::present ) == signal ? 0 : 1];
      }
    return std::vector<std::uint64_t>( counts, counts + 3 );
  };
  auto const strong = run( 100000 );
  auto const weak = run( 1000 );
  std::string d = "100 ms timer: 100k iterations " + std::to_string( strong[0] ) + "/2000 correct (1000 per signal); 1k iterations " +
                  std::to_string( weak[2] ) + "/2000 indeterminate";
  return { strong[0] == 2000 && weak[2] == 2000, d };
}

/* ------------------------------------------------------------------ 5 */
verdict corruption_trend()
{
  experiment_config cfg;
  cfg.experiment = experiment_kind::amplifier_sweep;
  cfg.trials = 1000;
  cfg.iterations = { 100000, 700000 };
  cfg.noise.corruption_prob_per_iteration = 2e-6;
  auto const r = run_amplifier_sweep( cfg );
  double const med_lo = cell_of( r.summary, 0, "median_ns" );
  double const med_hi = cell_of( r.summary, 1, "median_ns" );
  double const neg_lo = cell_of( r.summary, 0, "negative_fraction" );
  double const neg_hi = cell_of( r.summary, 1, "negative_fraction" );
  char buf[200];
  std::snprintf( buf, sizeof buf, "median %.1f ms at 700k vs %.1f ms at 100k; negative fraction %.3f vs %.3f",
                 med_hi / 1e6, med_lo / 1e6, neg_hi, neg_lo );
  return { med_hi > med_lo && neg_hi > neg_lo, buf };
}

/* ------------------------------------------------------------------ 6 */
verdict binary_search_budget()
{
  std::uint64_t runs = 0, correct = 0, budget = 0;
  for ( std::size_t n = 4; n <= 256; n *= 2 )
  {
    auto const rounds = static_cast<std::uint64_t>( std::countr_zero( n ) );
    for ( std::size_t target = 0; target < n; ++target )
    {
      cache_state state;
      rng random( target );
      line_arena arena;
      gadget_context ctx{ .state = state, .random = random };
      auto st = make_search_state( n, arena, state );
      state.touch( st.signal[target] );
      timer_model timer;
      auto const res = binary_search( st, timer, ctx, { .check_precondition = true } );
      ++runs;
      correct += res.index == target ? 1u : 0u;
      budget += timer.reads_taken == 2 * rounds ? 1u : 0u;
    }
  }
  return { correct == runs && budget == runs, std::to_string( correct ) + "/" + std::to_string( runs ) +
                                                  " positions found over N = 4..256, " + std::to_string( budget ) +
                                                  " with exactly log2(N) measurements" };
}

/* ------------------------------------------------------------------ 7 */
verdict counter_budget()
{
  std::uint64_t runs = 0, correct = 0, budget = 0;
  auto trial = [&]( counter_program const& prog, auto&& fill ) {
    cache_state state;
    rng random( runs );
    line_arena arena;
    gadget_context ctx{ .state = state, .random = random };
    auto st = make_counter_state( prog, arena, state );
    std::uint64_t const expected = fill( st, state );
    timer_model timer;
    ++runs;
    correct += count_lines( st, prog, timer, ctx ) == expected ? 1u : 0u;
    budget += timer.reads_taken == 2u * logic::counter_width( prog.inputs ) ? 1u : 0u;
  };

  for ( std::uint32_t n = 1; n <= 10; ++n )
  {
    auto const prog = make_counter_program( n );
    for ( std::uint64_t mask = 0; mask < ( 1u << n ); ++mask )
      trial( prog, [&]( counter_state& st, cache_state& state ) {
        for ( std::uint32_t i = 0; i < n; ++i )
          if ( ( mask >> i ) & 1u )
            state.touch( st.inputs[i] );
        return static_cast<std::uint64_t>( std::popcount( mask ) );
      } );
  }
  rng pick( 77 );
  for ( std::uint32_t n : { 16u, 32u, 64u, 128u, 256u } )
  {
    auto const prog = make_counter_program( n );
    for ( int t = 0; t < 1000; ++t )
      trial( prog, [&]( counter_state& st, cache_state& state ) {
        std::uint64_t c = 0;
        for ( auto const& l : st.inputs )
          if ( pick.bernoulli( 0.5 ) )
          {
            state.touch( l );
            ++c;
          }
        return c;
      } );
  }
  return { correct == runs && budget == runs,
           std::to_string( correct ) + "/" + std::to_string( runs ) + " counts exact (all subsets n <= 10, 1000 random for n = 16..256), " +
               std::to_string( budget ) + " with exactly ceil(log2(n+1)) measurements" };
}

/* ------------------------------------------------------------------ 8 */
verdict noise_monotonicity()
{
  experiment_config cfg;
  cfg.trials = 1000;
  cfg.noise.gadget_flip_prob = 1e-4;
  bool ok = true;
  std::string d;
  for ( auto kind : { experiment_kind::binary_search, experiment_kind::counter } )
  {
    cfg.experiment = kind;
    auto const r = run_experiment( cfg );
    d += std::string( d.empty() ? "" : "; " ) + std::string( to_string( kind ) ) + " accuracy";
    double prev = 2.0;
    for ( std::size_t i = 0; i < r.summary.rows.size(); ++i )
    {
      double const acc = cell_of( r.summary, i, "accuracy" );
      ok = ok && acc <= prev && cell_of( r.summary, i, "budget_ok" ) == 1.0;
      prev = acc;
      char buf[32];
      std::snprintf( buf, sizeof buf, " %s:%.3f", r.summary.rows[i][0].c_str(), acc );
      d += buf;
    }
  }
  return { ok, d };
}

/* ------------------------------------------------------------------ 9 */
verdict emitter_golden_files()
{
  std::size_t identical = 0, clean = 0, total = 0;
  std::string problems;
  for ( auto const& [name, req] : canonical_emissions() )
  {
    ++total;
    std::ifstream in( std::string( CACHESIG_GOLDEN_DIR ) + "/" + name + ".s", std::ios::binary );
    std::ostringstream golden;
    golden << in.rdbuf();
    identical += in && golden.str() == emit_module( { req } ) ? 1u : 0u;

    auto issues = check_emission( req, emit( req ) );
    auto const s = inspect_asm( emit( req ) );
    if ( req.kind == emit_kind::amplifier )
    {
      if ( s.output_loads != req.accesslen )
        issues.push_back( "output loads != accesslen" );
      for ( auto v : s.stride_immediates )
        if ( v != 4160 )
          issues.push_back( "stride immediate != 4160" );
    }
    if ( issues.empty() )
      ++clean;
    else
      problems += " " + name + ": " + issues.front();
  }
  return { identical == total && clean == total,
           std::to_string( identical ) + "/" + std::to_string( total ) + " byte-identical to golden, " +
               std::to_string( clean ) + "/" + std::to_string( total ) + " pass the structural checks" + problems };
}

/* ----------------------------------------------------------------- 10 */
verdict determinism()
{
  std::vector<std::pair<experiment_kind, std::string>> const runs = {
      { experiment_kind::truth_tables, "latency.jitter_sigma_ns=8" },
      { experiment_kind::amplifier_sweep, "noise.corruption_prob_per_iteration=2e-6" },
      { experiment_kind::amplifier_consistency, "noise.corruption_prob_per_iteration=2e-6" },
      { experiment_kind::binary_search, "noise.gadget_flip_prob=1e-3" },
      { experiment_kind::counter, "noise.gadget_flip_prob=1e-3" },
      { experiment_kind::emit_asm, "experiment.seed=1" } };
  std::size_t same = 0;
  std::string differing;
  for ( auto const& [kind, setting] : runs )
  {
    experiment_config cfg;
    cfg.experiment = kind;
    cfg.trials = 100;
    cfg.seed = 424242;
    cfg.iterations = { 100000, 300000 };
    cfg.granularities_ns = { 1e7 };
    cfg.sizes = { 4, 32, 128 };
    apply_assignment( cfg, setting );

    cfg.threads = 1;
    auto const a = run_experiment( cfg );
    auto const b = run_experiment( cfg );
    cfg.threads = 4;
    auto const c = run_experiment( cfg );
    cfg.threads = 1;
    bool const ok = csv_text( a ) == csv_text( b ) && csv_text( a ) == csv_text( c ) &&
                    json_text( a, cfg ) == json_text( b, cfg );
    same += ok ? 1u : 0u;
    if ( !ok )
      differing += " " + std::string( to_string( kind ) );
  }
  return { same == runs.size(), std::to_string( same ) + "/" + std::to_string( runs.size() ) +
                                    " experiments byte-identical across reruns and thread counts (CSV and JSON)" +
                                    ( differing.empty() ? "" : ";" + differing + " differ" ) };
}

} // namespace

int main()
{
  std::cout << "cachesig " << version_string() << " acceptance" << std::endl;
  report( 1, "gate oracle equivalence", gate_oracle_equivalence, 30.0 );
  report( 2, "destructive-input law", destructive_input_law );
  report( 3, "amplifier closed form", amplifier_closed_form, 60.0 );
  report( 4, "coarse-timer recovery", coarse_timer_recovery );
  report( 5, "corruption trend", corruption_trend );
  report( 6, "binary search budget and correctness", binary_search_budget );
  report( 7, "counter budget and correctness", counter_budget );
  report( 8, "noise degradation monotonicity", noise_monotonicity );
  report( 9, "emitter golden files", emitter_golden_files );
  report( 10, "determinism", determinism );
  std::cout << ( failures == 0 ? "all criteria pass" : std::to_string( failures ) + " criteria fail" ) << std::endl;
  return failures == 0 ? 0 : 1;
}
