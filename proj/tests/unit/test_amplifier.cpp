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

#include <catch_amalgamated.hpp>

#include <cachesig/amplifier.hpp>

using namespace cachesig;

namespace
{

struct rig
{
  cache_state state;
  rng random;
  line_arena arena;
  gadget_context ctx;
  line_id input;
  std::vector<line_id> work;

  rig( bool signal, latency_model lat = {}, noise_model noise = {}, std::uint64_t seed = 1 )
      : random( seed ), ctx{ .state = state, .random = random, .latency = lat, .noise = noise }
  {
    input = arena.allocate_one();
    work = arena.allocate( 23 );
    state.register_line( input );
    state.register_lines( work );
    state.set( input, signal );
  }
};

} // namespace

TEST_CASE( "one amplifier stage inverts the input into every output", "[amplifier]" )
{
  for ( bool v : { false, true } )
  {
    rig r( v );
    single_stage( r.input, r.work, {}, r.ctx );
    for ( auto const& w : r.work )
      CHECK( r.state.phi( w ) == !v );
    CHECK( r.state.phi( r.input ) );
  }
}

TEST_CASE( "zero-noise strength follows the closed form", "[amplifier]" )
{
  for ( std::uint64_t n : { 1u, 10u, 1000u } )
  {
    amplifier_config cfg;
    cfg.iterations = n;
    for ( auto mode : { amplifier_evaluation::simulate, amplifier_evaluation::analytic } )
    {
      cfg.evaluation = mode;
      auto const s = measure_strength( cfg, {}, {}, 7 );
      CHECK( s.strength_ns == Catch::Approx( n * 22.0 * 76.0 ).epsilon( 1e-12 ) );
      CHECK_FALSE( s.corrupted );
    }
  }
}

TEST_CASE( "the loop restores the input signal", "[amplifier]" )
{
  for ( bool v : { false, true } )
  {
    rig r( v );
    amplifier_config cfg;
    cfg.iterations = 50;
    cfg.evaluation = amplifier_evaluation::simulate;
    auto const run = self_reinforcing( r.input, r.work, cfg, r.ctx );
    CHECK( r.state.phi( r.input ) == v );
    CHECK( run.iterations == 50 );
    CHECK_FALSE( run.corrupted );
  }
}

TEST_CASE( "the closed form matches the step-by-step loop under corruption", "[amplifier]" )
{
  noise_model noise;
  noise.corruption_prob_per_iteration = 0.01;
  for ( std::uint64_t seed = 1; seed <= 20; ++seed )
    for ( bool v : { false, true } )
    {
      amplifier_config cfg;
      cfg.iterations = 500;
      cfg.evaluation = amplifier_evaluation::simulate;
      auto const a = amplify_fresh( v, cfg, {}, noise, seed );
      cfg.evaluation = amplifier_evaluation::analytic;
      auto const b = amplify_fresh( v, cfg, {}, noise, seed );
      CHECK( a.elapsed_ns == b.elapsed_ns );
      CHECK( a.corruption_events == b.corruption_events );
      CHECK( a.first_corruption == b.first_corruption );
      CHECK( b.analytic );
      CHECK_FALSE( a.analytic );
    }
}

TEST_CASE( "the closed form is refused when it would not be exact", "[amplifier]" )
{
  latency_model lat;
  lat.jitter_sigma_ns = 2.0;
  amplifier_config cfg;
  cfg.evaluation = amplifier_evaluation::analytic;
  CHECK_THROWS_AS( amplify_fresh( true, cfg, lat, {}, 1 ), precondition_error );
  cfg.evaluation = amplifier_evaluation::automatic;
  CHECK_FALSE( amplify_fresh( true, cfg, lat, {}, 1 ).analytic );
}

TEST_CASE( "corruption shrinks or flips the strength", "[amplifier]" )
{
  noise_model noise;
  noise.corruption_prob_per_iteration = 1e-3;
  amplifier_config cfg;
  cfg.iterations = 10000;
  auto const s = measure_strength( cfg, {}, noise, 3 );
  CHECK( s.corrupted );
  CHECK( s.strength_ns < 10000 * 22.0 * 76.0 );
}

TEST_CASE( "a coarse timer reads an amplified signal", "[amplifier]" )
{
  amplifier_config cfg;
  cfg.iterations = 100000;
  for ( bool v : { false, true } )
  {
    rig r( v );
    timer_model timer{ .granularity_ns = 1e8 };
    auto const got = recover_signal( r.input, r.work, cfg, timer, r.ctx );
    CHECK( got == ( v ? recovered_signal::present : recovered_signal::absent ) );
    CHECK( timer.measurements() == 1 );
  }
}

TEST_CASE( "a weak signal under a coarse timer is indeterminate", "[amplifier]" )
{
  amplifier_config cfg;
  cfg.iterations = 1000;
  rig r( true );
  timer_model timer{ .granularity_ns = 1e8 };
  CHECK( recover_signal( r.input, r.work, cfg, timer, r.ctx ) == recovered_signal::indeterminate );
}

TEST_CASE( "working lines must be spaced and distinct", "[amplifier]" )
{
  rig r( true );
  amplifier_config cfg;
  auto bad = r.work;
  bad[3] = bad[2];
  CHECK_THROWS( self_reinforcing( r.input, bad, cfg, r.ctx ) );
  auto shortw = std::vector<line_id>( r.work.begin(), r.work.begin() + 5 );
  CHECK_THROWS_AS( self_reinforcing( r.input, shortw, cfg, r.ctx ), precondition_error );
  cfg.accesslen = 1;
  CHECK_THROWS_AS( self_reinforcing( r.input, std::span( r.work ).first( 1 ), cfg, r.ctx ), precondition_error );
}

TEST_CASE( "multi-stage chaining is opt-in", "[amplifier]" )
{
  rig r( false );
  amplifier_config cfg;
  CHECK_THROWS_AS( multi_stage( r.input, 2, cfg, r.ctx, r.arena ), precondition_error );
  cfg.enable_multi_stage = true;
  cfg.accesslen = 3;
  auto const t = multi_stage( r.input, 2, cfg, r.ctx, r.arena );
  /* two inversions: 9 lines carrying phi(input) = absent */
  CHECK( t == 9 * 80.0 );
  CHECK_THROWS_AS( multi_stage( r.input, 50, cfg, r.ctx, r.arena ), precondition_error );
}
