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

#include <cachesig/logic/counter.hpp>
#include <cachesig/logic/execute.hpp>
#include <cachesig/logic/lower.hpp>
#include <cachesig/logic/netlist.hpp>
#include <cachesig/logic/text_format.hpp>

#include <bit>
#include <filesystem>
#include <fstream>

using namespace cachesig;
using namespace cachesig::logic;

namespace
{

std::vector<bool> row_bits( std::size_t width, std::uint64_t row )
{
  std::vector<bool> b( width );
  for ( std::size_t i = 0; i < width; ++i )
    b[i] = ( row >> i ) & 1u;
  return b;
}

std::vector<netlist> sample_netlists()
{
  std::vector<netlist> out;
  for ( auto const& e : std::filesystem::directory_iterator( CACHESIG_SAMPLES_DIR ) )
    if ( e.path().extension() == ".bench" )
    {
      std::ifstream in( e.path() );
      out.push_back( read_netlist( in ) );
    }
  out.push_back( parse_netlist( "INPUT(a, b, c, d)\nOUTPUT(x, y, a)\n"
                                "x = XOR(a, b, c, d)\ny = NOR(a, b)\n" ) );
  return out;
}

} // namespace

TEST_CASE( "the text format reads gates in any order", "[logic]" )
{
  auto const net = parse_netlist( "# comment\nINPUT(a, b)\nOUTPUT(s, c)\n"
                                  "s = XOR(a, b)\nc = AND(a, b)\n" );
  CHECK( net.inputs().size() == 2 );
  CHECK( net.outputs().size() == 2 );
  CHECK( evaluate( net, { true, true } ) == std::vector<bool>{ false, true } );
  CHECK( evaluate( net, { true, false } ) == std::vector<bool>{ true, false } );

  auto const reordered = parse_netlist( "OUTPUT(y)\ny = NOT(t)\nt = AND(a, b)\nINPUT(a, b)\n" );
  CHECK( evaluate( reordered, { true, true } ) == std::vector<bool>{ false } );
}

TEST_CASE( "malformed netlists are rejected", "[logic]" )
{
  CHECK_THROWS_AS( parse_netlist( "INPUT(a)\nOUTPUT(y)\ny = FOO(a)\n" ), parse_error );
  CHECK_THROWS_AS( parse_netlist( "INPUT(a)\nOUTPUT(y)\ny = NOT(b)\n" ), error );
  CHECK_THROWS_AS( parse_netlist( "INPUT(a)\nOUTPUT(y)\ny = NOT(y2)\ny2 = NOT(y)\n" ), error );
  CHECK_THROWS_AS( parse_netlist( "INPUT(a)\nOUTPUT(y)\ny = NOT(a)\ny = NOT(a)\n" ), error );
  CHECK_THROWS_AS( parse_netlist( "INPUT(a)\nOUTPUT(y)\ny = NOT(a, a)\n" ), error );
}

TEST_CASE( "text output reads back to the same function", "[logic]" )
{
  for ( auto const& net : sample_netlists() )
  {
    auto const again = parse_netlist( to_text( net ) );
    for ( std::uint64_t r = 0; r < ( 1u << net.inputs().size() ); ++r )
      CHECK( evaluate( again, row_bits( net.inputs().size(), r ) ) ==
             evaluate( net, row_bits( net.inputs().size(), r ) ) );
  }
}

TEST_CASE( "lowering preserves the function and reads every signal once", "[logic]" )
{
  for ( lower_params ps : { lower_params{}, lower_params{ .max_fanout = 2, .max_nand_fan_in = 2 } } )
    for ( auto const& net : sample_netlists() )
    {
      auto const low = lower( net, ps );
      CHECK( is_lowered( low, ps ) );
      CHECK( multiply_used( low ).empty() );
      auto const st = stats( low );
      CHECK( st.other == 0 );
      CHECK( st.max_fanout <= ps.max_fanout );
      for ( std::uint64_t r = 0; r < ( 1u << net.inputs().size() ); ++r )
      {
        auto const bits = row_bits( net.inputs().size(), r );
        CHECK( evaluate( low, bits ) == evaluate( net, bits ) );
      }
    }
}

TEST_CASE( "large fan-out becomes a replication tree", "[logic]" )
{
  netlist net;
  auto const a = net.add_input( "a" );
  for ( int i = 0; i < 60; ++i )
    net.add_output( net.add_gate( op::not_gate, { a } ) );
  auto const low = lower( net, {} );
  CHECK( is_lowered( low ) );
  CHECK( stats( low ).max_fanout <= 23 );
  CHECK( evaluate( low, { true } ) == std::vector<bool>( 60, false ) );
}

TEST_CASE( "lowered netlists run on cachelines like the oracle", "[logic]" )
{
  for ( auto const& net : sample_netlists() )
  {
    auto const prog = compile( net );
    for ( std::uint64_t r = 0; r < ( 1u << net.inputs().size() ); ++r )
    {
      auto const bits = row_bits( net.inputs().size(), r );
      gadget_tally tally;
      CHECK( simulate( prog, bits, {}, &tally ) == evaluate( net, bits ) );
      CHECK( tally.flips == 0 );
    }
  }
}

TEST_CASE( "line plans reuse scratch lines", "[logic]" )
{
  auto const prog = compile( build_counter_netlist( 64 ) );
  CHECK( prog.plan.pool_size > 0 );
  CHECK( prog.plan.pool_size < prog.net.num_signals() );
}

TEST_CASE( "execute rejects netlists that are not lowered", "[logic]" )
{
  auto const net = parse_netlist( "INPUT(a, b)\nOUTPUT(y)\ny = AND(a, b)\n" );
  compiled_netlist raw{ net, plan_lines( net ) };
  CHECK_THROWS_AS( simulate( raw, { true, true } ), precondition_error );
}

TEST_CASE( "the counter netlist computes popcount", "[logic]" )
{
  CHECK( counter_width( 1 ) == 1 );
  CHECK( counter_width( 3 ) == 2 );
  CHECK( counter_width( 4 ) == 3 );
  CHECK( counter_width( 255 ) == 8 );
  CHECK( counter_width( 256 ) == 9 );
  for ( std::uint32_t n = 1; n <= 8; ++n )
  {
    auto const net = build_counter_netlist( n );
    CHECK( net.outputs().size() == counter_width( n ) );
    for ( std::uint64_t r = 0; r < ( 1u << n ); ++r )
    {
      auto const out = evaluate( net, row_bits( n, r ) );
      std::uint64_t v = 0;
      for ( std::size_t j = 0; j < out.size(); ++j )
        v |= std::uint64_t{ out[j] } << j;
      CHECK( v == static_cast<std::uint64_t>( std::popcount( r ) ) );
    }
  }
}

TEST_CASE( "the counter does not care which lines are present", "[logic]" )
{
  auto const prog = compile( build_counter_netlist( 12 ) );
  rng r( 3 );
  for ( int k = 0; k <= 12; k += 3 )
  {
    std::vector<bool> base( 12, false );
    std::fill( base.begin(), base.begin() + k, true );
    auto const expected = simulate( prog, base );
    for ( int t = 0; t < 5; ++t )
    {
      auto shuffled = base;
      for ( std::size_t i = shuffled.size() - 1; i > 0; --i )
      {
        auto const j = r.below( i + 1 );
        bool const tmp = shuffled[i];
        shuffled[i] = shuffled[j];
        shuffled[j] = tmp;
      }
      CHECK( simulate( prog, shuffled ) == expected );
    }
  }
}

TEST_CASE( "gates wider than the NAND limit are split", "[logic]" )
{
  netlist net;
  std::vector<signal> ins;
  for ( int i = 0; i < 9; ++i )
    ins.push_back( net.add_input( "x" + std::to_string( i ) ) );
  net.add_output( net.add_gate( op::and_gate, ins, "all" ) );
  net.add_output( net.add_gate( op::or_gate, ins, "any" ) );
  lower_params const ps{ .max_fanout = 3, .max_nand_fan_in = 2 };
  auto const low = lower( net, ps );
  CHECK( is_lowered( low, ps ) );
  for ( std::uint64_t r = 0; r < 512; ++r )
    CHECK( evaluate( low, row_bits( 9, r ) ) == evaluate( net, row_bits( 9, r ) ) );
  CHECK_THROWS_AS( lower( net, { .max_fanout = 1 } ), precondition_error );
}
