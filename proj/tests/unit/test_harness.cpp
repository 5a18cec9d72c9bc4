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

#include <cachesig/harness/config.hpp>
#include <cachesig/harness/experiments.hpp>
#include <cachesig/harness/parallel.hpp>
#include <cachesig/harness/table.hpp>

#include <map>
#include <sstream>

using namespace cachesig;
using namespace cachesig::harness;

namespace
{

std::string csv_of( experiment_result const& r )
{
  std::ostringstream s;
  write_csv( s, r.rows );
  write_csv( s, r.summary );
  return s.str();
}

std::string json_of( experiment_result const& r, experiment_config const& cfg )
{
  std::ostringstream s;
  write_json( s, r, cfg, true );
  return s.str();
}

} // namespace

TEST_CASE( "configs survive an INI round trip", "[harness]" )
{
  experiment_config cfg;
  cfg.experiment = experiment_kind::amplifier_consistency;
  cfg.seed = 1234567890123ull;
  cfg.iterations = { 100000, 700000 };
  cfg.granularities_ns = { 1e7, 0.1, 3.25 };
  cfg.latency.jitter_sigma_ns = 0.1;
  cfg.noise.corruption_prob_per_iteration = 2e-6;
  cfg.amplifier.evaluation = amplifier_evaluation::simulate;
  cfg.check_precondition = true;

  auto const text = to_ini( cfg );
  experiment_config back;
  std::istringstream in( text );
  read_config( in, back );
  CHECK( to_ini( back ) == text );
  CHECK( back.granularities_ns == cfg.granularities_ns );
  CHECK( back.noise.corruption_prob_per_iteration == 2e-6 );
}

TEST_CASE( "unknown keys and bad values are errors", "[harness]" )
{
  experiment_config cfg;
  std::istringstream unknown( "[latency]\nhit = 4\n" );
  CHECK_THROWS_AS( read_config( unknown, cfg ), parse_error );
  std::istringstream section( "[nope]\nx = 1\n" );
  CHECK_THROWS_AS( read_config( section, cfg ), parse_error );
  CHECK_THROWS_AS( apply_assignment( cfg, "latency.hit_ns=fast" ), parse_error );
  CHECK_THROWS_AS( apply_assignment( cfg, "latency.hit_ns" ), parse_error );
  CHECK_THROWS_AS( apply_assignment( cfg, "experiment.name=unknown" ), parse_error );
  CHECK_THROWS_AS( apply_assignment( cfg, "experiment.check_precondition=maybe" ), parse_error );
}

TEST_CASE( "file, environment and command line apply in that order", "[harness]" )
{
  experiment_config cfg;
  std::istringstream file( "[experiment]\nseed = 10\ntrials = 5\n[latency]\nmiss_ns = 90\n" );
  read_config( file, cfg );
  std::map<std::string, std::string> env = { { "CACHESIG_EXPERIMENT_SEED", "20" },
                                             { "CACHESIG_LATENCY_HIT_NS", "3" } };
  apply_environment( cfg, [&]( char const* name ) -> char const* {
    auto const it = env.find( name );
    return it == env.end() ? nullptr : it->second.c_str();
  } );
  apply_assignment( cfg, "experiment.seed=30" );

  CHECK( cfg.seed == 30 );
  CHECK( cfg.trials == 5 );
  CHECK( cfg.latency.miss_ns == 90.0 );
  CHECK( cfg.latency.hit_ns == 3.0 );
}

TEST_CASE( "every key has an environment name", "[harness]" )
{
  CHECK( find_key( "noise.gadget_flip_prob" ).env_name() == "CACHESIG_NOISE_GADGET_FLIP_PROB" );
  CHECK_THROWS_AS( find_key( "noise.flip" ), parse_error );
}

TEST_CASE( "config validation rejects impossible models", "[harness]" )
{
  experiment_config cfg;
  cfg.stride = 4096;
  CHECK_THROWS_AS( cfg.validate(), precondition_error );
  cfg = {};
  cfg.granularities_ns = { 0.0 };
  CHECK_THROWS_AS( cfg.validate(), precondition_error );
}

TEST_CASE( "CSV quotes only when it must", "[harness]" )
{
  result_table t{ { "a", "b" }, {} };
  t.add( std::string( "x,y" ), 1.5 );
  t.add( std::string( "say \"hi\"" ), true );
  std::ostringstream s;
  write_csv( s, t );
  CHECK( s.str() == "a,b\n\"x,y\",1.5\n\"say \"\"hi\"\"\",1\n" );
  CHECK_THROWS_AS( t.add( 1 ), precondition_error );
}

TEST_CASE( "JSON keeps numeric cells numeric", "[harness]" )
{
  result_table t{ { "name", "n", "x" }, {} };
  t.add( std::string( "NAND2" ), std::uint64_t{ 7 }, 0.25 );
  auto const j = to_json( t );
  CHECK( j[0]["name"] == "NAND2" );
  CHECK( j[0]["n"] == 7 );
  CHECK( j[0]["x"] == 0.25 );
}

TEST_CASE( "shortest round-trip formatting for doubles", "[harness]" )
{
  CHECK( harness::detail::format_double( 0.1 ) == "0.1" );
  CHECK( harness::detail::format_double( 167200000.0 ) == "167200000" );
  CHECK( std::stod( harness::detail::format_double( 1.0 / 3.0 ) ) == 1.0 / 3.0 );
}

TEST_CASE( "quantiles interpolate between order statistics", "[harness]" )
{
  std::vector<double> const v = { 1, 2, 3, 4 };
  CHECK( quantile( v, 0.0 ) == 1.0 );
  CHECK( quantile( v, 0.5 ) == 2.5 );
  CHECK( quantile( v, 0.25 ) == 1.75 );
  CHECK( quantile( v, 1.0 ) == 4.0 );
}

TEST_CASE( "parallel_map results do not depend on the thread count", "[harness]" )
{
  auto const f = []( std::uint64_t i ) { return split_seed( 3, i ); };
  CHECK( parallel_map( 100, 1, f ) == parallel_map( 100, 4, f ) );
  CHECK_THROWS_AS( parallel_map( 10, 3,
                                 []( std::uint64_t i ) -> int {
                                   if ( i == 7 )
                                     throw precondition_error( "boom" );
                                   return 0;
                                 } ),
                   precondition_error );
}

TEST_CASE( "truth-table rows cycle exhaustively when they fit", "[harness]" )
{
  for ( std::uint64_t t = 0; t < 16; ++t )
  {
    auto const bits = truth_table_row( 4, t, 32, 1 );
    std::uint64_t v = 0;
    for ( std::size_t i = 0; i < 4; ++i )
      v |= std::uint64_t{ bits[i] } << i;
    CHECK( v == t );
  }
  CHECK( truth_table_row( 32, 0, 100, 1 ) == std::vector<bool>( 32, true ) );
}

TEST_CASE( "experiments repeat byte for byte and ignore the thread count", "[harness]" )
{
  struct run
  {
    experiment_kind kind;
    char const* setting;
  };
  for ( auto const& [kind, setting] : { run{ experiment_kind::truth_tables, "latency.jitter_sigma_ns=8" },
                                        run{ experiment_kind::amplifier_sweep, "noise.corruption_prob_per_iteration=1e-4" },
                                        run{ experiment_kind::amplifier_consistency, "timer.jitter_ns=1e6" },
                                        run{ experiment_kind::binary_search, "noise.gadget_flip_prob=1e-3" },
                                        run{ experiment_kind::counter, "noise.gadget_flip_prob=1e-3" },
                                        run{ experiment_kind::emit_asm, "experiment.seed=2" } } )
  {
    INFO( to_string( kind ) );
    experiment_config cfg;
    cfg.experiment = kind;
    cfg.trials = 12;
    cfg.threads = 1;
    cfg.iterations = { 1000, 20000 };
    cfg.granularities_ns = { 1e5 };
    cfg.sizes = { 4, 16 };
    apply_assignment( cfg, setting );
    auto const a = run_experiment( cfg );
    auto const b = run_experiment( cfg );
    cfg.threads = 3;
    auto const c = run_experiment( cfg );
    CHECK( csv_of( a ) == csv_of( b ) );
    CHECK( csv_of( a ) == csv_of( c ) );
    cfg.threads = 1;
    CHECK( json_of( a, cfg ) == json_of( b, cfg ) );
    CHECK( a.experiment == to_string( kind ) );
  }
}

TEST_CASE( "a different seed changes noisy results", "[harness]" )
{
  experiment_config cfg;
  cfg.experiment = experiment_kind::amplifier_sweep;
  cfg.trials = 20;
  cfg.threads = 1;
  cfg.iterations = { 20000 };
  cfg.noise.corruption_prob_per_iteration = 1e-4;
  auto const a = run_experiment( cfg );
  cfg.seed = 2;
  auto const b = run_experiment( cfg );
  CHECK( csv_of( a ) != csv_of( b ) );
}

TEST_CASE( "zero-noise truth tables are exact", "[harness]" )
{
  experiment_config cfg;
  cfg.trials = 256;
  auto const r = run_truth_tables( cfg );
  auto const acc = r.summary.column( "accuracy" );
  for ( auto const& row : r.summary.rows )
    CHECK( row[acc] == "1" );
}

TEST_CASE( "the JSON summary echoes the configuration and version", "[harness]" )
{
  experiment_config cfg;
  cfg.experiment = experiment_kind::emit_asm;
  auto const r = run_experiment( cfg );
  auto const j = to_json( r, cfg );
  CHECK( j["tool"] == "cachesig" );
  CHECK( j["version"] == version_string() );
  CHECK( j["config"]["amplifier.stride"] == "4160" );
  CHECK( j["row_count"] == r.rows.rows.size() );
  CHECK_FALSE( j.contains( "rows" ) );
}
