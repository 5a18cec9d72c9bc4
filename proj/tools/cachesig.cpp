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
  cachesig: command-line front end for the cache-gadget simulator.

    cachesig [--config FILE] [--seed N] [--trials N] [--out PATH]
             [--format csv|json] [--set section.key=value]... <subcommand>
*/

#include <cachesig/cachesig.hpp>
#include <cachesig/harness/config.hpp>
#include <cachesig/harness/experiments.hpp>
#include <cachesig/harness/table.hpp>

#if __has_include( <CLI/CLI.hpp> )
#include <CLI/CLI.hpp>
#else
#include <CLI11.hpp>
#endif

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace
{

using namespace cachesig;
using namespace cachesig::harness;

struct global_options
{
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> trials;
  std::optional<std::uint32_t> threads;
  std::string out;
  std::string format = "csv";
  std::vector<std::string> assignments;
  bool print_config = false;
  bool include_rows = false;
};

class output
{
public:
  explicit output( std::string const& path )
  {
    if ( !path.empty() && path != "-" )
    {
      if ( auto parent = std::filesystem::path( path ).parent_path(); !parent.empty() )
        std::filesystem::create_directories( parent );
      file_.open( path, std::ios::binary );
      if ( !file_ )
        throw cachesig::error( "cannot write '" + path + "'" );
    }
  }
  std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>( file_ ) : std::cout; }

private:
  std::ofstream file_;
};

experiment_config resolve_config( global_options const& g )
{
  experiment_config cfg;
  if ( !g.config_path.empty() )
    load_config_file( g.config_path, cfg );
  apply_environment( cfg );
  for ( auto const& a : g.assignments )
    apply_assignment( cfg, a );
  if ( g.seed )
    cfg.seed = *g.seed;
  if ( g.trials )
    cfg.trials = *g.trials;
  if ( g.threads )
    cfg.threads = *g.threads;
  return cfg;
}

void write_result( global_options const& g, experiment_config const& cfg, experiment_result const& res )
{
  output out( g.out );
  if ( g.format == "json" )
    write_json( out.stream(), res, cfg, g.include_rows );
  else
  {
    write_csv( out.stream(), res.rows );
    write_csv( std::cerr, res.summary );
  }
}

std::vector<bool> parse_bits( std::string const& s, std::size_t width )
{
  if ( s.size() != width )
    throw cachesig::parse_error( "input row '" + s + "' must have " + std::to_string( width ) + " bits" );
  std::vector<bool> bits;
  for ( char c : s )
  {
    if ( c != '0' && c != '1' )
      throw cachesig::parse_error( "input row '" + s + "' may only contain 0 and 1" );
    bits.push_back( c == '1' );
  }
  return bits;
}

logic::netlist read_netlist_file( std::string const& path )
{
  std::ifstream in( path );
  if ( !in )
    throw cachesig::error( "cannot open netlist '" + path + "'" );
  return logic::read_netlist( in );
}

int run_compile( global_options const& g, experiment_config const& cfg, std::string const& path )
{
  auto const net = read_netlist_file( path );
  auto const prog = logic::compile( net, cfg.lowering );
  auto const st = logic::stats( prog.net );
  output out( g.out );
  if ( g.format == "json" )
  {
    nlohmann::ordered_json doc;
    doc["tool"] = "cachesig";
    doc["version"] = version_string();
    doc["source"] = std::filesystem::path( path ).filename().string();
    doc["inputs"] = prog.net.inputs().size();
    doc["outputs"] = prog.net.outputs().size();
    doc["gates"] = st.gates;
    doc["nand"] = st.nand;
    doc["not"] = st.not_gates;
    doc["replicate"] = st.replicate;
    doc["max_fanout"] = st.max_fanout;
    doc["scratch_lines"] = prog.plan.pool_size;
    doc["netlist"] = logic::to_text( prog.net );
    out.stream() << doc.dump( 2 ) << "\n";
  }
  else
  {
    out.stream() << "# lowered from " << std::filesystem::path( path ).filename().string() << ": " << st.gates
                 << " gates (" << st.nand << " NAND, " << st.not_gates << " NOT, " << st.replicate
                 << " REPLICATE), " << prog.plan.pool_size << " scratch lines\n";
    logic::write_netlist( out.stream(), prog.net );
  }
  return 0;
}

int run_exec( global_options const& g, experiment_config const& cfg, std::string const& path,
              std::vector<std::string> const& rows_text )
{
  auto const net = read_netlist_file( path );
  auto const prog = logic::compile( net, cfg.lowering );
  auto const width = net.inputs().size();

  std::vector<std::vector<bool>> rows;
  for ( auto const& r : rows_text )
    rows.push_back( parse_bits( r, width ) );
  if ( rows.empty() )
  {
    if ( width > 16 )
      throw cachesig::precondition_error( "exec: more than 16 inputs; pass rows with --inputs" );
    auto const runs = cfg.trials != 0 ? cfg.trials : ( std::uint64_t{ 1 } << width );
    for ( std::uint64_t t = 0; t < runs; ++t )
    {
      std::vector<bool> bits( width );
      auto const row = t % ( std::uint64_t{ 1 } << width );
      for ( std::size_t i = 0; i < width; ++i )
        bits[i] = ( row >> i ) & 1u;
      rows.push_back( std::move( bits ) );
    }
  }

  experiment_result res;
  res.experiment = "exec";
  res.rows.columns = { "trial", "seed", "inputs", "expected", "observed", "match" };
  res.summary.columns = { "runs", "matches", "accuracy", "scratch_lines" };
  std::uint64_t matches = 0;
  for ( std::uint64_t t = 0; t < rows.size(); ++t )
  {
    auto const seed = trial_seed( cfg.seed, t, purpose::noise );
    trial_env env( cfg, seed, cfg.deplen );
    auto const expected = logic::evaluate( net, rows[t] );
    auto const observed = logic::execute( prog, rows[t], env.ctx, env.arena );
    bool const ok = expected == observed;
    matches += ok ? 1u : 0u;
    res.rows.add( t, seed, bit_string( rows[t] ), bit_string( expected ), bit_string( observed ), ok );
  }
  res.summary.add( rows.size(), matches, static_cast<double>( matches ) / static_cast<double>( rows.size() ),
                   prog.plan.pool_size );
  write_result( g, cfg, res );
  return 0;
}

struct emit_options
{
  std::string kind = "inverter";
  std::uint32_t deplen = 5;
  std::uint32_t accesslen = 1;
  std::uint32_t fan_in = 2;
  std::uint64_t stride = default_line_stride;
  std::uint32_t label_base = 100;
  std::string canonical_dir;
};

int run_emit( global_options const& g, emit_options const& o )
{
  if ( !o.canonical_dir.empty() )
  {
    std::filesystem::create_directories( o.canonical_dir );
    for ( auto const& [name, req] : canonical_emissions() )
    {
      auto const file = std::filesystem::path( o.canonical_dir ) / ( name + ".s" );
      std::ofstream out( file, std::ios::binary );
      out << emit_module( { req } );
      std::cerr << file.string() << "\n";
    }
    return 0;
  }

  auto const kind = emit_kind_from_string( o.kind );
  if ( !kind )
    throw cachesig::parse_error( "emit-asm: unknown kind '" + o.kind + "'" );
  emit_request req{ .kind = *kind,
                    .deplen = o.deplen,
                    .accesslen = o.accesslen,
                    .fan_in = o.fan_in,
                    .stride = o.stride,
                    .label_base = o.label_base };
  auto const text = emit_module( { req } );
  auto const problems = check_emission( req, emit( req ) );
  output out( g.out );
  if ( g.format == "json" )
  {
    nlohmann::ordered_json doc;
    doc["tool"] = "cachesig";
    doc["version"] = version_string();
    doc["kind"] = std::string( to_string( req.kind ) );
    doc["symbol"] = symbol_name( req );
    doc["problems"] = problems;
    doc["text"] = text;
    out.stream() << doc.dump( 2 ) << "\n";
  }
  else
    out.stream() << text;
  for ( auto const& p : problems )
    std::cerr << "structural check: " << p << "\n";
  return problems.empty() ? 0 : 1;
}

} // namespace

int main( int argc, char** argv )
{
  CLI::App app{ "Cache-presence logic gadgets, amplifiers and recovery experiments" };
  app.require_subcommand( 0, 1 );
  app.fallthrough();

  global_options g;
  app.add_option( "--config", g.config_path, "INI configuration file" )->check( CLI::ExistingFile );
  app.add_option( "--seed", g.seed, "root seed" );
  app.add_option( "--trials", g.trials, "trials per configuration" );
  app.add_option( "--threads", g.threads, "worker threads (0: all cores)" );
  app.add_option( "--out", g.out, "output file (default: stdout)" );
  app.add_option( "--format", g.format, "output format" )->check( CLI::IsMember( { "csv", "json" } ) );
  app.add_option( "--set", g.assignments, "override, section.key=value" );
  app.add_flag( "--print-config", g.print_config, "print the effective configuration and exit" );
  app.add_flag( "--rows", g.include_rows, "include per-trial rows in JSON output" );

  std::vector<std::uint64_t> iterations, sizes;
  std::vector<double> granularities;

  auto* tt = app.add_subcommand( "truth-tables", "gate accuracy over cycled input rows" );
  auto* sweep = app.add_subcommand( "amp-sweep", "signal strength quartiles per iteration count" );
  sweep->add_option( "--iterations", iterations, "iteration counts" )->delimiter( ',' );
  auto* cons = app.add_subcommand( "amp-consistency", "recovery outcomes per iteration count and timer granularity" );
  cons->add_option( "--iterations", iterations, "iteration counts" )->delimiter( ',' );
  cons->add_option( "--granularities", granularities, "timer granularities in ns" )->delimiter( ',' );
  auto* bs = app.add_subcommand( "binsearch", "single-present-line search accuracy per size" );
  bs->add_option( "--sizes", sizes, "array sizes (powers of two, 4..256)" )->delimiter( ',' );
  auto* ctr = app.add_subcommand( "counter", "present-line counting accuracy per size" );
  ctr->add_option( "--sizes", sizes, "array sizes" )->delimiter( ',' );

  std::string netlist_path;
  auto* comp = app.add_subcommand( "compile", "lower a netlist to NAND/NOT/REPLICATE" );
  comp->add_option( "netlist", netlist_path, "netlist file" )->required()->check( CLI::ExistingFile );
  std::vector<std::string> input_rows;
  auto* exec = app.add_subcommand( "exec", "run a netlist on simulated cachelines" );
  exec->add_option( "netlist", netlist_path, "netlist file" )->required()->check( CLI::ExistingFile );
  exec->add_option( "--inputs", input_rows, "input rows such as 1011 (default: every row)" );

  emit_options eo;
  auto* em = app.add_subcommand( "emit-asm", "emit GNU assembler for one gadget" );
  em->add_option( "--kind", eo.kind, "forced-spec, inverter, replicator, nand, nor, amplifier" );
  em->add_option( "--deplen", eo.deplen, "delay repetitions" );
  em->add_option( "--accesslen", eo.accesslen, "output loads (amplifier) or fan-out (replicator)" );
  em->add_option( "--fan-in", eo.fan_in, "NAND fan-in" );
  em->add_option( "--stride", eo.stride, "bytes between amplifier outputs" );
  em->add_option( "--label-base", eo.label_base, "first local label number" );
  em->add_option( "--canonical", eo.canonical_dir, "write every canonical emission into this directory" );

  CLI11_PARSE( app, argc, argv );

  try
  {
    auto cfg = resolve_config( g );
    if ( !iterations.empty() )
      cfg.iterations = iterations;
    if ( !granularities.empty() )
      cfg.granularities_ns = granularities;
    if ( !sizes.empty() )
      cfg.sizes = sizes;

    if ( tt->parsed() )
      cfg.experiment = experiment_kind::truth_tables;
    else if ( sweep->parsed() )
      cfg.experiment = experiment_kind::amplifier_sweep;
    else if ( cons->parsed() )
      cfg.experiment = experiment_kind::amplifier_consistency;
    else if ( bs->parsed() )
      cfg.experiment = experiment_kind::binary_search;
    else if ( ctr->parsed() )
      cfg.experiment = experiment_kind::counter;
    else if ( em->parsed() )
      cfg.experiment = experiment_kind::emit_asm;
    cfg.validate();

    if ( g.print_config )
    {
      write_config( std::cout, cfg );
      return 0;
    }
    if ( app.get_subcommands().empty() )
    {
      std::cerr << app.help();
      return 2;
    }
    if ( comp->parsed() )
      return run_compile( g, cfg, netlist_path );
    if ( exec->parsed() )
      return run_exec( g, cfg, netlist_path, input_rows );
    if ( em->parsed() )
      return run_emit( g, eo );

    write_result( g, cfg, run_experiment( cfg ) );
    return 0;
  }
  catch ( std::exception const& e )
  {
    std::cerr << "cachesig: " << e.what() << "\n";
    return 2;
  }
}
