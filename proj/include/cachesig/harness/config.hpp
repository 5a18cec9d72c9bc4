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
  \file config.hpp
  \brief Experiment configuration: INI file, environment and command line

  Precedence, lowest first: built-in defaults, the INI file, environment
  variables `CACHESIG_<SECTION>_<KEY>`, then `section.key=value` overrides
  from the command line. Every tunable has exactly one `section.key`.
*/

#pragma once

#include <array>
#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "../amplifier.hpp"
#include "../errors.hpp"
#include "../logic/lower.hpp"
#include "../speculation.hpp"
#include "../timing.hpp"

namespace cachesig::harness
{

enum class experiment_kind
{
  truth_tables,
  amplifier_sweep,
  amplifier_consistency,
  binary_search,
  counter,
  emit_asm
};

inline std::string_view to_string( experiment_kind k )
{
  switch ( k )
  {
  case experiment_kind::truth_tables:
    return "truth-tables";
  case experiment_kind::amplifier_sweep:
    return "amp-sweep";
  case experiment_kind::amplifier_consistency:
    return "amp-consistency";
  case experiment_kind::binary_search:
    return "binsearch";
  case experiment_kind::counter:
    return "counter";
  case experiment_kind::emit_asm:
    return "emit-asm";
  }
  return "?";
}

inline std::optional<experiment_kind> experiment_from_string( std::string_view s )
{
  for ( auto k : { experiment_kind::truth_tables, experiment_kind::amplifier_sweep,
                   experiment_kind::amplifier_consistency, experiment_kind::binary_search, experiment_kind::counter,
                   experiment_kind::emit_asm } )
    if ( to_string( k ) == s )
      return k;
  return std::nullopt;
}

inline std::string_view to_string( amplifier_evaluation e )
{
  switch ( e )
  {
  case amplifier_evaluation::automatic:
    return "auto";
  case amplifier_evaluation::simulate:
    return "simulate";
  case amplifier_evaluation::analytic:
    return "analytic";
  }
  return "?";
}

struct experiment_config
{
  /* [experiment] */
  experiment_kind experiment = experiment_kind::truth_tables;
  std::uint64_t trials = 0; /* 0: the experiment's own default */
  std::uint64_t seed = 1;
  std::uint32_t threads = 0; /* 0: one per hardware thread */
  std::vector<std::uint64_t> sizes;
  std::vector<std::uint64_t> iterations;
  std::vector<double> granularities_ns;
  bool check_precondition = false;

  latency_model latency{};
  timer_model timer{};
  noise_model noise{};
  amplifier_config amplifier{};

  /* [engine] */
  std::uint32_t deplen = 5;
  engine_limits limits{};
  logic::lower_params lowering{};

  /* [cache] */
  std::uint64_t capacity = 0;
  std::uint64_t stride = default_line_stride;
  std::uint64_t base = 0;

  void validate() const
  {
    latency.validate();
    timer.validate();
    noise.validate();
    amplifier.validate();
    if ( stride < min_line_stride )
      throw precondition_error( "config: cache.stride must be at least " + std::to_string( min_line_stride ) );
    if ( deplen > limits.max_deplen )
      throw precondition_error( "config: engine.deplen exceeds engine.max_deplen" );
    for ( auto g : granularities_ns )
      if ( !( g > 0.0 ) )
        throw precondition_error( "config: granularities must be positive" );
  }
};

/* ---------------------------------------------------------- value codecs */

namespace detail
{

inline std::string format_double( double v )
{
  std::array<char, 64> buf{};
  auto const [end, ec] = std::to_chars( buf.data(), buf.data() + buf.size(), v );
  if ( ec != std::errc{} )
    throw error( "format_double: conversion failed" );
  return std::string( buf.data(), end );
}

inline std::string_view trim_ws( std::string_view s )
{
  while ( !s.empty() && ( s.front() == ' ' || s.front() == '\t' ) )
    s.remove_prefix( 1 );
  while ( !s.empty() && ( s.back() == ' ' || s.back() == '\t' || s.back() == '\r' ) )
    s.remove_suffix( 1 );
  return s;
}

template<typename T>
T parse_number( std::string_view text, std::string_view key )
{
  auto s = trim_ws( text );
  T value{};
  auto const [ptr, ec] = std::from_chars( s.data(), s.data() + s.size(), value );
  if ( ec != std::errc{} || ptr != s.data() + s.size() || s.empty() )
    throw parse_error( "config: bad value '" + std::string( text ) + "' for " + std::string( key ) );
  return value;
}

inline bool parse_bool( std::string_view text, std::string_view key )
{
  auto const s = trim_ws( text );
  if ( s == "true" || s == "1" || s == "yes" || s == "on" )
    return true;
  if ( s == "false" || s == "0" || s == "no" || s == "off" )
    return false;
  throw parse_error( "config: bad boolean '" + std::string( text ) + "' for " + std::string( key ) );
}

template<typename T>
std::vector<T> parse_list( std::string_view text, std::string_view key )
{
  std::vector<T> out;
  auto s = trim_ws( text );
  while ( !s.empty() )
  {
    auto const comma = s.find( ',' );
    out.push_back( parse_number<T>( s.substr( 0, comma ), key ) );
    if ( comma == std::string_view::npos )
      break;
    s = s.substr( comma + 1 );
  }
  return out;
}

template<typename T>
std::string format_list( std::vector<T> const& v )
{
  std::string out;
  for ( std::size_t i = 0; i < v.size(); ++i )
  {
    if ( i )
      out += ",";
    if constexpr ( std::is_floating_point_v<T> )
      out += format_double( v[i] );
    else
      out += std::to_string( v[i] );
  }
  return out;
}

} // namespace detail

/*! \brief One addressable tunable. */
struct config_key
{
  std::string section;
  std::string key;
  std::function<std::string( experiment_config const& )> get;
  std::function<void( experiment_config&, std::string_view )> set;

  std::string dotted() const { return section + "." + key; }
  std::string env_name() const
  {
    std::string n = "CACHESIG_" + section + "_" + key;
    for ( auto& c : n )
      c = static_cast<char>( std::toupper( static_cast<unsigned char>( c ) ) );
    return n;
  }
};

namespace detail
{

template<typename T, typename Member>
config_key number_key( std::string section, std::string key, Member member )
{
  auto dotted = section + "." + key;
  return { std::move( section ), std::move( key ),
           [member]( experiment_config const& c ) {
             if constexpr ( std::is_floating_point_v<T> )
               return format_double( member( c ) );
             else
               return std::to_string( member( c ) );
           },
           [member, dotted]( experiment_config& c, std::string_view v ) { member( c ) = parse_number<T>( v, dotted ); } };
}

template<typename Member>
config_key bool_key( std::string section, std::string key, Member member )
{
  auto dotted = section + "." + key;
  return { std::move( section ), std::move( key ),
           [member]( experiment_config const& c ) {
             return std::string( member( c ) ? "true" : "false" );
           },
           [member, dotted]( experiment_config& c, std::string_view v ) { member( c ) = parse_bool( v, dotted ); } };
}

template<typename T, typename Member>
config_key list_key( std::string section, std::string key, Member member )
{
  auto dotted = section + "." + key;
  return { std::move( section ), std::move( key ),
           [member]( experiment_config const& c ) { return format_list( member( c ) ); },
           [member, dotted]( experiment_config& c, std::string_view v ) { member( c ) = parse_list<T>( v, dotted ); } };
}

} // namespace detail

/*! \brief Every tunable, in file order. */
inline std::vector<config_key> const& config_keys()
{
  using C = experiment_config;
  using namespace detail;
  static std::vector<config_key> const keys = [] {
    std::vector<config_key> k;
    k.push_back( { "experiment", "name", []( C const& c ) { return std::string( to_string( c.experiment ) ); },
                   []( C& c, std::string_view v ) {
                     auto e = experiment_from_string( trim_ws( v ) );
                     if ( !e )
                       throw parse_error( "config: unknown experiment '" + std::string( v ) + "'" );
                     c.experiment = *e;
                   } } );
    k.push_back( number_key<std::uint64_t>( "experiment", "trials", []( auto& c ) -> auto& { return c.trials; } ) );
    k.push_back( number_key<std::uint64_t>( "experiment", "seed", []( auto& c ) -> auto& { return c.seed; } ) );
    k.push_back( number_key<std::uint32_t>( "experiment", "threads", []( auto& c ) -> auto& { return c.threads; } ) );
    k.push_back( list_key<std::uint64_t>( "experiment", "sizes", []( auto& c ) -> auto& { return c.sizes; } ) );
    k.push_back( list_key<std::uint64_t>( "experiment", "iterations", []( auto& c ) -> auto& { return c.iterations; } ) );
    k.push_back(
        list_key<double>( "experiment", "granularities_ns", []( auto& c ) -> auto& { return c.granularities_ns; } ) );
    k.push_back( bool_key( "experiment", "check_precondition", []( auto& c ) -> auto& { return c.check_precondition; } ) );

    k.push_back( number_key<double>( "latency", "hit_ns", []( auto& c ) -> auto& { return c.latency.hit_ns; } ) );
    k.push_back( number_key<double>( "latency", "miss_ns", []( auto& c ) -> auto& { return c.latency.miss_ns; } ) );
    k.push_back( number_key<double>( "latency", "delay_op_ns", []( auto& c ) -> auto& { return c.latency.delay_op_ns; } ) );
    k.push_back( number_key<double>( "latency", "redirect_ns", []( auto& c ) -> auto& { return c.latency.redirect_ns; } ) );
    k.push_back(
        number_key<double>( "latency", "jitter_sigma_ns", []( auto& c ) -> auto& { return c.latency.jitter_sigma_ns; } ) );

    k.push_back( number_key<double>( "timer", "granularity_ns", []( auto& c ) -> auto& { return c.timer.granularity_ns; } ) );
    k.push_back( number_key<double>( "timer", "jitter_ns", []( auto& c ) -> auto& { return c.timer.jitter_ns; } ) );

    k.push_back(
        number_key<double>( "noise", "gadget_flip_prob", []( auto& c ) -> auto& { return c.noise.gadget_flip_prob; } ) );
    k.push_back( number_key<double>( "noise", "corruption_prob_per_iteration",
                                     []( auto& c ) -> auto& { return c.noise.corruption_prob_per_iteration; } ) );
    k.push_back( number_key<std::uint64_t>( "noise", "seed", []( auto& c ) -> auto& { return c.noise.seed; } ) );

    k.push_back( number_key<std::uint32_t>( "amplifier", "deplen", []( auto& c ) -> auto& { return c.amplifier.deplen; } ) );
    k.push_back(
        number_key<std::uint32_t>( "amplifier", "accesslen", []( auto& c ) -> auto& { return c.amplifier.accesslen; } ) );
    k.push_back( number_key<std::uint64_t>( "amplifier", "stride", []( auto& c ) -> auto& { return c.amplifier.stride; } ) );
    k.push_back(
        number_key<std::uint64_t>( "amplifier", "iterations", []( auto& c ) -> auto& { return c.amplifier.iterations; } ) );
    k.push_back( { "amplifier", "evaluation", []( C const& c ) { return std::string( to_string( c.amplifier.evaluation ) ); },
                   []( C& c, std::string_view v ) {
                     auto const s = trim_ws( v );
                     if ( s == "auto" )
                       c.amplifier.evaluation = amplifier_evaluation::automatic;
                     else if ( s == "simulate" )
                       c.amplifier.evaluation = amplifier_evaluation::simulate;
                     else if ( s == "analytic" )
                       c.amplifier.evaluation = amplifier_evaluation::analytic;
                     else
                       throw parse_error( "config: amplifier.evaluation must be auto, simulate or analytic" );
                   } } );
    k.push_back( bool_key( "amplifier", "enable_multi_stage",
                           []( auto& c ) -> auto& { return c.amplifier.enable_multi_stage; } ) );

    k.push_back( number_key<std::uint32_t>( "engine", "deplen", []( auto& c ) -> auto& { return c.deplen; } ) );
    k.push_back( number_key<std::uint32_t>( "engine", "max_deplen", []( auto& c ) -> auto& { return c.limits.max_deplen; } ) );
    k.push_back(
        number_key<std::uint32_t>( "engine", "max_accesslen", []( auto& c ) -> auto& { return c.limits.max_accesslen; } ) );
    k.push_back(
        number_key<std::uint32_t>( "engine", "max_fanout", []( auto& c ) -> auto& { return c.lowering.max_fanout; } ) );
    k.push_back( number_key<std::uint32_t>( "engine", "max_nand_fan_in",
                                            []( auto& c ) -> auto& { return c.lowering.max_nand_fan_in; } ) );

    k.push_back( number_key<std::uint64_t>( "cache", "capacity", []( auto& c ) -> auto& { return c.capacity; } ) );
    k.push_back( number_key<std::uint64_t>( "cache", "stride", []( auto& c ) -> auto& { return c.stride; } ) );
    k.push_back( number_key<std::uint64_t>( "cache", "base", []( auto& c ) -> auto& { return c.base; } ) );
    return k;
  }();
  return keys;
}

inline config_key const& find_key( std::string_view dotted )
{
  for ( auto const& k : config_keys() )
    if ( k.dotted() == dotted )
      return k;
  throw parse_error( "config: unknown key '" + std::string( dotted ) + "'" );
}

/*! \brief Applies one `section.key=value` assignment. */
inline void apply_assignment( experiment_config& cfg, std::string_view assignment )
{
  auto const eq = assignment.find( '=' );
  if ( eq == std::string_view::npos )
    throw parse_error( "config: expected section.key=value, got '" + std::string( assignment ) + "'" );
  find_key( detail::trim_ws( assignment.substr( 0, eq ) ) ).set( cfg, assignment.substr( eq + 1 ) );
}

/*! \brief Reads INI text over `cfg`. Unknown sections or keys are errors. */
inline void read_config( std::istream& in, experiment_config& cfg )
{
  boost::property_tree::ptree tree;
  try
  {
    boost::property_tree::ini_parser::read_ini( in, tree );
  }
  catch ( boost::property_tree::ini_parser_error const& e )
  {
    throw parse_error( std::string( "config: " ) + e.what() );
  }
  for ( auto const& [section, body] : tree )
  {
    if ( body.empty() && !body.data().empty() )
      throw parse_error( "config: key '" + section + "' outside of a section" );
    for ( auto const& [key, value] : body )
      find_key( section + "." + key ).set( cfg, value.data() );
  }
}

inline void load_config_file( std::string const& path, experiment_config& cfg )
{
  std::ifstream in( path );
  if ( !in )
    throw error( "config: cannot open '" + path + "'" );
  read_config( in, cfg );
}

/*! \brief Applies every `CACHESIG_<SECTION>_<KEY>` found by `lookup` (getenv by default). */
inline void apply_environment( experiment_config& cfg,
                               std::function<char const*( char const* )> const& lookup = &std::getenv )
{
  for ( auto const& k : config_keys() )
    if ( auto const* v = lookup( k.env_name().c_str() ) )
      k.set( cfg, v );
}

/*! \brief Writes `cfg` as INI; reading it back yields an identical config. */
inline void write_config( std::ostream& out, experiment_config const& cfg )
{
  std::string section;
  for ( auto const& k : config_keys() )
  {
    if ( k.section != section )
    {
      out << ( section.empty() ? "" : "\n" ) << "[" << k.section << "]\n";
      section = k.section;
    }
    out << k.key << " = " << k.get( cfg ) << "\n";
  }
}

inline std::string to_ini( experiment_config const& cfg )
{
  std::ostringstream out;
  write_config( out, cfg );
  return out.str();
}

/*! \brief Flat `section.key -> value` view, in file order. */
inline std::vector<std::pair<std::string, std::string>> flatten( experiment_config const& cfg )
{
  std::vector<std::pair<std::string, std::string>> out;
  for ( auto const& k : config_keys() )
    out.emplace_back( k.dotted(), k.get( cfg ) );
  return out;
}

} // namespace cachesig::harness
