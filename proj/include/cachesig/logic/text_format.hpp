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
  \file text_format.hpp
  \brief Line-oriented netlist text, in the style of ISCAS .bench files

      # half adder
      INPUT(a, b)
      OUTPUT(s, c)
      s = XOR(a, b)
      c = AND(a, b)
      a.r0, a.r1 = REPLICATE(a)

  Gates may appear in any order; they are sorted topologically on read.
*/

#pragma once

#include <algorithm>
#include <cctype>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "../errors.hpp"
#include "netlist.hpp"

namespace cachesig::logic
{

namespace detail
{

inline std::string_view trim( std::string_view s )
{
  while ( !s.empty() && std::isspace( static_cast<unsigned char>( s.front() ) ) )
    s.remove_prefix( 1 );
  while ( !s.empty() && std::isspace( static_cast<unsigned char>( s.back() ) ) )
    s.remove_suffix( 1 );
  return s;
}

inline bool valid_name( std::string_view s )
{
  if ( s.empty() )
    return false;
  return std::all_of( s.begin(), s.end(), []( char c ) {
    return std::isalnum( static_cast<unsigned char>( c ) ) || c == '_' || c == '.' || c == '[' || c == ']' || c == '$';
  } );
}

inline std::vector<std::string> split_names( std::string_view list, std::size_t line_no )
{
  std::vector<std::string> out;
  std::size_t start = 0;
  while ( true )
  {
    auto const comma = list.find( ',', start );
    auto const piece = trim( list.substr( start, comma == std::string_view::npos ? std::string_view::npos : comma - start ) );
    if ( !valid_name( piece ) )
      throw parse_error( "line " + std::to_string( line_no ) + ": bad signal name '" + std::string( piece ) + "'" );
    out.emplace_back( piece );
    if ( comma == std::string_view::npos )
      break;
    start = comma + 1;
  }
  return out;
}

/* "KIND(args)" -> (KIND, args) */
inline std::pair<std::string, std::string_view> split_call( std::string_view s, std::size_t line_no )
{
  auto const open = s.find( '(' );
  if ( open == std::string_view::npos || s.back() != ')' )
    throw parse_error( "line " + std::to_string( line_no ) + ": expected KIND(...)" );
  std::string kind( trim( s.substr( 0, open ) ) );
  std::transform( kind.begin(), kind.end(), kind.begin(), []( unsigned char c ) { return std::toupper( c ); } );
  return { kind, s.substr( open + 1, s.size() - open - 2 ) };
}

struct raw_gate
{
  op kind{};
  std::vector<std::string> ins;
  std::vector<std::string> outs;
  std::size_t line_no = 0;
};

} // namespace detail

/*! \brief Parses netlist text. Throws `parse_error` on malformed, undefined,
    doubly defined or cyclic input. */
inline netlist read_netlist( std::istream& in )
{
  std::vector<std::string> input_names, output_names;
  std::vector<detail::raw_gate> raw;
  std::string line;
  std::size_t line_no = 0;
  while ( std::getline( in, line ) )
  {
    ++line_no;
    std::string_view view( line );
    if ( auto const hash = view.find( '#' ); hash != std::string_view::npos )
      view = view.substr( 0, hash );
    view = detail::trim( view );
    if ( view.empty() )
      continue;

    auto const eq = view.find( '=' );
    if ( eq == std::string_view::npos )
    {
      auto [kind, args] = detail::split_call( view, line_no );
      auto names = detail::split_names( args, line_no );
      if ( kind == "INPUT" )
        input_names.insert( input_names.end(), names.begin(), names.end() );
      else if ( kind == "OUTPUT" )
        output_names.insert( output_names.end(), names.begin(), names.end() );
      else
        throw parse_error( "line " + std::to_string( line_no ) + ": expected INPUT(...), OUTPUT(...) or a gate" );
      continue;
    }

    auto [kind, args] = detail::split_call( detail::trim( view.substr( eq + 1 ) ), line_no );
    auto const k = op_from_string( kind );
    if ( !k )
      throw parse_error( "line " + std::to_string( line_no ) + ": unsupported gate kind '" + kind + "'" );
    detail::raw_gate g{ *k, detail::split_names( args, line_no ), detail::split_names( view.substr( 0, eq ), line_no ),
                        line_no };
    try
    {
      netlist::check_arity( g.kind, g.ins.size(), g.outs.size() );
    }
    catch ( precondition_error const& e )
    {
      throw parse_error( "line " + std::to_string( line_no ) + ": " + e.what() );
    }
    raw.push_back( std::move( g ) );
  }

  /* who defines what */
  std::map<std::string, std::ptrdiff_t> definer; /* -1: primary input */
  for ( auto const& n : input_names )
    if ( !definer.emplace( n, -1 ).second )
      throw parse_error( "input '" + n + "' declared twice" );
  for ( std::size_t i = 0; i < raw.size(); ++i )
    for ( auto const& o : raw[i].outs )
      if ( !definer.emplace( o, static_cast<std::ptrdiff_t>( i ) ).second )
        throw parse_error( "line " + std::to_string( raw[i].line_no ) + ": signal '" + o + "' defined twice" );

  /* Kahn's algorithm, ties broken by file order */
  std::vector<std::size_t> pending( raw.size(), 0 );
  std::vector<std::vector<std::size_t>> users( raw.size() );
  for ( std::size_t i = 0; i < raw.size(); ++i )
    for ( auto const& n : raw[i].ins )
    {
      auto it = definer.find( n );
      if ( it == definer.end() )
        throw parse_error( "line " + std::to_string( raw[i].line_no ) + ": signal '" + n + "' is never defined" );
      if ( it->second >= 0 )
      {
        ++pending[i];
        users[static_cast<std::size_t>( it->second )].push_back( i );
      }
    }
  std::vector<std::size_t> order, ready;
  for ( std::size_t i = raw.size(); i-- > 0; )
    if ( pending[i] == 0 )
      ready.push_back( i );
  while ( !ready.empty() )
  {
    auto const i = ready.back();
    ready.pop_back();
    order.push_back( i );
    std::vector<std::size_t> released;
    for ( auto u : users[i] )
      if ( --pending[u] == 0 )
        released.push_back( u );
    ready.insert( ready.end(), released.begin(), released.end() );
    std::sort( ready.begin(), ready.end(), std::greater<>() );
  }
  if ( order.size() != raw.size() )
    throw parse_error( "netlist is cyclic" );

  netlist net;
  std::map<std::string, signal> sig;
  for ( auto const& n : input_names )
    sig[n] = net.add_input( n );
  for ( auto i : order )
  {
    auto const& g = raw[i];
    std::vector<signal> ins, outs;
    for ( auto const& n : g.ins )
      ins.push_back( sig.at( n ) );
    for ( auto const& n : g.outs )
      outs.push_back( sig[n] = net.declare( n ) );
    net.add_gate_with_outputs( g.kind, std::move( ins ), std::move( outs ) );
  }
  for ( auto const& n : output_names )
  {
    auto it = sig.find( n );
    if ( it == sig.end() )
      throw parse_error( "output '" + n + "' is never defined" );
    net.add_output( it->second );
  }
  return net;
}

inline netlist parse_netlist( std::string const& text )
{
  std::istringstream in( text );
  return read_netlist( in );
}

inline void write_netlist( std::ostream& out, netlist const& net )
{
  auto list = [&]( std::vector<signal> const& sigs ) {
    for ( std::size_t i = 0; i < sigs.size(); ++i )
      out << ( i ? ", " : "" ) << net.name( sigs[i] );
  };
  out << "INPUT(";
  list( net.inputs() );
  out << ")\nOUTPUT(";
  list( net.outputs() );
  out << ")\n";
  for ( auto const& g : net.gates() )
  {
    list( g.outputs );
    out << " = " << to_string( g.kind ) << "(";
    list( g.inputs );
    out << ")\n";
  }
}

inline std::string to_text( netlist const& net )
{
  std::ostringstream out;
  write_netlist( out, net );
  return out.str();
}

} // namespace cachesig::logic
