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
  \file netlist.hpp
  \brief Combinational netlists over named signals

  Gates are kept in topological program order. `REPLICATE` copies its input
  unchanged to every output; it is the only gate with several outputs.
*/

#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "../errors.hpp"

namespace cachesig::logic
{

using signal = std::uint32_t;

enum class op
{
  and_gate,
  or_gate,
  xor_gate,
  not_gate,
  nand_gate,
  nor_gate,
  replicate
};

inline std::string_view to_string( op k )
{
  switch ( k )
  {
  case op::and_gate:
    return "AND";
  case op::or_gate:
    return "OR";
  case op::xor_gate:
    return "XOR";
  case op::not_gate:
    return "NOT";
  case op::nand_gate:
    return "NAND";
  case op::nor_gate:
    return "NOR";
  case op::replicate:
    return "REPLICATE";
  }
  return "?";
}

inline std::optional<op> op_from_string( std::string_view s )
{
  for ( auto k : { op::and_gate, op::or_gate, op::xor_gate, op::not_gate, op::nand_gate, op::nor_gate, op::replicate } )
    if ( to_string( k ) == s )
      return k;
  return std::nullopt;
}

struct gate
{
  op kind{};
  std::vector<signal> inputs;
  std::vector<signal> outputs;
};

class netlist
{
public:
  signal add_input( std::string_view name )
  {
    auto const s = new_signal( name );
    inputs_.push_back( s );
    defined_[s] = 1;
    return s;
  }

  /*! \brief Appends a single-output gate; returns its output signal. */
  signal add_gate( op kind, std::vector<signal> ins, std::string_view name = {} )
  {
    if ( kind == op::replicate )
      throw precondition_error( "netlist: use add_replicate for REPLICATE gates" );
    check_arity( kind, ins.size(), 1 );
    check_defined( ins );
    auto const out = new_signal( name.empty() ? std::string_view( "n" ) : name );
    gates_.push_back( { kind, std::move( ins ), { out } } );
    defined_[out] = 1;
    return out;
  }

  std::vector<signal> add_replicate( signal src, std::size_t copies, std::string_view name = {} )
  {
    check_arity( op::replicate, 1, copies );
    check_defined( { src } );
    std::string const stem = std::string( name.empty() ? names_.at( src ) : std::string( name ) );
    std::vector<signal> outs;
    outs.reserve( copies );
    for ( std::size_t i = 0; i < copies; ++i )
    {
      outs.push_back( new_signal( stem + ".r" + std::to_string( i ) ) );
      defined_[outs.back()] = 1;
    }
    gates_.push_back( { op::replicate, { src }, outs } );
    return outs;
  }

  /*! \brief Appends a gate whose outputs were created with `declare`. */
  void add_gate_with_outputs( op kind, std::vector<signal> ins, std::vector<signal> outs )
  {
    check_arity( kind, ins.size(), outs.size() );
    check_defined( ins );
    for ( auto o : outs )
    {
      if ( o >= names_.size() || defined_[o] )
        throw precondition_error( "netlist: signal '" + name( o ) + "' defined twice" );
      defined_[o] = 1;
    }
    gates_.push_back( { kind, std::move( ins ), std::move( outs ) } );
  }

  /*! \brief Creates a named signal without defining it. */
  signal declare( std::string_view name ) { return new_signal( name ); }

  void add_output( signal s )
  {
    check_defined( { s } );
    outputs_.push_back( s );
  }

  std::vector<signal> const& inputs() const noexcept { return inputs_; }
  std::vector<signal> const& outputs() const noexcept { return outputs_; }
  std::vector<gate> const& gates() const noexcept { return gates_; }
  std::size_t num_signals() const noexcept { return names_.size(); }
  std::string const& name( signal s ) const { return names_.at( s ); }

  std::optional<signal> find( std::string_view name ) const
  {
    auto it = by_name_.find( std::string( name ) );
    if ( it == by_name_.end() )
      return std::nullopt;
    return it->second;
  }

  bool is_input( signal s ) const
  {
    for ( auto i : inputs_ )
      if ( i == s )
        return true;
    return false;
  }

  static void check_arity( op kind, std::size_t fan_in, std::size_t fan_out )
  {
    bool ok = false;
    switch ( kind )
    {
    case op::not_gate:
      ok = fan_in == 1 && fan_out == 1;
      break;
    case op::replicate:
      ok = fan_in == 1 && fan_out >= 1;
      break;
    default:
      ok = fan_in >= 2 && fan_out == 1;
      break;
    }
    if ( !ok )
      throw precondition_error( "netlist: " + std::string( to_string( kind ) ) + " cannot take " +
                                std::to_string( fan_in ) + " inputs and " + std::to_string( fan_out ) + " outputs" );
  }

private:
  signal new_signal( std::string_view wanted )
  {
    std::string n( wanted );
    if ( by_name_.count( n ) )
    {
      for ( std::size_t k = 1;; ++k )
      {
        auto candidate = n + "_" + std::to_string( k );
        if ( !by_name_.count( candidate ) )
        {
          n = std::move( candidate );
          break;
        }
      }
    }
    auto const s = static_cast<signal>( names_.size() );
    by_name_.emplace( n, s );
    names_.push_back( std::move( n ) );
    defined_.push_back( 0 );
    return s;
  }

  void check_defined( std::vector<signal> const& sigs ) const
  {
    for ( auto s : sigs )
      if ( s >= names_.size() || !defined_[s] )
        throw precondition_error( "netlist: signal used before it is defined" );
  }

  std::vector<std::string> names_;
  std::unordered_map<std::string, signal> by_name_;
  std::vector<std::uint8_t> defined_;
  std::vector<signal> inputs_;
  std::vector<signal> outputs_;
  std::vector<gate> gates_;
};

/*! \brief Plain boolean evaluation of any netlist. */
inline std::vector<bool> evaluate( netlist const& net, std::vector<bool> const& assignment )
{
  if ( assignment.size() != net.inputs().size() )
    throw precondition_error( "evaluate: expected " + std::to_string( net.inputs().size() ) + " input bits" );
  std::vector<std::uint8_t> value( net.num_signals(), 0 );
  for ( std::size_t i = 0; i < assignment.size(); ++i )
    value[net.inputs()[i]] = assignment[i] ? 1 : 0;

  for ( auto const& g : net.gates() )
  {
    auto all = [&] { for ( auto s : g.inputs ) if ( !value[s] ) return false; return true; };
    auto any = [&] { for ( auto s : g.inputs ) if ( value[s] ) return true; return false; };
    auto parity = [&] { std::uint8_t p = 0; for ( auto s : g.inputs ) p ^= value[s]; return p != 0; };
    bool r = false;
    switch ( g.kind )
    {
    case op::and_gate:
      r = all();
      break;
    case op::nand_gate:
      r = !all();
      break;
    case op::or_gate:
      r = any();
      break;
    case op::nor_gate:
      r = !any();
      break;
    case op::xor_gate:
      r = parity();
      break;
    case op::not_gate:
      r = !value[g.inputs[0]];
      break;
    case op::replicate:
      r = value[g.inputs[0]] != 0;
      break;
    }
    for ( auto o : g.outputs )
      value[o] = r ? 1 : 0;
  }

  std::vector<bool> out;
  out.reserve( net.outputs().size() );
  for ( auto s : net.outputs() )
    out.push_back( value[s] != 0 );
  return out;
}

/*! \brief Times each signal is read: once per gate input, once per output entry. */
inline std::vector<std::uint32_t> use_counts( netlist const& net )
{
  std::vector<std::uint32_t> uses( net.num_signals(), 0 );
  for ( auto const& g : net.gates() )
    for ( auto s : g.inputs )
      ++uses[s];
  for ( auto s : net.outputs() )
    ++uses[s];
  return uses;
}

/*! \brief Signals that violate the single-use discipline. */
inline std::vector<signal> multiply_used( netlist const& net )
{
  std::vector<signal> bad;
  auto const uses = use_counts( net );
  for ( signal s = 0; s < uses.size(); ++s )
    if ( uses[s] > 1 )
      bad.push_back( s );
  return bad;
}

struct netlist_stats
{
  std::size_t gates = 0;
  std::size_t nand = 0;
  std::size_t not_gates = 0;
  std::size_t replicate = 0;
  std::size_t other = 0;
  std::size_t max_fanout = 0;
};

inline netlist_stats stats( netlist const& net )
{
  netlist_stats st;
  for ( auto const& g : net.gates() )
  {
    ++st.gates;
    switch ( g.kind )
    {
    case op::nand_gate:
      ++st.nand;
      break;
    case op::not_gate:
      ++st.not_gates;
      break;
    case op::replicate:
      ++st.replicate;
      st.max_fanout = std::max( st.max_fanout, g.outputs.size() );
      break;
    default:
      ++st.other;
      break;
    }
  }
  return st;
}

} // namespace cachesig::logic
