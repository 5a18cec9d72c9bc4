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
  \file table.hpp
  \brief Result tables and their CSV / JSON serializations

  Cells are stored as text, formatted once when a row is added, so the
  same run always serializes to the same bytes.
*/

#pragma once

#include <cstdint>
#include <ostream>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include <nlohmann/json.hpp>

#include "../errors.hpp"
#include "config.hpp"

#ifndef CACHESIG_VERSION
#define CACHESIG_VERSION "unknown"
#endif

namespace cachesig::harness
{

inline std::string version_string() { return CACHESIG_VERSION; }

/*! \brief Text for one cell; doubles use the shortest round-trip form. */
template<typename T>
std::string cell( T const& v )
{
  if constexpr ( std::is_same_v<T, bool> )
    return v ? "1" : "0";
  else if constexpr ( std::is_floating_point_v<T> )
    return detail::format_double( static_cast<double>( v ) );
  else if constexpr ( std::is_integral_v<T> )
    return std::to_string( v );
  else
    return std::string( v );
}

struct result_table
{
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  template<typename... Ts>
  void add( Ts const&... values )
  {
    if ( sizeof...( Ts ) != columns.size() )
      throw precondition_error( "result_table: row width does not match the header" );
    rows.push_back( { cell( values )... } );
  }

  void append( result_table const& other )
  {
    if ( other.columns != columns )
      throw precondition_error( "result_table: cannot append a table with different columns" );
    rows.insert( rows.end(), other.rows.begin(), other.rows.end() );
  }

  std::size_t column( std::string const& name ) const
  {
    for ( std::size_t i = 0; i < columns.size(); ++i )
      if ( columns[i] == name )
        return i;
    throw precondition_error( "result_table: no column '" + name + "'" );
  }
};

/*! \brief Per-trial rows plus a per-configuration summary. */
struct experiment_result
{
  std::string experiment;
  result_table rows;
  result_table summary;
};

namespace detail
{

inline std::string csv_field( std::string const& s )
{
  if ( s.find_first_of( ",\"\n" ) == std::string::npos )
    return s;
  std::string q = "\"";
  for ( char c : s )
  {
    if ( c == '"' )
      q += '"';
    q += c;
  }
  return q + "\"";
}

/* numbers stay numbers in JSON */
inline nlohmann::ordered_json json_cell( std::string const& s )
{
  if ( s.empty() )
    return s;
  char* end = nullptr;
  if ( s.find_first_of( ".eEn" ) == std::string::npos )
  {
    auto const v = std::strtoll( s.c_str(), &end, 10 );
    if ( end && *end == '\0' )
      return v;
  }
  auto const v = std::strtod( s.c_str(), &end );
  if ( end && *end == '\0' && s != "nan" && s != "inf" && s != "-inf" )
    return v;
  return s;
}

} // namespace detail

inline void write_csv( std::ostream& out, result_table const& t )
{
  for ( std::size_t i = 0; i < t.columns.size(); ++i )
    out << ( i ? "," : "" ) << detail::csv_field( t.columns[i] );
  out << "\n";
  for ( auto const& r : t.rows )
  {
    for ( std::size_t i = 0; i < r.size(); ++i )
      out << ( i ? "," : "" ) << detail::csv_field( r[i] );
    out << "\n";
  }
}

inline nlohmann::ordered_json to_json( result_table const& t )
{
  auto arr = nlohmann::ordered_json::array();
  for ( auto const& r : t.rows )
  {
    nlohmann::ordered_json obj = nlohmann::ordered_json::object();
    for ( std::size_t i = 0; i < r.size(); ++i )
      obj[t.columns[i]] = detail::json_cell( r[i] );
    arr.push_back( std::move( obj ) );
  }
  return arr;
}

/*! \brief Run summary: version, config echo, summary table and row count.

  The echo leaves out the thread count so that output bytes do not depend
  on the machine.
*/
inline nlohmann::ordered_json to_json( experiment_result const& res, experiment_config const& cfg,
                                       bool include_rows = false )
{
  nlohmann::ordered_json doc;
  doc["tool"] = "cachesig";
  doc["version"] = version_string();
  doc["experiment"] = res.experiment;
  nlohmann::ordered_json conf = nlohmann::ordered_json::object();
  for ( auto const& [k, v] : flatten( cfg ) )
    if ( k != "experiment.threads" ) /* results never depend on it */
      conf[k] = v;
  doc["config"] = std::move( conf );
  doc["row_count"] = res.rows.rows.size();
  doc["summary"] = to_json( res.summary );
  if ( include_rows )
    doc["rows"] = to_json( res.rows );
  return doc;
}

inline void write_json( std::ostream& out, experiment_result const& res, experiment_config const& cfg,
                        bool include_rows = false )
{
  out << to_json( res, cfg, include_rows ).dump( 2 ) << "\n";
}

} // namespace cachesig::harness
