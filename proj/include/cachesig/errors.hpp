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
  \file errors.hpp
  \brief Exception hierarchy shared by every cachesig module
*/

#pragma once

#include <stdexcept>
#include <string>

namespace cachesig
{

/*! \brief Base class of every error raised by the library. */
class error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/*! \brief A line layout violates the stride/alignment rules. */
class layout_error : public error
{
public:
  using error::error;
};

/*! \brief A line was used with a cache state it was never registered with. */
class unknown_line_error : public error
{
public:
  using error::error;
};

/*! \brief An output line coincides with an input line, or outputs repeat. */
class aliasing_error : public error
{
public:
  using error::error;
};

/*! \brief A gadget or algorithm precondition does not hold. */
class precondition_error : public error
{
public:
  using error::error;
};

/*! \brief Malformed netlist, config file or command-line value. */
class parse_error : public error
{
public:
  using error::error;
};

} // namespace cachesig
