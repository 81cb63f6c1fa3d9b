// Copyright (C) 2026 paro authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace paro {

// Exit-code contract shared by the library and the CLI:
//   2 = configuration / usage error, 3 = file format or I/O error,
//   4 = numeric invariant violation.
class Error : public std::runtime_error {
public:
    Error(int exit_code, const std::string& what) : std::runtime_error(what), exit_code_(exit_code) {}
    int exit_code() const noexcept { return exit_code_; }

private:
    int exit_code_;
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& w) : Error(2, w) {}
};
struct ShapeError : Error {
    explicit ShapeError(const std::string& w) : Error(2, w) {}
};
struct InputError : Error {
    explicit InputError(const std::string& w) : Error(2, w) {}
};
struct FormatError : Error {
    explicit FormatError(const std::string& w) : Error(3, w) {}
};
struct IoError : Error {
    explicit IoError(const std::string& w) : Error(3, w) {}
};
struct InvariantError : Error {
    explicit InvariantError(const std::string& w) : Error(4, w) {}
};

} // namespace paro
