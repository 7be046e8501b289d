#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace hhosplit {

/// Root of every exception thrown by the library.
class error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

class parse_error : public error
{
public:
    parse_error(const std::string& what, std::size_t line)
        : error("line " + std::to_string(line) + ": " + what), line_(line)
    {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class topology_error : public error { using error::error; };
class geometry_error : public error { using error::error; };
class index_error : public error { using error::error; };
class config_error : public error { using error::error; };
class conditioning_error : public error { using error::error; };

/// Raised when a matrix expected to be SPD fails to factor.
class not_spd_error : public error { using error::error; };

class breakdown_error : public error { using error::error; };

/// Iterative solver ran out of iterations. Carries the relative residual history.
class convergence_error : public error
{
public:
    convergence_error(const std::string& what, std::vector<double> history)
        : error(what), history_(std::move(history))
    {}

    const std::vector<double>& history() const noexcept { return history_; }

private:
    std::vector<double> history_;
};

} // namespace hhosplit
