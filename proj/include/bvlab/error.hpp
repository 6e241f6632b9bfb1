#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace bvlab {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

class ArgumentError : public Error {
public:
    using Error::Error;
};

class InsufficientDataError : public Error {
public:
    using Error::Error;
};

class SymmetryError : public Error {
public:
    SymmetryError(double max_asymmetry)
        : Error("matrix is not symmetric (max asymmetry " + std::to_string(max_asymmetry) + ")"),
          max_asymmetry_(max_asymmetry) {}
    double max_asymmetry() const noexcept { return max_asymmetry_; }

private:
    double max_asymmetry_;
};

class UndefinedCorrelationError : public Error {
public:
    using Error::Error;
};

class TapeError : public Error {
public:
    using Error::Error;
};

/// Raised when training produces a non-finite loss, gradient or parameter.
class DivergenceError : public Error {
public:
    DivergenceError(std::uint64_t iteration, const std::string& what)
        : Error("training diverged at iteration " + std::to_string(iteration) + ": " + what),
          iteration_(iteration) {}
    std::uint64_t iteration() const noexcept { return iteration_; }

private:
    std::uint64_t iteration_;
};

class RankError : public Error {
public:
    RankError(std::size_t requested, std::size_t numerical_rank)
        : Error("requested " + std::to_string(requested) + " components but covariance has numerical rank " +
                std::to_string(numerical_rank)),
          requested_(requested), rank_(numerical_rank) {}
    std::size_t requested() const noexcept { return requested_; }
    std::size_t numerical_rank() const noexcept { return rank_; }

private:
    std::size_t requested_;
    std::size_t rank_;
};

class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

} // namespace bvlab
