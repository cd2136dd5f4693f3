#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace rotnum {

/// Base of every computational error raised by the library. The CLI maps
/// these to exit code 1.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t position)
        : Error(what + " at position " + std::to_string(position)), position_(position) {}

    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

class DomainError : public Error {
public:
    DomainError(const std::string& what, std::size_t component)
        : Error(what + " in component " + std::to_string(component + 1)), component_(component) {}

    /// Zero-based index of the offending field component.
    std::size_t component() const noexcept { return component_; }

private:
    std::size_t component_;
};

class FrameError : public Error {
public:
    using Error::Error;
};

class IntegrationError : public Error {
public:
    using Error::Error;
};

class OrbitError : public Error {
public:
    using Error::Error;
};

class ClassificationError : public Error {
public:
    using Error::Error;
};

class PreconditionError : public Error {
public:
    using Error::Error;
};

class SceneError : public Error {
public:
    using Error::Error;
};

class GraphError : public Error {
public:
    GraphError(const std::string& what, std::vector<std::string> cycle)
        : Error(what), cycle_(std::move(cycle)) {}

    /// Labels along one offending cycle, first label repeated at the end.
    const std::vector<std::string>& cycle() const noexcept { return cycle_; }

private:
    std::vector<std::string> cycle_;
};

}  // namespace rotnum
