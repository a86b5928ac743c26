#pragma once

#include <stdexcept>
#include <string>

namespace charrnet {

// Length/shape contract violated (non-power-of-two transform, short signal, ...).
class SizeError : public std::length_error {
public:
    explicit SizeError(const std::string& what) : std::length_error(what) {}
};

// Value out of its documented domain.
class ArgumentError : public std::invalid_argument {
public:
    explicit ArgumentError(const std::string& what) : std::invalid_argument(what) {}
};

// Invalid or inconsistent configuration (unknown key, bad tag, class-count mismatch).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Filesystem or serialization failure.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace charrnet
