#pragma once

#include <stdexcept>
#include <string>

namespace zes {

// Base of every error raised by the engine. The CLI maps subclasses onto
// process exit codes (see tools/zes.cpp).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class BoundsError : public Error {
public:
    using Error::Error;
};

class EmptyMaskError : public Error {
public:
    using Error::Error;
};

class EmptyInputError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// Violated precondition on a value the caller was responsible for
// (e.g. a descriptor that is not unit norm).
class ContractError : public Error {
public:
    using Error::Error;
};

class DegenerateDescriptorError : public Error {
public:
    using Error::Error;
};

// Hard failure of a perception backend (transport, protocol, missing image).
class BackendError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

// Scene generator could not place the requested objects.
class PlacementError : public Error {
public:
    using Error::Error;
};

} // namespace zes
