#pragma once

#include <stdexcept>
#include <string>

namespace geomsde {

// Log/transport requested across or too close to the cut locus.
class CutLocusError : public std::runtime_error {
public:
    explicit CutLocusError(const std::string& what) : std::runtime_error(what) {}
};

// An integrator produced non-finite values; message names the failure time.
class NumericalBlowup : public std::runtime_error {
public:
    explicit NumericalBlowup(const std::string& what) : std::runtime_error(what) {}
};

class PreconditionError : public std::runtime_error {
public:
    explicit PreconditionError(const std::string& what) : std::runtime_error(what) {}
};

class UnsupportedOperation : public std::runtime_error {
public:
    explicit UnsupportedOperation(const std::string& what) : std::runtime_error(what) {}
};

// Config file rejected; message carries line/field diagnostics.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace geomsde
