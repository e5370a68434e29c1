#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace cmc {

using cplx = std::complex<double>;

class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Evaluation requested too close to a lattice point of a pole-bearing function.
class PoleError : public std::runtime_error {
public:
    PoleError(const std::string& what, cplx nearest_lattice_point)
        : std::runtime_error(what), nearest(nearest_lattice_point) {}
    cplx nearest;
};

class AccuracyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class CollisionError : public std::runtime_error {
public:
    CollisionError(const std::string& what, double when = 0.0)
        : std::runtime_error(what), time(when) {}
    double time;
};

class StabilityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class BranchCrossingError : public std::runtime_error {
public:
    BranchCrossingError(const std::string& what, double when = 0.0)
        : std::runtime_error(what), time(when) {}
    double time;
};

class TrackingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SamplingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class UnsupportedCurveError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConsistencyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class GridError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SearchError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace cmc
