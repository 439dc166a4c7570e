#pragma once

#include <stdexcept>
#include <string>

namespace msma {

// Error taxonomy shared by all modules. Config-level failures (ParseError,
// ValidationError) are distinguished from runtime failures so the CLI can map
// them to distinct exit codes.

struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

struct UnknownFrame : std::runtime_error {
    explicit UnknownFrame(const std::string& id)
        : std::runtime_error("unknown reference frame: " + id) {}
};

struct DisconnectedFrames : std::runtime_error {
    DisconnectedFrames(const std::string& a, const std::string& b)
        : std::runtime_error("frames have no common ancestor: " + a + ", " + b) {}
};

struct TickOutOfRange : std::runtime_error {
    explicit TickOutOfRange(const std::string& what) : std::runtime_error(what) {}
};

struct SingularInnovation : std::runtime_error {
    explicit SingularInnovation(const std::string& what) : std::runtime_error(what) {}
};

struct SingularCovariance : std::runtime_error {
    explicit SingularCovariance(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace msma
