#pragma once

#include <stdexcept>
#include <string>

namespace gucnet {

// A documented precondition or invariant was violated (shape mismatches,
// out-of-range arguments, stale caches). These are caller bugs, not
// environmental failures, so they carry a message naming the offending values.
class ContractError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Failure while reading or writing one of the artifact's file formats.
// The kind distinguishes the cases callers may want to handle differently.
class IoError : public std::runtime_error {
public:
    enum class Kind {
        OpenFailed,   // could not open for read/write
        BadMagic,     // leading magic bytes are wrong
        BadVersion,   // unsupported format version
        Truncated,    // file ends before the header says it should
        BadValue,     // a stored value violates the format's invariants
    };

    IoError(Kind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

// Invalid experiment configuration: schema violations, unknown keys,
// values outside their documented ranges.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace gucnet
