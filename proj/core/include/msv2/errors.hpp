#pragma once

#include <stdexcept>
#include <string>

namespace msv2 {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad shapes / mismatched dimensions in numeric ops.
struct ShapeError : Error {
    using Error::Error;
};

// Invalid or inconsistent model configuration.
struct ConfigError : Error {
    using Error::Error;
};

// Audio input problems: unreadable file, wrong format, too short.
struct AudioError : Error {
    using Error::Error;
};

// Weight file: bad magic, version, or unparseable manifest.
struct WeightFormatError : Error {
    using Error::Error;
};

// Weight file: manifest disagrees with the config (names, shapes, count).
struct WeightManifestError : Error {
    using Error::Error;
};

// Weight file: data section shorter than the manifest promises.
struct WeightTruncationError : Error {
    using Error::Error;
};

// Adapter positional table exhausted.
struct PositionOverflowError : Error {
    using Error::Error;
};

// Streaming session misuse (closed session, empty flush, state desync).
struct SessionError : Error {
    using Error::Error;
};

} // namespace msv2
