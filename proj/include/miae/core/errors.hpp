#pragma once

#include <stdexcept>
#include <string>

namespace miae {

// Base class for everything thrown by this library.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed or unusable input text (PDB, manifests, tables).
struct ParseError : Error {
    explicit ParseError(const std::string& msg, long line = -1)
        : Error(line >= 0 ? msg + " (line " + std::to_string(line) + ")" : msg), line_number(line) {}
    long line_number;
};

// Residue geometry too degenerate to define a frame.
struct DegenerateFrameError : Error {
    explicit DegenerateFrameError(const std::string& msg, long residue = -1)
        : Error(residue >= 0 ? msg + " (residue " + std::to_string(residue) + ")" : msg),
          residue_index(residue) {}
    long residue_index;
};

// A matrix passed as a rotation is not orthonormal with det +1.
struct InvalidTransformError : Error {
    using Error::Error;
};

// Tensor/sequence shape disagreement.
struct ShapeError : Error {
    using Error::Error;
};

// Invalid masking request (ratio >= 1 or empty input).
struct InvalidMaskError : Error {
    using Error::Error;
};

// Input longer than the model's max_length.
struct LengthError : Error {
    using Error::Error;
};

// Argument outside a function's mathematical domain.
struct DomainError : Error {
    using Error::Error;
};

// Malformed CATH code or unknown class label.
struct LabelError : Error {
    explicit LabelError(const std::string& msg, long index = -1)
        : Error(index >= 0 ? msg + " (index " + std::to_string(index) + ")" : msg), input_index(index) {}
    long input_index;
};

// Stratified split cannot be formed (e.g. empty class).
struct SplitError : Error {
    using Error::Error;
};

// Linear probe cannot be fit (e.g. singleton class).
struct ProbeError : Error {
    using Error::Error;
};

// A training step produced a non-finite loss or gradient.
struct StepError : Error {
    explicit StepError(const std::string& msg, std::string sample = {})
        : Error(sample.empty() ? msg : msg + " (sample " + sample + ")"), sample_id(std::move(sample)) {}
    std::string sample_id;
};

// Invalid experiment configuration, detected before any compute.
struct ConfigError : Error {
    using Error::Error;
};

} // namespace miae
