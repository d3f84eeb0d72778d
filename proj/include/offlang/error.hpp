#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace offlang {

enum class Errc {
    io,
    malformed_row,
    unknown_label,
    duplicate_id,
    out_of_range_confidence,
    invalid_argument,
    empty_corpus,
    insufficient_class_samples,
    provider_unavailable,
    unsupported_pair,
    empty_translation,
    invalid_pivots,
    id_out_of_range,
    config_mismatch,
    shape_mismatch,
    non_finite,
    divergence,
    length_mismatch,
    arity_mismatch,
    all_cells_diverged,
    checkpoint_format,
    config,
};

const char* errc_name(Errc code);

/// Base exception for every failure raised by the library. The code is
/// stable and is what the CLI reports in its structured error output.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

/// Row-level ingestion failure; `line` is 1-based and counts the header.
class RowError : public Error {
public:
    RowError(Errc code, std::size_t line, const std::string& message)
        : Error(code, "line " + std::to_string(line) + ": " + message), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace offlang
