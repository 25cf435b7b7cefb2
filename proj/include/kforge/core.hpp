#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace kforge {

namespace fs = std::filesystem;

// Error hierarchy. Every failure the engine can raise derives from kforge::Error
// so callers can separate engine faults from std library faults.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class LoadError : public Error {
public:
    using Error::Error;
};

/// Malformed input document; `item` names the offending entry (problem id, line, ...).
class ParseError : public Error {
public:
    ParseError(std::string item, const std::string& what)
        : Error(item.empty() ? what : item + ": " + what), item_(std::move(item)) {}
    const std::string& item() const noexcept { return item_; }

private:
    std::string item_;
};

class PreconditionError : public Error {
public:
    using Error::Error;
};

class RenderError : public Error {
public:
    explicit RenderError(std::string variable)
        : Error("unresolved template variable '" + variable + "'"), variable_(std::move(variable)) {}
    const std::string& variable() const noexcept { return variable_; }

private:
    std::string variable_;
};

/// Model cannot accept the attachments it was handed (images to a text-only model).
class CapabilityError : public Error {
public:
    using Error::Error;
};

/// Provider could not be reached, or kept failing after all retries.
class TransportError : public Error {
public:
    using Error::Error;
};

/// Evaluation infrastructure fault (shim protocol violation, spawn failure).
class InfrastructureError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    explicit ConfigError(std::vector<std::string> problems);
    const std::vector<std::string>& problems() const noexcept { return problems_; }

private:
    std::vector<std::string> problems_;
};

class NoReferenceError : public Error {
public:
    explicit NoReferenceError(const std::string& problem_id)
        : Error("no reference available for " + problem_id) {}
};

enum class Backend { cuda, metal };

std::string_view to_string(Backend b) noexcept;
std::optional<Backend> parse_backend(std::string_view s) noexcept;
/// Throws ParseError for unknown names.
Backend backend_from_string(std::string_view s);

// Content hashing. All digests are lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);
std::string sha256_file(const fs::path& path);
std::string base64_encode(std::string_view data);

std::string read_file(const fs::path& path);
void write_file(const fs::path& path, std::string_view content);
/// Writes to a sibling temp file then renames, so readers never see partial content.
void write_file_atomic(const fs::path& path, std::string_view content);

/// UTC ISO-8601 timestamp with millisecond precision.
std::string utc_timestamp();

std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

}  // namespace kforge
