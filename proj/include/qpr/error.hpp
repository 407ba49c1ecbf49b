#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace qpr {

// Every failure raised by the library carries a stable, machine-readable code
// (e.g. "InsufficientSpectrum") next to the human-readable message. The CLI
// prints the code verbatim on standard error.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

class InsufficientSpectrum : public Error {
public:
    InsufficientSpectrum(std::size_t found, std::size_t requested)
        : Error("InsufficientSpectrum",
                "found " + std::to_string(found) + " negative eigenvalues, requested " +
                    std::to_string(requested)),
          found_(found), requested_(requested) {}

    std::size_t found() const noexcept { return found_; }
    std::size_t requested() const noexcept { return requested_; }

private:
    std::size_t found_;
    std::size_t requested_;
};

}  // namespace qpr
