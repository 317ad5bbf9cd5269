#pragma once

#include <stdexcept>
#include <string>

namespace invbo {

enum class ErrorKind { Input, Config, Io, Numerical, Budget, Training, Inversion };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline Error input_error(const std::string& m) { return Error(ErrorKind::Input, m); }
inline Error config_error(const std::string& m) { return Error(ErrorKind::Config, m); }
inline Error io_error(const std::string& m) { return Error(ErrorKind::Io, m); }
inline Error numerical_error(const std::string& m) { return Error(ErrorKind::Numerical, m); }
inline Error budget_error(const std::string& m) { return Error(ErrorKind::Budget, m); }

// Process exit status per error class; 0 is success, 1 is reserved for
// "command ran but did not converge" style outcomes.
inline int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Config:
            return 2;
        case ErrorKind::Io:
            return 3;
        case ErrorKind::Numerical:
        case ErrorKind::Training:
        case ErrorKind::Inversion:
            return 4;
        case ErrorKind::Budget:
            return 5;
        case ErrorKind::Input:
            return 6;
    }
    return 1;
}

}  // namespace invbo
