#pragma once

#include <stdexcept>
#include <string>

namespace rateindep {

// Exit-code taxonomy used by the CLI; library code throws these so callers
// can map failures to distinct process statuses.
enum class ErrorCode : int {
    Ok = 0,
    BadConfig = 2,
    SolverStall = 3,
    SweepNotConverged = 4,
    CertificateFailure = 5,
    NumericFailure = 6,
    DomainMismatch = 7,
};

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const { return code_; }

  private:
    ErrorCode code_;
};

}  // namespace rateindep
