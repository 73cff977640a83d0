#include "sdpmtd/error.hpp"

namespace sdpmtd {

std::string_view to_string(Errc code) {
    switch (code) {
    case Errc::DuplicateCredential: return "DuplicateCredential";
    case Errc::DuplicateHost: return "DuplicateHost";
    case Errc::UnknownHost: return "UnknownHost";
    case Errc::InvalidDirective: return "InvalidDirective";
    case Errc::PoolExhausted: return "PoolExhausted";
    case Errc::UntrackedFlow: return "UntrackedFlow";
    case Errc::InvalidScenario: return "InvalidScenario";
    case Errc::ParseError: return "ParseError";
    case Errc::ValidationError: return "ValidationError";
    case Errc::IoError: return "IoError";
    }
    return "Unknown";
}

} // namespace sdpmtd
