#pragma once

#include <stdexcept>
#include <string>

namespace bayesid {

enum class ErrorKind {
	Infeasible,
	SingularFrequency,
	ZeroSignal,
	StateBlowup,
	NonFiniteObjective,
	InvalidArgument,
	Config,
	Data,
};

inline const char* to_string(ErrorKind kind) noexcept {
	switch (kind) {
	case ErrorKind::Infeasible: return "Infeasible";
	case ErrorKind::SingularFrequency: return "SingularFrequency";
	case ErrorKind::ZeroSignal: return "ZeroSignal";
	case ErrorKind::StateBlowup: return "StateBlowup";
	case ErrorKind::NonFiniteObjective: return "NonFiniteObjective";
	case ErrorKind::InvalidArgument: return "InvalidArgument";
	case ErrorKind::Config: return "Config";
	case ErrorKind::Data: return "Data";
	}
	return "Unknown";
}

/// Every failure raised by the library carries one of the kinds above so
/// callers (the optimizer, the CLI) can map it without string matching.
class Error : public std::runtime_error {
  public:
	Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), m_kind(kind) {}
	ErrorKind kind() const noexcept { return m_kind; }

  private:
	ErrorKind m_kind;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, const std::string& what) {
	if (!cond) fail(ErrorKind::InvalidArgument, what);
}

} // namespace bayesid
