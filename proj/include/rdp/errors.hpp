#ifndef RDP_ERRORS_HPP
#define RDP_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace rdp {

/// Malformed input: bad shapes, invalid probabilities, out-of-range symbols.
struct InputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// An exact enumeration or search would exceed its configured budget.
struct BudgetError : std::length_error {
  using std::length_error::length_error;
};

/// The likelihood encoder found every candidate codeword at zero likelihood.
struct EncodingFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw InputError(what);
}

}  // namespace detail
}  // namespace rdp

#endif  // RDP_ERRORS_HPP
